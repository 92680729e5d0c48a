use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "event_id,regime,b_au,theta,phi,dp_au,dpx,dpy,dpz,survived";
const FIELDS: [&str; 10] = [
    "event_id", "regime", "b_au", "theta", "phi", "dp_au", "dpx", "dpy", "dpz", "survived",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Born,
    Impulsive,
    Semiclassical,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Born => "born",
            Regime::Impulsive => "impulsive",
            Regime::Semiclassical => "semiclassical",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "born" => Ok(Regime::Born),
            "impulsive" => Ok(Regime::Impulsive),
            "semiclassical" => Ok(Regime::Semiclassical),
            other => Err(Error::InvalidInput(format!("unknown regime {other:?}"))),
        }
    }
}

/// One simulated event. Fields that do not apply to a regime are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringEvent {
    pub event_id: u64,
    pub regime: Regime,
    pub impact_parameter: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    /// |Δp|.
    pub transfer: f64,
    pub dp: Option<[f64; 3]>,
    pub survived: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Jsonl,
}

impl FromStr for EventFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "jsonl" => Ok(EventFormat::Jsonl),
            other => Err(Error::InvalidInput(format!("unknown format {other:?}"))),
        }
    }
}

fn num(x: Option<f64>) -> Option<String> {
    x.map(|v| format!("{v:.16e}"))
}

impl ScatteringEvent {
    fn columns(&self) -> [Option<String>; 10] {
        let d = self.dp;
        [
            Some(self.event_id.to_string()),
            Some(self.regime.as_str().to_string()),
            num(self.impact_parameter),
            num(self.theta),
            num(self.phi),
            num(Some(self.transfer)),
            num(d.map(|v| v[0])),
            num(d.map(|v| v[1])),
            num(d.map(|v| v[2])),
            self.survived.map(|s| s.to_string()),
        ]
    }

    pub fn csv_row(&self) -> String {
        self.columns()
            .into_iter()
            .map(|c| c.unwrap_or_default())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// JSON object with the CSV field names; absent fields are `null`.
    pub fn json_line(&self) -> String {
        let mut s = String::from("{");
        for (i, (name, col)) in FIELDS.iter().zip(self.columns()).enumerate() {
            if i > 0 {
                s.push(',');
            }
            let value = match (i, col) {
                (_, None) => "null".to_string(),
                (1, Some(v)) => format!("\"{v}\""),
                (_, Some(v)) => v,
            };
            let _ = write!(s, "\"{name}\":{value}");
        }
        s.push('}');
        s
    }

    fn from_fields(fields: [Option<&str>; 10], line: usize) -> Result<Self> {
        let bad = |message: String| Error::Parse { line, message };
        let float = |v: Option<&str>| -> Result<Option<f64>> {
            v.map(|t| t.parse::<f64>().map_err(|e| bad(e.to_string())))
                .transpose()
        };
        let event_id = fields[0]
            .ok_or_else(|| bad("missing event_id".into()))?
            .parse::<u64>()
            .map_err(|e| bad(e.to_string()))?;
        let regime = fields[1]
            .ok_or_else(|| bad("missing regime".into()))?
            .parse::<Regime>()
            .map_err(|e| bad(e.to_string()))?;
        let transfer = float(fields[5])?.ok_or_else(|| bad("missing dp_au".into()))?;
        let dp = match (float(fields[6])?, float(fields[7])?, float(fields[8])?) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            (None, None, None) => None,
            _ => return Err(bad("partial momentum vector".into())),
        };
        let survived = fields[9]
            .map(|t| t.parse::<bool>().map_err(|e| bad(e.to_string())))
            .transpose()?;
        Ok(Self {
            event_id,
            regime,
            impact_parameter: float(fields[2])?,
            theta: float(fields[3])?,
            phi: float(fields[4])?,
            transfer,
            dp,
            survived,
        })
    }
}

pub fn write_events<W: Write>(
    events: &[ScatteringEvent],
    format: EventFormat,
    mut w: W,
) -> Result<()> {
    if format == EventFormat::Csv {
        writeln!(w, "{CSV_HEADER}")?;
    }
    for e in events {
        match format {
            EventFormat::Csv => writeln!(w, "{}", e.csv_row())?,
            EventFormat::Jsonl => writeln!(w, "{}", e.json_line())?,
        }
    }
    Ok(())
}

/// Reads events in either format; the format is detected from the first line.
pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<ScatteringEvent>> {
    let mut events = Vec::new();
    let mut csv = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let is_csv = *csv.get_or_insert_with(|| !line.starts_with('{'));
        if is_csv {
            if line == CSV_HEADER {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != FIELDS.len() {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("expected {} fields", FIELDS.len()),
                });
            }
            let fields: [Option<&str>; 10] =
                std::array::from_fn(|i| Some(parts[i]).filter(|s| !s.is_empty()));
            events.push(ScatteringEvent::from_fields(fields, n + 1)?);
        } else {
            let value: serde_json::Value =
                serde_json::from_str(line).map_err(|e| Error::Parse {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            let text: Vec<Option<String>> = FIELDS
                .iter()
                .map(|f| match &value[*f] {
                    serde_json::Value::Null => None,
                    serde_json::Value::String(s) => Some(s.clone()),
                    other => Some(other.to_string()),
                })
                .collect();
            let fields: [Option<&str>; 10] = std::array::from_fn(|i| text[i].as_deref());
            events.push(ScatteringEvent::from_fields(fields, n + 1)?);
        }
    }
    Ok(events)
}
