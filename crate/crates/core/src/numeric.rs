//! Small numerical kernels shared by the radial transforms: Gauss–Legendre rules,
//! cubic splines, the sine integral, and a few reductions.

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Appends the mapped nodes and weights for [a, b] to the given buffers.
    pub fn push_mapped(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(mid + half * x);
            weights.push(w * half);
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Left boundary condition of a [`CubicSpline`]. The right end is always natural.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplineStart {
    Natural,
    Slope(f64),
}

/// Interpolating cubic spline through strictly increasing knots.
///
/// Outside the knot range the first or last cubic piece is continued.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], start: SplineStart) -> Self {
        let n = x.len();
        assert!(n >= 2 && n == y.len());
        let mut m = vec![0.0; n];
        if n > 2 || matches!(start, SplineStart::Slope(_)) {
            // Tridiagonal system for the second derivatives; Thomas algorithm.
            let mut sub = vec![0.0; n];
            let mut diag = vec![1.0; n];
            let mut sup = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            if let SplineStart::Slope(s) = start {
                let h0 = x[1] - x[0];
                diag[0] = 2.0 * h0;
                sup[0] = h0;
                rhs[0] = 6.0 * ((y[1] - y[0]) / h0 - s);
            }
            for i in 1..n - 1 {
                let hl = x[i] - x[i - 1];
                let hr = x[i + 1] - x[i];
                sub[i] = hl;
                diag[i] = 2.0 * (hl + hr);
                sup[i] = hr;
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
            }
            for i in 1..n {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[n - 1] = rhs[n - 1] / diag[n - 1];
            for i in (0..n - 1).rev() {
                m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
            }
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Index of the piece containing `t` (clamped to the end pieces).
    pub fn piece(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn eval_piece(&self, i: usize, t: f64) -> f64 {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = x1 - t;
        let b = t - x0;
        (self.m[i] * a * a * a + self.m[i + 1] * b * b * b) / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_piece(self.piece(t), t)
    }
}

/// Sine integral Si(x) = ∫₀ˣ sin(t)/t dt.
pub fn sine_integral(x: f64) -> f64 {
    let t = x.abs();
    let si = if t == 0.0 {
        0.0
    } else if t <= 4.0 {
        let mut term = t;
        let mut sum = t;
        let t2 = t * t;
        let mut k = 0usize;
        loop {
            k += 1;
            let n = (2 * k + 1) as f64;
            term *= -t2 / ((2 * k) as f64 * n);
            let add = term / n;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() || k > 60 {
                break;
            }
        }
        sum
    } else {
        // Continued fraction for E1(i t), modified Lentz.
        let tiny = 1e-300;
        let mut b = (1.0, t);
        let mut c = (1.0 / tiny, 0.0);
        let mut d = cdiv((1.0, 0.0), b);
        let mut h = d;
        for i in 2..200 {
            let a = -((i - 1) as f64).powi(2);
            b.0 += 2.0;
            d = cdiv((1.0, 0.0), (a * d.0 + b.0, a * d.1 + b.1));
            c = cadd(b, cdiv((a, 0.0), c));
            let del = cmul(c, d);
            h = cmul(h, del);
            if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 {
                break;
            }
        }
        let h = cmul((t.cos(), -t.sin()), h);
        FRAC_PI_2 + h.1
    };
    if x < 0.0 {
        -si
    } else {
        si
    }
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let den = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / den, (a.1 * b.0 - a.0 * b.1) / den)
}

/// Composite trapezoid rule on a sampled function.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Ordinary least-squares line fit. Returns (slope, intercept, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Geometric grid of `n` points from `a` to `b` inclusive.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let ratio = (b / a).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a * (ratio * i as f64).exp()
            }
        })
        .collect()
}

/// Uniform grid of `n` points from `a` to `b` inclusive.
pub fn linear_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}
