//! Physical constants and conversions between atomic units and laboratory units.
//!
//! Everything inside the crate runs in atomic units (ħ = m_e = |e| = 1, lengths in
//! Bohr radii, energies in hartree). Conversions happen only at the I/O boundary.
//! Values are CODATA 2018 unless noted otherwise.

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Atomic unit of time in seconds (ħ / E_h).
pub const AU_TIME_S: f64 = 2.418_884_326_585_7e-17;
/// Bohr radius in metres.
pub const BOHR_M: f64 = 5.291_772_109_03e-11;
/// Speed of light in atomic units (1/α).
pub const C_AU: f64 = 137.035_999_084;
/// Speed of light in m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;
/// ħc in MeV·fm.
pub const HBAR_C_MEV_FM: f64 = 197.326_980_4;

/// Electron rest energy in MeV.
pub const ELECTRON_MASS_MEV: f64 = 0.510_998_950_00;
/// Muon rest energy in MeV (PDG 2022).
pub const MUON_MASS_MEV: f64 = 105.658_375_5;
/// Muon mean lifetime in seconds (PDG 2022).
pub const MUON_LIFETIME_S: f64 = 2.196_981_1e-6;
/// Neutron rest energy in MeV.
pub const NEUTRON_MASS_MEV: f64 = 939.565_420_52;
/// Free neutron mean lifetime in seconds (PDG 2022).
pub const NEUTRON_LIFETIME_S: f64 = 878.4;
/// Nucleon mass used for nuclear-scale estimates, MeV (average of p and n).
pub const NUCLEON_MASS_MEV: f64 = 938.918_754;
/// Atomic mass unit in MeV.
pub const AMU_MEV: f64 = 931.494_102_42;
/// Nuclear radius parameter r₀ in R(A) = r₀·A^{1/3}, fm.
pub const NUCLEAR_R0_FM: f64 = 1.2;

/// Hydrogen atom rest energy in MeV (proton + electron − 13.6 eV).
pub const HYDROGEN_ATOM_MASS_MEV: f64 = 938.783_073;
/// Representative excitation energy of a heavy nucleus, MeV. Order of magnitude only.
pub const NUCLEAR_EXCITATION_MEV: f64 = 1.0;

/// Hydrogen 1s→2p gap, 3/8 hartree (10.2 eV).
pub const HYDROGEN_GAP_HARTREE: f64 = 0.375;

pub fn hartree_to_ev(e: f64) -> f64 {
    e * HARTREE_EV
}

pub fn ev_to_hartree(e: f64) -> f64 {
    e / HARTREE_EV
}

pub fn au_time_to_seconds(t: f64) -> f64 {
    t * AU_TIME_S
}

pub fn seconds_to_au_time(t: f64) -> f64 {
    t / AU_TIME_S
}

/// Converts a speed given as a fraction of c into atomic units.
pub fn beta_to_au_speed(beta: f64) -> f64 {
    beta * C_AU
}

pub fn au_speed_to_beta(v: f64) -> f64 {
    v / C_AU
}

/// Converts a rest energy in MeV into a mass in electron masses.
pub fn mev_to_electron_masses(mass_mev: f64) -> f64 {
    mass_mev / ELECTRON_MASS_MEV
}

/// Nuclear radius R(A) = 1.2·A^{1/3} fm.
pub fn nuclear_radius_fm(mass_number: f64) -> f64 {
    NUCLEAR_R0_FM * mass_number.cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hydrogen_gap_is_ten_ev() {
        let ev = hartree_to_ev(HYDROGEN_GAP_HARTREE);
        assert!((ev - 10.204).abs() < 1e-3);
    }

    #[test]
    fn conversions_invert() {
        assert!((ev_to_hartree(hartree_to_ev(0.3)) - 0.3).abs() < 1e-15);
        assert!((seconds_to_au_time(au_time_to_seconds(5.0)) - 5.0).abs() < 1e-12);
        assert!((au_speed_to_beta(beta_to_au_speed(1e-3)) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn lead_radius() {
        assert!((nuclear_radius_fm(208.0) - 7.109_990_564).abs() < 1e-8);
    }
}
