// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Ideal Penning-trap single-particle modes, one-component plasma coupling
//! and static frequency shifts from magnetic-field gradients.
//!
//! Frequencies are angular (rad/s) unless a name ends in `_hz`.

use serde::{Deserialize, Serialize};

use crate::constants::{
    BOLTZMANN, CRYSTALLIZATION_GAMMA, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Static trap parameters.
///
/// The electrode geometry only enters through `z0² + r0²/2`, so the trap can
/// be described either by the electrode distances or by that factor alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig<T> {
    /// Particle charge, C.
    pub charge: T,
    /// Particle mass, kg.
    pub mass: T,
    /// Axial magnetic field, T.
    pub field: T,
    /// Ring to end-cap voltage, V.
    pub voltage: T,
    /// `z0² + r0²/2`, m².
    pub geometry_factor: T,
}

impl<T: Real> TrapConfig<T> {
    /// Builds a configuration from the ring radius `r0` and end-cap distance
    /// `z0` (both in metres).
    pub fn from_electrodes(charge: T, mass: T, field: T, voltage: T, r0: T, z0: T) -> Result<Self> {
        let geometry_factor = z0 * z0 + r0 * r0 / T::lit(2.0);
        Self::with_geometry_factor(charge, mass, field, voltage, geometry_factor)
    }

    pub fn with_geometry_factor(
        charge: T,
        mass: T,
        field: T,
        voltage: T,
        geometry_factor: T,
    ) -> Result<Self> {
        let cfg = TrapConfig {
            charge,
            mass,
            field,
            voltage,
            geometry_factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the field-level invariants (polarity is checked separately by
    /// [`axial_frequency`]).
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.charge,
            self.mass,
            self.field,
            self.voltage,
            self.geometry_factor,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("trap", "all trap parameters must be finite"));
        }
        if self.charge == T::zero() {
            return Err(Error::invalid("charge", "must be non-zero"));
        }
        if self.mass <= T::zero() {
            return Err(Error::invalid("mass", "must be positive"));
        }
        if self.field <= T::zero() {
            return Err(Error::invalid("field", "must be positive"));
        }
        if self.geometry_factor <= T::zero() {
            return Err(Error::invalid("geometry_factor", "z0^2 + r0^2/2 must be positive"));
        }
        Ok(())
    }

    /// Cyclotron frequency `qB0/m`. Signed charges give the magnitude.
    pub fn cyclotron_frequency(&self) -> T {
        (self.charge * self.field / self.mass).abs()
    }

    /// Geometry factor that places the axial mode at `omega_z` for this
    /// charge, mass and voltage.
    pub fn geometry_for_axial(charge: T, mass: T, voltage: T, omega_z: T) -> T {
        T::lit(2.0) * charge * voltage / (mass * omega_z * omega_z)
    }
}

/// Single-particle mode frequencies, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFrequencies<T> {
    pub cyclotron: T,
    pub axial: T,
    pub modified_cyclotron: T,
    pub magnetron: T,
    /// `sqrt(wc² - 2wz²)`.
    pub omega_1: T,
}

impl<T: Real> ModeFrequencies<T> {
    /// Mode frequencies from the cyclotron and axial frequencies directly.
    pub fn from_frequencies(cyclotron: T, axial: T) -> Result<Self> {
        let wc2 = cyclotron * cyclotron;
        let two_wz2 = T::lit(2.0) * axial * axial;
        if !(wc2 > two_wz2) {
            return Err(Error::Unstable {
                wc2: wc2.as_f64(),
                two_wz2: two_wz2.as_f64(),
            });
        }
        let omega_1 = (wc2 - two_wz2).sqrt();
        let half = T::lit(0.5);
        let modified_cyclotron = half * (cyclotron + omega_1);
        // ω₋ = ωz²/(2ω₊) avoids cancellation in (ωc - ω1)/2 for weak traps.
        let magnetron = if modified_cyclotron > T::zero() {
            axial * axial / (T::lit(2.0) * modified_cyclotron)
        } else {
            T::zero()
        };
        Ok(ModeFrequencies {
            cyclotron,
            axial,
            modified_cyclotron,
            magnetron,
            omega_1,
        })
    }

    /// Frequencies converted to Hz, in field order.
    pub fn in_hz(&self) -> [T; 5] {
        let tau = T::TAU();
        [
            self.cyclotron / tau,
            self.axial / tau,
            self.modified_cyclotron / tau,
            self.magnetron / tau,
            self.omega_1 / tau,
        ]
    }
}

/// Axial frequency `sqrt(2qU0 / (m (z0² + r0²/2)))`.
pub fn axial_frequency<T: Real>(cfg: &TrapConfig<T>) -> Result<T> {
    let product = cfg.charge * cfg.voltage;
    if !(product > T::zero()) {
        return Err(Error::NonConfining {
            product: product.as_f64(),
        });
    }
    Ok((T::lit(2.0) * product / (cfg.mass * cfg.geometry_factor)).sqrt())
}

/// Radial mode frequencies for the given axial frequency.
pub fn radial_frequencies<T: Real>(cfg: &TrapConfig<T>, omega_z: T) -> Result<ModeFrequencies<T>> {
    ModeFrequencies::from_frequencies(cfg.cyclotron_frequency(), omega_z)
}

/// All mode frequencies of a configuration.
pub fn mode_frequencies<T: Real>(cfg: &TrapConfig<T>) -> Result<ModeFrequencies<T>> {
    let omega_z = axial_frequency(cfg)?;
    radial_frequencies(cfg, omega_z)
}

/// True iff the plasma rotation frequency lies in the confining window
/// `[ω₋, ω₊]`.
pub fn rotation_frequency_valid<T: Real>(omega_r: T, modes: &ModeFrequencies<T>) -> bool {
    modes.magnetron <= omega_r && omega_r <= modes.modified_cyclotron
}

/// Plasma density (m⁻³) and temperature (K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaState<T> {
    pub density: T,
    pub temperature: T,
}

impl<T: Real> PlasmaState<T> {
    pub fn new(density: T, temperature: T) -> Result<Self> {
        if !(density > T::zero()) || !density.is_finite() {
            return Err(Error::invalid("density", "must be positive and finite"));
        }
        if !(temperature > T::zero()) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        Ok(PlasmaState {
            density,
            temperature,
        })
    }
}

/// Coulomb coupling constant and the crystallization verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling<T> {
    pub gamma: T,
    pub crystallized: bool,
}

/// Coulomb energy at the Wigner-Seitz radius, J.
fn wigner_seitz_energy<T: Real>(density: T) -> T {
    let e = T::lit(ELEMENTARY_CHARGE);
    let four_pi = T::lit(4.0) * T::PI();
    let radius = (T::lit(3.0) / (four_pi * density)).cbrt();
    e * e / (four_pi * T::lit(VACUUM_PERMITTIVITY) * radius)
}

/// Coupling constant with the default crystallization threshold.
pub fn coupling_constant<T: Real>(plasma: &PlasmaState<T>) -> Coupling<T> {
    coupling_constant_with_threshold(plasma, T::lit(CRYSTALLIZATION_GAMMA))
}

/// `Γ = e² / (4πε₀ a k_B T)` with `a = (3/4πn)^{1/3}`. The temperature excludes
/// rotational energy.
pub fn coupling_constant_with_threshold<T: Real>(plasma: &PlasmaState<T>, threshold: T) -> Coupling<T> {
    let thermal = T::lit(BOLTZMANN) * plasma.temperature;
    let gamma = wigner_seitz_energy(plasma.density) / thermal;
    Coupling {
        gamma,
        crystallized: gamma > threshold,
    }
}

/// Temperature at which the plasma reaches coupling `gamma`.
pub fn temperature_for_coupling<T: Real>(density: T, gamma: T) -> T {
    wigner_seitz_energy(density) / (T::lit(BOLTZMANN) * gamma)
}

/// Qubit-frequency gradients across the ion array.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldGradientModel<T> {
    /// Axial gradient, Hz/mm.
    #[serde(default)]
    pub axial: T,
    /// Transverse linear gradient, Hz/mm.
    #[serde(default)]
    pub transverse: T,
    /// Quadratic radial coefficient, Hz/mm².
    #[serde(default)]
    pub radial_quadratic: T,
}

impl<T: Real> FieldGradientModel<T> {
    pub fn validate(&self) -> Result<()> {
        if [self.axial, self.transverse, self.radial_quadratic]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::invalid("gradients", "must be finite"))
        }
    }
}

/// Static qubit-frequency shift (Hz) at axial offset `z_mm` and radius `r_mm`.
///
/// The transverse linear term is the unaveraged worst case; array rotation
/// averages it away in practice.
pub fn inhomogeneity_shift<T: Real>(model: &FieldGradientModel<T>, z_mm: T, r_mm: T) -> T {
    model.axial * z_mm + model.transverse * r_mm + model.radial_quadratic * r_mm * r_mm
}

/// Fractional field change `δB/B` corresponding to a qubit shift `shift_hz`,
/// given the qubit's field sensitivity (Hz/T) and the field (T).
pub fn fractional_field_shift<T: Real>(shift_hz: T, sensitivity_hz_per_t: T, field: T) -> T {
    shift_hz / (sensitivity_hz_per_t * field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::BE9_ION_MASS;
    use std::f64::consts::TAU;

    fn be9(voltage: f64, geometry: f64) -> TrapConfig<f64> {
        TrapConfig::with_geometry_factor(ELEMENTARY_CHARGE, BE9_ION_MASS, 4.46, voltage, geometry).unwrap()
    }

    #[test]
    fn axial_matches_operating_point() {
        let wz = TAU * 799e3;
        let g = TrapConfig::geometry_for_axial(ELEMENTARY_CHARGE, BE9_ION_MASS, 1000.0, wz);
        let cfg = be9(1000.0, g);
        let got = axial_frequency(&cfg).unwrap();
        assert!((got / wz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrupling_voltage_doubles_axial() {
        let a = axial_frequency(&be9(250.0, 1e-4)).unwrap();
        let b = axial_frequency(&be9(1000.0, 1e-4)).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_polarity_is_non_confining() {
        let cfg = be9(-10.0, 1e-4);
        assert!(matches!(axial_frequency(&cfg), Err(Error::NonConfining { .. })));
        let cfg = be9(0.0, 1e-4);
        assert!(matches!(axial_frequency(&cfg), Err(Error::NonConfining { .. })));
    }

    #[test]
    fn cyclotron_at_reference_field() {
        let cfg = be9(1000.0, 1e-3);
        let fc = cfg.cyclotron_frequency() / TAU;
        assert!((fc / 7.61e6 - 1.0).abs() < 2e-3, "fc = {fc}");
    }

    #[test]
    fn magnetron_at_operating_point() {
        let m = ModeFrequencies::from_frequencies(TAU * 7.61e6, TAU * 799e3).unwrap();
        let fm = m.magnetron / TAU;
        assert!((fm / 42.2e3 - 1.0).abs() < 5e-3, "f- = {fm}");
    }

    #[test]
    fn free_cyclotron_limit() {
        let m = ModeFrequencies::from_frequencies(10.0, 0.0).unwrap();
        assert_eq!(m.modified_cyclotron, 10.0);
        assert_eq!(m.magnetron, 0.0);
    }

    #[test]
    fn stability_boundary_converges_to_half_cyclotron() {
        let wc = 1.0e7_f64;
        let wz = (wc * wc / (2.0 * (1.0 + 1e-12))).sqrt();
        let m = ModeFrequencies::from_frequencies(wc, wz).unwrap();
        // ω1 ≈ wc·sqrt(1e-12) = 1e-6 wc
        assert!((m.modified_cyclotron / (wc / 2.0) - 1.0).abs() < 2e-6);
        assert!((m.magnetron / (wc / 2.0) - 1.0).abs() < 2e-6);
        let exact = ModeFrequencies::from_frequencies(wc, (wc * wc / 2.0).sqrt() * (1.0 + 1e-15));
        assert!(matches!(exact, Err(Error::Unstable { .. })));
    }

    #[test]
    fn unstable_trap_is_rejected() {
        assert!(matches!(
            ModeFrequencies::from_frequencies(1.0, 1.0),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn rotation_window() {
        let m = ModeFrequencies::from_frequencies(TAU * 7.61e6, TAU * 799e3).unwrap();
        assert!(rotation_frequency_valid(m.magnetron, &m));
        assert!(!rotation_frequency_valid(1.01 * m.modified_cyclotron, &m));
        assert!(rotation_frequency_valid(m.cyclotron / 2.0, &m));
    }

    #[test]
    fn gamma_at_reference_plasma() {
        let p = PlasmaState::<f64>::new(4e14, 1e-3).unwrap();
        let c = coupling_constant(&p);
        assert!((c.gamma / 2000.0 - 1.0).abs() < 0.05, "gamma = {}", c.gamma);
        assert!(c.crystallized);
    }

    #[test]
    fn hot_plasma_is_liquid() {
        let p = PlasmaState::new(4e14, 1e9).unwrap();
        let c = coupling_constant(&p);
        assert!(c.gamma < 1e-6);
        assert!(!c.crystallized);
    }

    #[test]
    fn crystallization_temperature_inverts_gamma() {
        let n = 4e14;
        let g1 = coupling_constant(&PlasmaState::new(n, 1e-3).unwrap()).gamma;
        // Independent route: bisection on Γ(T) = 170.
        let (mut lo, mut hi) = (1e-6_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let g = coupling_constant(&PlasmaState::new(n, mid).unwrap()).gamma;
            if g > 170.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let closed = temperature_for_coupling(n, 170.0);
        assert!((lo / closed - 1.0).abs() < 1e-10);
        assert!((closed / (g1 / 170.0 * 1e-3) - 1.0).abs() < 1e-12);
        assert!((closed * 1e3 - 11.7).abs() < 0.6, "T = {closed}");
    }

    #[test]
    fn plasma_validation() {
        assert!(PlasmaState::new(0.0, 1.0).is_err());
        assert!(PlasmaState::new(1.0, -1.0).is_err());
    }

    #[test]
    fn gradient_shifts() {
        let quad = FieldGradientModel {
            radial_quadratic: 3.7e3,
            ..Default::default()
        };
        let s: f64 = inhomogeneity_shift(&quad, 0.0, 0.3);
        assert!((s - 333.0).abs() < 1e-9);
        let axial = FieldGradientModel {
            axial: 9.5e3_f64,
            ..Default::default()
        };
        assert!((inhomogeneity_shift(&axial, 0.015, 0.0) - 142.5).abs() < 1e-9);
        assert_eq!(inhomogeneity_shift(&FieldGradientModel::default(), 1.0, 1.0), 0.0);
        let frac = fractional_field_shift(333.0, 28.0e9, 4.46);
        assert!(frac > 2e-9 && frac < 3.5e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let m = ModeFrequencies::<f32>::from_frequencies(7.61e6, 0.799e6).unwrap();
        assert!((m.magnetron / 42.2e3 - 1.0).abs() < 5e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mode_identities(wc in 1e3f64..1e9, ratio in 0.0f64..0.999) {
                let wz = ratio * wc / 2f64.sqrt();
                let m = ModeFrequencies::from_frequencies(wc, wz).unwrap();
                prop_assert!(((m.modified_cyclotron + m.magnetron) / wc - 1.0).abs() < 1e-12);
                if wz > 0.0 {
                    let prod = m.modified_cyclotron * m.magnetron / (wz * wz / 2.0);
                    prop_assert!((prod - 1.0).abs() < 1e-12);
                }
            }

            #[test]
            fn instability_iff_boundary_violated(wc in 1.0f64..1e6, wz in 0.0f64..1e6) {
                let r = ModeFrequencies::from_frequencies(wc, wz);
                prop_assert_eq!(r.is_err(), wc * wc <= 2.0 * wz * wz);
            }

            #[test]
            fn gamma_monotone(n in 1e10f64..1e18, t in 1e-5f64..1e2, k in 1.01f64..10.0) {
                let g = |n: f64, t: f64| coupling_constant(&PlasmaState::new(n, t).unwrap()).gamma;
                prop_assert!(g(n, t * k) < g(n, t));
                prop_assert!(g(n * k, t) > g(n, t));
            }

            #[test]
            fn shift_linear_in_each_gradient(
                a in -1e4f64..1e4, b in -1e4f64..1e4, c in -1e4f64..1e4,
                z in -1.0f64..1.0, r in 0.0f64..1.0, k in -5.0f64..5.0,
            ) {
                let m = FieldGradientModel { axial: a, transverse: b, radial_quadratic: c };
                let base = inhomogeneity_shift(&m, z, r);
                let parts = [
                    FieldGradientModel { axial: a, ..Default::default() },
                    FieldGradientModel { transverse: b, ..Default::default() },
                    FieldGradientModel { radial_quadratic: c, ..Default::default() },
                ];
                let sum: f64 = parts.iter().map(|p| inhomogeneity_shift(p, z, r)).sum();
                prop_assert!((sum - base).abs() <= 1e-9 * (1.0 + base.abs()));
                let scaled = FieldGradientModel { axial: k * a, ..m };
                let expect = base + (k - 1.0) * a * z;
                prop_assert!((inhomogeneity_shift(&scaled, z, r) - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }
    }
}
