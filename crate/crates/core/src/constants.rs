// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants (CODATA 2018 exact or recommended values) and the
//! operating-point numbers of the reference ⁹Be⁺ apparatus.

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;

/// Atomic mass of ⁹Be in u.
pub const BE9_ATOMIC_MASS_U: f64 = 9.012_183_1;
/// Mass of the singly ionized ⁹Be⁺ ion, kg.
pub const BE9_ION_MASS: f64 = BE9_ATOMIC_MASS_U * ATOMIC_MASS_UNIT - ELECTRON_MASS;

/// Coupling constant above which a one-component plasma is expected to
/// crystallize.
pub const CRYSTALLIZATION_GAMMA: f64 = 170.0;

/// Electron spin-flip qubit sensitivity to field changes near 4.5 T, Hz/T
/// (28 MHz/mT).
pub const QUBIT_FIELD_SENSITIVITY: f64 = 28.0e9;

/// Nominal qubit splitting of the electron spin-flip transition, Hz.
pub const QUBIT_SPLITTING: f64 = 124.0e9;

/// Approximate ground-state nuclear spin-flip transition frequencies near
/// 4.5 T, Hz. Labels only; no level-structure physics is modeled.
pub mod nuclear {
    pub const F1: f64 = 340.0e6;
    pub const F2: f64 = 288.0e6;
    pub const F3: f64 = 286.0e6;
    /// Measured reference for the F2 Ramsey offset.
    pub const F2_REFERENCE: f64 = 288_172_932.220;
}
