//! Closed-form phase of a closed light-pulse interferometer with
//! instantaneous pulses in a linear gravitational potential.
//!
//! Δφ = ω_C Δτ + ΔS_gk/ħ + ΔS_p/ħ, where
//!
//! * Δτ = ħ²/(2m²c²) Σ_{n} Σ_{ℓ≤n} [k_n⁽¹⁾k_ℓ⁽¹⁾ − k_n⁽²⁾k_ℓ⁽²⁾](t_n − t_ℓ) never
//!   reads gravity or initial conditions,
//! * ΔS_gk/ħ = Σ_ℓ Δk_ℓ z_g(t_ℓ) samples free fall at the pulse times,
//! * ΔS_p/ħ = Σ_ℓ (φ_ℓ⁽¹⁾ − φ_ℓ⁽²⁾).

use crate::constants::{PhysicalConstants, HBAR, SPEED_OF_LIGHT};
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::geometry::require_closed;
use crate::kinematics::free_fall;
use crate::physics::{GravityEnv, InitialConditions, PhaseBreakdown, PulseSequence, Rule, Species};
use crate::sum::compensated_sum;

fn check_structure(seq: &PulseSequence) -> Result<()> {
    let violations: Vec<_> = crate::physics::validate_sequence(seq)
        .into_iter()
        .filter(|v| v.rule != Rule::TooFewPulses)
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSequence(violations))
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveMass(mass))
    }
}

/// Σ_{n} Σ_{ℓ≤n} [k_n⁽¹⁾k_ℓ⁽¹⁾ − k_n⁽²⁾k_ℓ⁽²⁾](t_n − t_ℓ) in s/m².
/// Diagonal terms are included; they vanish identically.
pub fn recoil_double_sum(seq: &PulseSequence) -> f64 {
    recoil_double_sum_dd(seq).to_f64()
}

/// Same sum in double-double, with exact k products and time differences
/// taken from the full pulse times.
pub(crate) fn recoil_double_sum_dd(seq: &PulseSequence) -> DoubleDouble {
    let pulses = seq.pulses();
    let mut acc = DoubleDouble::ZERO;
    for (n, pn) in pulses.iter().enumerate() {
        for pl in &pulses[..n] {
            let weight = DoubleDouble::product(pn.k_upper, pl.k_upper) - DoubleDouble::product(pn.k_lower, pl.k_lower);
            acc = acc + weight * (pn.time() - pl.time());
        }
    }
    acc
}

/// Proper-time difference Δτ = τ⁽¹⁾ − τ⁽²⁾ (s) of a closed sequence.
pub fn proper_time_difference(seq: &PulseSequence, species: &Species) -> Result<f64> {
    proper_time_difference_with(seq, species.mass, &PhysicalConstants::CODATA_2018)
}

#[doc(hidden)]
pub fn proper_time_difference_with(seq: &PulseSequence, mass: f64, constants: &PhysicalConstants) -> Result<f64> {
    check_mass(mass)?;
    check_structure(seq)?;
    require_closed(seq)?;
    let velocity_ratio = constants.hbar / (mass * constants.c);
    Ok(0.5 * velocity_ratio * velocity_ratio * recoil_double_sum(seq))
}

/// ω_j Δτ_j = ħ/(2m_j) · double sum, evaluated without forming ω_j and Δτ_j
/// separately.
pub(crate) fn recoil_phase_for_mass(double_sum: f64, mass: f64) -> f64 {
    HBAR / (2.0 * mass) * double_sum
}

pub(crate) fn delta_tau_for_mass(double_sum: f64, mass: f64) -> f64 {
    let velocity_ratio = HBAR / (mass * SPEED_OF_LIGHT);
    0.5 * velocity_ratio * velocity_ratio * double_sum
}

/// Gravito-recoil action ΔS_gk/ħ = Σ_ℓ Δk_ℓ z_g(t_ℓ) (rad). Mass-independent.
pub fn gravito_recoil_phase(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<f64> {
    check_mass(species.mass)?;
    gravito_recoil(seq, env, ics)
}

pub(crate) fn gravito_recoil(seq: &PulseSequence, env: &GravityEnv, ics: &InitialConditions) -> Result<f64> {
    env.require_linear()?;
    check_structure(seq)?;
    Ok(compensated_sum(
        seq.pulses().iter().map(|p| p.delta_k() * free_fall(env.g, ics, p.t).0),
    ))
}

/// Laser-phase action ΔS_p/ħ = Σ_ℓ (φ_ℓ⁽¹⁾ − φ_ℓ⁽²⁾) (rad).
pub fn laser_phase(seq: &PulseSequence) -> f64 {
    compensated_sum(seq.pulses().iter().map(|p| p.phi_upper - p.phi_lower))
}

/// Full decomposition Δφ = ω_C Δτ + ΔS_gk/ħ + ΔS_p/ħ.
pub fn total_phase(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<PhaseBreakdown> {
    breakdown_for_mass(seq, species.mass, env, ics)
}

pub(crate) fn breakdown_for_mass(
    seq: &PulseSequence,
    mass: f64,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<PhaseBreakdown> {
    check_mass(mass)?;
    check_structure(seq)?;
    require_closed(seq)?;
    let gk = gravito_recoil(seq, env, ics)?;
    let sum = recoil_double_sum(seq);
    Ok(PhaseBreakdown::from_parts(
        delta_tau_for_mass(sum, mass),
        recoil_phase_for_mass(sum, mass),
        gk,
        laser_phase(seq),
    ))
}
