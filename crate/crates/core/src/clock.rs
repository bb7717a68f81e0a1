//! Interference of a two-state quantum clock.
//!
//! Each internal state j ∈ {a, b} runs its own interferometer with mass m_j,
//! giving P_j = (1 + cos Δφ_j)/2 with Δφ_j = ω_j Δτ_j + (ΔS_gk + ΔS_p)/ħ. The
//! actions are state-independent. Without postselection the detector sees
//! P = (P_a + P_b)/2, which beats:
//!
//! P = ½[1 + cos(ηΩΔτ/2) · cos(ηω_CΔτ + (ΔS_gk + ΔS_p)/ħ)],
//!
//! with Δτ and ω_C at the mean mass and η = 1/[1 − (Δm/2m)²].
//!
//! Recoil phases are formed in double-double precision: ω_j Δτ_j reaches
//! 1e11 rad for meter-scale fountains, far past where f64 cosines mean
//! anything.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{require_closed, GeometrySpec};
use crate::phase::{breakdown_for_mass, delta_tau_for_mass, gravito_recoil, laser_phase, recoil_double_sum, recoil_double_sum_dd};
use crate::physics::{ClockPair, ClockState, GravityEnv, InitialConditions, PhaseBreakdown, PulseSequence, Species};

/// Absolute agreement required between the two beat representations.
pub const BEAT_IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatSignal {
    /// Excited-state exit probability.
    pub p_a: f64,
    /// Ground-state exit probability.
    pub p_b: f64,
    /// (p_a + p_b)/2 from the per-state phases.
    pub p_combined: f64,
    /// The same probability from the beat closed form.
    pub p_closed_form: f64,
    /// cos(ηΩΔτ/2), signed.
    pub envelope: f64,
    /// ηω_CΔτ + (ΔS_gk + ΔS_p)/ħ (rad).
    pub carrier_phase: f64,
    pub eta: f64,
    /// Δτ at the mean mass (s).
    pub delta_tau: f64,
    /// Δφ_a (rad).
    pub phase_a: f64,
    /// Δφ_b (rad).
    pub phase_b: f64,
}

/// Exact beat arguments next to their η → 1 approximations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockLimit {
    /// (Δφ_b − Δφ_a)/2 = ηΩΔτ/2 (rad).
    pub envelope_arg: f64,
    /// ΩΔτ/2 (rad).
    pub envelope_arg_eta1: f64,
    /// (Δφ_a + Δφ_b)/2 = ηω_CΔτ + (ΔS_gk + ΔS_p)/ħ (rad).
    pub carrier: f64,
    /// ω_CΔτ + (ΔS_gk + ΔS_p)/ħ (rad).
    pub carrier_eta1: f64,
    pub eta: f64,
}

impl ClockLimit {
    /// |exact − approx| / |approx| for the envelope argument, equal to η − 1.
    pub fn envelope_deviation(&self) -> f64 {
        ((self.envelope_arg - self.envelope_arg_eta1) / self.envelope_arg_eta1).abs()
    }
}

/// State-independent inputs shared by both beat representations.
struct BeatInputs {
    /// ħ/2 · double sum (kg m²/s · s/m² … i.e. ω_j Δτ_j = this / m_j).
    recoil_numerator: DoubleDouble,
    double_sum: f64,
    /// (ΔS_gk + ΔS_p)/ħ.
    actions: f64,
}

impl BeatInputs {
    fn new(seq: &PulseSequence, env: &GravityEnv, ics: &InitialConditions) -> Result<Self> {
        require_closed(seq)?;
        let double_sum = recoil_double_sum_dd(seq);
        let actions = gravito_recoil(seq, env, ics)? + laser_phase(seq);
        Ok(Self {
            recoil_numerator: double_sum * (0.5 * HBAR),
            double_sum: double_sum.to_f64(),
            actions,
        })
    }

    fn state_mass(clock: &ClockPair, state: ClockState) -> DoubleDouble {
        let half = 0.5 * clock.delta_mass();
        match state {
            ClockState::A => DoubleDouble::from_f64(clock.mean_mass) + half,
            ClockState::B => DoubleDouble::from_f64(clock.mean_mass) + (-half),
        }
    }

    /// ω_j Δτ_j.
    fn recoil(&self, mass: DoubleDouble) -> DoubleDouble {
        self.recoil_numerator / mass
    }

    fn phase(&self, mass: DoubleDouble) -> DoubleDouble {
        self.recoil(mass) + self.actions
    }

    fn eta(clock: &ClockPair) -> DoubleDouble {
        let q = DoubleDouble::from_f64(0.5 * clock.delta_mass()) / clock.mean_mass;
        (DoubleDouble::from_f64(1.0) - q * q).recip()
    }
}

pub fn fringe_probability(phase: f64) -> f64 {
    0.5 * (1.0 + phase.cos())
}

/// Phase breakdown for one internal state: Δτ and ω_j use m_j, the actions
/// are the same for both states.
pub fn per_state_phase(
    seq: &PulseSequence,
    clock: &ClockPair,
    state: ClockState,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<PhaseBreakdown> {
    breakdown_for_mass(seq, clock.mass(state), env, ics)
}

/// Postselected exit probability (1 + cos Δφ)/2 for a single species.
pub fn fringe(seq: &PulseSequence, species: &Species, env: &GravityEnv, ics: &InitialConditions) -> Result<f64> {
    if !(species.mass.is_finite() && species.mass > 0.0) {
        return Err(Error::NonPositiveMass(species.mass));
    }
    let inputs = BeatInputs::new(seq, env, ics)?;
    Ok(0.5 * (1.0 + inputs.phase(DoubleDouble::from_f64(species.mass)).cos()))
}

/// Postselected exit probability for one state of a clock pair.
pub fn fringe_state(
    seq: &PulseSequence,
    clock: &ClockPair,
    state: ClockState,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<f64> {
    let inputs = BeatInputs::new(seq, env, ics)?;
    Ok(0.5 * (1.0 + inputs.phase(BeatInputs::state_mass(clock, state)).cos()))
}

/// Beat signal from both routes; fails with [`Error::Consistency`] if they
/// disagree by more than [`BEAT_IDENTITY_TOL`].
pub fn beat(seq: &PulseSequence, clock: &ClockPair, env: &GravityEnv, ics: &InitialConditions) -> Result<BeatSignal> {
    let inputs = BeatInputs::new(seq, env, ics)?;

    let phase_a = inputs.phase(BeatInputs::state_mass(clock, ClockState::A));
    let phase_b = inputs.phase(BeatInputs::state_mass(clock, ClockState::B));
    let p_a = 0.5 * (1.0 + phase_a.cos());
    let p_b = 0.5 * (1.0 + phase_b.cos());
    let p_combined = 0.5 * (p_a + p_b);

    let eta = clock.eta();
    let delta_tau = delta_tau_for_mass(inputs.double_sum, clock.mean_mass);
    // ΩΔτ/2 = (Δm/2m) ω_CΔτ, formed in double-double like the carrier.
    let eta_dd = BeatInputs::eta(clock);
    let x = inputs.recoil(DoubleDouble::from_f64(clock.mean_mass));
    let q = DoubleDouble::from_f64(0.5 * clock.delta_mass()) / clock.mean_mass;
    let envelope = (eta_dd * q * x).cos();
    let carrier = eta_dd * x + inputs.actions;
    let p_closed_form = 0.5 * (1.0 + envelope * carrier.cos());

    if !((p_combined - p_closed_form).abs() <= BEAT_IDENTITY_TOL) {
        return Err(Error::Consistency(format!(
            "beat representations disagree: (P_a+P_b)/2 = {p_combined:.17e}, closed form = {p_closed_form:.17e}"
        )));
    }

    Ok(BeatSignal {
        p_a,
        p_b,
        p_combined,
        p_closed_form,
        envelope,
        carrier_phase: carrier.to_f64(),
        eta,
        delta_tau,
        phase_a: phase_a.to_f64(),
        phase_b: phase_b.to_f64(),
    })
}

/// Beat arguments and their first-order (η = 1) clock-Hamiltonian forms.
pub fn clock_limit_phase(
    seq: &PulseSequence,
    clock: &ClockPair,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<ClockLimit> {
    let inputs = BeatInputs::new(seq, env, ics)?;
    let xa = inputs.recoil(BeatInputs::state_mass(clock, ClockState::A));
    let xb = inputs.recoil(BeatInputs::state_mass(clock, ClockState::B));
    let x = inputs.recoil(DoubleDouble::from_f64(clock.mean_mass));
    let delta_tau = delta_tau_for_mass(inputs.double_sum, clock.mean_mass);
    Ok(ClockLimit {
        envelope_arg: ((xb - xa) * 0.5).to_f64(),
        envelope_arg_eta1: 0.5 * clock.splitting_omega * delta_tau,
        carrier: ((xa + xb) * 0.5 + inputs.actions).to_f64(),
        carrier_eta1: (x + inputs.actions).to_f64(),
        eta: clock.eta(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    /// s
    pub t: f64,
    pub envelope: f64,
}

/// Envelope of a builder family at each T. T = 0 is the no-kick limit with
/// envelope 1.
pub fn visibility_scan(
    family: &GeometrySpec,
    ts: &[f64],
    clock: &ClockPair,
    env: &GravityEnv,
    exec: Execution,
) -> Result<Vec<VisibilityPoint>> {
    let ics = InitialConditions::at_rest();
    exec.map(ts, |&t| {
        let envelope = if t == 0.0 {
            1.0
        } else {
            beat(&family.with_t(t).build()?, clock, env, &ics)?.envelope
        };
        Ok(VisibilityPoint { t, envelope })
    })
    .into_iter()
    .collect()
}

/// Envelope cos(ηΩΔτ/2) for one member of a builder family.
fn family_envelope(family: &GeometrySpec, t: f64, clock: &ClockPair) -> Result<f64> {
    let seq = family.with_t(t).build()?;
    let dt = delta_tau_for_mass(recoil_double_sum(&seq), clock.mean_mass);
    require_closed(&seq)?;
    Ok((0.5 * clock.eta() * clock.splitting_omega * dt).cos())
}

/// Locates by bisection the T in [t_lo, t_hi] where the envelope first
/// vanishes (ηΩ|Δτ| = π). The bracket must straddle exactly one node.
pub fn visibility_node(family: &GeometrySpec, clock: &ClockPair, t_lo: f64, t_hi: f64, rel_tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (t_lo, t_hi);
    let f_lo = family_envelope(family, lo, clock)?;
    let f_hi = family_envelope(family, hi, clock)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Numeric(format!(
            "envelope does not change sign on [{t_lo:e}, {t_hi:e}] s ({f_lo:e}, {f_hi:e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = family_envelope(family, mid, clock)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * mid.abs() {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
