//! Core data types shared by every module: species, clock pairs, pulse
//! sequences, gravity and initial conditions, and the phase breakdown.
//!
//! All quantities are SI. Phases are in radians and actions are always
//! reported divided by ħ. Branch 1 is the "upper" branch, the one that takes
//! the first nonzero kick in the builders.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    /// Rest mass (kg).
    pub mass: f64,
    pub label: String,
}

impl Species {
    pub fn new(mass: f64) -> Result<Self> {
        Self::labeled(mass, "")
    }

    pub fn labeled(mass: f64, label: impl Into<String>) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::NonPositiveMass(mass));
        }
        Ok(Self {
            mass,
            label: label.into(),
        })
    }

    pub fn sr87() -> Self {
        Self {
            mass: crate::constants::SR87_MASS,
            label: "Sr-87".into(),
        }
    }

    pub fn compton_frequency(&self) -> f64 {
        compton_frequency_with(self.mass, &PhysicalConstants::CODATA_2018)
    }

    /// ħ/m (m²/s).
    pub(crate) fn hbar_over_mass(&self) -> f64 {
        crate::constants::HBAR / self.mass
    }
}

/// Compton frequency ω_C = mc²/ħ (rad/s).
pub fn compton_frequency(species: &Species) -> Result<f64> {
    if !(species.mass.is_finite() && species.mass > 0.0) {
        return Err(Error::NonPositiveMass(species.mass));
    }
    Ok(species.compton_frequency())
}

#[doc(hidden)]
pub fn compton_frequency_with(mass: f64, constants: &PhysicalConstants) -> f64 {
    mass * constants.c * constants.c / constants.hbar
}

/// Internal state of a two-level clock: `A` is excited, `B` is ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockState {
    A,
    B,
}

/// Two internal states with masses m ± Δm/2, where Δm = ħΩ/c².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockPair {
    /// Mean mass m (kg).
    pub mean_mass: f64,
    /// Energy splitting Ω (rad/s).
    pub splitting_omega: f64,
}

impl ClockPair {
    pub fn new(mean_mass: f64, splitting_omega: f64) -> Result<Self> {
        if !(mean_mass.is_finite() && mean_mass > 0.0) {
            return Err(Error::NonPositiveMass(mean_mass));
        }
        if !(splitting_omega.is_finite() && splitting_omega >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "clock splitting must be finite and non-negative, got {splitting_omega:e}"
            )));
        }
        let pair = Self {
            mean_mass,
            splitting_omega,
        };
        if pair.delta_mass() >= 2.0 * mean_mass {
            return Err(Error::InvalidInput(format!(
                "mass splitting {:e} kg must be below twice the mean mass",
                pair.delta_mass()
            )));
        }
        Ok(pair)
    }

    /// Builds the pair from a relative splitting Δm/m.
    pub fn from_mass_ratio(mean_mass: f64, ratio: f64) -> Result<Self> {
        let c = crate::constants::SPEED_OF_LIGHT;
        Self::new(mean_mass, ratio * mean_mass * c * c / crate::constants::HBAR)
    }

    /// A degenerate pair (Δm = 0) for running clock operations on one species.
    pub fn degenerate(mass: f64) -> Result<Self> {
        Self::new(mass, 0.0)
    }

    pub fn delta_mass(&self) -> f64 {
        let c = crate::constants::SPEED_OF_LIGHT;
        crate::constants::HBAR * self.splitting_omega / (c * c)
    }

    pub fn mass_a(&self) -> f64 {
        self.mean_mass + 0.5 * self.delta_mass()
    }

    pub fn mass_b(&self) -> f64 {
        self.mean_mass - 0.5 * self.delta_mass()
    }

    pub fn mass(&self, state: ClockState) -> f64 {
        match state {
            ClockState::A => self.mass_a(),
            ClockState::B => self.mass_b(),
        }
    }

    /// η = 1/[1 − (Δm/2m)²].
    pub fn eta(&self) -> f64 {
        let x = self.delta_mass() / (2.0 * self.mean_mass);
        1.0 / (1.0 - x * x)
    }

    pub fn mean_species(&self) -> Species {
        Species {
            mass: self.mean_mass,
            label: "mean".into(),
        }
    }

    pub fn species(&self, state: ClockState) -> Species {
        Species {
            mass: self.mass(state),
            label: match state {
                ClockState::A => "a".into(),
                ClockState::B => "b".into(),
            },
        }
    }
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// A single light pulse: time plus per-branch wave-number transfer and laser phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// s
    pub t: f64,
    /// Low part of the time when `t` is a rounded sum such as 2T+T′; the
    /// exact time is `t + t_lo`. Zero for pulses read from files.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub t_lo: f64,
    /// Wave number transferred to branch 1 (1/m).
    pub k_upper: f64,
    /// Wave number transferred to branch 2 (1/m).
    pub k_lower: f64,
    /// rad
    pub phi_upper: f64,
    /// rad
    pub phi_lower: f64,
}

impl Pulse {
    pub fn kick(t: f64, k_upper: f64, k_lower: f64) -> Self {
        Self::kick_at(DoubleDouble::from_f64(t), k_upper, k_lower)
    }

    /// Kick at a time carried to double-double precision.
    pub fn kick_at(t: DoubleDouble, k_upper: f64, k_lower: f64) -> Self {
        Self {
            t: t.hi,
            t_lo: t.lo,
            k_upper,
            k_lower,
            phi_upper: 0.0,
            phi_lower: 0.0,
        }
    }

    pub fn with_phases(mut self, phi_upper: f64, phi_lower: f64) -> Self {
        self.phi_upper = phi_upper;
        self.phi_lower = phi_lower;
        self
    }

    pub fn time(&self) -> DoubleDouble {
        DoubleDouble {
            hi: self.t,
            lo: self.t_lo,
        }
    }

    pub fn k(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.k_upper,
            Branch::Lower => self.k_lower,
        }
    }

    /// Δk = k⁽¹⁾ − k⁽²⁾.
    pub fn delta_k(&self) -> f64 {
        self.k_upper - self.k_lower
    }

    pub fn swapped(&self) -> Self {
        Self {
            t: self.t,
            t_lo: self.t_lo,
            k_upper: self.k_lower,
            k_lower: self.k_upper,
            phi_upper: self.phi_lower,
            phi_lower: self.phi_upper,
        }
    }

    fn fields(&self) -> [(&'static str, f64); 5] {
        [
            ("t", self.t),
            ("k_upper", self.k_upper),
            ("k_lower", self.k_lower),
            ("phi_upper", self.phi_upper),
            ("phi_lower", self.phi_lower),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Branch 1.
    Upper,
    /// Branch 2.
    Lower,
}

impl Branch {
    pub fn number(self) -> u8 {
        match self {
            Branch::Upper => 1,
            Branch::Lower => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Branch::Upper),
            2 => Some(Branch::Lower),
            _ => None,
        }
    }
}

/// Ordered light pulses plus the total duration t_end.
///
/// [`PulseSequence::new`] enforces the structural rules (finite fields,
/// strictly increasing times, `t_end` not before the last pulse). The
/// minimum-pulse-count rule is only reported by [`validate_sequence`], so
/// empty and single-pulse sequences can still be built and serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    duration: f64,
    name: Option<String>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>, duration: f64) -> Result<Self> {
        let seq = Self::from_raw(pulses, duration);
        let structural: Vec<_> = validate_sequence(&seq)
            .into_iter()
            .filter(|v| v.rule != Rule::TooFewPulses)
            .collect();
        if structural.is_empty() {
            Ok(seq)
        } else {
            Err(Error::InvalidSequence(structural))
        }
    }

    /// Sequence ending at the last pulse.
    pub fn from_pulses(pulses: Vec<Pulse>) -> Result<Self> {
        let duration = pulses.last().map_or(0.0, |p| p.t);
        Self::new(pulses, duration)
    }

    /// Skips every check; use [`validate_sequence`] to inspect the result.
    pub fn from_raw(pulses: Vec<Pulse>, duration: f64) -> Self {
        Self {
            pulses,
            duration,
            name: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// Exchanges the two branches on every pulse.
    pub fn swapped(&self) -> Self {
        Self {
            pulses: self.pulses.iter().map(Pulse::swapped).collect(),
            duration: self.duration,
            name: self.name.clone(),
        }
    }

    /// Drops the last pulse, keeping the duration.
    pub fn truncated(&self) -> Self {
        let mut pulses = self.pulses.clone();
        pulses.pop();
        Self {
            pulses,
            duration: self.duration,
            name: self.name.clone(),
        }
    }

    /// Returns an error unless every rule holds.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_sequence(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSequence(violations))
        }
    }

    /// Smallest gap between consecutive pulses, `None` with fewer than two.
    pub fn min_spacing(&self) -> Option<f64> {
        self.pulses
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .min_by(f64::total_cmp)
    }

    pub fn max_abs_k(&self) -> f64 {
        self.pulses
            .iter()
            .flat_map(|p| [p.k_upper.abs(), p.k_lower.abs()])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NonFiniteField,
    NonMonotoneTimes,
    NonFiniteDuration,
    DurationBeforeLastPulse,
    TooFewPulses,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NonFiniteField => "non-finite field",
            Rule::NonMonotoneTimes => "non-monotone times",
            Rule::NonFiniteDuration => "non-finite duration",
            Rule::DurationBeforeLastPulse => "duration before last pulse",
            Rule::TooFewPulses => "too few pulses",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    /// Offending pulse, if the rule is tied to one.
    pub index: Option<usize>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "pulse {i}: {}", self.rule)?,
            None => write!(f, "{}", self.rule)?,
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Checks every sequence invariant and reports all violations, sorted by
/// pulse index then rule. Never fails.
pub fn validate_sequence(seq: &PulseSequence) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, p) in seq.pulses.iter().enumerate() {
        for (field, value) in p.fields() {
            if !value.is_finite() {
                out.push(Violation {
                    index: Some(i),
                    rule: Rule::NonFiniteField,
                    detail: format!("{field} = {value}"),
                });
            }
        }
    }
    for (i, w) in seq.pulses.windows(2).enumerate() {
        let (a, b) = (w[0].t, w[1].t);
        if a.is_finite() && b.is_finite() && b <= a {
            out.push(Violation {
                index: Some(i + 1),
                rule: Rule::NonMonotoneTimes,
                detail: format!("t = {b:e} s follows t = {a:e} s"),
            });
        }
    }
    if !seq.duration.is_finite() {
        out.push(Violation {
            index: None,
            rule: Rule::NonFiniteDuration,
            detail: format!("t_end = {}", seq.duration),
        });
    } else if let Some(last) = seq.pulses.last() {
        if last.t.is_finite() && seq.duration < last.t {
            out.push(Violation {
                index: None,
                rule: Rule::DurationBeforeLastPulse,
                detail: format!("t_end = {:e} s < {:e} s", seq.duration, last.t),
            });
        }
    }
    if seq.pulses.len() < 2 {
        out.push(Violation {
            index: None,
            rule: Rule::TooFewPulses,
            detail: format!("{} pulse(s), need at least 2", seq.pulses.len()),
        });
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityEnv {
    /// Magnitude of the uniform acceleration, acting in −z (m/s²).
    pub g: f64,
    /// Gravity gradient Γ (1/s²). Closed-form operations require zero.
    pub gradient: f64,
}

impl GravityEnv {
    pub fn uniform(g: f64) -> Self {
        Self { g, gradient: 0.0 }
    }

    pub fn earth() -> Self {
        Self::uniform(9.81)
    }

    pub fn none() -> Self {
        Self::uniform(0.0)
    }

    pub(crate) fn require_linear(&self) -> Result<()> {
        if self.gradient != 0.0 {
            return Err(Error::NonzeroGradient(self.gradient));
        }
        if !self.g.is_finite() {
            return Err(Error::InvalidInput(format!("g must be finite, got {}", self.g)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    /// z(0) (m).
    pub z0: f64,
    /// ż(0) (m/s).
    pub v0: f64,
}

impl InitialConditions {
    pub fn new(z0: f64, v0: f64) -> Result<Self> {
        if !(z0.is_finite() && v0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "initial conditions must be finite, got z0 = {z0}, v0 = {v0}"
            )));
        }
        Ok(Self { z0, v0 })
    }

    pub fn at_rest() -> Self {
        Self::default()
    }
}

/// Phase decomposition for a single internal state.
///
/// `total_phase` = `recoil_phase` + `gravito_recoil` + `laser_phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBreakdown {
    /// Proper-time difference Δτ between branch 1 and branch 2 (s).
    pub delta_tau: f64,
    /// ω_C Δτ (rad).
    pub recoil_phase: f64,
    /// ΔS_gk/ħ (rad).
    pub gravito_recoil: f64,
    /// ΔS_p/ħ (rad).
    pub laser_phase: f64,
    /// Δφ (rad).
    pub total_phase: f64,
}

impl PhaseBreakdown {
    pub fn from_parts(delta_tau: f64, recoil_phase: f64, gravito_recoil: f64, laser_phase: f64) -> Self {
        Self {
            delta_tau,
            recoil_phase,
            gravito_recoil,
            laser_phase,
            total_phase: recoil_phase + gravito_recoil + laser_phase,
        }
    }

    /// Gravito-recoil plus laser-phase action: the state-independent part.
    pub fn state_independent(&self) -> f64 {
        self.gravito_recoil + self.laser_phase
    }
}
