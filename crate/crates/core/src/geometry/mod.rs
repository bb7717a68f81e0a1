//! Named interferometer geometries, phase-space closure, and the geometry
//! text format.
//!
//! Builder conventions: the first pulse is at t = 0, branch 1 takes the first
//! nonzero kick, all laser phases are zero and the sequence ends at the last
//! pulse.

pub mod format;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::physics::{Pulse, PulseSequence, Species};
use crate::sum::compensated_sum;

pub use format::{parse_geometry, serialize_geometry, ParseError, ParseErrorKind};

/// Relative tolerance for the closure moments.
pub const CLOSURE_RTOL: f64 = 1e-12;

fn check_k(k: f64) -> Result<()> {
    if !k.is_finite() || k == 0.0 {
        return Err(Error::InvalidInput(format!("wave number must be finite and nonzero, got {k:e}")));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("T must be positive and finite, got {t:e}")));
    }
    Ok(())
}

fn check_tp(tp: f64) -> Result<()> {
    if !(tp.is_finite() && tp >= 0.0) {
        return Err(Error::InvalidInput(format!("T' must be non-negative and finite, got {tp:e}")));
    }
    Ok(())
}

/// Four pulses at (0, T, T+T′, 2T+T′). With T′ = 0 the two central pulses
/// coincide and are merged into one pulse carrying both kicks.
fn four_pulse(t: f64, tp: f64, upper: [f64; 4], lower: [f64; 4]) -> Result<PulseSequence> {
    // Exact times, so that t₃ − t₂ = T and Δτ does not pick up the rounding of T′.
    let t = DoubleDouble::from_f64(t);
    let times = [DoubleDouble::ZERO, t, t + tp, t * 2.0 + tp];
    let pulses = if tp == 0.0 {
        vec![
            Pulse::kick_at(times[0], upper[0], lower[0]),
            Pulse::kick_at(times[1], upper[1] + upper[2], lower[1] + lower[2]),
            Pulse::kick_at(times[3], upper[3], lower[3]),
        ]
    } else {
        (0..4).map(|i| Pulse::kick_at(times[i], upper[i], lower[i])).collect()
    };
    PulseSequence::from_pulses(pulses)
}

/// Mach–Zehnder: pulses at (0, T, 2T), branch 1 kicks (+k, −k, 0), branch 2
/// kicks (0, +k, −k).
pub fn build_mzi(k: f64, t: f64) -> Result<PulseSequence> {
    check_k(k)?;
    check_t(t)?;
    PulseSequence::from_pulses(vec![
        Pulse::kick(0.0, k, 0.0),
        Pulse::kick(t, -k, k),
        Pulse::kick(2.0 * t, 0.0, -k),
    ])
}

/// Symmetric Ramsey–Bordé: branch 1 kicks (+k, −k, 0, 0), branch 2 kicks
/// (0, 0, +k, −k).
pub fn build_rbi_symmetric(k: f64, t: f64, tp: f64) -> Result<PulseSequence> {
    check_k(k)?;
    check_t(t)?;
    check_tp(tp)?;
    four_pulse(t, tp, [k, -k, 0.0, 0.0], [0.0, 0.0, k, -k])
}

/// Asymmetric Ramsey–Bordé: branch 1 kicks (+k, −k, −k, +k), branch 2 is
/// never kicked. Δτ = −(ħk/mc)²T regardless of T′.
pub fn build_rbi_asymmetric(k: f64, t: f64, tp: f64) -> Result<PulseSequence> {
    check_k(k)?;
    check_t(t)?;
    check_tp(tp)?;
    four_pulse(t, tp, [k, -k, -k, k], [0.0; 4])
}

/// Asymmetric double-loop Ramsey–Bordé: pulses at (0, T, 3T, 4T), branch 1
/// kicks (+k, −2k, +2k, −k), branch 2 never kicked. The first three moments
/// of Δk vanish, so the gravito-recoil action is zero for any linear gravity.
pub fn build_rbi_double_loop(k: f64, t: f64) -> Result<PulseSequence> {
    check_k(k)?;
    check_t(t)?;
    PulseSequence::from_pulses(vec![
        Pulse::kick(0.0, k, 0.0),
        Pulse::kick(t, -2.0 * k, 0.0),
        Pulse::kick_at(DoubleDouble::product(3.0, t), 2.0 * k, 0.0),
        Pulse::kick(4.0 * t, -k, 0.0),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Mzi,
    RbiSym,
    RbiAsym,
    RbiDouble,
}

impl GeometryKind {
    pub const ALL: [GeometryKind; 4] = [
        GeometryKind::Mzi,
        GeometryKind::RbiSym,
        GeometryKind::RbiAsym,
        GeometryKind::RbiDouble,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeometryKind::Mzi => "mzi",
            GeometryKind::RbiSym => "rbi-sym",
            GeometryKind::RbiAsym => "rbi-asym",
            GeometryKind::RbiDouble => "rbi-double",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeometryKind::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown geometry `{s}`")))
    }
}

/// A builder geometry with its parameters; the unit of parameter sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    /// 1/m
    pub k: f64,
    /// s
    pub t: f64,
    /// s, ignored by MZI and double loop
    pub t_prime: f64,
}

impl GeometrySpec {
    pub fn new(kind: GeometryKind, k: f64, t: f64, t_prime: f64) -> Self {
        Self { kind, k, t, t_prime }
    }

    pub fn build(&self) -> Result<PulseSequence> {
        let seq = match self.kind {
            GeometryKind::Mzi => build_mzi(self.k, self.t)?,
            GeometryKind::RbiSym => build_rbi_symmetric(self.k, self.t, self.t_prime)?,
            GeometryKind::RbiAsym => build_rbi_asymmetric(self.k, self.t, self.t_prime)?,
            GeometryKind::RbiDouble => build_rbi_double_loop(self.k, self.t)?,
        };
        Ok(seq.named(self.kind.as_str()))
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }

    pub fn with_k(self, k: f64) -> Self {
        Self { k, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    /// z⁽¹⁾ − z⁽²⁾ at t_end (m).
    pub delta_z_final: f64,
    /// ż⁽¹⁾ − ż⁽²⁾ after the last pulse (m/s).
    pub delta_v_final: f64,
    /// Σ Δk_ℓ (1/m).
    pub moment0: f64,
    /// Σ t_ℓ Δk_ℓ (s/m).
    pub moment1: f64,
    /// Σ t_ℓ² Δk_ℓ (s²/m).
    pub moment2: f64,
    pub closed: bool,
}

/// Moments Σ t^p Δk_ℓ for p = 0, 1, 2.
pub fn moments(seq: &PulseSequence) -> [f64; 3] {
    let p = seq.pulses();
    [
        compensated_sum(p.iter().map(|p| p.delta_k())),
        compensated_sum(p.iter().map(|p| p.t * p.delta_k())),
        compensated_sum(p.iter().map(|p| p.t * p.t * p.delta_k())),
    ]
}

/// (tol₀, tol₁): 1e-12 · max|k_ℓ| and 1e-12 · max|t_ℓ k_ℓ| over both branches.
pub fn closure_tolerances(seq: &PulseSequence) -> (f64, f64) {
    let max_k = seq.max_abs_k();
    let max_tk = seq
        .pulses()
        .iter()
        .flat_map(|p| [(p.t * p.k_upper).abs(), (p.t * p.k_lower).abs()])
        .fold(0.0, f64::max);
    (CLOSURE_RTOL * max_k, CLOSURE_RTOL * max_tk)
}

/// Phase-space closure. `closed` depends only on the moments, never on mass.
pub fn closure_check(seq: &PulseSequence, species: &Species) -> ClosureReport {
    let [m0, m1, m2] = moments(seq);
    let (tol0, tol1) = closure_tolerances(seq);
    let recoil = species.hbar_over_mass();
    ClosureReport {
        delta_z_final: recoil * (seq.duration() * m0 - m1),
        delta_v_final: recoil * m0,
        moment0: m0,
        moment1: m1,
        moment2: m2,
        closed: m0.abs() <= tol0 && m1.abs() <= tol1,
    }
}

/// Fails with [`Error::OpenSequence`] unless the sequence is closed.
pub fn require_closed(seq: &PulseSequence) -> Result<()> {
    let [m0, m1, _] = moments(seq);
    let (tol0, tol1) = closure_tolerances(seq);
    if m0.abs() <= tol0 && m1.abs() <= tol1 {
        Ok(())
    } else {
        Err(Error::OpenSequence {
            moment0: m0,
            moment1: m1,
        })
    }
}
