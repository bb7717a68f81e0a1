//! Exact piecewise-polynomial branch trajectories.
//!
//! The motion on each branch splits into z = z_g + z_k: the common free fall
//! z_g(t) = z0 + v0 t − g t²/2 carries all initial conditions, and the kick
//! part z_k starts at rest at the origin and is piecewise linear, its velocity
//! jumping by ħk_ℓ/m at each pulse.
//!
//! Sampling convention: a kick at t_ℓ acts just after t_ℓ, so sampling at a
//! pulse time returns the velocity from before that pulse. Positions are
//! continuous and unaffected by the convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{Branch, GravityEnv, InitialConditions, PulseSequence, Species};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    /// z_k at `t_start` (m).
    pub z_start: f64,
    /// ż_k on the open interval (m/s).
    pub velocity: f64,
}

impl Segment {
    pub fn position_at(&self, t: f64) -> f64 {
        self.z_start + self.velocity * (t - self.t_start)
    }
}

/// Kick part z_k⁽ᵅ⁾ of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrajectory {
    pub branch: Branch,
    /// kg
    pub mass: f64,
    /// Segment `n` runs from pulse `n − 1` to pulse `n`; the first starts at
    /// min(0, t₁) and the last ends at t_end.
    pub segments: Vec<Segment>,
    pulse_times: Vec<f64>,
}

impl BranchTrajectory {
    fn segment_index(&self, t: f64) -> usize {
        // Number of pulses strictly before t.
        self.pulse_times.partition_point(|&tp| tp < t)
    }

    /// (z_k, ż_k) at time t under the kick-after-pulse convention. Times
    /// outside the segments extrapolate the first or last segment.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let seg = &self.segments[self.segment_index(t)];
        (seg.position_at(t), seg.velocity)
    }

    pub fn position_at(&self, t: f64) -> f64 {
        self.state_at(t).0
    }

    /// Velocity once every kick has acted.
    pub fn final_velocity(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.velocity)
    }

    /// Position at the end of the last segment.
    pub fn final_position(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.position_at(s.t_end))
    }
}

/// Builds z_k for one branch; the velocity on segment n is Σ_{ℓ≤n} ħk_ℓ/m.
pub fn kick_trajectory(seq: &PulseSequence, branch: Branch, species: &Species) -> Result<BranchTrajectory> {
    if !(species.mass.is_finite() && species.mass > 0.0) {
        return Err(Error::NonPositiveMass(species.mass));
    }
    if let Some(v) = crate::physics::validate_sequence(seq)
        .into_iter()
        .find(|v| v.rule != crate::physics::Rule::TooFewPulses)
    {
        return Err(Error::InvalidSequence(vec![v]));
    }
    let recoil = species.hbar_over_mass();
    let pulses = seq.pulses();
    let t0 = pulses.first().map_or(0.0, |p| p.t.min(0.0));

    let mut segments = Vec::with_capacity(pulses.len() + 1);
    let mut start = t0;
    let mut z = 0.0;
    let mut v = 0.0;
    for p in pulses {
        segments.push(Segment {
            t_start: start,
            t_end: p.t,
            z_start: z,
            velocity: v,
        });
        z += v * (p.t - start);
        v += recoil * p.k(branch);
        start = p.t;
    }
    segments.push(Segment {
        t_start: start,
        t_end: seq.duration().max(start),
        z_start: z,
        velocity: v,
    });

    Ok(BranchTrajectory {
        branch,
        mass: species.mass,
        segments,
        pulse_times: pulses.iter().map(|p| p.t).collect(),
    })
}

/// Free fall (z_g, ż_g) at time t.
pub fn gravity_trajectory(env: &GravityEnv, ics: &InitialConditions, t: f64) -> Result<(f64, f64)> {
    env.require_linear()?;
    Ok(free_fall(env.g, ics, t))
}

#[inline]
pub(crate) fn free_fall(g: f64, ics: &InitialConditions, t: f64) -> (f64, f64) {
    (ics.z0 + ics.v0 * t - 0.5 * g * t * t, ics.v0 - g * t)
}

/// Full branch state z = z_g + z_k at 0 ≤ t ≤ t_end.
pub fn sample(
    seq: &PulseSequence,
    branch: Branch,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    t: f64,
) -> Result<(f64, f64)> {
    if !(t >= 0.0 && t <= seq.duration()) {
        return Err(Error::TimeOutOfRange {
            t,
            t_end: seq.duration(),
        });
    }
    let (zg, vg) = gravity_trajectory(env, ics, t)?;
    let (zk, vk) = kick_trajectory(seq, branch, species)?.state_at(t);
    Ok((zg + zk, vg + vk))
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub z1: f64,
    pub v1: f64,
    pub z2: f64,
    pub v2: f64,
    pub zg: f64,
}

/// Samples both branches at t = 0, dt, 2dt, … and always at t_end.
pub fn trajectory_table(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    dt: f64,
) -> Result<Vec<TrajectoryRow>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("sampling step must be positive, got {dt:e}")));
    }
    env.require_linear()?;
    let upper = kick_trajectory(seq, Branch::Upper, species)?;
    let lower = kick_trajectory(seq, Branch::Lower, species)?;
    let t_end = seq.duration();
    let n = (t_end / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).filter(|&t| t <= t_end).collect();
    if times.last().is_none_or(|&t| t < t_end) {
        times.push(t_end);
    }
    Ok(times
        .into_iter()
        .map(|t| {
            let (zg, vg) = free_fall(env.g, ics, t);
            let (z1, v1) = upper.state_at(t);
            let (z2, v2) = lower.state_at(t);
            TrajectoryRow {
                t,
                z1: zg + z1,
                v1: vg + v1,
                z2: zg + z2,
                v2: vg + v2,
                zg,
            }
        })
        .collect())
}
