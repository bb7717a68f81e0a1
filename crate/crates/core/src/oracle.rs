//! Finite-pulse numerical oracle.
//!
//! Replaces each delta kick by a window of width σ centred on the pulse time
//! and carrying the same impulse ħk/m, integrates z̈ = −g − Γz + a_pulse(t)
//! for both branches with fixed-step RK4, then evaluates the proper-time
//! integral
//!
//! Δτ = ∫ dt {[(ż⁽²⁾)² − (ż⁽¹⁾)²]/2 + U(z⁽¹⁾) − U(z⁽²⁾)}/c², U = gz + Γz²/2
//!
//! and the light-pulse action ΔS_em/ħ = ∫ dt [k⁽¹⁾(t) z⁽¹⁾ − k⁽²⁾(t) z⁽²⁾] +
//! Σ(φ⁽¹⁾ − φ⁽²⁾) by composite Simpson quadrature. None of this shares code
//! with the closed-form path; only c and ħ are common.
//!
//! Step edges are aligned to the window edges, so for the top-hat shape the
//! acceleration is constant on every step and RK4 and Simpson are exact up
//! to rounding. What remains is the physical O(σ) finite-width effect.

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::require_closed;
use crate::phase::{proper_time_difference, total_phase};
use crate::physics::{Branch, GravityEnv, InitialConditions, PulseSequence, Species};
use crate::sum::CompensatedSum;

pub const MIN_STEPS_PER_SEGMENT: usize = 100;

/// Reproducibility of the oracle Δτ under changes of g, z0 and v0 on a closed
/// sequence, as a fraction of [`recoil_tau_scale`].
pub const QUADRATURE_RTOL: f64 = 1e-9;

/// Allowed relative deviation of the integrated impulse from ħk/m.
pub const IMPULSE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    #[default]
    TopHat,
    /// (1 + cos(2πs/σ))/σ on |s| ≤ σ/2.
    RaisedCosine,
}

impl PulseShape {
    /// Normalized window at offset `s` from the pulse centre, assuming |s| ≤ σ/2.
    #[inline]
    fn weight(self, s: f64, sigma: f64) -> f64 {
        match self {
            PulseShape::TopHat => 1.0 / sigma,
            PulseShape::RaisedCosine => (1.0 + (std::f64::consts::TAU * s / sigma).cos()) / sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Window width σ (s).
    pub pulse_width: f64,
    pub steps_per_segment: usize,
    pub pulse_shape: PulseShape,
}

impl OracleConfig {
    pub fn new(pulse_width: f64) -> Self {
        Self {
            pulse_width,
            steps_per_segment: MIN_STEPS_PER_SEGMENT,
            pulse_shape: PulseShape::TopHat,
        }
    }

    pub fn with_steps(self, steps_per_segment: usize) -> Self {
        Self {
            steps_per_segment,
            ..self
        }
    }

    pub fn with_shape(self, pulse_shape: PulseShape) -> Self {
        Self { pulse_shape, ..self }
    }

    /// σ > 0, σ below half the smallest pulse spacing, at least 100 steps.
    pub fn validate(&self, seq: &PulseSequence) -> Result<()> {
        let sigma = self.pulse_width;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!("pulse width must be positive, got {sigma:e}")));
        }
        if let Some(spacing) = seq.min_spacing() {
            if sigma >= 0.5 * spacing {
                return Err(Error::InvalidConfig(format!(
                    "pulse width {sigma:e} s must be below half the minimum pulse spacing {spacing:e} s"
                )));
            }
        }
        if self.steps_per_segment < MIN_STEPS_PER_SEGMENT {
            return Err(Error::InvalidConfig(format!(
                "steps per segment must be at least {MIN_STEPS_PER_SEGMENT}, got {}",
                self.steps_per_segment
            )));
        }
        Ok(())
    }

    fn even_steps(&self) -> usize {
        self.steps_per_segment + self.steps_per_segment % 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub z: f64,
    pub v: f64,
}

/// Interval between two breakpoints, with the pulse whose window covers it.
#[derive(Debug, Clone, Copy, PartialEq)]
struct GridSegment {
    t_start: f64,
    t_end: f64,
    pulse: Option<usize>,
}

impl GridSegment {
    /// Window weight normalized to the rounded edges actually integrated, so
    /// each window delivers exactly ħk/m.
    #[inline]
    fn weight(&self, shape: PulseShape, t: f64) -> f64 {
        let width = self.t_end - self.t_start;
        shape.weight(t - (self.t_start + 0.5 * width), width)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Grid {
    segments: Vec<GridSegment>,
    steps: usize,
}

impl Grid {
    fn new(seq: &PulseSequence, cfg: &OracleConfig) -> Self {
        let half = 0.5 * cfg.pulse_width;
        let pulses = seq.pulses();
        let t_start = pulses.first().map_or(0.0, |p| (p.t - half).min(0.0));
        let t_final = pulses.last().map_or(seq.duration(), |p| (p.t + half).max(seq.duration()));

        let mut segments = Vec::with_capacity(2 * pulses.len() + 1);
        let mut cursor = t_start;
        for (i, p) in pulses.iter().enumerate() {
            let (lo, hi) = (p.t - half, p.t + half);
            if lo > cursor {
                segments.push(GridSegment {
                    t_start: cursor,
                    t_end: lo,
                    pulse: None,
                });
            }
            segments.push(GridSegment {
                t_start: lo,
                t_end: hi,
                pulse: Some(i),
            });
            cursor = hi;
        }
        if t_final > cursor {
            segments.push(GridSegment {
                t_start: cursor,
                t_end: t_final,
                pulse: None,
            });
        }
        Self {
            segments,
            steps: cfg.even_steps(),
        }
    }

    fn node_time(&self, seg: &GridSegment, j: usize) -> f64 {
        if j == self.steps {
            seg.t_end
        } else {
            seg.t_start + (seg.t_end - seg.t_start) * (j as f64 / self.steps as f64)
        }
    }
}

/// Branch trajectory sampled on the oracle grid; segment `s` owns nodes
/// `s * steps ..= (s + 1) * steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub samples: Vec<Sample>,
    /// Displacement and velocity relative to the pulse-free trajectory.
    recoil: Vec<(f64, f64)>,
    grid: Grid,
}

impl SampledTrajectory {
    pub fn last(&self) -> Sample {
        *self.samples.last().expect("trajectory has at least one node")
    }
}

/// Which kicks act during the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Drive {
    Branch(Branch),
    Free,
}

struct Dynamics<'a> {
    seq: &'a PulseSequence,
    cfg: &'a OracleConfig,
    recoil: f64,
    g: f64,
    gradient: f64,
    drive: Drive,
}

impl Dynamics<'_> {
    #[inline]
    fn accel(&self, seg: &GridSegment, t: f64, z: f64) -> f64 {
        let mut a = -self.g - self.gradient * z;
        if let (Some(i), Drive::Branch(b)) = (seg.pulse, self.drive) {
            let p = &self.seq.pulses()[i];
            a += self.recoil * p.k(b) * seg.weight(self.cfg.pulse_shape, t);
        }
        a
    }

    /// RK4 increments (Δz, Δv) over one step.
    fn rk4_step(&self, seg: &GridSegment, t: f64, h: f64, z: f64, v: f64) -> (f64, f64) {
        let a1 = self.accel(seg, t, z);
        let (z2, v2) = (z + 0.5 * h * v, v + 0.5 * h * a1);
        let a2 = self.accel(seg, t + 0.5 * h, z2);
        let (z3, v3) = (z + 0.5 * h * v2, v + 0.5 * h * a2);
        let a3 = self.accel(seg, t + 0.5 * h, z3);
        let (z4, v4) = (z + h * v3, v + h * a3);
        let a4 = self.accel(seg, t + h, z4);
        (
            h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
            h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        )
    }
}

/// Position and velocity accumulated with compensation, so rounding does not
/// build up over thousands of steps in the lab frame.
#[derive(Debug, Clone, Copy)]
struct State {
    z: CompensatedSum,
    v: CompensatedSum,
}

impl State {
    fn new(z: f64, v: f64) -> Self {
        let mut s = Self {
            z: CompensatedSum::new(),
            v: CompensatedSum::new(),
        };
        s.z.add(z);
        s.v.add(v);
        s
    }

    fn get(&self) -> (f64, f64) {
        (self.z.value(), self.v.value())
    }

    fn step(&mut self, dyn_: &Dynamics<'_>, seg: &GridSegment, t: f64, h: f64) {
        let (z, v) = self.get();
        let (dz, dv) = dyn_.rk4_step(seg, t, h, z, v);
        self.z.add(dz);
        self.v.add(dv);
    }
}

fn initial_state(env: &GravityEnv, ics: &InitialConditions, t_start: f64, steps: usize) -> (f64, f64) {
    if t_start >= 0.0 {
        return (ics.z0, ics.v0);
    }
    // Free fall backwards from t = 0 to the first window edge.
    let seg = GridSegment {
        t_start,
        t_end: 0.0,
        pulse: None,
    };
    let free = Dynamics {
        seq: &PulseSequence::from_raw(Vec::new(), 0.0),
        cfg: &OracleConfig::new(1.0),
        recoil: 0.0,
        g: env.g,
        gradient: env.gradient,
        drive: Drive::Free,
    };
    let h = t_start / steps as f64;
    let mut state = State::new(ics.z0, ics.v0);
    for j in 0..steps {
        state.step(&free, &seg, j as f64 * h, h);
    }
    state.get()
}

fn integrate_free(env: &GravityEnv, ics: &InitialConditions, grid: Grid) -> SampledTrajectory {
    let empty = PulseSequence::from_raw(Vec::new(), 0.0);
    let cfg = OracleConfig::new(1.0);
    let dyn_ = Dynamics {
        seq: &empty,
        cfg: &cfg,
        recoil: 0.0,
        g: env.g,
        gradient: env.gradient,
        drive: Drive::Free,
    };
    let n = grid.steps;
    let t0 = grid.segments.first().map_or(0.0, |s| s.t_start);
    let (z, v) = initial_state(env, ics, t0, n);
    let mut samples = vec![Sample { t: t0, z, v }];
    let mut state = State::new(z, v);
    for seg in &grid.segments {
        let free_seg = GridSegment { pulse: None, ..*seg };
        for j in 0..n {
            let t = grid.node_time(seg, j);
            let t_next = grid.node_time(seg, j + 1);
            state.step(&dyn_, &free_seg, t, t_next - t);
            let (z, v) = state.get();
            samples.push(Sample { t: t_next, z, v });
        }
    }
    let recoil = vec![(0.0, 0.0); samples.len()];
    SampledTrajectory { samples, recoil, grid }
}

/// Kicked branch as free fall plus a recoil deviation. The deviation obeys
/// δa = −γ δz + kick and starts at rest before the first window, so it is
/// integrated without the large lab-frame terms.
fn integrate_kicked(seq: &PulseSequence, branch: Branch, species: &Species, env: &GravityEnv, cfg: &OracleConfig, free: &SampledTrajectory) -> SampledTrajectory {
    let grid = free.grid.clone();
    let dyn_ = Dynamics {
        seq,
        cfg,
        recoil: HBAR / species.mass,
        g: 0.0,
        gradient: env.gradient,
        drive: Drive::Branch(branch),
    };
    let n = grid.steps;
    let mut recoil = Vec::with_capacity(free.samples.len());
    recoil.push((0.0, 0.0));
    let mut state = State::new(0.0, 0.0);
    for seg in &grid.segments {
        for j in 0..n {
            let t = grid.node_time(seg, j);
            let t_next = grid.node_time(seg, j + 1);
            state.step(&dyn_, seg, t, t_next - t);
            recoil.push(state.get());
        }
    }
    let samples = free
        .samples
        .iter()
        .zip(&recoil)
        .map(|(f, &(dz, dv))| Sample {
            t: f.t,
            z: f.z + dz,
            v: f.v + dv,
        })
        .collect();
    SampledTrajectory { samples, recoil, grid }
}

fn integrate(
    seq: &PulseSequence,
    drive: Drive,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    cfg: &OracleConfig,
) -> SampledTrajectory {
    let grid = Grid::new(seq, cfg);
    let empty = grid.segments.is_empty();
    let mut free = integrate_free(env, ics, grid);
    if let Drive::Branch(b) = drive {
        free = integrate_kicked(seq, b, species, env, cfg, &free);
    }
    // Empty grids (no pulses, zero duration) still carry the start node.
    if empty {
        free.samples.truncate(1);
        free.recoil.truncate(1);
    }
    free
}

fn check_inputs(seq: &PulseSequence, species: &Species, env: &GravityEnv, cfg: &OracleConfig) -> Result<()> {
    if !(species.mass.is_finite() && species.mass > 0.0) {
        return Err(Error::NonPositiveMass(species.mass));
    }
    if !(env.g.is_finite() && env.gradient.is_finite()) {
        return Err(Error::InvalidInput("gravity must be finite".into()));
    }
    let structural: Vec<_> = crate::physics::validate_sequence(seq)
        .into_iter()
        .filter(|v| v.rule != crate::physics::Rule::TooFewPulses)
        .collect();
    if !structural.is_empty() {
        return Err(Error::InvalidSequence(structural));
    }
    cfg.validate(seq)
}

/// Checks that every window delivered ħk/m to the recoil deviation.
fn check_impulses(seq: &PulseSequence, branch: &SampledTrajectory, b: Branch, species: &Species, env: &GravityEnv, cfg: &OracleConfig) -> Result<()> {
    let recoil = HBAR / species.mass;
    let n = branch.grid.steps;
    let vmax = branch.recoil.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let zmax = branch.recoil.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
    // Tidal velocity change accumulated inside one window.
    let tidal = env.gradient.abs() * zmax * cfg.pulse_width;
    for (s, seg) in branch.grid.segments.iter().enumerate() {
        let Some(i) = seg.pulse else { continue };
        let dv = branch.recoil[(s + 1) * n].1 - branch.recoil[s * n].1;
        let expected = recoil * seq.pulses()[i].k(b);
        let tol = IMPULSE_RTOL * expected.abs() + 1e3 * f64::EPSILON * vmax + 2.0 * tidal;
        if (dv - expected).abs() > tol {
            return Err(Error::Numeric(format!(
                "step too coarse: pulse {i} on branch {} delivered {dv:e} m/s, expected {expected:e} m/s",
                b.number()
            )));
        }
    }
    Ok(())
}

/// Integrates one branch with finite-width pulses.
pub fn integrate_branch(
    seq: &PulseSequence,
    branch: Branch,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    cfg: &OracleConfig,
) -> Result<SampledTrajectory> {
    check_inputs(seq, species, env, cfg)?;
    let traj = integrate(seq, Drive::Branch(branch), species, env, ics, cfg);
    check_impulses(seq, &traj, branch, species, env, cfg)?;
    Ok(traj)
}

/// Composite Simpson over every grid segment of `f(segment, node index)`.
fn simpson<F>(grid: &Grid, mut f: F) -> f64
where
    F: FnMut(usize, usize) -> f64,
{
    let n = grid.steps;
    let mut acc = CompensatedSum::new();
    for (s, seg) in grid.segments.iter().enumerate() {
        let h = (seg.t_end - seg.t_start) / n as f64;
        for j in 0..=n {
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc.add(w * h / 3.0 * f(s, s * n + j));
        }
    }
    acc.value()
}

struct BranchPair {
    upper: SampledTrajectory,
    lower: SampledTrajectory,
    free: SampledTrajectory,
}

fn integrate_all(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    cfg: &OracleConfig,
) -> Result<BranchPair> {
    check_inputs(seq, species, env, cfg)?;
    let free = integrate_free(env, ics, Grid::new(seq, cfg));
    let upper = integrate_kicked(seq, Branch::Upper, species, env, cfg, &free);
    let lower = integrate_kicked(seq, Branch::Lower, species, env, cfg, &free);
    check_impulses(seq, &upper, Branch::Upper, species, env, cfg)?;
    check_impulses(seq, &lower, Branch::Lower, species, env, cfg)?;
    Ok(BranchPair { upper, lower, free })
}

fn tau_from(pair: &BranchPair, env: &GravityEnv) -> f64 {
    let c2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    simpson(&pair.upper.grid, |_, i| {
        let f = pair.free.samples[i];
        let (da, db) = (pair.upper.recoil[i], pair.lower.recoil[i]);
        let kinetic = 0.5 * (db.1 - da.1) * (2.0 * f.v + da.1 + db.1);
        let potential = (da.0 - db.0) * (env.g + 0.5 * env.gradient * (2.0 * f.z + da.0 + db.0));
        (kinetic + potential) / c2
    })
}

/// Decomposed light-pulse action, all divided by ħ (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionNumeric {
    /// ΔS_em/ħ.
    pub em_action: f64,
    /// ∫ Δk(t) z_g(t) dt, with z_g the integrated pulse-free trajectory.
    pub gravito_recoil: f64,
    /// Σ(φ⁽¹⁾ − φ⁽²⁾).
    pub laser_phase: f64,
    /// em_action − gravito_recoil − laser_phase.
    pub recoil_action: f64,
    /// recoil_action − 2ω_C Δτ_numeric.
    pub decomposition_residual: f64,
    /// −ω_C Δτ_numeric + ΔS_em/ħ.
    pub total_phase: f64,
}

fn action_from(pair: &BranchPair, seq: &PulseSequence, species: &Species, cfg: &OracleConfig, delta_tau: f64) -> ActionNumeric {
    let pulses = seq.pulses();
    let grid = &pair.upper.grid;
    let window = |s: usize, t: f64| -> Option<(f64, f64, f64)> {
        grid.segments[s].pulse.map(|i| {
            let p = &pulses[i];
            let w = grid.segments[s].weight(cfg.pulse_shape, t);
            (p.k_upper * w, p.k_lower * w, p.delta_k() * w)
        })
    };
    let em = simpson(grid, |s, i| match window(s, pair.upper.samples[i].t) {
        Some((ku, kl, _)) => ku * pair.upper.samples[i].z - kl * pair.lower.samples[i].z,
        None => 0.0,
    });
    let gk = simpson(grid, |s, i| match window(s, pair.free.samples[i].t) {
        Some((_, _, dk)) => dk * pair.free.samples[i].z,
        None => 0.0,
    });
    let laser: f64 = pulses.iter().map(|p| p.phi_upper - p.phi_lower).sum();
    let em_action = em + laser;
    let omega_c = species.compton_frequency();
    let recoil_action = em_action - gk - laser;
    ActionNumeric {
        em_action,
        gravito_recoil: gk,
        laser_phase: laser,
        recoil_action,
        decomposition_residual: recoil_action - 2.0 * omega_c * delta_tau,
        total_phase: em_action - omega_c * delta_tau,
    }
}

/// Numerical Δτ = τ⁽¹⁾ − τ⁽²⁾ (s) over the whole grid.
pub fn proper_time_numeric(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    cfg: &OracleConfig,
) -> Result<f64> {
    let pair = integrate_all(seq, species, env, ics, cfg)?;
    Ok(tau_from(&pair, env))
}

/// Numerical light-pulse action and its decomposition.
pub fn action_numeric(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    cfg: &OracleConfig,
) -> Result<ActionNumeric> {
    let pair = integrate_all(seq, species, env, ics, cfg)?;
    let tau = tau_from(&pair, env);
    Ok(action_from(&pair, seq, species, cfg, tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResiduals {
    /// z⁽¹⁾ − z⁽²⁾ at the end of the grid (m).
    pub delta_z: f64,
    /// ż⁽¹⁾ − ż⁽²⁾ at the end of the grid (m/s).
    pub delta_v: f64,
}

/// Oracle run compared with the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub sigma: f64,
    pub steps: usize,
    pub delta_tau_numeric: f64,
    /// `None` when the closed form does not apply (nonzero gradient).
    pub delta_tau_closed: Option<f64>,
    /// |numeric − closed| / max(|closed|, recoil scale); see [`recoil_tau_scale`].
    pub rel_residual: Option<f64>,
    pub gravito_recoil_numeric: f64,
    pub gravito_recoil_closed: Option<f64>,
    pub total_phase_numeric: f64,
    pub total_phase_closed: Option<f64>,
    pub action: ActionNumeric,
    pub closure_residuals: ClosureResiduals,
}

/// (ħ k_max / mc)² · (t_last − t_first): the size of Δτ a sequence can produce,
/// used to normalize residuals when the closed form is zero.
pub fn recoil_tau_scale(seq: &PulseSequence, species: &Species) -> f64 {
    let v = HBAR * seq.max_abs_k() / (species.mass * SPEED_OF_LIGHT);
    let span = match (seq.pulses().first(), seq.pulses().last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    v * v * span
}

fn normalized_residual(numeric: f64, closed: f64, scale: f64) -> f64 {
    let denom = closed.abs().max(scale);
    if denom == 0.0 {
        numeric.abs()
    } else {
        (numeric - closed).abs() / denom
    }
}

/// Runs the oracle on a closed sequence and compares it with the closed form.
pub fn run_oracle(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    require_closed(seq)?;
    let pair = integrate_all(seq, species, env, ics, cfg)?;
    let tau = tau_from(&pair, env);
    let action = action_from(&pair, seq, species, cfg, tau);

    let (tau_closed, breakdown) = if env.gradient == 0.0 {
        (
            Some(proper_time_difference(seq, species)?),
            Some(total_phase(seq, species, env, ics)?),
        )
    } else {
        (None, None)
    };
    let scale = recoil_tau_scale(seq, species);
    let (up, lo) = (pair.upper.last(), pair.lower.last());
    Ok(OracleResult {
        sigma: cfg.pulse_width,
        steps: cfg.even_steps(),
        delta_tau_numeric: tau,
        delta_tau_closed: tau_closed,
        rel_residual: tau_closed.map(|c| normalized_residual(tau, c, scale)),
        gravito_recoil_numeric: action.gravito_recoil,
        gravito_recoil_closed: breakdown.map(|b| b.gravito_recoil),
        total_phase_numeric: action.total_phase,
        total_phase_closed: breakdown.map(|b| b.total_phase),
        action,
        closure_residuals: ClosureResiduals {
            delta_z: up.z - lo.z,
            delta_v: up.v - lo.v,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub sigma: f64,
    pub rel_residual: f64,
    pub delta_tau_numeric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of ln(residual) against ln(σ) over rows above the floor.
    pub exponent: Option<f64>,
    /// Step-halving estimate of the integrator floor at the smallest σ,
    /// normalized like the residuals.
    pub floor: f64,
    /// Residuals decrease strictly wherever they sit above the floor.
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn ensure_monotone(&self) -> Result<()> {
        if self.monotone {
            Ok(())
        } else {
            Err(Error::Numeric("oracle residuals are not monotone above the integrator floor".into()))
        }
    }
}

/// Residual against the closed form for each σ in a strictly decreasing list.
pub fn convergence_study(
    seq: &PulseSequence,
    species: &Species,
    env: &GravityEnv,
    ics: &InitialConditions,
    widths: &[f64],
    base: &OracleConfig,
    exec: Execution,
) -> Result<ConvergenceReport> {
    if widths.is_empty() {
        return Err(Error::InvalidConfig("no pulse widths given".into()));
    }
    if widths.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("pulse widths must be strictly decreasing".into()));
    }
    if env.gradient != 0.0 {
        return Err(Error::NonzeroGradient(env.gradient));
    }
    let results: Vec<Result<OracleResult>> = exec.map(widths, |&sigma| {
        run_oracle(seq, species, env, ics, &OracleConfig { pulse_width: sigma, ..*base })
    });
    let mut rows = Vec::with_capacity(widths.len());
    for r in results {
        let r = r?;
        rows.push(ConvergenceRow {
            sigma: r.sigma,
            rel_residual: r.rel_residual.unwrap_or(f64::NAN),
            delta_tau_numeric: r.delta_tau_numeric,
        });
    }

    let finest = OracleConfig {
        pulse_width: *widths.last().unwrap(),
        ..*base
    };
    let refined = OracleConfig {
        steps_per_segment: 2 * finest.even_steps(),
        ..finest
    };
    let coarse_tau = rows.last().unwrap().delta_tau_numeric;
    let fine_tau = proper_time_numeric(seq, species, env, ics, &refined)?;
    let closed = proper_time_difference(seq, species)?;
    let denom = closed.abs().max(recoil_tau_scale(seq, species));
    let floor = if denom > 0.0 {
        (coarse_tau - fine_tau).abs() / denom
    } else {
        (coarse_tau - fine_tau).abs()
    };

    // Residuals within a few floors of the floor are noise.
    let noise = 10.0 * floor + 1e-15;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].rel_residual < w[0].rel_residual || (w[0].rel_residual <= noise && w[1].rel_residual <= noise));

    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rel_residual > noise)
        .map(|r| (r.sigma.ln(), r.rel_residual.ln()))
        .collect();
    let exponent = (fit.len() >= 2).then(|| {
        let n = fit.len() as f64;
        let mx = fit.iter().map(|p| p.0).sum::<f64>() / n;
        let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });

    Ok(ConvergenceReport {
        rows,
        exponent,
        floor,
        monotone,
    })
}
