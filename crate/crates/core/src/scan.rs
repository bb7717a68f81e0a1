//! Parameter sweeps over a builder family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::{beat, fringe};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::GeometrySpec;
use crate::phase::total_phase;
use crate::physics::{ClockPair, GravityEnv, InitialConditions, Species};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScanVariable {
    /// Pulse separation T (s).
    T,
    /// Wave number k (1/m).
    K,
}

impl ScanVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanVariable::T => "T",
            ScanVariable::K => "k",
        }
    }
}

impl fmt::Display for ScanVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScanVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(ScanVariable::T),
            "k" | "K" => Ok(ScanVariable::K),
            _ => Err(Error::InvalidInput(format!("unknown scan variable `{s}` (expected T or k)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub variable: ScanVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl ScanGrid {
    /// `steps` evenly spaced values from `from` to `to` inclusive; a single
    /// step yields `from` alone.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(Error::InvalidInput("scan bounds must be finite".into()));
        }
        if self.steps == 0 || self.to < self.from {
            return Err(Error::InvalidInput(format!(
                "empty scan range [{:e}, {:e}] with {} steps",
                self.from, self.to, self.steps
            )));
        }
        if self.from < 0.0 {
            return Err(Error::InvalidInput(format!("{} must be non-negative", self.variable)));
        }
        if self.steps == 1 {
            return Ok(vec![self.from]);
        }
        let n = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.to
                } else {
                    self.from + (self.to - self.from) * (i as f64 / n)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    /// s
    pub t: f64,
    /// 1/m
    pub k: f64,
    /// s
    pub delta_tau: f64,
    /// cos(ηΩΔτ/2); 1 without a clock.
    pub envelope: f64,
    /// Carrier phase with a clock, total phase without one (rad).
    pub carrier_phase: f64,
    /// Exit-port probability.
    pub p: f64,
}

/// Evaluates one member of the family. A zero T or k is the no-kick limit.
pub fn scan_point(
    family: &GeometrySpec,
    species: &Species,
    clock: Option<&ClockPair>,
    env: &GravityEnv,
    ics: &InitialConditions,
) -> Result<ScanRow> {
    let row = |delta_tau, envelope, carrier_phase, p| ScanRow {
        t: family.t,
        k: family.k,
        delta_tau,
        envelope,
        carrier_phase,
        p,
    };
    if family.t == 0.0 || family.k == 0.0 {
        return Ok(row(0.0, 1.0, 0.0, 1.0));
    }
    let seq = family.build()?;
    match clock {
        Some(clock) => {
            let b = beat(&seq, clock, env, ics)?;
            Ok(row(b.delta_tau, b.envelope, b.carrier_phase, b.p_combined))
        }
        None => {
            let ph = total_phase(&seq, species, env, ics)?;
            let p = fringe(&seq, species, env, ics)?;
            Ok(row(ph.delta_tau, 1.0, ph.total_phase, p))
        }
    }
}

/// One row per grid value, in grid order regardless of `exec`.
pub fn scan(
    family: &GeometrySpec,
    grid: &ScanGrid,
    species: &Species,
    clock: Option<&ClockPair>,
    env: &GravityEnv,
    ics: &InitialConditions,
    exec: Execution,
) -> Result<Vec<ScanRow>> {
    let values = grid.values()?;
    exec.map(&values, |&x| {
        let member = match grid.variable {
            ScanVariable::T => family.with_t(x),
            ScanVariable::K => family.with_k(x),
        };
        scan_point(&member, species, clock, env, ics)
    })
    .into_iter()
    .collect()
}
