//! Reproducible trajectory ensembles with per-trajectory auditing.
//!
//! Trajectory `i` always draws its perturbations from substream `i` of the
//! noise spec, and results are reduced in index order, so an ensemble is a
//! pure function of its configuration whatever the number of worker threads.

mod audit;
mod scan;

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{invariant_interval, InvariantInterval};
use crate::control::{step, AlphaSequence, ControlError, ControlScheme};
use crate::maps::MapModel;
use crate::noise::{NoiseLaw, NoiseSpec};

pub use audit::{audit_trajectory, AuditContext, Violation, ViolationKind, BAND_MARGIN, MONOTONE_SLACK};
pub use scan::{parameter_scan, ScanGrid, ScanRow, ScanScheme, ScanTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("an iid control sequence is driven by uniform noise; got {0:?}")]
    IidNeedsUniform(NoiseLaw),
    #[error("initial value x0 = {0} must be positive and finite")]
    InvalidX0(f64),
    #[error("n_steps must be at least 1")]
    NoSteps,
    #[error("tolerance eps = {0} must be positive")]
    InvalidTolerance(f64),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One realised orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x0: f64,
    /// `x_0, ..., x_n`; shorter than `n_steps + 1` only when diverged.
    pub values: Vec<f64>,
    /// Realised control `alpha_n` used for the step `n -> n + 1`, for schemes
    /// that have one; empty otherwise.
    pub controls: Vec<f64>,
    pub clamp_events: u64,
    /// The state reached exactly 0 at some step.
    pub extinct: bool,
    /// A non-finite state appeared; the trajectory stops before it.
    pub diverged: bool,
    /// First `n` with `x_n` in `[mu1, mu2]`.
    pub first_entry_mu: Option<usize>,
    /// First `n` with `|x_n - K| < eps`.
    pub first_entry_eps: Option<usize>,
    pub seed_index: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// `|x_n - K|`, infinite past a divergence.
    pub fn distance(&self, n: usize, k: f64) -> f64 {
        self.values.get(n).map_or(f64::INFINITY, |x| (x - k).abs())
    }
}

/// A model, scheme and noise law ready to be iterated.
#[derive(Debug, Clone)]
pub struct Simulation {
    model: MapModel,
    scheme: ControlScheme,
    noise: NoiseSpec,
    eps: f64,
    interval: Option<InvariantInterval>,
}

impl Simulation {
    /// `eps` is the convergence tolerance used for `first_entry_eps`.
    pub fn new(model: MapModel, scheme: ControlScheme, noise: NoiseSpec, eps: f64) -> Result<Self, SimError> {
        scheme.validate()?;
        if let ControlScheme::DeterministicPbc(AlphaSequence::IidOnInterval { .. }) = scheme {
            if noise.law() != NoiseLaw::UniformSymmetric {
                return Err(SimError::IidNeedsUniform(noise.law()));
            }
        }
        if !(eps > 0.0) {
            return Err(SimError::InvalidTolerance(eps));
        }
        let interval = invariant_interval(&model).ok();
        Ok(Self {
            model,
            scheme,
            noise,
            eps,
            interval,
        })
    }

    pub fn model(&self) -> &MapModel {
        &self.model
    }

    pub fn scheme(&self) -> &ControlScheme {
        &self.scheme
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn interval(&self) -> Option<InvariantInterval> {
        self.interval
    }

    pub fn run_trajectory(&self, x0: f64, n_steps: usize, index: u64) -> Result<Trajectory, SimError> {
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(SimError::InvalidX0(x0));
        }
        if n_steps == 0 {
            return Err(SimError::NoSteps);
        }
        let k = self.model.equilibrium();
        let mut stream = self.noise.derive_stream(index);
        let record_controls = self.scheme.has_control_values();
        let mut values = Vec::with_capacity(n_steps + 1);
        let mut controls = Vec::with_capacity(if record_controls { n_steps } else { 0 });
        let mut traj = Trajectory {
            x0,
            values: Vec::new(),
            controls: Vec::new(),
            clamp_events: 0,
            extinct: false,
            diverged: false,
            first_entry_mu: None,
            first_entry_eps: None,
            seed_index: index,
        };
        let mut x = x0;
        values.push(x);
        self.note_entries(&mut traj, 0, x, k);
        for n in 1..=n_steps {
            let xi = stream.sample();
            let out = step(&self.model, &self.scheme, x, xi);
            if !out.next.is_finite() {
                traj.diverged = true;
                break;
            }
            if record_controls {
                controls.push(out.control.unwrap_or(f64::NAN));
            }
            if out.clamped {
                traj.clamp_events += 1;
            }
            x = out.next;
            if x == 0.0 {
                traj.extinct = true;
            }
            values.push(x);
            self.note_entries(&mut traj, n, x, k);
        }
        traj.values = values;
        traj.controls = controls;
        Ok(traj)
    }

    fn note_entries(&self, traj: &mut Trajectory, n: usize, x: f64, k: f64) {
        if traj.first_entry_mu.is_none() && self.interval.is_some_and(|iv| iv.contains(x)) {
            traj.first_entry_mu = Some(n);
        }
        if traj.first_entry_eps.is_none() && (x - k).abs() < self.eps {
            traj.first_entry_eps = Some(n);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Trajectory `i` starts from `x0[i % x0.len()]`.
    pub x0: Vec<f64>,
    pub n_steps: usize,
    pub n_traj: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Mean and maximum of the defined first-entry indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntrySummary {
    pub count: usize,
    pub mean: Option<f64>,
    pub max: Option<usize>,
}

impl EntrySummary {
    fn from<I: Iterator<Item = Option<usize>>>(it: I) -> Self {
        let hits: Vec<usize> = it.flatten().collect();
        let count = hits.len();
        let mean = (count > 0).then(|| hits.iter().map(|&h| h as f64).sum::<f64>() / count as f64);
        Self {
            count,
            mean,
            max: hits.iter().copied().max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub n_steps: usize,
    pub k: f64,
    pub eps: f64,
    /// Per-step 5%, 50% and 95% quantiles of `|x_n - K|`.
    pub q05: Vec<f64>,
    pub q50: Vec<f64>,
    pub q95: Vec<f64>,
    /// Per-step fraction of trajectories with `|x_n - K| < eps`.
    pub frac_eps: Vec<f64>,
    pub entry_mu: EntrySummary,
    pub entry_eps: EntrySummary,
    pub clamp_events: u64,
    pub extinct: usize,
    pub diverged: usize,
    pub violations_monotone: usize,
    pub violations_trapping: usize,
    pub violations_ball: usize,
    /// Additive band exits.
    pub band_escape_count: usize,
}

impl EnsembleStats {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,q05,q50,q95,frac_eps")?;
        for n in 0..=self.n_steps {
            writeln!(
                out,
                "{},{},{},{},{}",
                n, self.q05[n], self.q50[n], self.q95[n], self.frac_eps[n]
            )?;
        }
        Ok(())
    }

    /// `name value` summary lines.
    pub fn summary(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        let optu = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        vec![
            ("n_traj".into(), self.n_traj.to_string()),
            ("n_steps".into(), self.n_steps.to_string()),
            ("convergence_fraction".into(), self.frac_eps[self.n_steps].to_string()),
            ("entry_mu_count".into(), self.entry_mu.count.to_string()),
            ("entry_mu_mean".into(), opt(self.entry_mu.mean)),
            ("entry_mu_max".into(), optu(self.entry_mu.max)),
            ("entry_eps_count".into(), self.entry_eps.count.to_string()),
            ("entry_eps_mean".into(), opt(self.entry_eps.mean)),
            ("entry_eps_max".into(), optu(self.entry_eps.max)),
            ("clamp_events".into(), self.clamp_events.to_string()),
            ("extinct".into(), self.extinct.to_string()),
            ("diverged".into(), self.diverged.to_string()),
            ("violations_monotone".into(), self.violations_monotone.to_string()),
            ("violations_trapping".into(), self.violations_trapping.to_string()),
            ("violations_ball".into(), self.violations_ball.to_string()),
            ("band_escape_count".into(), self.band_escape_count.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    /// Audit findings per trajectory, empty when no audit was requested.
    pub violations: Vec<Vec<Violation>>,
    pub stats: EnsembleStats,
}

impl Ensemble {
    /// Fraction of trajectories with `|x_n - K| < eps`; diverged ones never count.
    pub fn convergence_fraction(&self, eps: f64, n: usize) -> f64 {
        let k = self.stats.k;
        let hits = self.trajectories.iter().filter(|t| t.distance(n, k) < eps).count();
        hits as f64 / self.trajectories.len().max(1) as f64
    }

    /// Writes at most `max_traj` trajectories as `traj,step,x` rows.
    pub fn write_trajectories_csv<W: Write>(&self, mut out: W, max_traj: usize) -> io::Result<()> {
        writeln!(out, "traj,step,x")?;
        for t in self.trajectories.iter().take(max_traj) {
            for (n, x) in t.values.iter().enumerate() {
                writeln!(out, "{},{},{}", t.seed_index, n, x)?;
            }
        }
        Ok(())
    }

    pub fn all_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().flatten()
    }
}

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| SimError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Type-7 quantile of sorted data; infinities propagate instead of producing NaN.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b || lo == hi {
        return a;
    }
    if b.is_infinite() {
        return b;
    }
    a + (h - lo as f64) * (b - a)
}

/// Runs `n_traj` trajectories with indices `0..n_traj` and aggregates them.
pub fn run_ensemble(sim: &Simulation, cfg: &EnsembleConfig, audit: Option<&AuditContext>) -> Result<Ensemble, SimError> {
    if cfg.x0.is_empty() {
        return Err(SimError::InvalidX0(f64::NAN));
    }
    let results: Vec<Result<(Trajectory, Vec<Violation>), SimError>> = with_pool(cfg.threads, || {
        (0..cfg.n_traj)
            .into_par_iter()
            .map(|i| {
                let x0 = cfg.x0[i % cfg.x0.len()];
                let t = sim.run_trajectory(x0, cfg.n_steps, i as u64)?;
                let v = audit.map(|ctx| audit_trajectory(&t, ctx)).unwrap_or_default();
                Ok((t, v))
            })
            .collect()
    })?;
    let mut trajectories = Vec::with_capacity(cfg.n_traj);
    let mut violations = Vec::with_capacity(cfg.n_traj);
    for r in results {
        let (t, v) = r?;
        trajectories.push(t);
        violations.push(v);
    }
    let stats = aggregate(sim, cfg.n_steps, &trajectories, &violations);
    Ok(Ensemble {
        trajectories,
        violations,
        stats,
    })
}

fn aggregate(sim: &Simulation, n_steps: usize, trajs: &[Trajectory], violations: &[Vec<Violation>]) -> EnsembleStats {
    let k = sim.model().equilibrium();
    let eps = sim.eps();
    let n_traj = trajs.len();
    let mut q05 = Vec::with_capacity(n_steps + 1);
    let mut q50 = Vec::with_capacity(n_steps + 1);
    let mut q95 = Vec::with_capacity(n_steps + 1);
    let mut frac_eps = Vec::with_capacity(n_steps + 1);
    let mut column = vec![0.0; n_traj];
    for n in 0..=n_steps {
        for (slot, t) in column.iter_mut().zip(trajs) {
            *slot = t.distance(n, k);
        }
        let hits = column.iter().filter(|&&d| d < eps).count();
        frac_eps.push(hits as f64 / n_traj.max(1) as f64);
        column.sort_by(f64::total_cmp);
        q05.push(quantile(&column, 0.05));
        q50.push(quantile(&column, 0.50));
        q95.push(quantile(&column, 0.95));
    }
    let count = |kind: ViolationKind| violations.iter().flatten().filter(|v| v.kind == kind).count();
    EnsembleStats {
        n_traj,
        n_steps,
        k,
        eps,
        q05,
        q50,
        q95,
        frac_eps,
        entry_mu: EntrySummary::from(trajs.iter().map(|t| t.first_entry_mu)),
        entry_eps: EntrySummary::from(trajs.iter().map(|t| t.first_entry_eps)),
        clamp_events: trajs.iter().map(|t| t.clamp_events).sum(),
        extinct: trajs.iter().filter(|t| t.extinct).count(),
        diverged: trajs.iter().filter(|t| t.diverged).count(),
        violations_monotone: count(ViolationKind::Monotonicity),
        violations_trapping: count(ViolationKind::Trapping),
        violations_ball: count(ViolationKind::EpsBall),
        band_escape_count: count(ViolationKind::Band),
    }
}
