//! Checks a realised trajectory against the invariants the theory guarantees.

use crate::analysis::{admissible_multiplicative, blur_bound, invariant_interval, InvariantInterval};
use crate::control::ControlScheme;
use crate::maps::{LipschitzData, MapModel};

use super::Trajectory;

/// Multiplicative allowance on `|x_{n+1} - K| <= |x_n - K|`.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Relative allowance on the endpoints of `[mu1, mu2]`.
const TRAP_SLACK: f64 = 1e-12;
/// Extra half-width added to the additive blur radius.
pub const BAND_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// Distance to `K` grew under a control value in `(1 - 1/M, 1)`.
    Monotonicity,
    /// Left `[mu1, mu2]` after entering it, under a control value in `[0, 1]`.
    Trapping,
    /// Left `(K - eps, K + eps)` after entering it.
    EpsBall,
    /// Left the additive band after entering it.
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Index of the offending value `x_step`.
    pub step: usize,
    pub kind: ViolationKind,
    /// How far past the bound the value landed.
    pub magnitude: f64,
}

/// Which audits apply to a `(model, scheme)` pair, with their bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditContext {
    pub k: f64,
    /// `1 - 1/M`; set for schemes whose step is `F_{alpha_n}`.
    pub monotone_above: Option<f64>,
    pub interval: Option<InvariantInterval>,
    /// Ball radius, set when the local invariance clauses pass.
    pub ball: Option<f64>,
    /// Band half-width `l/(1 - gamma) + BAND_MARGIN` in additive mode.
    pub band: Option<f64>,
}

impl AuditContext {
    pub fn new(model: &MapModel, scheme: &ControlScheme, lip: &LipschitzData, nu: f64) -> Self {
        let k = model.equilibrium();
        let threshold = 1.0 - 1.0 / lip.analysis_m();
        let interval = invariant_interval(model).ok();
        let mut ctx = Self {
            k,
            monotone_above: None,
            interval: None,
            ball: None,
            band: None,
        };
        match *scheme {
            ControlScheme::Uncontrolled => ctx.interval = interval,
            ControlScheme::DeterministicPbc(_) => {
                ctx.monotone_above = Some(threshold);
                ctx.interval = interval;
            }
            ControlScheme::MultiplicativePbc { alpha, l } => {
                ctx.monotone_above = Some(threshold);
                ctx.interval = interval;
                let lem3_5 = &admissible_multiplicative(alpha, lip, nu, Some(l))[3];
                if lem3_5.all_pass() {
                    ctx.ball = Some(lip.eps);
                }
            }
            ControlScheme::AdditivePbc { alpha, l } => {
                ctx.band = blur_bound(alpha, l, model).ok().map(|b| b + BAND_MARGIN);
            }
            ControlScheme::MapMultiplicative { .. } => {}
        }
        ctx
    }
}

/// Lists every violation in `traj`, in step order.
pub fn audit_trajectory(traj: &Trajectory, ctx: &AuditContext) -> Vec<Violation> {
    let k = ctx.k;
    let xs = &traj.values;
    let control = |n: usize| traj.controls.get(n).copied();
    let mut out = Vec::new();
    let mut in_interval = false;
    let mut in_ball = false;
    let mut in_band = false;
    for (n, &x) in xs.iter().enumerate() {
        let d = (x - k).abs();
        if n > 0 {
            let prev = xs[n - 1];
            let d_prev = (prev - k).abs();
            let a = control(n - 1);
            if let (Some(lo), Some(a)) = (ctx.monotone_above, a) {
                if a > lo && a < 1.0 && d > d_prev * (1.0 + MONOTONE_SLACK) {
                    out.push(Violation {
                        step: n,
                        kind: ViolationKind::Monotonicity,
                        magnitude: d - d_prev,
                    });
                }
            }
            if let Some(iv) = ctx.interval {
                let a_ok = a.map_or(true, |a| (0.0..=1.0).contains(&a));
                if in_interval && a_ok {
                    let below = iv.mu1 * (1.0 - TRAP_SLACK) - x;
                    let above = x - iv.mu2 * (1.0 + TRAP_SLACK);
                    if below > 0.0 || above > 0.0 {
                        out.push(Violation {
                            step: n,
                            kind: ViolationKind::Trapping,
                            magnitude: below.max(above),
                        });
                    }
                }
            }
            if let Some(eps) = ctx.ball {
                if in_ball && d >= eps {
                    out.push(Violation {
                        step: n,
                        kind: ViolationKind::EpsBall,
                        magnitude: d - eps,
                    });
                }
            }
            if let Some(r) = ctx.band {
                if in_band && d >= r {
                    out.push(Violation {
                        step: n,
                        kind: ViolationKind::Band,
                        magnitude: d - r,
                    });
                }
            }
        }
        in_interval |= ctx.interval.is_some_and(|iv| iv.contains(x));
        in_ball |= ctx.ball.is_some_and(|eps| d < eps);
        in_band |= ctx.band.is_some_and(|r| d < r);
    }
    out
}
