//! One-step transition kernels of the controlled recurrences.

use thiserror::Error;

use crate::maps::MapModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("control parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

fn in_unit(name: &'static str, v: f64) -> Result<(), ControlError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ControlError::OutOfRange {
            name,
            value: v,
            range: "[0, 1]",
        })
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<(), ControlError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ControlError::OutOfRange {
            name,
            value: v,
            range: "[0, inf)",
        })
    }
}

/// How the deterministic control sequence `alpha_n` is generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSequence {
    Constant(f64),
    /// `alpha_n` iid uniform on `[lo, hi]`, driven by the trajectory's
    /// uniform perturbation stream.
    IidOnInterval { lo: f64, hi: f64 },
}

/// Which recurrence advances the state.
///
/// `alpha + l nu <= 1` is deliberately not enforced: out-of-range runs are
/// legitimate experiments and the analysis module reports the violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlScheme {
    /// `x' = f(x)`
    Uncontrolled,
    /// `x' = F_{alpha_n}(x)`
    DeterministicPbc(AlphaSequence),
    /// `x' = max{F_{alpha + l xi}(x), 0}`
    MultiplicativePbc { alpha: f64, l: f64 },
    /// `x' = max{F_alpha(x) + l xi, 0}`
    AdditivePbc { alpha: f64, l: f64 },
    /// `x' = max{(1 + l xi) f(x), 0}`
    MapMultiplicative { l: f64 },
}

impl ControlScheme {
    pub fn validate(&self) -> Result<(), ControlError> {
        match *self {
            ControlScheme::Uncontrolled => Ok(()),
            ControlScheme::DeterministicPbc(AlphaSequence::Constant(a)) => in_unit("alpha", a),
            ControlScheme::DeterministicPbc(AlphaSequence::IidOnInterval { lo, hi }) => {
                in_unit("alpha_lo", lo)?;
                in_unit("alpha_hi", hi)?;
                if lo > hi {
                    return Err(ControlError::OutOfRange {
                        name: "alpha_lo",
                        value: lo,
                        range: "[0, alpha_hi]",
                    });
                }
                Ok(())
            }
            ControlScheme::MultiplicativePbc { alpha, l } | ControlScheme::AdditivePbc { alpha, l } => {
                in_unit("alpha", alpha)?;
                nonnegative("l", l)
            }
            ControlScheme::MapMultiplicative { l } => nonnegative("l", l),
        }
    }

    /// The nominal control parameter, where the scheme has one.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            ControlScheme::DeterministicPbc(AlphaSequence::Constant(a)) => Some(a),
            ControlScheme::MultiplicativePbc { alpha, .. } | ControlScheme::AdditivePbc { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn intensity(&self) -> f64 {
        match *self {
            ControlScheme::MultiplicativePbc { l, .. }
            | ControlScheme::AdditivePbc { l, .. }
            | ControlScheme::MapMultiplicative { l } => l,
            _ => 0.0,
        }
    }

    /// Whether each step has a realised control value `alpha_n`.
    pub fn has_control_values(&self) -> bool {
        matches!(
            self,
            ControlScheme::DeterministicPbc(_)
                | ControlScheme::MultiplicativePbc { .. }
                | ControlScheme::AdditivePbc { .. }
        )
    }
}

/// `F_alpha(x) = alpha x + (1 - alpha) f(x)`.
#[inline]
pub fn pbc_map(alpha: f64, model: &MapModel, x: f64) -> f64 {
    pbc_combine(alpha, x, model.eval(x))
}

#[inline]
fn pbc_combine(alpha: f64, x: f64, fx: f64) -> f64 {
    alpha * x + (1.0 - alpha) * fx
}

/// Result of one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: f64,
    /// The `max{., 0}` truncation fired.
    pub clamped: bool,
    /// Realised control value `alpha_n` for schemes that have one.
    pub control: Option<f64>,
}

#[inline]
fn truncate(v: f64) -> (f64, bool) {
    if v < 0.0 {
        (0.0, true)
    } else {
        (v, false)
    }
}

/// Advances `x` by one step of `scheme` with perturbation `xi`.
///
/// For `DeterministicPbc(IidOnInterval)` the perturbation is reused as the
/// uniform driver: `alpha_n = lo + (hi - lo) (xi + 1) / 2`, which expects
/// `xi` uniform on `[-1, 1]`.
#[inline]
pub fn step(model: &MapModel, scheme: &ControlScheme, x: f64, xi: f64) -> StepOutcome {
    let fx = model.eval(x);
    match *scheme {
        ControlScheme::Uncontrolled => StepOutcome {
            next: fx,
            clamped: false,
            control: None,
        },
        ControlScheme::DeterministicPbc(seq) => {
            let alpha = match seq {
                AlphaSequence::Constant(a) => a,
                AlphaSequence::IidOnInterval { lo, hi } => {
                    let u = (0.5 * (xi + 1.0)).clamp(0.0, 1.0);
                    lo + (hi - lo) * u
                }
            };
            StepOutcome {
                next: pbc_combine(alpha, x, fx),
                clamped: false,
                control: Some(alpha),
            }
        }
        ControlScheme::MultiplicativePbc { alpha, l } => {
            let a = alpha + l * xi;
            let (next, clamped) = truncate(pbc_combine(a, x, fx));
            StepOutcome {
                next,
                clamped,
                control: Some(a),
            }
        }
        ControlScheme::AdditivePbc { alpha, l } => {
            let (next, clamped) = truncate(pbc_combine(alpha, x, fx) + l * xi);
            StepOutcome {
                next,
                clamped,
                control: Some(alpha),
            }
        }
        ControlScheme::MapMultiplicative { l } => {
            let (next, clamped) = truncate((1.0 + l * xi) * fx);
            StepOutcome {
                next,
                clamped,
                control: None,
            }
        }
    }
}
