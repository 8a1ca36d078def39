//! One-dimensional population maps and their structural data.
//!
//! Every [`MapModel`] carries its positive equilibrium `K`, the critical point
//! `c < K` past which the map is non-increasing (when one exists), and the
//! upper truncation bound used by every numerical search. Lipschitz-type
//! constants of the ratio `|f(x) - K| / |x - K|` are estimated on demand.

use std::fmt;

use thiserror::Error;

use crate::numeric::{bisect, golden_max, grid_argmax};

/// Half-width of the window around `K` inside which the ratio
/// `|f(x) - K| / |x - K|` is replaced by its limit `|f'(K)|`.
pub const KINK_WINDOW: f64 = 1e-8;

/// Relative inflation applied to numerically estimated Lipschitz constants
/// before they enter any admissibility inequality.
pub const ESTIMATE_INFLATION: f64 = 1e-6;

const CRITICAL_GRID: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("assumption violation: {0}")]
    AssumptionViolation(String),
    #[error("no critical point below K = {equilibrium}: f is increasing up to its equilibrium")]
    NoCriticalPointBelowK { equilibrium: f64 },
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), MapError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(MapError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

/// Law of one piece of a [`PiecewiseMap`].
#[derive(Debug, Clone, PartialEq)]
pub enum PieceLaw {
    /// Coefficients in ascending powers of `x`.
    Polynomial(Vec<f64>),
    /// `s / (x + shift)` where `s` is fixed so the map is continuous at the
    /// start of the piece.
    Reciprocal { shift: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub law: PieceLaw,
    scale: f64,
}

/// A continuous map assembled from polynomial and reciprocal pieces.
///
/// The first piece starts at 0. A breakpoint belongs to the piece on its left,
/// so piece `i` covers `(start_i, start_{i+1}]`. Values are truncated at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMap {
    pieces: Vec<Piece>,
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_derivative(coefficients: &[f64], x: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * x + (i as f64) * c)
}

impl PiecewiseMap {
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self, MapError> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(MapError::InvalidParameter {
                name: "poly",
                value: f64::NAN,
                reason: "polynomial needs at least one finite coefficient",
            });
        }
        Ok(Self {
            pieces: vec![Piece {
                start: 0.0,
                law: PieceLaw::Polynomial(coefficients),
                scale: 1.0,
            }],
        })
    }

    fn last_start(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.start)
    }

    pub fn then_polynomial(mut self, start: f64, coefficients: Vec<f64>) -> Result<Self, MapError> {
        check("break", start, start > self.last_start(), "breakpoints must increase")?;
        let next = Self::polynomial(coefficients)?;
        self.pieces.push(Piece { start, ..next.pieces[0].clone() });
        Ok(self)
    }

    /// Appends `s / (x + shift)` on `(start, inf)` with `s` matched to the
    /// current value at `start`.
    pub fn then_reciprocal(mut self, start: f64, shift: f64) -> Result<Self, MapError> {
        check("break", start, start > self.last_start(), "breakpoints must increase")?;
        check("tail_shift", shift, start + shift > 0.0, "start + shift must be positive")?;
        let scale = self.eval_raw(start) * (start + shift);
        self.pieces.push(Piece {
            start,
            law: PieceLaw::Reciprocal { shift },
            scale,
        });
        Ok(self)
    }

    /// Singer's quartic with the continuous hyperbolic tail past 0.99.
    pub fn singer() -> Self {
        Self::polynomial(vec![0.0, 7.86, -23.31, 28.75, -13.30])
            .and_then(|m| m.then_reciprocal(0.99, 0.01))
            .expect("singer coefficients are valid")
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn locate(&self, x: f64) -> &Piece {
        self.pieces
            .iter()
            .rev()
            .find(|p| x > p.start)
            .unwrap_or(&self.pieces[0])
    }

    fn eval_raw(&self, x: f64) -> f64 {
        let piece = self.locate(x);
        match &piece.law {
            PieceLaw::Polynomial(c) => horner(c, x),
            PieceLaw::Reciprocal { shift } => piece.scale / (x + shift),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_raw(x).max(0.0)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if self.eval_raw(x) < 0.0 {
            return 0.0;
        }
        let piece = self.locate(x);
        match &piece.law {
            PieceLaw::Polynomial(c) => horner_derivative(c, x),
            PieceLaw::Reciprocal { shift } => -piece.scale / ((x + shift) * (x + shift)),
        }
    }
}

/// The registered map families.
#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `x e^{r(1-x)}`
    Ricker { r: f64 },
    /// `max{r x (1-x), 0}`
    TruncatedLogistic { r: f64 },
    /// `A x / (1 + B x^g)`
    BevertonHolt1 { a: f64, b: f64, exponent: f64 },
    /// `A x / (1 + B x)^g`
    BevertonHolt2 { a: f64, b: f64, exponent: f64 },
    /// Singer's quartic with a hyperbolic tail; see [`PiecewiseMap::singer`].
    Singer,
    Custom(PiecewiseMap),
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Ricker { r } => write!(f, "ricker(r={r})"),
            MapKind::TruncatedLogistic { r } => write!(f, "logistic(r={r})"),
            MapKind::BevertonHolt1 { a, b, exponent } => write!(f, "bh1(A={a}, B={b}, g={exponent})"),
            MapKind::BevertonHolt2 { a, b, exponent } => write!(f, "bh2(A={a}, B={b}, g={exponent})"),
            MapKind::Singer => write!(f, "singer"),
            MapKind::Custom(_) => write!(f, "custom"),
        }
    }
}

/// A map together with its equilibrium, critical point and search bound.
///
/// Immutable after construction; every method is a pure function.
#[derive(Debug, Clone, PartialEq)]
pub struct MapModel {
    kind: MapKind,
    table: Option<PiecewiseMap>,
    equilibrium: f64,
    critical: Option<f64>,
    peak_at: f64,
    peak: f64,
    domain_bound: f64,
}

impl MapModel {
    pub fn new(kind: MapKind) -> Result<Self, MapError> {
        match &kind {
            MapKind::Ricker { r } => check("r", *r, *r > 0.0, "Ricker needs r > 0")?,
            MapKind::TruncatedLogistic { r } => {
                check("r", *r, *r > 1.0, "logistic needs r > 1 for a positive equilibrium")?
            }
            MapKind::BevertonHolt1 { a, b, exponent } | MapKind::BevertonHolt2 { a, b, exponent } => {
                check("A", *a, *a > 1.0, "Beverton-Holt needs A > 1")?;
                check("B", *b, *b > 0.0, "Beverton-Holt needs B > 0")?;
                check("bh_gamma", *exponent, *exponent > 1.0, "Beverton-Holt needs exponent > 1")?;
            }
            MapKind::Singer | MapKind::Custom(_) => {}
        }
        let table = match &kind {
            MapKind::Singer => Some(PiecewiseMap::singer()),
            MapKind::Custom(p) => Some(p.clone()),
            _ => None,
        };
        let mut model = Self {
            kind,
            table,
            equilibrium: f64::NAN,
            critical: None,
            peak_at: f64::NAN,
            peak: f64::NAN,
            domain_bound: f64::NAN,
        };
        model.equilibrium = model.solve_equilibrium()?;
        model.critical = model.solve_critical();
        let (peak_at, peak) = match model.critical {
            Some(c) => (c, model.eval(c)),
            None => model.global_peak(),
        };
        model.peak_at = peak_at;
        model.peak = peak;
        model.domain_bound = (2.0 * model.equilibrium).max(1.01 * peak);
        Ok(model)
    }

    pub fn ricker(r: f64) -> Result<Self, MapError> {
        Self::new(MapKind::Ricker { r })
    }

    pub fn truncated_logistic(r: f64) -> Result<Self, MapError> {
        Self::new(MapKind::TruncatedLogistic { r })
    }

    pub fn beverton_holt1(a: f64, b: f64, exponent: f64) -> Result<Self, MapError> {
        Self::new(MapKind::BevertonHolt1 { a, b, exponent })
    }

    pub fn beverton_holt2(a: f64, b: f64, exponent: f64) -> Result<Self, MapError> {
        Self::new(MapKind::BevertonHolt2 { a, b, exponent })
    }

    pub fn singer() -> Self {
        Self::new(MapKind::Singer).expect("singer map is well formed")
    }

    pub fn custom(map: PiecewiseMap) -> Result<Self, MapError> {
        Self::new(MapKind::Custom(map))
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// `f(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Ricker { r } => x * (r * (1.0 - x)).exp(),
            MapKind::TruncatedLogistic { r } => (r * x * (1.0 - x)).max(0.0),
            MapKind::BevertonHolt1 { a, b, exponent } => a * x / (1.0 + b * x.powf(*exponent)),
            MapKind::BevertonHolt2 { a, b, exponent } => a * x / (1.0 + b * x).powf(*exponent),
            MapKind::Singer | MapKind::Custom(_) => self.table.as_ref().map_or(0.0, |t| t.eval(x)),
        }
    }

    /// Hand-coded `f'(x)`. One-sided at kinks (breakpoints, logistic at 1).
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Ricker { r } => (1.0 - r * x) * (r * (1.0 - x)).exp(),
            MapKind::TruncatedLogistic { r } => {
                if x <= 1.0 {
                    r * (1.0 - 2.0 * x)
                } else {
                    0.0
                }
            }
            MapKind::BevertonHolt1 { a, b, exponent } => {
                let p = b * x.powf(*exponent);
                a * (1.0 + (1.0 - exponent) * p) / ((1.0 + p) * (1.0 + p))
            }
            MapKind::BevertonHolt2 { a, b, exponent } => {
                a * (1.0 + b * x).powf(-exponent - 1.0) * (1.0 + (1.0 - exponent) * b * x)
            }
            MapKind::Singer | MapKind::Custom(_) => {
                self.table.as_ref().map_or(0.0, |t| t.derivative(x))
            }
        }
    }

    /// The positive equilibrium `K`.
    pub fn equilibrium(&self) -> f64 {
        self.equilibrium
    }

    /// The critical point `c < K` past which `f` is non-increasing.
    pub fn critical_point(&self) -> Result<f64, MapError> {
        self.critical.ok_or(MapError::NoCriticalPointBelowK {
            equilibrium: self.equilibrium,
        })
    }

    /// Location and value of the global maximum of `f`.
    pub fn peak(&self) -> (f64, f64) {
        (self.peak_at, self.peak)
    }

    /// Upper truncation of `[0, inf)` used by grid searches: `max(2K, 1.01 max f)`.
    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }

    fn solve_equilibrium(&self) -> Result<f64, MapError> {
        let k = match &self.kind {
            MapKind::Ricker { .. } => 1.0,
            MapKind::TruncatedLogistic { r } => 1.0 - 1.0 / r,
            MapKind::BevertonHolt1 { a, b, exponent } => ((a - 1.0) / b).powf(1.0 / exponent),
            MapKind::BevertonHolt2 { a, b, exponent } => (a.powf(1.0 / exponent) - 1.0) / b,
            MapKind::Singer | MapKind::Custom(_) => return self.bisect_equilibrium(),
        };
        Ok(k)
    }

    fn bisect_equilibrium(&self) -> Result<f64, MapError> {
        let gap = |x: f64| self.eval(x) - x;
        let lo = 1e-6;
        if gap(lo) <= 0.0 {
            return Err(MapError::AssumptionViolation(format!(
                "f(x) <= x near 0 (x = {lo}); no positive equilibrium bracket"
            )));
        }
        let mut hi = 1.0;
        while gap(hi) >= 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(MapError::AssumptionViolation(
                    "no sign change of f(x) - x found below 1e12".into(),
                ));
            }
        }
        bisect(gap, lo, hi, 0.0)
            .ok_or_else(|| MapError::AssumptionViolation("no sign change of f(x) - x".into()))
    }

    fn solve_critical(&self) -> Option<f64> {
        let k = self.equilibrium;
        match &self.kind {
            MapKind::Ricker { r } => (1.0 / r < k).then(|| 1.0 / r),
            MapKind::TruncatedLogistic { .. } => (0.5 < k).then_some(0.5),
            _ => {
                let f = |x: f64| self.eval(x);
                let (i, _) = grid_argmax(f, 0.0, k, CRITICAL_GRID);
                if i == CRITICAL_GRID {
                    return None;
                }
                let h = k / CRITICAL_GRID as f64;
                let lo = (i.saturating_sub(1) as f64) * h;
                let hi = ((i + 1) as f64 * h).min(k);
                let coarse = golden_max(f, lo, hi, 1e-11);
                // Polish on the sign change of f' where the bracket has one.
                let polished = bisect(|x| self.derivative(x), lo, hi, 1e-15)
                    .filter(|x| self.eval(*x) >= coarse.value - 1e-15);
                Some(polished.unwrap_or(coarse.x))
            }
        }
    }

    fn global_peak(&self) -> (f64, f64) {
        let hi = 4.0 * self.equilibrium.max(1.0);
        let n = 1 << 14;
        let f = |x: f64| self.eval(x);
        let (i, _) = grid_argmax(f, 0.0, hi, n);
        let h = hi / n as f64;
        let e = golden_max(f, (i.saturating_sub(1) as f64) * h, ((i + 1) as f64 * h).min(hi), 1e-11);
        (e.x, e.value)
    }

    fn ratio(&self, x: f64) -> f64 {
        let k = self.equilibrium;
        let d = x - k;
        if d.abs() < KINK_WINDOW {
            self.derivative(k).abs()
        } else {
            (self.eval(x) - k).abs() / d.abs()
        }
    }

    fn sup_ratio(&self, lo: f64, hi: f64, points: impl Iterator<Item = (usize, f64)>, last: usize) -> LipschitzEstimate {
        let mut best = (0usize, f64::NEG_INFINITY, lo);
        for (i, x) in points {
            let v = self.ratio(x);
            if v > best.1 {
                best = (i, v, x);
            }
        }
        let h = (hi - lo) / last as f64;
        let a = (lo + (best.0 as f64 - 1.0) * h).max(lo);
        let b = (lo + (best.0 as f64 + 1.0) * h).min(hi);
        let refined = golden_max(|x| self.ratio(x), a, b, 1e-12 * (1.0 + hi.abs()));
        let (value, argmax) = if refined.value > best.1 {
            (refined.value, refined.x)
        } else {
            (best.1, best.2)
        };
        LipschitzEstimate {
            value,
            argmax,
            tolerance: refined.width,
            grid_size: last,
            lo,
            hi,
        }
    }

    /// Sup of `|f(x) - K| / |x - K|` over `(0, search_bound]`.
    ///
    /// Uniform grid of `grid_size` points followed by a golden-section
    /// refinement around the grid argmax. The result is a lower bound of the
    /// true sup; `tolerance` is the width of the final refinement bracket.
    /// Intended for `grid_size >= 1000` and `search_bound >= 2K`.
    pub fn estimate_global_lipschitz(&self, search_bound: f64, grid_size: usize) -> LipschitzEstimate {
        debug_assert!(grid_size >= 1, "grid_size must be positive");
        let n = grid_size.max(1);
        let points = (1..=n).map(move |i| (i, search_bound * i as f64 / n as f64));
        self.sup_ratio(0.0, search_bound, points, n)
    }

    /// Sup of the same ratio over `(K - eps, K + eps) \ {K}`.
    pub fn estimate_local_lipschitz(&self, eps: f64, grid_size: usize) -> LipschitzEstimate {
        let n = grid_size.max(2);
        let k = self.equilibrium;
        let (lo, hi) = (k - eps, k + eps);
        let points = (1..n).map(move |i| (i, lo + (hi - lo) * i as f64 / n as f64));
        self.sup_ratio(lo, hi, points, n)
    }

    /// Grid check of positivity, the sign of `f(x) - x` on both sides of `K`,
    /// and monotone decrease on `[c, domain_bound]`.
    pub fn verify_assumptions(&self, grid_size: usize) -> AssumptionReport {
        let n = grid_size.max(10);
        let k = self.equilibrium;
        let bound = self.domain_bound;
        let grid = || (1..=n).map(|i| bound * i as f64 / n as f64);
        let near_k = |x: f64| (x - k).abs() <= 1e-9 * k;

        let positivity = grid().find(|&x| self.eval(x) <= 0.0);
        let above = grid().filter(|&x| x < k && !near_k(x)).find(|&x| self.eval(x) <= x);
        let below = grid().filter(|&x| x > k && !near_k(x)).find(|&x| self.eval(x) >= x);
        let monotone = match self.critical {
            Some(c) => {
                let step = (bound - c) / n as f64;
                (0..n)
                    .map(|i| (c + step * i as f64, c + step * (i + 1) as f64))
                    .find(|&(x, y)| self.eval(x) < self.eval(y) - 1e-12)
                    .map(|(x, _)| x)
            }
            None => {
                let step = (bound - k) / n as f64;
                let increase = (0..n)
                    .map(|i| (k + step * i as f64, k + step * (i + 1) as f64))
                    .find(|&(x, y)| self.eval(x) < self.eval(y))
                    .map(|(x, _)| x);
                Some(increase.unwrap_or(k))
            }
        };

        AssumptionReport {
            grid_size: n,
            clauses: vec![
                AssumptionClause::new("f(x) > 0 for x > 0", positivity),
                AssumptionClause::new("f(x) > x on (0, K)", above),
                AssumptionClause::new("f(x) < x on (K, bound]", below),
                AssumptionClause::new("f non-increasing on [c, bound]", monotone),
            ],
        }
    }
}

/// Output of a Lipschitz-type sup search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub argmax: f64,
    /// Width of the final golden-section bracket around `argmax`.
    pub tolerance: f64,
    pub grid_size: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LipschitzSource {
    Estimated,
    Given,
}

/// Global constant `M`, local constant `M_eps` and its half-width `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzData {
    pub m: f64,
    pub m_eps: f64,
    pub eps: f64,
    pub grid_size: Option<usize>,
    pub source: LipschitzSource,
}

impl LipschitzData {
    pub fn estimate(model: &MapModel, eps: f64, grid_size: usize, search_bound: Option<f64>) -> Self {
        let bound = search_bound.unwrap_or_else(|| model.domain_bound());
        let global = model.estimate_global_lipschitz(bound, grid_size);
        let local = model.estimate_local_lipschitz(eps, grid_size);
        Self {
            m: global.value,
            m_eps: local.value.min(global.value),
            eps,
            grid_size: Some(grid_size),
            source: LipschitzSource::Estimated,
        }
    }

    pub fn given(m: f64, m_eps: f64, eps: f64) -> Result<Self, MapError> {
        check("M", m, m >= 1.0, "M must be at least 1")?;
        check("M_eps", m_eps, m_eps >= 1.0 && m_eps <= m, "M_eps must lie in [1, M]")?;
        check("lip_eps", eps, eps > 0.0, "eps must be positive")?;
        Ok(Self {
            m,
            m_eps,
            eps,
            grid_size: None,
            source: LipschitzSource::Given,
        })
    }

    fn inflate(&self, v: f64) -> f64 {
        match self.source {
            LipschitzSource::Estimated => v * (1.0 + ESTIMATE_INFLATION),
            LipschitzSource::Given => v,
        }
    }

    /// `M` as used by the admissibility checks (inflated when estimated).
    pub fn analysis_m(&self) -> f64 {
        self.inflate(self.m)
    }

    pub fn analysis_m_eps(&self) -> f64 {
        self.inflate(self.m_eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionClause {
    pub name: &'static str,
    pub passed: bool,
    pub counterexample: Option<f64>,
}

impl AssumptionClause {
    fn new(name: &'static str, counterexample: Option<f64>) -> Self {
        Self {
            name,
            passed: counterexample.is_none(),
            counterexample,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub grid_size: usize,
    pub clauses: Vec<AssumptionClause>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn positivity(&self) -> &AssumptionClause {
        &self.clauses[0]
    }

    pub fn above_below_k(&self) -> (&AssumptionClause, &AssumptionClause) {
        (&self.clauses[1], &self.clauses[2])
    }

    pub fn monotone_decrease(&self) -> &AssumptionClause {
        &self.clauses[3]
    }
}
