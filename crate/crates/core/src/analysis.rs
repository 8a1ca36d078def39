//! Derived constants and admissibility conditions for the controlled maps.
//!
//! Every condition is reported as a list of [`Clause`]s with a numeric margin
//! (positive means satisfied for strict inequalities) so callers can see how
//! close a parameter set is to a boundary. Strict inequalities are tested with
//! zero tolerance.

use std::fmt;

use thiserror::Error;

use crate::control::{AlphaSequence, ControlScheme};
use crate::maps::{LipschitzData, MapError, MapModel};
use crate::numeric::{floor_plus, golden_min};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("map does not satisfy the monotone-decrease assumption (see verify_assumptions): {0}")]
    Assumption(#[from] MapError),
    #[error("hypotheses fail: {}", failing(.0))]
    HypothesisFailure(Vec<Clause>),
    #[error("no contraction: gamma = {0} >= 1")]
    NoContraction(f64),
}

fn failing(clauses: &[Clause]) -> String {
    clauses
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} (margin {})", c.text, c.margin))
        .collect::<Vec<_>>()
        .join("; ")
}

/// One inequality with its evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub text: String,
    pub pass: bool,
    pub margin: f64,
}

impl Clause {
    /// Strict inequality `lhs > rhs`.
    fn gt(text: &str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            text: text.to_string(),
            pass: margin > 0.0,
            margin,
        }
    }

    /// Strict inequality `lhs < rhs`.
    fn lt(text: &str, lhs: f64, rhs: f64) -> Self {
        Self::gt(text, rhs, lhs)
    }

    fn le(text: &str, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            text: text.to_string(),
            pass: margin >= 0.0,
            margin,
        }
    }

    fn eq(text: &str, lhs: f64, rhs: f64) -> Self {
        let pass = lhs == rhs;
        Self {
            text: text.to_string(),
            pass,
            margin: if pass { 0.0 } else { -(lhs - rhs).abs() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Variable deterministic control, `alpha_n in [a, b]`.
    Lem2_1,
    /// Multiplicative noise, symmetric support, global constant only.
    Thm3_1,
    /// Multiplicative noise, symmetric support, local and global constants.
    Thm3_7Sym,
    /// Multiplicative noise, right-skewed support `nu > 1`.
    Thm3_7Skew,
    /// Local invariance of the `eps`-ball under multiplicative noise.
    Lem3_5,
    /// Almost sure entry into the `eps`-ball.
    Lem3_6,
    /// Additive noise: eventual blurred band around `K`.
    Lem4_1,
    /// Additive noise: intensity achieving a target half-width.
    Thm4_2,
}

impl Theorem {
    pub fn id(&self) -> &'static str {
        match self {
            Theorem::Lem2_1 => "lem2_1",
            Theorem::Thm3_1 => "thm3_1",
            Theorem::Thm3_7Sym => "thm3_7_sym",
            Theorem::Thm3_7Skew => "thm3_7_skew",
            Theorem::Lem3_5 => "lem3_5",
            Theorem::Lem3_6 => "lem3_6",
            Theorem::Lem4_1 => "lem4_1",
            Theorem::Thm4_2 => "thm4_2",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Conditions of one result, evaluated for a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub theorem: Theorem,
    /// Open interval of admissible intensities, `None` when empty.
    pub l_interval: Option<(f64, f64)>,
    /// Parameter clauses, followed by intensity clauses when an `l` was given.
    pub clause_results: Vec<Clause>,
}

impl AdmissibilityReport {
    pub fn all_pass(&self) -> bool {
        self.clause_results.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Clause> {
        self.clause_results.iter().filter(|c| !c.pass)
    }

    pub fn clause(&self, text: &str) -> Option<&Clause> {
        self.clause_results.iter().find(|c| c.text == text)
    }

    fn build(theorem: Theorem, fixed: Vec<Clause>, bounds: (f64, f64), l_clauses: Option<Vec<Clause>>) -> Self {
        let (lo, hi) = bounds;
        let l_interval = (fixed.iter().all(|c| c.pass) && lo < hi).then_some((lo, hi));
        let mut clause_results = fixed;
        clause_results.extend(l_clauses.unwrap_or_default());
        Self {
            theorem,
            l_interval,
            clause_results,
        }
    }
}

/// Endpoints of the invariant interval `[mu1, mu2]` and the peak location `mu0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantInterval {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl InvariantInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.mu1 <= x && x <= self.mu2
    }
}

/// `mu0` = smallest maximiser of `f` on `[0, c]`, `mu2 = f(mu0)`, `mu1 = f(mu2)`.
pub fn invariant_interval(model: &MapModel) -> Result<InvariantInterval, AnalysisError> {
    let c = model.critical_point()?;
    let mu0 = c;
    let mu2 = model.eval(mu0);
    let mu1 = model.eval(mu2);
    Ok(InvariantInterval { mu0, mu1, mu2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContractionMode {
    /// `alpha_n in [a, b]`: `gamma = max{b, 1 - a}`.
    DetVariable { a: f64, b: f64 },
    /// `gamma = max{alpha + l nu, 1 - alpha + l}`.
    Multiplicative,
    /// `gamma = max{alpha, 1 - alpha}`.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    pub gamma: f64,
    pub contracting: bool,
}

pub fn contraction_rate(alpha: f64, l: f64, nu: f64, mode: ContractionMode) -> Contraction {
    let gamma = match mode {
        ContractionMode::DetVariable { a, b } => b.max(1.0 - a),
        ContractionMode::Multiplicative => (alpha + l * nu).max(1.0 - alpha + l),
        ContractionMode::Additive => alpha.max(1.0 - alpha),
    };
    Contraction {
        gamma,
        contracting: gamma < 1.0,
    }
}

const M_TEXT: &str = "M > M_eps";
const M_EPS_TEXT: &str = "M_eps > 1";

/// Lemma-2.1-type conditions for a deterministic control sequence in `[a, b]`.
pub fn admissible_deterministic(a: f64, b: f64, lip: &LipschitzData) -> AdmissibilityReport {
    let m = lip.analysis_m();
    let fixed = vec![
        Clause::gt("a > 1 - 1/M", a, 1.0 - 1.0 / m),
        Clause::lt("b < 1", b, 1.0),
        Clause::le("a <= b", a, b),
    ];
    AdmissibilityReport::build(Theorem::Lem2_1, fixed, (0.0, f64::INFINITY), None)
}

/// All multiplicative-noise results for `(alpha, M, M_eps, nu)`.
///
/// Returns reports in the order Thm3_1, Thm3_7Sym, Thm3_7Skew, Lem3_5, Lem3_6.
/// When `l` is given, intensity clauses are evaluated at it.
pub fn admissible_multiplicative(alpha: f64, lip: &LipschitzData, nu: f64, l: Option<f64>) -> Vec<AdmissibilityReport> {
    let m = lip.analysis_m();
    let me = lip.analysis_m_eps();
    let global = 1.0 - 1.0 / m;
    let local = 1.0 - 1.0 / me;
    let at = |f: &dyn Fn(f64) -> Vec<Clause>| l.map(f);

    let thm3_1 = AdmissibilityReport::build(
        Theorem::Thm3_1,
        vec![
            Clause::eq("nu = 1", nu, 1.0),
            Clause::gt("alpha > 1 - 1/M", alpha, global),
            Clause::lt("alpha < 1", alpha, 1.0),
        ],
        (0.0, (alpha - global).min(1.0 - alpha)),
        at(&|l| {
            vec![
                Clause::lt("l < alpha - (1 - 1/M)", l, alpha - global),
                Clause::lt("l < 1 - alpha", l, 1.0 - alpha),
            ]
        }),
    );

    let sym_lo = (global - alpha).max(0.0);
    let thm3_7_sym = AdmissibilityReport::build(
        Theorem::Thm3_7Sym,
        vec![
            Clause::eq("nu = 1", nu, 1.0),
            Clause::gt(M_TEXT, m, me),
            Clause::gt(M_EPS_TEXT, me, 1.0),
            Clause::gt("alpha > 1 - 1/(2 M_eps) - 1/(2 M)", alpha, 1.0 - 0.5 / me - 0.5 / m),
            Clause::lt("alpha < 1", alpha, 1.0),
        ],
        (sym_lo, (alpha - local).min(1.0 - alpha)),
        at(&|l| {
            vec![
                Clause::gt("l > max{1 - 1/M - alpha, 0}", l, sym_lo),
                Clause::lt("l < alpha - (1 - 1/M_eps)", l, alpha - local),
                Clause::lt("l < 1 - alpha", l, 1.0 - alpha),
            ]
        }),
    );

    let skew_lo = (global - alpha).max(0.0) / nu;
    let skew_hi = (alpha - local).min((1.0 - alpha) / nu);
    let thm3_7_skew = AdmissibilityReport::build(
        Theorem::Thm3_7Skew,
        vec![
            Clause::gt("nu > 1", nu, 1.0),
            Clause::gt(M_TEXT, m, me),
            Clause::gt(M_EPS_TEXT, me, 1.0),
            Clause::gt("alpha > 1 - 1/M_eps", alpha, local),
            Clause::lt("alpha < 1", alpha, 1.0),
            Clause::lt(
                "1 - 1/M - alpha < nu (alpha - (1 - 1/M_eps))",
                global - alpha,
                nu * (alpha - local),
            ),
        ],
        (skew_lo, skew_hi),
        at(&|l| {
            vec![
                Clause::gt("l > max{1 - 1/M - alpha, 0}/nu", l, skew_lo),
                Clause::lt("l < alpha - (1 - 1/M_eps)", l, alpha - local),
                Clause::lt("l < (1 - alpha)/nu", l, (1.0 - alpha) / nu),
            ]
        }),
    );

    let lem3_5 = AdmissibilityReport::build(
        Theorem::Lem3_5,
        vec![
            Clause::gt(M_EPS_TEXT, me, 1.0),
            Clause::gt("alpha > 1 - 1/M_eps", alpha, local),
            Clause::lt("alpha < 1", alpha, 1.0),
        ],
        (0.0, skew_hi),
        at(&|l| {
            vec![
                Clause::lt("l < alpha - (1 - 1/M_eps)", l, alpha - local),
                Clause::lt("l < (1 - alpha)/nu", l, (1.0 - alpha) / nu),
            ]
        }),
    );

    let lem3_6 = AdmissibilityReport::build(
        Theorem::Lem3_6,
        vec![Clause::gt(M_EPS_TEXT, me, 1.0), Clause::gt(M_TEXT, m, me)],
        (skew_lo, skew_hi),
        at(&|l| {
            vec![
                Clause::gt("alpha - l > 1 - 1/M_eps", alpha - l, local),
                Clause::gt("alpha + nu*l > 1 - 1/M", alpha + nu * l, global),
                Clause::lt("alpha + nu*l < 1", alpha + nu * l, 1.0),
            ]
        }),
    );

    vec![thm3_1, thm3_7_sym, thm3_7_skew, lem3_5, lem3_6]
}

fn additive_fixed(alpha: f64, nu: f64, m: f64) -> Vec<Clause> {
    vec![
        Clause::eq("nu = 1", nu, 1.0),
        Clause::gt("alpha > 1 - 1/M", alpha, 1.0 - 1.0 / m),
        Clause::lt("alpha < 1", alpha, 1.0),
    ]
}

/// Blurred-band conditions for additive noise: `l < (1 - gamma)(K - c)`.
pub fn admissible_additive(
    alpha: f64,
    model: &MapModel,
    lip: &LipschitzData,
    nu: f64,
    l: Option<f64>,
) -> Result<AdmissibilityReport, AnalysisError> {
    let k = model.equilibrium();
    let c = model.critical_point()?;
    let gamma = contraction_rate(alpha, 0.0, nu, ContractionMode::Additive).gamma;
    let hi = (1.0 - gamma) * (k - c);
    Ok(AdmissibilityReport::build(
        Theorem::Lem4_1,
        additive_fixed(alpha, nu, lip.analysis_m()),
        (0.0, hi),
        l.map(|l| vec![Clause::lt("l < (1 - gamma)(K - c)", l, hi)]),
    ))
}

/// Largest `l` for which trajectories eventually stay within `eps1` of `K`:
/// `min{(eps1/2)(1 - gamma), (1 - gamma)(K - c)}`.
pub fn max_additive_intensity(alpha: f64, model: &MapModel, eps1: f64) -> Result<f64, AnalysisError> {
    let k = model.equilibrium();
    let c = model.critical_point()?;
    let gamma = contraction_rate(alpha, 0.0, 1.0, ContractionMode::Additive).gamma;
    if gamma >= 1.0 {
        return Err(AnalysisError::NoContraction(gamma));
    }
    Ok((0.5 * eps1 * (1.0 - gamma)).min((1.0 - gamma) * (k - c)))
}

pub fn additive_target(
    alpha: f64,
    model: &MapModel,
    lip: &LipschitzData,
    nu: f64,
    eps1: f64,
    l: Option<f64>,
) -> Result<AdmissibilityReport, AnalysisError> {
    let mut fixed = additive_fixed(alpha, nu, lip.analysis_m());
    fixed.push(Clause::gt("eps1 > 0", eps1, 0.0));
    let l_max = if eps1 > 0.0 && alpha > 0.0 && alpha < 1.0 {
        max_additive_intensity(alpha, model, eps1)?
    } else {
        0.0
    };
    Ok(AdmissibilityReport::build(
        Theorem::Thm4_2,
        fixed,
        (0.0, l_max),
        l.map(|l| {
            vec![Clause::le(
                "l <= min{(eps1/2)(1 - gamma), (1 - gamma)(K - c)}",
                l,
                l_max,
            )]
        }),
    ))
}

/// Half-width `l / (1 - gamma)` of the blurred equilibrium under additive noise.
pub fn blur_bound(alpha: f64, l: f64, model: &MapModel) -> Result<f64, AnalysisError> {
    model.critical_point()?;
    let gamma = contraction_rate(alpha, l, 1.0, ContractionMode::Additive).gamma;
    if gamma >= 1.0 {
        return Err(AnalysisError::NoContraction(gamma));
    }
    Ok(l / (1.0 - gamma))
}

/// Constants of the hitting-time argument for multiplicative noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingConstants {
    /// `min (f(x) - x)` over `[mu1, c]`.
    pub d1: f64,
    /// Steps that suffice to climb from `[mu1, c]` to `[c, mu2]`.
    pub n1: u64,
    /// Steps that suffice to contract from `[c, mu2]` into the `eps`-ball.
    pub n2: u64,
    /// Midpoint of `(1 - 1/M, alpha + l nu)`.
    pub a1: f64,
    pub gamma: f64,
    /// `[2c / l] + 1`; `None` for `l = 0`.
    pub r: Option<u64>,
    /// `min{a, 1 - b} / 2` with `a = alpha - l`, `b = alpha + l nu`.
    pub delta: f64,
    pub alpha: f64,
    pub l: f64,
    pub nu: f64,
    pub eps: f64,
}

/// Computes `d1, N1, N2, a1` and `r` for `(alpha, l, nu, eps)`.
///
/// The hypotheses `alpha - l > 1 - 1/M_eps` and `1 - 1/M < alpha + l nu < 1`
/// must hold unless `force` is set; otherwise the failing clauses are returned.
pub fn hitting_constants(
    model: &MapModel,
    lip: &LipschitzData,
    alpha: f64,
    l: f64,
    nu: f64,
    eps: f64,
    force: bool,
) -> Result<HittingConstants, AnalysisError> {
    let interval = invariant_interval(model)?;
    let k = model.equilibrium();
    let c = model.critical_point()?;
    let m = lip.analysis_m();
    let reports = admissible_multiplicative(alpha, lip, nu, Some(l));
    let lem3_6 = &reports[4];
    if !force {
        let mut clauses = lem3_6.clause_results.clone();
        clauses.push(Clause::gt("eps > 0", eps, 0.0));
        clauses.push(Clause::lt("eps < K", eps, k));
        if clauses.iter().any(|c| !c.pass) {
            return Err(AnalysisError::HypothesisFailure(clauses));
        }
    }

    let gap = |x: f64| model.eval(x) - x;
    let lo = interval.mu1.min(c);
    let d1 = golden_min(gap, lo, c, 1e-12 * (1.0 + c)).value;
    let n1 = floor_plus((c - interval.mu1) / ((1.0 - alpha - nu * l) * d1), 1);
    let gamma = contraction_rate(alpha, l, nu, ContractionMode::Multiplicative).gamma;
    let spread = ((k - c) / eps).max((interval.mu2 - k) / eps).max(1.0);
    let n2 = floor_plus(spread.ln() / (-gamma.ln()), 2);
    let a1 = 0.5 * ((1.0 - 1.0 / m) + (alpha + l * nu));
    let r = (l > 0.0).then(|| floor_plus(2.0 * c / l, 1));
    let delta = 0.5 * (alpha - l).min(1.0 - (alpha + l * nu));
    Ok(HittingConstants {
        d1,
        n1,
        n2,
        a1,
        gamma,
        r,
        delta,
        alpha,
        l,
        nu,
        eps,
    })
}

/// Everything the analysis derives for one `(model, scheme, noise)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub k: f64,
    pub c: f64,
    pub interval: InvariantInterval,
    pub gamma: Option<Contraction>,
    pub hitting: Option<Result<HittingConstants, AnalysisError>>,
    pub blur_radius: Option<f64>,
}

impl DerivedConstants {
    pub fn compute(
        model: &MapModel,
        scheme: &ControlScheme,
        lip: &LipschitzData,
        nu: f64,
        eps: f64,
        force: bool,
    ) -> Result<Self, AnalysisError> {
        let interval = invariant_interval(model)?;
        let c = model.critical_point()?;
        let (gamma, hitting, blur_radius) = match *scheme {
            ControlScheme::MultiplicativePbc { alpha, l } => (
                Some(contraction_rate(alpha, l, nu, ContractionMode::Multiplicative)),
                Some(hitting_constants(model, lip, alpha, l, nu, eps, force)),
                None,
            ),
            ControlScheme::AdditivePbc { alpha, l } => (
                Some(contraction_rate(alpha, l, nu, ContractionMode::Additive)),
                None,
                blur_bound(alpha, l, model).ok(),
            ),
            ControlScheme::DeterministicPbc(seq) => {
                let (a, b) = match seq {
                    AlphaSequence::Constant(a) => (a, a),
                    AlphaSequence::IidOnInterval { lo, hi } => (lo, hi),
                };
                (
                    Some(contraction_rate(a, 0.0, nu, ContractionMode::DetVariable { a, b })),
                    None,
                    None,
                )
            }
            ControlScheme::Uncontrolled | ControlScheme::MapMultiplicative { .. } => (None, None, None),
        };
        Ok(Self {
            k: model.equilibrium(),
            c,
            interval,
            gamma,
            hitting,
            blur_radius,
        })
    }

    /// `name value` pairs in a fixed order.
    pub fn lines(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("K".to_string(), self.k.to_string()),
            ("c".to_string(), self.c.to_string()),
            ("mu0".to_string(), self.interval.mu0.to_string()),
            ("mu1".to_string(), self.interval.mu1.to_string()),
            ("mu2".to_string(), self.interval.mu2.to_string()),
        ];
        if let Some(g) = self.gamma {
            out.push(("gamma".into(), g.gamma.to_string()));
            out.push(("contracting".into(), g.contracting.to_string()));
        }
        if let Some(Ok(h)) = &self.hitting {
            out.push(("d1".into(), h.d1.to_string()));
            out.push(("N1".into(), h.n1.to_string()));
            out.push(("N2".into(), h.n2.to_string()));
            out.push(("a1".into(), h.a1.to_string()));
            out.push(("delta".into(), h.delta.to_string()));
            out.push((
                "r".into(),
                h.r.map_or_else(|| "none".to_string(), |r| r.to_string()),
            ));
        }
        if let Some(b) = self.blur_radius {
            out.push(("blur_radius".into(), b.to_string()));
        }
        out
    }
}
