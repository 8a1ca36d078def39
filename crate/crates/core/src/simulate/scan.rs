//! Empirical convergence over an `(alpha, l)` grid, next to the theoretical verdict.

use std::io::{self, Write};

use crate::analysis::{admissible_additive, admissible_multiplicative};
use crate::control::ControlScheme;
use crate::maps::{LipschitzData, MapModel};
use crate::noise::NoiseSpec;

use super::{run_ensemble, EnsembleConfig, SimError, Simulation};

/// Inclusive-endpoint tolerance of `lo:hi:step` ranges.
const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanScheme {
    Multiplicative,
    Additive,
}

impl ScanScheme {
    fn scheme(self, alpha: f64, l: f64) -> ControlScheme {
        match self {
            ScanScheme::Multiplicative => ControlScheme::MultiplicativePbc { alpha, l },
            ScanScheme::Additive => ControlScheme::AdditivePbc { alpha, l },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub alpha: Vec<f64>,
    pub l: Vec<f64>,
}

impl ScanGrid {
    /// `lo, lo + step, ...` up to `hi` inclusive (within 1e-12). `None` for an
    /// empty or unbounded range.
    pub fn range(lo: f64, hi: f64, step: f64) -> Option<Vec<f64>> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || hi < lo {
            return None;
        }
        if step <= 0.0 {
            return (lo == hi).then(|| vec![lo]);
        }
        let count = ((hi - lo) / step + RANGE_TOL).floor() as usize;
        let mut out: Vec<f64> = (0..=count).map(|i| lo + step * i as f64).collect();
        // land exactly on hi when it is a grid point
        if let Some(last) = out.last_mut() {
            if (*last - hi).abs() <= RANGE_TOL * (1.0 + hi.abs()) {
                *last = hi;
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub alpha: f64,
    pub l: f64,
    /// Fraction of trajectories within `eps` of `K` at the final step.
    pub frac: f64,
    pub admissible: bool,
}

/// Rows in row-major order: `alpha` outer, `l` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "alpha,l,frac,admissible")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.alpha, r.l, r.frac, u8::from(r.admissible))?;
        }
        Ok(())
    }
}

/// Admissible means some almost-sure convergence result covers the cell:
/// one of the multiplicative theorems, or the additive band lemma.
fn verdict(model: &MapModel, which: ScanScheme, lip: &LipschitzData, nu: f64, alpha: f64, l: f64) -> bool {
    match which {
        ScanScheme::Multiplicative => {
            let reports = admissible_multiplicative(alpha, lip, nu, Some(l));
            [0, 1, 2, 4].iter().any(|&i| reports[i].all_pass())
        }
        ScanScheme::Additive => admissible_additive(alpha, model, lip, nu, Some(l)).is_ok_and(|r| r.all_pass()),
    }
}

pub fn parameter_scan(
    model: &MapModel,
    which: ScanScheme,
    noise: &NoiseSpec,
    grid: &ScanGrid,
    lip: &LipschitzData,
    ensemble: &EnsembleConfig,
    eps: f64,
) -> Result<ScanTable, SimError> {
    let mut rows = Vec::with_capacity(grid.alpha.len() * grid.l.len());
    for &alpha in &grid.alpha {
        for &l in &grid.l {
            let sim = Simulation::new(model.clone(), which.scheme(alpha, l), *noise, eps)?;
            let e = run_ensemble(&sim, ensemble, None)?;
            rows.push(ScanRow {
                alpha,
                l,
                frac: e.convergence_fraction(eps, ensemble.n_steps),
                admissible: verdict(model, which, lip, noise.nu(), alpha, l),
            });
        }
    }
    Ok(ScanTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_endpoints() {
        let r = ScanGrid::range(0.1, 0.95, 0.05).unwrap();
        assert_eq!(r.len(), 18);
        assert_eq!(r[0], 0.1);
        assert_eq!(*r.last().unwrap(), 0.95);
        assert_eq!(ScanGrid::range(0.0, 0.2, 0.05).unwrap().len(), 5);
        assert_eq!(ScanGrid::range(0.3, 0.3, 0.0).unwrap(), vec![0.3]);
        assert!(ScanGrid::range(1.0, 0.0, 0.1).is_none());
    }

    #[test]
    fn identity_cell_stays_put() {
        let model = MapModel::ricker(5.0).unwrap();
        let lip = LipschitzData::given(12.87, 4.5, 0.06).unwrap();
        let grid = ScanGrid {
            alpha: vec![1.0],
            l: vec![0.0],
        };
        let ens = EnsembleConfig {
            x0: vec![0.3],
            n_steps: 50,
            n_traj: 4,
            threads: Some(1),
        };
        let noise = NoiseSpec::uniform(0);
        let t = parameter_scan(&model, ScanScheme::Multiplicative, &noise, &grid, &lip, &ens, 1e-3).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].frac, 0.0);
        assert!(!t.rows[0].admissible);

        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "alpha,l,frac,admissible\n1,0,0,0\n");
    }

    #[test]
    fn admissible_cells_converge() {
        let model = MapModel::ricker(5.0).unwrap();
        let lip = LipschitzData::given(12.87, 4.5, 0.06).unwrap();
        // global regime: alpha > 0.9223, l < min{alpha - 0.9223, 1 - alpha}
        let grid = ScanGrid {
            alpha: vec![0.95],
            l: vec![0.0, 0.02],
        };
        let ens = EnsembleConfig {
            x0: vec![0.3, 3.0],
            n_steps: 2000,
            n_traj: 20,
            threads: Some(2),
        };
        let noise = NoiseSpec::uniform(9);
        let t = parameter_scan(&model, ScanScheme::Multiplicative, &noise, &grid, &lip, &ens, 1e-3).unwrap();
        for r in &t.rows {
            assert!(r.admissible, "{r:?}");
            assert_eq!(r.frac, 1.0, "{r:?}");
        }
    }
}
