//! Invariants of maps, noise, kernels, analysis and ensembles.

use pbc::analysis::{
    admissible_multiplicative, contraction_rate, hitting_constants, invariant_interval, AdmissibilityReport,
    ContractionMode,
};
use pbc::control::{step, AlphaSequence, ControlScheme};
use pbc::maps::{LipschitzData, MapModel};
use pbc::noise::{skewed_from_uniform, NoiseSpec, DEFAULT_SEED};
use pbc::simulate::{run_ensemble, AuditContext, EnsembleConfig, Simulation};
use proptest::prelude::*;

fn registry() -> Vec<MapModel> {
    vec![
        MapModel::ricker(5.0).unwrap(),
        MapModel::ricker(2.5).unwrap(),
        MapModel::truncated_logistic(3.0).unwrap(),
        MapModel::truncated_logistic(4.0).unwrap(),
        MapModel::beverton_holt1(3.0, 2.0, 2.0).unwrap(),
        MapModel::beverton_holt1(20.0, 1.0, 4.0).unwrap(),
        MapModel::beverton_holt2(10.0, 1.0, 3.0).unwrap(),
        MapModel::singer(),
    ]
}

fn ricker_lip() -> LipschitzData {
    LipschitzData::given(12.87, 4.5, 0.06).unwrap()
}

fn ensemble(x0: Vec<f64>, n_steps: usize, n_traj: usize) -> EnsembleConfig {
    EnsembleConfig {
        x0,
        n_steps,
        n_traj,
        threads: None,
    }
}

#[test]
fn global_lipschitz_bounds_random_points() {
    for (i, model) in registry().into_iter().enumerate() {
        let k = model.equilibrium();
        let bound = model.domain_bound();
        let m = model.estimate_global_lipschitz(bound, 100_000).value;
        let mut u = NoiseSpec::uniform(DEFAULT_SEED).derive_stream(i as u64);
        for _ in 0..100_000 {
            let x = bound * (1.0 - u.next_unit());
            if x == k {
                continue;
            }
            let ratio = (model.eval(x) - k).abs() / (x - k).abs();
            assert!(ratio <= m * (1.0 + 1e-9), "{} at x={x}: {ratio} > {m}", model.kind());
        }
    }
}

#[test]
fn equilibria_are_fixed_points() {
    for model in registry() {
        let k = model.equilibrium();
        assert!((model.eval(k) - k).abs() < 1e-10, "{}", model.kind());
    }
}

#[test]
fn singer_tail_is_continuous() {
    let f = MapModel::singer();
    let a = 7.86 * 0.99 - 23.31 * 0.99f64.powi(2) + 28.75 * 0.99f64.powi(3) - 13.30 * 0.99f64.powi(4);
    assert!((a - 100.0 * a / (100.0 * 0.99 + 1.0)).abs() < 1e-12);
    assert!((f.eval(0.99) - a).abs() < 1e-15);
    assert!((f.eval(0.99 + 1e-12) - a).abs() < 1e-10);
}

#[test]
fn monotone_decrease_past_critical_point() {
    for model in registry() {
        let Ok(c) = model.critical_point() else { continue };
        let bound = model.domain_bound();
        let n = 100_000;
        let mut prev = model.eval(c);
        for i in 1..=n {
            let x = c + (bound - c) * i as f64 / n as f64;
            let fx = model.eval(x);
            assert!(fx <= prev + 1e-12, "{} increases at {x}", model.kind());
            prev = fx;
        }
    }
}

#[test]
fn mu_chain_is_invariant() {
    for model in registry() {
        let Ok(iv) = invariant_interval(&model) else { continue };
        let k = model.equilibrium();
        assert!(iv.mu1 < k && k < iv.mu2, "{}", model.kind());
        let n = 200_000;
        for i in 0..=n {
            let x = iv.mu1 + (iv.mu2 - iv.mu1) * i as f64 / n as f64;
            let fx = model.eval(x);
            assert!(fx <= iv.mu2 * (1.0 + 1e-12) && fx >= iv.mu1 * (1.0 - 1e-12), "{} at {x}", model.kind());
        }
        assert!(model.eval(iv.mu1) >= iv.mu1 && model.eval(iv.mu2) >= iv.mu1);
    }
}

#[test]
fn bounded_support_exact() {
    let specs = [NoiseSpec::uniform(3), NoiseSpec::skewed(5.0, 3).unwrap()];
    for spec in specs {
        let nu = spec.nu();
        let mut s = spec.derive_stream(0);
        for _ in 0..10_000_000 {
            let xi = s.sample();
            assert!((-1.0..=nu).contains(&xi), "{xi}");
        }
    }
}

#[test]
fn skewed_law_median_is_zero() {
    let n = 1_000_000;
    let mut s = NoiseSpec::skewed(5.0, DEFAULT_SEED).unwrap().derive_stream(7);
    let neg = (0..n).filter(|_| s.sample_skewed().unwrap() < 0.0).count();
    let sigma = (0.25 / n as f64).sqrt();
    assert!((neg as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
}

fn check_interval(report: &AdmissibilityReport, reeval: impl Fn(f64) -> AdmissibilityReport) {
    match report.l_interval {
        Some((lo, hi)) => {
            assert!(lo < hi);
            for i in 0..100 {
                let l = lo + (hi - lo) * (i as f64 + 0.5) / 100.0;
                let r = reeval(l);
                assert!(r.all_pass(), "{:?} at l={l}: {:?}", r.theorem, r.failed().collect::<Vec<_>>());
            }
        }
        None => {
            for i in 1..=100 {
                let l = i as f64 / 100.0;
                assert!(!reeval(l).all_pass(), "{:?} passes at l={l} with empty interval", report.theorem);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_in_support(seed in any::<u64>(), index in 0u64..1000, nu in 1.0f64..20.0) {
        let mut s = NoiseSpec::skewed(nu, seed).unwrap().derive_stream(index);
        for _ in 0..1000 {
            let xi = s.sample();
            prop_assert!((-1.0..=nu).contains(&xi));
        }
        let mut u = NoiseSpec::uniform(seed).derive_stream(index);
        for _ in 0..1000 {
            let xi = u.sample();
            prop_assert!((-1.0..=1.0).contains(&xi));
        }
    }

    #[test]
    fn skewed_sign_follows_zeta(zeta in 1e-9f64..(1.0 - 1e-9), nu in 1.0f64..10.0) {
        let xi = skewed_from_uniform(zeta, nu);
        prop_assert_eq!(zeta < 0.5, xi < 0.0);
    }

    #[test]
    fn kernels_fix_equilibrium(
        which in 0usize..8,
        alpha in 0.0f64..1.0,
        l in 0.0f64..0.5,
        xi in -1.0f64..1.0,
    ) {
        let model = &registry()[which];
        let k = model.equilibrium();
        for s in [
            ControlScheme::MultiplicativePbc { alpha, l },
            ControlScheme::DeterministicPbc(AlphaSequence::Constant(alpha)),
            ControlScheme::DeterministicPbc(AlphaSequence::IidOnInterval { lo: alpha * 0.5, hi: alpha }),
        ] {
            let out = step(model, &s, k, xi);
            prop_assert!((out.next - k).abs() <= 1e-14 * k.max(1.0), "{:?}", s);
        }
    }

    #[test]
    fn zero_intensity_schemes_coincide(
        which in 0usize..8,
        alpha in 0.0f64..1.0,
        x in 1e-6f64..5.0,
        xi in -1.0f64..1.0,
    ) {
        let model = &registry()[which];
        let m = step(model, &ControlScheme::MultiplicativePbc { alpha, l: 0.0 }, x, xi).next;
        let a = step(model, &ControlScheme::AdditivePbc { alpha, l: 0.0 }, x, xi).next;
        let d = step(model, &ControlScheme::DeterministicPbc(AlphaSequence::Constant(alpha)), x, xi).next;
        prop_assert_eq!(m.to_bits(), a.to_bits());
        prop_assert_eq!(m.to_bits(), d.to_bits());
    }

    #[test]
    fn bracket_identity(
        which in 0usize..8,
        alpha in 0.0f64..1.0,
        l in 0.0f64..0.3,
        x in 1e-6f64..5.0,
        xi in -1.0f64..1.0,
    ) {
        let model = &registry()[which];
        let out = step(model, &ControlScheme::MultiplicativePbc { alpha, l }, x, xi);
        if !out.clamped {
            let fx = model.eval(x);
            let alt = x + (1.0 - alpha - l * xi) * (fx - x);
            prop_assert!((out.next - alt).abs() <= 1e-12 * (1.0 + x.abs() + fx.abs()));
        }
    }

    #[test]
    fn local_constant_grows_with_radius(e1 in 0.005f64..0.5, e2 in 0.005f64..0.5) {
        let model = MapModel::ricker(5.0).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = model.estimate_local_lipschitz(lo, 20_000).value;
        let b = model.estimate_local_lipschitz(hi, 20_000).value;
        prop_assert!(a <= b * (1.0 + 1e-9), "M({lo})={a} > M({hi})={b}");
    }

    #[test]
    fn interval_consistency(
        alpha in 0.5f64..1.0,
        m in 1.5f64..20.0,
        ratio in 0.1f64..0.99,
        nu in prop_oneof![Just(1.0), 1.0f64..8.0],
        m_eps_unit in 0.0f64..1.0,
    ) {
        let m_eps = 1.0 + (m * ratio - 1.0).max(0.0) * m_eps_unit + 1e-3;
        let m_eps = m_eps.min(m);
        let lip = LipschitzData::given(m, m_eps, 0.05).unwrap();
        let reports = admissible_multiplicative(alpha, &lip, nu, None);
        for (i, r) in reports.iter().enumerate() {
            check_interval(r, |l| admissible_multiplicative(alpha, &lip, nu, Some(l))[i].clone());
        }
    }

    #[test]
    fn gamma_forms_agree(alpha in 0.0f64..1.0) {
        let mult = contraction_rate(alpha, 0.0, 1.0, ContractionMode::Multiplicative).gamma;
        let det = contraction_rate(alpha, 0.0, 1.0, ContractionMode::DetVariable { a: alpha, b: alpha }).gamma;
        let add = contraction_rate(alpha, 0.3, 1.0, ContractionMode::Additive).gamma;
        prop_assert_eq!(mult, det);
        prop_assert_eq!(mult, alpha.max(1.0 - alpha));
        prop_assert_eq!(add, mult);
    }

    #[test]
    fn n2_suffices(alpha in 0.93f64..0.99, l in 0.0f64..0.005, eps in 0.001f64..0.5) {
        let model = MapModel::ricker(5.0).unwrap();
        let h = hitting_constants(&model, &ricker_lip(), alpha, l, 1.0, eps, true).unwrap();
        prop_assume!(h.gamma < 1.0);
        let iv = invariant_interval(&model).unwrap();
        let spread = (1.0f64 - 0.2).max(iv.mu2 - 1.0);
        prop_assert!(h.gamma.powf(h.n2 as f64) * spread < eps);
    }
}

#[test]
fn trajectory_shape_and_trapping_order() {
    let model = MapModel::ricker(5.0).unwrap();
    let sim = Simulation::new(
        model,
        ControlScheme::MultiplicativePbc { alpha: 0.8, l: 0.02 },
        NoiseSpec::uniform(DEFAULT_SEED),
        1e-3,
    )
    .unwrap();
    let e = run_ensemble(&sim, &ensemble(vec![0.3, 0.05, 4.0, 10.0], 300, 200), None).unwrap();
    for t in &e.trajectories {
        assert_eq!(t.values[0], t.x0);
        assert_eq!(t.values.len(), 301);
        if let (Some(mu), Some(eps)) = (t.first_entry_mu, t.first_entry_eps) {
            assert!(mu <= eps);
        }
    }
}

#[test]
fn ensembles_identical_across_thread_counts() {
    let model = MapModel::ricker(5.0).unwrap();
    let lip = ricker_lip();
    for scheme in [
        ControlScheme::MultiplicativePbc { alpha: 0.5, l: 0.2 },
        ControlScheme::AdditivePbc { alpha: 0.93, l: 0.02 },
    ] {
        let ctx = AuditContext::new(&model, &scheme, &lip, 1.0);
        let sim = Simulation::new(model.clone(), scheme, NoiseSpec::uniform(11), 1e-3).unwrap();
        let run = |threads| {
            let cfg = EnsembleConfig {
                threads: Some(threads),
                ..ensemble(vec![0.3, 1.7], 500, 64)
            };
            run_ensemble(&sim, &cfg, Some(&ctx)).unwrap()
        };
        let one = run(1);
        let mut a = Vec::new();
        let mut b = Vec::new();
        one.stats.write_csv(&mut a).unwrap();
        for threads in [2, 3, 8] {
            let other = run(threads);
            b.clear();
            other.stats.write_csv(&mut b).unwrap();
            assert_eq!(a, b);
            assert_eq!(one, other);
        }
    }
}

#[test]
fn auditor_silent_on_compliant_configs() {
    let model = MapModel::ricker(5.0).unwrap();
    let lip = ricker_lip();
    // global regime (alpha > 0.9223, l < min{alpha - 0.9223, 1 - alpha}),
    // alpha = 0.8 with l = 0.02, and an additive run inside the band.
    let cases = [
        (ControlScheme::MultiplicativePbc { alpha: 0.95, l: 0.02 }, vec![0.3, 2.0, 8.0]),
        (ControlScheme::MultiplicativePbc { alpha: 0.8, l: 0.02 }, vec![0.3]),
        (ControlScheme::AdditivePbc { alpha: 0.93, l: 0.02 }, vec![0.3, 5.0]),
    ];
    for (scheme, x0) in cases {
        let ctx = AuditContext::new(&model, &scheme, &lip, 1.0);
        let sim = Simulation::new(model.clone(), scheme, NoiseSpec::uniform(DEFAULT_SEED), 1e-6).unwrap();
        let e = run_ensemble(&sim, &ensemble(x0, 10_000, 100), Some(&ctx)).unwrap();
        let v: Vec<_> = e.all_violations().take(3).collect();
        assert!(v.is_empty(), "{scheme:?}: {v:?}");
    }
}

#[test]
fn convergence_fraction_monotone_in_eps_and_n() {
    // alpha = 0.9, l = 0.05 lies in the symmetric local regime for M = 12.87, M_eps = 4.5
    let model = MapModel::ricker(5.0).unwrap();
    let scheme = ControlScheme::MultiplicativePbc { alpha: 0.9, l: 0.05 };
    let lip = ricker_lip();
    assert!(admissible_multiplicative(0.9, &lip, 1.0, Some(0.05))[1].all_pass());
    let sim = Simulation::new(model, scheme, NoiseSpec::uniform(DEFAULT_SEED), 1e-6).unwrap();
    let e = run_ensemble(&sim, &ensemble(vec![0.3, 3.0], 400, 200), None).unwrap();
    let n = 400;
    let mut prev = 0.0;
    for eps in [1e-12, 1e-9, 1e-6, 1e-3, 1e-1, 1.0] {
        let f = e.convergence_fraction(eps, n);
        assert!(f >= prev, "fraction drops at eps={eps}");
        prev = f;
    }
    let from = e.stats.entry_eps.max.expect("all trajectories enter");
    for m in from..n {
        assert!(e.stats.frac_eps[m + 1] >= e.stats.frac_eps[m], "drop at step {m}");
    }
}

#[test]
fn larger_intensity_stabilises_half_control() {
    let model = MapModel::ricker(5.0).unwrap();
    let fracs: Vec<f64> = [0.0, 0.05, 0.1, 0.2]
        .iter()
        .map(|&l| {
            let s = ControlScheme::MultiplicativePbc { alpha: 0.5, l };
            let sim = Simulation::new(model.clone(), s, NoiseSpec::uniform(DEFAULT_SEED), 1e-3).unwrap();
            run_ensemble(&sim, &ensemble(vec![0.3], 2000, 1000), None)
                .unwrap()
                .convergence_fraction(1e-3, 2000)
        })
        .collect();
    for w in fracs.windows(2) {
        assert!(w[1] >= w[0] - 0.05, "{fracs:?}");
    }
}

#[test]
fn clamp_never_fires_inside_unit_controls() {
    let mut u = NoiseSpec::uniform(DEFAULT_SEED).derive_stream(99);
    for model in registry() {
        let bound = model.domain_bound();
        for _ in 0..125_000 {
            let alpha = 0.05 + 0.9 * u.next_unit();
            let cap = (alpha.min(1.0 - alpha)) * 0.999;
            let l = cap * u.next_unit();
            let x = bound * (1.0 - u.next_unit());
            let xi = 2.0 * u.next_unit() - 1.0;
            let out = step(&model, &ControlScheme::MultiplicativePbc { alpha, l }, x, xi);
            assert!(!out.clamped && out.next > 0.0, "{} alpha={alpha} l={l} x={x}", model.kind());
        }
    }
}
