use proptest::prelude::*;
use tissue_uq::error::Error;
use tissue_uq::pipeline::{
    brent, build_kl, find_threshold, monte_carlo, report, write_report, AxonStatistics, NodeRecord,
    PointSourceSurrogate, StudyConfig, ThresholdSearch, UQResult, RESULT_FORMAT, RESULT_FORMAT_VERSION,
};
use tissue_uq::sparse_grid::smolyak_rule;

#[test]
fn brent_examples() {
    let r = brent(|x| Ok(x * x - 4.0), 0.0, 5.0, 1e-8).unwrap();
    assert!((r.x - 2.0).abs() <= 1e-8);
    let r = brent(|x: f64| Ok(x.cos()), 1.0, 2.0, 1e-10).unwrap();
    assert!((r.x - std::f64::consts::FRAC_PI_2).abs() <= 1e-10);
    let r = brent(|x| Ok(x), -1.0, 2.0, 1e-5).unwrap();
    assert!(r.x.abs() <= 1e-5);
    assert!(matches!(
        brent(|x| Ok(x), 1.0, 2.0, 1e-5),
        Err(Error::NoSignChange { .. })
    ));
    assert!(brent(|x| Ok(x), -1.0, 2.0, 0.0).is_err());
}

#[test]
fn synthetic_threshold_is_half() {
    let t = find_threshold(
        |i| Ok(i - 0.5),
        &ThresholdSearch {
            tol: 1e-5,
            ..Default::default()
        },
        None,
    )
    .unwrap();
    assert!((t.value().unwrap() - 0.5).abs() <= 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn brent_brackets_and_meets_tolerance(
        root in -3.0f64..3.0,
        left in 0.01f64..4.0,
        right in 0.01f64..4.0,
        cubic in 0.0f64..2.0,
        tol in 1e-12f64..1e-4,
    ) {
        let (a, b) = (root - left, root + right);
        let f = |x: f64| { let d = x - root; d + cubic * d * d * d };
        let mut outside = false;
        let r = brent(|x| { outside |= x < a || x > b; Ok(f(x)) }, a, b, tol).unwrap();
        prop_assert!(!outside);
        prop_assert!(r.bracket.0 <= r.x && r.x <= r.bracket.1);
        prop_assert!(r.bracket.1 - r.bracket.0 <= tol + 8.0 * f64::EPSILON * r.x.abs().max(1.0));
        prop_assert!((r.x - root).abs() <= tol + 8.0 * f64::EPSILON * root.abs().max(1.0));
        prop_assert!(f(r.bracket.0) * f(r.bracket.1) <= 0.0);
    }

    #[test]
    fn threshold_search_finds_linear_thresholds(t in 1e-5f64..5.0, hint in prop::option::of(1e-6f64..20.0)) {
        let s = ThresholdSearch::default();
        let found = find_threshold(|i| Ok(i - t), &s, hint).unwrap().value().unwrap();
        prop_assert!((found - t).abs() <= s.tol + 1e-15 * t);
    }
}

#[test]
fn surrogate_quadrature_agrees_with_monte_carlo() {
    let cfg = StudyConfig::default();
    let model = build_kl(&cfg).unwrap().model;
    let s = PointSourceSurrogate::default();
    let rule = smolyak_rule(model.rank(), 3);
    let (mean, std) = s.quadrature(&model, &rule, cfg.grid.scale).unwrap();
    let mc = monte_carlo(|y| s.threshold(&model, y), model.rank(), cfg.grid.scale, 10_000, 5).unwrap();
    assert!((mean - mc.mean).abs() <= 2.0 * mc.se_mean, "{mean} vs {mc:?}");
    assert!((std - mc.std).abs() <= 2.0 * mc.se_std, "{std} vs {mc:?}");
}

fn synthetic_result() -> UQResult {
    let cfg = StudyConfig::default();
    let rule = smolyak_rule(4, 1);
    let nodes = rule
        .points
        .iter()
        .zip(&rule.weights)
        .enumerate()
        .map(|(i, (p, w))| NodeRecord {
            y: p.clone(),
            weight: *w,
            thresholds: (1..=10)
                .map(|k| Some(1e-4 * k as f64 * (1.0 + 0.01 * i as f64)))
                .collect(),
            max_imag: 1e-12,
            excluded: false,
        })
        .collect();
    UQResult {
        format: RESULT_FORMAT.into(),
        version: RESULT_FORMAT_VERSION,
        config_hash: cfg.hash().unwrap(),
        kl_seed: cfg.kl.seed,
        level: 1,
        crate_version: "test".into(),
        axons: (1..=10)
            .map(|k| AxonStatistics {
                distance: k as f64 * 1e-3,
                mean: 1e-4 * k as f64,
                std: 1e-5 * k as f64,
            })
            .collect(),
        nodes,
        config: cfg,
    }
}

#[test]
fn report_has_one_row_per_axon_and_regenerates_identically() {
    let r = synthetic_result();
    let table = report::table_csv(&r);
    assert_eq!(table.lines().count(), 11);
    assert!(table.starts_with("axon,distance_mm,mean_mA,std_mA"));

    let dir = tempfile::tempdir().unwrap();
    let first = write_report(&r, dir.path().join("a"), true).unwrap();
    let saved = dir.path().join("result.json");
    std::fs::write(&saved, r.to_json().unwrap()).unwrap();
    let reloaded = UQResult::load(&saved).unwrap();
    assert_eq!(reloaded, r);
    let second = write_report(&reloaded, dir.path().join("b"), true).unwrap();
    for (x, y) in [
        (first.table, second.table),
        (first.manifest, second.manifest),
        (first.nodes.unwrap(), second.nodes.unwrap()),
    ] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    assert_eq!(reloaded.to_json().unwrap(), r.to_json().unwrap());
}

#[test]
fn manifest_echoes_hash_and_config() {
    let r = synthetic_result();
    let m: serde_json::Value = serde_json::from_str(&report::manifest_json(&r).unwrap()).unwrap();
    assert_eq!(m["config_hash"], r.config_hash);
    assert_eq!(m["config"]["kl"]["rank"], 4);
    assert_eq!(m["kl_seed"], r.kl_seed);
}

#[test]
fn brent_tolerance_contract_on_examples() {
    type Case = (fn(f64) -> f64, f64, f64, f64);
    let cases: [Case; 5] = [
        (|x| x * x - 4.0, 0.0, 5.0, 2.0),
        (|x| x.cos(), 1.0, 2.0, std::f64::consts::FRAC_PI_2),
        (|x| x, -1.0, 2.0, 0.0),
        (|x| x.powi(3) - 2.0 * x - 5.0, 2.0, 3.0, 2.0945514815423265),
        (|x| (x - 1.0).exp() - 1.0, -3.0, 4.0, 1.0),
    ];
    for (f, a, b, root) in cases {
        let r = brent(|x| Ok(f(x)), a, b, 1e-5).unwrap();
        assert!(r.bracket.1 - r.bracket.0 <= 1e-5, "[{a}, {b}]: {r:?}");
        assert!((r.x - root).abs() <= 1e-5, "[{a}, {b}]: {r:?}");
    }
}
