use proptest::prelude::*;
use tissue_uq::dispersion::RandomParamBox;
use tissue_uq::kl::{
    build_grid, build_model_from_box, kl_project, kl_realize, truncation_error, EigenSolver, KlBuild, KlModel,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn small_build(solver: EigenSolver) -> KlBuild {
    let grid = build_grid(TWO_PI * 130.0, TWO_PI * 5e5, 0.05).unwrap();
    build_model_from_box(&RandomParamBox::default(), &grid, 300, 11, 4, solver).unwrap()
}

#[test]
fn dense_and_lanczos_agree() {
    let a = small_build(EigenSolver::Dense);
    let b = small_build(EigenSolver::Lanczos);
    for (x, y) in a.model.eigenvalues().iter().zip(b.model.eigenvalues()) {
        assert!((x - y).abs() <= 1e-8 * x, "{x} vs {y}");
    }
    for m in 0..4 {
        let dot: f64 = a.model.basis.column(m).dot(&b.model.basis.column(m));
        assert!((dot.abs() - 1.0).abs() < 1e-6, "mode {m}: {dot}");
    }
}

#[test]
fn basis_is_orthonormal_and_error_shrinks_with_rank() {
    let b = small_build(EigenSolver::Dense);
    let g = b.model.basis.transpose() * &b.model.basis;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g[(i, j)] - want).abs() < 1e-12);
        }
    }
    let grid = b.model.grid.clone();
    let mut last = f64::INFINITY;
    for m in 1..=6 {
        let model = tissue_uq::kl::truncate(&grid, &b.mean, &b.eigen, m).unwrap();
        let (e, _) = truncation_error(&b.covariance, &model).unwrap();
        assert!(e <= last * (1.0 + 1e-9), "rank {m}: {e} > {last}");
        last = e;
    }
}

#[test]
fn saved_model_reloads_bit_for_bit() {
    let b = small_build(EigenSolver::Dense);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kl.json");
    b.model.save(&path).unwrap();
    let back = KlModel::load(&path).unwrap();
    assert_eq!(back.basis, b.model.basis);
    assert_eq!(back.mean, b.model.mean);
    let y = [0.3, -1.2, 0.7, 1.6];
    let (u, v) = (kl_realize(&b.model, &y).unwrap(), kl_realize(&back, &y).unwrap());
    for (p, q) in u.iter().zip(v.iter()) {
        assert!((p - q).abs() <= 1e-15 * p.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_inverts_realization(y in prop::collection::vec(-1.8f64..1.8, 4)) {
        let b = small_build(EigenSolver::Dense);
        let g = kl_realize(&b.model, &y).unwrap();
        let back = kl_project(&b.model, g.as_slice()).unwrap();
        for (a, c) in y.iter().zip(back.iter()) {
            prop_assert!((a - c).abs() <= 1e-8);
        }
    }

    #[test]
    fn realizations_stay_positive_on_the_box(y in prop::collection::vec(-1.7320508f64..1.7320508, 4)) {
        let b = small_build(EigenSolver::Dense);
        let g = kl_realize(&b.model, &y).unwrap();
        prop_assert!(g.iter().all(|v| *v > 0.0));
    }
}
