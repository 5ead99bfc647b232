use homotopy_svm::dataset::{
    paper_dataset, random_separable, scaled_dataset, Dataset, DEFAULT_FILLERS,
};
use homotopy_svm::linalg;
use homotopy_svm::losses::LossContext;
use homotopy_svm::oracle::{self, estimate_lambda_prime, exact_hard_margin, exact_regularized};
use homotopy_svm::schedule::SchedulePlan;
use homotopy_svm::solver::{self, Horizon, SolverConfig};
use homotopy_svm::verify::lambda_grid;

fn rotate(ds: &Dataset, theta: f64) -> Dataset {
    let (s, c) = theta.sin_cos();
    ds.map_points(|x| vec![c * x[0] - s * x[1], s * x[0] + c * x[1]])
        .unwrap()
}

/// `λ' = min_j 1 / (n μ_j)` over support points with `w* = Σ μ_j y_j x_j`,
/// valid when the support vectors are linearly independent.
fn closed_form_lambda_prime(ds: &Dataset) -> f64 {
    let sol = exact_hard_margin(ds).unwrap();
    let n = ds.n() as f64;
    sol.duals
        .iter()
        .filter(|&&mu| mu > 1e-12)
        .map(|&mu| 1.0 / (n * mu))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn hard_margin_kkt_conditions() {
    for seed in 0..40 {
        let ds = random_separable(seed, 14, 3, 0.15).unwrap();
        let sol = exact_hard_margin(&ds).unwrap();
        let ctx = LossContext::new(ds);
        let margins = ctx.margins(&sol.w).unwrap();
        assert!(margins.iter().all(|&m| m >= 1.0 - 1e-10), "seed {seed}");
        let mut recon = vec![0.0; 3];
        for (&j, &mu) in sol.active_set.iter().zip(&sol.duals) {
            assert!(mu >= -1e-12);
            assert!((margins[j] - 1.0).abs() <= 1e-9);
            linalg::axpy(mu, ctx.signed_point(j), &mut recon);
        }
        assert!(linalg::distance(&recon, &sol.w) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn rotation_equivariance() {
    let base = paper_dataset(&DEFAULT_FILLERS).unwrap();
    let scaled = scaled_dataset(&paper_dataset(&[]).unwrap(), 1, 20.0).unwrap();
    for ds in [base, scaled, random_separable(3, 12, 2, 0.2).unwrap()] {
        let w = exact_hard_margin(&ds).unwrap().w;
        for theta in [0.3, 1.0, 2.5, -0.7] {
            let rotated = exact_hard_margin(&rotate(&ds, theta)).unwrap().w;
            let (s, c) = f64::sin_cos(theta);
            let expected = [c * w[0] - s * w[1], s * w[0] + c * w[1]];
            assert!(linalg::distance(&rotated, &expected) <= 1e-9);
        }
    }
}

#[test]
fn lambda_prime_matches_closed_form() {
    assert!(
        (closed_form_lambda_prime(&paper_dataset(&DEFAULT_FILLERS).unwrap()) - 0.5).abs() < 1e-12
    );
    assert!((closed_form_lambda_prime(&paper_dataset(&[]).unwrap()) - 2.0).abs() < 1e-12);
    for seed in 0..15 {
        let ds = random_separable(seed, 8, 2, 0.3).unwrap();
        let expected = closed_form_lambda_prime(&ds);
        let got = estimate_lambda_prime(&ds, 1e-7).unwrap();
        assert!(
            (got - expected).abs() <= 2e-7 * expected.max(1.0),
            "seed {seed}: {got} vs {expected}"
        );
        // definition: the flat region reaches up to λ'
        let w_star = exact_hard_margin(&ds).unwrap().w;
        let inside = exact_regularized(&ds, 0.99 * got).unwrap().w;
        assert!(linalg::distance(&inside, &w_star) <= 1e-9);
        let outside = exact_regularized(&ds, 1.01 * got).unwrap().w;
        assert!(linalg::distance(&outside, &w_star) > 1e-9);
    }
}

#[test]
fn regularization_path_properties_on_random_sets() {
    let grid = lambda_grid(0.05, 4.0, 0.05).unwrap();
    for seed in 0..6 {
        let ds = random_separable(seed, 8, 2, 0.2).unwrap();
        let ctx = LossContext::new(ds.clone());
        let l = ctx.lipschitz();
        let w_star = exact_hard_margin(&ds).unwrap().w;
        let lambda_prime = closed_form_lambda_prime(&ds);
        let path: Vec<Vec<f64>> = grid
            .iter()
            .map(|&lam| exact_regularized(&ds, lam).unwrap().w)
            .collect();
        let mut prev_value = f64::NEG_INFINITY;
        for (i, (&a, wa)) in grid.iter().zip(&path).enumerate() {
            assert!(linalg::norm(wa) <= ctx.mean_norm() / a + 1e-9);
            assert!(
                linalg::distance(wa, &w_star) <= l * a / (2.0 * lambda_prime * lambda_prime) + 1e-9
            );
            for (&b, wb) in grid[i + 1..].iter().zip(&path[i + 1..]) {
                assert!(linalg::distance(wa, wb) <= 0.5 * l * (1.0 / a - 1.0 / b).abs() + 1e-9);
            }
            let value = ctx.regularized_loss(wa, a).unwrap();
            assert!(value >= prev_value - 1e-12, "seed {seed} λ = {a}");
            prev_value = value;
        }
    }
}

#[test]
fn stage_outputs_near_their_minimizers() {
    // ‖w̄_{s+1} − w*_{λ_s}‖² <= 2 R_s L / (λ_s √t_s) for each finished stage s
    for ds in [
        paper_dataset(&DEFAULT_FILLERS).unwrap(),
        scaled_dataset(&paper_dataset(&DEFAULT_FILLERS).unwrap(), 1, 20.0).unwrap(),
        random_separable(5, 9, 2, 0.2).unwrap(),
    ] {
        let ctx = LossContext::new(ds.clone());
        let l = ctx.lipschitz();
        for s0 in [3, 10] {
            let plan = SchedulePlan::new(0.5, 2.0, s0).unwrap();
            let trace =
                solver::homotopic_solve(&ctx, &SolverConfig::new(plan, Horizon::Stages(25)))
                    .unwrap();
            let mut seed = vec![0.0; 2];
            for cp in trace.stages() {
                let minimizer = exact_regularized(&ds, cp.lambda).unwrap().w;
                let gap = linalg::distance(&cp.iterate, &minimizer).powi(2);
                let bound = 2.0 * plan.radius(cp.stage, l) * l / (cp.lambda * (cp.t as f64).sqrt());
                assert!(gap <= bound, "stage {}: {gap} > {bound}", cp.stage);
                assert!(linalg::distance(&seed, &minimizer) <= plan.radius(cp.stage, l));
                seed.clone_from(&cp.iterate);
            }
        }
    }
}

#[test]
fn caps_are_enforced() {
    let big = random_separable(0, 40, 2, 0.1).unwrap();
    assert!(matches!(
        exact_regularized(&big, 0.5),
        Err(homotopy_svm::Error::CapExceeded(_))
    ));
    assert!(matches!(
        exact_hard_margin(&big),
        Err(homotopy_svm::Error::CapExceeded(_))
    ));
    let wide = random_separable(0, 8, 7, 0.1).unwrap();
    assert!(exact_hard_margin(&wide).is_err());
    const { assert!(oracle::REGULARIZED_MAX_GROUPS >= 16) };
}
