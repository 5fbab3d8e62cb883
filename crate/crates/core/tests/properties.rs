use proptest::prelude::*;

use ddsopt::network::{average_project, build_mixing_matrix, generate_graph, MixingMatrix};
use ddsopt::penalty::{grad_penalized_objective, lyapunov_local, penalty_value, NeighborView, PenaltyParams};
use ddsopt::problems::{gradient_check, problem_by_name, toy_problem, DiagonalQuadratic};
use ddsopt::searchcore::{poll, update_stepsize, ForcingFunction, PollSet, StepBounds, StepsizeSchedule};
use ddsopt::stacked::Stacked;

fn network(m: usize, seed: u64) -> MixingMatrix {
    build_mixing_matrix(&generate_graph(m, 0.5, seed).unwrap()).unwrap()
}

/// `(W, X)` with `2 <= m <= 8` agents and `1 <= n <= 4` coordinates.
fn mixing_and_point() -> impl Strategy<Value = (MixingMatrix, Stacked)> {
    (2usize..=8, 1usize..=4, any::<u64>()).prop_flat_map(|(m, n, seed)| {
        proptest::collection::vec(-10.0..10.0f64, m * n)
            .prop_map(move |data| (network(m, seed), Stacked::from_flat(m, n, data).unwrap()))
    })
}

fn deviation(x: &Stacked) -> Stacked {
    let avg = average_project(x);
    let flat: Vec<f64> = x.as_flat().iter().zip(avg.as_flat()).map(|(a, b)| a - b).collect();
    Stacked::from_flat(x.agents(), x.dim(), flat).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixing_is_non_expansive((w, x) in mixing_and_point()) {
        let y = w.mix(&x).unwrap();
        prop_assert!(y.norm() <= x.norm() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn mixing_contracts_disagreement_by_zeta((w, x) in mixing_and_point()) {
        let before = deviation(&x).norm();
        let after = deviation(&w.mix(&x).unwrap()).norm();
        prop_assert!(after <= w.zeta() * before + 1e-12 * (1.0 + before));
    }

    #[test]
    fn averaging_commutes_with_mixing((w, x) in mixing_and_point()) {
        let lhs = average_project(&w.mix(&x).unwrap());
        let rhs = average_project(&x);
        for (a, b) in lhs.as_flat().iter().zip(rhs.as_flat()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn mixing_matrices_are_admissible(m in 2usize..=10, seed in any::<u64>()) {
        let w = network(m, seed);
        let wm = w.weights();
        for i in 0..m {
            prop_assert!((wm.row(i).sum() - 1.0).abs() <= 1e-12);
            prop_assert!((wm.column(i).sum() - 1.0).abs() <= 1e-12);
            for j in 0..m {
                prop_assert_eq!(wm[(i, j)], wm[(j, i)]);
            }
        }
        let report = w.spectral_report();
        prop_assert!((report.eigenvalues[0] - 1.0).abs() <= 1e-10);
        prop_assert!(w.zeta() < 1.0);
    }

    #[test]
    fn penalty_is_nonnegative((w, x) in mixing_and_point(), gamma in 0.01..100.0f64) {
        let p = penalty_value(&w, &x, PenaltyParams::new(gamma).unwrap()).unwrap();
        prop_assert!(p >= -1e-12);
    }

    #[test]
    fn penalty_vanishes_at_consensus(
        m in 2usize..=8,
        seed in any::<u64>(),
        point in proptest::collection::vec(-10.0..10.0f64, 3),
        gamma in 0.01..100.0f64,
    ) {
        let w = network(m, seed);
        let x = Stacked::consensus(m, &point);
        let p = penalty_value(&w, &x, PenaltyParams::new(gamma).unwrap()).unwrap();
        prop_assert!(p.abs() <= 1e-12 * (1.0 + x.norm() * x.norm()) / gamma);
    }

    #[test]
    fn stacked_gradient_adds_laplacian_term(
        (w, x) in mixing_and_point(),
        gamma in 0.1..10.0f64,
        curv in proptest::collection::vec(0.1..5.0f64, 4),
    ) {
        let (m, n) = (x.agents(), x.dim());
        let q = DiagonalQuadratic::new(vec![curv[..n].to_vec(); m], vec![vec![0.5; n]; m]).unwrap();
        let p = q.clone().into_problem("q", vec![0.0; n]).unwrap();
        let g = grad_penalized_objective(&p, &w, &x, PenaltyParams::new(gamma).unwrap()).unwrap();
        let wm = w.weights();
        for i in 0..m {
            let fi = ddsopt::problems::LocalObjective::gradient(&q, i, x.block(i));
            for c in 0..n {
                let wx: f64 = (0..m).map(|j| wm[(i, j)] * x.block(j)[c]).sum();
                let expected = fi[c] + (x.block(i)[c] - wx) / gamma;
                prop_assert!((g.block(i)[c] - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn lyapunov_gradient_matches_differences(
        (w, x) in mixing_and_point(),
        gamma in 0.1..10.0f64,
        agent_pick in any::<prop::sample::Index>(),
        seed in 0u64..100,
    ) {
        let m = x.agents();
        let p = toy_problem(m, seed).unwrap();
        // The toy dimension equals its agent count; rebuild X to match.
        let n = p.dim();
        let data: Vec<f64> = (0..m * n).map(|k| x.as_flat()[k % x.as_flat().len()] * 0.3).collect();
        let x = Stacked::from_flat(m, n, data).unwrap();
        let i = agent_pick.index(m);
        let params = PenaltyParams::new(gamma).unwrap();
        let grad = ddsopt::penalty::grad_lyapunov_local(&p, &w, i, x.block(i), NeighborView::from_snapshot(i, &x), params).unwrap();
        let f = |y: &[f64]| lyapunov_local(&p, &w, i, y, NeighborView::from_snapshot(i, &x), params).unwrap();
        prop_assert!(gradient_check(f, &grad, x.block(i)) <= 1e-5);
    }

    #[test]
    fn toy_problem_is_separable(
        n in 2usize..=12,
        seed in any::<u64>(),
        x in proptest::collection::vec(-5.0..5.0f64, 12),
        y in proptest::collection::vec(-5.0..5.0f64, 12),
        agent_pick in any::<prop::sample::Index>(),
    ) {
        let p = toy_problem(n, seed).unwrap();
        let i = agent_pick.index(n);
        let mut y = y[..n].to_vec();
        y[i] = x[i];
        prop_assert_eq!(p.eval_local(i, &x[..n]).unwrap(), p.eval_local(i, &y).unwrap());
    }

    #[test]
    fn poll_steps_satisfy_sufficient_decrease(
        center in proptest::collection::vec(-3.0..3.0f64, 3),
        x in proptest::collection::vec(-3.0..3.0f64, 3),
        alpha in 1e-4..2.0f64,
        c in 1e-8..1.0f64,
        tau in 0.01..0.99f64,
    ) {
        let f = |y: &[f64]| y.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let rho = ForcingFunction::new(c, tau).unwrap();
        let out = poll(|y| Ok(f(y)), &x, alpha, &PollSet::canonical(3), &rho, None).unwrap();
        prop_assert_eq!(out.baseline, f(&x));
        match out.step {
            Some(step) => {
                prop_assert_eq!(step.value, f(&step.trial));
                prop_assert!(step.value <= out.baseline - rho.value(alpha));
                prop_assert_eq!(out.evals as usize, step.direction + 2);
            }
            None => prop_assert_eq!(out.evals, 7),
        }
    }

    #[test]
    fn adaptive_stepsize_stays_in_bounds(
        alpha0 in 1e-3..10.0f64,
        theta in 0.05..0.95f64,
        c_min in 1e-4..0.5f64,
        spread in 1.5..100.0f64,
        tau in 0.51..1.0f64,
        outcomes in proptest::collection::vec(any::<bool>(), 1..200),
    ) {
        let bounds = StepBounds::Decaying { c_min, c_max: c_min * spread, tau };
        let schedule = StepsizeSchedule::adaptive(alpha0, theta, bounds).unwrap();
        let mut alpha = alpha0;
        for (k, success) in outcomes.into_iter().enumerate() {
            alpha = update_stepsize(&schedule, alpha, success, k as u64);
            let (lo, hi) = bounds.at(k as u64);
            prop_assert!(alpha >= lo && alpha <= hi, "k {} alpha {} not in [{}, {}]", k, alpha, lo, hi);
        }
    }
}

#[test]
fn registered_gradients_match_differences() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut names: Vec<String> = vec!["toy-5".into(), "toy-15".into()];
    names.extend(ddsopt::problems::residual_problem_names().into_iter().map(String::from));
    for name in names {
        let p = problem_by_name(&name, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x: Vec<f64> = p
                .x0()
                .iter()
                .map(|&v| v + Normal::new(0.0, 0.1 * v.abs().max(1.0)).unwrap().sample(&mut rng))
                .collect();
            for i in 0..p.agents() {
                let g = p.gradient(i, &x);
                let err = gradient_check(|y| p.monitor_eval(i, y).unwrap(), &g, &x);
                assert!(err <= 1e-5, "{name} agent {i}: {err:e} at {x:?}");
            }
        }
    }
}

/// Consensus error of the local-decrease solver with a shared vanishing
/// stepsize obeys `|e_(k+1)| <= zeta |e_k| + sqrt(m) alpha_k` (Frobenius
/// norm): mixing contracts the disagreement by `zeta` and every agent then
/// moves by at most `alpha_k` along a unit direction. The reported metric
/// `sum_i |x_i - mean|` is at most `sqrt(m) |e|`.
#[test]
fn local_decrease_consensus_tracks_stepsizes() {
    use ddsopt::experiment::cell_setup;
    use ddsopt::solvers::{run, Budget, Protocol, SolverVariant};
    let protocol = Protocol::default();
    let mut names: Vec<String> = vec!["toy-5".into(), "toy-10".into()];
    names.extend(ddsopt::problems::residual_problem_names().into_iter().map(String::from));
    let mut checked = 0;
    for name in &names {
        for seed in 1..=3 {
            let (p, w, _) = cell_setup(name, seed, &protocol).unwrap();
            let m = p.agents();
            if m > 10 {
                continue;
            }
            let cfg = SolverVariant::DdsFVanishing.config(p.x0(), None, Budget::suite(p.dim(), m)).unwrap();
            let t = run(&p, &w, &cfg).unwrap();
            let root_m = (m as f64).sqrt();
            let mut e = 0.0_f64;
            for k in 1..t.rows.len() {
                let alpha = t.alphas[k - 1].iter().copied().fold(0.0, f64::max);
                e = w.zeta() * e + root_m * alpha;
                let bound = root_m * e;
                let c = t.rows[k].consensus;
                assert!(c <= bound * (1.0 + 1e-12), "{name} seed {seed} k {k}: {c} > {bound}");
            }
            checked += 1;
        }
    }
    assert!(checked >= 20);
}
