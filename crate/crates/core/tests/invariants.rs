use rayq_core::algorithms::{optimal_step_size, stationarity_residual, szo_run, szo_step, IterateState, SolverConfig, StopSignal};
use rayq_core::linalg::{dot, norm, rayleigh, riemannian_grad, Matrix, OperatorPair};
use rayq_core::metrics::check_min_bsq_bound;
use rayq_core::oracle::{operator_norms, reference_solve, DenseMonitor, DenseProblem};
use rayq_core::problems::{KlParams, ProblemFamily, ProblemSpec};
use rayq_core::sampling::{sample_initial, sample_tangent_direction, RngStream};

fn gaussian(d: usize, seed: u64) -> (DenseProblem, OperatorPair) {
    let p = ProblemSpec::new(ProblemFamily::GaussianPair, d, seed).generate().unwrap();
    let pair = p.pair().unwrap();
    (p, pair)
}

#[test]
fn steps_obey_identity_stationarity_and_bounds() {
    for seed in 0..3 {
        let (p, pair) = gaussian(20, seed);
        let norms = operator_norms(&p.a, &p.b).unwrap();
        let reference = reference_solve(&p.a, &p.b).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let mut s = IterateState::new(&pair, sample_initial(&pair, &mut rng).unwrap()).unwrap();
        for _ in 0..300 {
            let (n, sig) = szo_step(&pair, &s, &mut rng, 1).unwrap();
            assert_eq!(sig, StopSignal::Continue);
            let (b, c, d, tau) = (n.last_b().unwrap(), n.last_c().unwrap(), n.last_d().unwrap(), n.last_tau().unwrap());
            assert!(((n.a() - s.a()) - tau * b / 2.0).abs() <= 1e-10 * s.a().abs().max(1.0));
            assert!(stationarity_residual(s.a(), b, c, d, tau) <= 1e-8);
            assert_eq!(optimal_step_size(s.a(), b, c, d).unwrap(), tau);
            assert!(tau * b <= norms.tau_b_bound());
            assert!(n.a() <= reference.max_value + 1e-8);
            s = n;
        }
    }
}

#[test]
fn min_bsq_bound_holds_across_families() {
    let specs = [
        ProblemSpec::new(ProblemFamily::GaussianPair, 15, 1),
        ProblemSpec::new(ProblemFamily::IllConditioned, 15, 2).with_q(3.0),
        ProblemSpec::new(ProblemFamily::OperatorNorm, 15, 3),
        ProblemSpec { kl: KlParams::default(), ..ProblemSpec::new(ProblemFamily::KarhunenLoeve, 40, 4) },
    ];
    for spec in specs {
        let p = spec.generate().unwrap();
        let pair = p.pair().unwrap();
        for m in [1, 5] {
            let (_, trace, _) = szo_run(&pair, &SolverConfig::with_m(m, 400), &mut RngStream::new(spec.seed, 9), &mut rayq_core::trace::NoMonitor).unwrap();
            let report = check_min_bsq_bound(&trace, &p.a, &p.b).unwrap();
            assert!(report.passed, "{:?} m={m}: {report:?}", spec.family);
        }
    }
}

#[test]
fn tangent_second_moment_is_scaled_projector() {
    let d = 6;
    let (p, pair) = gaussian(d, 5);
    let mut rng = RngStream::new(5, 2);
    let v = sample_initial(&pair, &mut rng).unwrap();
    let bv = p.b.matvec(v.as_slice());
    let nbv = norm(&bv);
    let n = 50_000;
    let mut m = vec![0.0; d * d];
    for _ in 0..n {
        let x = sample_tangent_direction(&pair, &v, &mut rng).unwrap();
        let x = x.as_slice();
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] += x[i] * x[j];
            }
        }
    }
    let mut err = 0.0;
    for i in 0..d {
        for j in 0..d {
            let proj = if i == j { 1.0 } else { 0.0 } - bv[i] * bv[j] / (nbv * nbv);
            err += (m[i * d + j] / n as f64 - proj / (d - 1) as f64).powi(2);
        }
    }
    assert!(err.sqrt() <= 5.0 * (d as f64 / n as f64).sqrt(), "{}", err.sqrt());
}

#[test]
fn mean_of_b_squared_matches_gradient() {
    let d = 8;
    for seed in 0..3 {
        let (p, pair) = gaussian(d, 20 + seed);
        let mut rng = RngStream::new(seed, 3);
        let v = sample_initial(&pair, &mut rng).unwrap();
        let s = IterateState::new(&pair, v.clone()).unwrap();
        let n = 20_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let x = sample_tangent_direction(&pair, &v, &mut rng).unwrap();
                let (next, _) = rayq_core::algorithms::szo_step_along(&pair, &s, x.as_slice()).unwrap();
                next.last_b().unwrap().powi(2)
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let g = riemannian_grad(&p.a, &p.b, v.as_slice()).unwrap();
        let expected = dot(&g, &g) / (d - 1) as f64;
        assert!((mean - expected).abs() <= 5.0 * (var / n as f64).sqrt(), "{mean} vs {expected}");
    }
}

#[test]
fn monitored_runs_have_monotone_errors() {
    let (p, pair) = gaussian(10, 31);
    let reference = reference_solve(&p.a, &p.b).unwrap();
    let mut mon = DenseMonitor::new(&p, &reference).with_grad_norm();
    let (state, trace, _) = szo_run(&pair, &SolverConfig::with_m(3, 500), &mut RngStream::new(31, 0), &mut mon).unwrap();
    for w in trace.records.windows(2) {
        assert!(w[1].rqe.unwrap() <= w[0].rqe.unwrap() + 1e-12);
        assert!(w[1].msqr.unwrap() <= w[0].msqr.unwrap());
    }
    assert!(trace.records.iter().all(|r| r.rqe.unwrap() >= -1e-10 && r.grad_norm.is_some()));
    assert!((state.a() - rayleigh(&pair, state.v().as_slice()).unwrap()).abs() <= 1e-10 * state.a().abs());
}

#[test]
fn thinned_recording_keeps_endpoints() {
    let (_, pair) = gaussian(5, 2);
    let cfg = SolverConfig { record_every: 7, b_tol_sq: 0.0, ..SolverConfig::with_m(1, 30) };
    let (_, trace, _) = szo_run(&pair, &cfg, &mut RngStream::new(2, 0), &mut rayq_core::trace::NoMonitor).unwrap();
    let ks: Vec<usize> = trace.records.iter().map(|r| r.k).collect();
    assert_eq!(ks, vec![0, 7, 14, 21, 28, 30]);
    assert!(trace.records.windows(2).all(|w| w[0].wall_s <= w[1].wall_s));
}

#[test]
fn dense_identity_pair_from_matrix_literals() {
    let a = Matrix::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 3.0]]);
    let b = Matrix::from_diag(&[1.0, 1.0, 1.0]);
    let r = reference_solve(&a, &b).unwrap();
    let pair = OperatorPair::from_dense(&a, &b).unwrap();
    let (s, _, _) = szo_run(&pair, &SolverConfig::with_m(2, 2000), &mut RngStream::new(0, 0), &mut rayq_core::trace::NoMonitor).unwrap();
    assert!((s.a() - r.max_value).abs() < 1e-8);
}
