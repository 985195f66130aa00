use proptest::prelude::*;
use rayq_core::algorithms::{szo_step, IterateState};
use rayq_core::linalg::{b_norm, dot, norm, project_tangent, rayleigh, retract, Matrix, OperatorPair};
use rayq_core::oracle::reference_solve;
use rayq_core::sampling::{sample_initial, sample_tangent_direction, RngStream};

fn random_pair(d: usize, seed: u64) -> (Matrix, Matrix, OperatorPair) {
    let mut r = RngStream::new(seed, 42);
    let a = Matrix::new(d, d, r.normal_vec(d * d)).unwrap();
    let c = Matrix::new(d, d, r.normal_vec(d * d)).unwrap();
    let b = c.gram().add(&Matrix::identity(d).scaled(0.1)).unwrap();
    let pair = OperatorPair::from_dense(&a, &b).unwrap();
    (a, b, pair)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_and_retraction(seed in 0u64..10_000, d in 2usize..12, t in -5.0f64..5.0) {
        let (_, b, pair) = random_pair(d, seed);
        let mut rng = RngStream::new(seed, 1);
        let v = sample_initial(&pair, &mut rng).unwrap();
        prop_assert!((b_norm(&pair, v.as_slice()).unwrap() - 1.0).abs() <= 1e-12);
        let y = rng.normal_vec(d);
        let p = project_tangent(&pair, &v, &y).unwrap();
        let bv = b.matvec(v.as_slice());
        prop_assert!(dot(&p, &bv).abs() <= 1e-10 * norm(&y) * norm(&bv));
        let pp = project_tangent(&pair, &v, &p).unwrap();
        for (x, z) in p.iter().zip(&pp) {
            prop_assert!((x - z).abs() <= 1e-12 * norm(&y).max(1.0));
        }
        let x = sample_tangent_direction(&pair, &v, &mut rng).unwrap();
        let step: Vec<f64> = x.as_slice().iter().map(|xi| t * xi).collect();
        let w = retract(&pair, &v, &step).unwrap();
        prop_assert!((b_norm(&pair, w.as_slice()).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn solver_steps_ascend_within_oracle(seed in 0u64..10_000, d in 2usize..10, m in 1usize..6) {
        let (a, b, pair) = random_pair(d, seed);
        let r = reference_solve(&a, &b).unwrap();
        let mut rng = RngStream::new(seed, 2);
        let mut s = IterateState::new(&pair, sample_initial(&pair, &mut rng).unwrap()).unwrap();
        for _ in 0..20 {
            let (n, _) = szo_step(&pair, &s, &mut rng, m).unwrap();
            if let (Some(bk), Some(tau)) = (n.last_b(), n.last_tau()) {
                prop_assert!(tau * bk > 0.0);
                prop_assert!(((n.a() - s.a()) - tau * bk / 2.0).abs() <= 1e-10 * s.a().abs().max(1.0));
            }
            prop_assert!(n.a() >= s.a() - 1e-12 * s.a().abs().max(1.0));
            prop_assert!(n.a() <= r.max_value + 1e-8 * r.max_value.abs().max(1.0));
            prop_assert!((n.a() - rayleigh(&pair, n.v().as_slice()).unwrap()).abs() <= 1e-10 * n.a().abs().max(1e-3));
            s = n;
        }
    }
}
