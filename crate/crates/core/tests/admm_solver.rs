use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcomp_core::admm::{adjoint_sampling, apply_sampling, lagrangian_w_terms, step, trace_objective, update_a, update_b, update_w};
use tcomp_core::gauge::{prox_envelope, soft_threshold};
use tcomp_core::models::{generate_tucker, rmse, TuckerSample, TuckerSpec};
use tcomp_core::spectral::{singular_values, spectral_prox};
use tcomp_core::{solve, AdmmConfig, AdmmState, DenseTensor, Error, Gauge, ObservationSet, Shape, Tensor};

fn random_tensor(shape: &Shape, rng: &mut ChaCha8Rng) -> Tensor {
    DenseTensor::from_fn(shape.clone(), |_| rng.random_range(-1.0..1.0))
}

fn random_obs(t: &Tensor, frac: f64, rng: &mut ChaCha8Rng) -> ObservationSet<f64> {
    let mut idx: Vec<usize> = (0..t.shape().len()).collect();
    idx.shuffle(rng);
    let m = ((t.shape().len() as f64) * frac).round().max(1.0) as usize;
    ObservationSet::sample(t, &idx[..m]).unwrap()
}

fn random_state(shape: &Shape, rng: &mut ChaCha8Rng) -> AdmmState<f64> {
    let mut st = AdmmState::zeros(shape);
    for n in 0..shape.order() {
        st.b[n] = random_tensor(shape, rng);
        st.a[n] = random_tensor(shape, rng);
    }
    st
}

/// The 40 x 20 x 10 synthetic instance with a 10% training split.
fn synthetic(seed: u64) -> (TuckerSample<f64>, ObservationSet<f64>, Vec<usize>) {
    let spec = TuckerSpec {
        shape: Shape::new(vec![40, 20, 10]).unwrap(),
        core_ranks: vec![12, 6, 3],
        noise_variance: 1e-3,
        seed,
    };
    let sample = generate_tucker(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..8000).collect();
    idx.shuffle(&mut rng);
    let obs = ObservationSet::sample(&sample.ground_truth, &idx[..800]).unwrap();
    (sample, obs, idx[800..].to_vec())
}

#[test]
fn w_update_zeroes_lagrangian_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for dims in [vec![3, 3, 3], vec![5, 4, 3]] {
        let shape = Shape::new(dims).unwrap();
        let truth = random_tensor(&shape, &mut rng);
        let obs = random_obs(&truth, 0.4, &mut rng);
        let st = random_state(&shape, &mut rng);
        let mut cfg = AdmmConfig::new(Gauge::L1, 0.7);
        cfg.beta = 1.3;
        let w = update_w(&st, &obs, &cfg).unwrap();
        let h = 1e-5;
        for k in 0..shape.len() {
            let mut up = w.clone();
            let mut down = w.clone();
            up.as_mut_slice()[k] += h;
            down.as_mut_slice()[k] -= h;
            let g = (lagrangian_w_terms(&up, &st, &obs, &cfg).unwrap() - lagrangian_w_terms(&down, &st, &obs, &cfg).unwrap()) / (2.0 * h);
            assert!(g.abs() <= 1e-6, "offset {k}: {g}");
        }
    }
}

#[test]
fn b_update_tends_to_w_as_beta_grows() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shape = Shape::new(vec![4, 3, 5]).unwrap();
    let mut st = random_state(&shape, &mut rng);
    st.w = random_tensor(&shape, &mut rng);
    let mut cfg = AdmmConfig::new(Gauge::L1, 1.0);
    cfg.beta = 1e6;
    for b in update_b(&st, &cfg).unwrap() {
        assert!(b.distance(&st.w).unwrap() <= 1e-4 * st.w.frobenius_norm());
    }
    // The envelope is finite only on the alpha ball, so stay strictly inside it.
    for scale in [1.5, 2.0, 4.0] {
        cfg.gauge = Gauge::card_envelope(scale * st.w.frobenius_norm()).unwrap();
        for b in update_b(&st, &cfg).unwrap() {
            assert!(b.distance(&st.w).unwrap() <= 1e-4 * st.w.frobenius_norm());
        }
    }
}

#[test]
fn b_update_spectra_are_soft_thresholded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = Shape::new(vec![2, 2, 2]).unwrap();
    let mut st = random_state(&shape, &mut rng);
    st.w = random_tensor(&shape, &mut rng).scale(3.0);
    let mut cfg = AdmmConfig::new(Gauge::L1, 1.0);
    cfg.beta = 2.5;
    let b = update_b(&st, &cfg).unwrap();
    for n in 0..3 {
        let x = st.w.lin_comb(1.0, &st.a[n], -1.0 / cfg.beta).unwrap();
        let want = soft_threshold(&singular_values(&x.unfold(n + 1).unwrap().matrix).unwrap(), 1.0 / cfg.beta);
        let got = singular_values(&b[n].unfold(n + 1).unwrap().matrix).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8);
        }
    }
}

#[test]
fn gauge_swap_changes_only_the_spectral_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = Shape::new(vec![4, 3, 3]).unwrap();
    let truth = random_tensor(&shape, &mut rng);
    let obs = random_obs(&truth, 0.5, &mut rng);
    let start = random_state(&shape, &mut rng);
    let l1 = AdmmConfig::new(Gauge::L1, 0.3);
    let env = AdmmConfig::new(Gauge::card_envelope(2.0).unwrap(), 0.3);

    let (mut s1, mut s2) = (start.clone(), start.clone());
    step(&mut s1, &obs, &l1).unwrap();
    step(&mut s2, &obs, &env).unwrap();
    assert_eq!(s1.w, s2.w);

    // Rebuild the envelope iterate by hand from the shared W.
    for n in 0..3 {
        let x = s2.w.lin_comb(1.0, &start.a[n], -1.0 / env.beta).unwrap();
        let mut m = x.unfold(n + 1).unwrap();
        m.matrix = spectral_prox(&m.matrix, |s| Ok(prox_envelope(s, 2.0, env.beta, &env.subgrad))).unwrap();
        assert_eq!(DenseTensor::fold(&m, &shape).unwrap(), s2.b[n]);
    }
    let mut probe = start.clone();
    probe.w = s2.w.clone();
    probe.b = s2.b.clone();
    assert_eq!(update_a(&probe, &env).unwrap(), s2.a);
}

#[test]
fn observation_order_does_not_change_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = Shape::new(vec![5, 4, 3]).unwrap();
    let truth = random_tensor(&shape, &mut rng);
    let obs = random_obs(&truth, 0.5, &mut rng);
    let mut entries: Vec<(usize, f64)> = obs.offsets().iter().copied().zip(obs.values().iter().copied()).collect();
    entries.shuffle(&mut rng);
    let shuffled = ObservationSet::from_offsets(shape, entries).unwrap();
    for gauge in [Gauge::L1, Gauge::card_envelope(3.0).unwrap()] {
        let cfg = AdmmConfig::new(gauge, 0.1);
        let (a, _) = solve(&obs, &cfg).unwrap();
        let (b, _) = solve(&shuffled, &cfg).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn fully_observed_weak_regularization_interpolates() {
    let spec = TuckerSpec {
        shape: Shape::new(vec![6, 5, 4]).unwrap(),
        core_ranks: vec![2, 2, 2],
        noise_variance: 0.0,
        seed: 6,
    };
    let truth = generate_tucker::<f64>(&spec).unwrap().ground_truth;
    let obs = ObservationSet::full(&truth);
    for gauge in [Gauge::L1, Gauge::card_envelope(truth.frobenius_norm()).unwrap()] {
        let (w, _) = solve(&obs, &AdmmConfig::new(gauge, 1e-7)).unwrap();
        assert!(rmse(&w, &truth, &obs).unwrap() <= 1e-3);
    }
}

#[test]
fn rank_one_matrix_completion() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shape = Shape::new(vec![20, 20]).unwrap();
    let t = DenseTensor::from_fn(shape, |i| u[i[0] - 1] * v[i[1] - 1]);
    let mut idx: Vec<usize> = (0..400).collect();
    idx.shuffle(&mut rng);
    let train = ObservationSet::sample(&t, &idx[..200]).unwrap();
    let val = ObservationSet::sample(&t, &idx[200..300]).unwrap();
    let test = ObservationSet::sample(&t, &idx[300..]).unwrap();
    let mut best = (f64::INFINITY, f64::INFINITY);
    for j in -7..=0 {
        let (w, _) = solve(&train, &AdmmConfig::new(Gauge::L1, 10f64.powi(j))).unwrap();
        let v = rmse(&w, &t, &val).unwrap();
        if v < best.0 {
            best = (v, rmse(&w, &t, &test).unwrap());
        }
    }
    let mean = t.as_slice().iter().sum::<f64>() / 400.0;
    let std = (t.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 400.0).sqrt();
    assert!(best.1 <= 0.05 * std, "{} vs std {std}", best.1);
}

#[test]
fn sampling_adjoint_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let dims: Vec<usize> = (0..rng.random_range(2..5)).map(|_| rng.random_range(2..6)).collect();
        let shape = Shape::new(dims).unwrap();
        let w = random_tensor(&shape, &mut rng);
        let obs = random_obs(&random_tensor(&shape, &mut rng), 0.3, &mut rng);
        let v: Vec<f64> = (0..obs.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = apply_sampling(&w, &obs).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs = w.inner(&adjoint_sampling(&v, &obs).unwrap()).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12);
    }
}

#[test]
fn residual_trends_on_the_synthetic_instance() {
    let (_, obs, _) = synthetic(1);
    let mut cfg = AdmmConfig::new(Gauge::L1, 1e-3);
    cfg.primal_tol = 0.0;
    cfg.max_outer_iters = 200;
    let (_, report) = solve(&obs, &cfg).unwrap();
    let h = &report.history;
    assert_eq!(h.len(), 200);
    assert!(h[99].primal_residual <= h[9].primal_residual);
    assert!(h[199].dual_residual * 10.0 <= h[0].dual_residual);
    assert!(h.iter().all(|r| r.elapsed_ms >= 0.0 && r.objective.is_finite()));
}

#[test]
fn trace_objective_is_stationary_against_a_long_run() {
    let (_, obs, _) = synthetic(2);
    let cfg = AdmmConfig::new(Gauge::L1, 1.0);
    let (w, report) = solve(&obs, &cfg).unwrap();
    let mut long = cfg;
    long.max_outer_iters = 5 * cfg.max_outer_iters;
    long.primal_tol = 0.0;
    let (w_long, _) = solve(&obs, &long).unwrap();
    let (f, f_long) = (trace_objective(&w, &obs, 1.0).unwrap(), trace_objective(&w_long, &obs, 1.0).unwrap());
    assert_eq!(f, report.final_objective);
    assert!((f - f_long).abs() <= 0.01 * f_long, "{f} vs {f_long}");
}

#[test]
fn envelope_completion_improves_on_zero_fill() {
    let (sample, obs, rest) = synthetic(3);
    let test = ObservationSet::sample(&sample.ground_truth, &rest).unwrap();
    let zero = Tensor::zeros(sample.ground_truth.shape().clone());
    let mut cfg = AdmmConfig::new(Gauge::card_envelope(tcomp_core::estimate_alpha(&obs)).unwrap(), 1e-3);
    cfg.beta = 0.01;
    let (w, report) = solve(&obs, &cfg).unwrap();
    assert!(report.converged);
    assert!(rmse(&w, &sample.ground_truth, &test).unwrap() < rmse(&zero, &sample.ground_truth, &test).unwrap() - 0.02);
}

#[test]
fn overflow_is_reported_with_its_iteration() {
    let shape = Shape::new(vec![2, 2]).unwrap();
    let obs = ObservationSet::new(shape, vec![(vec![1, 1], 1e300), (vec![2, 2], -1e300)]).unwrap();
    let cfg = AdmmConfig::new(Gauge::L1, 1e-300);
    match solve(&obs, &cfg) {
        Err(Error::NumericFailure { iterations, .. }) => assert_eq!(iterations, 1),
        other => panic!("{other:?}"),
    }
}
