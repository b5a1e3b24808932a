use glk_inar::glk_dist::{CountDistribution, GlkParams, TableSampler};
use glk_inar::inar::{
    aggregate, aggregate_model, conditional_moments, simulate, stationary_distribution,
    stationary_moments, thin, transition_log_prob, two_sample_chi_square, InarModel, Start,
    TransitionKernel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn innovation() -> GlkParams {
    GlkParams::new(5.3239, 0.0592, 0.6, 0.5917).unwrap()
}

fn low() -> InarModel {
    InarModel::glk(0.3, innovation()).unwrap()
}

fn high() -> InarModel {
    InarModel::glk(0.7, innovation()).unwrap()
}

fn mean_var(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, v, m4)
}

#[test]
fn transition_rows_sum_to_one() {
    for model in [low(), high()] {
        let support = model.innovation().pmf_table(1e-14).unwrap().max_support() as u64;
        let kernel = TransitionKernel::new(&model, 200 + support);
        for i in [0u64, 1, 7, 30, 100, 200] {
            let s: f64 = kernel.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "row {i} sums to {s}");
        }
    }
}

#[test]
fn fast_kernel_agrees_with_log_space_reference() {
    let model = high();
    let kernel = TransitionKernel::new(&model, 150);
    for (i, j) in [(0u64, 0u64), (3, 0), (40, 12), (120, 150), (150, 3)] {
        let (fast, slow) = (kernel.log_prob(i, j), transition_log_prob(&model, i, j));
        assert!((fast - slow).abs() < 1e-10 * slow.abs().max(1.0), "({i}, {j}): {fast} vs {slow}");
    }
}

#[test]
fn thinning_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (alpha, x, n) = (0.35, 40u64, 200_000);
    let draws: Vec<f64> = (0..n).map(|_| thin(alpha, x, &mut rng) as f64).collect();
    let (m, v, _) = mean_var(&draws);
    let var = alpha * (1.0 - alpha) * x as f64;
    assert!((m - alpha * x as f64).abs() < 4.0 * (var / n as f64).sqrt());
    assert!((v / var - 1.0).abs() < 0.02);
}

#[test]
fn thinning_composes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (a1, a2, x) = (0.6, 0.5, 30u64);
    let nested: Vec<u64> = (0..20_000).map(|_| thin(a1, thin(a2, x, &mut rng), &mut rng)).collect();
    let direct: Vec<u64> = (0..20_000).map(|_| thin(a1 * a2, x, &mut rng)).collect();
    let t = two_sample_chi_square(&nested, &direct).unwrap();
    assert!(t.p_value > 0.001, "{t:?}");
}

#[test]
fn thinning_is_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alpha = 0.4;
    let split: Vec<u64> = (0..20_000).map(|_| thin(alpha, 12, &mut rng) + thin(alpha, 18, &mut rng)).collect();
    let whole: Vec<u64> = (0..20_000).map(|_| thin(alpha, 30, &mut rng)).collect();
    let t = two_sample_chi_square(&split, &whole).unwrap();
    assert!(t.p_value > 0.001, "{t:?}");
}

/// Monte Carlo check of the k-step conditional moments for `k = 1, 2, 3`.
fn check_conditional_moments(model: &InarModel, x0: u64, seed: u64) {
    let paths = 1_000_000;
    let sampler = TableSampler::new(model.innovation()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at = vec![Vec::with_capacity(paths); 3];
    for _ in 0..paths {
        let mut x = x0;
        for slot in at.iter_mut() {
            x = thin(model.alpha(), x, &mut rng) + sampler.sample(&mut rng);
            slot.push(x as f64);
        }
    }
    for (k, xs) in at.iter().enumerate() {
        let cm = conditional_moments(model, x0, k as u32 + 1).unwrap();
        let (m, v, m4) = mean_var(xs);
        let n = paths as f64;
        let se_m = (v / n).sqrt();
        let se_v = ((m4 - v * v) / n).sqrt();
        assert!((m - cm.mean).abs() < 3.0 * se_m, "k = {}: mean {m} vs {}", k + 1, cm.mean);
        assert!((v - cm.variance).abs() < 3.0 * se_v, "k = {}: variance {v} vs {}", k + 1, cm.variance);
    }
}

#[test]
fn conditional_moments_low_persistence() {
    check_conditional_moments(&low(), 10, 21);
}

#[test]
fn conditional_moments_high_persistence() {
    check_conditional_moments(&high(), 60, 22);
}

#[test]
fn conditional_moments_reach_stationary_limits() {
    for model in [low(), high()] {
        let st = stationary_moments(&model, 2).unwrap();
        let cm = conditional_moments(&model, 17, 500).unwrap();
        assert!((cm.mean - st.mean).abs() < 1e-10);
        assert!((cm.variance - st.variance).abs() < 1e-10);
    }
}

#[test]
fn conditional_moments_at_one_step() {
    let model = low();
    let (mu, var) = (model.innovation().mean(), model.innovation().variance());
    let cm = conditional_moments(&model, 8, 1).unwrap();
    assert!((cm.mean - (0.3 * 8.0 + mu)).abs() < 1e-12);
    assert!((cm.variance - (0.3 * 0.7 * 8.0 + var)).abs() < 1e-10);
}

#[test]
fn sum_representation_of_k_step_value() {
    // X_{t+k} = α^k∘X_t + Σ_{j<k} α^j∘ε_{t+k-j}
    let model = low();
    let sampler = TableSampler::new(model.innovation()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (x0, k) = (25u64, 3u32);
    let alpha = model.alpha();
    let n = 20_000;
    let iterated: Vec<u64> = (0..n)
        .map(|_| {
            let mut x = x0;
            for _ in 0..k {
                x = thin(alpha, x, &mut rng) + sampler.sample(&mut rng);
            }
            x
        })
        .collect();
    let summed: Vec<u64> = (0..n)
        .map(|_| {
            let head = thin(alpha.powi(k as i32), x0, &mut rng);
            head + (0..k).map(|j| thin(alpha.powi(j as i32), sampler.sample(&mut rng), &mut rng)).sum::<u64>()
        })
        .collect();
    let t = two_sample_chi_square(&iterated, &summed).unwrap();
    assert!(t.p_value > 0.001, "{t:?}");
}

#[test]
fn conditional_pgf_identity() {
    // E[u^{X_1} | X_0 = x] = (1 - α + αu)^x H(u)
    let model = low();
    let kernel = TransitionKernel::new(&model, 400);
    for (x, u) in [(0u64, 0.5f64), (5, 0.9), (20, 0.97), (40, 0.3)] {
        let lhs: f64 = kernel.row(x).iter().enumerate().map(|(j, p)| p * u.powi(j as i32)).sum();
        let rhs = (1.0 - 0.3 + 0.3 * u).powi(x as i32) * innovation().pgf(u).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "x = {x}, u = {u}: {lhs} vs {rhs}");
    }
}

#[test]
fn power_iteration_reproduces_stationary_mean_and_variance() {
    for model in [low(), high()] {
        let pi = stationary_distribution(&model, 1e-13).unwrap();
        let mean: f64 = pi.iter().enumerate().map(|(x, p)| x as f64 * p).sum();
        let var: f64 = pi.iter().enumerate().map(|(x, p)| (x as f64 - mean).powi(2) * p).sum();
        let st = stationary_moments(&model, 2).unwrap();
        assert!((mean / st.mean - 1.0).abs() < 1e-6, "mean {mean} vs {}", st.mean);
        assert!((var / st.variance - 1.0).abs() < 1e-6, "variance {var} vs {}", st.variance);
    }
}

#[test]
fn factorial_moment_closed_forms() {
    for model in [low(), high()] {
        let st = stationary_moments(&model, 3).unwrap();
        let alpha = model.alpha();
        let raw = model.innovation().raw_moments();
        let e1 = raw[0];
        let e2 = raw[1] - raw[0];
        let e3 = raw[2] - 3.0 * raw[1] + 2.0 * raw[0];
        let m1 = e1 / (1.0 - alpha);
        let m2 = (e2 + 2.0 * alpha * m1 * e1) / (1.0 - alpha * alpha);
        let m3 = (e3 + 3.0 * alpha * m1 * e2 + 3.0 * alpha * alpha * m2 * e1) / (1.0 - alpha.powi(3));
        for (got, want) in st.factorial.iter().zip([m1, m2, m3]) {
            assert!((got / want - 1.0).abs() < 1e-8, "{got} vs {want}");
        }
        assert!((st.raw[1] - st.raw[0].powi(2) - st.variance).abs() < 1e-8 * st.variance);
    }
}

#[test]
fn stationary_path_mean() {
    let model = high();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let path = simulate(&model, 1_000_000, Start::default(), &mut rng).unwrap();
    let mean = path.values().iter().sum::<u64>() as f64 / path.len() as f64;
    assert!((mean / model.stationary_mean() - 1.0).abs() < 0.01, "{mean}");
    assert!((model.stationary_mean() - 50.01).abs() < 0.01);
}

#[test]
fn aggregate_of_two_is_convolution() {
    let p1 = GlkParams::new(1.2, 0.1, 0.6, 0.4).unwrap();
    let m1 = InarModel::glk(0.5, p1).unwrap();
    let m2 = InarModel::glk(0.5, p1.with_a(2.3).unwrap()).unwrap();
    let agg = aggregate_model(&[m1, m2]).unwrap();
    let (d1, d2) = (stationary_distribution(&m1, 1e-13).unwrap(), stationary_distribution(&m2, 1e-13).unwrap());
    let d = stationary_distribution(&agg, 1e-13).unwrap();
    for (y, want) in d.iter().enumerate().take(60) {
        let conv: f64 = (0..=y).filter(|&k| k < d1.len() && y - k < d2.len()).map(|k| d1[k] * d2[y - k]).sum();
        assert!((conv - want).abs() < 1e-8, "y = {y}: {conv} vs {want}");
    }
}

#[test]
fn aggregate_of_three_passes_chi_square() {
    let p = GlkParams::new(1.0, 0.1, 0.6, 0.4).unwrap();
    let models: Vec<InarModel> =
        [1.0, 2.0, 0.5].iter().map(|&a| InarModel::glk(0.4, p.with_a(a).unwrap()).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let report = aggregate(&models, 60_000, &mut rng).unwrap();
    assert_eq!(report.components, 3);
    assert!(report.test.p_value > 0.001, "{report:?}");
}

#[test]
fn aggregate_rejects_mismatched_components() {
    let p = GlkParams::new(1.0, 0.1, 0.6, 0.4).unwrap();
    let m1 = InarModel::glk(0.4, p).unwrap();
    let m2 = InarModel::glk(0.5, p).unwrap();
    assert!(aggregate_model(&[m1, m2]).is_err());
    assert!(aggregate_model(&[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn thinning_never_exceeds_input(alpha in 0.0f64..=1.0, x in 0u64..500, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(thin(alpha, x, &mut rng) <= x);
    }

    #[test]
    fn stationary_vmr_between_one_and_innovation_vmr(alpha in 0.01f64..0.95) {
        let model = InarModel::glk(alpha, innovation()).unwrap();
        let st = stationary_moments(&model, 2).unwrap();
        let v_eps = innovation().moments().vmr;
        prop_assert!(st.vmr > 1.0 && st.vmr <= v_eps);
        prop_assert!((st.vmr - st.variance / st.mean).abs() < 1e-10);
    }

    #[test]
    fn conditional_variance_nonnegative(alpha in 0.01f64..0.95, x in 0u64..200, k in 1u32..50) {
        let model = InarModel::glk(alpha, innovation()).unwrap();
        prop_assert!(conditional_moments(&model, x, k).unwrap().variance >= 0.0);
    }
}
