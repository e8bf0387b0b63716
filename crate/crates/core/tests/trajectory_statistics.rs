use rip_zeno::linalg::{eigenvalues, solve};
use rip_zeno::{
    build_superoperator, build_toy_model, correlation_analytic, correlation_mc, ensemble_average, propagate, spectrum,
    CMatrix64, CorrelationOptions, DensityMatrix, EquationVariant, PropagateOptions, RipModel64, StateVector,
    ToyModelParams, TrajectoryOptions, C,
};

fn toy(w: f64, m: f64, k: f64) -> RipModel64 {
    build_toy_model(&ToyModelParams::new(w, m, k)).unwrap()
}

fn basis(model: &RipModel64, i: usize) -> StateVector<f64> {
    StateVector::basis(model.space().clone(), i).unwrap()
}

fn reference(model: &RipModel64, t_max: f64, n_out: usize) -> (Vec<f64>, Vec<DensityMatrix<f64>>) {
    let rho0 = DensityMatrix::from_projector(model.space().clone(), model.q_s()).unwrap();
    let res = propagate(model, EquationVariant::Kominis, &rho0, &PropagateOptions::new(t_max).with_samples(n_out)).unwrap();
    (res.singlet_prob, res.states)
}

#[test]
fn ensemble_tracks_master_equation() {
    let model = toy(1.0, 1.0, 1.0);
    let opts = TrajectoryOptions::new(10.0, 5e-3).with_samples(41);
    let ens = ensemble_average(&model, &basis(&model, 0), &opts, 4000, 2024).unwrap();
    let (qs, states) = reference(&model, 10.0, 41);

    for i in 0..41 {
        let dev = (ens.mean_qs[i] - qs[i]).abs();
        assert!(dev <= 5.0 * ens.se_qs[i] + 1e-12, "t={} dev={dev} se={}", ens.times[i], ens.se_qs[i]);
        let frob = (&ens.rho_estimate[i] - states[i].matrix()).frobenius_norm();
        assert!(frob <= 5.0 * ens.se_rho[i] + 1e-12, "t={} frob={frob} se={}", ens.times[i], ens.se_rho[i]);
    }
}

#[test]
fn jump_rate_follows_singlet_population() {
    let (k, t_max, bins, refine) = (1.0, 10.0, 40, 8);
    let model = toy(1.0, 1.0, k);
    let opts = TrajectoryOptions::new(t_max, 5e-3).with_samples(bins + 1);
    let ens = ensemble_average(&model, &basis(&model, 0), &opts, 4000, 99).unwrap();
    let (qs, _) = reference(&model, t_max, bins * refine + 1);
    let h = t_max / (bins * refine) as f64;

    let mut outside = 0;
    for b in 0..bins {
        // Simpson average of 2k Tr{ρQ_S} over the bin.
        let s = &qs[b * refine..=(b + 1) * refine];
        let mut integral = s[0] + s[refine];
        for (j, v) in s.iter().enumerate().take(refine).skip(1) {
            integral += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        let expected = 2.0 * k * integral * h / 3.0 / (h * refine as f64);
        if (ens.mean_jump_rate[b] - expected).abs() > 3.0 * ens.se_jump_rate[b] {
            outside += 1;
        }
    }
    // 3σ per bin: at most one of forty bins may fall outside by chance.
    assert!(outside <= 1, "{outside} bins outside 3 SE");
}

#[test]
fn standard_error_scales_with_ensemble_size() {
    let model = toy(1.0, 1.0, 1.0);
    let opts = TrajectoryOptions::new(5.0, 5e-3).with_samples(11);
    let small = ensemble_average(&model, &basis(&model, 0), &opts, 1000, 5).unwrap();
    let large = ensemble_average(&model, &basis(&model, 0), &opts, 2000, 6).unwrap();
    for i in 1..11 {
        let ratio = small.se_qs[i] / large.se_qs[i];
        let want = 2f64.sqrt();
        assert!(ratio > want / 1.5 && ratio < want * 1.5, "t={} ratio={ratio}", small.times[i]);
    }
}

#[test]
fn stationary_singlet_jump_count() {
    let (k, t) = (1.0, 5.0);
    let model = toy(0.0, 0.0, k);
    let opts = TrajectoryOptions::new(t, 5e-3).with_samples(2);
    let ens = ensemble_average(&model, &basis(&model, 0), &opts, 4000, 77).unwrap();
    assert!(ens.mean_qs.iter().all(|&q| q == 1.0));
    let mean = 2.0 * k * t;
    assert!((ens.mean_jump_count - mean).abs() < 3.0 * ens.se_jump_count, "{} ± {}", ens.mean_jump_count, ens.se_jump_count);
    // Poisson: variance equals the mean.
    let var = ens.se_jump_count.powi(2) * 4000.0;
    assert!((var / mean - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn deterministic_current_gives_constant_correlation() {
    let k = 2.0;
    let model = toy(0.0, 0.0, k);
    let opts = CorrelationOptions::new(1.0, 10.0, 2.5e-3, 400);
    let est = correlation_mc(&model, &basis(&model, 0), &[0.0, 0.5, 1.0], &opts, 3).unwrap();
    for (g, se) in est.raw.iter().zip(&est.se) {
        assert!((g - k * k).abs() < 5.0 * se, "{g} ± {se}");
    }
}

#[test]
fn correlation_mc_agrees_with_projected_reading() {
    let model = toy(1.0, 1.0, 1.0);
    let tau: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
    let opts = CorrelationOptions::new(20.0, 20.0, 5e-3, 600);
    let est = correlation_mc(&model, &basis(&model, 1), &tau, &opts, 11).unwrap();
    let exact = correlation_analytic(&model, &est.tau).unwrap();
    let agree = est
        .connected
        .iter()
        .zip(&est.se)
        .zip(&exact.projected)
        .filter(|((g, se), want)| (*g - *want).abs() <= 5.0 * *se)
        .count();
    assert!(agree * 100 >= 95 * tau.len(), "{agree}/{}", tau.len());
}

#[test]
fn correlation_variance_halves_when_ensemble_doubles() {
    let model = toy(1.0, 1.0, 1.0);
    let tau = [0.0, 1.0, 2.0];
    let run = |n, seed| {
        correlation_mc(&model, &basis(&model, 1), &tau, &CorrelationOptions::new(10.0, 10.0, 5e-3, n), seed).unwrap()
    };
    let (a, b) = (run(400, 1), run(800, 2));
    for j in 0..tau.len() {
        let ratio = (a.se[j] / b.se[j]).powi(2);
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "lag {j}: {ratio}");
    }
}

#[test]
fn correlation_mc_is_thread_independent() {
    let model = toy(1.0, 1.0, 1.0);
    let opts = CorrelationOptions::new(2.0, 2.0, 5e-3, 150);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| correlation_mc(&model, &basis(&model, 0), &[0.0, 0.3], &opts, 8).unwrap())
    };
    assert_eq!(run(1), run(3));
}

/// Prony fit of `order` exponentials to uniform samples; returns the rates `μᵢ`.
fn prony(samples: &[f64], h: f64, order: usize) -> Vec<C<f64>> {
    // Least squares for the linear-prediction coefficients via normal equations.
    let rows = samples.len() - order;
    let mut ata = CMatrix64::zeros(order, order);
    let mut atb = vec![C::new(0.0, 0.0); order];
    for r in 0..rows {
        for i in 0..order {
            let ai = samples[r + order - 1 - i];
            atb[i] += C::new(ai * samples[r + order], 0.0);
            for j in 0..order {
                ata[(i, j)] += C::new(ai * samples[r + order - 1 - j], 0.0);
            }
        }
    }
    let coef = solve(&ata, &CMatrix64::from_vec(order, 1, atb)).unwrap();
    // Companion matrix of zᵖ − Σ cᵢ z^{p−1−i}.
    let mut comp = CMatrix64::zeros(order, order);
    for j in 0..order {
        comp[(0, j)] = coef[(j, 0)];
    }
    for i in 1..order {
        comp[(i, i - 1)] = C::new(1.0, 0.0);
    }
    eigenvalues(&comp).unwrap().iter().map(|z| z.ln() / h).collect()
}

#[test]
fn correlation_decay_rates_match_liouvillian() {
    let model = toy(1.0, 1.0, 1.0);
    let h = 0.1;
    let tau: Vec<f64> = (0..60).map(|i| h * i as f64).collect();
    let g = correlation_analytic(&model, &tau).unwrap().projected;
    let fitted = prony(&g, h, 3);
    let modes = spectrum(&build_superoperator(&model, EquationVariant::Kominis)).unwrap();
    for mu in fitted {
        let nearest = modes
            .iter()
            .map(|m| m.eigenvalue())
            .min_by(|a, b| (a - mu).norm().partial_cmp(&(b - mu).norm()).unwrap())
            .unwrap();
        assert!((nearest - mu).norm() < 0.02 * nearest.norm(), "fitted {mu} vs {nearest}");
    }
}

#[test]
fn projected_correlation_vanishes_at_long_lags() {
    let model = toy(1.0, 1.0, 1.0);
    let c = correlation_analytic(&model, &[60.0]).unwrap();
    assert!(c.projected[0].abs() < 1e-10, "limit {}", c.projected[0]);
}
