use intervene_core::calibration::{fit_temperature, CalibrationParams};
use intervene_core::sim::{
    default_drift_grid, drift_experiment, evaluate_policy, generate_stream, realized_costs, sweep_on, AudbcSettings,
    SimConfig, SweepConfig,
};
use intervene_core::{decide, decide_bayes_oracle, CostModel, GateConfig, Mode};

fn cfg(n: usize, seed: u64) -> SimConfig {
    SimConfig { n_events: n, seed, ..SimConfig::default() }
}

#[test]
fn streams_are_byte_identical_per_seed() {
    let a = generate_stream(&cfg(3_000, 77)).unwrap();
    let b = generate_stream(&cfg(3_000, 77)).unwrap();
    assert_eq!(serde_json::to_vec(&a.events).unwrap(), serde_json::to_vec(&b.events).unwrap());
    assert_eq!(serde_json::to_vec(&a.truths).unwrap(), serde_json::to_vec(&b.truths).unwrap());
}

#[test]
fn need_rate_follows_the_config() {
    let s = generate_stream(&cfg(100_000, 5)).unwrap();
    let rate = s.events.iter().filter(|r| r.y_need == Some(1)).count() as f64 / 1e5;
    assert!((rate - 0.5).abs() < 0.01, "{rate}");
    let skewed = generate_stream(&SimConfig { need_rate: 0.2, ..cfg(100_000, 6) }).unwrap();
    let rate = skewed.events.iter().filter(|r| r.y_need == Some(1)).count() as f64 / 1e5;
    assert!((rate - 0.2).abs() < 0.01, "{rate}");
}

#[test]
fn candidate_rate_controls_empty_events() {
    let s = generate_stream(&SimConfig { candidate_rate: 0.7, ..cfg(50_000, 8) }).unwrap();
    let rate = s.events.iter().filter(|r| r.n_candidates == 1).count() as f64 / 5e4;
    assert!((rate - 0.7).abs() < 0.01, "{rate}");
    assert!(s.events.iter().all(|r| r.n_candidates <= 1));
}

#[test]
fn token_identity_is_exact_for_any_margin() {
    let s = generate_stream(&cfg(20_000, 9)).unwrap();
    let costs = CostModel::new(1.0, 2.0).unwrap();
    for d in [0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let r = evaluate_policy(&s.events, &GateConfig::new(costs, d, 0.0).unwrap(), 1e-9).unwrap().report;
        assert_eq!(r.total_tokens, 510 * r.n_events as u64 + 183 * r.slow_count as u64);
        assert!((r.mean_tokens - (510.0 + r.slow_rate * 183.0)).abs() < 1e-9);
    }
}

#[test]
fn noiseless_degenerate_policies() {
    let s = generate_stream(&SimConfig { sigma_fast: 0.0, sigma_slow: 0.0, ..cfg(5_000, 10) }).unwrap();
    let costs = CostModel::new(1.0, 1.0).unwrap();
    let fast = evaluate_policy(&s.events, &GateConfig::fast_only(costs), 1e-9).unwrap().report;
    assert_eq!(fast.slow_rate, 0.0);
    assert_eq!(fast.mean_tokens, 510.0);
    let slow = evaluate_policy(&s.events, &GateConfig::new(costs, 1.0, 0.0).unwrap(), 1e-9).unwrap().report;
    assert_eq!(slow.slow_rate, 1.0);
    assert_eq!(slow.mean_tokens, 693.0);
}

/// With noiseless, calibrated estimates the gate is the Bayes rule, so no
/// fixed acceptance threshold beats it on realised cost.
#[test]
fn gate_dominates_fixed_thresholds() {
    let s = generate_stream(&SimConfig { sigma_fast: 0.0, sigma_slow: 0.0, ..cfg(100_000, 12) }).unwrap();
    for (c_fa, c_fn) in [(1.0, 2.0), (1.0, 4.0), (1.2, 1.0)] {
        let costs = CostModel::new(c_fa, c_fn).unwrap();
        let gate = GateConfig::fast_only(costs);
        let gate_dec: Vec<bool> = s.events.iter().map(|r| decide(&r.fast, &gate).unwrap().intervene).collect();
        for (r, t) in s.events.iter().zip(&s.truths) {
            let truth = intervene_core::ProbPair::new(t.p_need, t.p_accept).unwrap();
            assert_eq!(decide(&r.fast, &gate).unwrap().intervene, decide_bayes_oracle(&truth, &costs).unwrap().intervene);
        }
        let gate_cost = realized_costs(&s.events, &gate_dec, &costs).unwrap();
        for k in 1..20 {
            let t = k as f64 / 20.0;
            let fixed: Vec<bool> = s.events.iter().map(|r| r.fast.p_accept >= t).collect();
            let fixed_cost = realized_costs(&s.events, &fixed, &costs).unwrap();
            let diffs: Vec<f64> = gate_cost.iter().zip(&fixed_cost).map(|(g, f)| g - f).collect();
            let n = diffs.len() as f64;
            let mean = diffs.iter().sum::<f64>() / n;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!(mean <= 2.0 * se, "costs {c_fa}:{c_fn}, fixed {t}: gate worse by {mean} (se {se})");
        }
    }
}

/// Reported logits are `true / miscal_t`, so the temperature that undoes
/// the miscalibration is `1 / miscal_t`.
#[test]
fn miscalibrated_stream_fits_reciprocal_temperature() {
    for t_star in [0.5, 0.7, 2.0] {
        let s = generate_stream(&SimConfig { sigma_fast: 0.0, sigma_slow: 0.0, miscal_t: t_star, ..cfg(20_000, 13) })
            .unwrap();
        let preds: Vec<f64> = s.events.iter().map(|r| r.fast.p_accept).collect();
        let labels: Vec<bool> = s.events.iter().map(|r| r.y_accept == Some(1)).collect();
        let t = fit_temperature(&preds, &labels).unwrap();
        let want = 1.0 / t_star;
        assert!((t - want).abs() <= 0.1 * want, "miscal_t {t_star}: fitted {t}, want {want}");
        let preds: Vec<f64> = s.events.iter().map(|r| r.fast.p_need).collect();
        let labels: Vec<bool> = s.events.iter().map(|r| r.y_need == Some(1)).collect();
        let t = fit_temperature(&preds, &labels).unwrap();
        assert!((t - want).abs() <= 0.1 * want, "need, miscal_t {t_star}: fitted {t}, want {want}");
    }
}

#[test]
fn sweep_rows_are_monotone() {
    let s = generate_stream(&cfg(10_000, 14)).unwrap();
    let config = SweepConfig::default();
    let rows = sweep_on(&s.events, &config).unwrap();
    assert_eq!(rows.len(), 16);
    let rate = |r: &intervene_core::sim::SweepRow| (r.report.counts.tp + r.report.counts.fp) as f64 / r.report.n_events as f64;
    for (i, _) in config.cost_ratios.iter().enumerate() {
        let block = &rows[i * 4..i * 4 + 4];
        for w in block.windows(2) {
            assert!(w[1].report.slow_rate >= w[0].report.slow_rate);
        }
    }
    // Within each margin, stricter ratios (ordered 1:4 .. 1.2:1) never
    // intervene more. Slow passes change the estimates, so compare only
    // the fast-only column where the policy differs by threshold alone.
    for w in (0..4).map(|i| &rows[i * 4]).collect::<Vec<_>>().windows(2) {
        assert!(rate(w[1]) <= rate(w[0]), "{} then {}", w[0].tag(), w[1].tag());
    }
}

#[test]
fn drift_identity_and_saturation() {
    let s = generate_stream(&cfg(5_000, 15)).unwrap();
    let base = GateConfig::new(CostModel::new(1.0, 2.0).unwrap(), 0.1, 0.0).unwrap();
    let grid = vec![CalibrationParams::shared(1.0, 0.0).unwrap(), CalibrationParams::shared(1.0, 1.0).unwrap()];
    let rows = drift_experiment(&s.events, &base, &grid, 1e-9, &AudbcSettings::default()).unwrap();
    let baseline = evaluate_policy(&s.events, &base, 1e-9).unwrap().report;
    assert_eq!(rows[0].flip_rate, 0.0);
    assert_eq!(rows[0].report, baseline);
    let all = &rows[1].report;
    assert_eq!(all.counts.tp + all.counts.fp, all.n_events as u64);
}

#[test]
fn drift_grid_keeps_routing_fixed() {
    let s = generate_stream(&cfg(5_000, 16)).unwrap();
    let base = GateConfig::new(CostModel::new(1.0, 2.0).unwrap(), 0.1, 0.0).unwrap();
    let rows = drift_experiment(&s.events, &base, &default_drift_grid(), 1e-9, &AudbcSettings::default()).unwrap();
    let baseline = evaluate_policy(&s.events, &base, 1e-9).unwrap();
    let slow = baseline.outcomes.iter().filter(|o| o.decision.mode == Mode::Slow).count();
    assert!(rows.iter().all(|r| r.report.slow_count == slow));
    assert_eq!(rows.len(), 11);
}

#[test]
fn evaluation_does_not_depend_on_worker_count() {
    let s = generate_stream(&cfg(5_000, 17)).unwrap();
    let gate = GateConfig::new(CostModel::new(1.0, 2.0).unwrap(), 0.1, 0.0).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| evaluate_policy(&s.events, &gate, 1e-9).unwrap().report)
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn jitter_exercises_p95() {
    let s = generate_stream(&SimConfig { latency_jitter_sigma: 0.3, ..cfg(5_000, 18) }).unwrap();
    let costs = CostModel::new(1.0, 2.0).unwrap();
    let r = evaluate_policy(&s.events, &GateConfig::fast_only(costs), 1e-9).unwrap().report;
    let mut lat: Vec<f64> = s.events.iter().map(|e| e.latency_fast_ms).collect();
    lat.sort_by(f64::total_cmp);
    // Nearest rank: ceil(0.95 n).
    assert_eq!(r.p95_latency_ms, lat[(0.95 * lat.len() as f64).ceil() as usize - 1]);
    assert!(r.p95_latency_ms > 176.0);
}
