//! Property tests over the public API.

use exsis::baselines::{
    lambda_max, rule_violations, safe_filter, solve_penalized, PenaltySpec, Solver, DEFAULT_MAX_ITERS,
};
use exsis::bounds::{self, BoundInput};
use exsis::coherence::{
    average_coherence, screening_condition_stats, worst_case_coherence, worst_case_coherence_blocked,
};
use exsis::experiments::{run_screening_comparison, ExperimentConfig};
use exsis::model::{marginal_correlations, msr, normalize_columns, simulate_response};
use exsis::screening::{minimum_model_size, screen_top_d};
use exsis::synth::{adjust_coherence, generate_beta_shifted, generate_beta_uniform, generate_design, DesignSpec};
use exsis::text::{build_tfidf, Corpus, TfidfOptions};
use exsis::{DesignMatrix, ScreeningDiagnostics, SparseModel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn design(n: usize, p: usize, seed: u64) -> DesignMatrix {
    generate_design(&DesignSpec::gaussian(n, p), seed).unwrap()
}

fn nonzero_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-5.0..-0.01f64, 0.01..5.0f64], len)
}

fn sparse_model(p: usize, k: usize, seed: u64) -> SparseModel {
    generate_beta_uniform(p, k, 1.0, 3.0, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlations_are_linear(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64,
                               y1 in nonzero_vec(12), y2 in nonzero_vec(12)) {
        let x = design(12, 20, seed);
        let mixed: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + b * v).collect();
        let w = marginal_correlations(&x, &mixed).unwrap();
        let (w1, w2) = (marginal_correlations(&x, &y1).unwrap(), marginal_correlations(&x, &y2).unwrap());
        for j in 0..20 {
            prop_assert!((w[j] - (a * w1[j] + b * w2[j])).abs() <= 1e-10);
        }
    }

    #[test]
    fn orthonormal_design_recovers_beta(values in nonzero_vec(3), support in prop::sample::subsequence((0..8).collect::<Vec<usize>>(), 3)) {
        let x = DesignMatrix::from_normalized(DMatrix::identity(8, 8)).unwrap();
        let model = SparseModel::from_support(8, &support, &values, 0.0).unwrap();
        let y = simulate_response(&x, &model, 0).unwrap().y;
        let w = marginal_correlations(&x, &y).unwrap();
        for (&j, &v) in support.iter().zip(&values) {
            prop_assert_eq!(w[j], v);
        }
    }

    #[test]
    fn diagnostics_decompose(seed in any::<u64>(), sigma in 0.0..2.0f64) {
        let x = design(30, 60, seed);
        let model = sparse_model(60, 4, seed ^ 1).with_sigma(sigma);
        let response = simulate_response(&x, &model, seed ^ 2).unwrap();
        let diag = ScreeningDiagnostics::compute(&x, &model, &response).unwrap();
        for j in 0..60 {
            prop_assert!((diag.w[j] - diag.xi[j] - diag.eta_tilde[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn msr_in_range(values in nonzero_vec(6)) {
        let model = SparseModel::from_support(40, &[1, 5, 9, 20, 30, 39], &values, 0.0).unwrap();
        let m = msr(&model).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0 / 6f64.sqrt() + 1e-15);
    }

    #[test]
    fn coherence_inequality(seed in any::<u64>(), k in 1usize..5) {
        let x = design(20, 30, seed);
        let model = generate_beta_shifted(30, k, seed ^ 7).unwrap();
        let stats = screening_condition_stats(&x, &model).unwrap();
        let (mu, _) = worst_case_coherence(&x).unwrap();
        // Tight at the argmax pair when k = 1, so allow rounding slack.
        let bound = mu * (k as f64).sqrt() * model.l2_norm() * (1.0 + 1e-12);
        prop_assert!(stats.sc1 <= bound && stats.sc2 <= bound, "{} {} {}", stats.sc1, stats.sc2, bound);
    }

    #[test]
    fn average_coherence_matches_double_sum(seed in any::<u64>(), p in 2usize..25) {
        let x = design(10, p, seed);
        let g = x.matrix().transpose() * x.matrix();
        let brute = (0..p)
            .map(|i| ((0..p).filter(|&j| j != i).map(|j| g[(i, j)]).sum::<f64>()).abs())
            .fold(0.0, f64::max) / (p - 1) as f64;
        prop_assert!((average_coherence(&x).unwrap() - brute).abs() <= 1e-12);
    }

    #[test]
    fn blocked_coherence_ignores_block_size(seed in any::<u64>(), block in 1usize..40) {
        let x = design(15, 37, seed);
        // Block shape changes the summation order of each Gram entry.
        let (blocked, _) = worst_case_coherence_blocked(&x, block).unwrap();
        let (whole, _) = worst_case_coherence(&x).unwrap();
        prop_assert!((blocked - whole).abs() <= 1e-14);
    }

    #[test]
    fn screening_is_scale_invariant(w in nonzero_vec(30), c in 0.001..1000.0f64, d in 1usize..=30) {
        let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
        prop_assert_eq!(screen_top_d(&w, d).unwrap().selected, screen_top_d(&scaled, d).unwrap().selected);
    }

    #[test]
    fn screening_is_nested(w in prop::collection::vec(-3i32..3, 25), d1 in 1usize..=25, d2 in 1usize..=25) {
        // Small integers force ties, exercising the tie rule.
        let w: Vec<f64> = w.into_iter().map(f64::from).collect();
        let (lo, hi) = (d1.min(d2), d1.max(d2));
        let small = screen_top_d(&w, lo).unwrap().selected;
        let large = screen_top_d(&w, hi).unwrap().selected;
        prop_assert!(small.iter().all(|i| large.contains(i)));
    }

    #[test]
    fn screening_is_permutation_equivariant(w in nonzero_vec(20), perm in Just((0..20).collect::<Vec<usize>>()).prop_shuffle(), d in 1usize..=20) {
        // Distinct magnitudes, so the tie rule never decides membership.
        let w: Vec<f64> = w.iter().enumerate().map(|(i, v)| v + 1e-3 * i as f64 * v.signum()).collect();
        let permuted: Vec<f64> = perm.iter().map(|&src| w[src]).collect();
        let mut mapped: Vec<usize> = screen_top_d(&permuted, d).unwrap().selected.iter().map(|&i| perm[i]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, screen_top_d(&w, d).unwrap().selected);
    }

    #[test]
    fn minimum_model_size_bounds(w in prop::collection::vec(-4i32..4, 15), support in prop::sample::subsequence((0..15).collect::<Vec<usize>>(), 1..6)) {
        let w: Vec<f64> = w.into_iter().map(f64::from).collect();
        let mms = minimum_model_size(&w, &support).unwrap();
        prop_assert!(mms >= support.len() && mms <= w.len());
        let weakest = support.iter().map(|&i| w[i].abs()).fold(f64::INFINITY, f64::min);
        let separated = (0..15).filter(|j| !support.contains(j)).all(|j| w[j].abs() < weakest);
        prop_assert_eq!(mms == support.len(), separated);
        // Top-mms screening keeps the support whatever the tie rule.
        let kept = screen_top_d(&w, mms).unwrap().selected;
        prop_assert!(support.iter().all(|i| kept.contains(i)));
    }

    #[test]
    fn general_bound_is_monotone(k in 1usize..8, msr_frac in 0.3..1.0f64, b in 0.0..0.2f64, sigma in 0.0..0.05f64,
                                 dm in 0.0..0.1f64, db in 0.0..0.05f64, ds in 0.0..0.02f64) {
        let cap = 1.0 / (k as f64).sqrt();
        let base = BoundInput { k: Some(k), beta_min: Some(msr_frac * cap), sigma, b: Some(b), ..BoundInput::new(500, 2000) };
        let d = |input: &BoundInput| bounds::d_general(input).unwrap().d_min.unwrap_or(usize::MAX);
        let d0 = d(&base);
        let higher_msr = BoundInput { beta_min: Some((msr_frac * cap + dm).min(cap)), ..base.clone() };
        prop_assert!(d(&higher_msr) <= d0);
        let wider_b = BoundInput { b: Some(b + db), ..base.clone() };
        prop_assert!(d(&wider_b) >= d0);
        let noisier = BoundInput { sigma: sigma + ds, ..base.clone() };
        prop_assert!(d(&noisier) >= d0);
        if k > 1 {
            // Same β_min with one more nonzero cannot make screening easier.
            let denser = BoundInput { k: Some(k + 1), ..base.clone() };
            prop_assert!(d(&denser) >= d0);
        }
    }

    #[test]
    fn subgaussian_and_general_routes_agree(k in 1usize..6, msr_frac in 0.5..1.0f64, sigma in 0.0..0.01f64) {
        let (n, p) = (4000, 2000);
        let input = BoundInput { k: Some(k), beta_min: Some(msr_frac / (k as f64).sqrt()), sigma, ..BoundInput::new(n, p) };
        let sub = bounds::d_subgaussian(&input).unwrap();
        let (b, _) = bounds::b_subgaussian(n, p, 1.0);
        let general = bounds::d_general(&BoundInput { b: Some(b), ..input }).unwrap();
        prop_assert_eq!(sub.d_min, general.d_min);
    }

    #[test]
    fn parameter_free_size_covers_slack_bound(n in 200usize..2000, k in 1usize..5, msr_frac in 0.9..1.0f64) {
        let p = 20 * n;
        let input = BoundInput { k: Some(k), beta_min: Some(msr_frac / (k as f64).sqrt()), ..BoundInput::new(n, p) };
        let sub = bounds::d_subgaussian(&input).unwrap();
        let holds = sub.preconditions.iter().all(|c| c.holds);
        if let (true, Some(slack), Some(fallback)) = (holds, sub.slack_d, sub.fallback_d) {
            prop_assert!(fallback >= slack, "fallback {} < slack {}", fallback, slack);
        }
    }

    #[test]
    fn designs_are_deterministic_and_normalized(seed in any::<u64>(), rho in 0.0..0.9f64) {
        let spec = DesignSpec::equicorrelated(15, 40, rho);
        let a = generate_design(&spec, seed).unwrap();
        prop_assert_eq!(&a, &generate_design(&spec, seed).unwrap());
        for j in 0..40 {
            let norm = a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn safe_rule_never_discards_active(seed in any::<u64>(), ratio in 0.05..1.0f64) {
        let x = design(25, 60, seed);
        let model = generate_beta_shifted(60, 3, seed ^ 3).unwrap().with_sigma(1.0);
        let y = simulate_response(&x, &model, seed ^ 4).unwrap().y;
        let lmax = lambda_max(&x, &y, 1.0).unwrap();
        let lambda = ratio * lmax;
        let rule = safe_filter(&x, &y, lambda, lmax).unwrap();
        let fit = solve_penalized(&x, &y, &PenaltySpec::lasso(lambda), 1e-12, DEFAULT_MAX_ITERS).unwrap();
        prop_assert!(fit.kkt_residual <= 1e-6);
        prop_assert!(rule_violations(&rule, &fit.beta_hat).is_empty());
    }

    #[test]
    fn pure_lasso_paths_coincide(seed in any::<u64>(), ratio in 0.05..1.0f64) {
        let x = design(20, 40, seed);
        let y: Vec<f64> = design(20, 1, seed ^ 9).column(0).to_vec();
        let lambda = ratio * lambda_max(&x, &y, 1.0).unwrap();
        let lasso = Solver::new(&x, &y, PenaltySpec::lasso(lambda)).solve().unwrap();
        let enet = Solver::new(&x, &y, PenaltySpec::elastic_net(lambda, 1.0)).solve().unwrap();
        prop_assert_eq!(lasso, enet);
    }

    #[test]
    fn tfidf_is_nonnegative_and_vocabulary_round_trips(docs in prop::collection::vec(prop::collection::vec("[a-e]{2,3}", 0..12), 2..10)) {
        let texts: Vec<(String, String, u8)> = docs
            .iter()
            .enumerate()
            .map(|(i, words)| (format!("d{i}"), words.join(" "), (i % 2) as u8))
            .collect();
        let corpus = Corpus::from_texts(texts).unwrap();
        let Ok((model, tfidf)) = build_tfidf(&corpus, TfidfOptions { min_df: 1, smooth: false }) else {
            return Ok(());
        };
        prop_assert!(tfidf.matrix.iter().all(|v| *v >= 0.0));
        for (row, zero) in tfidf.matrix.row_iter().enumerate().map(|(i, r)| (i, r.iter().all(|v| *v == 0.0))) {
            prop_assert_eq!(zero, tfidf.zero_rows.contains(&row));
        }
        let vocab = &model.vocabulary;
        for column in 0..vocab.len() {
            prop_assert_eq!(vocab.column(vocab.token(column).unwrap()), Some(column));
        }
    }
}

#[test]
fn adjusted_designs_stay_normalized() {
    let x = design(40, 80, 3);
    let adjusted = adjust_coherence(&x, 0.6, 0.01).unwrap();
    let (mu, _) = worst_case_coherence(&adjusted).unwrap();
    assert!((mu - 0.6).abs() <= 0.01);
    for j in 0..80 {
        let norm = adjusted.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn experiments_reproduce_bit_exactly() {
    let mut config = ExperimentConfig::compare(120, 0.2);
    config.trials = 3;
    config.master_seed = Some(99);
    config.design.n = 30;
    config.lambda_grid_size = 8;
    config.solve_path = true;
    let strip = |run: exsis::experiments::CompareRun| run.records.iter().map(|r| r.without_timings()).collect::<Vec<_>>();
    let a = strip(run_screening_comparison(&config).unwrap());
    let b = strip(run_screening_comparison(&config).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn normalization_rejects_zero_columns() {
    let raw = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 3.0, 0.0, 1.0]);
    let err = normalize_columns(raw).unwrap_err();
    assert!(err.to_string().contains("column 1"));
}
