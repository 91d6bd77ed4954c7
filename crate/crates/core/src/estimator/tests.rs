use super::*;
use crate::integrand::VariationBound;
use crate::premium_flow::BarrierPremium;
use crate::quad;
use crate::risk_model::{Distribution, Penalty};

fn base_model(penalty: Penalty) -> ModelParams {
    ModelParams {
        x: 1.2,
        premium: BarrierPremium::new(2.0, 3.0, 0.001).unwrap(),
        interarrival: Distribution::exponential(1.0),
        claim: Distribution::exponential(0.8),
        delta: 0.05,
        penalty,
    }
}

fn regular_model() -> ModelParams {
    ModelParams {
        interarrival: Distribution::exponential(2.95),
        claim: Distribution::exponential(3.0),
        ..base_model(Penalty::ConstantOne)
    }
}

/// Deterministic 2-D quadrature of the level-1 integrand over the unit square.
fn level_one_quadrature(ctx: &IntegrandContext) -> f64 {
    let t_entry = (ctx.model.premium.blend_start() - ctx.model.x) / ctx.model.premium.c_tilde;
    let kink = (-t_entry).exp();
    let inner = |a: f64| quad::integrate(|b| ctx.evaluate(&[a, b]), 0.0, 1.0, 1e-13, 1e-11).0;
    [(0.0, kink * 0.999), (kink * 0.999, kink), (kink, 1.0)]
        .iter()
        .map(|&(lo, hi)| quad::integrate(inner, lo, hi, 1e-12, 1e-10).0)
        .sum()
}

#[test]
fn moments_merge_matches_direct() {
    let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
    let mut whole = Moments::default();
    xs.iter().for_each(|&x| whole.push(x));
    let mut a = Moments::default();
    let mut b = Moments::default();
    xs[..313].iter().for_each(|&x| a.push(x));
    xs[313..].iter().for_each(|&x| b.push(x));
    let m = a.merge(b);
    assert!((m.mean - whole.mean).abs() < 1e-12);
    assert!((m.m2 - whole.m2).abs() < 1e-9 * whole.m2);
}

#[test]
fn zero_penalty_levels_vanish() {
    let m = base_model(Penalty::Zero);
    for kind in [SequenceKind::Halton, SequenceKind::Sobol, SequenceKind::Pseudorandom] {
        let specs = level_specs(kind, 4, 64, Some(3), 0);
        let est = estimate_gerber_shiu(4, &specs, &m).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.per_level.iter().all(|l| l.value == 0.0));
    }
}

#[test]
fn empty_sum_is_zero() {
    let est = estimate_gerber_shiu(0, &[], &base_model(Penalty::ConstantOne)).unwrap();
    assert_eq!(est.value, 0.0);
    assert!(est.per_level.is_empty());
}

#[test]
fn dimension_mismatch_rejected() {
    let ctx = IntegrandContext::new(base_model(Penalty::ConstantOne), 2).unwrap();
    let spec = PointSetSpec::new(SequenceKind::Halton, 3, 10);
    assert!(matches!(
        estimate_level(&spec, &ctx),
        Err(Error::DimensionMismatch { expected: 4, got: 3 })
    ));
    let specs = level_specs(SequenceKind::Halton, 2, 10, None, 0);
    assert!(estimate_gerber_shiu(3, &specs, &base_model(Penalty::ConstantOne)).is_err());
}

#[test]
fn single_point_average_is_integrand_value() {
    let ctx = IntegrandContext::new(base_model(Penalty::ConstantOne), 1).unwrap();
    let spec = PointSetSpec::new(SequenceKind::Sobol, 2, 1);
    let u = PointSet::new(&spec).unwrap().point(0);
    let est = estimate_level(&spec, &ctx).unwrap();
    assert_eq!(est.value, ctx.evaluate(&u));
    assert_eq!(est.stderr, None);
}

#[test]
fn level_specs_layout() {
    let specs = level_specs(SequenceKind::Pseudorandom, 5, 100, None, 7);
    for (i, s) in specs.iter().enumerate() {
        assert_eq!(s.dimension, 2 * (i + 1));
        assert_eq!(s.skip, 7);
    }
    let seeds: std::collections::HashSet<_> = specs.iter().map(|s| s.scramble_seed).collect();
    assert_eq!(seeds.len(), 5);
    assert!(level_specs(SequenceKind::Sobol, 3, 10, None, 0)
        .iter()
        .all(|s| s.scramble_seed.is_none()));
}

#[test]
fn level_one_matches_quadrature() {
    let ctx = IntegrandContext::new(base_model(Penalty::ConstantOne), 1).unwrap();
    let exact = level_one_quadrature(&ctx);
    let t_space = one_claim_value(&ctx.model, ctx.model.x).unwrap();
    assert!((exact - t_space).abs() < 1e-7, "{exact} vs {t_space}");
    let spec = PointSetSpec::new(SequenceKind::Pseudorandom, 2, 1_000_000).with_seed(5);
    let est = estimate_level(&spec, &ctx).unwrap();
    let se = est.stderr.unwrap();
    assert!((est.value - exact).abs() < 4.0 * se, "{} vs {exact} (se {se})", est.value);
    let qmc = estimate_level(&PointSetSpec::new(SequenceKind::Sobol, 2, 1 << 16), &ctx).unwrap();
    assert!((qmc.value - exact).abs() < 2e-3, "{} vs {exact}", qmc.value);
}

#[test]
fn one_claim_value_deficit_closed_form_linear_region() {
    // w = y, exponential claims: inner integral is exp(-mu X) / mu for any X,
    // so H(z) = integral e^{-delta t} lam e^{-lam t} e^{-mu phi(t, z)} dt / mu.
    let m = base_model(Penalty::Deficit);
    let h1 = one_claim_value(&m, 0.5).unwrap();
    let c1 = one_claim_value(&base_model(Penalty::ConstantOne), 0.5).unwrap();
    assert!((h1 - c1 / 0.8).abs() < 1e-9 * h1);
    // with a = inf effectively (no barrier reached before truncation) the
    // constant penalty value is lam / (lam + delta + mu c) e^{-mu z}
    let far = ModelParams {
        premium: BarrierPremium::new(2.0, 500.0, 0.001).unwrap(),
        ..base_model(Penalty::ConstantOne)
    };
    let v = one_claim_value(&far, 0.5).unwrap();
    let expect = 1.0 / (1.0 + 0.05 + 0.8 * 2.0) * (-0.4f64).exp();
    assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
}

#[test]
fn one_claim_sup_below_integrability_bound() {
    let m = base_model(Penalty::ConstantOne);
    let s = one_claim_sup(&m, 8).unwrap();
    assert!(s > 0.0 && s <= 1.0);
}

#[test]
fn contraction_examples() {
    let mut m = base_model(Penalty::ConstantOne);
    assert!((contraction_factor(&m) - 1.0 / 1.05).abs() < 1e-15);
    m.delta = 0.0;
    assert_eq!(contraction_factor(&m), 1.0);
    m.delta = 0.3;
    m.interarrival = Distribution::gamma(2.0, 1.5);
    assert!((contraction_factor(&m) - (1.5f64 / 1.8).powi(2)).abs() < 1e-15);
}

#[test]
fn tail_bound_examples() {
    let mut m = base_model(Penalty::ConstantOne);
    assert_eq!(tail_bound(0, &m, 2.5).value, 2.5);
    let t = tail_bound(100, &m, 1.0);
    assert!(!t.no_decay);
    assert!((t.value - (1.0f64 / 1.05).powf(100.0)).abs() < 1e-12);
    assert!((t.value - 0.007604).abs() < 1e-6);
    let mut prev = f64::INFINITY;
    for n in 0..50 {
        let v = tail_bound(n, &m, 1.0).value;
        assert!(v < prev);
        prev = v;
    }
    m.delta = 0.0;
    let t = tail_bound(100, &m, 3.0);
    assert!(t.no_decay);
    assert_eq!(t.value, 3.0);
}

#[test]
fn monotone_in_truncation() {
    let m = base_model(Penalty::ConstantOne);
    let specs = level_specs(SequenceKind::Halton, 12, 2000, None, 0);
    let mut prev = 0.0;
    for n in 1..=12 {
        let e = estimate_gerber_shiu(n, &specs[..n], &m).unwrap();
        assert!(e.value >= prev);
        prev = e.value;
    }
}

#[test]
fn mc_stderr_combines_levels() {
    let m = base_model(Penalty::ConstantOne);
    let specs = level_specs(SequenceKind::Pseudorandom, 3, 5000, Some(1), 0);
    let e = estimate_gerber_shiu(3, &specs, &m).unwrap();
    let rss: f64 = e.per_level.iter().map(|l| l.stderr.unwrap().powi(2)).sum::<f64>().sqrt();
    assert_eq!(e.stderr, Some(rss));
    let (lo, hi) = e.ci95.unwrap();
    assert!((lo - (e.value - 1.96 * rss)).abs() < 1e-15);
    assert!((hi - (e.value + 1.96 * rss)).abs() < 1e-15);
    let q = estimate_gerber_shiu(3, &level_specs(SequenceKind::Sobol, 3, 512, None, 0), &m).unwrap();
    assert!(q.stderr.is_none() && q.ci95.is_none());
}

#[test]
fn bit_identical_across_thread_counts() {
    let m = base_model(Penalty::Deficit);
    let run = |threads: usize, kind: SequenceKind| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let specs = level_specs(kind, 6, 5000, Some(9), 3);
                estimate_gerber_shiu(6, &specs, &m).unwrap()
            })
    };
    for kind in [SequenceKind::Halton, SequenceKind::Sobol, SequenceKind::Pseudorandom] {
        let a = run(1, kind);
        let b = run(4, kind);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a, b);
    }
}

#[test]
fn simulator_zero_penalty_and_heavy_discount() {
    let z = mc_reference_simulator(&base_model(Penalty::Zero), 1000, 50, 1).unwrap();
    assert_eq!(z.value, 0.0);
    let mut m = base_model(Penalty::ConstantOne);
    m.delta = 50.0;
    let e = mc_reference_simulator(&m, 20_000, 50, 2).unwrap();
    assert!(e.value < 0.01, "{}", e.value);
}

#[test]
fn simulator_value_is_sum_of_levels_and_deterministic() {
    let m = base_model(Penalty::ConstantOne);
    let a = mc_reference_simulator(&m, 5000, 20, 4).unwrap();
    let b = mc_reference_simulator(&m, 5000, 20, 4).unwrap();
    assert_eq!(a, b);
    let s: f64 = a.per_level.iter().map(|l| l.value).sum();
    assert_eq!(a.value, s);
    assert_eq!(a.per_level.len(), 20);
}

#[test]
fn simulator_agrees_with_integrand_levels() {
    let m = base_model(Penalty::Deficit);
    let sim = mc_reference_simulator(&m, 200_000, 3, 11).unwrap();
    for k in 1..=2 {
        let ctx = IntegrandContext::new(m, k).unwrap();
        let spec = PointSetSpec::new(SequenceKind::Pseudorandom, 2 * k, 200_000).with_seed(12);
        let f = estimate_level(&spec, &ctx).unwrap();
        let s = &sim.per_level[k - 1];
        let se = (f.stderr.unwrap().powi(2) + s.stderr.unwrap().powi(2)).sqrt();
        assert!((f.value - s.value).abs() < 4.0 * se, "k={k}: {} vs {} (se {se})", f.value, s.value);
    }
}

#[test]
fn budget_for_zero_penalty() {
    let m = base_model(Penalty::Zero);
    let ctx = IntegrandContext::new(m, 1).unwrap();
    let specs = level_specs(SequenceKind::Halton, 3, 256, None, 0);
    let b = error_budget(&specs, &ctx, 0.0, &BudgetOptions::default()).unwrap();
    assert_eq!(b.banach_term, Some(0.0));
    assert_eq!(b.tail_term.value, 0.0);
    for t in &b.qmc_terms {
        assert_eq!(t.variation, Some(VariationBound::Finite { value: 0.0 }));
        assert_eq!(t.product, Some(0.0));
    }
}

#[test]
fn budget_for_base_parameters() {
    let m = base_model(Penalty::ConstantOne);
    let ctx = IntegrandContext::new(m, 1).unwrap();
    let specs = level_specs(SequenceKind::Sobol, 100, 256, None, 0);
    let opts = BudgetOptions {
        discrepancy_effort: 8,
        banach_grid: 6,
        ..BudgetOptions::default()
    };
    let b = error_budget(&specs, &ctx, 1.0, &opts).unwrap();
    assert!(b.qmc_terms[0].variation.unwrap().is_unbounded());
    assert!(b.qmc_terms[1].variation.unwrap().is_unbounded());
    assert!(b.qmc_terms[2].variation.is_none());
    let banach = b.banach_term.unwrap();
    let cap = (1.0f64 / 1.05).powi(100) / (1.0 - 1.0 / 1.05);
    assert!((cap - 0.1597).abs() < 1e-4);
    assert!(banach <= cap && banach > 0.0);
    assert!((b.tail_term.value - 0.007604).abs() < 1e-6);
    assert!(b.qmc_terms.iter().all(|t| t.discrepancy > 0.0 && t.discrepancy <= 1.0));
}

#[test]
fn budget_in_regular_regime_is_finite() {
    let ctx = IntegrandContext::new(regular_model(), 1).unwrap();
    let specs = level_specs(SequenceKind::Halton, 2, 512, None, 0);
    let opts = BudgetOptions {
        variation_grid: 5,
        banach_grid: 6,
        ..BudgetOptions::default()
    };
    let b = error_budget(&specs, &ctx, 1.0, &opts).unwrap();
    for t in &b.qmc_terms {
        assert!(t.product.is_some_and(f64::is_finite), "{t:?}");
    }
    assert!(b.banach_term.unwrap().is_finite());
    assert!(b.tail_term.value.is_finite());
    // banach term decreases with the number of levels
    let short = error_budget(&specs[..1], &ctx, 1.0, &opts).unwrap();
    assert!(b.banach_term.unwrap() < short.banach_term.unwrap());
}

#[test]
fn budget_without_discount_omits_banach() {
    let mut m = base_model(Penalty::Deficit);
    m.delta = 0.0;
    let ctx = IntegrandContext::new(m, 1).unwrap();
    let specs = level_specs(SequenceKind::Halton, 2, 128, None, 0);
    let b = error_budget(&specs, &ctx, 1.0, &BudgetOptions { banach_grid: 4, ..Default::default() }).unwrap();
    assert!(b.banach_term.is_none());
    assert!(b.tail_term.no_decay);
}

#[test]
fn prefixes_match_standalone_runs() {
    let ctx = IntegrandContext::new(base_model(Penalty::Deficit), 3).unwrap();
    for kind in [SequenceKind::Halton, SequenceKind::Pseudorandom] {
        let spec = PointSetSpec::new(kind, 6, 5000).with_seed(4).with_skip(2);
        let counts = [1, 1024, 2047, 3000, 5000];
        let many = estimate_level_prefixes(&spec, &ctx, &counts).unwrap();
        for (n, got) in counts.iter().zip(&many) {
            let mut one = spec.clone();
            one.count = *n;
            assert_eq!(*got, estimate_level(&one, &ctx).unwrap());
        }
    }
    let spec = PointSetSpec::new(SequenceKind::Sobol, 6, 10);
    assert!(estimate_level_prefixes(&spec, &ctx, &[0]).is_err());
}
