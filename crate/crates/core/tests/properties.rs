use proptest::prelude::*;

use gauss_rdp::bounds::{improved_lower_w2, induced_lower_kl, induced_upper_w2, lower, upper};
use gauss_rdp::ecsq::{binary_quantizer, Quantizer};
use gauss_rdp::scalar::{std_normal_cdf, std_normal_quantile, xi};
use gauss_rdp::talagrand::{check_refined_talagrand, random_constrained_mixture, trial_rng};
use gauss_rdp::{ExtReal, GaussianSource, Measure, RdpQuery};

fn source() -> impl Strategy<Value = GaussianSource> {
    (-3.0..3.0f64, 0.05..5.0f64).prop_map(|(m, v)| GaussianSource::new(m, v).unwrap())
}

fn ext(max: f64) -> impl Strategy<Value = ExtReal> {
    prop_oneof![
        9 => (0.0..max).prop_map(|x| ExtReal::new(x).unwrap()),
        1 => Just(ExtReal::INFINITY),
        1 => Just(ExtReal::ZERO),
    ]
}

fn query(measure: Measure) -> impl Strategy<Value = RdpQuery> {
    (source(), ext(3.0), ext(3.0), ext(3.0)).prop_map(move |(s, r, rc, p)| RdpQuery::new(s, r, rc, p, measure))
}

fn any_query() -> impl Strategy<Value = RdpQuery> {
    prop_oneof![query(Measure::Kl), query(Measure::W2Sq)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bounds_are_sandwiched(q in any_query()) {
        let var = q.source.variance();
        let lo = lower(&q).unwrap().value;
        let up = upper(&q).unwrap().value;
        prop_assert!(lo >= 0.0);
        prop_assert!(lo <= up + 1e-12 * var);
        prop_assert!(up <= 2.0 * var * (1.0 + 1e-12));
    }

    #[test]
    fn improved_lower_sits_between(q in query(Measure::W2Sq)) {
        let tol = 1e-12 * q.source.variance();
        let lo = lower(&q).unwrap().value;
        let imp = improved_lower_w2(&q).unwrap().value;
        let up = upper(&q).unwrap().value;
        prop_assert!(lo <= imp + tol, "{lo} > {imp}");
        prop_assert!(imp <= up + tol, "{imp} > {up}");
    }

    #[test]
    fn bounds_decrease_in_rate(q in any_query(), dr in 0.0..1.0f64) {
        let r = q.rate.get();
        prop_assume!(r.is_finite());
        let q2 = q.with_rate(ExtReal::new(r + dr).unwrap());
        let tol = 1e-12 * q.source.variance();
        prop_assert!(lower(&q2).unwrap().value <= lower(&q).unwrap().value + tol);
        prop_assert!(upper(&q2).unwrap().value <= upper(&q).unwrap().value + tol);
    }

    #[test]
    fn bounds_decrease_in_perception(q in any_query(), dp in 0.0..1.0f64) {
        let p = q.perception.get();
        prop_assume!(p.is_finite());
        let q2 = q.with_perception(ExtReal::new(p + dp).unwrap());
        let tol = 1e-12 * q.source.variance();
        prop_assert!(lower(&q2).unwrap().value <= lower(&q).unwrap().value + tol);
        prop_assert!(upper(&q2).unwrap().value <= upper(&q).unwrap().value + tol);
    }

    #[test]
    fn upper_decreases_in_common_randomness(q in any_query(), dc in 0.0..1.0f64) {
        let c = q.common_randomness.get();
        prop_assume!(c.is_finite());
        let q2 = q.with_common_randomness(ExtReal::new(c + dc).unwrap());
        prop_assert!(upper(&q2).unwrap().value <= upper(&q).unwrap().value + 1e-12 * q.source.variance());
    }

    #[test]
    fn induced_bounds_are_looser(q in query(Measure::Kl)) {
        let tol = 1e-12 * q.source.variance();
        prop_assert!(induced_lower_kl(&q).unwrap().value <= lower(&q).unwrap().value + tol);
        let w = q.with_measure(Measure::W2Sq);
        prop_assert!(induced_upper_w2(&w).unwrap().value >= upper(&w).unwrap().value - tol);
    }

    #[test]
    fn shift_invariance(q in any_query(), shift in -10.0..10.0f64) {
        let moved = RdpQuery::new(
            GaussianSource::new(q.source.mean() + shift, q.source.variance()).unwrap(),
            q.rate, q.common_randomness, q.perception, q.measure,
        );
        let tol = 1e-12 * q.source.variance();
        prop_assert!((lower(&q).unwrap().value - lower(&moved).unwrap().value).abs() <= tol);
        prop_assert!((upper(&q).unwrap().value - upper(&moved).unwrap().value).abs() <= tol);
    }

    #[test]
    fn xi_is_a_correlation(r in ext(5.0), rc in ext(5.0)) {
        let x = xi(r, rc);
        prop_assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn normal_quantile_inverts_cdf(p in 1e-12..(1.0 - 1e-12f64)) {
        let x = std_normal_quantile(p);
        prop_assert!((std_normal_cdf(x) - p).abs() <= 1e-13 * p.max(1e-3));
    }

    #[test]
    fn binary_quantizer_below_source_variance(theta in 0.0..6.0f64, s in source()) {
        let (quant, r, d) = binary_quantizer(theta, &s).unwrap();
        prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-15).contains(&r));
        prop_assert!(d >= 0.0 && d <= s.variance() * (1.0 + 1e-12));
        let mass: f64 = quant.probabilities().iter().sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantizer_cells_are_consistent(mut b in prop::collection::vec(-4.0..4.0f64, 1..6), x in -6.0..6.0f64) {
        b.sort_by(f64::total_cmp);
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        let n = b.len() + 1;
        let levels: Vec<f64> = (0..n).map(|i| i as f64 - n as f64 / 2.0).collect();
        let q = Quantizer::new(b.clone(), levels.clone(), vec![1.0 / n as f64; n]).unwrap();
        let k = q.cell_index(x);
        prop_assert!(k == 0 || b[k - 1] <= x);
        prop_assert!(k == b.len() || x < b[k]);
        prop_assert_eq!(q.quantize(x), levels[k]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn refined_transport_inequality_on_random_mixtures(seed in any::<u64>(), trial in 0..1000u64) {
        let src = GaussianSource::standard();
        let mut rng = trial_rng(seed, trial);
        let mix = random_constrained_mixture(&src, &mut rng);
        let rep = check_refined_talagrand(&mix, &src).unwrap();
        prop_assert!(rep.holds_refined, "slack {}", rep.slack);
        prop_assert!(rep.rhs_refined <= rep.rhs_original + 1e-12);
    }
}
