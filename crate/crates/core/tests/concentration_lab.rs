use countsketch::concentration::{
    median_cubed_check, median_tail_probability, small_ball_curve, small_ball_probability,
    standard_eps_grid, triangle_filter_expectation, vector_median_check, Evaluation, SymmetricSumSpec,
    SymmetricTerm,
};
use countsketch::Error;

#[test]
fn full_ball_contains_zero_atom() {
    let spec = SymmetricSumSpec::new(vec![
        SymmetricTerm { magnitude: 3.0, zero_probability: 0.6 },
        SymmetricTerm { magnitude: 0.1, zero_probability: 0.5 },
        SymmetricTerm { magnitude: 7.0, zero_probability: 0.75 },
    ])
    .unwrap();
    let zero_atom: f64 = spec.terms.iter().map(|t| t.zero_probability).product();
    let p = small_ball_probability(&spec, 1.0, Evaluation::Exact).unwrap();
    assert!(p.value >= zero_atom);
}

#[test]
fn exact_and_sampled_curves_agree() {
    let spec = SymmetricSumSpec::iid(10, 1.0, 0.5).unwrap();
    let grid = standard_eps_grid();
    let exact = small_ball_curve(&spec, &grid, Evaluation::Exact).unwrap();
    let mc = small_ball_curve(&spec, &grid, Evaluation::MonteCarlo { trials: 100_000, seed: 4 }).unwrap();
    for (e, m) in exact.iter().zip(&mc) {
        assert!(e.small_ball.exact && !m.small_ball.exact);
        assert!((e.small_ball.value - m.small_ball.value).abs() <= 3.0 * m.small_ball.half_width + 1e-3);
        assert!(e.triangle.value <= e.small_ball.value);
    }
}

#[test]
fn point_mass_at_sigma_has_no_triangle_mass() {
    // |X| / sigma is 0 or sqrt(2); only the zero atom lies under the tent.
    let spec = SymmetricSumSpec::iid(1, 1.0, 0.5).unwrap();
    for eps in [0.25, 0.5, 1.0] {
        let t = triangle_filter_expectation(&spec, eps, Evaluation::Exact).unwrap();
        assert_eq!(t.value, 0.5);
    }
}

#[test]
fn degenerate_spec_is_rejected() {
    let spec = SymmetricSumSpec::iid(4, 1.0, 1.0).unwrap();
    let r = small_ball_curve(&spec, &[0.5], Evaluation::Auto { trials: 10, seed: 0 });
    assert!(matches!(r, Err(Error::Degenerate(_))));
}

#[test]
fn sampled_curves_do_not_depend_on_thread_count() {
    let spec = SymmetricSumSpec::iid(30, 1.0, 0.6).unwrap();
    let eval = Evaluation::MonteCarlo { trials: 20_000, seed: 8 };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| small_ball_curve(&spec, &[0.1, 0.5], eval).unwrap());
    let b = four.install(|| small_ball_curve(&spec, &[0.1, 0.5], eval).unwrap());
    assert_eq!(a, b);
    let ma = one.install(|| median_tail_probability(0.4, 21, 30_000, 2).unwrap());
    let mb = four.install(|| median_tail_probability(0.4, 21, 30_000, 2).unwrap());
    assert_eq!(ma, mb);
}

#[test]
fn median_tail_for_long_medians_is_tiny() {
    let r = median_tail_probability(0.5, 99, 100_000, 3).unwrap();
    assert!(r.hits <= 2, "{} hits", r.hits);
    assert!(r.within_bound(3.0));
}

#[test]
fn vector_median_premise_failure_is_not_a_violation() {
    // Half the vectors are huge: the premise fails and nothing is asserted.
    let vs = vec![vec![0.1, 0.0], vec![0.0, 0.1], vec![50.0, 50.0], vec![60.0, 40.0]];
    let out = vector_median_check(&vs, 1.0).unwrap();
    assert!(!out.premise);
    assert!(out.passed);
    assert!(out.ratio > 3f64.sqrt());
}

#[test]
fn median_cubed_on_shuffled_lists() {
    let values = [9.5, -2.0, 4.25, 100.0, 0.0, -7.5, 3.0, 8.0, 1.0];
    let out = median_cubed_check(&values, 3, 3).unwrap();
    assert_eq!(out.partitions, 280);
    assert_eq!(out.rhs, 3.0);
    assert!(out.equal);
    let values: Vec<f64> = (0..15).map(|i| f64::from((i * 7) % 15) - 3.5).collect();
    let out = median_cubed_check(&values, 5, 3).unwrap();
    assert_eq!(out.partitions, 126_126);
    assert!(out.equal);
}
