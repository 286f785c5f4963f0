use rtcode_core::instances::{InstanceShape, random_decoder, random_spec, random_tracking_encoder, rng};
use rtcode_core::simulate;
use rtcode_core::system::evaluate;

#[test]
fn doubling_trajectories_shrinks_the_error() {
    let mut ratios = Vec::new();
    for seed in 0..8 {
        let spec = random_spec(&mut rng(seed), &InstanceShape::binary(3, 1.0));
        let mut r = rng(20 + seed);
        let dec = random_decoder(&mut r, &spec, 2);
        let enc = random_tracking_encoder(&mut r, &spec, 2);
        let a = simulate(&spec, &enc, &dec, 20_000, 100 + seed).unwrap();
        let b = simulate(&spec, &enc, &dec, 40_000, 200 + seed).unwrap();
        if a.std_error > 0.0 {
            ratios.push(a.std_error / b.std_error);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((1.2..=1.7).contains(&mean), "mean ratio {mean}");
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let spec = random_spec(&mut rng(1), &InstanceShape::binary(3, 0.5).with_side_info(2, 2));
    let mut r = rng(2);
    let dec = random_decoder(&mut r, &spec, 2);
    let enc = random_tracking_encoder(&mut r, &spec, 2);
    let many = simulate(&spec, &enc, &dec, 30_000, 9).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let one = pool.install(|| simulate(&spec, &enc, &dec, 30_000, 9).unwrap());
    assert_eq!(many, one);
    let exact = evaluate(&spec, &enc, &dec).unwrap().total;
    assert!((many.mean_cost - exact).abs() <= 4.0 * many.std_error);
    assert!(many.std_error >= 0.0);
    let stage_sum: f64 = many.per_stage_means.iter().sum::<f64>() / 3.0;
    assert!((stage_sum - many.mean_cost).abs() < 1e-9);
}
