use ovals_core::heat_kernel::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_nonnegative_samples_obey_the_bound() {
    let cfg = KernelConfig::default();
    let scan = lemma_a1_scan(&cfg).unwrap();
    let c = scan.constant();
    println!("constants {:?}", scan.constants);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for n in 0..20 {
        let d = RandomData::draw(&mut rng);
        let (i, l, r) = (|y| d.initial(y), |t| d.left(t), |t| d.right(t));
        let data = CaloricData { initial: &i, left: &l, right: &r };
        let sample = CaloricSample::from_data(&cfg, &data).unwrap();
        assert!(sample.h00 > 0.0, "draw {n}");
        for mu in [0.05, 0.1, 0.3] {
            let b = second_derivative_bound_check(&sample, mu, c).unwrap();
            worst = worst.max(b.lhs / b.rhs);
            assert!(b.pass, "draw {n}, μ = {mu}: {b:?}");
        }
    }
    println!("worst lhs/rhs {worst}");
}

#[test]
fn mixed_solution_is_reproduced_across_the_interval() {
    // h = e^{−π²(t+1)/4} cos(πx/2) + x² + 2t + 2
    let cfg = KernelConfig::default();
    let w = std::f64::consts::PI / 2.0;
    let h = |x: f64, t: f64| (-w * w * (t + 1.0)).exp() * (w * x).cos() + x * x + 2.0 * t + 2.0;
    let init = |y: f64| h(y, -1.0);
    let edge = |t: f64| h(1.0, -t);
    let data = CaloricData { initial: &init, left: &edge, right: &edge };
    let xs: Vec<f64> = (0..=40).map(|i| -0.975 + 0.04875 * i as f64).collect();
    for &x in &xs {
        let rep = representation_solve(&cfg, &data, x).unwrap();
        assert!((rep.h - h(x, 0.0)).abs() < 1e-6, "{x}");
    }
}
