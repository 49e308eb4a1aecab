#[path = "support/mz_oracle.rs"]
mod mz_oracle;

use mz_oracle::{oracle, Verdict};
use ovals_core::spectral::{classify_modes, recursion_instance, Dominance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn classifier_matches_the_set_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let theta = 0.2;
    let mut seen = [0usize; 3];
    for n in 0..100 {
        let inst = recursion_instance(&mut rng, 160, 0.5).unwrap();
        assert!(inst.max_violation() <= 1e-12, "instance {n} leaves the system: {}", inst.max_violation());
        let got = classify_modes(&inst.gamma_plus, &inst.gamma_zero, &inst.gamma_minus, theta).unwrap();
        let want = oracle(&inst.gamma_plus, &inst.gamma_zero, &inst.gamma_minus, theta);
        let got_v = match got {
            Dominance::PositiveDominates => Verdict::Positive,
            Dominance::NeutralDominates => Verdict::Neutral,
            Dominance::Undetermined => Verdict::Undetermined,
        };
        assert_eq!(got_v, want, "instance {n}");
        seen[got_v as usize] += 1;
    }
    assert!(seen[0] > 10 && seen[1] > 10, "{seen:?}");
}

#[test]
fn oracle_on_the_closed_form_examples() {
    let tb: Vec<f64> = (0..60).map(|k| k as f64 - 59.0).collect();
    let gp: Vec<f64> = tb.iter().map(|t| t.exp()).collect();
    let c = vec![1.0; 60];
    assert_eq!(oracle(&gp, &c, &gp, 0.2), Verdict::Neutral);
    let small = vec![1e-300; 60];
    assert_eq!(oracle(&gp, &small, &small, 0.2), Verdict::Positive);
}
