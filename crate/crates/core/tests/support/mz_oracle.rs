// Brute-force reading of the I/J-set argument on a finite record.
//
// Γ⁻ is o(Γ) by the first step of the argument, so it is lumped with whichever side is
// claimed to be small. On the asymptotic half of the record (most negative τ̄), with q
// the ratio of the claimed-large side to the claimed-small side:
//   α ∈ J  iff  q ≥ α somewhere,   α ∈ I  iff  q > α everywhere.
// The grid runs from θ to 1/θ in steps of e^{1/2}. For neutral dominance the claim
// α ∈ J ⇒ e^{1/2}α ∈ J, e^{−1/2}α ∈ I is iterated from every α ∈ J up the grid and
// 1/θ ∈ I is required; for positive dominance θ ∉ J is required.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Neutral,
    Undetermined,
}

fn grid(theta: f64) -> Vec<f64> {
    let mut g = vec![1.0 / theta];
    while g[g.len() - 1] * (-0.5f64).exp() > theta {
        let next = g[g.len() - 1] * (-0.5f64).exp();
        g.push(next);
    }
    g.push(theta);
    g.reverse();
    g
}

pub fn oracle(gp: &[f64], g0: &[f64], gm: &[f64], theta: f64) -> Verdict {
    let half = gp.len().div_ceil(2);
    let q_neutral: Vec<f64> = (0..half).map(|i| g0[i] / (gp[i] + gm[i])).collect();
    let q_positive: Vec<f64> = (0..half).map(|i| gp[i] / (g0[i] + gm[i])).collect();
    let in_j = |q: &[f64], a: f64| q.iter().any(|&v| v >= a);
    let in_i = |q: &[f64], a: f64| q.iter().all(|&v| v > a);
    let alphas = grid(theta);

    let mut neutral = in_i(&q_neutral, alphas[alphas.len() - 1]);
    for &a in &alphas {
        if !in_j(&q_neutral, a) {
            continue;
        }
        let mut alpha = a;
        while alpha <= alphas[alphas.len() - 1] {
            if !in_j(&q_neutral, alpha) || !in_i(&q_neutral, alpha * (-0.5f64).exp()) {
                neutral = false;
            }
            alpha *= 0.5f64.exp();
        }
    }
    // J for the neutral-over-positive ratio is empty at 1/θ exactly when the reciprocal ratio
    // stays above 1/θ, i.e. (Γ⁰+Γ⁻) < θΓ⁺ throughout
    let positive = in_i(&q_positive, 1.0 / theta);
    match (neutral, positive) {
        (true, false) => Verdict::Neutral,
        (false, true) => Verdict::Positive,
        _ => Verdict::Undetermined,
    }
}
