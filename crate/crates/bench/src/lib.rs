//! Fixtures shared by the benches.

use ovals_core::ansatz::{oval_ansatz, AnsatzParams};
use ovals_core::Profile;

pub const T_OVAL: f64 = -22026.465794806718;

/// Oval ansatz at t = −e¹⁰ on the default grid.
pub fn oval_profile() -> Profile {
    oval_ansatz(T_OVAL, &AnsatzParams::default()).and_then(|a| a.profile()).expect("oval ansatz")
}

pub fn xi_grid(n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
}
