use ovals_core::ansatz::AnsatzParams;
use ovals_core::asymptotics::*;

#[test]
fn expansion_residual_decays() {
    let regions = RegionParams::default();
    let near = ansatz_residual(-(10f64).exp(), &regions).unwrap();
    let far = ansatz_residual(-(20f64).exp(), &regions).unwrap();
    assert!(far.parabolic < near.parabolic);
    assert!(far.intermediate < near.intermediate);
    for r in [near, far] {
        assert!(r.parabolic * (-r.t).ln() < 10.0, "{r:?}");
    }
}

#[test]
fn widths_and_tips_move_toward_the_laws() {
    let tr = regime_trends(-(10f64).exp(), -(20f64).exp(), &AnsatzParams::default(), &RegionParams::default()).unwrap();
    println!("{tr:#?}");
    assert!(tr.residuals_improve());
    assert!(tr.widths_improve());
    assert!(tr.tips_improve());
    // the left and right halves of the ansatz are mirror images
    assert!((tr.width_left.near - tr.width_right.near).abs() < 1e-6);
    assert!((tr.distance_left.far - tr.distance_right.far).abs() < 1e-6);
}

#[test]
fn self_check_at_e12() {
    let t = -(12f64).exp();
    let p = ovals_core::ansatz::oval_ansatz(t, &AnsatzParams::default()).unwrap().profile().unwrap();
    let w = intermediate_fit(&p, t, 0.3).unwrap();
    assert!(w.deviation <= 0.1, "{w:?}");
    for r in [w.ratio_left, w.ratio_right] {
        assert!((0.9..=1.1).contains(&r), "{w:?}");
    }
}
