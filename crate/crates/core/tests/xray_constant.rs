//! The determinant chooses between two candidate reduced forms of the X-ray
//! pair prefactor in `E3`.

use std::f64::consts::PI;
use whasym::models::{convergence_sweep, NPolicy};
use whasym::specfun::principal_ln;
use whasym::symbols::{xray_symbol, PhysicalParams};
use whasym::C64;

#[test]
fn implemented_pair_prefactor_matches_the_determinant() {
    let p = PhysicalParams {
        coupling: 2f64.sqrt(),
        ..Default::default()
    };
    let spec = xray_symbol(&p).unwrap();
    let ts = [5.0, 10.0, 15.0, 20.0];
    let r = convergence_sweep(&spec, &ts, NPolicy::for_spec(&spec)).unwrap();

    let i = C64::new(0.0, 1.0);
    let e = C64::new(p.fermi_energy, 0.0);
    let t = p.xray_theta() / PI;
    let implemented = principal_ln(1.0 - i * e) * t - principal_ln(-2.0 * i - e) * (t / 2.0) - principal_ln(e) * (t / 2.0);
    let printed = principal_ln(1.0 + i * e) * (t / 2.0) - principal_ln(2.0 * i - e) * t - principal_ln(e) * (t / 2.0);
    let shift = printed - implemented;

    for row in &r.rows {
        let ours = row.residual.norm();
        let theirs = (row.residual - shift).norm();
        assert!(ours < 5e-3, "T = {}: {ours}", row.t);
        assert!(theirs > 20.0 * ours, "T = {}: {theirs} vs {ours}", row.t);
    }
    let first = r.rows.first().unwrap().residual.norm();
    let last = r.rows.last().unwrap().residual.norm();
    assert!(last < first);
}
