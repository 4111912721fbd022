use std::path::PathBuf;

use siegel_theta::modular::{verify_invert, verify_limit, Tolerances, DEFAULT_Y_GRID};
use siegel_theta::theta::{cosets, theta_f, theta_g, Kernel, ThetaOptions};
use siegel_theta::Problem;

fn problem(name: &str) -> Problem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name);
    Problem::from_path(&path).unwrap()
}

#[test]
fn bundled_problems_load() {
    for name in ["hyperbolic.json", "hyperbolic_shifted.json", "genus2.json"] {
        let p = problem(name);
        let frame = p.require_frame().unwrap();
        assert!(frame.is_certified());
        assert_eq!(p.characteristics().unwrap().shape(), (frame.dim(), frame.genus()));
        assert_eq!(p.siegel_point().unwrap().genus(), frame.genus());
    }
}

#[test]
fn shifted_hyperbolic_inverts() {
    let p = problem("hyperbolic_shifted.json");
    let frame = p.require_frame().unwrap();
    let ch = p.characteristics().unwrap();
    let z = p.siegel_point().unwrap();
    let r = verify_invert(&frame, &ch, &z, &ThetaOptions::with_eps(1e-10), &Kernel::ClosedForm, &Tolerances::default())
        .unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.abs_err < 1e-9);
    assert_eq!(cosets(frame.space(), 1).len(), 4);
}

#[test]
fn series_differ_by_a_small_non_holomorphic_part() {
    let p = problem("hyperbolic_shifted.json");
    let frame = p.require_frame().unwrap();
    let ch = p.characteristics().unwrap();
    let z = p.siegel_point().unwrap();
    let opts = ThetaOptions::with_eps(1e-10);
    let f = theta_f(&frame, &ch, &z, &opts).unwrap();
    let g = theta_g(&frame, &ch, &z, &opts, &Kernel::ClosedForm).unwrap();
    let gap = (f.value - g.value).norm();
    assert!(gap > 1e-4 && gap < 0.5 * f.value.norm(), "{f:?} {g:?}");
}

#[test]
fn genus_two_limit_from_file() {
    let p = problem("genus2.json");
    let frame = p.require_frame().unwrap();
    let r = verify_limit(&frame, p.require_u().unwrap(), &DEFAULT_Y_GRID, &Kernel::default(), &Tolerances::default())
        .unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.details["zero_count"], 1);
}
