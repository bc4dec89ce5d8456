#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::PathBuf;

use baker_thermo::dynamics::FamilyParams;
use baker_thermo::render::{ViewMode, ViewSpec};
use num_complex::Complex64;

pub fn params(ell: u32, re: f64, im: f64) -> FamilyParams {
    FamilyParams::new(ell, Complex64::new(re, im)).unwrap()
}

pub fn p22() -> FamilyParams {
    params(2, 2.0, 0.0)
}

pub fn p3() -> FamilyParams {
    params(3, 2.7, -0.3)
}

/// One golden image: parameters, view and fixture file name.
pub struct GoldenCase {
    pub name: &'static str,
    pub p: FamilyParams,
    pub spec: ViewSpec,
}

pub const GOLDEN_SIZE: (usize, usize) = (160, 120);
pub const GOLDEN_ITERS: usize = 200;

pub fn golden_cases() -> Vec<GoldenCase> {
    let sets: [(&str, FamilyParams, f64); 4] = [
        ("ell2_c2", p22(), -12.0),
        ("ell3_c2.7-0.3i", p3(), -12.0),
        ("ell1_c-0.5", params(1, -0.5, 0.0), -12.0),
        // Further left, orbits near Im = π need more than 200 steps to settle.
        ("ell1_c0", params(1, 0.0, 0.0), -4.0),
    ];
    let mut out = Vec::new();
    for (name, p, x0) in sets {
        for (mode, suffix, y) in [(ViewMode::Plane, "plane", (-8.0, 8.0)), (ViewMode::Cylinder, "cylinder", (0.0, TAU))] {
            let spec = ViewSpec::new(mode, (x0, 6.0), y, GOLDEN_SIZE.0, GOLDEN_SIZE.1, GOLDEN_ITERS).unwrap();
            out.push(GoldenCase {
                name: Box::leak(format!("{name}_{suffix}").into_boxed_str()),
                p,
                spec,
            });
        }
    }
    out
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.ppm"))
}
