mod common;

use std::f64::consts::{LN_2, TAU};

use baker_thermo::branches::{fiber_target, invert_strip, BranchSolveConfig};
use baker_thermo::dynamics::{project, FamilyParams};
use baker_thermo::render::{classify_point, encode_ppm, render, Label, ViewMode, ViewSpec};
use common::{golden_cases, golden_path, p22, p3, params};
use num_complex::Complex64;
use proptest::prelude::*;

/// Set BAKER_THERMO_BLESS=1 to rewrite the fixtures.
#[test]
fn golden_images_match() {
    let bless = std::env::var("BAKER_THERMO_BLESS").is_ok_and(|v| v == "1");
    for case in golden_cases() {
        let img = render(&case.p, &case.spec).unwrap();
        let bytes = encode_ppm(&img, &[]);
        let path = golden_path(case.name);
        if bless {
            std::fs::write(&path, &bytes).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(want == bytes, "{} differs from its fixture", case.name);
    }
}

#[test]
fn undecided_fraction_is_bounded() {
    for case in golden_cases() {
        let img = render(&case.p, &case.spec).unwrap();
        let u = img.fraction(|l| l == Label::Undecided);
        assert!(u <= 0.15, "{}: undecided {u}", case.name);
        if case.spec.mode == ViewMode::Cylinder {
            assert_eq!(img.fraction(|l| matches!(l, Label::Wandering(_))), 0.0, "{}", case.name);
        }
    }
}

#[test]
fn spot_pixels() {
    let spec = ViewSpec::new(ViewMode::Plane, (-12.0, 6.0), (-8.0, 8.0), 160, 120, 200).unwrap();
    for p in [p22(), p3()] {
        let fp = p.fixed_point().unwrap();
        assert_eq!(classify_point(Complex64::new(-10.0, 0.0), &p, &spec).0, Label::Baker);
        assert_eq!(classify_point(fp, &p, &spec).0, Label::AttractingBasin);
        assert_eq!(classify_point(fp + Complex64::new(0.0, TAU), &p, &spec).0, Label::Wandering(1));
    }
}

#[test]
fn z_minus_exp_has_no_basin() {
    let p = params(1, 0.0, 0.0);
    let spec = ViewSpec::new(ViewMode::Plane, (-4.0, 6.0), (-8.0, 8.0), 80, 60, 200).unwrap();
    let img = render(&p, &spec).unwrap();
    assert_eq!(img.fraction(|l| matches!(l, Label::AttractingBasin | Label::Wandering(_))), 0.0);
    // Bands repeat with period 2π: rows one period apart (same pixel grid
    // offset up to rounding) carry the same Baker share.
    let band = |y: f64| {
        (0..40)
            .filter(|&i| classify_point(Complex64::new(-4.0 + 0.1 * f64::from(i), y), &p, &spec).0 == Label::Baker)
            .count()
    };
    assert_eq!(band(0.3), band(0.3 + TAU));
    assert_eq!(band(-1.0), band(-1.0 + 2.0 * TAU));
}

#[test]
fn render_is_worker_independent() {
    let case = &golden_cases()[0];
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| render(&case.p, &case.spec).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(8));
}

fn regime() -> impl Strategy<Value = FamilyParams> {
    (2u32..=4, 0.0..0.95f64, 0.0..TAU).prop_map(|(ell, r, a)| {
        FamilyParams::new(ell, Complex64::new(f64::from(ell), 0.0) + Complex64::from_polar(r, a)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Nearly every pixel is decided within a few steps (Julia points escape
    /// to the right at once), so Julia candidates come from random backward
    /// orbits, which accumulate on the Julia set. Along the forward orbit of
    /// each candidate |(Fⁿ)'| grows.
    #[test]
    fn julia_candidates_expand(ks in proptest::collection::vec(-3i64..=3, 40), which in 0usize..2) {
        const N: usize = 40;
        let p = [p22(), p3()][which];
        let solver = BranchSolveConfig::default();
        // chain[j + 1] = F⁻¹ of chain[j], so the forward orbit of the last
        // point is the chain read backwards, free of forward round-off growth.
        let mut chain = vec![Complex64::new(2.0, 1.0)];
        for &k in &ks {
            let x = *chain.last().unwrap();
            chain.push(invert_strip(fiber_target(project(x), k as f64), &p, &solver).unwrap());
        }
        let x = chain[N];
        let mut acc = 0.0;
        let mut log_d = Vec::with_capacity(N);
        for z in chain[1..].iter().rev() {
            acc += p.df(*z).norm().ln();
            log_d.push(acc);
        }
        prop_assert!(log_d[N / 2 - 1] > 0.0 && log_d[N - 1] > log_d[N / 2 - 1], "{}: {:?}", x, log_d);
    }

    #[test]
    fn trap_pixels_are_baker(p in regime(), dx in 0.001..30.0f64, y in -20.0..20.0f64) {
        let spec = ViewSpec::new(ViewMode::Plane, (-40.0, 6.0), (-20.0, 20.0), 4, 4, 50).unwrap();
        let z = Complex64::new(-2.0 * p.ell_f64() - dx, y);
        prop_assert_eq!(classify_point(z, &p, &spec).0, Label::Baker);
    }

    #[test]
    fn basin_translates_wander(p in regime(), r in 0.0..0.2f64, a in 0.0..TAU, k in 1i64..4) {
        let spec = ViewSpec::new(ViewMode::Plane, (-12.0, 6.0), (-8.0, 8.0), 4, 4, 200).unwrap();
        let z = p.fixed_point().unwrap() + Complex64::from_polar(r, a);
        if classify_point(z, &p, &spec).0 == Label::AttractingBasin {
            let shifted = z + Complex64::new(0.0, TAU * k as f64);
            prop_assert!(matches!(classify_point(shifted, &p, &spec).0, Label::Wandering(_)));
        }
    }

    #[test]
    fn baker_label_is_conjugation_symmetric(ell in 2u32..=4, d in -0.95..0.95f64, x in -14.0..6.0f64, y in 0.0..8.0f64) {
        let p = FamilyParams::new(ell, Complex64::new(f64::from(ell) + d, 0.0)).unwrap();
        let spec = ViewSpec::new(ViewMode::Plane, (-14.0, 6.0), (-8.0, 8.0), 4, 4, 200).unwrap();
        let up = classify_point(Complex64::new(x, y), &p, &spec).0;
        let down = classify_point(Complex64::new(x, -y), &p, &spec).0;
        prop_assert_eq!(up == Label::Baker, down == Label::Baker);
    }
}

#[test]
fn log_two_is_basin() {
    let spec = ViewSpec::new(ViewMode::Cylinder, (-12.0, 6.0), (0.0, TAU), 4, 4, 200).unwrap();
    assert_eq!(classify_point(Complex64::new(LN_2, 0.0), &p22(), &spec).0, Label::AttractingBasin);
    assert_eq!(classify_point(Complex64::new(LN_2, TAU), &p22(), &spec).0, Label::AttractingBasin);
}
