use std::f64::consts::{PI, TAU};

use baker_thermo::branches::{branch_derivative, fiber, fiber_target, invert_strip, BranchSolveConfig};
use baker_thermo::dynamics::{project, CylinderPoint, FamilyParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn regime() -> impl Strategy<Value = FamilyParams> {
    (2u32..=4, 0.0..0.999f64, 0.0..TAU).prop_map(|(ell, r, a)| {
        FamilyParams::new(ell, Complex64::new(f64::from(ell), 0.0) + Complex64::from_polar(r, a)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn strip_round_trip(p in regime(), x in -5.0..15.0f64, y in 0.0..TAU) {
        let z = Complex64::new(x, y);
        let back = invert_strip(p.f(z), &p, &BranchSolveConfig::default()).unwrap();
        prop_assert!((back - z).norm() <= 1e-9 * (1.0 + z.norm()), "{} -> {}", z, back);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fiber_invariants(p in regime(), x in -4.0..30.0f64, y in 0.0..TAU) {
        let cfg = BranchSolveConfig::default();
        let base = CylinderPoint::new(x, y);
        let fib = fiber(base, -20, 20, &p, &cfg).unwrap();
        for b in &fib.branches {
            let w = fiber_target(base, b.k as f64);
            let tol = cfg.newton_tol * (1.0 + base.lift().norm() + TAU * (b.k as f64).abs());
            prop_assert!((p.f(b.z) - w).norm() <= tol);
            prop_assert!((0.0..=TAU).contains(&b.z.im));
        }
        for (i, a) in fib.branches.iter().enumerate() {
            for c in &fib.branches[i + 1..] {
                prop_assert!(a.z != c.z);
            }
        }
        prop_assert_eq!(&fib, &fiber(base, -20, 20, &p, &cfg).unwrap());
    }

    /// Im(ℓ − e^{z_k}) lies in 2πk + [−2πℓ, 2π] − Im λ. For k > ℓ this gives
    /// |f'(z_k)| ≥ π|k − ℓ| once π|k − ℓ| ≥ |Im λ| + 2ℓπ; for k < 0 the near
    /// edge is 2π(|k| − 1), so the same statement holds with |k + 1|.
    #[test]
    fn tail_derivative_growth(p in regime(), x in -4.0..10.0f64, y in 0.0..TAU) {
        let base = project(Complex64::new(x, y));
        let ell = p.ell_f64();
        let need = p.lambda().im.abs() + 2.0 * ell * PI;
        let fib = fiber(base, -60, 60, &p, &BranchSolveConfig::default()).unwrap();
        for b in &fib.branches {
            let k = b.k as f64;
            let gap = if k > ell { PI * (k - ell) } else { PI * (k + 1.0).abs() };
            if gap >= need {
                prop_assert!(branch_derivative(b.z, &p).unwrap() >= gap, "k = {}", b.k);
            }
        }
    }

}

/// With |k − ℓ| in place of |k + 1| the bound fails on the negative side.
#[test]
fn literal_index_set_fails_for_negative_k() {
    let p = FamilyParams::new(2, Complex64::new(2.0, 0.0)).unwrap();
    let cfg = BranchSolveConfig::default();
    let mut worst = f64::INFINITY;
    for i in 0..40 {
        for j in 0..40 {
            let base = CylinderPoint::new(-4.0 + 0.35 * f64::from(i), TAU * (f64::from(j) + 0.5) / 40.0);
            let z = fiber(base, -3, -3, &p, &cfg).unwrap().branches[0].z;
            worst = worst.min(branch_derivative(z, &p).unwrap() / (5.0 * PI));
        }
    }
    assert!(worst < 1.0, "min ratio {worst}");
}
