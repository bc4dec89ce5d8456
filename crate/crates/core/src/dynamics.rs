//! The map f(z) = λ + ℓz − e^z with λ = c − (ℓ−1)·Log c, its derivative,
//! guarded iteration, and the quotient by 2πiℤ.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real part beyond which `e^z` is not evaluated.
pub const OVERFLOW_RE: f64 = 700.0;

/// Parameters (ℓ, c) of one family member. λ and the fixed point are derived
/// in the constructor and cannot be set independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    ell: u32,
    c: Complex64,
    lambda: Complex64,
    fixed_point: Option<Complex64>,
}

impl FamilyParams {
    pub fn new(ell: u32, c: Complex64) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParams("ell must be >= 1".into()));
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidParams(format!("c = {c} is not finite")));
        }
        let zero = c == Complex64::new(0.0, 0.0);
        if zero && ell >= 2 {
            return Err(Error::InvalidParams("c = 0 requires ell = 1".into()));
        }
        let log_c = (!zero).then(|| c.ln());
        let lambda = match log_c {
            Some(l) if ell > 1 => c - f64::from(ell - 1) * l,
            _ => c,
        };
        Ok(FamilyParams {
            ell,
            c,
            lambda,
            fixed_point: log_c,
        })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn ell_f64(&self) -> f64 {
        f64::from(self.ell)
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Principal Log c, the fixed point of f (attracting in the theory regime).
    /// `None` when c = 0.
    pub fn fixed_point(&self) -> Option<Complex64> {
        self.fixed_point
    }

    /// ℓ ≥ 2 and |c − ℓ| < 1.
    pub fn theory_regime(&self) -> bool {
        self.ell >= 2 && (self.c - self.ell_f64()).norm() < 1.0
    }

    pub fn require_theory_regime(&self) -> Result<()> {
        if self.theory_regime() {
            Ok(())
        } else {
            Err(Error::OutsideTheoryRegime {
                ell: self.ell,
                c: self.c,
            })
        }
    }

    /// f(z) = λ + ℓz − e^z.
    #[inline]
    pub fn f(&self, z: Complex64) -> Complex64 {
        self.lambda + self.ell_f64() * z - z.exp()
    }

    /// f'(z) = ℓ − e^z, evaluated as −ℓ·expm1(z − ln ℓ) so that the critical
    /// points log ℓ + 2πik give exactly zero.
    #[inline]
    pub fn df(&self, z: Complex64) -> Complex64 {
        let ell = self.ell_f64();
        -ell * expm1(z - ell.ln())
    }
}

impl fmt::Display for FamilyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ell={} c={}", self.ell, fmt_complex(self.c))
    }
}

/// `re,im` rendering used in flags and artifact headers.
pub fn fmt_complex(z: Complex64) -> String {
    format!("{},{}", z.re, z.im)
}

/// e^d − 1 without cancellation for small d.
#[inline]
pub fn expm1(d: Complex64) -> Complex64 {
    let (s, c) = d.im.sin_cos();
    let h = (0.5 * d.im).sin();
    Complex64::new(d.re.exp_m1() * c - 2.0 * h * h, d.re.exp() * s)
}

/// Free-function form of [`FamilyParams::f`].
pub fn eval_f(z: Complex64, p: &FamilyParams) -> Complex64 {
    p.f(z)
}

/// Free-function form of [`FamilyParams::df`].
pub fn eval_f_prime(z: Complex64, p: &FamilyParams) -> Complex64 {
    p.df(z)
}

/// A point of the cylinder ℂ/2πiℤ with `im` in [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    re: f64,
    im: f64,
}

impl CylinderPoint {
    /// Reduces `im` into [0, 2π).
    pub fn new(re: f64, im: f64) -> Self {
        let mut im = im.rem_euclid(TAU);
        if im >= TAU {
            im = 0.0;
        }
        CylinderPoint { re, im }
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    /// The representative in the strip 0 ≤ Im < 2π.
    pub fn lift(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Distance in the quotient metric.
    pub fn dist(&self, other: &CylinderPoint) -> f64 {
        let dy = (self.im - other.im).abs();
        let dy = dy.min(TAU - dy);
        (self.re - other.re).hypot(dy)
    }
}

impl fmt::Display for CylinderPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.re, self.im)
    }
}

pub fn project(z: Complex64) -> CylinderPoint {
    CylinderPoint::new(z.re, z.im)
}

/// The induced map F on the cylinder.
pub fn eval_cyl(q: CylinderPoint, p: &FamilyParams) -> CylinderPoint {
    project(p.f(q.lift()))
}

/// Iteration cut-offs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeGuards {
    pub right_re: f64,
    pub left_re: f64,
    pub fixed_tol: f64,
    pub im_blowup: f64,
}

impl Default for EscapeGuards {
    fn default() -> Self {
        EscapeGuards {
            right_re: 50.0,
            left_re: -50.0,
            fixed_tol: 1e-9,
            im_blowup: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    MaxIterations,
    EscapedRight,
    EscapedLeft,
    ConvergedToFixedPoint,
    ImaginaryBlowup,
}

impl EscapeGuards {
    /// The guard tripped by `z`, if any. Checked before `f` is applied.
    pub fn check(&self, z: Complex64, p: &FamilyParams) -> Option<Termination> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Some(Termination::EscapedRight);
        }
        if z.re < self.left_re {
            return Some(Termination::EscapedLeft);
        }
        if z.re > self.right_re || z.re > OVERFLOW_RE {
            return Some(Termination::EscapedRight);
        }
        if z.im.abs() > self.im_blowup {
            return Some(Termination::ImaginaryBlowup);
        }
        match p.fixed_point() {
            Some(fp) if (z - fp).norm() < self.fixed_tol => {
                Some(Termination::ConvergedToFixedPoint)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    /// z_0, f(z_0), …, f^steps(z_0).
    pub samples: Vec<Complex64>,
    pub termination: Termination,
    pub steps: usize,
}

/// Iterates `f` at most `n` times, stopping at the first guard trip.
pub fn iterate(z: Complex64, p: &FamilyParams, n: usize, guards: &EscapeGuards) -> OrbitRecord {
    let mut samples = vec![z];
    let mut cur = z;
    for step in 0..n {
        if let Some(termination) = guards.check(cur, p) {
            return OrbitRecord {
                samples,
                termination,
                steps: step,
            };
        }
        cur = p.f(cur);
        samples.push(cur);
    }
    let termination = guards.check(cur, p).unwrap_or(Termination::MaxIterations);
    OrbitRecord {
        samples,
        termination,
        steps: n,
    }
}
