//! Inverse of f restricted to the closed strip 0 ≤ Im z ≤ 2π, and the
//! preimage fibers z_k = f⁻¹(z̃ + 2πik) of a cylinder point.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::dynamics::{CylinderPoint, FamilyParams, OVERFLOW_RE};
use crate::error::{Error, Result};

/// Newton settings for [`invert_strip`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSolveConfig {
    /// Target for |f(z) − w|, scaled by (1 + |w|).
    pub newton_tol: f64,
    pub max_newton_steps: usize,
    /// Initial step damping in (0, 1]; halved whenever the residual grows.
    pub damping: f64,
}

impl Default for BranchSolveConfig {
    fn default() -> Self {
        BranchSolveConfig {
            newton_tol: 1e-12,
            max_newton_steps: 60,
            damping: 1.0,
        }
    }
}

const DAMPING_FLOOR: f64 = 1.0 / 1024.0;
/// How far outside [0, 2π] a converged Newton iterate may sit before it is
/// treated as a solution on a neighbouring strip.
const STRIP_SLACK: f64 = 1e-9;

/// A solved branch: f(z) = w with 0 ≤ Im z ≤ 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripSolution {
    pub z: Complex64,
    pub residual: f64,
}

/// The unique z in the closed strip with f(z) = w.
pub fn invert_strip(w: Complex64, p: &FamilyParams, cfg: &BranchSolveConfig) -> Result<Complex64> {
    solve_strip(w, p, cfg).map(|s| s.z)
}

/// [`invert_strip`] together with the final residual.
pub fn solve_strip(w: Complex64, p: &FamilyParams, cfg: &BranchSolveConfig) -> Result<StripSolution> {
    if p.ell() < 2 {
        return Err(Error::InvalidParams(
            "inverse branches need ell >= 2".into(),
        ));
    }
    if !(cfg.newton_tol > 0.0 && cfg.max_newton_steps >= 1 && cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidParams(format!("bad branch solver config {cfg:?}")));
    }
    let tol = cfg.newton_tol * (1.0 + w.norm());
    let lambda = p.lambda();
    let ell = p.ell_f64();

    let u = lambda - w;
    let mut arg = u.im.atan2(u.re);
    if arg < 0.0 {
        arg += TAU;
    }
    let zhat = Complex64::new(u.norm().ln(), arg);
    let analytic = wrap_seed((ell * zhat + lambda - w).ln());
    let seeds = [
        analytic,
        Complex64::new(0.0, PI),
        Complex64::new((w - lambda).norm().ln(), PI),
    ];

    let mut best = StripSolution {
        z: analytic,
        residual: f64::INFINITY,
    };
    for seed in seeds {
        let s = newton(seed, w, p, cfg, tol);
        if s.residual <= tol {
            if let Some(z) = into_strip(s.z) {
                return Ok(StripSolution { z, residual: (p.f(z) - w).norm() });
            }
        }
        if s.residual < best.residual {
            best = s;
        }
    }

    if let Some(seed) = bracket_seed(w, p) {
        let s = newton(seed, w, p, cfg, tol);
        let candidate = if s.residual <= tol { into_strip(s.z) } else { None };
        if let Some(z) = candidate {
            return Ok(StripSolution { z, residual: (p.f(z) - w).norm() });
        }
        let r0 = (p.f(seed) - w).norm();
        if r0 <= tol {
            return Ok(StripSolution { z: seed, residual: r0 });
        }
        if r0 < best.residual {
            best = StripSolution { z: seed, residual: r0 };
        }
    }

    Err(Error::NoConvergence {
        w,
        k: None,
        best: best.z,
        residual: best.residual,
    })
}

fn wrap_seed(z: Complex64) -> Complex64 {
    Complex64::new(z.re, z.im.rem_euclid(TAU))
}

fn into_strip(z: Complex64) -> Option<Complex64> {
    if z.im < -STRIP_SLACK || z.im > TAU + STRIP_SLACK {
        return None;
    }
    Some(Complex64::new(z.re, z.im.clamp(0.0, TAU)))
}

fn clamp_iterate(z: Complex64) -> Complex64 {
    Complex64::new(z.re.clamp(-2.0 * OVERFLOW_RE, OVERFLOW_RE), z.im.clamp(-PI, 3.0 * PI))
}

fn newton(seed: Complex64, w: Complex64, p: &FamilyParams, cfg: &BranchSolveConfig, tol: f64) -> StripSolution {
    let mut z = clamp_iterate(seed);
    let mut r = p.f(z) - w;
    let mut res = r.norm();
    let mut damping = cfg.damping;
    let mut steps = 0;
    while steps < cfg.max_newton_steps && res > tol {
        let d = p.df(z);
        if d.norm() == 0.0 || !res.is_finite() {
            break;
        }
        let step = r / d;
        let mut accepted = false;
        while damping >= DAMPING_FLOOR {
            steps += 1;
            let cand = clamp_iterate(z - damping * step);
            let rc = p.f(cand) - w;
            let resc = rc.norm();
            if resc < res {
                z = cand;
                r = rc;
                res = resc;
                accepted = true;
                damping = (2.0 * damping).min(cfg.damping);
                break;
            }
            damping *= 0.5;
            if steps >= cfg.max_newton_steps {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    StripSolution { z, residual: res }
}

/// Solution of the real two-equation system by bisection on y = Im z.
///
/// Writing w − λ = A + iB and z = x + iy, the equations are
/// ℓx − eˣ cos y = A and ℓy − eˣ sin y = B. The second fixes eˣ = (ℓy − B)/sin y,
/// leaving one monotone crossing in y on the half of the strip where that
/// quotient is positive.
fn bracket_seed(w: Complex64, p: &FamilyParams) -> Option<Complex64> {
    let ell = p.ell_f64();
    let d = w - p.lambda();
    let (a, b) = (d.re, d.im);
    let mid = ell * PI;
    if b == mid {
        let x = bisect(-2.0 * OVERFLOW_RE, OVERFLOW_RE, |x| ell * x + x.exp() - a)?;
        return Some(Complex64::new(x, PI));
    }
    let resid = |y: f64| {
        let r = (ell * y - b) / y.sin();
        ell * r.ln() - r * y.cos() - a
    };
    let y = if b < mid {
        let lo = (b / ell).max(0.0);
        bisect(lo, PI, resid)?
    } else {
        let hi = (b / ell).min(TAU);
        bisect(PI, hi, |y| -resid(y))?
    };
    let r = (ell * y - b) / y.sin();
    let x = r.ln();
    if !x.is_finite() {
        return None;
    }
    Some(Complex64::new(x.min(OVERFLOW_RE), y))
}

/// Bisection for an increasing crossing on the open interval (lo, hi).
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> Option<f64> {
    if !(lo < hi) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let v = g(m);
        if v.is_nan() {
            return None;
        }
        if v < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One entry of a preimage fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub k: i64,
    pub z: Complex64,
    pub residual: f64,
}

/// Preimages z_k of a cylinder point over a contiguous range of k.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageFiber {
    pub base: CylinderPoint,
    /// Sorted by k.
    pub branches: Vec<Branch>,
}

impl PreimageFiber {
    pub fn get(&self, k: i64) -> Option<&Branch> {
        self.branches
            .binary_search_by_key(&k, |b| b.k)
            .ok()
            .map(|i| &self.branches[i])
    }
}

/// The point lift(base) + 2πik whose strip preimage is z_k.
#[inline]
pub fn fiber_target(base: CylinderPoint, k: f64) -> Complex64 {
    base.lift() + Complex64::new(0.0, TAU * k)
}

/// z_k = f⁻¹(lift(base) + 2πik) for every k in `k_lo..=k_hi`.
pub fn fiber(
    base: CylinderPoint,
    k_lo: i64,
    k_hi: i64,
    p: &FamilyParams,
    cfg: &BranchSolveConfig,
) -> Result<PreimageFiber> {
    let mut branches = Vec::with_capacity((k_hi - k_lo + 1).max(0) as usize);
    for k in k_lo..=k_hi {
        let w = fiber_target(base, k as f64);
        let s = solve_strip(w, p, cfg).map_err(|e| tag_branch(e, k))?;
        branches.push(Branch {
            k,
            z: s.z,
            residual: s.residual,
        });
    }
    Ok(PreimageFiber { base, branches })
}

pub(crate) fn tag_branch(e: Error, k: i64) -> Error {
    match e {
        Error::NoConvergence { w, best, residual, .. } => Error::NoConvergence {
            w,
            k: Some(k),
            best,
            residual,
        },
        other => other,
    }
}

/// |f'(z_k)| = |ℓ − e^{z_k}|.
pub fn branch_derivative(z: Complex64, p: &FamilyParams) -> Result<f64> {
    let value = p.df(z).norm();
    if value < 1e-300 {
        return Err(Error::DegenerateBranch { z, value });
    }
    Ok(value)
}
