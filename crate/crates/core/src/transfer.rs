//! The transfer operator 𝓛_t g(z) = Σ_k |ℓ − e^{z_k}|^{−t} g(z_k).
//!
//! The sum over k is split into an explicit window |k| ≤ K and two tails.
//! Each tail Σ_{k>K} h(k) is replaced by ∫_{K+½}^∞ h(s) ds over the
//! continuous index s (points z(s) = f⁻¹(z̃ + 2πis)), on which h decays like
//! s^{−t}. Tails are integrated either by Gauss–Laguerre in v = (t−1)·log(s/s₀)
//! or by composite Gauss–Legendre in log s up to a real-part cutoff.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::branches::{fiber_target, solve_strip, tag_branch, BranchSolveConfig};
use crate::dynamics::{project, CylinderPoint, FamilyParams};
use crate::error::{Error, Result};
use crate::quad::{gauss_laguerre, gauss_legendre, KahanSum};

/// A weighted preimage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Child {
    pub z: Complex64,
    /// Quadrature weight: 1 inside the window.
    pub quad: f64,
    /// log|f'(z)|.
    pub log_deriv: f64,
    /// quad · |f'(z)|^{−t}.
    pub weight: f64,
}

/// How the tails beyond the explicit window are handled.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    /// Tails dropped entirely.
    None,
    /// Gauss–Laguerre with the given node count per side.
    Laguerre(usize),
    /// Two-point Gauss–Legendre panels of width `panel` in log s, stopped
    /// once a whole panel has real part beyond `re_cutoff`.
    Composite { panel: f64, re_cutoff: f64 },
}

/// Window, tail rule and error metadata for one value of t.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBudget {
    pub t: f64,
    /// Requested absolute accuracy for sup|g| ≤ 1.
    pub tol: f64,
    /// Half-width K of the explicit window.
    pub window: u32,
    pub tail: TailRule,
    /// Estimated total error of window plus tail for sup|g| ≤ 1.
    pub tail_bound: f64,
    /// Bound on the mass of |k| > K when tails are dropped:
    /// 2·π^{−t}(K−ℓ)^{1−t}/(t−1), valid once π(K−ℓ) ≥ |Im λ| + 2ℓπ.
    pub discard_bound: f64,
    laguerre: Vec<(f64, f64)>,
}

const WINDOW_LADDER: [(u32, usize); 9] = [
    (2, 3),
    (3, 4),
    (5, 6),
    (8, 8),
    (12, 10),
    (20, 12),
    (40, 14),
    (80, 16),
    (160, 20),
];

impl TruncationBudget {
    /// A budget with the given window and tail rule; `tail_bound` is
    /// estimated against a much wider window on reference bases.
    pub fn new(t: f64, p: &FamilyParams, window: u32, tail: TailRule) -> Result<Self> {
        check_t(t)?;
        let laguerre = match tail {
            TailRule::Laguerre(q) => {
                if q == 0 {
                    return Err(Error::InvalidParams("Laguerre tail needs at least one node".into()));
                }
                let rule = gauss_laguerre(q);
                if rule.last().map_or(false, |(v, _)| v / (t - 1.0) > 600.0) {
                    return Err(Error::TailUnresolved { t });
                }
                rule
            }
            _ => Vec::new(),
        };
        let mut b = TruncationBudget {
            t,
            tol: f64::NAN,
            window,
            tail,
            tail_bound: f64::NAN,
            discard_bound: discard_bound(t, p, window),
            laguerre,
        };
        b.tail_bound = b.estimate_error(p)?;
        b.tol = b.tail_bound;
        Ok(b)
    }

    /// The smallest ladder entry whose estimated error is at most `tol`.
    pub fn for_tolerance(t: f64, p: &FamilyParams, tol: f64) -> Result<Self> {
        check_t(t)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidParams(format!("tolerance {tol} must be positive")));
        }
        let mut last = None;
        for (k, q) in WINDOW_LADDER {
            let mut b = Self::new(t, p, k, TailRule::Laguerre(q))?;
            if b.tail_bound <= tol {
                b.tol = tol;
                return Ok(b);
            }
            last = Some(b);
        }
        let b = last.expect("ladder is non-empty");
        Err(Error::InvalidParams(format!(
            "tolerance {tol:e} unreachable at t = {t}: best estimate {:e} with K = {}",
            b.tail_bound, b.window
        )))
    }

    /// A budget for t = 2 without error estimation, for callers that only
    /// need child positions, quadrature weights and log|f'|.
    pub fn geometry_only(p: &FamilyParams, window: u32, tail: TailRule) -> Self {
        let laguerre = match tail {
            TailRule::Laguerre(q) => gauss_laguerre(q),
            _ => Vec::new(),
        };
        TruncationBudget {
            t: 2.0,
            tol: f64::NAN,
            window,
            tail,
            tail_bound: f64::NAN,
            discard_bound: discard_bound(2.0, p, window),
            laguerre,
        }
    }

    /// Same tail rule with the window widened by `factor`.
    pub fn widened(&self, p: &FamilyParams, factor: u32) -> Result<Self> {
        let mut b = Self::new(self.t, p, self.window * factor, self.tail.clone())?;
        b.tol = self.tol;
        Ok(b)
    }

    /// Number of children per node for fixed-size rules.
    pub fn branching(&self) -> Option<usize> {
        let explicit = 2 * self.window as usize + 1;
        match self.tail {
            TailRule::None => Some(explicit),
            TailRule::Laguerre(q) => Some(explicit + 2 * q),
            TailRule::Composite { .. } => None,
        }
    }

    fn estimate_error(&self, p: &FamilyParams) -> Result<f64> {
        let cfg = BranchSolveConfig::default();
        let wide_window = (20 * self.window).max(40);
        let reference = TruncationBudget {
            window: wide_window,
            ..self.clone()
        };
        let reference = match self.tail {
            TailRule::Laguerre(q) => {
                let rule = gauss_laguerre(q + 4);
                TruncationBudget {
                    tail: TailRule::Laguerre(q + 4),
                    laguerre: rule,
                    ..reference
                }
            }
            _ => reference,
        };
        let one = |_: CylinderPoint| 1.0;
        let mut worst = 0.0f64;
        for base in reference_bases(p) {
            let a = apply_transfer(&one, base, p, self, &cfg)?;
            let b = apply_transfer(&one, base, p, &reference, &cfg)?;
            worst = worst.max((a - b).abs());
        }
        Ok(2.0 * worst)
    }
}

fn reference_bases(p: &FamilyParams) -> Vec<CylinderPoint> {
    let left = -2.0 * p.ell_f64() + 0.5;
    let mut out = Vec::new();
    for re in [left, 0.0, 2.0, 6.0, 15.0, 30.0] {
        for im in [0.5, PI, 5.5] {
            out.push(CylinderPoint::new(re, im));
        }
    }
    out
}

fn check_t(t: f64) -> Result<()> {
    if t.is_nan() || t <= 1.0 {
        Err(Error::SeriesDivergence { t })
    } else {
        Ok(())
    }
}

/// 2·π^{−t}(K−ℓ)^{1−t}/(t−1); infinite when K ≤ ℓ.
pub fn discard_bound(t: f64, p: &FamilyParams, window: u32) -> f64 {
    let gap = f64::from(window) - p.ell_f64();
    if gap <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * PI.powf(-t) * gap.powf(1.0 - t) / (t - 1.0)
}

/// Smallest K with [`discard_bound`] ≤ tol.
pub fn k_min(t: f64, p: &FamilyParams, tol: f64) -> f64 {
    let gap = (tol * (t - 1.0) / (2.0 * PI.powf(-t))).powf(1.0 / (1.0 - t));
    (p.ell_f64() + gap).ceil()
}

#[inline]
fn log_deriv(z: Complex64, p: &FamilyParams) -> Result<f64> {
    let d = p.df(z).norm();
    if d < 1e-300 {
        return Err(Error::DegenerateBranch { z, value: d });
    }
    Ok(d.ln())
}

fn solve_at(base: CylinderPoint, s: f64, p: &FamilyParams, cfg: &BranchSolveConfig) -> Result<Complex64> {
    solve_strip(fiber_target(base, s), p, cfg)
        .map(|r| r.z)
        .map_err(|e| tag_branch(e, s.round() as i64))
}

/// Appends the weighted preimages of `base` in the fixed order
/// k = 0, +1, −1, …, +K, −K, then tail nodes (+s₁, −s₁, +s₂, −s₂, …).
pub fn children_into(
    base: CylinderPoint,
    p: &FamilyParams,
    budget: &TruncationBudget,
    cfg: &BranchSolveConfig,
    out: &mut Vec<Child>,
) -> Result<()> {
    let t = budget.t;
    check_t(t)?;
    let push = |s: f64, q: f64, out: &mut Vec<Child>| -> Result<()> {
        let z = solve_at(base, s, p, cfg)?;
        let ld = log_deriv(z, p)?;
        out.push(Child {
            z,
            quad: q,
            log_deriv: ld,
            weight: q * (-t * ld).exp(),
        });
        Ok(())
    };
    push(0.0, 1.0, out)?;
    for k in 1..=budget.window {
        let k = f64::from(k);
        push(k, 1.0, out)?;
        push(-k, 1.0, out)?;
    }
    let s0 = f64::from(budget.window) + 0.5;
    match budget.tail {
        TailRule::None => {}
        TailRule::Laguerre(_) => {
            let beta = t - 1.0;
            for &(v, w) in &budget.laguerre {
                let s = s0 * (v / beta).exp();
                let q = w * v.exp() * s / beta;
                push(s, q, out)?;
                push(-s, q, out)?;
            }
        }
        TailRule::Composite { panel, re_cutoff } => {
            let gl = gauss_legendre(2);
            let mut u0 = s0.ln();
            loop {
                let mut beyond = true;
                for &(x, w) in &gl {
                    let u = u0 + 0.5 * panel * (1.0 + x);
                    let s = u.exp();
                    let q = 0.5 * panel * w * s;
                    let len = out.len();
                    push(s, q, out)?;
                    push(-s, q, out)?;
                    beyond &= out[len].z.re > re_cutoff && out[len + 1].z.re > re_cutoff;
                }
                if beyond {
                    break;
                }
                u0 += panel;
            }
        }
    }
    Ok(())
}

pub fn children(base: CylinderPoint, p: &FamilyParams, budget: &TruncationBudget, cfg: &BranchSolveConfig) -> Result<Vec<Child>> {
    let mut out = Vec::with_capacity(budget.branching().unwrap_or(64));
    children_into(base, p, budget, cfg, &mut out)?;
    Ok(out)
}

/// 𝓛_t g(z) with compensated summation in child order.
pub fn apply_transfer<G>(g: &G, z: CylinderPoint, p: &FamilyParams, budget: &TruncationBudget, cfg: &BranchSolveConfig) -> Result<f64>
where
    G: Fn(CylinderPoint) -> f64 + ?Sized,
{
    p.require_theory_regime()?;
    let kids = children(z, p, budget, cfg)?;
    Ok(kids.iter().map(|c| c.weight * g(project(c.z))).collect::<KahanSum>().total())
}

/// Brute-force Σ_{|k|≤K} |f'(z_k)|^{−t} g(z_k) without any tail.
pub fn window_sum<G>(g: &G, z: CylinderPoint, t: f64, p: &FamilyParams, window: u32, cfg: &BranchSolveConfig) -> Result<f64>
where
    G: Fn(CylinderPoint) -> f64 + ?Sized,
{
    check_t(t)?;
    let mut acc = KahanSum::new();
    let mut add = |k: f64| -> Result<()> {
        let zk = solve_at(z, k, p, cfg)?;
        acc.add((-t * log_deriv(zk, p)?).exp() * g(project(zk)));
        Ok(())
    };
    add(0.0)?;
    for k in 1..=window {
        add(f64::from(k))?;
        add(-f64::from(k))?;
    }
    Ok(acc.total())
}

/// Bilinearly interpolated function on [x_min, M] × [0, 2π), periodic in y,
/// zero outside the x-range.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub x_min: f64,
    pub m: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in x: `values[ix * ny + iy]`.
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(x_min: f64, m: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_min < m) || nx < 2 || ny < 2 {
            return Err(Error::InvalidParams(format!(
                "grid [{x_min}, {m}] with {nx}x{ny} nodes"
            )));
        }
        Ok(GridFunction {
            x_min,
            m,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        })
    }

    pub fn hx(&self) -> f64 {
        (self.m - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        TAU / self.ny as f64
    }

    pub fn node(&self, ix: usize, iy: usize) -> CylinderPoint {
        CylinderPoint::new(self.x_min + ix as f64 * self.hx(), iy as f64 * self.hy())
    }

    /// Interpolation stencil: four (index, weight) pairs, or `None` outside.
    #[inline]
    pub fn stencil(&self, q: CylinderPoint) -> Option<[(usize, f64); 4]> {
        let fx = (q.re() - self.x_min) / self.hx();
        if !(fx >= 0.0 && fx <= (self.nx - 1) as f64) {
            return None;
        }
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let ax = fx - ix as f64;
        let fy = q.im() / self.hy();
        let iy = (fy.floor() as usize).min(self.ny - 1);
        let ay = fy - iy as f64;
        let iy1 = (iy + 1) % self.ny;
        let ny = self.ny;
        Some([
            (ix * ny + iy, (1.0 - ax) * (1.0 - ay)),
            (ix * ny + iy1, (1.0 - ax) * ay),
            ((ix + 1) * ny + iy, ax * (1.0 - ay)),
            ((ix + 1) * ny + iy1, ax * ay),
        ])
    }

    pub fn eval(&self, q: CylinderPoint) -> f64 {
        match self.stencil(q) {
            Some(st) => st.iter().map(|&(i, w)| w * self.values[i]).sum(),
            None => 0.0,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Perron eigenvalue and eigenfunction (sup-normalized) of 𝓛_t on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub t: f64,
    pub alpha: f64,
    pub psi: GridFunction,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p22() -> FamilyParams {
        FamilyParams::new(2, Complex64::new(2.0, 0.0)).unwrap()
    }

    #[test]
    fn rejects_t_at_most_one() {
        let p = p22();
        assert!(matches!(
            TruncationBudget::new(1.0, &p, 2, TailRule::Laguerre(3)),
            Err(Error::SeriesDivergence { .. })
        ));
        assert!(matches!(
            TruncationBudget::new(0.9, &p, 2, TailRule::None),
            Err(Error::SeriesDivergence { .. })
        ));
    }

    #[test]
    fn zero_observable_gives_zero() {
        let p = p22();
        let b = TruncationBudget::new(1.5, &p, 3, TailRule::Laguerre(4)).unwrap();
        let v = apply_transfer(&|_| 0.0, CylinderPoint::new(1.0, 1.0), &p, &b, &BranchSolveConfig::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn tail_matches_long_window() {
        // Window 2 plus Laguerre tail against an explicit window of 4000
        // plus the same tail model from there.
        let p = p22();
        let cfg = BranchSolveConfig::default();
        let base = CylinderPoint::new(2.0, 1.0);
        for t in [1.5, 2.0, 4.0] {
            let b = TruncationBudget::new(t, &p, 2, TailRule::Laguerre(6)).unwrap();
            let wide = TruncationBudget::new(t, &p, 4000, TailRule::Laguerre(6)).unwrap();
            let a = apply_transfer(&|_| 1.0, base, &p, &b, &cfg).unwrap();
            let r = apply_transfer(&|_| 1.0, base, &p, &wide, &cfg).unwrap();
            assert!((a - r).abs() < 0.01 * r, "t={t}: {a} vs {r}");
        }
    }

    #[test]
    fn k_min_meets_discard_bound() {
        let p = p22();
        for (t, tol) in [(2.0, 1e-2), (4.0, 1e-6), (3.0, 1e-3)] {
            let k = k_min(t, &p, tol);
            assert!(discard_bound(t, &p, k as u32) <= tol * (1.0 + 1e-12));
            assert!(discard_bound(t, &p, k as u32 - 1) > tol);
        }
    }

    #[test]
    fn grid_interpolation_is_exact_on_bilinear_data() {
        let mut g = GridFunction::new(-4.0, 30.0, 35, 16).unwrap();
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                let q = g.node(ix, iy);
                g.values[ix * g.ny + iy] = 2.0 + 0.5 * q.re();
            }
        }
        let q = CylinderPoint::new(3.3, 1.234);
        assert!((g.eval(q) - (2.0 + 0.5 * 3.3)).abs() < 1e-12);
        assert_eq!(g.eval(CylinderPoint::new(31.0, 1.0)), 0.0);
        assert_eq!(g.eval(CylinderPoint::new(-5.0, 1.0)), 0.0);
    }
}
