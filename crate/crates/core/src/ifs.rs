//! The system of inverse branches F_k⁻¹, k ∈ [e^{2R}, e^{3R}], on the region
//! S_R = {R ≤ Re z ≤ 4R, ε_R < Im z < 2π − ε_R}, with sampled checks of
//! F_k⁻¹(S_R) ⊂ S_R and of the derivative floor 1/(10k).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::branches::{fiber_target, solve_strip, BranchSolveConfig};
use crate::dynamics::{CylinderPoint, FamilyParams};
use crate::error::{Error, Result};
use crate::quad::KahanSum;

/// Largest branch count accepted (R ≈ 4).
pub const MAX_BRANCHES: i64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfsConfig {
    pub r: f64,
    pub eps_r: f64,
    pub k_lo: i64,
    pub k_hi: i64,
    /// Sample points of S_R per branch.
    pub samples: usize,
}

impl IfsConfig {
    /// Defaults: ε_R = min(π/2, e^{−3R}/4), k ∈ [⌈e^{2R}⌉, ⌊e^{3R}⌋].
    pub fn new(r: f64, samples: usize) -> Result<Self> {
        if !(r > 1.0) || !r.is_finite() {
            return Err(Error::InvalidParams(format!("R = {r} must exceed 1")));
        }
        let k_lo = (2.0 * r).exp().ceil();
        let k_hi = (3.0 * r).exp().floor();
        if k_hi - k_lo > MAX_BRANCHES as f64 {
            return Err(Error::InvalidParams(format!(
                "R = {r} needs {:.3e} branches, above the limit of {MAX_BRANCHES}",
                k_hi - k_lo + 1.0
            )));
        }
        Self::with_range(r, (PI / 2.0).min((-3.0 * r).exp() / 4.0), k_lo as i64, k_hi as i64, samples)
    }

    pub fn with_range(r: f64, eps_r: f64, k_lo: i64, k_hi: i64, samples: usize) -> Result<Self> {
        if !(r > 1.0 && eps_r > 0.0 && eps_r < PI && k_lo <= k_hi && samples >= 8) {
            return Err(Error::InvalidParams(format!(
                "IFS config R={r} eps={eps_r} k=[{k_lo},{k_hi}] samples={samples}"
            )));
        }
        if k_hi - k_lo > MAX_BRANCHES {
            return Err(Error::InvalidParams(format!(
                "{} branches requested, above the limit of {MAX_BRANCHES}",
                k_hi - k_lo + 1
            )));
        }
        Ok(IfsConfig {
            r,
            eps_r,
            k_lo,
            k_hi,
            samples,
        })
    }

    /// R − log 10.
    pub fn log10_floor(&self) -> f64 {
        self.r - 10f64.ln()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.r && z.re <= 4.0 * self.r && z.im > self.eps_r && z.im < TAU - self.eps_r
    }

    /// Stratified sample of S_R: the four corners, points spaced evenly along
    /// the boundary, and a Chebyshev grid inside.
    pub fn sample_points(&self) -> Vec<Complex64> {
        let (x0, x1) = (self.r, 4.0 * self.r);
        // S_R is open in Im; sample just inside the inset lines.
        let inset = self.eps_r * (1.0 + 1e-6);
        let (y0, y1) = (inset, TAU - inset);
        let n_int = self.samples * 3 / 8;
        let n_bdry = self.samples - n_int;
        let (w, h) = (x1 - x0, y1 - y0);
        let per = 2.0 * (w + h);
        let mut out = vec![
            Complex64::new(x0, y0),
            Complex64::new(x1, y0),
            Complex64::new(x1, y1),
            Complex64::new(x0, y1),
        ];
        for j in 0..n_bdry.saturating_sub(4) {
            let s = per * (j as f64 + 0.5) / (n_bdry - 4) as f64;
            out.push(if s < w {
                Complex64::new(x0 + s, y0)
            } else if s < w + h {
                Complex64::new(x1, y0 + (s - w))
            } else if s < 2.0 * w + h {
                Complex64::new(x1 - (s - w - h), y1)
            } else {
                Complex64::new(x0, y1 - (s - 2.0 * w - h))
            });
        }
        let nx = ((n_int as f64).sqrt().round() as usize).max(1);
        let ny = n_int / nx;
        let cheb = |i: usize, n: usize, a: f64, b: f64| {
            let c = (PI * (2 * i + 1) as f64 / (2 * n) as f64).cos();
            0.5 * (a + b) - 0.5 * (b - a) * c
        };
        for i in 0..nx {
            for j in 0..ny {
                out.push(Complex64::new(cheb(i, nx, x0, x1), cheb(j, ny, y0, y1)));
            }
        }
        let mut extra = 0;
        while out.len() < self.samples {
            extra += 1;
            let s = (extra as f64 * 0.618_033_988_749_895).fract();
            out.push(Complex64::new(x0 + s * w, y0 + (1.0 - s) * h));
        }
        out
    }
}

/// The inequality e^{4R}·sin ε_R + A + |Im λ| ≤ B in two forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionInequality {
    /// e^{4R}·sin ε_R + 4π + |Im λ|.
    pub literal_lhs: f64,
    /// e^R / 2.
    pub literal_rhs: f64,
    /// e^{4R}·sin ε_R + 2πℓ + |Im λ|.
    pub strip_lhs: f64,
    /// 2π·k_lo: smallest imaginary part of the targets z + 2πik.
    pub strip_rhs: f64,
}

impl InclusionInequality {
    pub fn new(cfg: &IfsConfig, p: &FamilyParams) -> Self {
        let core = (4.0 * cfg.r).exp() * cfg.eps_r.sin() + p.lambda().im.abs();
        InclusionInequality {
            literal_lhs: core + 4.0 * PI,
            literal_rhs: cfg.r.exp() / 2.0,
            strip_lhs: core + TAU * p.ell_f64(),
            strip_rhs: TAU * cfg.k_lo as f64,
        }
    }

    pub fn literal_holds(&self) -> bool {
        self.literal_lhs <= self.literal_rhs
    }

    /// If a preimage had Im within ε_R of 0 or 2π while Re ≤ 4R, then
    /// |Im f| ≤ strip_lhs. Since Im of every target is at least strip_rhs,
    /// strip_lhs < strip_rhs excludes that.
    pub fn strip_holds(&self) -> bool {
        self.strip_lhs < self.strip_rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub k: i64,
    pub z: Complex64,
    /// The computed F_k⁻¹(z), if the solve succeeded.
    pub image: Option<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchStats {
    pub k: i64,
    /// Sampled inf and sup of |(F_k⁻¹)'| over S_R.
    pub min_deriv: f64,
    pub max_deriv: f64,
    pub argmin: Complex64,
    pub min_re: f64,
    pub max_re: f64,
    pub max_residual: f64,
}

impl BranchStats {
    pub fn floor(&self) -> f64 {
        1.0 / (10.0 * self.k as f64)
    }

    pub fn ok(&self) -> bool {
        self.min_deriv >= self.floor()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    pub verified: bool,
    pub witnesses: Vec<Witness>,
    pub branches: Vec<BranchStats>,
    pub inequality: InclusionInequality,
}

/// Branch indices examined: all of them, or an even stratification above
/// 10⁵.
fn checked_ks(cfg: &IfsConfig) -> Vec<i64> {
    let n = cfg.k_hi - cfg.k_lo + 1;
    if n <= 100_000 {
        (cfg.k_lo..=cfg.k_hi).collect()
    } else {
        let m = 100_000i64;
        (0..m).map(|j| cfg.k_lo + j * (n - 1) / (m - 1)).collect()
    }
}

/// Samples F_k⁻¹(S_R) ⊂ S_R for every checked k.
pub fn verify_inclusion(cfg: &IfsConfig, p: &FamilyParams, solver: &BranchSolveConfig) -> Result<InclusionReport> {
    p.require_theory_regime()?;
    let pts = cfg.sample_points();
    let ks = checked_ks(cfg);
    let per_k: Vec<(BranchStats, Vec<Witness>)> = ks
        .par_iter()
        .map(|&k| {
            let mut st = BranchStats {
                k,
                min_deriv: f64::INFINITY,
                max_deriv: 0.0,
                argmin: pts[0],
                min_re: f64::INFINITY,
                max_re: f64::NEG_INFINITY,
                max_residual: 0.0,
            };
            let mut wit = Vec::new();
            for &z in &pts {
                let w = fiber_target(CylinderPoint::new(z.re, z.im), k as f64);
                // z itself lies in [0, 2π), so the target is exactly z + 2πik.
                match solve_strip(w, p, solver) {
                    Ok(s) => {
                        let d = 1.0 / p.df(s.z).norm();
                        if d < st.min_deriv {
                            st.min_deriv = d;
                            st.argmin = z;
                        }
                        st.max_deriv = st.max_deriv.max(d);
                        st.min_re = st.min_re.min(s.z.re);
                        st.max_re = st.max_re.max(s.z.re);
                        st.max_residual = st.max_residual.max(s.residual);
                        if !cfg.contains(s.z) {
                            wit.push(Witness { k, z, image: Some(s.z) });
                        }
                    }
                    Err(_) => wit.push(Witness { k, z, image: None }),
                }
            }
            (st, wit)
        })
        .collect();
    let mut branches = Vec::with_capacity(per_k.len());
    let mut witnesses = Vec::new();
    for (st, w) in per_k {
        branches.push(st);
        witnesses.extend(w);
    }
    Ok(InclusionReport {
        verified: witnesses.is_empty(),
        witnesses,
        branches,
        inequality: InclusionInequality::new(cfg, p),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfsReport {
    pub config: IfsConfig,
    pub inclusion_verified: bool,
    pub inequality: InclusionInequality,
    pub branches: Vec<BranchStats>,
    /// log Σ_k (sampled inf |(F_k⁻¹)'|).
    pub pressure_lower: f64,
    /// R − log 10.
    pub log10_floor: f64,
    /// log Σ_k 1/(10k) over the same k.
    pub floor_sum_log: f64,
    pub branches_checked: usize,
}

impl IfsReport {
    pub const CSV_HEADER: &'static str = "k,min_deriv,floor_1_over_10k,ok";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for b in &self.branches {
            s.push_str(&format!(
                "{},{},{},{}\n",
                b.k,
                crate::pressure::sci(b.min_deriv),
                crate::pressure::sci(b.floor()),
                b.ok()
            ));
        }
        s
    }

    pub fn meets_log10_floor(&self) -> bool {
        self.pressure_lower >= self.log10_floor
    }
}

/// Per-branch sampled derivative infima, the floor check 1/(10k), and the
/// resulting lower bound log Σ_k inf|(F_k⁻¹)'| for P_R(1).
pub fn ifs_pressure_bound(cfg: &IfsConfig, p: &FamilyParams, solver: &BranchSolveConfig) -> Result<IfsReport> {
    let inc = verify_inclusion(cfg, p, solver)?;
    if let Some(b) = inc.branches.iter().find(|b| !b.ok()) {
        return Err(Error::BoundViolated {
            k: b.k,
            z: b.argmin,
            value: b.min_deriv,
            floor: b.floor(),
        });
    }
    let all = inc.branches.len() as i64 == cfg.k_hi - cfg.k_lo + 1;
    let sum: KahanSum = inc.branches.iter().map(|b| b.min_deriv).collect();
    let floor: KahanSum = inc.branches.iter().map(|b| b.floor()).collect();
    let pressure_lower = if all { sum.total().ln() } else { f64::NAN };
    Ok(IfsReport {
        config: *cfg,
        inclusion_verified: inc.verified,
        inequality: inc.inequality,
        branches_checked: inc.branches.len(),
        branches: inc.branches,
        pressure_lower,
        log10_floor: cfg.log10_floor(),
        floor_sum_log: floor.total().ln(),
    })
}
