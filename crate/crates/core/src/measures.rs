//! Conformal measure m_t as normalized depth-n preimage atoms, the invariant
//! measure μ_t = ψ_t·m_t, tail masses and the Lyapunov exponent.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::dynamics::{project, CylinderPoint, FamilyParams};
use crate::error::{Error, Result};
use crate::pressure::{LeafSink, TreeConfig, TreeWalk};
use crate::quad::KahanSum;
use crate::transfer::{GridFunction, TailRule, TruncationBudget};

/// Cell size used to merge nearby atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub cell_re: f64,
    pub cells_im: u32,
}

impl Default for Binning {
    fn default() -> Self {
        Binning {
            cell_re: 0.01,
            cells_im: 256,
        }
    }
}

/// Tree shape for atom construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomConfig {
    pub tree: TreeConfig,
    pub interior_window: u32,
    pub interior_tail: TailRule,
    /// Finer rule on the levels just above the leaves, where the shape of the
    /// leaf distribution is decided.
    pub near_leaf_levels: usize,
    pub near_leaf_window: u32,
    pub near_leaf_tail: TailRule,
    pub leaf_window: u32,
    /// Last-level tail rule; a composite rule resolves the radial tail.
    pub leaf_tail: TailRule,
    /// `None` keeps every leaf as its own atom.
    pub binning: Option<Binning>,
}

impl Default for AtomConfig {
    fn default() -> Self {
        AtomConfig {
            tree: TreeConfig {
                depth: 8,
                node_cap: 200_000_000,
                ..TreeConfig::default()
            },
            interior_window: 1,
            interior_tail: TailRule::Laguerre(2),
            near_leaf_levels: 1,
            near_leaf_window: 2,
            near_leaf_tail: TailRule::Laguerre(3),
            leaf_window: 2,
            leaf_tail: TailRule::Composite {
                panel: 1.5,
                re_cutoff: 18.0,
            },
            binning: Some(Binning::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub q: CylinderPoint,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub t: f64,
    pub depth: usize,
    pub base: CylinderPoint,
    /// Total leaf weight before normalization, 𝓛ⁿ1(z).
    pub normalizer: f64,
}

/// Weighted point masses, normalized to total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    pub total: f64,
    pub provenance: Provenance,
}

impl AtomicMeasure {
    pub const CSV_HEADER: &'static str = "re,im,weight";

    pub fn integrate<G: Fn(CylinderPoint) -> f64 + ?Sized>(&self, g: &G) -> f64 {
        self.atoms.iter().map(|a| a.weight * g(a.q)).collect::<KahanSum>().total()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for a in &self.atoms {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::pressure::sci(a.q.re()),
                crate::pressure::sci(a.q.im()),
                crate::pressure::sci(a.weight)
            ));
        }
        s
    }

    fn normalized(atoms: Vec<Atom>, provenance: Provenance) -> Result<Self> {
        let total: KahanSum = atoms.iter().map(|a| a.weight).collect();
        let total = total.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParams(format!("atom mass {total} cannot be normalized")));
        }
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| Atom {
                q: a.q,
                weight: a.weight / total,
            })
            .collect();
        let total = atoms.iter().map(|a| a.weight).collect::<KahanSum>().total();
        Ok(AtomicMeasure {
            atoms,
            total,
            provenance,
        })
    }
}

/// Test function on the cylinder.
pub type Observable<'a> = &'a (dyn Fn(CylinderPoint) -> f64 + Sync);

/// Leaf sums taken before any binning, so that F(x) and |F'(x)| are exact
/// at every leaf x. Weights are w·ψ(x) when a density is given, w otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mass: f64,
    /// ∫g_i dν / mass.
    pub g: Vec<f64>,
    /// ∫g_i∘F dν / mass.
    pub g_of_f: Vec<f64>,
    /// ∫log|F'| dν / mass.
    pub log_deriv: f64,
}

impl Moments {
    /// |∫g∘F − ∫g| for every observable.
    pub fn invariance_residuals(&self) -> Vec<f64> {
        self.g.iter().zip(&self.g_of_f).map(|(a, b)| (a - b).abs()).collect()
    }
}

struct MomentAcc {
    mass: KahanSum,
    g: Vec<KahanSum>,
    g_of_f: Vec<KahanSum>,
    log_deriv: KahanSum,
}

struct MeasureSink<'a> {
    p: &'a FamilyParams,
    binning: Option<Binning>,
    cells: BTreeMap<(i64, i64), [KahanSum; 3]>,
    raw: Vec<Atom>,
    psi: Option<&'a GridFunction>,
    tests: &'a [Observable<'a>],
    acc: MomentAcc,
    below_grid: f64,
}

impl<'a> MeasureSink<'a> {
    fn new(p: &'a FamilyParams, binning: Option<Binning>, psi: Option<&'a GridFunction>, tests: &'a [Observable<'a>]) -> Self {
        MeasureSink {
            p,
            binning,
            cells: BTreeMap::new(),
            raw: Vec::new(),
            psi,
            tests,
            acc: MomentAcc {
                mass: KahanSum::new(),
                g: vec![KahanSum::new(); tests.len()],
                g_of_f: vec![KahanSum::new(); tests.len()],
                log_deriv: KahanSum::new(),
            },
            below_grid: f64::INFINITY,
        }
    }
}

impl LeafSink for MeasureSink<'_> {
    fn leaf(&mut self, z: Complex64, weight: f64) {
        let q = project(z);
        match self.binning {
            Some(b) => {
                let key = (
                    (q.re() / b.cell_re).floor() as i64,
                    ((q.im() / TAU * f64::from(b.cells_im)).floor() as i64).min(i64::from(b.cells_im) - 1),
                );
                let cell = self.cells.entry(key).or_default();
                cell[0].add(weight);
                cell[1].add(weight * q.re());
                cell[2].add(weight * q.im());
            }
            None => self.raw.push(Atom { q, weight }),
        }
        if self.psi.is_none() && self.tests.is_empty() {
            return;
        }
        let w = match self.psi {
            Some(psi) => {
                self.below_grid = self.below_grid.min(q.re());
                weight * psi.eval(q)
            }
            None => weight,
        };
        if w == 0.0 {
            return;
        }
        let fx = project(self.p.f(z));
        self.acc.mass.add(w);
        for (i, g) in self.tests.iter().enumerate() {
            self.acc.g[i].add(w * g(q));
            self.acc.g_of_f[i].add(w * g(fx));
        }
        self.acc.log_deriv.add(w * self.p.df(z).norm().ln());
    }

    fn merge(&mut self, other: Self) {
        for (k, v) in other.cells {
            let cell = self.cells.entry(k).or_default();
            for (a, b) in cell.iter_mut().zip(v) {
                a.add(b.total());
            }
        }
        self.raw.extend(other.raw);
        self.acc.mass.add(other.acc.mass.total());
        for (a, b) in self.acc.g.iter_mut().zip(other.acc.g) {
            a.add(b.total());
        }
        for (a, b) in self.acc.g_of_f.iter_mut().zip(other.acc.g_of_f) {
            a.add(b.total());
        }
        self.acc.log_deriv.add(other.acc.log_deriv.total());
        self.below_grid = self.below_grid.min(other.below_grid);
    }
}

/// Atoms plus leaf moments from one tree walk.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRun {
    pub atoms: AtomicMeasure,
    pub moments: Option<Moments>,
}

fn budgets(t: f64, p: &FamilyParams, cfg: &AtomConfig) -> Result<(TruncationBudget, TruncationBudget)> {
    Ok((
        TruncationBudget::new(t, p, cfg.interior_window, cfg.interior_tail.clone())?,
        TruncationBudget::new(t, p, cfg.leaf_window, cfg.leaf_tail.clone())?,
    ))
}

/// Depth-n atoms at `z`, and moments of the observables `tests` against the
/// leaves weighted by `psi` (or unweighted without `psi`).
pub fn measure_run(
    t: f64,
    z: CylinderPoint,
    p: &FamilyParams,
    cfg: &AtomConfig,
    psi: Option<&GridFunction>,
    tests: &[Observable<'_>],
) -> Result<MeasureRun> {
    p.require_theory_regime()?;
    let (interior, leaf) = budgets(t, p, cfg)?;
    let near = match cfg.near_leaf_levels {
        0 => None,
        _ => Some(TruncationBudget::new(t, p, cfg.near_leaf_window, cfg.near_leaf_tail.clone())?),
    };
    let walk = TreeWalk {
        p,
        budget: &interior,
        cfg: &cfg.tree,
        leaf_budget: Some(&leaf),
        near_leaf: near.as_ref().map(|b| (b, cfg.near_leaf_levels)),
    };
    let (sums, sink) = walk.run(z, || MeasureSink::new(p, cfg.binning, psi, tests))?;
    if let Some(psi) = psi {
        check_domain(sink.below_grid, psi)?;
    }
    let atoms = match cfg.binning {
        Some(_) => sink
            .cells
            .values()
            .map(|c| {
                let w = c[0].total();
                Atom {
                    q: CylinderPoint::new(c[1].total() / w, c[2].total() / w),
                    weight: w,
                }
            })
            .collect(),
        None => sink.raw,
    };
    let provenance = Provenance {
        t,
        depth: cfg.tree.depth,
        base: z,
        normalizer: sums.levels[cfg.tree.depth],
    };
    let atoms = AtomicMeasure::normalized(atoms, provenance)?;
    let moments = (psi.is_some() || !tests.is_empty()).then(|| {
        let m = sink.acc.mass.total();
        Moments {
            mass: m,
            g: sink.acc.g.iter().map(|s| s.total() / m).collect(),
            g_of_f: sink.acc.g_of_f.iter().map(|s| s.total() / m).collect(),
            log_deriv: sink.acc.log_deriv.total() / m,
        }
    });
    Ok(MeasureRun { atoms, moments })
}

fn check_domain(min_re: f64, psi: &GridFunction) -> Result<()> {
    if min_re < psi.x_min - psi.hx() {
        return Err(Error::DomainMismatch(format!(
            "atom at Re = {min_re} left of density grid starting at {}",
            psi.x_min
        )));
    }
    Ok(())
}

/// Normalized depth-n preimage atoms approximating m_t.
pub fn conformal_atoms(t: f64, z: CylinderPoint, p: &FamilyParams, cfg: &AtomConfig) -> Result<AtomicMeasure> {
    measure_run(t, z, p, cfg, None, &[]).map(|r| r.atoms)
}

/// Mass of {Re > M} for each M.
pub fn radial_mass_check(m: &AtomicMeasure, m_grid: &[f64]) -> Vec<(f64, f64)> {
    m_grid
        .iter()
        .map(|&mm| {
            let s: KahanSum = m.atoms.iter().filter(|a| a.q.re() > mm).map(|a| a.weight).collect();
            (mm, s.total())
        })
        .collect()
}

/// Least-squares line through (x, y): (slope, intercept, R²).
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Multiplies atom weights by ψ and renormalizes.
pub fn invariant_density_reweight(m: &AtomicMeasure, psi: &GridFunction) -> Result<AtomicMeasure> {
    let min_re = m.atoms.iter().map(|a| a.q.re()).fold(f64::INFINITY, f64::min);
    check_domain(min_re, psi)?;
    let atoms = m
        .atoms
        .iter()
        .map(|a| Atom {
            q: a.q,
            weight: a.weight * psi.eval(a.q),
        })
        .collect();
    AtomicMeasure::normalized(atoms, m.provenance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub t: f64,
    pub chi: f64,
    /// Standard deviation over bases and depths n, n−1.
    pub stderr: f64,
    /// (base, χ at depth n, χ at depth n−1).
    pub per_base: Vec<(CylinderPoint, f64, f64)>,
}

impl LyapunovEstimate {
    /// (max − min)/mean of the depth-n values across bases.
    pub fn dispersion(&self) -> f64 {
        let v: Vec<f64> = self.per_base.iter().map(|b| b.1).collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / self.chi.abs()
    }
}

/// χ = ∫log|F'| dμ_t from ψ-weighted depth-n leaves at each base.
pub fn lyapunov(t: f64, p: &FamilyParams, bases: &[CylinderPoint], cfg: &AtomConfig, psi: &GridFunction) -> Result<LyapunovEstimate> {
    if bases.is_empty() {
        return Err(Error::InvalidParams("no base points".into()));
    }
    let n = cfg.tree.depth;
    let mut shallow = cfg.clone();
    shallow.tree.depth = n.saturating_sub(1).max(1);
    let mut per_base = Vec::new();
    for &b in bases {
        let deep = measure_run(t, b, p, &cfg.without_binning(), Some(psi), &[])?;
        let prev = measure_run(t, b, p, &shallow.without_binning(), Some(psi), &[])?;
        let chi = |r: &MeasureRun| r.moments.as_ref().map_or(f64::NAN, |m| m.log_deriv);
        per_base.push((b, chi(&deep), chi(&prev)));
    }
    let chi = per_base.iter().map(|b| b.1).sum::<f64>() / per_base.len() as f64;
    let all: Vec<f64> = per_base.iter().flat_map(|b| [b.1, b.2]).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (all.len() as f64 - 1.0).max(1.0);
    Ok(LyapunovEstimate {
        t,
        chi,
        stderr: var.sqrt(),
        per_base,
    })
}

impl AtomConfig {
    /// Moments only: skip the atom list.
    fn without_binning(&self) -> AtomConfig {
        AtomConfig {
            binning: Some(Binning {
                cell_re: 1e3,
                cells_im: 1,
            }),
            ..self.clone()
        }
    }
}

/// Fixed smooth test functions with sup|g| ≤ 1.
pub fn standard_observables() -> [fn(CylinderPoint) -> f64; 3] {
    [
        |q| q.im().cos(),
        |q| (-(q.re() - 1.0).powi(2) / 4.0).exp(),
        |q| (2.0 * q.im()).sin() / (1.0 + q.re() * q.re() / 16.0),
    ]
}
