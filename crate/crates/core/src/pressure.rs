//! Pressure P(t) = lim (1/n)·log 𝓛_tⁿ1(z) by an explicit preimage tree and by
//! power iteration on a grid, and the zero t* of P.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::branches::BranchSolveConfig;
use crate::dynamics::{project, CylinderPoint, FamilyParams};
use crate::error::{Error, Result};
use crate::quad::KahanSum;
use crate::transfer::{children_into, Child, EigenPair, GridFunction, TailRule, TruncationBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    PreimageTree,
    PowerIteration,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::PreimageTree => "tree",
            Method::PowerIteration => "grid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Estimated error of one transfer step for sup|g| ≤ 1.
    pub truncation_tol: f64,
    /// Tree: estimated mass lost to pruning relative to the total.
    /// Grid: final power-iteration residual.
    pub residual: f64,
    /// Tree: (1/n)·log 𝓛ⁿ1 − (1/(n−1))·log 𝓛ⁿ⁻¹1.
    /// Grid: change of log α over the last iteration.
    pub cesaro_gap: f64,
    /// Tree: log(𝓛ⁿ1 / 𝓛ⁿ⁻¹1), the last-step growth rate.
    pub ratio: f64,
    /// Tree: Aitken Δ² limit of the last three growth rates, or `ratio`
    /// when they do not contract geometrically.
    pub extrapolated: f64,
}

/// Which tree quantity [`Estimator`] reports as the pressure value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreeReadout {
    /// (1/n)·log 𝓛ⁿ1(z).
    #[default]
    Cesaro,
    /// [`Diagnostics::extrapolated`]; free of the O(1/n) base-point term.
    Extrapolated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    pub t: f64,
    pub value: f64,
    pub method: Method,
    pub depth_or_iters: usize,
    pub base_point: CylinderPoint,
    pub diagnostics: Diagnostics,
}

/// Depth and limits for [`pressure_tree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub depth: usize,
    /// Node weights below `prune·(𝓛1(z))^j` at depth j are dropped.
    pub prune: f64,
    pub node_cap: u64,
    pub solver: BranchSolveConfig,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            depth: 7,
            prune: 1e-14,
            node_cap: 50_000_000,
            solver: BranchSolveConfig::default(),
        }
    }
}

/// Per-depth totals 𝓛ʲ1(z), j = 0..=n, of a preimage tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSums {
    pub levels: Vec<f64>,
    pub pruned: f64,
    pub nodes: u64,
}

/// Visits every leaf of the depth-n preimage tree (explicit window plus tail
/// nodes of `budget`) in a fixed order. Subtrees are processed in parallel
/// and merged in index order, so results do not depend on the thread count.
pub(crate) struct TreeWalk<'a> {
    pub p: &'a FamilyParams,
    pub budget: &'a TruncationBudget,
    pub cfg: &'a TreeConfig,
    /// Rule for the last level, if different from `budget`.
    pub leaf_budget: Option<&'a TruncationBudget>,
    /// Rule for this many levels just above the leaves.
    pub near_leaf: Option<(&'a TruncationBudget, usize)>,
}

pub(crate) trait LeafSink: Send {
    fn leaf(&mut self, z: Complex64, weight: f64);
    fn merge(&mut self, other: Self);
}

struct LevelSink {
    levels: Vec<KahanSum>,
}

impl LeafSink for LevelSink {
    fn leaf(&mut self, _: Complex64, _: f64) {}
    fn merge(&mut self, other: Self) {
        for (a, b) in self.levels.iter_mut().zip(other.levels) {
            a.add(b.total());
        }
    }
}

struct Shared {
    count: AtomicU64,
    abort: AtomicBool,
}

impl<'a> TreeWalk<'a> {
    fn budget_at(&self, depth: usize) -> &TruncationBudget {
        match self.leaf_budget {
            Some(b) if depth + 1 == self.cfg.depth => b,
            _ => match self.near_leaf {
                Some((b, levels)) if depth + 1 + levels >= self.cfg.depth => b,
                _ => self.budget,
            },
        }
    }

    /// Runs the walk, returning per-depth sums and the merged sink.
    pub fn run<S, F>(&self, root: CylinderPoint, make: F) -> Result<(TreeSums, S)>
    where
        S: LeafSink,
        F: Fn() -> S + Sync,
    {
        let n = self.cfg.depth;
        if n == 0 {
            return Err(Error::InvalidParams("tree depth must be >= 1".into()));
        }
        let shared = Shared {
            count: AtomicU64::new(1),
            abort: AtomicBool::new(false),
        };
        let mut levels = vec![KahanSum::new(); n + 1];
        levels[0].add(1.0);
        let mut sink = make();

        // Breadth-first over the first levels to get parallel work items.
        let mut frontier = vec![(root.lift(), 1.0f64)];
        let mut depth = 0;
        let mut scale = 1.0;
        let mut pruned = KahanSum::new();
        while depth < n && frontier.len() < 256 {
            let expanded: Vec<Result<Vec<Child>>> = frontier
                .par_iter()
                .map(|&(z, _)| {
                    let mut out = Vec::new();
                    children_into(project(z), self.p, self.budget_at(depth), &self.cfg.solver, &mut out)?;
                    Ok(out)
                })
                .collect();
            let mut next = Vec::new();
            for ((_, w), kids) in frontier.iter().zip(expanded) {
                for c in kids? {
                    let cw = w * c.weight;
                    levels[depth + 1].add(cw);
                    next.push((c.z, cw));
                }
            }
            self.bump(&shared, next.len() as u64)?;
            depth += 1;
            if depth == 1 {
                scale = levels[1].total().max(f64::MIN_POSITIVE);
            }
            if depth == n {
                for &(z, w) in &next {
                    sink.leaf(z, w);
                }
                frontier = Vec::new();
                break;
            }
            let threshold = self.cfg.prune * scale.powi(depth as i32);
            let mut kept = Vec::with_capacity(next.len());
            for (z, w) in next {
                if w < threshold {
                    pruned.add(w * scale.powi((n - depth) as i32));
                } else {
                    kept.push((z, w));
                }
            }
            frontier = kept;
        }

        if !frontier.is_empty() {
            let start = depth;
            let parts: Vec<Result<(Vec<KahanSum>, KahanSum, S)>> = frontier
                .par_iter()
                .map(|&(z, w)| {
                    let mut lv = vec![KahanSum::new(); n + 1];
                    let mut pr = KahanSum::new();
                    let mut s = make();
                    let mut bufs: Vec<Vec<Child>> = (0..=n).map(|_| Vec::new()).collect();
                    self.dfs(z, w, start, scale, &mut lv, &mut pr, &mut s, &mut bufs, &shared)?;
                    Ok((lv, pr, s))
                })
                .collect();
            for part in parts {
                let (lv, pr, s) = part?;
                for (a, b) in levels.iter_mut().zip(lv) {
                    a.add(b.total());
                }
                pruned.add(pr.total());
                sink.merge(s);
            }
        }
        let nodes = shared.count.load(Ordering::Relaxed);
        if nodes > self.cfg.node_cap {
            return Err(Error::BudgetExceeded { cap: self.cfg.node_cap });
        }
        Ok((
            TreeSums {
                levels: levels.iter().map(KahanSum::total).collect(),
                pruned: pruned.total(),
                nodes,
            },
            sink,
        ))
    }

    fn bump(&self, shared: &Shared, k: u64) -> Result<()> {
        let total = shared.count.fetch_add(k, Ordering::Relaxed) + k;
        if total > self.cfg.node_cap {
            shared.abort.store(true, Ordering::Relaxed);
            return Err(Error::BudgetExceeded { cap: self.cfg.node_cap });
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs<S: LeafSink>(
        &self,
        z: Complex64,
        w: f64,
        depth: usize,
        scale: f64,
        levels: &mut [KahanSum],
        pruned: &mut KahanSum,
        sink: &mut S,
        bufs: &mut [Vec<Child>],
        shared: &Shared,
    ) -> Result<()> {
        if shared.abort.load(Ordering::Relaxed) {
            return Err(Error::BudgetExceeded { cap: self.cfg.node_cap });
        }
        let n = self.cfg.depth;
        let mut kids = std::mem::take(&mut bufs[depth]);
        kids.clear();
        children_into(project(z), self.p, self.budget_at(depth), &self.cfg.solver, &mut kids)?;
        self.bump(shared, kids.len() as u64)?;
        let d1 = depth + 1;
        if d1 == n {
            for c in &kids {
                let cw = w * c.weight;
                levels[d1].add(cw);
                sink.leaf(c.z, cw);
            }
        } else {
            let threshold = self.cfg.prune * scale.powi(d1 as i32);
            for c in &kids {
                let cw = w * c.weight;
                levels[d1].add(cw);
                if cw < threshold {
                    pruned.add(cw * scale.powi((n - d1) as i32));
                } else {
                    self.dfs(c.z, cw, d1, scale, levels, pruned, sink, bufs, shared)?;
                }
            }
        }
        bufs[depth] = kids;
        Ok(())
    }
}

/// Per-depth totals of the depth-n tree rooted at `z`.
pub fn tree_sums(z: CylinderPoint, p: &FamilyParams, budget: &TruncationBudget, cfg: &TreeConfig) -> Result<TreeSums> {
    p.require_theory_regime()?;
    let walk = TreeWalk {
        p,
        budget,
        cfg,
        leaf_budget: None,
        near_leaf: None,
    };
    let n = cfg.depth;
    walk.run(z, || LevelSink {
        levels: vec![KahanSum::new(); n + 1],
    })
    .map(|(s, _)| s)
}

/// (1/n)·log 𝓛_tⁿ1(z) from the explicit depth-n preimage tree.
pub fn pressure_tree(z: CylinderPoint, p: &FamilyParams, budget: &TruncationBudget, cfg: &TreeConfig) -> Result<PressureEstimate> {
    let sums = tree_sums(z, p, budget, cfg)?;
    let n = cfg.depth;
    let ln = sums.levels[n].ln();
    let value = ln / n as f64;
    let (gap, ratio) = if n >= 2 {
        let prev = sums.levels[n - 1].ln();
        (value - prev / (n - 1) as f64, ln - prev)
    } else {
        (f64::NAN, ln)
    };
    let extrapolated = if n >= 3 {
        let r = |k: usize| (sums.levels[k] / sums.levels[k - 1]).ln();
        aitken(r(n - 2), r(n - 1), r(n))
    } else {
        ratio
    };
    Ok(PressureEstimate {
        t: budget.t,
        value,
        method: Method::PreimageTree,
        depth_or_iters: n,
        base_point: z,
        diagnostics: Diagnostics {
            truncation_tol: budget.tail_bound,
            residual: sums.pruned / sums.levels[n],
            cesaro_gap: gap,
            ratio,
            extrapolated,
        },
    })
}

/// Δ² limit of a geometrically converging triple; falls back to `c`.
fn aitken(a: f64, b: f64, c: f64) -> f64 {
    let (d1, d2) = (b - a, c - b);
    let rho = d2 / d1;
    if d1 != 0.0 && rho > 0.0 && rho < 0.95 {
        c + d2 * rho / (1.0 - rho)
    } else {
        c
    }
}

/// Grid layout and iteration limits for [`pressure_power`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Left edge; `None` means −2ℓ, the boundary of the trapped half-plane.
    pub x_min: Option<f64>,
    pub m: f64,
    pub nx: usize,
    pub ny: usize,
    pub iters: usize,
    pub tol: f64,
    /// Explicit window half-width; the rest is integrated up to Re = M.
    pub window: u32,
    /// Panel width in log s for the tail integral.
    pub panel: f64,
    pub solver: BranchSolveConfig,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_min: None,
            m: 30.0,
            nx: 200,
            ny: 60,
            iters: 1000,
            tol: 1e-9,
            window: 3,
            panel: 0.5,
            solver: BranchSolveConfig::default(),
        }
    }
}

/// Radius of a disc about Log c mapped into itself (|F(ζ) − Log c| ≤ 0.9r on
/// the sampled boundary), or `None` without an attracting fixed point.
pub fn trapping_radius(p: &FamilyParams) -> Option<f64> {
    let fp = p.fixed_point()?;
    if (p.ell_f64() - p.c()).norm() >= 1.0 {
        return None;
    }
    let mut r = 0.5;
    while r > 1e-3 {
        let ok = (0..256).all(|j| {
            let theta = TAU * j as f64 / 256.0;
            (p.f(fp + Complex64::from_polar(r, theta)) - fp).norm() <= 0.9 * r
        });
        if ok {
            return Some(r);
        }
        r *= 0.8;
    }
    None
}

/// Discretized 𝓛_t on a grid, with the branch geometry stored once so that
/// the matrix can be rebuilt for any t.
pub struct GridOperator {
    template: GridFunction,
    active: Vec<bool>,
    /// Per active row: (stencil index, interpolation weight × quadrature
    /// weight, log|f'|) for every child.
    rows: Vec<Vec<(u32, f64, f64)>>,
    row_of: Vec<usize>,
}

impl GridOperator {
    pub fn build(p: &FamilyParams, cfg: &GridConfig) -> Result<Self> {
        p.require_theory_regime()?;
        let x_min = cfg.x_min.unwrap_or(-2.0 * p.ell_f64());
        let template = GridFunction::new(x_min, cfg.m, cfg.nx, cfg.ny)?;
        let hole = trapping_radius(p).zip(p.fixed_point().map(project));
        let nodes: Vec<CylinderPoint> = (0..cfg.nx)
            .flat_map(|ix| (0..cfg.ny).map(move |iy| (ix, iy)))
            .map(|(ix, iy)| template.node(ix, iy))
            .collect();
        let active: Vec<bool> = nodes
            .iter()
            .map(|q| hole.map_or(true, |(r, c)| q.dist(&c) >= r))
            .collect();
        // Geometry does not depend on t: the tail nodes are fixed in log s.
        let budget = TruncationBudget::geometry_only(
            p,
            cfg.window,
            TailRule::Composite {
                panel: cfg.panel,
                re_cutoff: cfg.m,
            },
        );
        let rows: Vec<Result<Vec<(u32, f64, f64)>>> = nodes
            .par_iter()
            .zip(active.par_iter())
            .filter(|(_, &a)| a)
            .map(|(q, _)| {
                let mut kids = Vec::new();
                children_into(*q, p, &budget, &cfg.solver, &mut kids)?;
                let mut row = Vec::with_capacity(4 * kids.len());
                for c in kids {
                    if let Some(st) = template.stencil(project(c.z)) {
                        for (i, w) in st {
                            if w != 0.0 {
                                row.push((i as u32, w * c.quad, c.log_deriv));
                            }
                        }
                    }
                }
                Ok(row)
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let mut row_of = vec![usize::MAX; nodes.len()];
        let mut next = 0;
        for (i, &a) in active.iter().enumerate() {
            if a {
                row_of[i] = next;
                next += 1;
            }
        }
        Ok(GridOperator {
            template,
            active,
            rows,
            row_of,
        })
    }

    fn matrix(&self, t: f64) -> Vec<Vec<(u32, f64)>> {
        self.rows
            .par_iter()
            .map(|row| row.iter().map(|&(i, w, ld)| (i, w * (-t * ld).exp())).collect())
            .collect()
    }

    /// Power iteration for the Perron pair at `t`.
    pub fn eigen(&self, t: f64, iters: usize, tol: f64) -> Result<EigenPair> {
        if t.is_nan() || t <= 1.0 {
            return Err(Error::SeriesDivergence { t });
        }
        let a = self.matrix(t);
        let n = self.active.len();
        let mut g: Vec<f64> = self.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        let mut alpha = f64::NAN;
        let mut residual = f64::INFINITY;
        let mut done = 0;
        for it in 1..=iters.max(1) {
            let mut next = vec![0.0; n];
            let vals: Vec<f64> = a
                .par_iter()
                .map(|row| row.iter().map(|&(i, w)| w * g[i as usize]).collect::<KahanSum>().total())
                .collect();
            for (idx, &r) in self.row_of.iter().enumerate() {
                if r != usize::MAX {
                    next[idx] = vals[r];
                }
            }
            let old: KahanSum = g.iter().copied().collect();
            let new: KahanSum = next.iter().copied().collect();
            alpha = new.total() / old.total();
            let sup = next.iter().copied().fold(0.0, f64::max);
            if !(sup > 0.0 && sup.is_finite()) {
                return Err(Error::InvalidParams(format!("power iteration collapsed at t = {t}")));
            }
            let gsup = g.iter().copied().fold(0.0, f64::max);
            residual = next
                .iter()
                .zip(&g)
                .map(|(x, y)| (x / alpha - y).abs())
                .fold(0.0, f64::max)
                / gsup;
            for x in &mut next {
                *x /= sup;
            }
            g = next;
            done = it;
            if residual < tol {
                break;
            }
        }
        let mut psi = self.template.clone();
        psi.values = g;
        let pair = EigenPair {
            t,
            alpha,
            psi,
            residual,
            iters: done,
            converged: residual < tol,
        };
        if pair.converged {
            Ok(pair)
        } else {
            Err(Error::NonConvergence { pair: Box::new(pair) })
        }
    }
}

/// log α from power iteration of the gridded operator.
pub fn pressure_power(t: f64, p: &FamilyParams, cfg: &GridConfig) -> Result<EigenPair> {
    GridOperator::build(p, cfg)?.eigen(t, cfg.iters, cfg.tol)
}

impl EigenPair {
    pub fn estimate(&self) -> PressureEstimate {
        PressureEstimate {
            t: self.t,
            value: self.alpha.ln(),
            method: Method::PowerIteration,
            depth_or_iters: self.iters,
            base_point: CylinderPoint::new(self.psi.x_min, 0.0),
            diagnostics: Diagnostics {
                truncation_tol: f64::NAN,
                residual: self.residual,
                cesaro_gap: f64::NAN,
                ratio: self.alpha.ln(),
                extrapolated: self.alpha.ln(),
            },
        }
    }
}

/// A configured pressure estimator. The grid variant keeps its operator
/// geometry so that repeated evaluations only reweight.
pub enum Estimator {
    Tree {
        p: FamilyParams,
        window: u32,
        tail_nodes: usize,
        tree: TreeConfig,
        base: CylinderPoint,
        readout: TreeReadout,
    },
    Grid {
        p: FamilyParams,
        op: Box<GridOperator>,
        cfg: GridConfig,
    },
}

impl Estimator {
    /// Depth-`depth` tree with window K = max(2, ℓ) and two Laguerre nodes
    /// per tail. Smaller windows put the strongest branches of ℓ ≥ 3 into
    /// the tails, where two nodes are far too coarse.
    pub fn tree(p: &FamilyParams, depth: usize, base: CylinderPoint) -> Result<Self> {
        p.require_theory_regime()?;
        Ok(Estimator::Tree {
            p: *p,
            window: p.ell().max(2),
            tail_nodes: 2,
            tree: TreeConfig {
                depth,
                ..TreeConfig::default()
            },
            base,
            readout: TreeReadout::Cesaro,
        })
    }

    /// Switches a tree estimator's reported value; no effect on the grid.
    pub fn with_readout(mut self, r: TreeReadout) -> Self {
        if let Estimator::Tree { readout, .. } = &mut self {
            *readout = r;
        }
        self
    }

    pub fn grid(p: &FamilyParams, cfg: GridConfig) -> Result<Self> {
        let op = GridOperator::build(p, &cfg)?;
        Ok(Estimator::Grid {
            p: *p,
            op: Box::new(op),
            cfg,
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Estimator::Tree { .. } => Method::PreimageTree,
            Estimator::Grid { .. } => Method::PowerIteration,
        }
    }

    pub fn params(&self) -> &FamilyParams {
        match self {
            Estimator::Tree { p, .. } | Estimator::Grid { p, .. } => p,
        }
    }

    pub fn estimate(&self, t: f64) -> Result<PressureEstimate> {
        match self {
            Estimator::Tree {
                p,
                window,
                tail_nodes,
                tree,
                base,
                readout,
            } => {
                let budget = TruncationBudget::new(t, p, *window, TailRule::Laguerre(*tail_nodes))?;
                let mut e = pressure_tree(*base, p, &budget, tree)?;
                if *readout == TreeReadout::Extrapolated {
                    e.value = e.diagnostics.extrapolated;
                }
                Ok(e)
            }
            Estimator::Grid { op, cfg, .. } => op.eigen(t, cfg.iters, cfg.tol).map(|e| e.estimate()),
        }
    }
}

/// One row of a pressure curve; failures are kept in place.
#[derive(Debug)]
pub struct CurvePoint {
    pub t: f64,
    pub estimate: Result<PressureEstimate>,
}

#[derive(Debug)]
pub struct PressureCurve {
    pub method: Method,
    pub points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: &str = "t,pressure,method,depth_or_iters,tol,residual";

/// P(t) at every t of the grid, each computed independently.
pub fn pressure_curve(est: &Estimator, t_grid: &[f64]) -> PressureCurve {
    PressureCurve {
        method: est.method(),
        points: t_grid
            .iter()
            .map(|&t| CurvePoint {
                t,
                estimate: est.estimate(t),
            })
            .collect(),
    }
}

impl PressureCurve {
    /// CSV body (header line plus one row per t) with `%.12e` numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for pt in &self.points {
            out.push_str(&match &pt.estimate {
                Ok(e) => csv_row(e),
                Err(_) => format!("{},nan,{},0,nan,nan", sci(pt.t), self.method),
            });
            out.push('\n');
        }
        out
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|p| p.estimate.as_ref().ok().map(|e| e.value))
            .collect()
    }
}

pub fn csv_row(e: &PressureEstimate) -> String {
    format!(
        "{},{},{},{},{},{}",
        sci(e.t),
        sci(e.value),
        e.method,
        e.depth_or_iters,
        sci(e.diagnostics.truncation_tol),
        sci(e.diagnostics.residual)
    )
}

/// C-style `%.12e`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Bracketing settings for [`bowen_dimension`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenConfig {
    pub tol_t: f64,
    /// Left end, expected to have positive pressure.
    pub t_lo: f64,
    /// First right end; doubled until the pressure is negative.
    pub t_hi: f64,
    pub t_max: f64,
}

impl Default for BowenConfig {
    fn default() -> Self {
        BowenConfig {
            tol_t: 1e-3,
            t_lo: 1.1,
            t_hi: 2.0,
            t_max: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub t_star: f64,
    pub lo: f64,
    pub hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Every (t, P(t)) evaluated, sorted by t.
    pub samples: Vec<(f64, f64)>,
    pub method: Method,
}

impl DimensionEstimate {
    pub fn bracket(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn in_unit_interval(&self) -> bool {
        self.t_star > 1.0 && self.t_star < 2.0
    }

    /// Strictly decreasing over the sampled t values.
    pub fn monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// The zero of t ↦ P(t) by bisection.
pub fn bowen_dimension(est: &Estimator, cfg: &BowenConfig) -> Result<DimensionEstimate> {
    est.params().require_theory_regime()?;
    if !(cfg.tol_t > 0.0 && cfg.t_lo > 1.0 && cfg.t_hi > cfg.t_lo) {
        return Err(Error::InvalidParams(format!("bad bracketing config {cfg:?}")));
    }
    let mut samples = Vec::new();
    let mut eval = |t: f64| -> Result<f64> {
        let v = est.estimate(t)?.value;
        samples.push((t, v));
        Ok(v)
    };

    let mut lo = cfg.t_lo;
    let mut p_lo = eval(lo)?;
    let mut shrink = 0;
    while p_lo <= 0.0 {
        shrink += 1;
        if shrink > 3 {
            return Err(Error::NoSignChange { t_max: cfg.t_lo });
        }
        lo = 1.0 + 0.5 * (lo - 1.0);
        p_lo = eval(lo)?;
    }
    let mut hi = cfg.t_hi;
    let mut p_hi = eval(hi)?;
    while p_hi >= 0.0 {
        hi *= 2.0;
        if hi > cfg.t_max {
            return Err(Error::NoSignChange { t_max: cfg.t_max });
        }
        p_hi = eval(hi)?;
    }
    while hi - lo > cfg.tol_t {
        let mid = 0.5 * (lo + hi);
        let pm = eval(mid)?;
        if pm > 0.0 {
            lo = mid;
            p_lo = pm;
        } else {
            hi = mid;
            p_hi = pm;
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DimensionEstimate {
        t_star: 0.5 * (lo + hi),
        lo,
        hi,
        p_lo,
        p_hi,
        samples,
        method: est.method(),
    })
}
