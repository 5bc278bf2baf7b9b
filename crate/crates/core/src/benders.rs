//! Benders decomposition of the joint association and power-control problem.
//!
//! For a fixed association the minimum-energy power allocation is a linear
//! program. Its dual yields cuts `h(X) <= eta` (extreme points) and `h(X) <= 0`
//! (extreme rays) for a master problem over binary associations, which is solved
//! exactly by depth-first branch and bound.

use std::fmt;

use log::debug;

use crate::baselines::{min_power_for, PowerSolution};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpResult, RowSense, Sense};
use crate::model::{
    objective, relaxed_delay_costs, relaxed_serving_times, requested_threshold, Association,
    CachePlacement, DelayMode, DemandMatrix, Matrix, ObjectiveBreakdown, PowerVector, Scenario,
};

/// Default iteration budget of [`ucwt`].
pub const DEFAULT_MAX_ITERS: usize = 500;
/// Slack accepted on normalized feasibility cuts.
const FEASIBILITY_CUT_TOL: f64 = 1e-9;

/// The big-M constant that switches off SINR rows of unassigned pairs, with the
/// number of interfering SBSs taken as `interferers - 1`.
pub fn varrho_with(scenario: &Scenario, demands: &DemandMatrix, interferers: usize) -> Result<f64> {
    demands.check_shape(scenario)?;
    let pbar = scenario.max_power().iter().fold(0.0f64, |m, &p| m.max(p));
    let gbar = scenario
        .gains()
        .as_slice()
        .iter()
        .fold(0.0f64, |m, &g| m.max(g));
    let spread = interferers.saturating_sub(1) as f64 * pbar * gbar + scenario.noise_power();
    let mut best = f64::INFINITY;
    for i in 0..scenario.user_count() {
        let gamma = requested_threshold(scenario, demands, i);
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "user {i} requests a file with non-positive SINR threshold"
            )));
        }
        best = best.min(1.0 / (gamma * spread));
    }
    Ok(best)
}

pub fn varrho(scenario: &Scenario, demands: &DemandMatrix) -> Result<f64> {
    varrho_with(scenario, demands, scenario.sbs_count())
}

fn check_binary(scenario: &Scenario, x: &Matrix) -> Result<()> {
    if x.rows() != scenario.user_count() || x.cols() != scenario.sbs_count() {
        return Err(Error::InvalidInput(format!(
            "association matrix is {}x{}, expected {}x{}",
            x.rows(),
            x.cols(),
            scenario.user_count(),
            scenario.sbs_count()
        )));
    }
    if let Some(v) = x.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput(format!(
            "association entry {v} is not binary"
        )));
    }
    Ok(())
}

/// The dual of the minimum-energy subproblem at `x` (which may be all zero).
/// Variables are `mu_0..mu_B` followed by `nu_ij` in row-major order.
///
/// `max -sum_j Pmax_j mu_j + sum_ij (varrho^-1 (x_ij - 1) + sigma^2 gamma_i) nu_ij`
/// subject to, for every SBS `l`,
/// `-mu_l + sum_i g_il nu_il - sum_i sum_{j != l} gamma_i g_il nu_ij <= T_l`.
pub fn build_subproblem_dual(
    scenario: &Scenario,
    demands: &DemandMatrix,
    x: &Matrix,
    varrho: f64,
) -> Result<LinearProgram> {
    check_binary(scenario, x)?;
    demands.check_shape(scenario)?;
    let pairs: Vec<(usize, usize)> = (0..scenario.user_count())
        .flat_map(|i| (0..scenario.sbs_count()).map(move |j| (i, j)))
        .collect();
    Ok(dual_lp(scenario, demands, x, varrho, &pairs))
}

/// Dual LP restricted to the `nu` of the listed pairs (the others fixed at zero).
fn dual_lp(
    scenario: &Scenario,
    demands: &DemandMatrix,
    x: &Matrix,
    varrho: f64,
    pairs: &[(usize, usize)],
) -> LinearProgram {
    let b = scenario.sbs_count();
    let sigma2 = scenario.noise_power();
    let t = relaxed_serving_times(scenario, demands);
    let mut c: Vec<f64> = scenario.max_power().iter().map(|p| -p).collect();
    for &(i, j) in pairs {
        let gamma = requested_threshold(scenario, demands, i);
        c.push((x[(i, j)] - 1.0) / varrho + sigma2 * gamma);
    }
    let mut lp = LinearProgram::new(Sense::Max, c);
    for l in 0..b {
        let mut row = vec![0.0; b + pairs.len()];
        row[l] = -1.0;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let g = scenario.gain(i, l);
            row[b + k] = if j == l {
                g
            } else {
                -requested_threshold(scenario, demands, i) * g
            };
        }
        lp.add_row(row, RowSense::Le, t[l]);
    }
    lp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    ExtremePoint,
    ExtremeRay,
}

/// A dual solution `(mu, nu)` of the subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub mu: Vec<f64>,
    pub nu: Matrix,
    pub kind: DualKind,
}

impl DualPoint {
    /// Largest violation of the dual constraints (homogeneous ones for rays).
    pub fn max_violation(&self, scenario: &Scenario, demands: &DemandMatrix) -> f64 {
        let rhs = match self.kind {
            DualKind::ExtremePoint => relaxed_serving_times(scenario, demands),
            DualKind::ExtremeRay => vec![0.0; scenario.sbs_count()],
        };
        let mut worst = 0.0f64;
        for (l, r) in rhs.iter().enumerate() {
            worst = worst.max(dual_row_lhs(scenario, demands, &self.mu, &self.nu, l) - r);
        }
        for v in self.mu.iter().chain(self.nu.as_slice()) {
            worst = worst.max(-v);
        }
        worst
    }
}

fn dual_row_lhs(
    scenario: &Scenario,
    demands: &DemandMatrix,
    mu: &[f64],
    nu: &Matrix,
    l: usize,
) -> f64 {
    let mut lhs = -mu[l];
    for i in 0..scenario.user_count() {
        let g = scenario.gain(i, l);
        let gamma = requested_threshold(scenario, demands, i);
        for j in 0..scenario.sbs_count() {
            let v = nu[(i, j)];
            if v != 0.0 {
                lhs += if j == l { g * v } else { -gamma * g * v };
            }
        }
    }
    lhs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// The affine function `h(X) = constant + sum_ij coef_ij x_ij` of one dual solution.
///
/// Stored as `base + sum_ij coef_ij (x_ij - 1)` over the nonzero coefficients,
/// which evaluates exactly at the association that generated it even when the
/// coefficients dwarf the energy scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub kind: CutKind,
    base: f64,
    terms: Vec<(usize, usize, f64)>,
    shape: (usize, usize),
}

impl Cut {
    pub fn from_dual(
        scenario: &Scenario,
        demands: &DemandMatrix,
        varrho: f64,
        dual: &DualPoint,
    ) -> Self {
        let sigma2 = scenario.noise_power();
        let mut base: f64 = -scenario
            .max_power()
            .iter()
            .zip(&dual.mu)
            .map(|(p, m)| p * m)
            .sum::<f64>();
        let mut terms = Vec::new();
        for i in 0..scenario.user_count() {
            let gamma = requested_threshold(scenario, demands, i);
            for j in 0..scenario.sbs_count() {
                let v = dual.nu[(i, j)];
                if v != 0.0 {
                    base += sigma2 * gamma * v;
                    terms.push((i, j, v / varrho));
                }
            }
        }
        let kind = match dual.kind {
            DualKind::ExtremePoint => CutKind::Optimality,
            DualKind::ExtremeRay => CutKind::Feasibility,
        };
        Self {
            kind,
            base,
            terms,
            shape: (scenario.user_count(), scenario.sbs_count()),
        }
    }

    /// `h` at a (possibly fractional) association matrix.
    pub fn evaluate(&self, x: &Matrix) -> f64 {
        let mut h = self.base;
        for &(i, j, c) in &self.terms {
            h += c * (x[(i, j)] - 1.0);
        }
        h
    }

    pub fn evaluate_assoc(&self, assoc: &Association) -> f64 {
        let mut h = self.base;
        for &(i, j, c) in &self.terms {
            if assoc.serving(i) != j {
                h -= c;
            }
        }
        h
    }

    /// Constant term of `h`.
    pub fn constant(&self) -> f64 {
        self.base - self.terms.iter().map(|t| t.2).sum::<f64>()
    }

    /// Coefficient matrix of `h`.
    pub fn coefficients(&self) -> Matrix {
        let mut m = Matrix::zeros(self.shape.0, self.shape.1);
        for &(i, j, c) in &self.terms {
            m[(i, j)] = c;
        }
        m
    }
}

/// Outcome of one subproblem solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemOutcome {
    pub dual: DualPoint,
    /// Minimum energy at the association, `None` when no feasible power exists.
    pub value: Option<f64>,
}

/// Solves the dual subproblem at `x`.
///
/// Pairs with `x_ij = 0` have slack SINR rows at every feasible power vector, so
/// their `nu_ij` vanish at the optimum; the LP is solved over the assigned pairs
/// only and padded with zeros, which is an optimal vertex (or ray) of the full
/// dual. The solution is then projected onto the dual-feasible set so that the
/// resulting cut is valid despite round-off.
pub fn solve_subproblem(
    scenario: &Scenario,
    demands: &DemandMatrix,
    x: &Matrix,
    varrho: f64,
) -> Result<SubproblemOutcome> {
    check_binary(scenario, x)?;
    demands.check_shape(scenario)?;
    let b = scenario.sbs_count();
    let pairs: Vec<(usize, usize)> = (0..scenario.user_count())
        .flat_map(|i| (0..b).map(move |j| (i, j)))
        .filter(|&(i, j)| x[(i, j)] == 1.0)
        .collect();
    let lp = dual_lp(scenario, demands, x, varrho, &pairs);
    let unpack = |v: &[f64]| {
        let mu: Vec<f64> = v[..b].iter().map(|m| m.max(0.0)).collect();
        let mut nu = Matrix::zeros(scenario.user_count(), b);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            nu[(i, j)] = v[b + k].max(0.0);
        }
        (mu, nu)
    };
    match lp::solve(&lp)? {
        LpResult::Optimal(sol) => {
            let (mu, nu) = unpack(&sol.x);
            let mut dual = DualPoint {
                mu,
                nu,
                kind: DualKind::ExtremePoint,
            };
            repair(scenario, demands, &mut dual);
            let value = Cut::from_dual(scenario, demands, varrho, &dual).evaluate(x);
            Ok(SubproblemOutcome {
                dual,
                value: Some(value),
            })
        }
        LpResult::Unbounded { ray, .. } => {
            let (mu, nu) = unpack(&ray);
            let mut dual = DualPoint {
                mu,
                nu,
                kind: DualKind::ExtremeRay,
            };
            repair(scenario, demands, &mut dual);
            let h = Cut::from_dual(scenario, demands, varrho, &dual).evaluate(x);
            if !(h > 0.0) {
                return Err(Error::InvalidInput(
                    "subproblem ray lost its improving direction after repair".into(),
                ));
            }
            dual.mu.iter_mut().for_each(|m| *m /= h);
            let mut nu = dual.nu.clone();
            for i in 0..nu.rows() {
                for j in 0..nu.cols() {
                    nu[(i, j)] /= h;
                }
            }
            dual.nu = nu;
            Ok(SubproblemOutcome { dual, value: None })
        }
        LpResult::Infeasible(_) => Err(Error::InvalidInput(
            "dual subproblem reported infeasible although the origin is feasible".into(),
        )),
    }
}

/// Raises `mu_l` until every dual row holds exactly in floating point.
fn repair(scenario: &Scenario, demands: &DemandMatrix, dual: &mut DualPoint) {
    let rhs = match dual.kind {
        DualKind::ExtremePoint => relaxed_serving_times(scenario, demands),
        DualKind::ExtremeRay => vec![0.0; scenario.sbs_count()],
    };
    for l in 0..scenario.sbs_count() {
        for _ in 0..4 {
            let excess = dual_row_lhs(scenario, demands, &dual.mu, &dual.nu, l) - rhs[l];
            if excess <= 0.0 {
                break;
            }
            dual.mu[l] += excess * (1.0 + 1e-12);
        }
    }
}

/// Minimum `eta` admitted by the optimality cuts at `x` (never below zero).
pub fn min_eta(cuts: &[Cut], x: &Matrix) -> f64 {
    cuts.iter()
        .filter(|c| c.kind == CutKind::Optimality)
        .map(|c| c.evaluate(x))
        .fold(0.0, f64::max)
}

/// Whether `x` satisfies every feasibility cut.
pub fn satisfies_feasibility_cuts(cuts: &[Cut], x: &Matrix) -> bool {
    cuts.iter()
        .filter(|c| c.kind == CutKind::Feasibility)
        .all(|c| c.evaluate(x) <= FEASIBILITY_CUT_TOL)
}

/// `sum_ij c_ij x_ij` in row-major order.
pub fn delay_term(costs: &Matrix, x: &Matrix) -> f64 {
    costs
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(c, x)| c * x)
        .sum()
}

/// The penalized relaxed master objective
/// `alpha eta + (1 - alpha) sum c x + lambda sum (x - x^2)`.
#[allow(clippy::too_many_arguments)]
pub fn rmp_penalty_value(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    alpha: f64,
    lambda: f64,
    eta: f64,
    x: &Matrix,
) -> f64 {
    let costs = relaxed_delay_costs(scenario, demands, placement);
    let penalty: f64 = x.as_slice().iter().map(|v| v - v * v).sum();
    alpha * eta + (1.0 - alpha) * delay_term(&costs, x) + lambda * penalty
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub assoc: Association,
    pub eta: f64,
    /// Master optimum `N`.
    pub value: f64,
    pub nodes: usize,
}

struct CutBounds {
    base: f64,
    kind: CutKind,
    /// `t[i][j]`: contribution of assigning user `i` to SBS `j`.
    t: Vec<Vec<f64>>,
    /// Sum over users `>= i` of their smallest contribution.
    suffix_min: Vec<f64>,
}

impl CutBounds {
    fn new(cut: &Cut, u: usize, b: usize) -> Self {
        let mut t = vec![vec![0.0; b]; u];
        for &(i, j, c) in &cut.terms {
            for (l, v) in t[i].iter_mut().enumerate() {
                if l != j {
                    *v -= c;
                }
            }
        }
        let mut suffix_min = vec![0.0; u + 1];
        for i in (0..u).rev() {
            let m = t[i].iter().fold(f64::INFINITY, |m, &v| m.min(v));
            suffix_min[i] = suffix_min[i + 1] + m;
        }
        Self {
            base: cut.base,
            kind: cut.kind,
            t,
            suffix_min,
        }
    }
}

struct Master<'a> {
    u: usize,
    b: usize,
    alpha: f64,
    costs: &'a Matrix,
    cuts: &'a [Cut],
    bounds: Vec<CutBounds>,
    delay_suffix: Vec<f64>,
    partial: Vec<f64>,
    serving: Vec<usize>,
    best: Option<(f64, f64, Vec<usize>)>,
    nodes: usize,
}

impl Master<'_> {
    fn lower_bound(&self, depth: usize, fixed_delay: f64) -> Option<f64> {
        let mut eta: f64 = 0.0;
        for (k, cb) in self.bounds.iter().enumerate() {
            let least = cb.base + self.partial[k] + cb.suffix_min[depth];
            match cb.kind {
                CutKind::Optimality => eta = eta.max(least),
                CutKind::Feasibility => {
                    if least > FEASIBILITY_CUT_TOL {
                        return None;
                    }
                }
            }
        }
        Some(self.alpha * eta + (1.0 - self.alpha) * (fixed_delay + self.delay_suffix[depth]))
    }

    fn prune(&self, bound: f64) -> bool {
        match &self.best {
            Some((v, _, _)) => bound > v + 1e-12 * v.abs(),
            None => false,
        }
    }

    fn leaf(&mut self) {
        let assoc = Association::new(self.serving.clone(), self.b).expect("indices in range");
        let x = assoc.to_matrix();
        if !satisfies_feasibility_cuts(self.cuts, &x) {
            return;
        }
        let eta = min_eta(self.cuts, &x);
        let value = self.alpha * eta + (1.0 - self.alpha) * delay_term(self.costs, &x);
        let better = match &self.best {
            None => true,
            Some((v, _, s)) => value < *v || (value == *v && self.serving < *s),
        };
        if better {
            self.best = Some((value, eta, self.serving.clone()));
        }
    }

    fn dfs(&mut self, depth: usize, fixed_delay: f64) {
        self.nodes += 1;
        if depth == self.u {
            self.leaf();
            return;
        }
        let mut children: Vec<(f64, usize)> = Vec::with_capacity(self.b);
        for j in 0..self.b {
            for (k, cb) in self.bounds.iter().enumerate() {
                self.partial[k] += cb.t[depth][j];
            }
            let delay = fixed_delay + self.costs[(depth, j)];
            if let Some(bound) = self.lower_bound(depth + 1, delay) {
                children.push((bound, j));
            }
            for (k, cb) in self.bounds.iter().enumerate() {
                self.partial[k] -= cb.t[depth][j];
            }
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (bound, j) in children {
            if self.prune(bound) {
                break;
            }
            for (k, cb) in self.bounds.iter().enumerate() {
                self.partial[k] += cb.t[depth][j];
            }
            self.serving[depth] = j;
            self.dfs(depth + 1, fixed_delay + self.costs[(depth, j)]);
            for (k, cb) in self.bounds.iter().enumerate() {
                self.partial[k] -= cb.t[depth][j];
            }
        }
    }
}

/// Exact master: minimizes `alpha eta + (1 - alpha) sum c_ij x_ij` over binary
/// associations subject to the cuts, with `eta >= 0`. Children are explored best
/// bound first; among equal optima the lexicographically smallest association wins.
pub fn solve_master(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    cuts: &[Cut],
    alpha: f64,
) -> Result<MasterSolution> {
    demands.check_shape(scenario)?;
    placement.check_shape(scenario)?;
    check_alpha(alpha)?;
    let (u, b) = (scenario.user_count(), scenario.sbs_count());
    let costs = relaxed_delay_costs(scenario, demands, placement);
    let mut delay_suffix = vec![0.0; u + 1];
    for i in (0..u).rev() {
        let m = costs.row(i).iter().fold(f64::INFINITY, |m, &v| m.min(v));
        delay_suffix[i] = delay_suffix[i + 1] + m;
    }
    let mut master = Master {
        u,
        b,
        alpha,
        costs: &costs,
        cuts,
        bounds: cuts.iter().map(|c| CutBounds::new(c, u, b)).collect(),
        delay_suffix,
        partial: vec![0.0; cuts.len()],
        serving: vec![0; u],
        best: None,
        nodes: 0,
    };
    master.dfs(0, 0.0);
    let nodes = master.nodes;
    let (value, eta, serving) = master.best.ok_or(Error::NoFeasibleAssociation)?;
    Ok(MasterSolution {
        assoc: Association::new(serving, b)?,
        eta,
        value,
        nodes,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "alpha = {alpha} outside [0, 1]"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    Bounded,
    Unbounded,
}

impl fmt::Display for SubproblemStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubproblemStatus::Bounded => "bounded",
            SubproblemStatus::Unbounded => "unbounded",
        })
    }
}

/// One iteration: subproblem at the previous master solution, then a new master solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub psi_lower: f64,
    pub psi_upper: f64,
    pub status: SubproblemStatus,
    /// Subproblem optimum `M`; `None` when unbounded.
    pub m: Option<f64>,
    /// Master optimum `N`.
    pub n: f64,
    /// Iteration whose association attains the upper bound.
    pub omega: Option<usize>,
}

impl IterationRecord {
    pub fn gap(&self) -> f64 {
        self.psi_upper - self.psi_lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BendersTrace {
    pub records: Vec<IterationRecord>,
    pub cuts: Vec<Cut>,
    pub epsilon: f64,
    pub converged: bool,
}

impl BendersTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_gap(&self) -> f64 {
        self.records
            .last()
            .map_or(f64::INFINITY, IterationRecord::gap)
    }
}

/// Upper-bound bookkeeping: running minimum of `alpha M + (1 - alpha) delay`
/// over evaluated associations, skipping those without feasible power.
#[derive(Debug, Clone, Default)]
pub struct UpperBound {
    pub value: Option<f64>,
    pub omega: Option<usize>,
}

impl UpperBound {
    pub fn update(&mut self, r: usize, m: Option<f64>, delay: f64, alpha: f64) -> f64 {
        if let Some(m) = m {
            let candidate = alpha * m + (1.0 - alpha) * delay;
            if self.value.is_none_or(|v| candidate < v) {
                self.value = Some(candidate);
                self.omega = Some(r);
            }
        }
        self.current()
    }

    pub fn current(&self) -> f64 {
        self.value.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcwtOptions {
    /// Absolute gap tolerance; `None` uses `1e-6 (1 + |first finite upper bound|)`.
    pub epsilon: Option<f64>,
    pub max_iters: usize,
    /// Interfering-SBS count used for `varrho`; `None` means the SBS count.
    pub interferers: Option<usize>,
}

impl Default for UcwtOptions {
    fn default() -> Self {
        Self {
            epsilon: None,
            max_iters: DEFAULT_MAX_ITERS,
            interferers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcwtResult {
    pub assoc: Association,
    pub power: PowerVector,
    /// Energy and relaxed delay at the returned association and powers.
    pub objective: ObjectiveBreakdown,
    /// The same point evaluated with power-dependent transmission rates.
    pub exact_objective: ObjectiveBreakdown,
    pub trace: BendersTrace,
}

impl UcwtResult {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }
}

/// Benders iterations from the all-zero association until the bound gap drops
/// to `epsilon`. Returns the incumbent and its minimum-energy powers even when
/// the iteration budget runs out (`converged() == false`).
pub fn ucwt(
    scenario: &Scenario,
    demands: &DemandMatrix,
    placement: &CachePlacement,
    alpha: f64,
    opts: &UcwtOptions,
) -> Result<UcwtResult> {
    check_alpha(alpha)?;
    demands.check_shape(scenario)?;
    placement.check_shape(scenario)?;
    let varrho = varrho_with(
        scenario,
        demands,
        opts.interferers.unwrap_or(scenario.sbs_count()),
    )?;
    let costs = relaxed_delay_costs(scenario, demands, placement);

    let mut x = Matrix::zeros(scenario.user_count(), scenario.sbs_count());
    let mut current: Option<Association> = None;
    let mut incumbent: Option<Association> = None;
    let mut cuts: Vec<Cut> = Vec::new();
    let mut records = Vec::new();
    let mut upper = UpperBound::default();
    let mut lower = f64::NEG_INFINITY;
    let mut epsilon = opts.epsilon;
    let mut converged = false;

    for t in 1..=opts.max_iters {
        let sub = solve_subproblem(scenario, demands, &x, varrho)?;
        let status = if sub.value.is_some() {
            SubproblemStatus::Bounded
        } else {
            SubproblemStatus::Unbounded
        };
        if let Some(assoc) = &current {
            let before = upper.omega;
            upper.update(t - 1, sub.value, delay_term(&costs, &x), alpha);
            if upper.omega != before {
                incumbent = Some(assoc.clone());
            }
        }
        let cut = Cut::from_dual(scenario, demands, varrho, &sub.dual);
        if !cuts.contains(&cut) {
            cuts.push(cut);
        }
        if epsilon.is_none() && upper.value.is_some() {
            epsilon = Some(1e-6 * (1.0 + upper.current().abs()));
        }

        let master = solve_master(scenario, demands, placement, &cuts, alpha)?;
        lower = lower.max(master.value);
        let record = IterationRecord {
            t,
            psi_lower: lower,
            psi_upper: upper.current(),
            status,
            m: sub.value,
            n: master.value,
            omega: upper.omega,
        };
        debug!(
            "iteration {t}: lower {lower:.9e} upper {:.9e} nodes {}",
            record.psi_upper, master.nodes
        );
        let gap = record.gap();
        records.push(record);
        x = master.assoc.to_matrix();
        current = Some(master.assoc);
        if let Some(eps) = epsilon {
            if gap <= eps {
                converged = true;
                break;
            }
        }
    }

    let assoc = incumbent.ok_or(Error::NoIncumbent {
        iterations: records.len(),
    })?;
    let power = match min_power_for(scenario, demands, &assoc)? {
        PowerSolution::Feasible { power, .. } => power,
        PowerSolution::Infeasible => return Err(Error::NoFeasibleAssociation),
    };
    let relaxed = objective(
        scenario,
        demands,
        placement,
        &assoc,
        &power,
        DelayMode::Relaxed,
        alpha,
    )?;
    let exact_objective = objective(
        scenario,
        demands,
        placement,
        &assoc,
        &power,
        DelayMode::Exact(&power),
        alpha,
    )?;
    Ok(UcwtResult {
        assoc,
        power,
        objective: relaxed,
        exact_objective,
        trace: BendersTrace {
            records,
            cuts,
            epsilon: epsilon.unwrap_or(f64::NAN),
            converged,
        },
    })
}
