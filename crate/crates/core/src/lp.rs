//! Dense two-phase simplex with dual values, extreme rays and Farkas certificates.
//!
//! Problems are brought to the standard form `min c'x, A x (<=,=,>=) b, x >= 0` by
//! splitting free variables and turning finite upper bounds into rows. Rows and
//! columns are equilibrated by powers of two before pivoting so that the
//! tolerances below act on numbers of order one.

use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl RowSense {
    fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("variable {var} has unsupported bounds [{lower}, {upper}]")]
    InvalidBound { var: usize, lower: f64, upper: f64 },
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
}

/// A linear program with variables bounded below by `0` or `-inf` and above by a
/// finite value or `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub row_senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// Nonnegative, unbounded-above variables and no rows.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            rows: Vec::new(),
            row_senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(coeffs);
        self.row_senses.push(sense);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        let m = self.rows.len();
        if self.row_senses.len() != m || self.rhs.len() != m {
            return Err(LpError::DimensionMismatch(format!(
                "{m} rows, {} senses, {} right-hand sides",
                self.row_senses.len(),
                self.rhs.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{n} variables, {} lower and {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some((r, row)) = self.rows.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(LpError::DimensionMismatch(format!(
                "row {r} has {} coefficients, expected {n}",
                row.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite(format!("row {r}")));
            }
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(LpError::NonFinite("right-hand side".into()));
        }
        for (var, (&lower, &upper)) in self.lower.iter().zip(&self.upper).enumerate() {
            let lower_ok = lower == 0.0 || lower == f64::NEG_INFINITY;
            let upper_ok = upper == f64::INFINITY || (upper.is_finite() && upper >= lower);
            if !lower_ok || !upper_ok {
                return Err(LpError::InvalidBound { var, lower, upper });
            }
        }
        Ok(())
    }

    /// Plain-text dump in a fixed order, meant for cross-checking with other solvers.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Min => "min",
            Sense::Max => "max",
        };
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "sense {sense}");
        let _ = writeln!(out, "vars {}", self.num_vars());
        let _ = writeln!(out, "rows {}", self.num_rows());
        let _ = writeln!(out, "c {}", join(&self.objective));
        for ((row, sense), b) in self.rows.iter().zip(&self.row_senses).zip(&self.rhs) {
            let _ = writeln!(out, "a {} {} {b:e}", join(row), sense.symbol());
        }
        let _ = writeln!(out, "lower {}", join(&self.lower));
        let _ = writeln!(out, "upper {}", join(&self.upper));
        out
    }
}

impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Phase-one residual accepted as feasible (scaled problem).
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for optimality (scaled problem).
    pub optimality_tol: f64,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub degenerate_streak: usize,
    /// `None` picks a limit from the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            degenerate_streak: 50,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `d objective / d rhs_r` for every row.
    pub row_duals: Vec<f64>,
    /// `d objective / d upper_j`; zero for variables without a finite upper bound.
    pub upper_duals: Vec<f64>,
}

/// Proof of infeasibility.
///
/// With `y_r >= 0` on `<=` rows, `y_r <= 0` on `>=` rows, free on `=` rows and
/// `z >= 0` on finite upper bounds, the combination `v = A'y + z` satisfies
/// `v_j >= 0` for nonnegative variables, `v_j = 0` for free ones, and
/// `b'y + u'z < 0`, which no feasible `x` can meet.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub row_multipliers: Vec<f64>,
    pub upper_multipliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal(LpSolution),
    /// `point` is feasible and `point + t * ray` stays feasible for all `t >= 0`
    /// while strictly improving the objective.
    Unbounded {
        point: Vec<f64>,
        ray: Vec<f64>,
    },
    Infeasible(FarkasCertificate),
}

impl LpResult {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpResult::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpResult, LpError> {
    solve_lp(lp, &LpOptions::default())
}

pub fn solve_lp(lp: &LinearProgram, opts: &LpOptions) -> Result<LpResult, LpError> {
    lp.validate()?;
    let std = StandardForm::build(lp);
    let mut tab = Tableau::new(&std);
    let limit = opts
        .max_iterations
        .unwrap_or(1000 + 50 * (tab.m + tab.ncols));

    let mut iterations = 0;
    if tab.has_artificials() {
        tab.load_objective(&tab.phase1_costs());
        match tab.run(opts, &mut iterations, limit)? {
            Outcome::Optimal => {}
            Outcome::Unbounded(_) => unreachable!("phase one is bounded below by zero"),
        }
        let residual = tab.objective_value();
        if residual > opts.feasibility_tol {
            let y = tab.row_duals(&tab.phase1_costs());
            let farkas: Vec<f64> = y.iter().map(|v| -v).collect();
            return Ok(LpResult::Infeasible(std.certificate(&farkas)));
        }
        tab.drive_out_artificials();
    }
    tab.bar_artificials();
    let costs = tab.phase2_costs(&std);
    tab.load_objective(&costs);
    match tab.run(opts, &mut iterations, limit)? {
        Outcome::Optimal => {
            let xs = tab.primal();
            let y = tab.row_duals(&costs);
            Ok(LpResult::Optimal(std.solution(lp, &xs, &y)))
        }
        Outcome::Unbounded(q) => {
            let point = std.unscale_point(&tab.primal());
            let ray = std.unscale_ray(&tab.ray(q));
            Ok(LpResult::Unbounded { point, ray })
        }
    }
}

/// Round to the nearest power of two so scaling introduces no rounding error.
fn pow2(x: f64) -> f64 {
    if x.is_finite() && x > 0.0 {
        x.log2().round().exp2()
    } else {
        1.0
    }
}

/// Where a standard-form column came from.
#[derive(Debug, Clone, Copy)]
enum ColumnOrigin {
    Plus(usize),
    Minus(usize),
}

struct StandardForm {
    n_orig: usize,
    m_orig: usize,
    columns: Vec<ColumnOrigin>,
    /// Rows `0..m_orig` are the original rows, the rest are upper bounds.
    upper_of_row: Vec<Option<usize>>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    senses: Vec<RowSense>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    cost_scale: f64,
    rhs_scale: f64,
    /// `-1` where a row was negated to make its right-hand side nonnegative.
    flip: Vec<f64>,
    max_sense: bool,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n_orig = lp.num_vars();
        let m_orig = lp.num_rows();
        let sign = if lp.sense == Sense::Max { -1.0 } else { 1.0 };

        let mut columns = Vec::new();
        let mut col_of_plus = vec![0; n_orig];
        for j in 0..n_orig {
            col_of_plus[j] = columns.len();
            columns.push(ColumnOrigin::Plus(j));
            if lp.lower[j] == f64::NEG_INFINITY {
                columns.push(ColumnOrigin::Minus(j));
            }
        }
        let n = columns.len();
        let expand = |coeffs: &dyn Fn(usize) -> f64| -> Vec<f64> {
            columns
                .iter()
                .map(|col| match *col {
                    ColumnOrigin::Plus(j) => coeffs(j),
                    ColumnOrigin::Minus(j) => -coeffs(j),
                })
                .collect()
        };

        let mut a: Vec<Vec<f64>> = lp.rows.iter().map(|row| expand(&|j| row[j])).collect();
        let mut b = lp.rhs.clone();
        let mut senses = lp.row_senses.clone();
        let mut upper_of_row = vec![None; m_orig];
        for j in 0..n_orig {
            if lp.upper[j].is_finite() {
                a.push(expand(&|k| if k == j { 1.0 } else { 0.0 }));
                b.push(lp.upper[j]);
                senses.push(RowSense::Le);
                upper_of_row.push(Some(j));
            }
        }
        let c = expand(&|j| sign * lp.objective[j]);
        let m = a.len();

        // Geometric-mean equilibration.
        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];
        for _ in 0..6 {
            for r in 0..m {
                let (lo, hi) = extremes(a[r].iter().enumerate().map(|(j, v)| v * col_scale[j]));
                if hi > 0.0 {
                    row_scale[r] = pow2(1.0 / (lo * hi).sqrt());
                }
            }
            for j in 0..n {
                let (lo, hi) = extremes((0..m).map(|r| a[r][j] * row_scale[r]));
                if hi > 0.0 {
                    col_scale[j] = pow2(1.0 / (lo * hi).sqrt());
                }
            }
        }
        for r in 0..m {
            for j in 0..n {
                a[r][j] *= row_scale[r] * col_scale[j];
            }
            b[r] *= row_scale[r];
        }
        let mut c: Vec<f64> = c.iter().zip(&col_scale).map(|(c, s)| c * s).collect();
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cost_scale = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rhs_scale = if bmax > 0.0 { pow2(1.0 / bmax) } else { 1.0 };
        for v in &mut c {
            *v *= cost_scale;
        }
        let mut flip = vec![1.0; m];
        for r in 0..m {
            b[r] *= rhs_scale;
            if b[r] < 0.0 {
                flip[r] = -1.0;
                b[r] = -b[r];
                for v in &mut a[r] {
                    *v = -*v;
                }
                senses[r] = match senses[r] {
                    RowSense::Le => RowSense::Ge,
                    RowSense::Ge => RowSense::Le,
                    RowSense::Eq => RowSense::Eq,
                };
            }
        }
        Self {
            n_orig,
            m_orig,
            columns,
            upper_of_row,
            a,
            b,
            c,
            senses,
            row_scale,
            col_scale,
            cost_scale,
            rhs_scale,
            flip,
            max_sense: lp.sense == Sense::Max,
        }
    }

    fn fold_columns(&self, xs: &[f64], scale: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n_orig];
        for (k, col) in self.columns.iter().enumerate() {
            let v = xs[k] * self.col_scale[k] * scale;
            match *col {
                ColumnOrigin::Plus(j) => x[j] += v,
                ColumnOrigin::Minus(j) => x[j] -= v,
            }
        }
        x
    }

    fn unscale_point(&self, xs: &[f64]) -> Vec<f64> {
        self.fold_columns(xs, 1.0 / self.rhs_scale)
    }

    fn unscale_ray(&self, rs: &[f64]) -> Vec<f64> {
        let ray = self.fold_columns(rs, 1.0);
        let norm = ray.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > 0.0 {
            ray.iter().map(|v| v / norm).collect()
        } else {
            ray
        }
    }

    /// Maps multipliers of the scaled, sign-normalized rows back to the original rows.
    fn original_multipliers(&self, y: &[f64], factor: f64) -> (Vec<f64>, Vec<f64>) {
        let mut rows = vec![0.0; self.m_orig];
        let mut upper = vec![0.0; self.n_orig];
        for (r, &v) in y.iter().enumerate() {
            let w = v * self.flip[r] * self.row_scale[r] * factor;
            match self.upper_of_row[r] {
                None => rows[r] = w,
                Some(j) => upper[j] = w,
            }
        }
        (rows, upper)
    }

    fn certificate(&self, farkas: &[f64]) -> FarkasCertificate {
        let (mut rows, mut upper) = self.original_multipliers(farkas, 1.0);
        let norm = rows
            .iter()
            .chain(&upper)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > 0.0 {
            for v in rows.iter_mut().chain(upper.iter_mut()) {
                *v /= norm;
            }
        }
        FarkasCertificate {
            row_multipliers: rows,
            upper_multipliers: upper,
        }
    }

    fn solution(&self, lp: &LinearProgram, xs: &[f64], y: &[f64]) -> LpSolution {
        let mut x = self.unscale_point(xs);
        for (j, v) in x.iter_mut().enumerate() {
            if lp.lower[j] == 0.0 && *v < 0.0 {
                *v = 0.0;
            }
            if *v > lp.upper[j] {
                *v = lp.upper[j];
            }
        }
        let sign = if self.max_sense { -1.0 } else { 1.0 };
        let (row_duals, upper_duals) = self.original_multipliers(y, sign / self.cost_scale);
        let objective = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        LpSolution {
            x,
            objective,
            row_duals,
            upper_duals,
        }
    }
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in values {
        let a = v.abs();
        if a > 0.0 {
            lo = lo.min(a);
            hi = hi.max(a);
        }
    }
    (lo, hi)
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

/// Full tableau `B^-1 [A | b]` with the reduced-cost row stored last.
struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Column holding `+e_r` in the initial tableau (slack or artificial).
    unit_col: Vec<usize>,
    artificial: Vec<bool>,
    barred: Vec<bool>,
}

const PIVOT_TOL: f64 = 1e-9;

impl Tableau {
    fn new(std: &StandardForm) -> Self {
        let m = std.a.len();
        let n = std.c.len();
        let mut extra = 0;
        for s in &std.senses {
            extra += match s {
                RowSense::Le => 1,
                RowSense::Eq => 1,
                RowSense::Ge => 2,
            };
        }
        let ncols = n + extra;
        let w = ncols + 1;
        let mut data = vec![0.0; (m + 1) * w];
        let mut basis = vec![0; m];
        let mut unit_col = vec![0; m];
        let mut artificial = vec![false; ncols];
        let mut next = n;
        for r in 0..m {
            data[r * w..r * w + n].copy_from_slice(&std.a[r]);
            data[r * w + ncols] = std.b[r];
            match std.senses[r] {
                RowSense::Le => {
                    data[r * w + next] = 1.0;
                    basis[r] = next;
                    unit_col[r] = next;
                    next += 1;
                }
                RowSense::Ge => {
                    data[r * w + next] = -1.0;
                    data[r * w + next + 1] = 1.0;
                    artificial[next + 1] = true;
                    basis[r] = next + 1;
                    unit_col[r] = next + 1;
                    next += 2;
                }
                RowSense::Eq => {
                    data[r * w + next] = 1.0;
                    artificial[next] = true;
                    basis[r] = next;
                    unit_col[r] = next;
                    next += 1;
                }
            }
        }
        Self {
            m,
            ncols,
            n_struct: n,
            data,
            basis,
            unit_col,
            artificial,
            barred: vec![false; ncols],
        }
    }

    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.ncols)
    }

    fn has_artificials(&self) -> bool {
        self.artificial.iter().any(|&a| a)
    }

    fn phase1_costs(&self) -> Vec<f64> {
        self.artificial
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect()
    }

    fn phase2_costs(&self, std: &StandardForm) -> Vec<f64> {
        let mut c = vec![0.0; self.ncols];
        c[..self.n_struct].copy_from_slice(&std.c);
        c
    }

    /// Writes `d_j = c_j - c_B' B^-1 A_j` and `-c_B' B^-1 b` into the last row.
    fn load_objective(&mut self, costs: &[f64]) {
        let w = self.width();
        let obj = self.m * w;
        for j in 0..self.ncols {
            self.data[obj + j] = costs[j];
        }
        self.data[obj + self.ncols] = 0.0;
        for r in 0..self.m {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.data[obj + j] -= cb * self.data[r * w + j];
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        -self.at(self.m, self.ncols)
    }

    fn row_duals(&self, costs: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|r| {
                let u = self.unit_col[r];
                costs[u] - self.at(self.m, u)
            })
            .collect()
    }

    fn primal(&self) -> Vec<f64> {
        let mut xs = vec![0.0; self.n_struct];
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.n_struct {
                xs[b] = self.rhs(r).max(0.0);
            }
        }
        xs
    }

    fn ray(&self, q: usize) -> Vec<f64> {
        let mut rs = vec![0.0; self.n_struct];
        if q < self.n_struct {
            rs[q] = 1.0;
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.n_struct {
                rs[b] = -self.at(r, q);
            }
        }
        rs
    }

    fn bar_artificials(&mut self) {
        for j in 0..self.ncols {
            if self.artificial[j] {
                self.barred[j] = true;
            }
        }
    }

    /// Pivots zero-valued basic artificials out wherever a usable entry exists.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.artificial[self.basis[r]] {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..self.ncols {
                if self.artificial[j] {
                    continue;
                }
                let a = self.at(r, j).abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                self.pivot(r, j);
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.data[pr * w + pc];
        for j in 0..w {
            self.data[pr * w + j] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.m {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[pc] = 0.0;
            if r < self.m && row[self.ncols] < 0.0 && row[self.ncols] > -1e-12 {
                row[self.ncols] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    fn run(
        &mut self,
        opts: &LpOptions,
        iterations: &mut usize,
        limit: usize,
    ) -> Result<Outcome, LpError> {
        let mut streak = 0;
        let mut bland = false;
        loop {
            let Some(q) = self.entering(opts.optimality_tol, bland) else {
                return Ok(Outcome::Optimal);
            };
            let Some((pr, ratio)) = self.leaving(q, bland) else {
                return Ok(Outcome::Unbounded(q));
            };
            *iterations += 1;
            if *iterations > limit {
                return Err(LpError::IterationLimit(limit));
            }
            if ratio <= 1e-12 {
                streak += 1;
                if streak > opts.degenerate_streak {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(pr, q);
        }
    }

    fn entering(&self, tol: f64, bland: bool) -> Option<usize> {
        let obj = self.m * self.width();
        let mut best = None;
        let mut best_d = -tol;
        for j in 0..self.ncols {
            if self.barred[j] {
                continue;
            }
            let d = self.data[obj + j];
            if d < best_d {
                if bland {
                    return Some(j);
                }
                best_d = d;
                best = Some(j);
            }
        }
        best
    }

    fn leaving(&self, q: usize, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for r in 0..self.m {
            let a = self.at(r, q);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            best = match best {
                None => Some((r, ratio, a)),
                Some((br, bratio, ba)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio);
                    let better = if tie {
                        if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            a > ba
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio, a))
                    } else {
                        Some((br, bratio, ba))
                    }
                }
            };
        }
        best.map(|(r, ratio, _)| (r, ratio))
    }
}
