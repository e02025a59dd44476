//! Convex minimization of the largest eigenvalue over a family of affine
//! symmetric matrix functions, with optional LMI constraints, sparse linear
//! inequalities and a variable box.
//!
//! The problem is solved in epigraph form (`min s` subject to
//! `F_i(x) - s I <= 0`) by a log-det barrier method. A phase-I problem finds a
//! strictly feasible point for the constraints, which are relaxed by a small
//! `relax` margin so that sets without interior are still handled. The
//! reported `lower_bound` is the Lagrange dual value of the barrier's
//! multiplier estimate, minimized exactly over the variable box. It is valid
//! at any iterate, centred or not, for the relaxed problem and hence for the
//! original one.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{lambda_max_unchecked, trace_product};

/// `F(x) = constant + sum_j x_j * terms_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSym {
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl AffineSym {
    pub fn new(constant: DMatrix<f64>) -> Self {
        Self {
            constant,
            terms: Vec::new(),
        }
    }

    /// Adds `coeff` to the coefficient of variable `j` (merging repeated indices).
    pub fn add_term(&mut self, j: usize, coeff: DMatrix<f64>) {
        if let Some((_, m)) = self.terms.iter_mut().find(|(k, _)| *k == j) {
            *m += coeff;
        } else {
            self.terms.push((j, coeff));
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (j, a) in &self.terms {
            m += a * x[*j];
        }
        m
    }
}

/// Sparse inequality `sum coeffs_j x_j <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinIneq {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinIneq {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(j, c)| c * x[*j]).sum::<f64>()
    }
}

/// `min_x max_i lambda_max(objective_i(x))` subject to
/// `constraints_k(x) <= 0`, `linear` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineEigProblem {
    pub n_vars: usize,
    pub objective: Vec<AffineSym>,
    pub constraints: Vec<AffineSym>,
    pub linear: Vec<LinIneq>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AffineEigProblem {
    /// Largest eigenvalue over the objective blocks at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|b| lambda_max_unchecked(&b.eval(x)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest violation of the constraints and box at `x` (non-positive when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut v = f64::NEG_INFINITY;
        for c in &self.constraints {
            v = v.max(lambda_max_unchecked(&c.eval(x)));
        }
        for l in &self.linear {
            v = v.max(l.eval(x) - l.rhs);
        }
        for j in 0..self.n_vars {
            v = v.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        v
    }

    fn validate(&self) -> Result<(), EigError> {
        if self.objective.is_empty() {
            return Err(EigError::BadProblem("no objective blocks".into()));
        }
        if self.lower.len() != self.n_vars || self.upper.len() != self.n_vars {
            return Err(EigError::BadProblem("box length differs from n_vars".into()));
        }
        for j in 0..self.n_vars {
            if !(self.lower[j] <= self.upper[j]) || !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                return Err(EigError::BadProblem(format!("bad interval for variable {j}")));
            }
        }
        for b in self.objective.iter().chain(&self.constraints) {
            let d = b.dim();
            if b.constant.ncols() != d || d == 0 {
                return Err(EigError::BadProblem("block is not square".into()));
            }
            for (j, a) in &b.terms {
                if *j >= self.n_vars || a.nrows() != d || a.ncols() != d {
                    return Err(EigError::BadProblem("coefficient shape or index mismatch".into()));
                }
                if crate::linalg::asymmetry(a) > 1e-12 * crate::linalg::max_abs(a).max(1.0) {
                    return Err(EigError::BadProblem("coefficient is not symmetric".into()));
                }
            }
            if crate::linalg::asymmetry(&b.constant) > 1e-12 * crate::linalg::max_abs(&b.constant).max(1.0) {
                return Err(EigError::BadProblem("constant block is not symmetric".into()));
            }
        }
        for l in &self.linear {
            if l.coeffs.iter().any(|(j, _)| *j >= self.n_vars) {
                return Err(EigError::BadProblem("linear inequality index out of range".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target duality measure (absolute).
    pub tol: f64,
    /// Margin by which constraints are relaxed.
    pub relax: f64,
    /// Intervals narrower than this are treated as fixed values.
    pub fix_tol: f64,
    pub max_newton: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            relax: 1e-8,
            fix_tol: 1e-12,
            max_newton: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigSolution {
    /// Objective evaluated exactly at `x`.
    pub value: f64,
    /// Certified lower bound on the optimum.
    pub lower_bound: f64,
    pub x: Vec<f64>,
    /// Objective blocks within `10 tol` of `value`.
    pub active_blocks: Vec<usize>,
    pub newton_steps: usize,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EigError {
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("iteration limit reached (value {:.6e})", best.value)]
    MaxIterations { best: Box<EigSolution> },
    #[error("malformed problem: {0}")]
    BadProblem(String),
}

/// Barrier constraint `F(y) <= 0` on the reduced variable vector.
struct Lmi {
    c: DMatrix<f64>,
    terms: Vec<(usize, DMatrix<f64>)>,
}

struct Row {
    g: Vec<(usize, f64)>,
    h: f64,
}

struct Barrier {
    n: usize,
    lmis: Vec<Lmi>,
    rows: Vec<Row>,
    /// Index of the epigraph variable, whose cost is 1.
    aux: usize,
}

impl Barrier {
    fn nu(&self) -> f64 {
        (self.lmis.iter().map(|l| l.c.nrows()).sum::<usize>() + self.rows.len()) as f64
    }

    fn slack_matrix(l: &Lmi, y: &[f64]) -> DMatrix<f64> {
        let mut s = -l.c.clone();
        for (j, a) in &l.terms {
            s -= a * y[*j];
        }
        s
    }

    /// Barrier value, or `None` outside the strict interior.
    fn phi(&self, y: &[f64]) -> Option<f64> {
        let mut f = 0.0;
        for l in &self.lmis {
            let s = Self::slack_matrix(l, y);
            let ch = Cholesky::new(s)?;
            let ld: f64 = ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
            f -= 2.0 * ld;
        }
        for r in &self.rows {
            let sl = r.h - r.g.iter().map(|(j, c)| c * y[*j]).sum::<f64>();
            if !(sl > 0.0) {
                return None;
            }
            f -= sl.ln();
        }
        Some(f)
    }

    fn grad_hess(&self, y: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for l in &self.lmis {
            let s = Self::slack_matrix(l, y);
            let sinv = Cholesky::new(s)?.inverse();
            let ms: Vec<(usize, DMatrix<f64>)> = l.terms.iter().map(|(j, a)| (*j, &sinv * a)).collect();
            for (p, (j, mj)) in ms.iter().enumerate() {
                g[*j] += mj.trace();
                for (k, mk) in ms.iter().skip(p) {
                    let v = trace_product(mj, mk);
                    h[(*j, *k)] += v;
                    if *j != *k {
                        h[(*k, *j)] += v;
                    }
                }
            }
        }
        for r in &self.rows {
            let sl = r.h - r.g.iter().map(|(j, c)| c * y[*j]).sum::<f64>();
            if !(sl > 0.0) {
                return None;
            }
            for (j, cj) in &r.g {
                g[*j] += cj / sl;
                for (k, ck) in &r.g {
                    h[(*j, *k)] += cj * ck / (sl * sl);
                }
            }
        }
        Some((g, h))
    }

    /// Dual value of the multipliers `S^{-1} / t` and `1 / (t sl)` for the
    /// first `n_obj` objective LMIs, the remaining constraint LMIs and the
    /// first `n_rows` rows; the Lagrangian is minimized over `lo <= y <= hi`.
    fn dual_bound(&self, y: &[f64], t: f64, n_obj: usize, n_rows: usize, lo: &[f64], hi: &[f64]) -> f64 {
        let mut coeff = vec![0.0; self.n];
        let mut constant = 0.0;
        let mut mats = Vec::with_capacity(self.lmis.len());
        let mut norm = 0.0;
        for (i, l) in self.lmis.iter().enumerate() {
            let Some(ch) = Cholesky::new(Self::slack_matrix(l, y)) else {
                return f64::NEG_INFINITY;
            };
            let z = ch.inverse() / t;
            if i < n_obj {
                norm += z.trace();
            }
            mats.push(z);
        }
        if !(norm > 0.0) {
            return f64::NEG_INFINITY;
        }
        for (l, z) in self.lmis.iter().zip(&mats) {
            let z = z / norm;
            constant += trace_product(&z, &l.c);
            for (j, a) in &l.terms {
                if *j != self.aux {
                    coeff[*j] += trace_product(&z, a);
                }
            }
        }
        for r in &self.rows[..n_rows] {
            let sl = r.h - r.g.iter().map(|(j, c)| c * y[*j]).sum::<f64>();
            if !(sl > 0.0) {
                return f64::NEG_INFINITY;
            }
            let lam = 1.0 / (t * sl * norm);
            constant -= lam * r.h;
            for (j, c) in &r.g {
                coeff[*j] += lam * c;
            }
        }
        let mut bound = constant;
        for j in 0..self.n {
            if j != self.aux {
                bound += (coeff[j] * lo[j]).min(coeff[j] * hi[j]);
            }
        }
        bound
    }

    /// Newton direction for `t * y_aux + phi(y)`, with decrement squared.
    fn newton(&self, y: &[f64], t: f64) -> Option<(DVector<f64>, f64)> {
        let (mut g, h) = self.grad_hess(y)?;
        g[self.aux] += t;
        let n = self.n;
        let d: Vec<f64> = (0..n).map(|i| 1.0 / h[(i, i)].max(1e-300).sqrt()).collect();
        let mut hs = h.clone();
        for i in 0..n {
            for j in 0..n {
                hs[(i, j)] *= d[i] * d[j];
            }
        }
        let gs = DVector::from_iterator(n, (0..n).map(|i| g[i] * d[i]));
        let mut reg = 0.0;
        let step = loop {
            let mut m = hs.clone();
            for i in 0..n {
                m[(i, i)] += reg;
            }
            if let Some(ch) = Cholesky::new(m) {
                break ch.solve(&gs);
            }
            reg = if reg == 0.0 { 1e-14 } else { reg * 100.0 };
            if reg > 1.0 {
                return None;
            }
        };
        let dir = DVector::from_iterator(n, (0..n).map(|i| -step[i] * d[i]));
        let dec = -g.dot(&dir);
        Some((dir, dec.max(0.0)))
    }
}

enum Stop {
    Never,
    /// Phase I: stop once the auxiliary variable drops below this.
    AuxBelow(f64),
}

struct CentralOutcome {
    y: Vec<f64>,
    t: f64,
    hit_stop: bool,
    steps: usize,
    exhausted: bool,
}

/// Barrier path-following from a strictly feasible `y0`.
fn path_follow(
    bar: &Barrier,
    y0: Vec<f64>,
    gap_tol: f64,
    stop: Stop,
    infeasible_above: Option<f64>,
    max_steps: usize,
) -> CentralOutcome {
    let nu = bar.nu();
    let mut y = y0;
    let mut t = 1.0_f64.max(nu / (1.0 + y[bar.aux].abs()));
    let mu = 10.0;
    let mut steps = 0;
    loop {
        // Centering.
        let mut stalled = 0;
        let mut inner = 0;
        loop {
            if steps >= max_steps {
                return CentralOutcome { y, t, hit_stop: false, steps, exhausted: true };
            }
            let Some((dir, dec)) = bar.newton(&y, t) else {
                return CentralOutcome { y, t, hit_stop: false, steps, exhausted: true };
            };
            steps += 1;
            inner += 1;
            if dec * 0.5 <= 1e-10 || inner > 200 {
                break;
            }
            let f0 = t * y[bar.aux] + bar.phi(&y).unwrap_or(f64::INFINITY);
            let slope = -dec;
            let mut a = 1.0;
            let mut moved = false;
            while a > 1e-14 {
                let cand: Vec<f64> = y.iter().zip(dir.iter()).map(|(v, d)| v + a * d).collect();
                if let Some(p) = bar.phi(&cand) {
                    let f1 = t * cand[bar.aux] + p;
                    if f1 <= f0 + 0.01 * a * slope {
                        y = cand;
                        moved = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            if let Stop::AuxBelow(level) = stop {
                if y[bar.aux] < level {
                    return CentralOutcome { y, t, hit_stop: true, steps, exhausted: false };
                }
            }
            if !moved {
                stalled += 1;
                if stalled > 2 {
                    break;
                }
            }
        }
        let gap = nu / t;
        if let Some(level) = infeasible_above {
            if y[bar.aux] - gap > level {
                return CentralOutcome { y, t, hit_stop: false, steps, exhausted: false };
            }
        }
        if gap < gap_tol {
            return CentralOutcome { y, t, hit_stop: false, steps, exhausted: false };
        }
        t *= mu;
    }
}

/// Solves the problem to duality measure `opts.tol`.
pub fn solve(problem: &AffineEigProblem, opts: &SolveOptions) -> Result<EigSolution, EigError> {
    problem.validate()?;
    let n = problem.n_vars;
    // Reduce fixed variables.
    let mut free = Vec::new();
    let mut map = vec![usize::MAX; n];
    let mut x_fixed = vec![0.0; n];
    for j in 0..n {
        if problem.upper[j] - problem.lower[j] <= opts.fix_tol {
            x_fixed[j] = 0.5 * (problem.lower[j] + problem.upper[j]);
        } else {
            map[j] = free.len();
            free.push(j);
        }
    }
    let nf = free.len();
    let aux = nf;
    let reduce = |b: &AffineSym| -> Lmi {
        let mut c = b.constant.clone();
        let mut terms: Vec<(usize, DMatrix<f64>)> = Vec::new();
        for (j, a) in &b.terms {
            if map[*j] == usize::MAX {
                c += a * x_fixed[*j];
            } else {
                terms.push((map[*j], a.clone()));
            }
        }
        Lmi { c, terms }
    };
    let reduce_row = |l: &LinIneq| -> Row {
        let mut h = l.rhs;
        let mut g = Vec::new();
        for (j, c) in &l.coeffs {
            if map[*j] == usize::MAX {
                h -= c * x_fixed[*j];
            } else {
                g.push((map[*j], *c));
            }
        }
        Row { g, h }
    };
    let box_rows: Vec<Row> = free
        .iter()
        .enumerate()
        .flat_map(|(i, &j)| {
            [
                Row { g: vec![(i, -1.0)], h: -problem.lower[j] },
                Row { g: vec![(i, 1.0)], h: problem.upper[j] },
            ]
        })
        .collect();
    let cons: Vec<Lmi> = problem.constraints.iter().map(reduce).collect();
    let rows: Vec<Row> = problem.linear.iter().map(reduce_row).collect();
    let objs: Vec<Lmi> = problem.objective.iter().map(reduce).collect();

    let mut x: Vec<f64> = free
        .iter()
        .map(|&j| 0.5 * (problem.lower[j] + problem.upper[j]))
        .collect();
    let full = |xr: &[f64]| -> Vec<f64> {
        let mut v = x_fixed.clone();
        for (i, &j) in free.iter().enumerate() {
            v[j] = xr[i];
        }
        v
    };
    let tau = opts.relax;
    let mut steps = 0;

    // Constant-only rows decide feasibility directly.
    for r in &rows {
        if r.g.is_empty() && r.h < -tau {
            return Err(EigError::Infeasible);
        }
    }
    for c in &cons {
        if c.terms.is_empty() && lambda_max_unchecked(&c.c) > tau {
            return Err(EigError::Infeasible);
        }
    }
    let cons: Vec<Lmi> = cons.into_iter().filter(|c| !c.terms.is_empty()).collect();
    let rows: Vec<Row> = rows.into_iter().filter(|r| !r.g.is_empty()).collect();

    let viol = |xr: &[f64]| -> f64 {
        let mut v = f64::NEG_INFINITY;
        for c in &cons {
            let mut m = c.c.clone();
            for (j, a) in &c.terms {
                m += a * xr[*j];
            }
            v = v.max(lambda_max_unchecked(&m));
        }
        for r in &rows {
            v = v.max(r.g.iter().map(|(j, c)| c * xr[*j]).sum::<f64>() - r.h);
        }
        v
    };

    if !cons.is_empty() || !rows.is_empty() {
        let v0 = viol(&x);
        if v0 >= -0.5 * tau {
            // Phase I: min sigma s.t. G(x) - tau I <= sigma I, g x - h - tau <= sigma.
            let mut lmis = Vec::new();
            for c in &cons {
                let d = c.c.nrows();
                let mut terms = c.terms.clone();
                terms.push((aux, -DMatrix::identity(d, d)));
                lmis.push(Lmi { c: &c.c - DMatrix::identity(d, d) * tau, terms });
            }
            let mut prow: Vec<Row> = rows
                .iter()
                .map(|r| {
                    let mut g = r.g.clone();
                    g.push((aux, -1.0));
                    Row { g, h: r.h + tau }
                })
                .collect();
            prow.extend(box_rows.iter().map(|r| Row { g: r.g.clone(), h: r.h }));
            let bar = Barrier { n: nf + 1, lmis, rows: prow, aux };
            let mut y = x.clone();
            y.push(v0 - tau + 1.0 + v0.abs());
            let out = path_follow(
                &bar,
                y,
                1e-3 * tau,
                Stop::AuxBelow(-0.5 * tau),
                Some(-0.5 * tau),
                opts.max_newton,
            );
            steps += out.steps;
            if !out.hit_stop {
                let y = &out.y;
                if y[aux] >= -0.5 * tau {
                    let _ = out.t;
                    return Err(EigError::Infeasible);
                }
            }
            x = out.y[..nf].to_vec();
        }
    }

    // Phase II.
    let mut lmis = Vec::new();
    for o in &objs {
        let d = o.c.nrows();
        let mut terms = o.terms.clone();
        terms.push((aux, -DMatrix::identity(d, d)));
        lmis.push(Lmi { c: o.c.clone(), terms });
    }
    for c in &cons {
        let d = c.c.nrows();
        lmis.push(Lmi { c: &c.c - DMatrix::identity(d, d) * tau, terms: c.terms.clone() });
    }
    let mut prow: Vec<Row> = rows.iter().map(|r| Row { g: r.g.clone(), h: r.h + tau }).collect();
    prow.extend(box_rows);
    let bar = Barrier { n: nf + 1, lmis, rows: prow, aux };
    let eval_obj = |xr: &[f64]| -> f64 {
        objs.iter()
            .map(|o| {
                let mut m = o.c.clone();
                for (j, a) in &o.terms {
                    m += a * xr[*j];
                }
                lambda_max_unchecked(&m)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let v = eval_obj(&x);
    let mut y = x.clone();
    y.push(v + 1.0f64.max(0.1 * v.abs()));
    let out = path_follow(&bar, y, opts.tol, Stop::Never, None, opts.max_newton.saturating_sub(steps));
    steps += out.steps;
    let xr = &out.y[..nf];
    let xfull = full(xr);
    let value = problem.value(&xfull);
    let lo_free: Vec<f64> = free.iter().map(|&j| problem.lower[j]).collect();
    let hi_free: Vec<f64> = free.iter().map(|&j| problem.upper[j]).collect();
    let dual = bar.dual_bound(&out.y, out.t, objs.len(), rows.len(), &lo_free, &hi_free);
    let lower_bound = dual.min(value);
    let active_blocks = problem
        .objective
        .iter()
        .enumerate()
        .filter(|(_, b)| lambda_max_unchecked(&b.eval(&xfull)) >= value - 10.0 * opts.tol)
        .map(|(i, _)| i)
        .collect();
    let sol = EigSolution { value, lower_bound, x: xfull, active_blocks, newton_steps: steps };
    if out.exhausted && value - lower_bound > opts.tol {
        return Err(EigError::MaxIterations { best: Box::new(sol) });
    }
    Ok(sol)
}

/// Minimizes a convex scalar function on `[lo, hi]` by golden-section search.
/// Returns the best point found and its value.
pub fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let width = (hi - lo) * rel_tol;
    while b - a > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for z in [lo, hi] {
        let fz = f(z);
        if fz < best.1 {
            best = (z, fz);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, b, c])
    }

    fn scalar_box(lo: f64, hi: f64) -> AffineEigProblem {
        // max(x, -x) over [lo, hi]
        let mut b = AffineSym::new(DMatrix::zeros(2, 2));
        b.add_term(0, m2(1.0, 0.0, -1.0));
        AffineEigProblem {
            n_vars: 1,
            objective: vec![b],
            constraints: vec![],
            linear: vec![],
            lower: vec![lo],
            upper: vec![hi],
        }
    }

    #[test]
    fn absolute_value_minimum() {
        let sol = solve(&scalar_box(-1.0, 2.0), &SolveOptions::default()).unwrap();
        assert!(sol.value.abs() < 1e-5, "{sol:?}");
        assert!(sol.lower_bound <= 1e-9 && sol.lower_bound > -2e-6);
        let sol = solve(&scalar_box(0.5, 2.0), &SolveOptions::default()).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-5);
    }

    #[test]
    fn fixed_box_is_plain_evaluation() {
        let sol = solve(&scalar_box(0.7, 0.7), &SolveOptions::default()).unwrap();
        assert!((sol.value - 0.7).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_constraints() {
        let mut p = scalar_box(-1.0, 1.0);
        // x >= 2 is impossible in the box
        p.linear.push(LinIneq { coeffs: vec![(0, -1.0)], rhs: -2.0 });
        assert_eq!(solve(&p, &SolveOptions::default()), Err(EigError::Infeasible));
        let mut p = scalar_box(-1.0, 1.0);
        let mut c = AffineSym::new(m2(2.0, 0.0, 2.0));
        c.add_term(0, m2(-0.5, 0.0, -0.5));
        p.constraints.push(c); // 2 - x/2 <= 0 needs x >= 4
        assert_eq!(solve(&p, &SolveOptions::default()), Err(EigError::Infeasible));
    }

    #[test]
    fn constraint_without_interior() {
        // x <= 0.3 and x >= 0.3; objective |x|.
        let mut p = scalar_box(-1.0, 1.0);
        p.linear.push(LinIneq { coeffs: vec![(0, 1.0)], rhs: 0.3 });
        p.linear.push(LinIneq { coeffs: vec![(0, -1.0)], rhs: -0.3 });
        let sol = solve(&p, &SolveOptions::default()).unwrap();
        assert!((sol.value - 0.3).abs() < 1e-6, "{sol:?}");
    }

    #[test]
    fn golden_section_on_abs() {
        let (x, f) = golden_min(|x| (x - 0.3).abs(), -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-10 && f < 1e-10);
    }
}
