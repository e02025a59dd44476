//! Global minimization of the largest eigenvalue of the bilinear Lyapunov
//! inequality over a polytope's vertices: normalization, the two convex
//! slices, the McCormick relaxation, alternating SDP, branch and bound,
//! Routh-Hurwitz gain intervals and certificate checks.
//!
//! Normalized variables: `P` entries in `[-1, 1]` (upper triangle, row-major),
//! gains `K_i = k_i / k_M` in `[mu_k, 1]`, output row `C = [k_M, 0, .., 0]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lambda_max_unchecked, lambda_min_unchecked};
use crate::minimax_eig::{golden_min, solve, AffineEigProblem, AffineSym, EigError, EigSolution, LinIneq, SolveOptions};
use crate::plant::{companion_a, lyapunov_derivative};
use crate::uncertainty::VertexPolytope;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BmiError {
    #[error("gain range must satisfy 0 < k_m < k_M (got {0}, {1})")]
    GainRange(f64, f64),
    #[error("mu_p must lie in (0, 1), got {0}")]
    MuP(f64),
    #[error("no vertices")]
    Empty,
    #[error("no stabilizing gain found for vertex {0}")]
    NoStabilizingGain(usize),
    #[error("eigenvalue subproblem failed: {0}")]
    Solver(String),
}

/// Normalized problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct BmiInstance {
    pub vertices: VertexPolytope,
    pub k_m: f64,
    pub k_max: f64,
    pub mu_p: f64,
    pub mu_k: f64,
    a_mats: Vec<DMatrix<f64>>,
    /// `B_i C` with the scaled output row.
    bc: Vec<DMatrix<f64>>,
    basis: Vec<DMatrix<f64>>,
}

impl BmiInstance {
    pub fn new(vertices: VertexPolytope, k_m: f64, k_max: f64, mu_p: f64) -> Result<Self, BmiError> {
        if !(k_m > 0.0 && k_m < k_max && k_max.is_finite()) {
            return Err(BmiError::GainRange(k_m, k_max));
        }
        if !(mu_p > 0.0 && mu_p < 1.0) {
            return Err(BmiError::MuP(mu_p));
        }
        if vertices.is_empty() {
            return Err(BmiError::Empty);
        }
        let n = vertices.order();
        let a_mats = (0..vertices.len()).map(|i| companion_a(vertices.a(i))).collect();
        let bc = (0..vertices.len())
            .map(|i| {
                let mut m = DMatrix::zeros(n, n);
                m[(n - 1, 0)] = vertices.b(i) * k_max;
                m
            })
            .collect();
        Ok(Self { mu_k: k_m / k_max, basis: sym_basis(n), vertices, k_m, k_max, mu_p, a_mats, bc })
    }

    pub fn order(&self) -> usize {
        self.vertices.order()
    }

    /// Number of distinct entries of `P`.
    pub fn n_p(&self) -> usize {
        self.basis.len()
    }

    /// Number of vertices, one gain each.
    pub fn m(&self) -> usize {
        self.vertices.len()
    }

    pub fn p_matrix(&self, p: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.order(), self.order());
        for (e, v) in self.basis.iter().zip(p) {
            out += e * *v;
        }
        out
    }

    pub fn p_vector(&self, p: &DMatrix<f64>) -> Vec<f64> {
        let n = self.order();
        let mut out = Vec::with_capacity(self.n_p());
        for r in 0..n {
            for c in r..n {
                out.push(0.5 * (p[(r, c)] + p[(c, r)]));
            }
        }
        out
    }

    /// `A_i^T P + P A_i - K (B_i C)^T P - K P B_i C` with normalized `K`.
    pub fn q_block(&self, i: usize, p: &DMatrix<f64>, k: f64) -> DMatrix<f64> {
        let acl = &self.a_mats[i] - &self.bc[i] * k;
        acl.transpose() * p + p * acl
    }

    /// `max_i lambda_max(Q_i(P, K_i))`.
    pub fn objective(&self, p: &[f64], k: &[f64]) -> f64 {
        let pm = self.p_matrix(p);
        (0..self.m()).map(|i| lambda_max_unchecked(&self.q_block(i, &pm, k[i]))).fold(f64::NEG_INFINITY, f64::max)
    }

    fn p_bound_constraints(&self, p_off: usize) -> Vec<AffineSym> {
        let n = self.order();
        let id = DMatrix::<f64>::identity(n, n);
        let mut lo = AffineSym::new(&id * self.mu_p);
        let mut hi = AffineSym::new(-&id);
        for (j, e) in self.basis.iter().enumerate() {
            lo.add_term(p_off + j, -e);
            hi.add_term(p_off + j, e.clone());
        }
        vec![lo, hi]
    }
}

fn sym_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for r in 0..n {
        for c in r..n {
            let mut e = DMatrix::zeros(n, n);
            e[(r, c)] = 1.0;
            e[(c, r)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Hyper-rectangle over normalized `P` entries and gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxQ {
    pub p_box: Vec<(f64, f64)>,
    pub k_box: Vec<(f64, f64)>,
}

impl BoxQ {
    /// `[-1, 1]^{n_p} x [mu_k, 1]^m`.
    pub fn root(inst: &BmiInstance) -> Self {
        Self { p_box: vec![(-1.0, 1.0); inst.n_p()], k_box: vec![(inst.mu_k, 1.0); inst.m()] }
    }

    pub fn edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.p_box.iter().chain(&self.k_box).copied()
    }

    pub fn max_width(&self) -> f64 {
        self.edges().map(|(l, u)| u - l).fold(0.0, f64::max)
    }

    pub fn k_centroid(&self) -> Vec<f64> {
        self.k_box.iter().map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// Halves the longest edge; ties go to the lowest index (P entries first).
    pub fn split(&self) -> (BoxQ, BoxQ) {
        let mut best = 0;
        let mut w = f64::NEG_INFINITY;
        for (i, (l, u)) in self.edges().enumerate() {
            if u - l > w {
                w = u - l;
                best = i;
            }
        }
        let (mut a, mut b) = (self.clone(), self.clone());
        let np = self.p_box.len();
        let (ea, eb) = if best < np {
            (&mut a.p_box[best], &mut b.p_box[best])
        } else {
            (&mut a.k_box[best - np], &mut b.k_box[best - np])
        };
        let mid = 0.5 * (ea.0 + ea.1);
        ea.1 = mid;
        eb.0 = mid;
        (a, b)
    }

    pub fn contains(&self, p: &[f64], k: &[f64], tol: f64) -> bool {
        let inside = |v: f64, (l, u): (f64, f64)| v >= l - tol && v <= u + tol;
        p.iter().zip(&self.p_box).all(|(v, b)| inside(*v, *b)) && k.iter().zip(&self.k_box).all(|(v, b)| inside(*v, *b))
    }
}

fn eig_or_best(r: Result<EigSolution, EigError>) -> Result<Option<EigSolution>, BmiError> {
    match r {
        Ok(s) => Ok(Some(s)),
        Err(EigError::Infeasible) => Ok(None),
        Err(EigError::MaxIterations { best }) => Ok(Some(*best)),
        Err(e) => Err(BmiError::Solver(e.to_string())),
    }
}

/// A feasible point of the constrained problem and its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperPoint {
    pub s: f64,
    pub p: Vec<f64>,
    pub k: Vec<f64>,
}

impl UpperPoint {
    fn infeasible(inst: &BmiInstance) -> Self {
        Self { s: f64::INFINITY, p: vec![f64::NAN; inst.n_p()], k: vec![f64::NAN; inst.m()] }
    }
}

/// Minimizes over `P` in the box with the gains frozen. `+inf` when the box
/// misses `mu_p I <= P <= I`.
pub fn op3_fixed_gain(inst: &BmiInstance, bx: &BoxQ, k: &[f64], opts: &SolveOptions) -> Result<(f64, Vec<f64>), BmiError> {
    let n = inst.order();
    let objective = (0..inst.m())
        .map(|i| {
            let mut blk = AffineSym::new(DMatrix::zeros(n, n));
            for (j, e) in inst.basis.iter().enumerate() {
                blk.add_term(j, inst.q_block(i, e, k[i]));
            }
            blk
        })
        .collect();
    let prob = AffineEigProblem {
        n_vars: inst.n_p(),
        objective,
        constraints: inst.p_bound_constraints(0),
        linear: Vec::new(),
        lower: bx.p_box.iter().map(|b| b.0).collect(),
        upper: bx.p_box.iter().map(|b| b.1).collect(),
    };
    match eig_or_best(solve(&prob, opts))? {
        Some(sol) => Ok((sol.value, sol.x)),
        None => Ok((f64::INFINITY, vec![f64::NAN; inst.n_p()])),
    }
}

/// Minimizes each vertex's block over its own gain interval with `P` frozen.
pub fn op3_fixed_p(inst: &BmiInstance, bx: &BoxQ, p: &[f64]) -> (f64, Vec<f64>) {
    let pm = inst.p_matrix(p);
    let mut s = f64::NEG_INFINITY;
    let mut k = Vec::with_capacity(inst.m());
    for i in 0..inst.m() {
        let (lo, hi) = bx.k_box[i];
        let (ki, vi) = golden_min(|kk| lambda_max_unchecked(&inst.q_block(i, &pm, kk)), lo, hi, 1e-10);
        s = s.max(vi);
        k.push(ki);
    }
    (s, k)
}

/// Result of the alternating scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AltResult {
    pub best: UpperPoint,
    /// Objective after each completed `P` then `K` update.
    pub history: Vec<f64>,
}

/// Alternates the two convex slices from the centroid gain, continuing while
/// the last round improved by at least `delta_rel |s|`.
pub fn alternating_sdp(
    inst: &BmiInstance,
    bx: &BoxQ,
    delta_rel: f64,
    max_rounds: usize,
    opts: &SolveOptions,
) -> Result<AltResult, BmiError> {
    let mut k = bx.k_centroid();
    let (s0, p0) = op3_fixed_gain(inst, bx, &k, opts)?;
    if !s0.is_finite() {
        return Ok(AltResult { best: UpperPoint::infeasible(inst), history: vec![f64::INFINITY] });
    }
    let mut best = UpperPoint { s: s0, p: p0, k: k.clone() };
    let mut history = vec![s0];
    let mut prev = s0;
    for _ in 0..max_rounds {
        let (sp, p) = op3_fixed_gain(inst, bx, &k, opts)?;
        if !sp.is_finite() {
            break;
        }
        if sp < best.s {
            best = UpperPoint { s: sp, p: p.clone(), k: k.clone() };
        }
        let (sk, kn) = op3_fixed_p(inst, bx, &p);
        k = kn;
        if sk < best.s {
            best = UpperPoint { s: sk, p, k: k.clone() };
        }
        history.push(best.s);
        let improved = prev - best.s;
        prev = best.s;
        if improved < delta_rel * best.s.abs() {
            break;
        }
    }
    Ok(AltResult { best, history })
}

/// Variable layout of the relaxation: `P` entries, gains, then `W_i` entries
/// vertex by vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxLayout {
    pub n_p: usize,
    pub m: usize,
}

impl RelaxLayout {
    pub fn p(&self, j: usize) -> usize {
        j
    }
    pub fn k(&self, i: usize) -> usize {
        self.n_p + i
    }
    pub fn w(&self, i: usize, j: usize) -> usize {
        self.n_p + self.m + i * self.n_p + j
    }
    pub fn n_vars(&self) -> usize {
        self.n_p + self.m + self.n_p * self.m
    }
}

/// The four McCormick planes for every `(gain i, P entry j)` pair.
pub fn mccormick_w(bx: &BoxQ, layout: RelaxLayout) -> Vec<LinIneq> {
    let mut rows = Vec::with_capacity(4 * layout.n_p * layout.m);
    for (i, &(lk, uk)) in bx.k_box.iter().enumerate() {
        for (j, &(lp, up)) in bx.p_box.iter().enumerate() {
            let (w, p, k) = (layout.w(i, j), layout.p(j), layout.k(i));
            rows.push(LinIneq { coeffs: vec![(w, -1.0), (p, lk), (k, lp)], rhs: lk * lp });
            rows.push(LinIneq { coeffs: vec![(w, -1.0), (p, uk), (k, up)], rhs: uk * up });
            rows.push(LinIneq { coeffs: vec![(w, 1.0), (p, -uk), (k, -lp)], rhs: -uk * lp });
            rows.push(LinIneq { coeffs: vec![(w, 1.0), (p, -lk), (k, -up)], rhs: -lk * up });
        }
    }
    rows
}

/// Interval of `w` allowed by the four planes at `(p, k)`.
pub fn mccormick_interval(p_box: (f64, f64), k_box: (f64, f64), p: f64, k: f64) -> (f64, f64) {
    let ((lp, up), (lk, uk)) = (p_box, k_box);
    let lo = (lk * p + lp * k - lk * lp).max(uk * p + up * k - uk * up);
    let hi = (uk * p + lp * k - uk * lp).min(lk * p + up * k - lk * up);
    (lo, hi)
}

/// Certified lower bound of the box via the McCormick relaxation.
pub fn lower_bound_relax(inst: &BmiInstance, bx: &BoxQ, opts: &SolveOptions) -> Result<f64, BmiError> {
    let n = inst.order();
    let lay = RelaxLayout { n_p: inst.n_p(), m: inst.m() };
    let id = DMatrix::<f64>::identity(n, n);
    let mut objective = Vec::with_capacity(inst.m());
    let mut constraints = inst.p_bound_constraints(0);
    for i in 0..inst.m() {
        let mut blk = AffineSym::new(DMatrix::zeros(n, n));
        let mut lo = AffineSym::new(DMatrix::zeros(n, n));
        let mut hi = AffineSym::new(DMatrix::zeros(n, n));
        let bct = inst.bc[i].transpose();
        for (j, e) in inst.basis.iter().enumerate() {
            blk.add_term(lay.p(j), inst.a_mats[i].transpose() * e + e * &inst.a_mats[i]);
            blk.add_term(lay.w(i, j), -(&bct * e + e * &inst.bc[i]));
            lo.add_term(lay.w(i, j), -e);
            hi.add_term(lay.w(i, j), e.clone());
        }
        lo.add_term(lay.k(i), &id * inst.mu_p);
        hi.add_term(lay.k(i), -&id);
        objective.push(blk);
        constraints.push(lo);
        constraints.push(hi);
    }
    let mut lower = vec![0.0; lay.n_vars()];
    let mut upper = vec![0.0; lay.n_vars()];
    for (j, b) in bx.p_box.iter().enumerate() {
        lower[lay.p(j)] = b.0;
        upper[lay.p(j)] = b.1;
    }
    for (i, kb) in bx.k_box.iter().enumerate() {
        lower[lay.k(i)] = kb.0;
        upper[lay.k(i)] = kb.1;
        for (j, pb) in bx.p_box.iter().enumerate() {
            let c = [pb.0 * kb.0, pb.0 * kb.1, pb.1 * kb.0, pb.1 * kb.1];
            lower[lay.w(i, j)] = c.iter().cloned().fold(f64::INFINITY, f64::min);
            upper[lay.w(i, j)] = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let prob = AffineEigProblem {
        n_vars: lay.n_vars(),
        objective,
        constraints,
        linear: mccormick_w(bx, lay),
        lower,
        upper,
    };
    Ok(eig_or_best(solve(&prob, opts))?.map_or(f64::INFINITY, |s| s.lower_bound))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    pub epsilon: f64,
    pub delta_rel: f64,
    pub max_alt_rounds: usize,
    pub max_nodes: usize,
    /// Bound the two children on separate threads.
    pub parallel: bool,
    pub eig: SolveOptions,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            delta_rel: 1e-4,
            max_alt_rounds: 50,
            max_nodes: 10_000,
            parallel: true,
            eig: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub bx: BoxQ,
    pub phi_l: f64,
    pub phi_u: f64,
    pub witness: UpperPoint,
}

/// Outcome in normalized coordinates, with the bound history.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbOutcome {
    pub incumbent: UpperPoint,
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
    pub converged: bool,
    /// `(L_k, U_k)` after every iteration, starting with the root.
    pub bounds: Vec<(f64, f64)>,
    /// `(phi_L, phi_U)` of every bounded node.
    pub node_bounds: Vec<(f64, f64)>,
}

fn bound_node(inst: &BmiInstance, bx: BoxQ, parent_l: f64, incumbent: f64, o: &BnbOptions) -> Result<BnbNode, BmiError> {
    let phi_l = lower_bound_relax(inst, &bx, &o.eig)?.max(parent_l);
    if phi_l > incumbent {
        return Ok(BnbNode { bx, phi_l, phi_u: f64::INFINITY, witness: UpperPoint::infeasible(inst) });
    }
    let alt = alternating_sdp(inst, &bx, o.delta_rel, o.max_alt_rounds, &o.eig)?;
    Ok(BnbNode { bx, phi_l, phi_u: alt.best.s, witness: alt.best })
}

/// Best-first branch and bound on the normalized problem.
pub fn branch_and_bound_normalized(inst: &BmiInstance, o: &BnbOptions) -> Result<BnbOutcome, BmiError> {
    let root = bound_node(inst, BoxQ::root(inst), f64::NEG_INFINITY, f64::INFINITY, o)?;
    let mut incumbent = root.witness.clone();
    let mut upper = root.phi_u;
    let mut lower = root.phi_l.min(upper);
    let mut node_bounds = vec![(root.phi_l, root.phi_u)];
    let mut bounds = vec![(lower, upper)];
    let mut open = vec![root];
    let mut nodes = 1;
    while upper - lower >= o.epsilon && !open.is_empty() && nodes < o.max_nodes {
        let pick = open
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.phi_l.partial_cmp(&b.1.phi_l).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("nonempty");
        let node = open.remove(pick);
        let (b1, b2) = node.bx.split();
        let (c1, c2) = if o.parallel {
            std::thread::scope(|sc| {
                let h = sc.spawn(|| bound_node(inst, b1, node.phi_l, upper, o));
                let r2 = bound_node(inst, b2, node.phi_l, upper, o);
                (h.join().expect("bounding thread panicked"), r2)
            })
        } else {
            (bound_node(inst, b1, node.phi_l, upper, o), bound_node(inst, b2, node.phi_l, upper, o))
        };
        nodes += 2;
        for c in [c1?, c2?] {
            node_bounds.push((c.phi_l, c.phi_u));
            if c.phi_u < upper {
                upper = c.phi_u;
                incumbent = c.witness.clone();
            }
            if c.phi_l <= upper {
                open.push(c);
            }
        }
        open.retain(|nd| nd.phi_l <= upper);
        lower = open.iter().map(|nd| nd.phi_l).fold(upper, f64::min);
        bounds.push((lower, upper));
    }
    Ok(BnbOutcome { incumbent, lower, upper, nodes, converged: upper - lower < o.epsilon, bounds, node_bounds })
}

/// Solution in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmiSolution {
    /// Raw optimum (negative when the certificate exists).
    pub s_star: f64,
    /// Decay margin in the positive sense, `-s_star`.
    pub s: f64,
    pub p_star: Vec<Vec<f64>>,
    pub k_star: Vec<f64>,
    pub lower: f64,
    pub gap: f64,
    pub node_count: usize,
    pub converged: bool,
    /// Independent eigenvalue check of all constraints at the witness.
    pub verified: bool,
}

impl BmiSolution {
    pub fn p_matrix(&self) -> DMatrix<f64> {
        let n = self.p_star.len();
        DMatrix::from_fn(n, n, |r, c| self.p_star[r][c])
    }
}

/// Runs branch and bound and denormalizes the incumbent.
pub fn branch_and_bound(inst: &BmiInstance, o: &BnbOptions) -> Result<(BmiSolution, BnbOutcome), BmiError> {
    let out = branch_and_bound_normalized(inst, o)?;
    let w = &out.incumbent;
    if !w.s.is_finite() {
        let sol = BmiSolution {
            s_star: f64::INFINITY,
            s: f64::NEG_INFINITY,
            p_star: Vec::new(),
            k_star: Vec::new(),
            lower: out.lower,
            gap: f64::INFINITY,
            node_count: out.nodes,
            converged: false,
            verified: false,
        };
        return Ok((sol, out));
    }
    let pm = inst.p_matrix(&w.p);
    let k_star: Vec<f64> = w.k.iter().map(|k| k * inst.k_max).collect();
    let verified = check_witness(&inst.vertices, &pm, &k_star, w.s, inst.mu_p, 1e-6);
    let n = inst.order();
    let sol = BmiSolution {
        s_star: w.s,
        s: -w.s,
        p_star: (0..n).map(|r| (0..n).map(|c| pm[(r, c)]).collect()).collect(),
        k_star,
        lower: out.lower,
        gap: out.upper - out.lower,
        node_count: out.nodes,
        converged: out.converged,
        verified,
    };
    Ok((sol, out))
}

/// Raw eigenvalue check of every constraint at physical gains `k`.
pub fn check_witness(v: &VertexPolytope, p: &DMatrix<f64>, k: &[f64], s: f64, mu_p: f64, tol: f64) -> bool {
    let scale = tol * (1.0 + s.abs());
    let lam_lo = lambda_min_unchecked(p);
    let lam_hi = lambda_max_unchecked(p);
    if lam_lo < mu_p - tol || lam_hi > 1.0 + tol {
        return false;
    }
    (0..v.len()).all(|i| lambda_max_unchecked(&lyapunov_derivative(v.a(i), v.b(i), k[i], p)) <= s + scale)
}

/// Gains `K > 0` making the closed loop Hurwitz; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainInterval {
    pub lo: f64,
    pub hi: f64,
}

impl GainInterval {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }
}

/// Strict Hurwitz test of `c_0 s^n + c_1 s^{n-1} + .. + c_n` by the Routh array.
pub fn routh_hurwitz(coeffs: &[f64]) -> bool {
    let n = coeffs.len();
    if n == 0 || coeffs[0] == 0.0 {
        return false;
    }
    let sign = coeffs[0].signum();
    if coeffs.iter().any(|c| c * sign <= 0.0) {
        return false;
    }
    let mut r0: Vec<f64> = coeffs.iter().step_by(2).cloned().collect();
    let mut r1: Vec<f64> = coeffs.iter().skip(1).step_by(2).cloned().collect();
    for _ in 0..n.saturating_sub(2) {
        let lead = r1[0];
        if lead * sign <= 0.0 {
            return false;
        }
        let mut next = Vec::with_capacity(r0.len());
        for j in 0..r0.len().saturating_sub(1) {
            let a = r0.get(j + 1).copied().unwrap_or(0.0);
            let b = r1.get(j + 1).copied().unwrap_or(0.0);
            next.push((lead * a - r0[0] * b) / lead);
        }
        if next.is_empty() {
            break;
        }
        r0 = r1;
        r1 = next;
    }
    r1[0] * sign > 0.0 && r0[0] * sign > 0.0
}

/// Closed-loop characteristic polynomial, highest power first:
/// `s^N - a_N s^{N-1} - .. - a_2 s + (b K - a_1)`.
pub fn closed_loop_poly(a: &[f64], b: f64, k: f64) -> Vec<f64> {
    let n = a.len();
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for j in (1..n).rev() {
        c.push(-a[j]);
    }
    c.push(b * k - a[0]);
    c
}

/// Real roots of a polynomial (highest power first) via companion eigenvalues.
fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && c[0].abs() < 1e-300 {
        c.remove(0);
    }
    let d = c.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..d {
        m[(i, i - 1)] = 1.0;
    }
    let scale = m.amax().max(1.0);
    m.complex_eigenvalues().iter().filter(|z| z.im.abs() <= 1e-9 * scale).map(|z| z.re).collect()
}

/// Stabilizing output-feedback gain interval of one vertex, found from the
/// Routh test between the gains where a root crosses the imaginary axis.
pub fn routh_gain_interval(a: &[f64], b: f64) -> GainInterval {
    let n = a.len();
    let empty = GainInterval { lo: 0.0, hi: 0.0 };
    if b == 0.0 || n == 0 {
        return empty;
    }
    // q(s) = closed-loop polynomial without its constant term.
    let q = closed_loop_poly(a, b, a[0] / b);
    // coefficient of s^k in q
    let qc = |k: usize| q[n - k];
    // Im q(jw) / w as a polynomial in u = w^2, highest power first.
    let mut im: Vec<f64> = Vec::new();
    let mut k = n - (1 - n % 2);
    loop {
        let sgn = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        im.push(sgn * qc(k));
        if k < 3 {
            break;
        }
        k -= 2;
    }
    let mut cands = vec![a[0] / b];
    if im.iter().any(|c| *c != 0.0) {
        for u in real_roots(&im) {
            if u > 0.0 {
                let w = u.sqrt();
                let mut re = 0.0;
                for k in (2..=n).step_by(2) {
                    let sgn = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    re += sgn * qc(k) * w.powi(k as i32);
                }
                // p(jw) = 0 needs re + bK - a_1 = 0
                cands.push((a[0] - re) / b);
            }
        }
    }
    cands.retain(|c| *c > 0.0 && c.is_finite());
    cands.push(0.0);
    cands.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cands.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    let stable = |k: f64| routh_hurwitz(&closed_loop_poly(a, b, k));
    for (i, &lo) in cands.iter().enumerate() {
        let hi = cands.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let probe = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo + 1.0 };
        if stable(probe) {
            // merge adjacent stable segments
            let mut end = hi;
            let mut j = i + 1;
            while end.is_finite() {
                let nxt = cands.get(j + 1).copied().unwrap_or(f64::INFINITY);
                let pr = if nxt.is_finite() { 0.5 * (end + nxt) } else { 2.0 * end + 1.0 };
                if !stable(pr) {
                    break;
                }
                end = nxt;
                j += 1;
            }
            return GainInterval { lo, hi: end };
        }
    }
    empty
}

/// Initial gain set covering every vertex's Routh interval. An unbounded
/// upper end is replaced by `headroom` times the largest lower end.
pub fn routh_gain_set(v: &VertexPolytope, headroom: f64) -> Result<(f64, f64, Vec<GainInterval>), BmiError> {
    let sign = v.b(0).signum();
    let mut ivs = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let a: Vec<f64> = v.a(i).iter().map(|x| x * sign).collect();
        let g = routh_gain_interval(&a, v.b(i) * sign);
        if g.is_empty() {
            return Err(BmiError::NoStabilizingGain(i));
        }
        ivs.push(g);
    }
    let lo = ivs.iter().map(|g| g.lo).fold(f64::INFINITY, f64::min);
    let max_lo = ivs.iter().map(|g| g.lo).fold(0.0, f64::max);
    let max_hi = ivs.iter().map(|g| g.hi).fold(0.0, f64::max);
    let hi = if max_hi.is_finite() { max_hi } else { headroom * max_lo.max(lo) };
    let lo = if lo > 0.0 { lo } else { hi * 1e-3 };
    Ok((lo, hi, ivs))
}

/// `(min K_i, max K_i)`, widened by 0.5% each way when all gains coincide.
pub fn shrink_gain_set(k: &[f64]) -> (f64, f64) {
    let lo = k.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * hi.abs() {
        (lo * 0.995, hi * 1.005)
    } else {
        (lo, hi)
    }
}

/// Per-vertex check of the certificate inequality with `P` and positive margin `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct C1Check {
    pub passed: bool,
    /// Best gain of each vertex.
    pub gains: Vec<f64>,
    /// Best `lambda_max` of each vertex.
    pub values: Vec<f64>,
}

pub fn verify_c1(p: &DMatrix<f64>, s: f64, v: &VertexPolytope, k_m: f64, k_max: f64, tol: f64) -> C1Check {
    let mut gains = Vec::with_capacity(v.len());
    let mut values = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let f = |k: f64| lambda_max_unchecked(&lyapunov_derivative(v.a(i), v.b(i), k, p));
        let (k, val) = golden_min(f, k_m, k_max, 1e-12);
        gains.push(k);
        values.push(val);
    }
    let passed = lambda_min_unchecked(p) > 0.0 && values.iter().all(|val| *val <= -s + tol);
    C1Check { passed, gains, values }
}

/// Gain of an interior plant `sum theta_i (A_i, B_i)`: `sum theta_i K_i b_i / sum theta_i b_i`.
pub fn interpolate_gain(theta: &[f64], b: &[f64], k: &[f64]) -> f64 {
    let num: f64 = theta.iter().zip(b).zip(k).map(|((t, b), k)| t * b * k).sum();
    let den: f64 = theta.iter().zip(b).map(|(t, b)| t * b).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar_inst(k_m: f64, k_max: f64) -> BmiInstance {
        BmiInstance::new(VertexPolytope::from_vertices(vec![vec![-1.0, 1.0]]).unwrap(), k_m, k_max, 1e-3).unwrap()
    }

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn routh_examples() {
        let g = routh_gain_interval(&[2.0], 4.0);
        assert!((g.lo - 0.5).abs() < 1e-12 && g.hi.is_infinite());
        let g = routh_gain_interval(&[-3.0], 1.0);
        assert_eq!(g.lo, 0.0);
        let g = routh_gain_interval(&[3.0, -2.0], 2.0);
        assert!((g.lo - 1.5).abs() < 1e-12 && g.hi.is_infinite());
        assert!(routh_gain_interval(&[3.0, 0.0], 2.0).is_empty());
        assert!(routh_gain_interval(&[3.0, 1.0], 2.0).is_empty());
        assert!(routh_hurwitz(&[1.0, 3.0, 3.0, 1.0]));
        assert!(!routh_hurwitz(&[1.0, 1.0, 1.0, 2.0]));
    }

    /// Third-order case with a finite upper gain: s^3 + 3s^2 + 3s + (K - 1)
    /// loses stability at K = 9 (3 * 3 = K - 1 + ... crossing at w^2 = 3).
    #[test]
    fn routh_third_order_finite_interval() {
        let g = routh_gain_interval(&[1.0, -3.0, -3.0], 1.0);
        assert!((g.lo - 1.0).abs() < 1e-9, "{g:?}");
        assert!((g.hi - 10.0).abs() < 1e-9, "{g:?}");
    }

    proptest! {
        /// Closed-loop eigenvalues at sampled gains agree with the interval.
        #[test]
        fn routh_matches_eigenvalues(a1 in -5.0f64..5.0, a2 in -4.0f64..1.0, a3 in -4.0f64..1.0, b in 0.2f64..3.0, kf in 0.0f64..1.0) {
            let a = [a1, a2, a3];
            let g = routh_gain_interval(&a, b);
            let k = 20.0 * kf;
            let mut acl = a.to_vec();
            acl[0] -= b * k;
            let re = companion_a(&acl).complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            let inside = k > g.lo && k < g.hi;
            if (k - g.lo).abs() > 1e-6 && (k - g.hi).abs() > 1e-6 && re.abs() > 1e-9 {
                prop_assert_eq!(inside, re < 0.0, "k={} g={:?} re={}", k, g, re);
            }
        }
    }

    #[test]
    fn normalization_round_trip() {
        let v = VertexPolytope::from_vertices(vec![vec![2.0, -1.0, 0.5], vec![1.0, -2.0, 0.7]]).unwrap();
        let inst = BmiInstance::new(v.clone(), 3.0, 12.0, 1e-3).unwrap();
        let p = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.1, 0.3]);
        for i in 0..2 {
            for kn in [0.25, 0.6, 1.0] {
                let d = inst.q_block(i, &p, kn) - lyapunov_derivative(v.a(i), v.b(i), kn * 12.0, &p);
                assert!(d.amax() < 1e-12);
            }
        }
        assert_eq!(inst.p_vector(&inst.p_matrix(&[0.9, 0.1, 0.3])), vec![0.9, 0.1, 0.3]);
    }

    #[test]
    fn op3_fixed_gain_scalar() {
        let inst = scalar_inst(0.5, 2.0);
        let (s, p) = op3_fixed_gain(&inst, &BoxQ::root(&inst), &[0.5], &opts()).unwrap();
        assert!((s + 4.0).abs() < 1e-5, "{s}");
        assert!((p[0] - 1.0).abs() < 1e-5);
        // unstable frozen gain: best is the smallest P
        let inst = BmiInstance::new(VertexPolytope::from_vertices(vec![vec![3.0, 1.0]]).unwrap(), 0.5, 2.0, 1e-3).unwrap();
        let (s, _) = op3_fixed_gain(&inst, &BoxQ::root(&inst), &[0.5], &opts()).unwrap();
        assert!(s > 0.0 && (s - 2e-3 * 2.0).abs() < 1e-5, "{s}");
        // box missing mu_p I <= P
        let mut bx = BoxQ::root(&inst);
        bx.p_box[0] = (-1.0, -0.5);
        let (s, _) = op3_fixed_gain(&inst, &bx, &[0.5], &opts()).unwrap();
        assert!(s.is_infinite());
    }

    #[test]
    fn op3_fixed_p_scalar() {
        let inst = scalar_inst(1.0, 2.0);
        let bx = BoxQ::root(&inst);
        let (s, k) = op3_fixed_p(&inst, &bx, &[1.0]);
        assert_eq!(k, vec![1.0]);
        assert!((s - 2.0 * (-1.0 - 2.0)).abs() < 1e-12);
        let v = VertexPolytope::from_vertices(vec![vec![-1.0, 1.0], vec![-1.0, 1.0]]).unwrap();
        let inst2 = BmiInstance::new(v, 1.0, 2.0, 1e-3).unwrap();
        let (_, k2) = op3_fixed_p(&inst2, &BoxQ::root(&inst2), &[0.7]);
        assert_eq!(k2[0], k2[1]);
        let mut pt = BoxQ::root(&inst);
        pt.k_box[0] = (0.7, 0.7);
        let (s, k) = op3_fixed_p(&inst, &pt, &[0.5]);
        assert_eq!(k, vec![0.7]);
        assert!((s - 2.0 * 0.5 * (-1.0 - 1.4)).abs() < 1e-12);
    }

    #[test]
    fn alternating_scalar() {
        let inst = scalar_inst(0.5, 2.0);
        let r = alternating_sdp(&inst, &BoxQ::root(&inst), 1e-4, 50, &opts()).unwrap();
        // centroid gain 0.625 gives -5, gain 1 gives -6
        assert!((r.best.s + 6.0).abs() < 1e-5, "{:?}", r);
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-6);
        }
    }

    #[test]
    fn mccormick_examples() {
        let (lo, hi) = mccormick_interval((0.0, 1.0), (0.0, 1.0), 0.5, 0.5);
        assert!((lo - 0.0).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
        let (lo, hi) = mccormick_interval((0.3, 0.3), (0.2, 0.9), 0.3, 0.6);
        assert!((lo - 0.18).abs() < 1e-15 && (hi - 0.18).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mccormick_contains_product(lp in -1.0f64..0.0, wp in 0.0f64..1.0, lk in 0.0f64..0.5, wk in 0.0f64..0.5, tp in 0.0f64..1.0, tk in 0.0f64..1.0) {
            let (up, uk) = (lp + wp, lk + wk);
            let (p, k) = (lp + tp * wp, lk + tk * wk);
            let (lo, hi) = mccormick_interval((lp, up), (lk, uk), p, k);
            prop_assert!(lo <= p * k + 1e-12 && p * k <= hi + 1e-12);
            let bx = BoxQ { p_box: vec![(lp, up)], k_box: vec![(lk, uk)] };
            let lay = RelaxLayout { n_p: 1, m: 1 };
            let x = [p, k, p * k];
            for r in mccormick_w(&bx, lay) {
                prop_assert!(r.eval(&x) <= r.rhs + 1e-12);
            }
        }
    }

    #[test]
    fn relaxation_bounds_scalar() {
        let inst = scalar_inst(0.5, 2.0);
        let l = lower_bound_relax(&inst, &BoxQ::root(&inst), &opts()).unwrap();
        assert!(l <= -6.0 + 1e-6, "{l}");
        let pt = BoxQ { p_box: vec![(0.4, 0.4)], k_box: vec![(0.7, 0.7)] };
        let l = lower_bound_relax(&inst, &pt, &opts()).unwrap();
        let exact = inst.objective(&[0.4], &[0.7]);
        assert!((l - exact).abs() < 2e-6, "{l} vs {exact}");
    }

    #[test]
    fn relaxation_exact_on_point_boxes_n2() {
        let v = VertexPolytope::from_vertices(vec![vec![2.0, -1.0, 0.5], vec![1.0, -2.0, 0.7]]).unwrap();
        let inst = BmiInstance::new(v, 3.0, 12.0, 1e-3).unwrap();
        let (p, k) = ([0.8, 0.1, 0.4], [0.6, 0.9]);
        let bx = BoxQ { p_box: p.iter().map(|x| (*x, *x)).collect(), k_box: k.iter().map(|x| (*x, *x)).collect() };
        let l = lower_bound_relax(&inst, &bx, &opts()).unwrap();
        let u = inst.objective(&p, &k);
        assert!((l - u).abs() < 2e-6, "{l} vs {u}");
    }

    #[test]
    fn bnb_scalar_optimum() {
        let inst = scalar_inst(0.5, 2.0);
        let o = BnbOptions { parallel: false, ..Default::default() };
        let (sol, out) = branch_and_bound(&inst, &o).unwrap();
        assert!((sol.s_star + 6.0).abs() < 1e-3, "{sol:?}");
        assert!(sol.verified && out.converged);
        assert!((sol.k_star[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bnb_serial_and_parallel_agree() {
        let v = VertexPolytope::from_vertices(vec![vec![-1.0, 1.0], vec![0.5, 2.0]]).unwrap();
        let inst = BmiInstance::new(v, 0.5, 2.0, 1e-3).unwrap();
        let a = branch_and_bound_normalized(&inst, &BnbOptions { parallel: false, ..Default::default() }).unwrap();
        let b = branch_and_bound_normalized(&inst, &BnbOptions { parallel: true, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink_gain_set(&[3.0, 7.0, 5.0]), (3.0, 7.0));
        let (lo, hi) = shrink_gain_set(&[4.0, 4.0]);
        assert!((lo - 3.98).abs() < 1e-12 && (hi - 4.02).abs() < 1e-12);
    }

    #[test]
    fn interpolation_examples() {
        assert!((interpolate_gain(&[0.5, 0.5], &[1.0, 1.0], &[2.0, 4.0]) - 3.0).abs() < 1e-15);
        assert!((interpolate_gain(&[0.5, 0.5], &[1.0, 3.0], &[2.0, 4.0]) - 3.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn interpolated_gain_in_range(t in proptest::collection::vec(0.01f64..1.0, 3), b in proptest::collection::vec(0.1f64..5.0, 3), k in proptest::collection::vec(1.0f64..9.0, 3), neg in proptest::bool::ANY) {
            let bs: Vec<f64> = b.iter().map(|x| if neg { -x } else { *x }).collect();
            let g = interpolate_gain(&t, &bs, &k);
            let lo = k.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(g >= lo - 1e-12 && g <= hi + 1e-12);
        }
    }

    #[test]
    fn verify_c1_scalar() {
        let v = VertexPolytope::from_vertices(vec![vec![-1.0, 1.0]]).unwrap();
        let p = DMatrix::from_element(1, 1, 1.0);
        let c = verify_c1(&p, 5.9, &v, 1.0, 2.0, 1e-9);
        assert!(c.passed);
        assert!((c.gains[0] - 2.0).abs() < 1e-9);
        assert!(!verify_c1(&p, 6.1, &v, 1.0, 2.0, 1e-9).passed);
    }
}
