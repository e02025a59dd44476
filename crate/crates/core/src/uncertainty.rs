//! Uncertainty sets: a box of physical parameters, its gridded image in
//! coefficient space, a bounding convex polytope, the vertex eigenvalue bound
//! used for the expansion factor, and coefficient rate bounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::lambda_max_unchecked;
use crate::lp::convex_weights;
use crate::plant::{lyapunov_derivative, ppa_linearize, PlantError, PpaParams};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("grid needs at least 2 points per axis, got {0}")]
    Grid(usize),
    #[error("interval {0} has lower end above upper end")]
    Interval(usize),
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("points have inconsistent dimensions")]
    Dimension,
    #[error("parameter map failed: {0}")]
    Map(String),
    #[error("vertex input gains do not share one sign")]
    MixedSign,
}

impl From<PlantError> for UncertaintyError {
    fn from(e: PlantError) -> Self {
        UncertaintyError::Map(e.to_string())
    }
}

/// Axis-aligned box of physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub intervals: Vec<(f64, f64)>,
}

impl ParamBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, UncertaintyError> {
        for (i, (lo, hi)) in intervals.iter().enumerate() {
            if !(lo <= hi) {
                return Err(UncertaintyError::Interval(i));
            }
        }
        Ok(Self { intervals })
    }
}

/// Evaluates `map` on the full tensor grid of `grid` points per axis. The
/// first axis varies slowest.
pub fn map_box_to_cloud<F>(
    map: F,
    bx: &ParamBox,
    grid: usize,
) -> Result<Vec<Vec<f64>>, UncertaintyError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, UncertaintyError>,
{
    if grid < 2 {
        return Err(UncertaintyError::Grid(grid));
    }
    let p = bx.intervals.len();
    let total = grid.pow(p as u32);
    let mut out = Vec::with_capacity(total);
    let mut theta = vec![0.0; p];
    for idx in 0..total {
        let mut rem = idx;
        for ax in (0..p).rev() {
            let k = rem % grid;
            rem /= grid;
            let (lo, hi) = bx.intervals[ax];
            theta[ax] = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
        }
        out.push(map(&theta)?);
    }
    Ok(out)
}

/// Bounding polytope in `(a_1, .., a_N, b)` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexPolytope {
    pub vertices: Vec<Vec<f64>>,
    /// Dimension of the affine span of the hulled cloud.
    pub span_dim: usize,
}

impl VertexPolytope {
    /// Builds a polytope from explicit vertices (no hulling).
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self, UncertaintyError> {
        let d = vertices.first().ok_or(UncertaintyError::EmptyCloud)?.len();
        if d < 2 || vertices.iter().any(|v| v.len() != d) {
            return Err(UncertaintyError::Dimension);
        }
        let poly = Self { vertices, span_dim: d };
        poly.check_sign()?;
        Ok(poly)
    }

    /// Plant order `N`.
    pub fn order(&self) -> usize {
        self.vertices[0].len() - 1
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Coefficients `a_1..a_N` of vertex `i`.
    pub fn a(&self, i: usize) -> &[f64] {
        let v = &self.vertices[i];
        &v[..v.len() - 1]
    }

    pub fn b(&self, i: usize) -> f64 {
        *self.vertices[i].last().expect("nonempty vertex")
    }

    fn check_sign(&self) -> Result<(), UncertaintyError> {
        let pos = (0..self.len()).all(|i| self.b(i) > 0.0);
        let neg = (0..self.len()).all(|i| self.b(i) < 0.0);
        if pos || neg {
            Ok(())
        } else {
            Err(UncertaintyError::MixedSign)
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let d = self.vertices[0].len();
        DMatrix::from_fn(d, self.len(), |r, c| self.vertices[c][r])
    }

    /// Convex weights of `point` over the vertices, if it lies in the hull.
    pub fn weights(&self, point: &[f64], tol: f64) -> Option<Vec<f64>> {
        let (v, p, _) = self.scaled(point);
        convex_weights(&v, &p, tol).map(|w| w.iter().cloned().collect())
    }

    /// Vertex matrix and point rescaled per coordinate to comparable ranges.
    fn scaled(&self, point: &[f64]) -> (DMatrix<f64>, DVector<f64>, Vec<f64>) {
        let mut v = self.matrix();
        let d = v.nrows();
        let mut scales = vec![1.0; d];
        for r in 0..d {
            let row = v.row(r);
            let s = row.max() - row.min();
            let s = if s > 0.0 { s } else { row.amax().max(1.0) };
            scales[r] = s;
            for c in 0..v.ncols() {
                v[(r, c)] /= s;
            }
        }
        let p = DVector::from_iterator(d, point.iter().zip(&scales).map(|(x, s)| x / s));
        (v, p, scales)
    }

    /// Largest membership-LP residual over `cloud`; `None` if a point is outside.
    pub fn contains_all(&self, cloud: &[Vec<f64>], tol: f64) -> bool {
        cloud.iter().all(|p| self.weights(p, tol).is_some())
    }
}

/// Minimal vertex set of the convex hull of `cloud`.
///
/// Coordinates are rescaled to unit range, the affine span is found from the
/// singular values of the centred cloud, and the hull is computed inside that
/// span: endpoints in 1-D, a monotone chain in 2-D and extreme-point LPs above.
pub fn convex_hull(cloud: &[Vec<f64>]) -> Result<VertexPolytope, UncertaintyError> {
    let n = cloud.len();
    if n == 0 {
        return Err(UncertaintyError::EmptyCloud);
    }
    let d = cloud[0].len();
    if cloud.iter().any(|p| p.len() != d) {
        return Err(UncertaintyError::Dimension);
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in cloud {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale: Vec<f64> = (0..d).map(|k| if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 }).collect();
    let mut x = DMatrix::zeros(n, d);
    for (i, p) in cloud.iter().enumerate() {
        for k in 0..d {
            x[(i, k)] = (p[k] - lo[k]) / scale[k];
        }
    }
    let mean = DVector::from_iterator(d, (0..d).map(|k| x.column(k).mean()));
    for i in 0..n {
        for k in 0..d {
            x[(i, k)] -= mean[k];
        }
    }
    let svd = x.clone().svd(false, true);
    let sv = &svd.singular_values;
    let vt = svd.v_t.expect("requested");
    let smax = sv.max();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap());
    let rank = order.iter().filter(|&&i| sv[i] > 1e-9 * smax.max(1e-300)).count();
    let coords = |i: usize| -> Vec<f64> {
        order[..rank]
            .iter()
            .map(|&r| (0..d).map(|k| vt[(r, k)] * x[(i, k)]).sum())
            .collect()
    };
    let ys: Vec<Vec<f64>> = (0..n).map(coords).collect();
    let keep: Vec<usize> = match rank {
        0 => vec![0],
        1 => {
            let (mut imin, mut imax) = (0, 0);
            for i in 0..n {
                if ys[i][0] < ys[imin][0] {
                    imin = i;
                }
                if ys[i][0] > ys[imax][0] {
                    imax = i;
                }
            }
            vec![imin, imax]
        }
        2 => monotone_chain(&ys),
        _ => extreme_points(&ys),
    };
    let vertices = keep.iter().map(|&i| cloud[i].clone()).collect();
    let poly = VertexPolytope { vertices, span_dim: rank };
    poly.check_sign()?;
    Ok(poly)
}

fn monotone_chain(ys: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ys.len()).collect();
    idx.sort_by(|&a, &b| {
        ys[a][0]
            .partial_cmp(&ys[b][0])
            .unwrap()
            .then(ys[a][1].partial_cmp(&ys[b][1]).unwrap())
    });
    idx.dedup_by(|a, b| (ys[*a][0] - ys[*b][0]).abs() < 1e-14 && (ys[*a][1] - ys[*b][1]).abs() < 1e-14);
    if idx.len() < 3 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (ys[a][0] - ys[o][0]) * (ys[b][1] - ys[o][1]) - (ys[a][1] - ys[o][1]) * (ys[b][0] - ys[o][0])
    };
    let tol = 1e-12;
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= tol {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= tol {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn extreme_points(ys: &[Vec<f64>]) -> Vec<usize> {
    let r = ys[0].len();
    let mut alive: Vec<usize> = (0..ys.len()).collect();
    let mut i = 0;
    while i < alive.len() {
        let me = alive[i];
        let others: Vec<usize> = alive.iter().cloned().filter(|&j| j != me).collect();
        let v = DMatrix::from_fn(r, others.len(), |row, c| ys[others[c]][row]);
        let p = DVector::from_vec(ys[me].clone());
        if !others.is_empty() && convex_weights(&v, &p, 1e-10).is_some() {
            alive.remove(i);
        } else {
            i += 1;
        }
    }
    alive
}

/// `max lambda_max((A - B K C)^T P + P (A - B K C))` over vertices and
/// `K in {k_m, k_M}`.
pub fn lambda_max_p_bound(poly: &VertexPolytope, p: &DMatrix<f64>, k_m: f64, k_max: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..poly.len() {
        for k in [k_m, k_max] {
            let q = lyapunov_derivative(poly.a(i), poly.b(i), k, p);
            worst = worst.max(lambda_max_unchecked(&q));
        }
    }
    worst
}

/// Rate bounds on the coefficient matrices: `|A'| <= delta_a`,
/// `|B'| <= delta_b`, `delta = delta_a + k_M delta_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub delta_a: f64,
    pub delta_b: f64,
    pub delta: f64,
}

impl RateBounds {
    pub fn new(delta_a: f64, delta_b: f64, k_max: f64) -> Self {
        Self { delta_a, delta_b, delta: delta_a + k_max * delta_b }
    }
}

/// Uncertainty boxes of the actuator's physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpaBoxes {
    pub g: (f64, f64),
    pub area: (f64, f64),
    pub eps: (f64, f64),
    pub kappa: (f64, f64),
}

impl Default for PpaBoxes {
    fn default() -> Self {
        Self::published()
    }
}

impl PpaBoxes {
    pub fn published() -> Self {
        let e0 = crate::plant::EPS0;
        Self {
            g: (0.5e-3, 2e-3),
            area: (1.2e-3, 1.8e-3),
            eps: (3.5 * e0, 6.5 * e0),
            kappa: (0.08, 0.167),
        }
    }

    /// Order `(G, A, eps, kappa)`.
    pub fn to_param_box(&self) -> ParamBox {
        ParamBox { intervals: vec![self.g, self.area, self.eps, self.kappa] }
    }
}

/// Actuator map `(G, A, eps, kappa) -> (a1, a2, b)` with the operating point
/// at two thirds of the gap.
pub fn ppa_map(m: f64, b_damp: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>, UncertaintyError> {
    move |th: &[f64]| {
        let p = PpaParams { m, b_damp, kappa: th[3], eps: th[2], area: th[1], g: th[0], g_o: 2.0 * th[0] / 3.0 };
        let (a1, a2, b) = ppa_linearize(&p)?;
        Ok(vec![a1, a2, b])
    }
}

/// Actuator rate bounds with `G_o = 2G/3`:
/// `delta_a = 3 max|kappa'| / m` and
/// `delta_b = sqrt(12 sup A / inf G) (sup kappa max|eps'| + sup eps max|kappa'|) / (2 m sqrt(inf eps inf kappa))`.
pub fn ppa_rate_bounds(boxes: &PpaBoxes, max_kappa_rate: f64, max_eps_rate: f64, k_max: f64, m: f64) -> RateBounds {
    let delta_a = 3.0 * max_kappa_rate / m;
    let root = (12.0 * boxes.area.1 / boxes.g.0).sqrt();
    let num = boxes.kappa.1 * max_eps_rate + boxes.eps.1 * max_kappa_rate;
    let den = 2.0 * boxes.eps.0.sqrt() * boxes.kappa.0.sqrt();
    let delta_b = root * num / den / m;
    RateBounds::new(delta_a, delta_b, k_max)
}

/// Rate bounds of the scalar example with `a in [a*/2, a*]`,
/// `b' in [b*, 3b*/2]`, `c in [c*/2, c*]`, `0 < a' <= a*/(2 tau_a)` and
/// `|c'| <= c*/(2 tau_c)`.
///
/// `delta_a = (a*)^3 (c*)^2 / (2 b*) max(3/tau_a, 2/tau_c)` and
/// `delta_b = sqrt(3 b*/2) sqrt(c*) / (a*)^(2/3) (2^(5/3) / (3 tau_a) + 2^(-5/6) / tau_c)`.
pub fn example2_rate_bounds(a_star: f64, b_star: f64, c_star: f64, tau_a: f64, tau_c: f64, k_max: f64) -> RateBounds {
    let delta_a = a_star.powi(3) * c_star * c_star / (2.0 * b_star) * (3.0 / tau_a).max(2.0 / tau_c);
    let delta_b = (1.5 * b_star).sqrt() * c_star.sqrt() / a_star.powf(2.0 / 3.0)
        * (2f64.powf(5.0 / 3.0) / (3.0 * tau_a) + 2f64.powf(-5.0 / 6.0) / tau_c);
    RateBounds::new(delta_a, delta_b, k_max)
}

/// Parameter box of the scalar example.
pub fn example2_box(a_star: f64, b_star: f64, c_star: f64) -> ParamBox {
    ParamBox { intervals: vec![(0.5 * a_star, a_star), (b_star, 1.5 * b_star), (0.5 * c_star, c_star)] }
}

/// Map of the scalar example as a cloud map.
pub fn example2_cloud_map(th: &[f64]) -> Result<Vec<f64>, UncertaintyError> {
    let (a1, b) = crate::plant::example2_map(th[0], th[1], th[2]);
    Ok(vec![a1, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::EPS0;
    use proptest::prelude::*;

    #[test]
    fn grid_of_unit_square() {
        let bx = ParamBox::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let cloud = map_box_to_cloud(|t| Ok(t.to_vec()), &bx, 2).unwrap();
        assert_eq!(cloud, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(map_box_to_cloud(|t| Ok(t.to_vec()), &bx, 1).is_err());
        assert!(ParamBox::new(vec![(1.0, 0.0)]).is_err());
    }

    #[test]
    fn square_hull_drops_centre() {
        let cloud = vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 2.0], vec![0.0, 2.0], vec![0.5, 1.5]];
        let h = convex_hull(&cloud).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(h.span_dim, 2);
        assert!(h.contains_all(&cloud, 1e-9));
    }

    #[test]
    fn collinear_hull_is_segment() {
        let cloud: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, 1.0 + 2.0 * i as f64]).collect();
        let h = convex_hull(&cloud).unwrap();
        assert_eq!(h.span_dim, 1);
        let mut v = h.vertices.clone();
        v.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(v, vec![vec![0.0, 1.0], vec![6.0, 13.0]]);
    }

    #[test]
    fn cube_hull_in_three_dimensions() {
        let bx = ParamBox::new(vec![(0.0, 1.0), (0.0, 1.0), (1.0, 2.0)]).unwrap();
        let cloud = map_box_to_cloud(|t| Ok(t.to_vec()), &bx, 3).unwrap();
        let h = convex_hull(&cloud).unwrap();
        assert_eq!(h.len(), 8);
        assert_eq!(h.span_dim, 3);
        assert!(h.contains_all(&cloud, 1e-9));
    }

    #[test]
    fn ppa_cloud_and_hull() {
        let b = PpaBoxes::published();
        let cloud = map_box_to_cloud(ppa_map(3e-3, 1.79e-2), &b.to_param_box(), 6).unwrap();
        assert_eq!(cloud.len(), 1296);
        let h = convex_hull(&cloud).unwrap();
        assert_eq!(h.span_dim, 2);
        assert!(h.contains_all(&cloud, 1e-9));
        assert!(h.len() >= 4 && h.len() <= 20);
    }

    #[test]
    fn example2_hull_is_small() {
        let cloud = map_box_to_cloud(example2_cloud_map, &example2_box(1.0, 1.0, 1.0), 6).unwrap();
        let h = convex_hull(&cloud).unwrap();
        assert!(h.contains_all(&cloud, 1e-9));
        // curved image boundary: the count grows with grid resolution
        assert!(h.len() >= 5 && h.len() <= 24, "{} vertices", h.len());
        // corners of the box land on hull vertices when they are extreme
        let lo_corner = example2_cloud_map(&[0.5, 1.5, 0.5]).unwrap();
        assert!(h.vertices.iter().any(|v| v == &lo_corner));
    }

    #[test]
    fn scalar_eigen_bound() {
        let poly = VertexPolytope::from_vertices(vec![vec![-1.0, 1.0]]).unwrap();
        let p = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(lambda_max_p_bound(&poly, &p, 0.5, 2.0), -3.0);
        let p3 = DMatrix::from_element(1, 1, 3.0);
        assert_eq!(lambda_max_p_bound(&poly, &p3, 0.5, 2.0), -9.0);
    }

    #[test]
    fn published_rate_bounds() {
        let var = crate::plant::PpaVariation::default();
        let rb = ppa_rate_bounds(&PpaBoxes::published(), var.max_kappa_rate(), var.max_eps_rate(), 86_000.0, 3e-3);
        assert!((rb.delta_a - 69.6).abs() < 1e-9);
        assert!((rb.delta_b - 1.49e-2).abs() < 0.01e-2);
        assert!((rb.delta - 1351.0).abs() < 0.01 * 1351.0);
        let z = ppa_rate_bounds(&PpaBoxes::published(), 0.0, 0.0, 86_000.0, 3e-3);
        assert_eq!(z.delta, 0.0);
        let r1 = ppa_rate_bounds(&PpaBoxes::published(), 0.1, 0.0, 1.0, 3e-3);
        let r2 = ppa_rate_bounds(&PpaBoxes::published(), 0.2, 0.0, 1.0, 3e-3);
        assert!((r2.delta_a - 2.0 * r1.delta_a).abs() < 1e-12);
    }

    #[test]
    fn example2_closed_forms() {
        let rb = example2_rate_bounds(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!((rb.delta_a - 1.5).abs() < 1e-12);
        let r2 = example2_rate_bounds(2.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        assert!((r2.delta_a - 8.0 * rb.delta_a).abs() < 1e-12);
        let frozen = example2_rate_bounds(1.0, 1.0, 1.0, 1e300, 1e300, 1.0);
        assert!(frozen.delta_a < 1e-299 && frozen.delta_b < 1e-299);
    }

    /// Brute-force oracle: sampled coefficient rates never exceed the bounds.
    #[test]
    fn example2_bounds_dominate_sampled_rates() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (a_s, b_s, c_s, ta, tc) in [(1.0, 1.0, 1.0, 1.0, 1.0), (2.0, 3.0, 0.5, 0.3, 2.0), (0.7, 0.2, 4.0, 5.0, 0.1)] {
            let rb = example2_rate_bounds(a_s, b_s, c_s, ta, tc, 1.0);
            let (mut wa, mut wb): (f64, f64) = (0.0, 0.0);
            for _ in 0..20_000 {
                let a = rng.random_range(0.5 * a_s..=a_s);
                let bp = rng.random_range(b_s..=1.5 * b_s);
                let c = rng.random_range(0.5 * c_s..=c_s);
                let ad = rng.random_range(0.0..=a_s / (2.0 * ta));
                let cd = -rng.random_range(0.0..=c_s / (2.0 * tc));
                let a1d = (3.0 * c * c * a * a * ad + 2.0 * a.powi(3) * c * cd) / bp;
                let bd = bp.sqrt() * (-2.0 * c.sqrt() * ad / (3.0 * a.powf(5.0 / 3.0)) + cd / (2.0 * c.sqrt() * a.powf(2.0 / 3.0)));
                wa = wa.max(a1d.abs());
                wb = wb.max(bd.abs());
            }
            assert!(wa <= rb.delta_a * (1.0 + 1e-12), "{wa} > {}", rb.delta_a);
            assert!(wb <= rb.delta_b * (1.0 + 1e-12), "{wb} > {}", rb.delta_b);
            assert!(wb > 0.5 * rb.delta_b);
        }
    }

    /// Brute-force oracle for the actuator: finite differences of the true
    /// coefficient trajectories stay below the bounds.
    #[test]
    fn ppa_bounds_dominate_trajectory_rates() {
        let var = crate::plant::PpaVariation::default();
        let boxes = PpaBoxes::published();
        let rb = ppa_rate_bounds(&boxes, var.max_kappa_rate(), var.max_eps_rate(), 1.0, 3e-3);
        let (g, area) = (boxes.g.0, boxes.area.1);
        let coef = |t: f64| {
            let (k, e) = (var.kappa(t), var.eps(t));
            (3.0 * k / 3e-3, (12.0 * e * area * k / g).sqrt() / 3e-3)
        };
        let h = 1e-6;
        for i in 0..2000 {
            let t = i as f64 * 0.005;
            let (a0, b0) = coef(t);
            let (a1, b1) = coef(t + h);
            assert!(((a1 - a0) / h).abs() <= rb.delta_a * 1.0001);
            assert!(((b1 - b0) / h).abs() <= rb.delta_b * 1.0001);
        }
        assert!(EPS0 > 0.0);
    }

    proptest! {
        #[test]
        fn eigen_bound_dominates_samples(
            a1 in -5.0f64..5.0, a2 in -5.0f64..-0.5, b in 0.5f64..2.0,
            w in 0.0f64..1.0, k in 0.0f64..1.0, p12 in -0.3f64..0.3,
        ) {
            let poly = VertexPolytope::from_vertices(vec![vec![a1, a2, b], vec![a1 + 2.0, a2 - 1.0, b + 0.5]]).unwrap();
            let p = DMatrix::from_row_slice(2, 2, &[1.0, p12, p12, 0.5]);
            let (km, kx) = (1.0, 4.0);
            let bound = lambda_max_p_bound(&poly, &p, km, kx);
            let pt = [a1 + 2.0 * w, a2 - w, b + 0.5 * w];
            let kk = km + (kx - km) * k;
            let q = lyapunov_derivative(&pt[..2], pt[2], kk, &p);
            prop_assert!(lambda_max_unchecked(&q) <= bound + 1e-9);
        }

        #[test]
        fn hull_contains_random_clouds(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cloud: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)]).collect();
            let h = convex_hull(&cloud).unwrap();
            prop_assert!(h.contains_all(&cloud, 1e-9));
            for v in &h.vertices {
                let others: Vec<Vec<f64>> = h.vertices.iter().filter(|u| *u != v).cloned().collect();
                let sub = VertexPolytope { vertices: others, span_dim: 3 };
                prop_assert!(sub.weights(v, 1e-9).is_none());
            }
        }
    }
}
