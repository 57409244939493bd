//! Wolfe's minimum-norm-point algorithm over a base polytope given by a greedy oracle.
//!
//! The corral's affine minimizer is computed from a QR factorization of the
//! augmented vertex matrix [1ᵀ; Q], updated by modified Gram–Schmidt with one
//! reorthogonalization pass on insertion and by Givens rotations on deletion.

use crate::error::{Error, Result};
use crate::lovasz::decreasing_order;
use crate::setfn::Minor;

/// A base polytope accessed through its greedy vertices.
pub trait VertexOracle {
    fn dim(&self) -> usize;
    /// Writes the vertex generated by adding elements in `order`.
    fn vertex(&self, order: &[usize], out: &mut [f64]);
}

/// Vertices of B(λG − z) for a minor G and a modular shift z (local coordinates).
pub struct ShiftedMinor<'a, 'b> {
    pub minor: &'b Minor<'a>,
    pub lambda: f64,
    pub z: &'b [f64],
}

impl VertexOracle for ShiftedMinor<'_, '_> {
    fn dim(&self) -> usize {
        self.minor.size()
    }

    fn vertex(&self, order: &[usize], out: &mut [f64]) {
        let mut inc = vec![0.0; order.len()];
        self.minor.increments(order, &mut inc);
        for (k, &j) in order.iter().enumerate() {
            out[j] = self.lambda * inc[k] - self.z[j];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MnpOutcome {
    pub x: Vec<f64>,
    /// Final Wolfe gap ‖x‖² − min_{q ∈ B} xᵀq.
    pub gap: f64,
    pub major_cycles: usize,
    pub corral_size: usize,
}

/// Minimum-norm-point solver. Keeps the last corral so that a subsequent solve
/// on a nearby polytope of the same dimension can start from it.
#[derive(Clone, Debug, Default)]
pub struct MinNormPoint {
    orders: Vec<Vec<usize>>,
    weights: Vec<f64>,
    /// Overrides the default cap of 100·p major cycles.
    pub max_major: Option<usize>,
}

struct AffineQr {
    n_rows: usize,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl AffineQr {
    fn new(n_rows: usize) -> Self {
        Self {
            n_rows,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    /// Appends the column [1; v]. Returns false, leaving the factorization
    /// unchanged, when the column is numerically dependent on the current ones.
    fn push(&mut self, v: &[f64]) -> bool {
        let mut m = Vec::with_capacity(self.n_rows);
        m.push(1.0);
        m.extend_from_slice(v);
        let norm0 = dot(&m, &m).sqrt();
        let k = self.q.len();
        let mut coef = vec![0.0; k + 1];
        for _pass in 0..2 {
            for (c, qc) in self.q.iter().enumerate() {
                let a = dot(qc, &m);
                coef[c] += a;
                for (mi, qi) in m.iter_mut().zip(qc) {
                    *mi -= a * qi;
                }
            }
        }
        let rho = dot(&m, &m).sqrt();
        if !(rho > 1e-12 * norm0) {
            return false;
        }
        for mi in &mut m {
            *mi /= rho;
        }
        coef[k] = rho;
        self.q.push(m);
        self.r.push(coef);
        true
    }

    fn remove(&mut self, j: usize) {
        self.r.remove(j);
        let n = self.r.len();
        for c in j..n {
            let a = self.r[c][c];
            let b = self.r[c][c + 1];
            let h = a.hypot(b);
            if h > 0.0 {
                let (cs, sn) = (a / h, b / h);
                self.r[c][c] = h;
                for c2 in c + 1..n {
                    let (x, y) = (self.r[c2][c], self.r[c2][c + 1]);
                    self.r[c2][c] = cs * x + sn * y;
                    self.r[c2][c + 1] = -sn * x + cs * y;
                }
                let (left, right) = self.q.split_at_mut(c + 1);
                let (qa, qb) = (&mut left[c], &mut right[0]);
                for (x, y) in qa.iter_mut().zip(qb.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = cs * u + sn * v;
                    *y = -sn * u + cs * v;
                }
            }
            self.r[c].pop();
        }
        self.q.pop();
    }

    /// Coefficients β with Σβ = 1 minimizing ‖Σ β_i q_i‖.
    fn affine_minimizer(&self) -> Vec<f64> {
        let n = self.r.len();
        // Rᵀ y = 1
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = 1.0;
            for (k, yk) in y.iter().enumerate().take(i) {
                s -= self.r[i][k] * yk;
            }
            y[i] = s / self.r[i][i];
        }
        // R β = y
        let mut beta = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, bk) in beta.iter().enumerate().skip(i + 1) {
                s -= self.r[k][i] * bk;
            }
            beta[i] = s / self.r[i][i];
        }
        let total: f64 = beta.iter().sum();
        beta.iter().map(|b| b / total).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combine(vertices: &[Vec<f64>], weights: &[f64], p: usize) -> Vec<f64> {
    let mut x = vec![0.0; p];
    for (q, &a) in vertices.iter().zip(weights) {
        for (xi, qi) in x.iter_mut().zip(q) {
            *xi += a * qi;
        }
    }
    x
}

/// Moves the weights to the affine minimizer of the corral, dropping vertices
/// whenever the minimizer leaves the convex hull.
fn minor_cycles(
    qr: &mut AffineQr,
    vertices: &mut Vec<Vec<f64>>,
    orders: &mut Vec<Vec<usize>>,
    alpha: &mut Vec<f64>,
) {
    loop {
        let beta = qr.affine_minimizer();
        if beta.iter().all(|&b| b > 1e-14) {
            *alpha = beta;
            return;
        }
        let mut theta = f64::INFINITY;
        let mut drop = 0;
        for (i, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
            if b <= 1e-14 && a - b > 0.0 {
                let t = a / (a - b);
                if t < theta {
                    theta = t;
                    drop = i;
                }
            }
        }
        if !theta.is_finite() {
            *alpha = beta;
            return;
        }
        let theta = theta.clamp(0.0, 1.0);
        for (a, b) in alpha.iter_mut().zip(&beta) {
            *a = (1.0 - theta) * *a + theta * b;
        }
        alpha[drop] = 0.0;
        let mut i = alpha.len();
        while i > 0 {
            i -= 1;
            if alpha[i] <= 1e-14 {
                qr.remove(i);
                vertices.remove(i);
                orders.remove(i);
                alpha.remove(i);
            }
        }
        let total: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= total);
        if vertices.len() == 1 {
            return;
        }
    }
}

impl MinNormPoint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops the stored corral.
    pub fn reset(&mut self) {
        self.orders.clear();
        self.weights.clear();
    }

    /// Finds the point of minimum Euclidean norm in the polytope. Stops once the
    /// Wolfe gap is at most `tol²` (which bounds the distance to the optimum by
    /// `tol`), or when the gap reaches floating-point resolution. `hint` orders
    /// the starting vertex when there is no stored corral.
    pub fn solve(
        &mut self,
        oracle: &dyn VertexOracle,
        hint: &[f64],
        tol: f64,
    ) -> Result<MnpOutcome> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let p = oracle.dim();
        if p == 0 {
            return Ok(MnpOutcome {
                x: Vec::new(),
                gap: 0.0,
                major_cycles: 0,
                corral_size: 0,
            });
        }
        let cap = self.max_major.unwrap_or((100 * p).max(200));
        let mut qr = AffineQr::new(p + 1);
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut orders: Vec<Vec<usize>> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();

        let warm = self.orders.len() == self.weights.len()
            && !self.orders.is_empty()
            && self.orders.iter().all(|o| o.len() == p);
        if warm {
            for (o, &a) in self.orders.iter().zip(&self.weights) {
                let mut v = vec![0.0; p];
                oracle.vertex(o, &mut v);
                if qr.push(&v) {
                    vertices.push(v);
                    orders.push(o.clone());
                    alpha.push(a);
                }
            }
            let total: f64 = alpha.iter().sum();
            if vertices.is_empty() || !(total > 0.0) {
                qr = AffineQr::new(p + 1);
                vertices.clear();
                orders.clear();
                alpha.clear();
            } else {
                alpha.iter_mut().for_each(|a| *a /= total);
            }
        }
        if vertices.is_empty() {
            let order = decreasing_order(hint);
            let mut v = vec![0.0; p];
            oracle.vertex(&order, &mut v);
            qr.push(&v);
            vertices.push(v);
            orders.push(order);
            alpha.push(1.0);
        }

        if vertices.len() > 1 {
            minor_cycles(&mut qr, &mut vertices, &mut orders, &mut alpha);
        }
        let mut x = combine(&vertices, &alpha, p);
        let mut scale = vertices.iter().map(|v| dot(v, v)).fold(0.0, f64::max);
        let mut gap = f64::INFINITY;
        let mut majors = 0;
        let mut q = vec![0.0; p];
        let mut converged = false;
        while majors < cap {
            majors += 1;
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let order = decreasing_order(&neg);
            oracle.vertex(&order, &mut q);
            let xx = dot(&x, &x);
            gap = xx - dot(&x, &q);
            scale = scale.max(dot(&q, &q));
            if gap <= tol * tol || gap <= 1e-15 * scale {
                converged = true;
                break;
            }
            if vertices.iter().any(|v| v == &q) {
                converged = true;
                break;
            }
            if !qr.push(&q) {
                converged = true;
                break;
            }
            vertices.push(q.clone());
            orders.push(order.clone());
            alpha.push(0.0);

            minor_cycles(&mut qr, &mut vertices, &mut orders, &mut alpha);
            let next = combine(&vertices, &alpha, p);
            let improved = dot(&next, &next) < xx;
            x = next;
            // The new vertex was discarded without progress: numerical stall.
            if !improved && !orders.contains(&order) {
                converged = true;
                break;
            }
        }
        self.orders = orders;
        self.weights = alpha;
        if !converged {
            return Err(Error::NonConvergence {
                iterations: majors,
                gap,
            });
        }
        Ok(MnpOutcome {
            corral_size: self.orders.len(),
            x,
            gap: gap.max(0.0),
            major_cycles: majors,
        })
    }
}
