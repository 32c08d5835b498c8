//! Cone blocks and their algebra.
//!
//! Second-order blocks use the Jordan algebra with identity `e = (1, 0, …, 0)`.
//! Rotated blocks `{(u, v, w) : 2uv ≥ ‖w‖², u, v ≥ 0}` are mapped onto the
//! second-order cone by the symmetric orthogonal involution
//! `T(u, v, w) = ((u + v)/√2, (u − v)/√2, w)`; every operation below is the
//! second-order operation conjugated by `T`, so rotated blocks never need
//! auxiliary variables.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeKind {
    Free,
    #[serde(alias = "nonneg")]
    NonNegative,
    #[serde(alias = "soc")]
    SecondOrder,
    #[serde(alias = "rsoc")]
    RotatedSecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cone {
    #[serde(rename = "type")]
    pub kind: ConeKind,
    pub dim: usize,
}

impl Cone {
    pub fn new(kind: ConeKind, dim: usize) -> Self {
        Self { kind, dim }
    }
    pub fn free(dim: usize) -> Self {
        Self::new(ConeKind::Free, dim)
    }
    pub fn nonneg(dim: usize) -> Self {
        Self::new(ConeKind::NonNegative, dim)
    }
    pub fn soc(dim: usize) -> Self {
        Self::new(ConeKind::SecondOrder, dim)
    }
    pub fn rsoc(dim: usize) -> Self {
        Self::new(ConeKind::RotatedSecondOrder, dim)
    }

    /// Minimum admissible dimension for the kind.
    pub fn min_dim(kind: ConeKind) -> usize {
        match kind {
            ConeKind::Free | ConeKind::NonNegative => 1,
            ConeKind::SecondOrder => 1,
            ConeKind::RotatedSecondOrder => 2,
        }
    }

    /// Barrier degree contributed to the complementarity measure.
    pub fn degree(&self) -> usize {
        match self.kind {
            ConeKind::Free => 0,
            ConeKind::NonNegative => self.dim,
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => 1,
        }
    }

    pub fn is_soc_like(&self) -> bool {
        matches!(self.kind, ConeKind::SecondOrder | ConeKind::RotatedSecondOrder)
    }

    fn rotated(&self) -> bool {
        self.kind == ConeKind::RotatedSecondOrder
    }

    /// Exact membership test in the block's native coordinates.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            ConeKind::Free => x.iter().all(|v| v.is_finite()),
            ConeKind::NonNegative => x.iter().all(|&v| v >= 0.0),
            ConeKind::SecondOrder => x[0] >= 0.0 && x[0] * x[0] >= sumsq(&x[1..]),
            ConeKind::RotatedSecondOrder => {
                x[0] >= 0.0 && x[1] >= 0.0 && 2.0 * x[0] * x[1] >= sumsq(&x[2..])
            }
        }
    }

    /// Distance-like violation: zero inside the cone, positive outside.
    pub fn violation(&self, x: &[f64]) -> f64 {
        (-self.margin(x)).max(0.0)
    }

    /// Smallest "eigenvalue" of `x` in the Jordan algebra (for SOC-like blocks
    /// `x₀ − ‖x₁‖` in second-order coordinates). Positive iff `x` is interior.
    pub fn margin(&self, x: &[f64]) -> f64 {
        match self.kind {
            ConeKind::Free => f64::INFINITY,
            ConeKind::NonNegative => x.iter().cloned().fold(f64::INFINITY, f64::min),
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                let z = self.to_soc(x);
                z[0] - norm(&z[1..])
            }
        }
    }

    /// `x += a·e` for the block's identity element.
    pub fn add_identity(&self, x: &mut [f64], a: f64) {
        match self.kind {
            ConeKind::Free => {}
            ConeKind::NonNegative => x.iter_mut().for_each(|v| *v += a),
            ConeKind::SecondOrder => x[0] += a,
            ConeKind::RotatedSecondOrder => {
                x[0] += a * FRAC_1_SQRT_2;
                x[1] += a * FRAC_1_SQRT_2;
            }
        }
    }

    /// Identity element `e` written into `out`.
    pub fn identity(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.add_identity(out, 1.0);
    }

    /// Map native coordinates to second-order coordinates (identity unless rotated).
    pub fn to_soc(&self, x: &[f64]) -> Vec<f64> {
        let mut z = x.to_vec();
        if self.rotated() {
            rotate(&mut z);
        }
        z
    }

    fn from_soc_in_place(&self, z: &mut [f64]) {
        if self.rotated() {
            rotate(z);
        }
    }

    /// Euclidean projection onto the block.
    pub fn project(&self, x: &mut [f64]) {
        match self.kind {
            ConeKind::Free => {}
            ConeKind::NonNegative => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                // T is orthogonal, so projecting in second-order coordinates is exact.
                if self.rotated() {
                    rotate(x);
                }
                let t = x[0];
                let r = norm(&x[1..]);
                if r <= t {
                } else if r <= -t {
                    x.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    let a = 0.5 * (t + r);
                    x[0] = a;
                    let s = a / r;
                    x[1..].iter_mut().for_each(|v| *v *= s);
                }
                if self.rotated() {
                    rotate(x);
                }
            }
        }
    }

    /// Largest `α ≥ 0` (capped at `cap`) with `z + α dz` in the closed cone.
    /// `z` must be interior.
    pub fn step_length(&self, z: &[f64], dz: &[f64], cap: f64) -> f64 {
        match self.kind {
            ConeKind::Free => cap,
            ConeKind::NonNegative => {
                let mut a = cap;
                for (zi, di) in z.iter().zip(dz) {
                    if *di < 0.0 {
                        a = a.min(-zi / di);
                    }
                }
                a
            }
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                let zs = self.to_soc(z);
                let ds = self.to_soc(dz);
                soc_step(&zs, &ds, cap)
            }
        }
    }

    /// Jordan product `a ∘ b` in native coordinates.
    pub fn jordan_product(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self.kind {
            ConeKind::Free => out.iter_mut().for_each(|v| *v = 0.0),
            ConeKind::NonNegative => {
                for i in 0..out.len() {
                    out[i] = a[i] * b[i];
                }
            }
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                let za = self.to_soc(a);
                let zb = self.to_soc(b);
                out[0] = dot(&za, &zb);
                for i in 1..out.len() {
                    out[i] = za[0] * zb[i] + zb[0] * za[i];
                }
                self.from_soc_in_place(out);
            }
        }
    }

    /// Solve `λ ∘ z = r` for `z` (λ interior).
    pub fn jordan_div(&self, lambda: &[f64], r: &[f64], out: &mut [f64]) {
        match self.kind {
            ConeKind::Free => out.iter_mut().for_each(|v| *v = 0.0),
            ConeKind::NonNegative => {
                for i in 0..out.len() {
                    out[i] = r[i] / lambda[i];
                }
            }
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                let l = self.to_soc(lambda);
                let rr = self.to_soc(r);
                let rho = (l[0] - norm(&l[1..])) * (l[0] + norm(&l[1..]));
                let z0 = (l[0] * rr[0] - dot(&l[1..], &rr[1..])) / rho;
                out[0] = z0;
                for i in 1..out.len() {
                    out[i] = (rr[i] - z0 * l[i]) / l[0];
                }
                self.from_soc_in_place(out);
            }
        }
    }
}

/// Nesterov–Todd scaling of one block: `W x = W⁻¹ s = λ`.
///
/// For nonnegative blocks `w` holds the diagonal of `W`; for second-order
/// blocks `w` and `w_inv` are dense row-major `d × d` matrices in native
/// coordinates.
#[derive(Debug, Clone)]
pub struct NtScaling {
    pub cone: Cone,
    pub w: Vec<f64>,
    pub w_inv: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl NtScaling {
    pub fn new(cone: Cone) -> Self {
        let d = cone.dim;
        let size = match cone.kind {
            ConeKind::Free => 0,
            ConeKind::NonNegative => d,
            _ => d * d,
        };
        let lambda_len = if cone.kind == ConeKind::Free { 0 } else { d };
        Self {
            cone,
            w: vec![0.0; size],
            w_inv: vec![0.0; size],
            lambda: vec![0.0; lambda_len],
        }
    }

    /// Recompute the scaling from interior points `x` and `s`.
    pub fn update(&mut self, x: &[f64], s: &[f64]) {
        let d = self.cone.dim;
        match self.cone.kind {
            ConeKind::Free => {}
            ConeKind::NonNegative => {
                for i in 0..d {
                    let w = (s[i] / x[i]).sqrt();
                    self.w[i] = w;
                    self.w_inv[i] = 1.0 / w;
                    self.lambda[i] = (s[i] * x[i]).sqrt();
                }
            }
            ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => {
                let xs = self.cone.to_soc(x);
                let ss = self.cone.to_soc(s);
                let xn = soc_det_sqrt(&xs);
                let sn = soc_det_sqrt(&ss);
                let xb: Vec<f64> = xs.iter().map(|v| v / xn).collect();
                let sb: Vec<f64> = ss.iter().map(|v| v / sn).collect();
                let gamma = ((1.0 + dot(&xb, &sb)) * 0.5).sqrt();
                // w̄ = (s̄ + J x̄) / 2γ
                let mut wb = vec![0.0; d];
                wb[0] = (sb[0] + xb[0]) / (2.0 * gamma);
                for i in 1..d {
                    wb[i] = (sb[i] - xb[i]) / (2.0 * gamma);
                }
                let beta = (sn / xn).sqrt();
                let nv = (2.0 * (wb[0] + 1.0)).sqrt();
                let mut v = wb.clone();
                v[0] += 1.0;
                v.iter_mut().for_each(|a| *a /= nv);

                // W = β(2vvᵀ − J), W⁻¹ = β⁻¹(2Jv vᵀJ − J), in second-order coordinates.
                let mut w = vec![0.0; d * d];
                let mut wi = vec![0.0; d * d];
                for i in 0..d {
                    let ji = if i == 0 { 1.0 } else { -1.0 };
                    for j in 0..d {
                        let jj = if j == 0 { 1.0 } else { -1.0 };
                        let jdiag = if i == j { ji } else { 0.0 };
                        w[i * d + j] = beta * (2.0 * v[i] * v[j] - jdiag);
                        wi[i * d + j] = (2.0 * ji * v[i] * v[j] * jj - jdiag) / beta;
                    }
                }
                if self.cone.rotated() {
                    conjugate_by_rotation(&mut w, d);
                    conjugate_by_rotation(&mut wi, d);
                }
                self.w = w;
                self.w_inv = wi;
                let lam = self.apply_w(x);
                self.lambda = lam;
            }
        }
    }

    /// `W v`
    pub fn apply_w(&self, v: &[f64]) -> Vec<f64> {
        self.apply(&self.w, v)
    }

    /// `W⁻¹ v`
    pub fn apply_w_inv(&self, v: &[f64]) -> Vec<f64> {
        self.apply(&self.w_inv, v)
    }

    /// `W² v`
    pub fn apply_w2(&self, v: &[f64]) -> Vec<f64> {
        let t = self.apply_w(v);
        self.apply_w(&t)
    }

    fn apply(&self, m: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.cone.dim;
        match self.cone.kind {
            ConeKind::Free => vec![0.0; d],
            ConeKind::NonNegative => m.iter().zip(v).map(|(a, b)| a * b).collect(),
            _ => (0..d)
                .map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum())
                .collect(),
        }
    }

    /// Entry `(i, j)` of `W²` for assembling the KKT matrix.
    pub fn w2_entry(&self, i: usize, j: usize) -> f64 {
        let d = self.cone.dim;
        match self.cone.kind {
            ConeKind::Free => 0.0,
            ConeKind::NonNegative => {
                if i == j {
                    self.w[i] * self.w[i]
                } else {
                    0.0
                }
            }
            _ => (0..d).map(|k| self.w[i * d + k] * self.w[k * d + j]).sum(),
        }
    }
}

fn conjugate_by_rotation(m: &mut [f64], d: usize) {
    // rows
    for j in 0..d {
        let (a, b) = (m[j], m[d + j]);
        m[j] = (a + b) * FRAC_1_SQRT_2;
        m[d + j] = (a - b) * FRAC_1_SQRT_2;
    }
    // columns
    for i in 0..d {
        let (a, b) = (m[i * d], m[i * d + 1]);
        m[i * d] = (a + b) * FRAC_1_SQRT_2;
        m[i * d + 1] = (a - b) * FRAC_1_SQRT_2;
    }
}

fn rotate(z: &mut [f64]) {
    let (u, v) = (z[0], z[1]);
    z[0] = (u + v) * FRAC_1_SQRT_2;
    z[1] = (u - v) * FRAC_1_SQRT_2;
}

fn soc_det_sqrt(z: &[f64]) -> f64 {
    let r = norm(&z[1..]);
    ((z[0] - r) * (z[0] + r)).sqrt()
}

fn soc_step(z: &[f64], dz: &[f64], cap: f64) -> f64 {
    // q(α) = (z₀ + α d₀)² − ‖z₁ + α d₁‖² = a α² + 2b α + c, with c > 0.
    let a = dz[0] * dz[0] - sumsq(&dz[1..]);
    let b = z[0] * dz[0] - dot(&z[1..], &dz[1..]);
    let r = norm(&z[1..]);
    let c = (z[0] - r) * (z[0] + r);
    let mut alpha = cap;
    if dz[0] < 0.0 {
        alpha = alpha.min(-z[0] / dz[0]);
    }
    let disc = b * b - a * c;
    if a.abs() <= f64::EPSILON * (b.abs() + c.abs()) {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
    } else if disc >= 0.0 {
        // Stable roots of a α² + 2b α + c.
        let sq = disc.sqrt();
        let qq = -(b + b.signum() * sq);
        let r1 = if a != 0.0 { qq / a } else { f64::INFINITY };
        let r2 = if qq != 0.0 { c / qq } else { f64::INFINITY };
        for root in [r1, r2] {
            if root > 0.0 && root.is_finite() {
                alpha = alpha.min(root);
            }
        }
    }
    alpha.max(0.0)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sumsq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sumsq(a).sqrt()
}
