//! Gradient integrands, the discrete energy, discrete Hessians, the monotone
//! Monge–Ampère operator and the two discrete convexity predicates.

use crate::grid::{backward_gradient, InteriorFunction, Mesh, MeshFunction};
use crate::MaError;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

/// Integrand `Φ` of the energy `J_h(v) = h² Σ Φ(∇_h v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phi {
    /// `|p|²`
    Squared,
    /// `√(1 + |p|²)`
    Sqrt1pp,
    /// `|p₁| + |p₂|`
    L1,
    /// `|p|`
    Euclid,
}

impl Phi {
    pub const ALL: [Phi; 4] = [Phi::Squared, Phi::Sqrt1pp, Phi::L1, Phi::Euclid];

    pub fn name(self) -> &'static str {
        match self {
            Phi::Squared => "squared",
            Phi::Sqrt1pp => "sqrt1pp",
            Phi::L1 => "l1",
            Phi::Euclid => "euclid",
        }
    }

    pub fn eval(self, p: [f64; 2]) -> f64 {
        match self {
            Phi::Squared => p[0] * p[0] + p[1] * p[1],
            Phi::Sqrt1pp => (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt(),
            Phi::L1 => p[0].abs() + p[1].abs(),
            Phi::Euclid => p[0].hypot(p[1]),
        }
    }

    /// Gradient of `Φ`; an error at points where `Φ` is not differentiable.
    pub fn grad(self, p: [f64; 2]) -> Result<[f64; 2], MaError> {
        match self {
            Phi::Squared => Ok([2.0 * p[0], 2.0 * p[1]]),
            Phi::Sqrt1pp => {
                let r = self.eval(p);
                Ok([p[0] / r, p[1] / r])
            }
            Phi::L1 => {
                if p[0] == 0.0 || p[1] == 0.0 {
                    Err(MaError::Nondifferentiable(format!("l1 at {p:?}")))
                } else {
                    Ok([p[0].signum(), p[1].signum()])
                }
            }
            Phi::Euclid => {
                let r = self.eval(p);
                if r == 0.0 {
                    Err(MaError::Nondifferentiable("euclid at the origin".into()))
                } else {
                    Ok([p[0] / r, p[1] / r])
                }
            }
        }
    }
}

impl FromStr for Phi {
    type Err = MaError;
    fn from_str(s: &str) -> Result<Self, MaError> {
        Phi::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| MaError::InvalidData(format!("unknown phi `{s}` (expected squared, sqrt1pp, l1 or euclid)")))
    }
}

impl std::fmt::Display for Phi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `J_h(v) = h² Σ_{x ∈ M_h⁻} Φ(∇_h v(x))`.
pub fn j_h(v: &MeshFunction, phi: Phi) -> f64 {
    let h = v.mesh().h();
    h * h * backward_gradient(v).values().iter().map(|&g| phi.eval(g)).sum::<f64>()
}

/// Symmetric 2×2 discrete Hessians on interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianField {
    mesh: Mesh,
    /// `(H₁₁, H₂₂, H₁₂)` in [`Mesh::interior`] order.
    entries: Vec<[f64; 3]>,
}

impl HessianField {
    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn entries(&self) -> &[[f64; 3]] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> [f64; 3] {
        self.entries[self.mesh.interior_index(i, j)]
    }

    /// CSV with header `i,j,h11,h22,h12`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,h11,h22,h12\n");
        for ((i, j), e) in self.mesh.interior().zip(&self.entries) {
            let _ = writeln!(out, "{i},{j},{:e},{:e},{:e}", e[0], e[1], e[2]);
        }
        out
    }
}

pub fn discrete_hessian(v: &MeshFunction) -> HessianField {
    let mesh = v.mesh();
    let h2 = mesh.h() * mesh.h();
    let entries = mesh
        .interior()
        .map(|(i, j)| {
            let c = v.get(i, j);
            [
                (v.get(i + 1, j) - 2.0 * c + v.get(i - 1, j)) / h2,
                (v.get(i, j + 1) - 2.0 * c + v.get(i, j - 1)) / h2,
                (v.get(i + 1, j + 1) + v.get(i - 1, j - 1) - v.get(i + 1, j - 1) - v.get(i - 1, j + 1)) / (4.0 * h2),
            ]
        })
        .collect();
    HessianField { mesh, entries }
}

/// `(det H, λ_min(H))` for `H = [[h11, h12], [h12, h22]]`.
pub fn det_and_lambda_min(h11: f64, h22: f64, h12: f64) -> (f64, f64) {
    let det = h11 * h22 - h12 * h12;
    // λ_min = (tr − √((h11 − h22)² + 4h12²)) / 2 avoids cancellation in tr² − 4 det.
    let lambda_min = 0.5 * (h11 + h22 - (h11 - h22).hypot(2.0 * h12));
    (det, lambda_min)
}

/// `λ_min(H[v](x)) ≥ −tol` at every interior node.
pub fn is_locally_discrete_convex(v: &MeshFunction, tol: f64) -> bool {
    discrete_hessian(v)
        .entries()
        .iter()
        .all(|e| det_and_lambda_min(e[0], e[1], e[2]).1 >= -tol)
}

/// Orthogonal direction pairs and convexity directions of a wide stencil.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilSet {
    pub width: usize,
    pub pairs: Vec<([i64; 2], [i64; 2])>,
    pub directions: Vec<[i64; 2]>,
}

impl StencilSet {
    pub fn new(width: usize) -> Result<Self, MaError> {
        let mut pairs = vec![([1, 0], [0, 1]), ([1, 1], [1, -1])];
        match width {
            1 => {}
            2 => pairs.extend([([1, 2], [2, -1]), ([2, 1], [1, -2])]),
            _ => return Err(MaError::UnsupportedWidth(width)),
        }
        let directions = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        Ok(Self {
            width,
            pairs,
            directions,
        })
    }
}

fn norm2(e: [i64; 2]) -> f64 {
    (e[0] * e[0] + e[1] * e[1]) as f64
}

/// `Δ_e v(x) / (|e|² h²)` when both `x ± e` lie in the closed mesh.
pub fn directional_second_difference(v: &MeshFunction, i: usize, j: usize, e: [i64; 2]) -> Option<f64> {
    let p = v.at_offset(i, j, e[0], e[1])?;
    let m = v.at_offset(i, j, -e[0], -e[1])?;
    let h = v.mesh().h();
    Some((p - 2.0 * v.get(i, j) + m) / (norm2(e) * h * h))
}

/// `M[v](x) = min` over admissible basis pairs of `λ¹λ²`, where
/// `λⁱ = Δ_{αᵢ} v(x) / (|αᵢ|² h²)`. A pair is admissible at `x` when all four
/// points `x ± αᵢ` lie in the closed mesh.
pub fn monotone_ma(v: &MeshFunction, stencil: &StencilSet) -> Result<InteriorFunction, MaError> {
    let mesh = v.mesh();
    let mut out = Vec::with_capacity(mesh.num_interior());
    for (i, j) in mesh.interior() {
        let mut best: Option<f64> = None;
        for &(a, b) in &stencil.pairs {
            if let (Some(l1), Some(l2)) = (
                directional_second_difference(v, i, j, a),
                directional_second_difference(v, i, j, b),
            ) {
                let p = l1 * l2;
                best = Some(best.map_or(p, |q: f64| q.min(p)));
            }
        }
        out.push(best.ok_or_else(|| MaError::OperatorUndefined(format!("no admissible basis pair at ({i}, {j})")))?);
    }
    Ok(InteriorFunction::new(mesh, out))
}

/// `v(x+e) − 2v(x) + v(x−e) ≥ −tol` for every interior `x` and stencil
/// direction `e` with both neighbors in the closed mesh.
pub fn is_wide_stencil_convex(v: &MeshFunction, stencil: &StencilSet, tol: f64) -> bool {
    let mesh = v.mesh();
    mesh.interior().all(|(i, j)| {
        stencil.directions.iter().all(|e| {
            match (v.at_offset(i, j, e[0], e[1]), v.at_offset(i, j, -e[0], -e[1])) {
                (Some(p), Some(m)) => p - 2.0 * v.get(i, j) + m >= -tol,
                _ => true,
            }
        })
    })
}
