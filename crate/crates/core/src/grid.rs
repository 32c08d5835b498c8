//! Uniform meshes on the closed unit square and mesh functions.
//!
//! Nodes are addressed by integer coordinates `(i, j)` with `0 ≤ i, j ≤ N`;
//! node `(i, j)` sits at `(i/N, j/N)` and is stored at `i·(N+1) + j`. The
//! first coordinate is `x₁`, the second `x₂`.

use crate::MaError;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mesh {
    n: usize,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self, MaError> {
        if n < 2 {
            return Err(MaError::InvalidMesh(format!("N = {n}; at least 2 subdivisions are needed")));
        }
        Ok(Self { n })
    }

    /// Subdivisions per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.side() * self.side()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j <= self.n);
        i * self.side() + j
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 / self.n as f64, j as f64 / self.n as f64)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// Node reached from `(i, j)` by the integer offset `(di, dj)`, if it lies
    /// in the closed mesh.
    pub fn offset(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<(usize, usize)> {
        let a = i as i64 + di;
        let b = j as i64 + dj;
        let n = self.n as i64;
        ((0..=n).contains(&a) && (0..=n).contains(&b)).then_some((a as usize, b as usize))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> {
        let s = self.side();
        (0..s).flat_map(move |i| (0..s).map(move |j| (i, j)))
    }

    /// `M_h°`, row-major.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (1..n).flat_map(move |i| (1..n).map(move |j| (i, j)))
    }

    /// `∂M_h`, row-major.
    pub fn boundary(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes().filter(move |&(i, j)| self.is_boundary(i, j))
    }

    /// `M_h⁻`: nodes with both coordinates ≥ h, where the backward gradient
    /// is defined. Each such node is the upper-right corner of one cell.
    pub fn backward_domain(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (1..=n).flat_map(move |i| (1..=n).map(move |j| (i, j)))
    }

    pub fn num_interior(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    /// Position of an interior node in [`Mesh::interior`] order.
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(!self.is_boundary(i, j));
        (i - 1) * (self.n - 1) + (j - 1)
    }
}

/// One finite value per node of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFunction {
    mesh: Mesh,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeshFunctionJson {
    #[serde(rename = "N")]
    n: usize,
    values: Vec<f64>,
}

impl MeshFunction {
    pub fn zeros(mesh: Mesh) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    pub fn from_values(mesh: Mesh, values: Vec<f64>) -> Result<Self, MaError> {
        if values.len() != mesh.num_nodes() {
            return Err(MaError::InvalidData(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(MaError::InvalidData(format!("non-finite value at node index {k}")));
        }
        Ok(Self { mesh, values })
    }

    /// Restriction of `f` to the mesh.
    pub fn sample(mesh: Mesh, f: impl Fn(f64, f64) -> f64) -> Result<Self, MaError> {
        let mut values = Vec::with_capacity(mesh.num_nodes());
        for (i, j) in mesh.nodes() {
            let (x, y) = mesh.coords(i, j);
            let v = f(x, y);
            if !v.is_finite() {
                return Err(MaError::Sampling(format!("f({x}, {y}) = {v}")));
            }
            values.push(v);
        }
        Ok(Self { mesh, values })
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.mesh.index(i, j);
        self.values[k] = v;
    }

    /// Value at `(i + di, j + dj)`, if that node exists.
    pub fn at_offset(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<f64> {
        self.mesh.offset(i, j, di, dj).map(|(a, b)| self.get(a, b))
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &MeshFunction, b: f64) -> MeshFunction {
        assert_eq!(self.mesh, other.mesh);
        MeshFunction {
            mesh: self.mesh,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> MeshFunction {
        MeshFunction {
            mesh: self.mesh,
            values: self.values.iter().map(|x| a * x).collect(),
        }
    }

    /// Largest interior deviation from `other`.
    pub fn interior_max_diff(&self, other: &MeshFunction) -> f64 {
        self.mesh
            .interior()
            .map(|(i, j)| (self.get(i, j) - other.get(i, j)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `i,j,value`; values use 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for (i, j) in self.mesh.nodes() {
            let _ = writeln!(out, "{i},{j},{:e}", self.get(i, j));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MaError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("i,j,value") => {}
            other => return Err(MaError::Parse(format!("expected header `i,j,value`, found {other:?}"))),
        }
        let mut rows = Vec::new();
        let mut max_index = 0usize;
        for (k, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(MaError::Parse(format!("line {}: expected 3 fields", k + 2)));
            }
            let bad = |what: &str| MaError::Parse(format!("line {}: bad {what}", k + 2));
            let i: usize = parts[0].parse().map_err(|_| bad("i"))?;
            let j: usize = parts[1].parse().map_err(|_| bad("j"))?;
            let v: f64 = parts[2].parse().map_err(|_| bad("value"))?;
            max_index = max_index.max(i).max(j);
            rows.push((i, j, v));
        }
        let mesh = Mesh::new(max_index)?;
        if rows.len() != mesh.num_nodes() {
            return Err(MaError::Parse(format!(
                "{} rows for a {}x{} grid",
                rows.len(),
                mesh.side(),
                mesh.side()
            )));
        }
        let mut values = vec![f64::NAN; mesh.num_nodes()];
        for (i, j, v) in rows {
            values[mesh.index(i, j)] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(MaError::Parse("duplicate or missing nodes".into()));
        }
        Self::from_values(mesh, values)
    }

    /// JSON container `{"N": …, "values": [row-major]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeshFunctionJson {
            n: self.mesh.n,
            values: self.values.clone(),
        })
        .expect("finite values serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, MaError> {
        let raw: MeshFunctionJson = serde_json::from_str(text).map_err(|e| MaError::Parse(e.to_string()))?;
        Self::from_values(Mesh::new(raw.n)?, raw.values)
    }
}

/// Values on the interior nodes only, in [`Mesh::interior`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFunction {
    mesh: Mesh,
    values: Vec<f64>,
}

impl InteriorFunction {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_interior());
        Self { mesh, values }
    }

    pub fn sample(mesh: Mesh, f: impl Fn(f64, f64) -> f64) -> Result<Self, MaError> {
        let mut values = Vec::with_capacity(mesh.num_interior());
        for (i, j) in mesh.interior() {
            let (x, y) = mesh.coords(i, j);
            let v = f(x, y);
            if !v.is_finite() {
                return Err(MaError::Sampling(format!("f({x}, {y}) = {v}")));
            }
            values.push(v);
        }
        Ok(Self { mesh, values })
    }

    /// Interior part of a mesh function.
    pub fn restrict(v: &MeshFunction) -> Self {
        let mesh = v.mesh();
        Self {
            mesh,
            values: mesh.interior().map(|(i, j)| v.get(i, j)).collect(),
        }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.interior_index(i, j)]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub fn unit(self) -> (i64, i64) {
        match self {
            Axis::X1 => (1, 0),
            Axis::X2 => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffKind {
    Forward,
    Backward,
    Centered,
}

/// First-order difference quotient of `v` at node `(i, j)`.
pub fn diff(v: &MeshFunction, axis: Axis, kind: DiffKind, i: usize, j: usize) -> Result<f64, MaError> {
    let (di, dj) = axis.unit();
    let h = v.mesh().h();
    let missing = || MaError::OutOfStencil(format!("{kind:?} difference along {axis:?} at ({i}, {j})"));
    let here = v.get(i, j);
    match kind {
        DiffKind::Forward => Ok((v.at_offset(i, j, di, dj).ok_or_else(missing)? - here) / h),
        DiffKind::Backward => Ok((here - v.at_offset(i, j, -di, -dj).ok_or_else(missing)?) / h),
        DiffKind::Centered => {
            let p = v.at_offset(i, j, di, dj).ok_or_else(missing)?;
            let m = v.at_offset(i, j, -di, -dj).ok_or_else(missing)?;
            Ok((p - m) / (2.0 * h))
        }
    }
}

/// Backward gradient on `M_h⁻`, stored in [`Mesh::backward_domain`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    mesh: Mesh,
    values: Vec<[f64; 2]>,
}

impl GradField {
    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Gradient at `(i, j) ∈ M_h⁻`.
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        assert!(i >= 1 && j >= 1, "backward gradient is undefined at ({i}, {j})");
        self.values[(i - 1) * self.mesh.n() + (j - 1)]
    }
}

pub fn backward_gradient(v: &MeshFunction) -> GradField {
    let mesh = v.mesh();
    let h = mesh.h();
    let values = mesh
        .backward_domain()
        .map(|(i, j)| {
            let c = v.get(i, j);
            [(c - v.get(i - 1, j)) / h, (c - v.get(i, j - 1)) / h]
        })
        .collect();
    GradField { mesh, values }
}

/// Discrete norms and seminorms of a mesh function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `|v|_{0,∞}`: max over interior nodes.
    pub sup_interior: f64,
    /// `‖v‖₀ = (h² Σ_interior v²)^{1/2}`.
    pub l2: f64,
    /// `|v|₁ = (Σᵢ ‖∂ⁱ₊v‖₀²)^{1/2}`.
    pub h1_seminorm: f64,
    /// `‖v‖_{2,∞} = max(|v|_{0,∞}, |v|_{1,∞}, |v|_{2,∞})`.
    pub sup_all: f64,
    /// `|v|_{1,∞} = maxᵢ |∂ⁱ₊v|_{0,∞}`.
    pub grad_sup: f64,
    /// `|v|_{2,∞}`: `|·|_{1,∞}` of the second differences.
    pub hess_sup: f64,
}

pub fn norms(v: &MeshFunction) -> Norms {
    let mesh = v.mesh();
    let h = mesh.h();
    let n = mesh.n();
    let sup_interior = mesh.interior().map(|(i, j)| v.get(i, j).abs()).fold(0.0, f64::max);
    let l2 = (h * h * mesh.interior().map(|(i, j)| v.get(i, j).powi(2)).sum::<f64>()).sqrt();

    let mut h1_sq = 0.0;
    let mut grad_sup = 0.0f64;
    for axis in [Axis::X1, Axis::X2] {
        let mut s = 0.0;
        for (i, j) in mesh.interior() {
            let d = diff(v, axis, DiffKind::Forward, i, j).expect("interior forward neighbors exist");
            s += d * d;
            grad_sup = grad_sup.max(d.abs());
        }
        h1_sq += h * h * s;
    }

    // Second differences live on interior nodes; their forward differences
    // are taken where the forward neighbor is interior too.
    let second: Vec<Vec<f64>> = {
        let mut fields = vec![Vec::new(); 3];
        for (i, j) in mesh.interior() {
            let c = v.get(i, j);
            fields[0].push((v.get(i + 1, j) - 2.0 * c + v.get(i - 1, j)) / (h * h));
            fields[1].push((v.get(i, j + 1) - 2.0 * c + v.get(i, j - 1)) / (h * h));
            fields[2].push(
                (v.get(i + 1, j + 1) + v.get(i - 1, j - 1) - v.get(i + 1, j - 1) - v.get(i - 1, j + 1)) / (4.0 * h * h),
            );
        }
        fields
    };
    let mut hess_sup = 0.0f64;
    for w in &second {
        for (i, j) in mesh.interior() {
            let here = w[mesh.interior_index(i, j)];
            if i + 1 < n {
                hess_sup = hess_sup.max(((w[mesh.interior_index(i + 1, j)] - here) / h).abs());
            }
            if j + 1 < n {
                hess_sup = hess_sup.max(((w[mesh.interior_index(i, j + 1)] - here) / h).abs());
            }
        }
    }
    Norms {
        sup_interior,
        l2,
        h1_seminorm: h1_sq.sqrt(),
        sup_all: sup_interior.max(grad_sup).max(hess_sup),
        grad_sup,
        hess_sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_counts() {
        assert!(matches!(Mesh::new(1), Err(MaError::InvalidMesh(_))));
        let m = Mesh::new(2).unwrap();
        assert_eq!((m.num_nodes(), m.interior().count(), m.boundary().count()), (9, 1, 8));
        let m = Mesh::new(4).unwrap();
        assert_eq!((m.num_nodes(), m.interior().count()), (25, 9));
        let m = Mesh::new(64).unwrap();
        assert_eq!(m.h(), 2f64.powi(-6));
        assert_eq!(m.side(), 65);
        assert_eq!(m.backward_domain().count(), 64 * 64);
        let mut all: Vec<_> = m.interior().chain(m.boundary()).collect();
        all.sort();
        assert_eq!(all, m.nodes().collect::<Vec<_>>());
    }

    #[test]
    fn sampling() {
        let m = Mesh::new(4).unwrap();
        let v = MeshFunction::sample(m, |x, y| x * x + y * y).unwrap();
        assert_eq!(v.get(2, 2), 0.5);
        let g = MeshFunction::sample(m, |x, y| ((x * x + y * y) / 2.0).exp()).unwrap();
        assert!((g.get(4, 4) - std::f64::consts::E).abs() < 1e-15);
        assert!(MeshFunction::zeros(m).values().iter().all(|&v| v == 0.0));
        assert!(matches!(MeshFunction::sample(m, |x, _| 1.0 / (x - 0.5)), Err(MaError::Sampling(_))));
    }

    #[test]
    fn first_differences() {
        let m = Mesh::new(4).unwrap();
        let lin = MeshFunction::sample(m, |x, _| x).unwrap();
        let sq = MeshFunction::sample(m, |x, _| x * x).unwrap();
        for kind in [DiffKind::Forward, DiffKind::Backward, DiffKind::Centered] {
            for (i, j) in m.interior() {
                assert!((diff(&lin, Axis::X1, kind, i, j).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!((diff(&sq, Axis::X1, DiffKind::Centered, 2, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((diff(&sq, Axis::X1, DiffKind::Backward, 2, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            diff(&sq, Axis::X1, DiffKind::Backward, 0, 1),
            Err(MaError::OutOfStencil(_))
        ));
    }

    #[test]
    fn backward_gradient_examples() {
        let m = Mesh::new(2).unwrap();
        let sq = MeshFunction::sample(m, |x, _| x * x).unwrap();
        assert_eq!(backward_gradient(&sq).get(2, 1), [1.5, 0.0]);
        let t3 = MeshFunction::sample(m, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2)).unwrap();
        assert_eq!(backward_gradient(&t3).get(1, 1), [-0.5, -0.5]);
        let m = Mesh::new(8).unwrap();
        let aff = MeshFunction::sample(m, |x, y| 2.0 * x - 3.0 * y + 1.0).unwrap();
        for g in backward_gradient(&aff).values() {
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_examples() {
        let m = Mesh::new(4).unwrap();
        let one = MeshFunction::sample(m, |_, _| 1.0).unwrap();
        let nv = norms(&one);
        assert_eq!(nv.l2, 0.75);
        assert_eq!(nv.h1_seminorm, 0.0);
        assert_eq!(nv.sup_interior, 1.0);
        let q = MeshFunction::sample(m, |x, y| x * x + y * y).unwrap();
        // Second differences of a quadratic are constant.
        assert!(norms(&q).hess_sup < 1e-9);
    }

    #[test]
    fn csv_and_json_round_trip_exactly() {
        let m = Mesh::new(5).unwrap();
        let v = MeshFunction::sample(m, |x, y| (x * 7.3).sin() + y.exp() / 3.0).unwrap();
        assert_eq!(MeshFunction::from_csv(&v.to_csv()).unwrap(), v);
        assert_eq!(MeshFunction::from_json(&v.to_json()).unwrap(), v);
        assert!(MeshFunction::from_csv("a,b\n").is_err());
    }
}
