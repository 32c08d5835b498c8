//! Assembly of the discrete Monge–Ampère programs in conic standard form.
//!
//! Every cone entry is its own variable `z`, tied to the grid values by an
//! equality row `z − (affine in u) = constant`; boundary values are folded
//! into the constant. Variables are ordered grid values first (row-major),
//! then cone blocks in node order, so assembly is deterministic.

use crate::grid::{InteriorFunction, Mesh, MeshFunction};
use crate::operators::{Phi, StencilSet};
use crate::MaError;
use masolve_conic::{presolve, Cone, ConicProgram, CscMatrix, Presolved};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Local discrete convexity and `det H[u] ≥ f` through the 9-point Hessian.
    Standard,
    /// Wide-stencil convexity and `λ¹λ² ≥ f` for every admissible basis pair.
    Monotone(StencilSet),
    /// Convex envelope of the boundary data: the standard scheme with `f = 0`.
    EnvelopeBoundary,
    /// Largest discrete convex function below `gbar` on the whole mesh.
    EnvelopeObstacle(MeshFunction),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Standard => "standard",
            Scheme::Monotone(_) => "monotone",
            Scheme::EnvelopeBoundary => "envelope-boundary",
            Scheme::EnvelopeObstacle(_) => "envelope-obstacle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProgramSpec {
    pub mesh: Mesh,
    /// Right-hand side on interior nodes; must be nonnegative.
    pub f: InteriorFunction,
    /// Dirichlet data; only boundary values are read.
    pub g: MeshFunction,
    pub phi: Phi,
    pub scheme: Scheme,
}

impl ProgramSpec {
    pub fn validate(&self) -> Result<(), MaError> {
        if self.f.mesh() != self.mesh || self.g.mesh() != self.mesh {
            return Err(MaError::InvalidData("f and g must live on the program mesh".into()));
        }
        if let Some((k, v)) = self.f.values().iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(MaError::InvalidData(format!("f = {v} at interior node {k}; f must be finite and ≥ 0")));
        }
        if let Scheme::EnvelopeObstacle(gbar) = &self.scheme {
            if gbar.mesh() != self.mesh {
                return Err(MaError::InvalidData("obstacle must live on the program mesh".into()));
            }
        }
        Ok(())
    }
}

/// `Σ coef · v(node) + constant`, with nodes given by storage index.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn eval(&self, v: &MeshFunction) -> f64 {
        self.terms.iter().map(|&(k, a)| a * v.values()[k]).sum::<f64>() + self.constant
    }
}

/// How a program variable relates to a mesh function.
#[derive(Debug, Clone, PartialEq)]
pub enum VarDef {
    /// The grid value at a node.
    Grid(usize),
    /// An affine function of grid values.
    Affine(Affine),
    /// Epigraph variable of `Φ(∇_h v)` at the cell whose upper-right corner is the node.
    PhiHead { phi: Phi, node: (usize, usize) },
    /// `|g| − g` for gradient component `axis` of a cell (absolute-value split).
    AbsMinus { axis: usize, node: (usize, usize) },
    /// `|g| + g`
    AbsPlus { axis: usize, node: (usize, usize) },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockCounts {
    pub grid_vars: usize,
    pub epigraph_blocks: usize,
    pub det_cones: usize,
    pub convexity_inequalities: usize,
    pub obstacle_inequalities: usize,
}

/// A conic program together with its map back to mesh functions.
#[derive(Debug, Clone)]
pub struct MaProgram {
    pub program: ConicProgram,
    pub mesh: Mesh,
    pub counts: BlockCounts,
    /// Grid variable of each node (`None` for eliminated boundary nodes).
    node_var: Vec<Option<usize>>,
    /// Values for nodes without a variable.
    known: MeshFunction,
    defs: Vec<VarDef>,
}

impl MaProgram {
    pub fn variable_of(&self, i: usize, j: usize) -> Option<usize> {
        self.node_var[self.mesh.index(i, j)]
    }

    pub fn definitions(&self) -> &[VarDef] {
        &self.defs
    }

    /// Mesh function carried by a solution vector.
    pub fn extract(&self, x: &[f64]) -> MeshFunction {
        let mut v = self.known.clone();
        for (i, j) in self.mesh.nodes() {
            if let Some(k) = self.variable_of(i, j) {
                v.set(i, j, x[k]);
            }
        }
        v
    }

    /// The program point represented by `v`, with every epigraph variable
    /// tight. `v` must agree with the eliminated boundary values for the
    /// equality rows to hold.
    pub fn assignment(&self, v: &MeshFunction) -> Vec<f64> {
        let h = self.mesh.h();
        let grad = |(i, j): (usize, usize)| {
            let c = v.get(i, j);
            [(c - v.get(i - 1, j)) / h, (c - v.get(i, j - 1)) / h]
        };
        self.defs
            .iter()
            .map(|d| match d {
                VarDef::Grid(k) => v.values()[*k],
                VarDef::Affine(a) => a.eval(v),
                VarDef::PhiHead { phi, node } => phi.eval(grad(*node)),
                VarDef::AbsMinus { axis, node } => {
                    let g = grad(*node)[*axis];
                    g.abs() - g
                }
                VarDef::AbsPlus { axis, node } => {
                    let g = grad(*node)[*axis];
                    g.abs() + g
                }
            })
            .collect()
    }

    /// Equality rows hold to `tol` (∞-norm) and every block is within `tol`
    /// of its cone.
    pub fn is_cone_feasible(&self, x: &[f64], tol: f64) -> bool {
        let mut r = self.program.a.mul_vec(x);
        r.iter_mut().zip(&self.program.b).for_each(|(a, b)| *a -= b);
        r.iter().all(|v| v.abs() <= tol) && self.program.cone_violation(x) <= tol
    }
}

struct Builder {
    mesh: Mesh,
    node_var: Vec<Option<usize>>,
    known: MeshFunction,
    defs: Vec<VarDef>,
    cones: Vec<Cone>,
    c: Vec<f64>,
    trip: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

impl Builder {
    fn new(mesh: Mesh, known: MeshFunction) -> Self {
        Self {
            mesh,
            node_var: vec![None; mesh.num_nodes()],
            known,
            defs: Vec::new(),
            cones: Vec::new(),
            c: Vec::new(),
            trip: Vec::new(),
            b: Vec::new(),
        }
    }

    fn push_var(&mut self, def: VarDef, cost: f64) -> usize {
        self.defs.push(def);
        self.c.push(cost);
        self.defs.len() - 1
    }

    fn grid_vars(&mut self, nodes: impl Iterator<Item = (usize, usize)>) -> usize {
        let mut count = 0;
        for (i, j) in nodes {
            let k = self.mesh.index(i, j);
            let v = self.push_var(VarDef::Grid(k), 0.0);
            self.node_var[k] = Some(v);
            count += 1;
        }
        self.cones.push(Cone::free(count));
        count
    }

    /// New variable `z` with the row `z − Σ coef·u = constant + Σ coef·known`.
    fn affine_var(&mut self, a: Affine) -> usize {
        let z = self.defs.len();
        let row = self.b.len();
        self.trip.push((row, z, 1.0));
        let mut rhs = a.constant;
        for &(k, coef) in &a.terms {
            match self.node_var[k] {
                Some(u) => self.trip.push((row, u, -coef)),
                None => rhs += coef * self.known.values()[k],
            }
        }
        self.b.push(rhs);
        self.push_var(VarDef::Affine(a), 0.0)
    }

    fn stencil(&self, i: usize, j: usize, pts: &[(i64, i64, f64)]) -> Affine {
        let terms = pts
            .iter()
            .map(|&(di, dj, c)| {
                let (a, b) = self.mesh.offset(i, j, di, dj).expect("stencil inside the closed mesh");
                (self.mesh.index(a, b), c)
            })
            .collect();
        Affine { terms, constant: 0.0 }
    }

    /// Backward difference quotients at `(i, j) ∈ M_h⁻`.
    fn gradient(&self, i: usize, j: usize) -> [Affine; 2] {
        let ih = 1.0 / self.mesh.h();
        [
            self.stencil(i, j, &[(0, 0, ih), (-1, 0, -ih)]),
            self.stencil(i, j, &[(0, 0, ih), (0, -1, -ih)]),
        ]
    }

    fn epigraphs(&mut self, phi: Phi) -> usize {
        let w = self.mesh.h() * self.mesh.h();
        let cells: Vec<_> = self.mesh.backward_domain().collect();
        for &(i, j) in &cells {
            let [gx, gy] = self.gradient(i, j);
            let node = (i, j);
            match phi {
                Phi::Squared => {
                    // (s, ½, g) ∈ Q_r ⇔ s ≥ |g|²
                    self.push_var(VarDef::PhiHead { phi, node }, w);
                    self.affine_var(Affine::constant(0.5));
                    self.affine_var(gx);
                    self.affine_var(gy);
                    self.cones.push(Cone::rsoc(4));
                }
                Phi::Sqrt1pp => {
                    self.push_var(VarDef::PhiHead { phi, node }, w);
                    self.affine_var(gx);
                    self.affine_var(gy);
                    self.affine_var(Affine::constant(1.0));
                    self.cones.push(Cone::soc(4));
                }
                Phi::Euclid => {
                    self.push_var(VarDef::PhiHead { phi, node }, w);
                    self.affine_var(gx);
                    self.affine_var(gy);
                    self.cones.push(Cone::soc(3));
                }
                Phi::L1 => {
                    // p = t − g ≥ 0, q = t + g ≥ 0 with t = (p + q)/2 ≥ |g|.
                    for (axis, g) in [gx, gy].into_iter().enumerate() {
                        let p = self.push_var(VarDef::AbsMinus { axis, node }, 0.5 * w);
                        let q = self.push_var(VarDef::AbsPlus { axis, node }, 0.5 * w);
                        let row = self.b.len();
                        self.trip.push((row, p, -0.5));
                        self.trip.push((row, q, 0.5));
                        let mut rhs = 0.0;
                        for &(k, coef) in &g.terms {
                            match self.node_var[k] {
                                Some(u) => self.trip.push((row, u, -coef)),
                                None => rhs += coef * self.known.values()[k],
                            }
                        }
                        self.b.push(rhs);
                    }
                    self.cones.push(Cone::nonneg(4));
                }
            }
        }
        cells.len()
    }

    fn finish(self, counts: BlockCounts) -> MaProgram {
        let (m, n) = (self.b.len(), self.c.len());
        let program = ConicProgram {
            a: CscMatrix::from_triplets(m, n, &self.trip),
            c: self.c,
            d: 0.0,
            b: self.b,
            cones: self.cones,
        };
        debug_assert!(program.validate().is_ok());
        MaProgram {
            program,
            mesh: self.mesh,
            counts,
            node_var: self.node_var,
            known: self.known,
            defs: self.defs,
        }
    }
}

/// Rotated cones `(H₁₁, H₂₂, √2·H₁₂, √(2f)) ∈ Q_r` at every interior node.
fn hessian_cones(bd: &mut Builder, f: &InteriorFunction) -> usize {
    let h2 = bd.mesh.h() * bd.mesh.h();
    let nodes: Vec<_> = bd.mesh.interior().collect();
    for &(i, j) in &nodes {
        let d2 = |a: (i64, i64)| [(a.0, a.1, 1.0 / h2), (0, 0, -2.0 / h2), (-a.0, -a.1, 1.0 / h2)];
        let c = SQRT_2 / (4.0 * h2);
        let h11 = bd.stencil(i, j, &d2((1, 0)));
        let h22 = bd.stencil(i, j, &d2((0, 1)));
        let h12 = bd.stencil(i, j, &[(1, 1, c), (-1, -1, c), (1, -1, -c), (-1, 1, -c)]);
        bd.affine_var(h11);
        bd.affine_var(h22);
        bd.affine_var(h12);
        bd.affine_var(Affine::constant((2.0 * f.get(i, j)).sqrt()));
        bd.cones.push(Cone::rsoc(4));
    }
    nodes.len()
}

pub fn build_standard_program(spec: &ProgramSpec) -> Result<MaProgram, MaError> {
    spec.validate()?;
    if spec.scheme != Scheme::Standard {
        return Err(MaError::InvalidData(format!("expected the standard scheme, got {}", spec.scheme.name())));
    }
    Ok(standard(spec, &spec.f))
}

fn standard(spec: &ProgramSpec, f: &InteriorFunction) -> MaProgram {
    let mut bd = Builder::new(spec.mesh, spec.g.clone());
    let grid_vars = bd.grid_vars(spec.mesh.interior());
    let epigraph_blocks = bd.epigraphs(spec.phi);
    let det_cones = hessian_cones(&mut bd, f);
    bd.finish(BlockCounts {
        grid_vars,
        epigraph_blocks,
        det_cones,
        ..BlockCounts::default()
    })
}

pub fn build_monotone_program(spec: &ProgramSpec) -> Result<MaProgram, MaError> {
    spec.validate()?;
    let Scheme::Monotone(stencil) = &spec.scheme else {
        return Err(MaError::InvalidData(format!("expected the monotone scheme, got {}", spec.scheme.name())));
    };
    let mesh = spec.mesh;
    let h2 = mesh.h() * mesh.h();
    let mut bd = Builder::new(mesh, spec.g.clone());
    let grid_vars = bd.grid_vars(mesh.interior());
    let epigraph_blocks = bd.epigraphs(spec.phi);

    let admissible = |i: usize, j: usize, e: [i64; 2]| {
        mesh.offset(i, j, e[0], e[1]).is_some() && mesh.offset(i, j, -e[0], -e[1]).is_some()
    };
    let lambda = |bd: &Builder, i: usize, j: usize, e: [i64; 2]| {
        let s = 1.0 / ((e[0] * e[0] + e[1] * e[1]) as f64 * h2);
        bd.stencil(i, j, &[(e[0], e[1], s), (0, 0, -2.0 * s), (-e[0], -e[1], s)])
    };

    let mut convexity = 0;
    let mut det_cones = 0;
    for (i, j) in mesh.interior() {
        let dirs: Vec<_> = stencil.directions.iter().copied().filter(|&e| admissible(i, j, e)).collect();
        for &e in &dirs {
            let a = lambda(&bd, i, j, e);
            bd.affine_var(a);
        }
        if !dirs.is_empty() {
            bd.cones.push(Cone::nonneg(dirs.len()));
            convexity += dirs.len();
        }
        let root = (2.0 * spec.f.get(i, j)).sqrt();
        let mut any = false;
        for &(a, b) in &stencil.pairs {
            if admissible(i, j, a) && admissible(i, j, b) {
                let la = lambda(&bd, i, j, a);
                let lb = lambda(&bd, i, j, b);
                bd.affine_var(la);
                bd.affine_var(lb);
                bd.affine_var(Affine::constant(root));
                bd.cones.push(Cone::rsoc(3));
                det_cones += 1;
                any = true;
            }
        }
        if !any {
            return Err(MaError::OperatorUndefined(format!("no admissible basis pair at ({i}, {j})")));
        }
    }
    Ok(bd.finish(BlockCounts {
        grid_vars,
        epigraph_blocks,
        det_cones,
        convexity_inequalities: convexity,
        ..BlockCounts::default()
    }))
}

/// Convex-envelope programs. The boundary variant minimizes `J_h` over
/// discrete convex functions with the given boundary values. The obstacle
/// variant maximizes `h² Σ v` over discrete convex `v ≤ gbar`: its optimum
/// is the pointwise largest such function.
pub fn build_envelope_program(spec: &ProgramSpec) -> Result<MaProgram, MaError> {
    spec.validate()?;
    let zero = InteriorFunction::new(spec.mesh, vec![0.0; spec.mesh.num_interior()]);
    match &spec.scheme {
        Scheme::EnvelopeBoundary => Ok(standard(spec, &zero)),
        Scheme::EnvelopeObstacle(gbar) => {
            let mesh = spec.mesh;
            let mut bd = Builder::new(mesh, gbar.clone());
            let grid_vars = bd.grid_vars(mesh.nodes());
            let w = mesh.h() * mesh.h();
            for c in bd.c.iter_mut() {
                *c = -w;
            }
            let det_cones = hessian_cones(&mut bd, &zero);
            // gbar − u ≥ 0 at every node.
            for (i, j) in mesh.nodes() {
                let k = mesh.index(i, j);
                bd.affine_var(Affine {
                    terms: vec![(k, -1.0)],
                    constant: gbar.values()[k],
                });
            }
            bd.cones.push(Cone::nonneg(mesh.num_nodes()));
            Ok(bd.finish(BlockCounts {
                grid_vars,
                det_cones,
                obstacle_inequalities: mesh.num_nodes(),
                ..BlockCounts::default()
            }))
        }
        other => Err(MaError::InvalidData(format!("expected an envelope scheme, got {}", other.name()))),
    }
}

/// Dispatch on `spec.scheme`.
pub fn build_program(spec: &ProgramSpec) -> Result<MaProgram, MaError> {
    match spec.scheme {
        Scheme::Standard => build_standard_program(spec),
        Scheme::Monotone(_) => build_monotone_program(spec),
        Scheme::EnvelopeBoundary | Scheme::EnvelopeObstacle(_) => build_envelope_program(spec),
    }
}

/// Minimal epigraph program of `Φ` at a fixed gradient: its optimal value
/// is `Φ(grad)`. Uses the same cone encodings as the assembled programs.
pub fn epigraph_of_phi(phi: Phi, grad: [f64; 2]) -> ConicProgram {
    let mesh = Mesh::new(2).expect("valid mesh");
    // Every node known and the data affine with slope `grad`: the four cells
    // of weight h² each contribute Φ(grad)/4.
    let known = MeshFunction::sample(mesh, |x, y| grad[0] * x + grad[1] * y).expect("finite");
    let mut bd = Builder::new(mesh, known);
    bd.epigraphs(phi);
    bd.finish(BlockCounts::default()).program
}

/// Presolve an assembled program. Boundary values are already folded in at
/// assembly, so for the programs built here presolve only removes rows and
/// columns made redundant by degenerate data.
pub fn canonicalize(program: &ConicProgram) -> Result<Presolved, MaError> {
    Ok(presolve(program)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::test_case;
    use crate::operators::j_h;
    use masolve_conic::{solve, SolveSettings};

    fn spec(case: &str, n: usize, phi: Phi, scheme: Scheme) -> ProgramSpec {
        test_case(case).unwrap().spec(n, phi, &scheme).unwrap()
    }

    #[test]
    fn standard_block_counts() {
        let p = build_program(&spec("test1", 4, Phi::Squared, Scheme::Standard)).unwrap();
        assert_eq!(p.counts.grid_vars, 9);
        assert_eq!(p.counts.epigraph_blocks, 16);
        assert_eq!(p.counts.det_cones, 9);
        assert!(p.program.validate().is_ok());
    }

    #[test]
    fn monotone_block_counts() {
        let p = build_program(&spec("test1", 4, Phi::Squared, Scheme::Monotone(StencilSet::new(1).unwrap()))).unwrap();
        assert_eq!(p.counts.det_cones, 18);
        assert_eq!(p.counts.convexity_inequalities, 36);
        // Only the center node has room for the width-2 pairs.
        let wide = build_program(&spec("test1", 4, Phi::Squared, Scheme::Monotone(StencilSet::new(2).unwrap()))).unwrap();
        assert_eq!(wide.counts.det_cones, 20);
        assert_eq!(wide.counts.convexity_inequalities, 48);
    }

    #[test]
    fn single_node_programs_recover_the_center_value() {
        for scheme in [Scheme::Standard, Scheme::Monotone(StencilSet::new(1).unwrap())] {
            let p = build_program(&spec("test3", 2, Phi::Sqrt1pp, scheme)).unwrap();
            let r = solve(&p.program, &SolveSettings::default()).unwrap();
            let u = p.extract(&r.x);
            assert!(u.get(1, 1).abs() < 1e-7, "{}", u.get(1, 1));
        }
    }

    #[test]
    fn epigraph_programs_evaluate_phi() {
        let cases = [
            (Phi::Squared, [0.0, 0.0], 0.0),
            (Phi::Sqrt1pp, [0.0, 0.0], 1.0),
            (Phi::L1, [3.0, -4.0], 7.0),
            (Phi::Euclid, [3.0, -4.0], 5.0),
            (Phi::Squared, [1.0, 2.0], 5.0),
        ];
        for (phi, g, want) in cases {
            let r = solve(&epigraph_of_phi(phi, g), &SolveSettings::default().with_tolerance(1e-10)).unwrap();
            assert!((r.objective - want).abs() < 1e-8, "{phi}: {} vs {want}", r.objective);
        }
    }

    #[test]
    fn assignment_of_convex_function_is_feasible_with_energy_objective() {
        let mesh = Mesh::new(6).unwrap();
        let v = MeshFunction::sample(mesh, |x, y| (x - 0.3).powi(2) + 2.0 * (y - 0.6).powi(2) + 0.5 * x * y).unwrap();
        let f = InteriorFunction::sample(mesh, |_, _| 1.0).unwrap();
        for phi in Phi::ALL {
            for scheme in [Scheme::Standard, Scheme::Monotone(StencilSet::new(1).unwrap())] {
                let s = ProgramSpec {
                    mesh,
                    f: f.clone(),
                    g: v.clone(),
                    phi,
                    scheme,
                };
                let p = build_program(&s).unwrap();
                let x = p.assignment(&v);
                assert!(p.is_cone_feasible(&x, 1e-9), "{phi} {}", s.scheme.name());
                assert!((p.program.objective(&x) - j_h(&v, phi)).abs() < 1e-12);
                assert_eq!(p.extract(&x), v);
            }
        }
    }

    #[test]
    fn assignment_of_nonconvex_function_is_infeasible() {
        let mesh = Mesh::new(6).unwrap();
        let v = MeshFunction::sample(mesh, |x, y| x * y).unwrap();
        let f = InteriorFunction::sample(mesh, |_, _| 0.0).unwrap();
        for scheme in [Scheme::Standard, Scheme::Monotone(StencilSet::new(1).unwrap())] {
            let s = ProgramSpec {
                mesh,
                f: f.clone(),
                g: v.clone(),
                phi: Phi::Squared,
                scheme,
            };
            let p = build_program(&s).unwrap();
            assert!(!p.is_cone_feasible(&p.assignment(&v), 1e-9));
        }
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let p = build_program(&spec("test1", 4, Phi::L1, Scheme::Standard)).unwrap();
        let once = canonicalize(&p.program).unwrap();
        let twice = canonicalize(&once.program).unwrap();
        assert_eq!(once.program.c, twice.program.c);
        assert_eq!(once.program.b, twice.program.b);
        assert_eq!(once.program.cones, twice.program.cones);
        let single = build_program(&spec("test3", 2, Phi::Squared, Scheme::Standard)).unwrap();
        assert_eq!(single.counts.grid_vars, 1);
    }

    #[test]
    fn boundary_envelope_of_affine_data() {
        // The envelope of affine data is the affine function itself, with
        // energy Φ(a) for slope a.
        let mesh = Mesh::new(4).unwrap();
        let g = MeshFunction::sample(mesh, |x, y| 2.0 * x - y + 0.5).unwrap();
        let s = ProgramSpec {
            mesh,
            f: InteriorFunction::sample(mesh, |_, _| 0.0).unwrap(),
            g: g.clone(),
            phi: Phi::Sqrt1pp,
            scheme: Scheme::EnvelopeBoundary,
        };
        let p = build_program(&s).unwrap();
        // Every Hessian cone sits at its apex with a zero multiplier, so the
        // iterates approach u only like √μ; drive the gap down hard.
        let tight = SolveSettings {
            eps_gap: 1e-14,
            ..SolveSettings::default().with_tolerance(1e-10)
        };
        let r = solve(&p.program, &tight).unwrap();
        assert!(p.extract(&r.x).interior_max_diff(&g) < 1e-6);
        assert!((r.objective - 6f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn boundary_envelope_matches_zero_density_standard_program() {
        let env = build_program(&spec("test4", 8, Phi::Sqrt1pp, Scheme::EnvelopeBoundary)).unwrap();
        let std = build_program(&spec("test4", 8, Phi::Sqrt1pp, Scheme::Standard)).unwrap();
        assert_eq!(env.program, std.program);
    }

    #[test]
    fn obstacle_envelope_of_a_tent() {
        let mesh = Mesh::new(4).unwrap();
        let gbar = MeshFunction::sample(mesh, |x, _| -x.min(1.0 - x)).unwrap();
        let s = ProgramSpec {
            mesh,
            f: InteriorFunction::sample(mesh, |_, _| 0.0).unwrap(),
            g: gbar.clone(),
            phi: Phi::Squared,
            scheme: Scheme::EnvelopeObstacle(gbar.clone()),
        };
        let p = build_program(&s).unwrap();
        assert_eq!(p.counts.obstacle_inequalities, 25);
        let r = solve(&p.program, &SolveSettings::default()).unwrap();
        let u = p.extract(&r.x);
        // −min(x, 1 − x) is already convex, so it is its own envelope.
        assert!((u.get(2, 2) + 0.5).abs() < 1e-6, "{}", u.get(2, 2));
        assert!(u.interior_max_diff(&gbar) < 1e-6);
    }

    #[test]
    fn wrong_scheme_is_rejected() {
        let s = spec("test1", 4, Phi::Squared, Scheme::Standard);
        assert!(build_monotone_program(&s).is_err());
        assert!(build_envelope_program(&s).is_err());
    }
}
