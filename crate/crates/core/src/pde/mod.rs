//! Benchmark problems: residual operators, boundary specifications, exact
//! solutions, source terms, and collocation sampling.
//!
//! Residual formulas are written once against the [`Ctx`] algebra and
//! interpreted three ways: on plain values, on duals in the offset `c`, and
//! on tape nodes for parameter gradients.

mod exact;

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::{smallvec, SmallVec};

use crate::ad::Dual1;
use crate::network::MlpSpec;
use crate::tape::{Node, Tape};

pub type Vec3<V> = SmallVec<[V; 3]>;

/// Minimal algebra needed by the residual operators.
pub trait Ctx {
    type V: Copy;
    fn konst(&mut self, k: f64) -> Self::V;
    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn scale(&mut self, a: Self::V, k: f64) -> Self::V;
    fn add_k(&mut self, a: Self::V, k: f64) -> Self::V;
}

/// Plain f64 evaluation.
pub struct ValueCtx;

impl Ctx for ValueCtx {
    type V = f64;
    fn konst(&mut self, k: f64) -> f64 {
        k
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn scale(&mut self, a: f64, k: f64) -> f64 {
        a * k
    }
    fn add_k(&mut self, a: f64, k: f64) -> f64 {
        a + k
    }
}

/// Evaluation on one-coordinate duals (derivatives in the offset `c`).
pub struct OffsetDualCtx;

impl Ctx for OffsetDualCtx {
    type V = Dual1;
    fn konst(&mut self, k: f64) -> Dual1 {
        Dual1::constant(k)
    }
    fn add(&mut self, a: Dual1, b: Dual1) -> Dual1 {
        a + b
    }
    fn sub(&mut self, a: Dual1, b: Dual1) -> Dual1 {
        a - b
    }
    fn mul(&mut self, a: Dual1, b: Dual1) -> Dual1 {
        a * b
    }
    fn scale(&mut self, a: Dual1, k: f64) -> Dual1 {
        a.scale(k)
    }
    fn add_k(&mut self, a: Dual1, k: f64) -> Dual1 {
        a.add_scalar(k)
    }
}

/// Evaluation as tape nodes (for parameter gradients of the loss).
pub struct TapeCtx<'a, const D: usize, const H: usize> {
    pub tape: &'a mut Tape<D, H>,
}

impl<const D: usize, const H: usize> Ctx for TapeCtx<'_, D, H> {
    type V = Node;
    fn konst(&mut self, k: f64) -> Node {
        self.tape.konst(k)
    }
    fn add(&mut self, a: Node, b: Node) -> Node {
        self.tape.add(a, b)
    }
    fn sub(&mut self, a: Node, b: Node) -> Node {
        self.tape.sub(a, b)
    }
    fn mul(&mut self, a: Node, b: Node) -> Node {
        self.tape.mul(a, b)
    }
    fn scale(&mut self, a: Node, k: f64) -> Node {
        self.tape.scale(a, k)
    }
    fn add_k(&mut self, a: Node, k: f64) -> Node {
        self.tape.add_k(a, k)
    }
}

/// Value, gradient and Hessian entries of each solution component at a point.
#[derive(Clone, Debug)]
pub struct FieldDerivs<V> {
    pub val: Vec3<V>,
    pub gx: Vec3<V>,
    pub gy: Vec3<V>,
    pub hxx: Vec3<V>,
    pub hxy: Vec3<V>,
    pub hyy: Vec3<V>,
}

impl<V: Copy> FieldDerivs<V> {
    pub fn with_capacity(n: usize, fill: V) -> Self {
        Self {
            val: smallvec![fill; n],
            gx: smallvec![fill; n],
            gy: smallvec![fill; n],
            hxx: smallvec![fill; n],
            hxy: smallvec![fill; n],
            hyy: smallvec![fill; n],
        }
    }
}

impl FieldDerivs<f64> {
    /// Lift plain components into another algebra as constants.
    pub fn lift<C: Ctx>(&self, ctx: &mut C) -> FieldDerivs<C::V> {
        let l = |ctx: &mut C, src: &Vec3<f64>| src.iter().map(|&v| ctx.konst(v)).collect();
        FieldDerivs {
            val: l(ctx, &self.val),
            gx: l(ctx, &self.gx),
            gy: l(ctx, &self.gy),
            hxx: l(ctx, &self.hxx),
            hxy: l(ctx, &self.hxy),
            hyy: l(ctx, &self.hyy),
        }
    }
}

/// Computational domain; all benchmarks live in (a subset of) the unit square.
#[derive(Clone, Copy, Debug)]
pub enum Domain {
    UnitSquare,
    /// Unit square minus a centered open disk.
    SquareWithHole { cx: f64, cy: f64, r: f64 },
}

impl Domain {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let in_square = x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0;
        match *self {
            Domain::UnitSquare => in_square,
            Domain::SquareWithHole { cx, cy, r } => {
                let d2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
                in_square && d2 >= r * r
            }
        }
    }

    /// Uniform interior point (rejection sampling around the hole).
    fn sample_interior(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        loop {
            let p = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            if self.contains(p) {
                return p;
            }
        }
    }
}

/// One boundary piece with its condition coefficients. Dirichlet is
/// `(alpha, beta) = (1, 0)`, Neumann `(0, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct BoundarySegment {
    pub geom: SegmentGeom,
    pub alpha: f64,
    pub beta: f64,
    pub label: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub enum SegmentGeom {
    /// Straight edge with coordinate `axis` fixed at `at`.
    Edge { axis: usize, at: f64, normal: [f64; 2] },
    /// Inner circular hole boundary; the domain-outward normal points toward
    /// the circle center.
    Circle { cx: f64, cy: f64, r: f64 },
}

impl SegmentGeom {
    /// Position and outward unit normal at curve parameter `t` in `[0, 1)`.
    pub fn point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        match *self {
            SegmentGeom::Edge { axis, at, normal } => {
                let mut x = [t, t];
                x[axis] = at;
                (x, normal)
            }
            SegmentGeom::Circle { cx, cy, r } => {
                let a = 2.0 * std::f64::consts::PI * t;
                let (s, c) = a.sin_cos();
                ([cx + r * c, cy + r * s], [-c, -s])
            }
        }
    }
}

/// One boundary collocation record.
#[derive(Clone, Debug)]
pub struct BoundaryRecord {
    pub x: [f64; 2],
    pub normal: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
    /// Prescribed value per constrained component.
    pub g: Vec3<f64>,
    pub segment: usize,
}

/// Fixed collocation sets for a whole run: interior points with their
/// zeroth-order coefficients, plus boundary records.
#[derive(Clone, Debug)]
pub struct CollocationSet {
    pub interior: Vec<[f64; 2]>,
    pub gamma: Vec<f64>,
    pub boundary: Vec<BoundaryRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchmarkKind {
    Heat,
    Poisson,
    ToyPoisson,
    TwoPhasePoisson,
    NavierStokes,
    Helmholtz,
}

/// A fully specified benchmark: operator, boundary pieces, exact solution.
#[derive(Clone, Debug)]
pub struct BenchmarkProblem {
    pub kind: BenchmarkKind,
    pub name: &'static str,
    pub domain: Domain,
    pub segments: Vec<BoundarySegment>,
    pub output_dim: usize,
    /// Solution components that carry the additive offset.
    pub shifted: &'static [usize],
    /// Components entering the relative-L2 metric.
    pub error_components: &'static [usize],
    /// Components constrained on the boundary.
    pub constrained: &'static [usize],
    /// Zeroth-order terms linear in u (closed-form offset applies).
    pub linear_offset: bool,
}

const SQUARE_DIRICHLET: [BoundarySegment; 4] = [
    BoundarySegment {
        geom: SegmentGeom::Edge { axis: 0, at: 0.0, normal: [-1.0, 0.0] },
        alpha: 1.0,
        beta: 0.0,
        label: "dirichlet",
    },
    BoundarySegment {
        geom: SegmentGeom::Edge { axis: 0, at: 1.0, normal: [1.0, 0.0] },
        alpha: 1.0,
        beta: 0.0,
        label: "dirichlet",
    },
    BoundarySegment {
        geom: SegmentGeom::Edge { axis: 1, at: 0.0, normal: [0.0, -1.0] },
        alpha: 1.0,
        beta: 0.0,
        label: "dirichlet",
    },
    BoundarySegment {
        geom: SegmentGeom::Edge { axis: 1, at: 1.0, normal: [0.0, 1.0] },
        alpha: 1.0,
        beta: 0.0,
        label: "dirichlet",
    },
];

/// Laplace on the unit square: prescribed temperature on the left/bottom
/// edges, constant outward flux on the right/top edges.
pub fn heat_problem() -> BenchmarkProblem {
    let segments = vec![
        BoundarySegment {
            geom: SegmentGeom::Edge { axis: 0, at: 0.0, normal: [-1.0, 0.0] },
            alpha: 1.0,
            beta: 0.0,
            label: "dirichlet",
        },
        BoundarySegment {
            geom: SegmentGeom::Edge { axis: 1, at: 0.0, normal: [0.0, -1.0] },
            alpha: 1.0,
            beta: 0.0,
            label: "dirichlet",
        },
        BoundarySegment {
            geom: SegmentGeom::Edge { axis: 0, at: 1.0, normal: [1.0, 0.0] },
            alpha: 0.0,
            beta: 1.0,
            label: "neumann",
        },
        BoundarySegment {
            geom: SegmentGeom::Edge { axis: 1, at: 1.0, normal: [0.0, 1.0] },
            alpha: 0.0,
            beta: 1.0,
            label: "neumann",
        },
    ];
    BenchmarkProblem {
        kind: BenchmarkKind::Heat,
        name: "heat",
        domain: Domain::UnitSquare,
        segments,
        output_dim: 1,
        shifted: &[0],
        error_components: &[0],
        constrained: &[0],
        linear_offset: true,
    }
}

/// Poisson with large-amplitude nonlinear Dirichlet data.
pub fn poisson_problem() -> BenchmarkProblem {
    scalar_dirichlet(BenchmarkKind::Poisson, "poisson")
}

/// Well-posed all-Dirichlet Poisson with zero boundary data.
pub fn toy_poisson_problem() -> BenchmarkProblem {
    scalar_dirichlet(BenchmarkKind::ToyPoisson, "toy_poisson")
}

/// Poisson variant with large Dirichlet amplitudes used by the two-phase
/// optimization demonstration; pairs with a 5x80 backbone.
pub fn two_phase_poisson_problem() -> BenchmarkProblem {
    scalar_dirichlet(BenchmarkKind::TwoPhasePoisson, "two_phase_poisson")
}

fn scalar_dirichlet(kind: BenchmarkKind, name: &'static str) -> BenchmarkProblem {
    BenchmarkProblem {
        kind,
        name,
        domain: Domain::UnitSquare,
        segments: SQUARE_DIRICHLET.to_vec(),
        output_dim: 1,
        shifted: &[0],
        error_components: &[0],
        constrained: &[0],
        linear_offset: true,
    }
}

/// Steady incompressible Navier-Stokes at Re = 500 with Dirichlet velocity
/// data; outputs are (u, v, p) and the offset enters both velocities.
pub fn ns_problem() -> BenchmarkProblem {
    BenchmarkProblem {
        kind: BenchmarkKind::NavierStokes,
        name: "ns",
        domain: Domain::UnitSquare,
        segments: SQUARE_DIRICHLET.to_vec(),
        output_dim: 3,
        shifted: &[0, 1],
        error_components: &[0, 1],
        constrained: &[0, 1],
        linear_offset: false,
    }
}

/// Variable-coefficient reaction-diffusion on the unit square minus a
/// centered disk of radius 0.25, all-Dirichlet.
pub fn helmholtz_problem() -> BenchmarkProblem {
    let mut segments = SQUARE_DIRICHLET.to_vec();
    segments.push(BoundarySegment {
        geom: SegmentGeom::Circle { cx: 0.5, cy: 0.5, r: 0.25 },
        alpha: 1.0,
        beta: 0.0,
        label: "dirichlet",
    });
    BenchmarkProblem {
        kind: BenchmarkKind::Helmholtz,
        name: "helmholtz",
        domain: Domain::SquareWithHole { cx: 0.5, cy: 0.5, r: 0.25 },
        segments,
        output_dim: 1,
        shifted: &[0],
        error_components: &[0],
        constrained: &[0],
        linear_offset: true,
    }
}

pub fn problem_by_name(name: &str) -> Option<BenchmarkProblem> {
    match name {
        "heat" => Some(heat_problem()),
        "poisson" => Some(poisson_problem()),
        "toy_poisson" => Some(toy_poisson_problem()),
        "two_phase_poisson" => Some(two_phase_poisson_problem()),
        "ns" => Some(ns_problem()),
        "helmholtz" => Some(helmholtz_problem()),
        _ => None,
    }
}

pub const BENCHMARK_NAMES: [&str; 6] =
    ["heat", "poisson", "ns", "helmholtz", "toy_poisson", "two_phase_poisson"];

impl BenchmarkProblem {
    /// Number of scalar residual components per interior point.
    pub fn residual_components(&self) -> usize {
        match self.kind {
            BenchmarkKind::NavierStokes => 3,
            _ => 1,
        }
    }

    /// Backbone used by the reported experiments for this benchmark.
    pub fn default_mlp(&self) -> MlpSpec {
        match self.kind {
            BenchmarkKind::TwoPhasePoisson => MlpSpec::new(2, self.output_dim, 5, 80),
            _ => MlpSpec::new(2, self.output_dim, 4, 64),
        }
    }

    /// Exact solution components at `x`.
    pub fn exact(&self, x: [f64; 2]) -> Vec3<f64> {
        exact::exact(self.kind, x)
    }

    /// Analytic value/gradient/Hessian of the exact solution.
    pub fn exact_derivs(&self, x: [f64; 2]) -> FieldDerivs<f64> {
        exact::exact_derivs(self.kind, x)
    }

    /// Source term per residual component.
    pub fn source(&self, x: [f64; 2]) -> Vec3<f64> {
        exact::source(self.kind, x)
    }

    /// Coefficient of the linear zeroth-order interior term at `x`
    /// (`dr/du` at fixed derivatives); zero when no such term exists.
    pub fn zeroth_coeff(&self, x: [f64; 2]) -> f64 {
        match self.kind {
            BenchmarkKind::Helmholtz => exact::helmholtz_q(x),
            _ => 0.0,
        }
    }

    /// Interior residual with the zeroth-order terms shifted by `c`
    /// (`c = None` means the raw residual).
    pub fn residual_aligned<C: Ctx>(
        &self,
        ctx: &mut C,
        f: &FieldDerivs<C::V>,
        x: [f64; 2],
        c: Option<C::V>,
    ) -> Vec3<C::V> {
        match self.kind {
            BenchmarkKind::Heat => {
                let lap = ctx.add(f.hxx[0], f.hyy[0]);
                smallvec![lap]
            }
            BenchmarkKind::Poisson | BenchmarkKind::ToyPoisson | BenchmarkKind::TwoPhasePoisson => {
                let lap = ctx.add(f.hxx[0], f.hyy[0]);
                let src = self.source(x)[0];
                smallvec![ctx.add_k(lap, -src)]
            }
            BenchmarkKind::Helmholtz => {
                let q = exact::helmholtz_q(x);
                let (a11, a12, a22, c1, c2) = exact::helmholtz_coeffs(x);
                let mut div = ctx.scale(f.hxx[0], a11);
                let t = ctx.scale(f.hxy[0], 2.0 * a12);
                div = ctx.add(div, t);
                let t = ctx.scale(f.hyy[0], a22);
                div = ctx.add(div, t);
                let t = ctx.scale(f.gx[0], c1);
                div = ctx.add(div, t);
                let t = ctx.scale(f.gy[0], c2);
                div = ctx.add(div, t);
                let mut u = f.val[0];
                if let Some(c) = c {
                    u = ctx.add(u, c);
                }
                let reac = ctx.scale(u, q);
                let r = ctx.sub(reac, div);
                let src = self.source(x)[0];
                smallvec![ctx.add_k(r, -src)]
            }
            BenchmarkKind::NavierStokes => {
                let nu = 1.0 / exact::NS_REYNOLDS;
                let (mut u, mut v) = (f.val[0], f.val[1]);
                if let Some(c) = c {
                    u = ctx.add(u, c);
                    v = ctx.add(v, c);
                }
                let src = self.source(x);
                let momentum = |ctx: &mut C, gx, gy, lap_a, lap_b, pgrad, fs: f64| {
                    let conv_x = ctx.mul(u, gx);
                    let conv_y = ctx.mul(v, gy);
                    let mut r = ctx.add(conv_x, conv_y);
                    r = ctx.add(r, pgrad);
                    let lap = ctx.add(lap_a, lap_b);
                    let visc = ctx.scale(lap, -nu);
                    r = ctx.add(r, visc);
                    ctx.add_k(r, -fs)
                };
                let r_u = momentum(ctx, f.gx[0], f.gy[0], f.hxx[0], f.hyy[0], f.gx[2], src[0]);
                let r_v = momentum(ctx, f.gx[1], f.gy[1], f.hxx[1], f.hyy[1], f.gy[2], src[1]);
                let r_div = ctx.add(f.gx[0], f.gy[1]);
                smallvec![r_u, r_v, r_div]
            }
        }
    }

    /// Raw interior residual (no offset).
    pub fn residual<C: Ctx>(&self, ctx: &mut C, f: &FieldDerivs<C::V>, x: [f64; 2]) -> Vec3<C::V> {
        self.residual_aligned(ctx, f, x, None)
    }

    /// Prescribed boundary values per constrained component at `x` on the
    /// given segment.
    pub fn boundary_value(&self, segment: usize, x: [f64; 2]) -> Vec3<f64> {
        exact::boundary_value(self.kind, &self.segments[segment], x)
    }

    /// Boundary residual(s) with zeroth-order terms shifted by `c`:
    /// `alpha * (u_k [+ c]) + beta * grad(u_k) . n - g_k` per constrained
    /// component `k`.
    pub fn boundary_residual_aligned<C: Ctx>(
        &self,
        ctx: &mut C,
        f: &FieldDerivs<C::V>,
        rec: &BoundaryRecord,
        c: Option<C::V>,
    ) -> Vec3<C::V> {
        let mut out = Vec3::new();
        for (slot, &comp) in self.constrained.iter().enumerate() {
            let mut r = ctx.scale(f.val[comp], rec.alpha);
            if let (Some(c), true) = (c, self.shifted.contains(&comp)) {
                let ac = ctx.scale(c, rec.alpha);
                r = ctx.add(r, ac);
            }
            if rec.beta != 0.0 {
                let dn_x = ctx.scale(f.gx[comp], rec.normal[0]);
                let dn_y = ctx.scale(f.gy[comp], rec.normal[1]);
                let dn = ctx.add(dn_x, dn_y);
                let dn = ctx.scale(dn, rec.beta);
                r = ctx.add(r, dn);
            }
            out.push(ctx.add_k(r, -rec.g[slot]));
        }
        out
    }
}

/// Draw a fixed collocation set: uniform interior points plus per-segment
/// uniform boundary points, deterministic per seed.
pub fn sample_collocation(
    problem: &BenchmarkProblem,
    n_interior: usize,
    n_per_edge: usize,
    seed: u64,
) -> CollocationSet {
    assert!(n_interior >= 1 && n_per_edge >= 1, "counts must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interior = Vec::with_capacity(n_interior);
    let mut gamma = Vec::with_capacity(n_interior);
    for _ in 0..n_interior {
        let p = problem.domain.sample_interior(&mut rng);
        gamma.push(problem.zeroth_coeff(p));
        interior.push(p);
    }
    let mut boundary = Vec::with_capacity(n_per_edge * problem.segments.len());
    for (si, seg) in problem.segments.iter().enumerate() {
        for _ in 0..n_per_edge {
            let t = rng.gen_range(0.0..1.0);
            let (x, normal) = seg.geom.point(t);
            boundary.push(BoundaryRecord {
                x,
                normal,
                alpha: seg.alpha,
                beta: seg.beta,
                g: problem.boundary_value(si, x),
                segment: si,
            });
        }
    }
    CollocationSet { interior, gamma, boundary }
}

impl CollocationSet {
    /// CSV dump; boundary records with several constrained components emit
    /// one row per scalar constraint.
    pub fn to_csv(&self, problem: &BenchmarkProblem) -> String {
        let mut s = String::from("x,y,kind,alpha,beta,g,nx,ny,gamma\n");
        for (p, g) in self.interior.iter().zip(&self.gamma) {
            let _ = writeln!(s, "{},{},interior,0,0,0,0,0,{}", p[0], p[1], g);
        }
        for rec in &self.boundary {
            let label = problem.segments[rec.segment].label;
            for gv in &rec.g {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},0",
                    rec.x[0], rec.x[1], label, rec.alpha, rec.beta, gv, rec.normal[0], rec.normal[1]
                );
            }
        }
        s
    }
}
