//! Exact solutions, analytic derivatives, source terms and boundary data for
//! the six benchmark problems.

use std::f64::consts::PI;

use smallvec::smallvec;

use super::{BenchmarkKind, BoundarySegment, FieldDerivs, Vec3};

pub const NS_REYNOLDS: f64 = 500.0;

const HEAT_T0: f64 = 100.0;
const HEAT_Q: f64 = 15.0;
const HEAT_TERMS: usize = 20;

/// Poisson-family data: `g = A sin(2 pi x) + B cos(3 pi y) + C x + D y + e`,
/// exact solution `g + sin(pi x) sin(pi y)`.
#[derive(Clone, Copy)]
struct PoissonParams {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
}

const POISSON: PoissonParams = PoissonParams { a: 30.0, b: 25.0, c: 18.0, d: 16.0, e: 10.0 };
const TOY: PoissonParams = PoissonParams { a: 0.0, b: 0.0, c: 0.0, d: 0.0, e: 0.0 };
const TWO_PHASE: PoissonParams = PoissonParams { a: 20.0, b: 15.0, c: 8.0, d: 6.0, e: 0.0 };

fn poisson_params(kind: BenchmarkKind) -> PoissonParams {
    match kind {
        BenchmarkKind::Poisson => POISSON,
        BenchmarkKind::ToyPoisson => TOY,
        BenchmarkKind::TwoPhasePoisson => TWO_PHASE,
        _ => unreachable!(),
    }
}

fn poisson_g(p: PoissonParams, x: [f64; 2]) -> f64 {
    p.a * (2.0 * PI * x[0]).sin() + p.b * (3.0 * PI * x[1]).cos() + p.c * x[0] + p.d * x[1] + p.e
}

fn poisson_source(p: PoissonParams, x: [f64; 2]) -> f64 {
    -(2.0 * PI).powi(2) * p.a * (2.0 * PI * x[0]).sin()
        - (3.0 * PI).powi(2) * p.b * (3.0 * PI * x[1]).cos()
        - 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
}

fn poisson_derivs(p: PoissonParams, x: [f64; 2]) -> FieldDerivs<f64> {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
    let (s3y, c3y) = (3.0 * PI * x[1]).sin_cos();
    let mut f = FieldDerivs::with_capacity(1, 0.0);
    f.val[0] = p.a * s2x + p.b * c3y + p.c * x[0] + p.d * x[1] + p.e + sx * sy;
    f.gx[0] = 2.0 * PI * p.a * c2x + p.c + PI * cx * sy;
    f.gy[0] = -3.0 * PI * p.b * s3y + p.d + PI * sx * cy;
    f.hxx[0] = -(2.0 * PI).powi(2) * p.a * s2x - PI * PI * sx * sy;
    f.hyy[0] = -(3.0 * PI).powi(2) * p.b * c3y - PI * PI * sx * sy;
    f.hxy[0] = PI * PI * cx * cy;
    f
}

/// Truncated series solution of the mixed heat problem; each term is exactly
/// harmonic, so interior residuals vanish at any truncation order.
fn heat_derivs(x: [f64; 2]) -> FieldDerivs<f64> {
    let mut f = FieldDerivs::with_capacity(1, 0.0);
    f.val[0] = HEAT_T0;
    for m in 1..=HEAT_TERMS {
        let n = (2 * m - 1) as f64;
        let lam = n * PI / 2.0;
        let a = -8.0 * HEAT_Q / (n * n * PI * PI * (n * PI / 2.0).cosh());
        let (shx, chx) = ((lam * x[0]).sinh(), (lam * x[0]).cosh());
        let (shy, chy) = ((lam * x[1]).sinh(), (lam * x[1]).cosh());
        let (sx, cx) = (lam * x[0]).sin_cos();
        let (sy, cy) = (lam * x[1]).sin_cos();
        f.val[0] += a * (shx * sy + shy * sx);
        f.gx[0] += a * lam * (chx * sy + shy * cx);
        f.gy[0] += a * lam * (shx * cy + chy * sx);
        f.hxx[0] += a * lam * lam * (shx * sy - shy * sx);
        f.hyy[0] += a * lam * lam * (shy * sx - shx * sy);
        f.hxy[0] += a * lam * lam * (chx * cy + chy * cx);
    }
    f
}

fn ns_derivs(x: [f64; 2]) -> FieldDerivs<f64> {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (s2x, c2x) = (2.0 * PI * x[0]).sin_cos();
    let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
    let p2 = PI * PI;
    let p3 = PI * p2;
    let mut f = FieldDerivs::with_capacity(3, 0.0);
    // u = pi sin(pi x) cos(pi y) + 1
    f.val[0] = PI * sx * cy + 1.0;
    f.gx[0] = p2 * cx * cy;
    f.gy[0] = -p2 * sx * sy;
    f.hxx[0] = -p3 * sx * cy;
    f.hyy[0] = -p3 * sx * cy;
    f.hxy[0] = -p3 * cx * sy;
    // v = -pi cos(pi x) sin(pi y) + 1
    f.val[1] = -PI * cx * sy + 1.0;
    f.gx[1] = p2 * sx * sy;
    f.gy[1] = -p2 * cx * cy;
    f.hxx[1] = p3 * cx * sy;
    f.hyy[1] = p3 * cx * sy;
    f.hxy[1] = p3 * sx * cy;
    // p = sin(2 pi x) sin(2 pi y)
    f.val[2] = s2x * s2y;
    f.gx[2] = 2.0 * PI * c2x * s2y;
    f.gy[2] = 2.0 * PI * s2x * c2y;
    f.hxx[2] = -4.0 * p2 * s2x * s2y;
    f.hyy[2] = -4.0 * p2 * s2x * s2y;
    f.hxy[2] = 4.0 * p2 * c2x * c2y;
    f
}

/// Forcing obtained by substituting the manufactured NS fields into the
/// momentum equations (the convective product collapses via sin² + cos² = 1).
fn ns_source(x: [f64; 2]) -> (f64, f64) {
    let p2 = PI * PI;
    let p3 = PI * p2;
    let visc = 2.0 * p3 / NS_REYNOLDS;
    let cxy = (PI * (x[0] + x[1])).cos();
    let fu = 0.5 * p3 * (2.0 * PI * x[0]).sin()
        + p2 * cxy
        + 2.0 * PI * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin()
        + visc * (PI * x[0]).sin() * (PI * x[1]).cos();
    let fv = 0.5 * p3 * (2.0 * PI * x[1]).sin() - p2 * cxy
        + 2.0 * PI * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()
        - visc * (PI * x[0]).cos() * (PI * x[1]).sin();
    (fu, fv)
}

pub fn helmholtz_q(x: [f64; 2]) -> f64 {
    2.0 + (PI * x[0]).cos() * (PI * x[1]).cos()
}

/// Diffusion tensor entries and first-order convection coefficients of the
/// expanded divergence form: `(a11, a12, a22, a11_x + a12_y, a12_x + a22_y)`.
pub fn helmholtz_coeffs(x: [f64; 2]) -> (f64, f64, f64, f64, f64) {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let a11 = 1.0 + 0.3 * x[0];
    let a22 = 1.0 + 0.3 * x[1];
    let a12 = 0.15 * sx * sy;
    let a12x = 0.15 * PI * cx * sy;
    let a12y = 0.15 * PI * sx * cy;
    (a11, a12, a22, 0.3 + a12y, a12x + 0.3)
}

fn helmholtz_derivs(x: [f64; 2]) -> FieldDerivs<f64> {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (s2y, c2y) = (2.0 * PI * x[1]).sin_cos();
    let e = 0.2 * (x[0] + x[1]).exp();
    let p2 = PI * PI;
    let mut f = FieldDerivs::with_capacity(1, 0.0);
    f.val[0] = 100.0 + sx * c2y + e;
    f.gx[0] = PI * cx * c2y + e;
    f.gy[0] = -2.0 * PI * sx * s2y + e;
    f.hxx[0] = -p2 * sx * c2y + e;
    f.hyy[0] = -4.0 * p2 * sx * c2y + e;
    f.hxy[0] = -2.0 * p2 * cx * s2y + e;
    f
}

fn helmholtz_source(x: [f64; 2]) -> f64 {
    let d = helmholtz_derivs(x);
    let (a11, a12, a22, c1, c2) = helmholtz_coeffs(x);
    let div = a11 * d.hxx[0] + 2.0 * a12 * d.hxy[0] + a22 * d.hyy[0] + c1 * d.gx[0] + c2 * d.gy[0];
    -div + helmholtz_q(x) * d.val[0]
}

pub fn exact(kind: BenchmarkKind, x: [f64; 2]) -> Vec3<f64> {
    exact_derivs(kind, x).val
}

pub fn exact_derivs(kind: BenchmarkKind, x: [f64; 2]) -> FieldDerivs<f64> {
    match kind {
        BenchmarkKind::Heat => heat_derivs(x),
        BenchmarkKind::Poisson | BenchmarkKind::ToyPoisson | BenchmarkKind::TwoPhasePoisson => {
            poisson_derivs(poisson_params(kind), x)
        }
        BenchmarkKind::NavierStokes => ns_derivs(x),
        BenchmarkKind::Helmholtz => helmholtz_derivs(x),
    }
}

pub fn source(kind: BenchmarkKind, x: [f64; 2]) -> Vec3<f64> {
    match kind {
        BenchmarkKind::Heat => smallvec![0.0],
        BenchmarkKind::Poisson | BenchmarkKind::ToyPoisson | BenchmarkKind::TwoPhasePoisson => {
            smallvec![poisson_source(poisson_params(kind), x)]
        }
        BenchmarkKind::NavierStokes => {
            let (fu, fv) = ns_source(x);
            smallvec![fu, fv, 0.0]
        }
        BenchmarkKind::Helmholtz => smallvec![helmholtz_source(x)],
    }
}

pub fn boundary_value(kind: BenchmarkKind, seg: &BoundarySegment, x: [f64; 2]) -> Vec3<f64> {
    match kind {
        BenchmarkKind::Heat => {
            if seg.beta == 0.0 {
                smallvec![HEAT_T0]
            } else {
                smallvec![-HEAT_Q]
            }
        }
        BenchmarkKind::Poisson | BenchmarkKind::ToyPoisson | BenchmarkKind::TwoPhasePoisson => {
            smallvec![poisson_g(poisson_params(kind), x)]
        }
        BenchmarkKind::NavierStokes => {
            let d = ns_derivs(x);
            smallvec![d.val[0], d.val[1]]
        }
        BenchmarkKind::Helmholtz => smallvec![helmholtz_derivs(x).val[0]],
    }
}
