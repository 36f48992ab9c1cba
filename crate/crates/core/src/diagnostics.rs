//! Optimization-geometry metrics: gradient cosine similarity and norm ratio,
//! finite-difference Hessian spectra with condition numbers and low-curvature
//! subspace similarity, and 2-D loss-landscape slices.

use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue threshold below which a direction counts as flat and
/// the condition number is reported as infinite.
pub const FLAT_EIGENVALUE_TOL: f64 = 1e-12;

/// Relative threshold bounding the numerically degenerate low-curvature
/// cluster used for basis canonicalization.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum DiagError {
    /// Subspace similarity requires orthonormal columns.
    NotOrthonormal { deviation: f64 },
    /// The three anchors of a slice plane are collinear.
    DegeneratePlane,
    ZeroNormGradient,
    Dimension(String),
}

impl fmt::Display for DiagError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagError::NotOrthonormal { deviation } => {
                write!(f, "columns not orthonormal (deviation {deviation:.2e})")
            }
            DiagError::DegeneratePlane => write!(f, "slice anchors are collinear"),
            DiagError::ZeroNormGradient => write!(f, "zero-norm gradient"),
            DiagError::Dimension(m) => write!(f, "dimension error: {m}"),
        }
    }
}

impl std::error::Error for DiagError {}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine of the angle between the residual and boundary gradients; `None`
/// when either norm vanishes (logged as missing, excluded from fractions).
pub fn grad_cosine(g_res: &[f64], g_bc: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(g_res), norm(g_bc));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let dot: f64 = g_res.iter().zip(g_bc).map(|(a, b)| a * b).sum();
    Some(dot / (na * nb))
}

/// Fraction of valid entries with positive cosine.
pub fn positive_cos_fraction(values: impl IntoIterator<Item = Option<f64>>) -> f64 {
    let mut pos = 0usize;
    let mut valid = 0usize;
    for v in values {
        if let Some(c) = v {
            valid += 1;
            if c > 0.0 {
                pos += 1;
            }
        }
    }
    if valid == 0 {
        0.0
    } else {
        pos as f64 / valid as f64
    }
}

/// `|grad L_res| / |grad L_bc|`; infinite when the denominator vanishes.
pub fn grad_norm_ratio(g_res: &[f64], g_bc: &[f64]) -> f64 {
    let nb = norm(g_bc);
    if nb == 0.0 {
        return f64::INFINITY;
    }
    norm(g_res) / nb
}

/// Eigen-analysis of a symmetrized finite-difference Hessian.
#[derive(Clone, Debug)]
pub struct HessianReport {
    /// Eigenvalues sorted ascending by value.
    pub eigenvalues: Vec<f64>,
    /// `lambda_max / |lambda_min|` over magnitudes; infinite when the
    /// smallest magnitude is below [`FLAT_EIGENVALUE_TOL`] relative to the
    /// largest.
    pub condition_number: f64,
    /// Orthonormal basis of the `k` lowest-|lambda| directions (columns).
    pub low_curvature_basis: DMatrix<f64>,
}

/// Dense central-difference Hessian of `loss` at `theta`, symmetrized and
/// eigendecomposed. `k` selects the size of the low-curvature basis.
///
/// Entries use the four-point formula
/// `[f(x+h_i+h_j) - f(x+h_i-h_j) - f(x-h_i+h_j) + f(x-h_i-h_j)] / (4h^2)`.
/// Within a numerically flat cluster (relative magnitude below
/// [`CLUSTER_TOL`]) individual eigenvectors are arbitrary, so the cluster
/// basis is canonicalized by projecting a fixed probe sequence (constant,
/// then linear ramp) onto the cluster subspace; this makes low-curvature
/// bases comparable across reports. All columns carry a fixed sign
/// convention.
pub fn fd_hessian(
    loss: impl Fn(&[f64]) -> f64,
    theta: &[f64],
    h: f64,
    k: usize,
) -> Result<HessianReport, DiagError> {
    let n = theta.len();
    if k > n {
        return Err(DiagError::Dimension(format!("k = {k} exceeds dimension {n}")));
    }
    let mut hmat = DMatrix::<f64>::zeros(n, n);
    let mut x = theta.to_vec();
    let eval = |x: &mut Vec<f64>, i: usize, si: f64, j: usize, sj: f64| {
        x[i] += si * h;
        x[j] += sj * h;
        let v = loss(x);
        x[i] -= si * h;
        x[j] -= sj * h;
        v
    };
    for i in 0..n {
        for j in i..n {
            let v = (eval(&mut x, i, 1.0, j, 1.0) - eval(&mut x, i, 1.0, j, -1.0)
                - eval(&mut x, i, -1.0, j, 1.0)
                + eval(&mut x, i, -1.0, j, -1.0))
                / (4.0 * h * h);
            hmat[(i, j)] = v;
            hmat[(j, i)] = v;
        }
    }

    let sym = (&hmat + hmat.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let lam_max_abs = eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
    let lam_max = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lam_min_abs = eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l.abs()));
    let condition_number = if lam_max_abs == 0.0 || lam_min_abs < FLAT_EIGENVALUE_TOL * lam_max_abs
    {
        f64::INFINITY
    } else {
        lam_max / lam_min_abs
    };

    // low-curvature selection by |lambda|
    let mut by_abs: Vec<usize> = (0..n).collect();
    by_abs.sort_by(|&a, &b| {
        eig.eigenvalues[a].abs().partial_cmp(&eig.eigenvalues[b].abs()).unwrap()
    });
    let mut basis = DMatrix::<f64>::zeros(n, k);
    for (col, &idx) in by_abs.iter().take(k).enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(idx));
    }

    // canonicalize the flat cluster
    let cluster: Vec<usize> = by_abs
        .iter()
        .take(k)
        .filter(|&&i| eig.eigenvalues[i].abs() < CLUSTER_TOL * lam_max_abs.max(f64::MIN_POSITIVE))
        .cloned()
        .collect();
    if cluster.len() > 1 {
        let m = cluster.len();
        let mut span = DMatrix::<f64>::zeros(n, m);
        for (col, &idx) in cluster.iter().enumerate() {
            span.set_column(col, &eig.eigenvectors.column(idx));
        }
        let canon = canonical_cluster_basis(&span);
        for col in 0..m {
            basis.set_column(col, &canon.column(col));
        }
    }
    for mut col in basis.column_iter_mut() {
        let lead = col.iter().cloned().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        if lead < 0.0 {
            col.neg_mut();
        }
    }

    Ok(HessianReport { eigenvalues, condition_number, low_curvature_basis: basis })
}

/// Deterministic basis for a degenerate subspace: project the constant probe
/// and a linear ramp onto the span, Gram-Schmidt, and fill any remaining
/// directions from the original columns.
fn canonical_cluster_basis(span: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (span.nrows(), span.ncols());
    let proj = span * span.transpose();
    let mut probes: Vec<DVector<f64>> = Vec::new();
    probes.push(DVector::from_element(n, 1.0 / (n as f64).sqrt()));
    probes.push(DVector::from_iterator(n, (0..n).map(|i| i as f64 - (n as f64 - 1.0) / 2.0)));
    for c in 0..m {
        probes.push(span.column(c).into_owned());
    }
    let mut out = DMatrix::<f64>::zeros(n, m);
    let mut col = 0;
    for probe in probes {
        if col == m {
            break;
        }
        let mut v = &proj * probe;
        for c in 0..col {
            let d = out.column(c).dot(&v);
            v -= out.column(c) * d;
        }
        let nv = v.norm();
        if nv > 1e-10 {
            out.set_column(col, &(v / nv));
            col += 1;
        }
    }
    out
}

/// `|V_i^T V_j|_F / sqrt(k)` between two orthonormal k-column bases.
pub fn subspace_similarity(vi: &DMatrix<f64>, vj: &DMatrix<f64>) -> Result<f64, DiagError> {
    if vi.ncols() != vj.ncols() || vi.nrows() != vj.nrows() {
        return Err(DiagError::Dimension("basis shapes differ".into()));
    }
    let k = vi.ncols();
    for v in [vi, vj] {
        let gram = v.transpose() * v;
        let dev = (&gram - DMatrix::identity(k, k)).norm();
        if dev > 1e-8 {
            return Err(DiagError::NotOrthonormal { deviation: dev });
        }
    }
    Ok((vi.transpose() * vj).norm() / (k as f64).sqrt())
}

/// Two-dimensional affine slice through three anchors.
#[derive(Clone, Debug)]
pub struct SlicePlane {
    pub center: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Gram-Schmidt plane: `d1` along `anchor1 - anchor0`, `d2` the normalized
/// orthogonal residual of `anchor2 - anchor0`.
pub fn build_slice_plane(
    anchor0: &[f64],
    anchor1: &[f64],
    anchor2: &[f64],
) -> Result<SlicePlane, DiagError> {
    let n = anchor0.len();
    if anchor1.len() != n || anchor2.len() != n {
        return Err(DiagError::Dimension("anchor lengths differ".into()));
    }
    let mut d1: Vec<f64> = anchor1.iter().zip(anchor0).map(|(a, b)| a - b).collect();
    let n1 = norm(&d1);
    if n1 == 0.0 {
        return Err(DiagError::DegeneratePlane);
    }
    for v in &mut d1 {
        *v /= n1;
    }
    let mut d2: Vec<f64> = anchor2.iter().zip(anchor0).map(|(a, b)| a - b).collect();
    let scale = norm(&d2).max(n1);
    let dot: f64 = d2.iter().zip(&d1).map(|(a, b)| a * b).sum();
    for (v, d) in d2.iter_mut().zip(&d1) {
        *v -= dot * d;
    }
    let n2 = norm(&d2);
    if n2 <= 1e-10 * scale.max(1.0) {
        return Err(DiagError::DegeneratePlane);
    }
    for v in &mut d2 {
        *v /= n2;
    }
    Ok(SlicePlane { center: anchor0.to_vec(), d1, d2 })
}

/// Loss values over an `n x n` grid of the affine plane.
#[derive(Clone, Debug)]
pub struct SliceGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Row-major `[alpha][beta]`; non-finite losses stored as NaN sentinels.
    pub loss: Vec<f64>,
}

impl SliceGrid {
    /// CSV with a log-scaled companion column.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("alpha,beta,loss,log10_loss\n");
        for (i, &a) in self.alphas.iter().enumerate() {
            for (j, &b) in self.betas.iter().enumerate() {
                let l = self.loss[i * self.betas.len() + j];
                let lg = if l > 0.0 { l.log10() } else { f64::NEG_INFINITY };
                let _ = writeln!(s, "{a},{b},{l},{lg}");
            }
        }
        s
    }
}

/// Evaluate `loss` on the plane over `[a_lo, a_hi] x [b_lo, b_hi]`.
pub fn evaluate_slice(
    plane: &SlicePlane,
    loss: impl Fn(&[f64]) -> f64,
    n: usize,
    a_range: (f64, f64),
    b_range: (f64, f64),
) -> SliceGrid {
    assert!(n >= 2);
    let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let alphas: Vec<f64> = (0..n).map(|i| lin(a_range.0, a_range.1, i)).collect();
    let betas: Vec<f64> = (0..n).map(|i| lin(b_range.0, b_range.1, i)).collect();
    let mut point = vec![0.0; plane.center.len()];
    let mut loss_grid = Vec::with_capacity(n * n);
    for &a in &alphas {
        for &b in &betas {
            for (idx, p) in point.iter_mut().enumerate() {
                *p = plane.center[idx] + a * plane.d1[idx] + b * plane.d2[idx];
            }
            let l = loss(&point);
            loss_grid.push(if l.is_finite() { l } else { f64::NAN });
        }
    }
    SliceGrid { alphas, betas, loss: loss_grid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cosine_basic_values() {
        assert_relative_eq!(grad_cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(grad_cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(grad_cosine(&[1.0, -2.0], &[-1.0, 2.0]).unwrap(), -1.0, epsilon = 1e-15);
        assert!(grad_cosine(&[0.0, 0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn cosine_is_scale_invariant() {
        let g1 = [0.3, -0.7, 1.9];
        let g2 = [-0.2, 0.9, 0.4];
        let base = grad_cosine(&g1, &g2).unwrap();
        let g1s: Vec<f64> = g1.iter().map(|x| x * 17.0).collect();
        let g2s: Vec<f64> = g2.iter().map(|x| x * 0.003).collect();
        assert_relative_eq!(grad_cosine(&g1s, &g2s).unwrap(), base, epsilon = 1e-14);
    }

    #[test]
    fn positive_fraction_counting() {
        assert_eq!(positive_cos_fraction([Some(0.1), Some(0.9), Some(0.5)]), 1.0);
        assert_eq!(positive_cos_fraction([Some(0.1), Some(-0.1), Some(0.2), Some(-0.2)]), 0.5);
        // missing values excluded from the denominator
        assert_eq!(positive_cos_fraction([Some(1.0), None, Some(-1.0), None]), 0.5);
    }

    #[test]
    fn norm_ratio_values() {
        assert_relative_eq!(grad_norm_ratio(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
        assert_relative_eq!(grad_norm_ratio(&[3.0, 0.0], &[1.0, 0.0]), 3.0);
        assert_eq!(grad_norm_ratio(&[0.0], &[1.0]), 0.0);
        assert_eq!(grad_norm_ratio(&[1.0], &[0.0]), f64::INFINITY);
    }

    #[test]
    fn fd_hessian_on_diagonal_quadratic() {
        let loss = |x: &[f64]| 0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1]);
        let rep = fd_hessian(loss, &[0.3, -0.2], 1e-3, 1).unwrap();
        assert_relative_eq!(rep.eigenvalues[0], 1.0, max_relative = 1e-6);
        assert_relative_eq!(rep.eigenvalues[1], 4.0, max_relative = 1e-6);
        assert_relative_eq!(rep.condition_number, 4.0, max_relative = 1e-6);
        // low-curvature direction ~ e0
        assert!(rep.low_curvature_basis[(0, 0)].abs() > 0.999);
    }

    #[test]
    fn fd_hessian_identity_and_flat() {
        let rep = fd_hessian(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>(), &[0.1; 3], 1e-3, 1)
            .unwrap();
        assert_relative_eq!(rep.condition_number, 1.0, max_relative = 1e-5);
        // a loss flat in one direction reports an infinite condition number
        let rep = fd_hessian(|x: &[f64]| (x[0] - x[1]).powi(2), &[0.4, 0.1], 1e-3, 1).unwrap();
        assert!(rep.condition_number.is_infinite());
    }

    #[test]
    fn subspace_similarity_identities() {
        let v = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
        ]);
        assert_relative_eq!(subspace_similarity(&v, &v).unwrap(), 1.0, epsilon = 1e-14);
        let w = DMatrix::from_columns(&[DVector::from_vec(vec![0.0, 0.0, 1.0])]);
        let v1 = DMatrix::from_columns(&[DVector::from_vec(vec![1.0, 0.0, 0.0])]);
        assert_relative_eq!(subspace_similarity(&v1, &w).unwrap(), 0.0, epsilon = 1e-14);
        let bad = DMatrix::from_columns(&[DVector::from_vec(vec![2.0, 0.0, 0.0])]);
        assert!(matches!(
            subspace_similarity(&bad, &v1),
            Err(DiagError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn subspace_similarity_rotation_invariant() {
        // random 2-D subspace of R^5, remixed by an in-plane rotation
        let a = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 0.3]).normalize();
        let mut b = DVector::from_vec(vec![0.4, -0.3, 0.9, 1.5, -0.2]);
        b -= &a * a.dot(&b);
        let b = b.normalize();
        let v = DMatrix::from_columns(&[a.clone(), b.clone()]);
        let (c, s) = (0.6_f64, 0.8_f64);
        let w = DMatrix::from_columns(&[&a * c + &b * s, -(&a) * s + &b * c]);
        let sim = subspace_similarity(&v, &w).unwrap();
        assert!((sim - 1.0).abs() < 1e-10);
    }

    #[test]
    fn slice_plane_construction_and_degeneracy() {
        let plane =
            build_slice_plane(&[0.0, 0.0, 0.0], &[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0]).unwrap();
        assert_relative_eq!(plane.d1[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(plane.d2[1], 1.0, epsilon = 1e-14);
        let dot: f64 = plane.d1.iter().zip(&plane.d2).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
        // anchor2 on the d1 line
        assert!(matches!(
            build_slice_plane(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]),
            Err(DiagError::DegeneratePlane)
        ));
    }

    #[test]
    fn slice_grid_center_value_and_shape() {
        let plane = build_slice_plane(&[1.0, 1.0], &[2.0, 1.0], &[1.0, 2.0]).unwrap();
        let loss = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2);
        let grid = evaluate_slice(&plane, loss, 5, (-1.0, 1.0), (-1.0, 1.0));
        assert_eq!(grid.loss.len(), 25);
        // (alpha, beta) = (0, 0) is the center anchor
        let idx = 2 * 5 + 2;
        assert_relative_eq!(grid.loss[idx], 0.0, epsilon = 1e-14);
        assert_eq!(grid.to_csv().lines().count(), 26);
    }
}
