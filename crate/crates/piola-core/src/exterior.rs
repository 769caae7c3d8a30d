//! Pointwise multilinear algebra over oriented inner-product spaces:
//! wedge products, Hodge duals, and the intrinsic determinant and
//! cofactor of a linear map between spaces of equal dimension.
//!
//! Multi-indices are strictly increasing and enumerated lexicographically,
//! so entries of `wedge_power_map` are literal minors.

use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("gram matrix not symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },
    #[error("gram matrix not positive definite (pivot {pivot:.3e})")]
    NotPositiveDefinite { pivot: f64 },
    #[error("wedge degree overflow: {a} + {b} > {dim}")]
    DegreeOverflow { a: usize, b: usize, dim: usize },
    #[error("mismatched spaces: dim {a} vs {b}")]
    SpaceMismatch { a: usize, b: usize },
    #[error("map does not preserve the hyperplane (defect {defect:.3e})")]
    HyperplaneNotPreserved { defect: f64 },
}

/// Strictly increasing k-subsets of 0..d in lexicographic order.
pub fn multi_indices(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

pub fn binomial(d: usize, k: usize) -> usize {
    if k > d {
        return 0;
    }
    let k = k.min(d - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (d - i) / (i + 1);
    }
    acc
}

fn index_of(indices: &[Vec<usize>], key: &[usize]) -> usize {
    indices
        .iter()
        .position(|i| i == key)
        .expect("multi-index out of table")
}

/// Sign of the permutation (I, I^c) relative to (0..d), both halves
/// increasing: parity of the number of inversions across the split.
fn complement_sign(idx: &[usize], d: usize) -> f64 {
    let comp: Vec<usize> = (0..d).filter(|i| !idx.contains(i)).collect();
    let mut inversions = 0usize;
    for &a in idx {
        for &b in &comp {
            if a > b {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Finite-dimensional oriented inner-product space: Gram matrix of the
/// working basis plus the sign of the working basis orientation.
#[derive(Clone, Debug)]
pub struct Space<S> {
    pub dim: usize,
    pub gram: Mat<S>,
    pub orientation: i8,
}

impl<S: Scalar> Space<S> {
    pub fn new(dim: usize, gram: Mat<S>, orientation: i8) -> Result<Self, ExteriorError> {
        assert!(dim >= 1 && gram.rows == dim && gram.cols == dim);
        assert!(orientation == 1 || orientation == -1);
        let gv = gram.map_values();
        let defect = gv.sym_defect();
        if defect > 1e-12 {
            return Err(ExteriorError::NotSymmetric { defect });
        }
        match gv.cholesky() {
            Some(l) => {
                let min_pivot = (0..dim)
                    .map(|i| l[(i, i)] * l[(i, i)])
                    .fold(f64::INFINITY, f64::min);
                if min_pivot <= 1e-10 {
                    return Err(ExteriorError::NotPositiveDefinite { pivot: min_pivot });
                }
            }
            None => return Err(ExteriorError::NotPositiveDefinite { pivot: 0.0 }),
        }
        Ok(Space {
            dim,
            gram,
            orientation,
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Space {
            dim,
            gram: Mat::identity(dim),
            orientation: 1,
        }
    }

    /// Factor G = B Bᵀ with B orientation-corrected: the implied
    /// orthonormal basis û (with e_i = Σ_a B_ia û_a) is positively
    /// oriented. Cholesky's factor has positive diagonal, so û carries
    /// the working-basis orientation; a negative orientation is fixed by
    /// flipping û_0, i.e. negating column 0 of B.
    fn ortho_factor(&self) -> Mat<S> {
        let mut b = self
            .gram
            .cholesky()
            .expect("space invariant: positive definite gram");
        if self.orientation < 0 {
            for i in 0..self.dim {
                b[(i, 0)] = -b[(i, 0)];
            }
        }
        b
    }

    pub fn inner(&self, a: &[S], b: &[S]) -> S {
        dot(&self.gram.mul_vec(b), a)
    }

    /// Oriented unit volume element as a top-degree k-vector in the
    /// working basis: coefficient orientation/det(B) = orientation·|G|^{-1/2}
    /// ... obtained directly from ⋆ of the scalar 1.
    pub fn volume(&self) -> KVector<S> {
        hodge_star(self, &KVector::new(self.dim, 0, vec![S::one()]))
    }
}

/// Degree-k multivector: C(d,k) coefficients over increasing multi-indices.
#[derive(Clone, Debug)]
pub struct KVector<S> {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<S>,
}

impl<S: Scalar> KVector<S> {
    pub fn new(dim: usize, degree: usize, coeffs: Vec<S>) -> Self {
        assert!(degree <= dim);
        assert_eq!(coeffs.len(), binomial(dim, degree));
        KVector {
            dim,
            degree,
            coeffs,
        }
    }

    pub fn basis_vector(dim: usize, i: usize) -> Self {
        let mut coeffs = vec![S::zero(); dim];
        coeffs[i] = S::one();
        KVector::new(dim, 1, coeffs)
    }
}

/// Wedge product with shuffle signs.
pub fn wedge<S: Scalar>(a: &KVector<S>, b: &KVector<S>) -> Result<KVector<S>, ExteriorError> {
    if a.dim != b.dim {
        return Err(ExteriorError::SpaceMismatch { a: a.dim, b: b.dim });
    }
    let d = a.dim;
    let k = a.degree + b.degree;
    if k > d {
        return Err(ExteriorError::DegreeOverflow {
            a: a.degree,
            b: b.degree,
            dim: d,
        });
    }
    let ia = multi_indices(d, a.degree);
    let ib = multi_indices(d, b.degree);
    let iout = multi_indices(d, k);
    let mut coeffs = vec![S::zero(); iout.len()];
    for (p, idx_a) in ia.iter().enumerate() {
        for (q, idx_b) in ib.iter().enumerate() {
            if idx_a.iter().any(|i| idx_b.contains(i)) {
                continue;
            }
            // merge and count transpositions needed to sort
            let mut merged: Vec<usize> = idx_a.iter().chain(idx_b.iter()).copied().collect();
            let mut inversions = 0usize;
            for i in 0..merged.len() {
                for j in i + 1..merged.len() {
                    if merged[i] > merged[j] {
                        inversions += 1;
                    }
                }
            }
            merged.sort_unstable();
            let sign = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
            let slot = index_of(&iout, &merged);
            coeffs[slot] = coeffs[slot] + S::from_f64(sign) * a.coeffs[p] * b.coeffs[q];
        }
    }
    Ok(KVector::new(d, k, coeffs))
}

/// k-th compound of a matrix: entry (I, J) = det of the minor with rows
/// I and columns J. This is the action of ∧^k on coefficient vectors.
pub fn compound<S: Scalar>(m: &Mat<S>, k: usize) -> Mat<S> {
    assert_eq!(m.rows, m.cols);
    let d = m.rows;
    let idx = multi_indices(d, k);
    Mat::from_fn(idx.len(), idx.len(), |r, c| m.minor_det(&idx[r], &idx[c]))
}

/// Linear map between oriented inner-product spaces of equal dimension.
/// `matrix` rows index the target working basis, columns the source.
#[derive(Clone, Debug)]
pub struct LinearMap<S> {
    pub source: Space<S>,
    pub target: Space<S>,
    pub matrix: Mat<S>,
}

impl<S: Scalar> LinearMap<S> {
    pub fn new(source: Space<S>, target: Space<S>, matrix: Mat<S>) -> Result<Self, ExteriorError> {
        if source.dim != target.dim {
            return Err(ExteriorError::SpaceMismatch {
                a: source.dim,
                b: target.dim,
            });
        }
        assert_eq!((matrix.rows, matrix.cols), (source.dim, source.dim));
        Ok(LinearMap {
            source,
            target,
            matrix,
        })
    }

    pub fn euclidean(matrix: Mat<S>) -> Self {
        let d = matrix.rows;
        LinearMap {
            source: Space::euclidean(d),
            target: Space::euclidean(d),
            matrix,
        }
    }

    /// ∧^k A acting on source k-vector coefficients.
    pub fn wedge_power_map(&self, k: usize) -> Mat<S> {
        compound(&self.matrix, k)
    }
}

/// Hodge dual determined by the defining relation ⟨α,β⟩ Vol = α ∧ ⋆β.
///
/// Computed by transforming coefficients to an orientation-corrected
/// orthonormal basis (compound of Bᵀ), applying the orthonormal
/// complement-with-sign rule, and transforming back.
pub fn hodge_star<S: Scalar>(space: &Space<S>, v: &KVector<S>) -> KVector<S> {
    assert_eq!(space.dim, v.dim);
    let d = space.dim;
    let k = v.degree;
    let b = space.ortho_factor();
    let to_u = compound(&b.transpose(), k);
    let u = to_u.mul_vec(&v.coeffs);

    let idx_k = multi_indices(d, k);
    let idx_dk = multi_indices(d, d - k);
    let mut w = vec![S::zero(); idx_dk.len()];
    for (p, idx) in idx_k.iter().enumerate() {
        let comp: Vec<usize> = (0..d).filter(|i| !idx.contains(i)).collect();
        let sign = complement_sign(idx, d);
        let slot = index_of(&idx_dk, &comp);
        w[slot] = w[slot] + S::from_f64(sign) * u[p];
    }

    let from_u = compound(&b.transpose().inverse(), d - k);
    KVector::new(d, d - k, from_u.mul_vec(&w))
}

/// Intrinsic determinant: ⋆ᵈ_W ∘ ∧ᵈA ∘ ⋆⁰_V applied to 1.
pub fn intrinsic_det<S: Scalar>(a: &LinearMap<S>) -> S {
    let d = a.source.dim;
    let vol_v = hodge_star(&a.source, &KVector::new(d, 0, vec![S::one()]));
    let top_w = a.wedge_power_map(d).mul_vec(&vol_v.coeffs);
    let scalar = hodge_star(&a.target, &KVector::new(d, d, top_w));
    scalar.coeffs[0]
}

/// Intrinsic cofactor: (−1)^{d−1} ⋆^{d−1}_W ∘ ∧^{d−1}A ∘ ⋆¹_V, with
/// Λ₁ ≅ V and Λ₁ ≅ W identified through the working bases.
pub fn intrinsic_cof<S: Scalar>(a: &LinearMap<S>) -> LinearMap<S> {
    let d = a.source.dim;
    let sign = S::from_f64(if d.is_multiple_of(2) { -1.0 } else { 1.0 });
    let pow = a.wedge_power_map(d - 1);
    let mut matrix = Mat::zeros(d, d);
    for i in 0..d {
        let dual_i = hodge_star(&a.source, &KVector::basis_vector(d, i));
        let pushed = pow.mul_vec(&dual_i.coeffs);
        let col = hodge_star(&a.target, &KVector::new(d, d - 1, pushed));
        for r in 0..d {
            matrix[(r, i)] = sign * col.coeffs[r];
        }
    }
    LinearMap {
        source: a.source.clone(),
        target: a.target.clone(),
        matrix,
    }
}

/// Metric transpose: ⟨Av, w⟩_W = ⟨v, Aᵀw⟩_V; matrix G_V⁻¹ Mᵀ G_W.
pub fn metric_transpose<S: Scalar>(a: &LinearMap<S>) -> LinearMap<S> {
    let matrix = a
        .source
        .gram
        .inverse()
        .mul(&a.matrix.transpose())
        .mul(&a.target.gram);
    LinearMap {
        source: a.target.clone(),
        target: a.source.clone(),
        matrix,
    }
}

/// Residual of the Laplace expansion
/// Det A · I = Aᵀ ∘ Cof A = (Cof A)ᵀ ∘ A.
pub fn laplace_check(a: &LinearMap<f64>) -> f64 {
    let d = a.source.dim;
    let det = intrinsic_det(a);
    let cof = intrinsic_cof(a);
    let lhs1 = metric_transpose(a).matrix.mul(&cof.matrix);
    let lhs2 = metric_transpose(&cof).matrix.mul(&a.matrix);
    let det_i = Mat::<f64>::identity(d).scale(det);
    lhs1.sub(&det_i).norm_inf().max(lhs2.sub(&det_i).norm_inf())
}

/// Orthonormal basis of {v}^⊥ carrying the induced orientation:
/// (v, v_1, ..., v_{d-1}) is positively oriented in the ambient space.
fn induced_complement_basis(space: &Space<f64>, v: &[f64]) -> Vec<Vec<f64>> {
    let d = space.dim;
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for i in 0..d {
        if basis.len() == d {
            break;
        }
        let mut cand = vec![0.0; d];
        cand[i] = 1.0;
        for prev in &basis {
            let proj = space.inner(&cand, prev) / space.inner(prev, prev);
            for j in 0..d {
                cand[j] -= proj * prev[j];
            }
        }
        let n = space.inner(&cand, &cand).sqrt();
        if n > 1e-8 {
            basis.push(cand.iter().map(|x| x / n).collect());
        }
    }
    assert_eq!(basis.len(), d, "failed to complete complement basis");
    // fix induced orientation
    let m = Mat::from_fn(d, d, |r, c| basis[c][r]);
    if (space.orientation as f64) * m.det() < 0.0 {
        for x in basis[d - 1].iter_mut() {
            *x = -*x;
        }
    }
    basis.split_off(1)
}

/// Prop-2.6-style check: for Ã preserving the hyperplanes {v⊥}^⊥ → {w⊥}^⊥,
/// Cof Ã (v⊥) must equal Det(Ã|_hyperplane) · w⊥. Returns the G_W-norm
/// of the defect; the restricted determinant is computed in
/// induced-orientation orthonormal bases of the complements.
pub fn restricted_det_check(
    a: &LinearMap<f64>,
    v_perp: &[f64],
    w_perp: &[f64],
) -> Result<f64, ExteriorError> {
    let d = a.source.dim;
    let vb = induced_complement_basis(&a.source, v_perp);
    let wb = induced_complement_basis(&a.target, w_perp);

    let mut defect = 0.0f64;
    let mut restricted = Mat::zeros(d - 1, d - 1);
    for (c, v) in vb.iter().enumerate() {
        let av = a.matrix.mul_vec(v);
        let along_normal = a.target.inner(&av, w_perp);
        defect = defect.max(along_normal.abs());
        for (r, w) in wb.iter().enumerate() {
            restricted[(r, c)] = a.target.inner(&av, w);
        }
    }
    let scale = 1.0 + a.matrix.norm_inf();
    if defect > 1e-10 * scale {
        return Err(ExteriorError::HyperplaneNotPreserved { defect });
    }

    let det_restricted = restricted.det();
    let cof_v = intrinsic_cof(a).matrix.mul_vec(v_perp);
    let diff: Vec<f64> = cof_v
        .iter()
        .zip(w_perp)
        .map(|(c, w)| c - det_restricted * w)
        .collect();
    Ok(a.target.inner(&diff, &diff).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(d: usize) -> Space<f64> {
        Space::euclidean(d)
    }

    #[test]
    fn wedge_basis_and_antisymmetry() {
        let e0 = KVector::<f64>::basis_vector(3, 0);
        let e1 = KVector::<f64>::basis_vector(3, 1);
        let w = wedge(&e0, &e1).unwrap();
        assert_eq!(w.coeffs, vec![1.0, 0.0, 0.0]); // index {0,1} first
        let ww = wedge(&e0, &e0).unwrap();
        assert!(ww.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn wedge_bilinearity_hand_expansion() {
        // (e0+e1) ∧ (e0−e1) = −2 e0∧e1
        let a = KVector::new(2, 1, vec![1.0, 1.0]);
        let b = KVector::new(2, 1, vec![1.0, -1.0]);
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.coeffs, vec![-2.0]);
    }

    #[test]
    fn wedge_power_map_edges() {
        let m = Mat::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let a = LinearMap::euclidean(m.clone());
        assert_eq!(a.wedge_power_map(0)[(0, 0)], 1.0);
        assert!((a.wedge_power_map(2)[(0, 0)] - (-2.0)).abs() < 1e-15);
        assert_eq!(a.wedge_power_map(1), m);
    }

    #[test]
    fn hodge_euclidean_3d() {
        let s = ev(3);
        let star_e0 = hodge_star(&s, &KVector::basis_vector(3, 0));
        // ⋆e0 = e1∧e2 : multi-indices of degree 2 are {01},{02},{12}
        assert_eq!(star_e0.coeffs, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn hodge_double_sign() {
        for d in 1..=6 {
            let s = ev(d);
            for k in 0..=d {
                let n = binomial(d, k);
                for i in 0..n {
                    let mut c = vec![0.0; n];
                    c[i] = 1.0;
                    let v = KVector::new(d, k, c.clone());
                    let vv = hodge_star(&s, &hodge_star(&s, &v));
                    let sign = if (k * (d - k)) % 2 == 0 { 1.0 } else { -1.0 };
                    for j in 0..n {
                        let expect = if j == i { sign } else { 0.0 };
                        assert!((vv.coeffs[j] - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn hodge_diagonal_gram_hand_solution() {
        // d=2, G = diag(4,1): Vol = 2·e0∧e1 and ⟨e0,e0⟩ = 4,
        // so e0 ∧ ⋆e0 = 8 e0∧e1 forces ⋆e0 = 2·e1 ... solving the
        // defining relation by hand: ⋆e0 = 2 e1, ⋆e1 = -(1/2) e0.
        let g = Mat::from_rows(vec![vec![4.0, 0.0], vec![0.0, 1.0]]);
        let s = Space::new(2, g, 1).unwrap();
        let star_e0 = hodge_star(&s, &KVector::basis_vector(2, 0));
        assert!((star_e0.coeffs[0]).abs() < 1e-12);
        assert!((star_e0.coeffs[1] - 2.0).abs() < 1e-12);
        let vol = s.volume();
        assert!((vol.coeffs[0] - 0.5).abs() < 1e-12); // unit volume: coeff 1/√|G| ...
        // defining relation: ⟨e0,e0⟩·Vol = e0 ∧ ⋆e0
        let lhs = 4.0 * vol.coeffs[0];
        let rhs = wedge(&KVector::basis_vector(2, 0), &star_e0).unwrap().coeffs[0];
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn det_identity_and_orientation() {
        let a = LinearMap::euclidean(Mat::<f64>::identity(4));
        assert!((intrinsic_det(&a) - 1.0).abs() < 1e-14);
        // scaled source metric: G_V = 4I, d=2, matrix = I. The working
        // unit cell of V has volume √det G = 4 and maps to a unit cell
        // of W, so the ratio of volume forms gives Det = 1/4.
        let gv = Mat::<f64>::identity(2).scale(4.0);
        let v = Space::new(2, gv, 1).unwrap();
        let w = ev(2);
        let a = LinearMap::new(v, w, Mat::identity(2)).unwrap();
        assert!((intrinsic_det(&a) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cof_isotropic() {
        for d in 2..=5 {
            for &lambda in &[-2.0, 0.5, 3.0] {
                let a = LinearMap::euclidean(Mat::<f64>::identity(d).scale(lambda));
                let cof = intrinsic_cof(&a);
                let expect = Mat::<f64>::identity(d).scale(lambda.powi(d as i32 - 1));
                assert!(cof.matrix.sub(&expect).norm_inf() < 1e-12);
            }
        }
    }

    #[test]
    fn cof_d1_is_one() {
        let a = LinearMap::euclidean(Mat::from_rows(vec![vec![7.0]]));
        let cof = intrinsic_cof(&a);
        assert!((cof.matrix[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn laplace_identity_and_rank_deficient() {
        let id = LinearMap::euclidean(Mat::<f64>::identity(3));
        assert!(laplace_check(&id) < 1e-14);
        // one zero column
        let m = Mat::from_rows(vec![
            vec![1.0, 0.0, 2.0],
            vec![3.0, 0.0, -1.0],
            vec![0.5, 0.0, 1.0],
        ]);
        let a = LinearMap::euclidean(m);
        assert!((intrinsic_det(&a)).abs() < 1e-12);
        assert!(laplace_check(&a) < 1e-12);
    }

    #[test]
    fn metric_transpose_euclidean_is_transpose() {
        let m = Mat::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let a = LinearMap::euclidean(m.clone());
        assert!(metric_transpose(&a).matrix.sub(&m.transpose()).norm_inf() < 1e-14);
        let back = metric_transpose(&metric_transpose(&a));
        assert!(back.matrix.sub(&m).norm_inf() < 1e-12);
    }

    #[test]
    fn restricted_det_block_diagonal() {
        // Ã = diag(1, B): restricted det along e0 is det B
        let b00 = 2.0;
        let b01 = -1.0;
        let b10 = 0.5;
        let b11 = 3.0;
        let m = Mat::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, b00, b01],
            vec![0.0, b10, b11],
        ]);
        let a = LinearMap::euclidean(m);
        let e0 = [1.0, 0.0, 0.0];
        let r = restricted_det_check(&a, &e0, &e0).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn restricted_det_rejects_non_preserving() {
        let m = Mat::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let a = LinearMap::euclidean(m);
        let e0 = [1.0, 0.0];
        assert!(matches!(
            restricted_det_check(&a, &e0, &e0),
            Err(ExteriorError::HyperplaneNotPreserved { .. })
        ));
    }

    #[test]
    fn space_rejects_bad_grams() {
        let asym = Mat::from_rows(vec![vec![1.0, 0.5], vec![0.0, 1.0]]);
        assert!(matches!(
            Space::new(2, asym, 1),
            Err(ExteriorError::NotSymmetric { .. })
        ));
        let indef = Mat::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            Space::new(2, indef, 1),
            Err(ExteriorError::NotPositiveDefinite { .. })
        ));
    }
}
