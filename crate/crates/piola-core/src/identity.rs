//! Pointwise identity engine: the differential and its intrinsic
//! determinant/cofactor, the coderivative of the cofactor, the Piola
//! transform, Riemannian divergences, and the coordinate-form residuals.
//!
//! Differentiation strategy: chart-level primitives carry exact symbolic
//! derivatives; derived fields (Cof df, Det df, √|h∘f|) are
//! differentiated by running the whole algebra pipeline over dual
//! numbers, so residuals measure only rounding.

use crate::chart::{Chart, ChartMap, VectorField};
use crate::expr::EvalError;
use crate::exterior::{intrinsic_cof, intrinsic_det, metric_transpose, LinearMap, Space};
use crate::linalg::{norm_inf_vec, Mat};
use crate::scalar::{Dual, Dual64, Scalar};

/// Everything the pointwise pipeline needs at one source point.
pub struct PointState<S> {
    pub p: Vec<S>,
    pub fp: Vec<S>,
    /// Coordinate Jacobian, row i = source axis: J[(i, a)] = ∂_i f^a.
    pub jac: Mat<S>,
    pub g: Mat<S>,
    pub h: Mat<S>,
}

impl<S: Scalar> PointState<S> {
    pub fn at(map: &ChartMap, p: &[S]) -> Result<Self, EvalError> {
        let fp = map.apply(p)?;
        Ok(PointState {
            jac: map.jacobian_at(p)?,
            g: map.source.metric_at(p)?,
            h: map.target.metric_at(&fp)?,
            p: p.to_vec(),
            fp,
        })
    }

    /// df as a linear map between the oriented inner-product spaces
    /// (T_p M1, g(p)) and (T_fp M2, h(fp)); matrix rows index the target.
    pub fn linear_map(&self) -> LinearMap<S> {
        LinearMap {
            source: Space {
                dim: self.g.rows,
                gram: self.g.clone(),
                orientation: 1,
            },
            target: Space {
                dim: self.h.rows,
                gram: self.h.clone(),
                orientation: 1,
            },
            matrix: self.jac.transpose(),
        }
    }

    /// Intrinsic cofactor in coordinate bases; entry (α, i) = (Cof df)_i^α.
    pub fn cof_matrix(&self) -> Mat<S> {
        intrinsic_cof(&self.linear_map()).matrix
    }

    pub fn det(&self) -> S {
        intrinsic_det(&self.linear_map())
    }

    /// Matrix cofactor of the plain Jacobian: K[(j, γ)] carries the
    /// signed minor obtained by deleting row j and column γ of [df],
    /// i.e. the (cof [df]ᵀ)^j_γ of the coordinate identity.
    pub fn matrix_cof(&self) -> Mat<S> {
        matrix_cofactor(&self.jac)
    }
}

pub fn matrix_cofactor<S: Scalar>(m: &Mat<S>) -> Mat<S> {
    let d = m.rows;
    if d == 1 {
        return Mat::identity(1);
    }
    Mat::from_fn(d, d, |i, j| {
        let ri: Vec<usize> = (0..d).filter(|&r| r != i).collect();
        let ci: Vec<usize> = (0..d).filter(|&c| c != j).collect();
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        S::from_f64(sign) * m.minor_det(&ri, &ci)
    })
}

/// Lift a real point to duals seeded along coordinate `dir`.
fn seed(p: &[f64], dir: usize) -> Vec<Dual64> {
    p.iter()
        .enumerate()
        .map(|(k, &x)| Dual::new(x, if k == dir { 1.0 } else { 0.0 }))
        .collect()
}

fn seed_along(p: &[f64], direction: &[f64]) -> Vec<Dual64> {
    p.iter()
        .zip(direction)
        .map(|(&x, &v)| Dual::new(x, v))
        .collect()
}

pub fn differential_at(map: &ChartMap, p: &[f64]) -> Result<LinearMap<f64>, EvalError> {
    Ok(PointState::at(map, p)?.linear_map())
}

/// Intrinsic determinant of df.
pub fn det_df_at(map: &ChartMap, p: &[f64]) -> Result<f64, EvalError> {
    Ok(PointState::at(map, p)?.det())
}

/// Independent coordinate route: √|h∘f| / √|g| · det[df].
pub fn coordinate_det_df_at(map: &ChartMap, p: &[f64]) -> Result<f64, EvalError> {
    let st = PointState::at(map, p)?;
    Ok(st.h.det().sqrt() / st.g.det().sqrt() * st.jac.det())
}

/// Intrinsic cofactor matrix, entry (α, i) = (Cof df)_i^α.
pub fn cof_df_at(map: &ChartMap, p: &[f64]) -> Result<Mat<f64>, EvalError> {
    Ok(PointState::at(map, p)?.cof_matrix())
}

/// Residual of the coordinate cofactor identity
/// g^{ij} (h∘f)_{αβ} (Cof df)_i^α = (√|h∘f|/√|g|) (cof[df]ᵀ)^j_β.
pub fn coordinate_cof_identity_residual(map: &ChartMap, p: &[f64]) -> Result<f64, EvalError> {
    let st = PointState::at(map, p)?;
    let d = map.dim();
    let cof = st.cof_matrix();
    let k = st.matrix_cof();
    let g_inv = st.g.inverse();
    let ratio = st.h.det().sqrt() / st.g.det().sqrt();
    let mut defect = 0.0f64;
    for j in 0..d {
        for beta in 0..d {
            let mut lhs = 0.0;
            for i in 0..d {
                for alpha in 0..d {
                    lhs += g_inv[(i, j)] * st.h[(alpha, beta)] * cof[(alpha, i)];
                }
            }
            defect = defect.max((lhs - ratio * k[(j, beta)]).abs());
        }
    }
    Ok(defect)
}

/// Covariant derivative of ω = Cof df as a section of T*M1 ⊗ f*TM2:
/// (∇_i ω)_j^α = ∂_i ω_j^α − Γ^k_{ij} ω_k^α + (Γ^α_{βγ}∘f) ∂_i f^β ω_j^γ,
/// with ∂_i ω from dual-number propagation through the cofactor pipeline.
/// Flattened as [(i*d + j)*d + α].
pub fn covariant_derivative_cof_at(map: &ChartMap, p: &[f64]) -> Result<Vec<f64>, EvalError> {
    let d = map.dim();
    let st = PointState::at(map, p)?;
    let cof = st.cof_matrix();
    let gamma_src = map.source.christoffel_at(p)?;
    let gamma_tgt = map.target.christoffel_at(&st.fp)?;

    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        let dual_cof = PointState::at(map, &seed(p, i))?.cof_matrix();
        for j in 0..d {
            for alpha in 0..d {
                let mut v = dual_cof[(alpha, j)].der;
                for k in 0..d {
                    v -= gamma_src[(k * d + i) * d + j] * cof[(alpha, k)];
                }
                for beta in 0..d {
                    for gm in 0..d {
                        v += gamma_tgt[(alpha * d + beta) * d + gm]
                            * st.jac[(i, beta)]
                            * cof[(gm, j)];
                    }
                }
                out[(i * d + j) * d + alpha] = v;
            }
        }
    }
    Ok(out)
}

/// Coderivative (δω)^α = −g^{ij} (∇_i ω)_j^α with ω = Cof df.
/// Its vanishing is the pointwise Riemannian Piola identity.
pub fn coderivative_cof_at(map: &ChartMap, p: &[f64]) -> Result<Vec<f64>, EvalError> {
    let d = map.dim();
    let g_inv = map.source.inverse_metric_at(p)?;
    let grad = covariant_derivative_cof_at(map, p)?;
    let mut out = vec![0.0; d];
    for alpha in 0..d {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += g_inv[(i, j)] * grad[(i * d + j) * d + alpha];
            }
        }
        out[alpha] = -acc;
    }
    Ok(out)
}

/// Frame route for the coderivative: −Σ_a (∇_{E_a} ω)(E_a) in the
/// Gram-Schmidt orthonormal frame. Cross-checks the index route.
pub fn coderivative_cof_frame_at(map: &ChartMap, p: &[f64]) -> Result<Vec<f64>, EvalError> {
    let d = map.dim();
    let frame = map.source.orthonormal_frame_at(p)?;
    let grad = covariant_derivative_cof_at(map, p)?;
    let mut out = vec![0.0; d];
    for alpha in 0..d {
        let mut acc = 0.0;
        for a in 0..d {
            for i in 0..d {
                for j in 0..d {
                    acc += frame[(i, a)] * frame[(j, a)] * grad[(i * d + j) * d + alpha];
                }
            }
        }
        out[alpha] = -acc;
    }
    Ok(out)
}

/// Scale of the cofactor at p, used to normalize Piola residuals.
pub fn cof_scale(map: &ChartMap, p: &[f64]) -> Result<f64, EvalError> {
    Ok(cof_df_at(map, p)?.norm_inf())
}

/// Piola transform (Cof df)ᵀ(f*X) at p, in source coordinates.
/// Generic over the scalar so its divergence can be taken with duals.
pub fn piola_transform_at<S: Scalar>(
    map: &ChartMap,
    x: &VectorField,
    p: &[S],
) -> Result<Vec<S>, EvalError> {
    let st = PointState::at(map, p)?;
    let cof = LinearMap {
        source: Space {
            dim: st.g.rows,
            gram: st.g.clone(),
            orientation: 1,
        },
        target: Space {
            dim: st.h.rows,
            gram: st.h.clone(),
            orientation: 1,
        },
        matrix: st.cof_matrix(),
    };
    let x_at_fp = x.at(&st.fp)?;
    Ok(metric_transpose(&cof).matrix.mul_vec(&x_at_fp))
}

/// Riemannian divergence of an expression vector field:
/// (1/√|g|) ∂_i(√|g| X^i) with exact dual derivatives.
pub fn divergence_at(chart: &Chart, x: &VectorField, p: &[f64]) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for i in 0..chart.dim {
        let pd = seed(p, i);
        let dens = chart.volume_density_at(&pd)?;
        let xi = x.components[i].eval_s(&pd)?;
        acc += (dens * xi).der;
    }
    Ok(acc / chart.volume_density_at(p)?)
}

/// Independent route: ∂_i X^i + Γ^i_{ik} X^k.
pub fn divergence_trace_at(chart: &Chart, x: &VectorField, p: &[f64]) -> Result<f64, EvalError> {
    let d = chart.dim;
    let gamma = chart.christoffel_at(p)?;
    let xv = x.at(p)?;
    let mut acc = 0.0;
    for i in 0..d {
        acc += x.components[i].eval_s(&seed(p, i))?.der;
        for k in 0..d {
            acc += gamma[(i * d + i) * d + k] * xv[k];
        }
    }
    Ok(acc)
}

/// Divergence of a derived (non-expression) vector field given by a
/// dual-valued evaluator: Σ_i ∂_i Y^i + Γ^i_{ik} Y^k.
pub fn divergence_derived_at(
    chart: &Chart,
    p: &[f64],
    mut field: impl FnMut(&[Dual64]) -> Result<Vec<Dual64>, EvalError>,
) -> Result<f64, EvalError> {
    let d = chart.dim;
    let gamma = chart.christoffel_at(p)?;
    let mut acc = 0.0;
    let mut value = vec![0.0; d];
    for i in 0..d {
        let y = field(&seed(p, i))?;
        acc += y[i].der;
        if i == 0 {
            for k in 0..d {
                value[k] = y[k].val;
            }
        }
    }
    for i in 0..d {
        for k in 0..d {
            acc += gamma[(i * d + i) * d + k] * value[k];
        }
    }
    Ok(acc)
}

/// Outcome of a pointwise check that may be skipped by a guard.
pub enum PointOutcome {
    Residual(f64),
    Skipped { reason: String },
}

/// Marsden-Hughes residual |div Piola(X) − ((div X)∘f)·Det df|, guarded
/// to local diffeomorphisms (|Det df| ≥ 1e-6).
pub fn residual_marsden_hughes(
    map: &ChartMap,
    x: &VectorField,
    p: &[f64],
) -> Result<PointOutcome, EvalError> {
    let det = det_df_at(map, p)?;
    if det.abs() < 1e-6 {
        return Ok(PointOutcome::Skipped {
            reason: format!("|Det df| = {:.3e} below diffeomorphism guard", det.abs()),
        });
    }
    let div_piola =
        divergence_derived_at(&map.source, p, |pd| piola_transform_at(map, x, pd))?;
    let fp = map.apply(p)?;
    let div_x = divergence_at(&map.target, x, &fp)?;
    Ok(PointOutcome::Residual((div_piola - div_x * det).abs()))
}

/// Generalized residual (no diffeomorphism requirement):
/// |div Piola(X) − ((div X)∘f)·Det df + ⟨f*X, δ Cof df⟩_h|.
pub fn residual_generalized(map: &ChartMap, x: &VectorField, p: &[f64]) -> Result<f64, EvalError> {
    let det = det_df_at(map, p)?;
    let div_piola =
        divergence_derived_at(&map.source, p, |pd| piola_transform_at(map, x, pd))?;
    let fp = map.apply(p)?;
    let div_x = divergence_at(&map.target, x, &fp)?;
    let delta = coderivative_cof_at(map, p)?;
    let h = map.target.metric_at(&fp)?;
    let x_fp = x.at(&fp)?;
    let pairing = crate::linalg::dot(&h.mul_vec(&delta), &x_fp);
    Ok((div_piola - div_x * det + pairing).abs())
}

/// √|h| at the image point, generic for dual propagation.
fn sqrt_h_at<S: Scalar>(map: &ChartMap, p: &[S]) -> Result<S, EvalError> {
    let fp = map.apply(p)?;
    map.target.volume_density_at(&fp)
}

/// Coordinate residuals of the Riemannian Piola identity.
///
/// full_γ    = −(1/√|h∘f|) ∂_j((cof[df]ᵀ)^j_γ √|h∘f|) + (Γ^β_{βγ}∘f) det[df]
/// simplified_γ = ∂_j((cof[df]ᵀ)^j_γ)
///
/// Both vanish for C² maps.
pub fn residual_coordinate(map: &ChartMap, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let d = map.dim();
    let st = PointState::at(map, p)?;
    let gamma_tgt = map.target.christoffel_at(&st.fp)?;
    let det_j = st.jac.det();
    let sqrt_h = st.h.det().sqrt();

    // ∂_j of K^j_γ and of K^j_γ·√|h∘f| via duals
    let mut div_k = vec![0.0; d];
    let mut div_k_weighted = vec![0.0; d];
    for j in 0..d {
        let pd = seed(p, j);
        let k_dual = PointState::at(map, &pd)?.matrix_cof();
        let w = sqrt_h_at(map, &pd)?;
        for gm in 0..d {
            div_k[gm] += k_dual[(j, gm)].der;
            div_k_weighted[gm] += (k_dual[(j, gm)] * w).der;
        }
    }

    let mut full = vec![0.0; d];
    for gm in 0..d {
        let mut gamma_trace = 0.0;
        for beta in 0..d {
            gamma_trace += gamma_tgt[(beta * d + beta) * d + gm];
        }
        full[gm] = -div_k_weighted[gm] / sqrt_h + gamma_trace * det_j;
    }
    Ok((full, div_k))
}

/// Classical trace identity Γ^β_{βγ} = ∂_γ √|h| / √|h| at a target
/// point; returns the max-abs defect over γ.
pub fn christoffel_trace_identity_residual(chart: &Chart, q: &[f64]) -> Result<f64, EvalError> {
    let d = chart.dim;
    let gamma = chart.christoffel_at(q)?;
    let sqrt_h = chart.volume_density_at(q)?;
    let mut defect = 0.0f64;
    for gm in 0..d {
        let dh = chart.volume_density_at(&seed(q, gm))?.der;
        let mut trace = 0.0;
        for beta in 0..d {
            trace += gamma[(beta * d + beta) * d + gm];
        }
        defect = defect.max((trace - dh / sqrt_h).abs());
    }
    Ok(defect)
}

/// The published MH83 coordinate expression ∂_j(√|h∘f| (cof[df]ᵀ)^j_δ),
/// which omits the connection term; expected nonzero whenever
/// Γ^β_{βγ}∘f · det[df] ≠ 0.
pub fn residual_mh83_published(map: &ChartMap, p: &[f64]) -> Result<Vec<f64>, EvalError> {
    let d = map.dim();
    let mut out = vec![0.0; d];
    for j in 0..d {
        let pd = seed(p, j);
        let k_dual = PointState::at(map, &pd)?.matrix_cof();
        let w = sqrt_h_at(map, &pd)?;
        for delta in 0..d {
            out[delta] += (w * k_dual[(j, delta)]).der;
        }
    }
    Ok(out)
}

/// Derivative-of-determinant check (the cofactor is the derivative of
/// the determinant): |X(Det df) − ⟨Cof df, ∇_X df⟩_{g,h}| at p.
pub fn check_cof_is_derivative_of_det(
    map: &ChartMap,
    p: &[f64],
    direction: &[f64],
) -> Result<f64, EvalError> {
    let d = map.dim();
    let st = PointState::at(map, p)?;
    let cof = st.cof_matrix();
    let g_inv = st.g.inverse();

    // X(Det df) by dual propagation through the full intrinsic pipeline
    let d_det = PointState::at(map, &seed_along(p, direction))?.det().der;

    // (∇_X df)_j^α with the pulled-back tensor-product connection
    let gamma_src = map.source.christoffel_at(p)?;
    let gamma_tgt = map.target.christoffel_at(&st.fp)?;
    let mut nabla = Mat::<f64>::zeros(d, d); // (α, j)
    for i in 0..d {
        let jac_dual = map.jacobian_at(&seed(p, i))?;
        for j in 0..d {
            for alpha in 0..d {
                let mut v = jac_dual[(j, alpha)].der;
                for k in 0..d {
                    v -= gamma_src[(k * d + i) * d + j] * st.jac[(k, alpha)];
                }
                for beta in 0..d {
                    for gm in 0..d {
                        v += gamma_tgt[(alpha * d + beta) * d + gm]
                            * st.jac[(i, beta)]
                            * st.jac[(j, gm)];
                    }
                }
                nabla[(alpha, j)] += direction[i] * v;
            }
        }
    }

    // ⟨Cof df, ∇_X df⟩ = g^{ij} h_{αβ} Cof_i^α (∇_X df)_j^β
    let mut pairing = 0.0;
    for i in 0..d {
        for j in 0..d {
            for alpha in 0..d {
                for beta in 0..d {
                    pairing += g_inv[(i, j)]
                        * st.h[(alpha, beta)]
                        * cof[(alpha, i)]
                        * nabla[(beta, j)];
                }
            }
        }
    }
    Ok((d_det - pairing).abs())
}

/// Hodge-star/connection commutation on the tangent bundle of a chart:
/// ‖⋆(∇_X β) − ∇_X(⋆β)‖∞ for a degree-k multivector field β given by
/// C(d,k) coefficient expressions. `perturb` optionally adds the given
/// amount to one Christoffel symbol Γ^k_{ij}, breaking metric
/// compatibility as a negative control.
pub fn check_hodge_parallel(
    chart: &Chart,
    degree: usize,
    beta: &[crate::expr::Expr],
    p: &[f64],
    direction: &[f64],
    perturb: Option<(usize, usize, usize, f64)>,
) -> Result<f64, EvalError> {
    use crate::exterior::{binomial, hodge_star, multi_indices, KVector};
    let d = chart.dim;
    assert_eq!(beta.len(), binomial(d, degree));

    let mut gamma = chart.christoffel_at(p)?;
    if let Some((k, i, j, amount)) = perturb {
        gamma[(k * d + i) * d + j] += amount;
    }

    // induced connection matrix on Λ_k coefficients, direction i:
    // C_i[J, J'] collects single-slot replacements through Γ^b_{i a}.
    let induced = |k: usize, i: usize| -> Mat<f64> {
        let idx = multi_indices(d, k);
        let mut c = Mat::<f64>::zeros(idx.len(), idx.len());
        for (col, src) in idx.iter().enumerate() {
            for (slot, &a) in src.iter().enumerate() {
                for b in 0..d {
                    let coeff = gamma[(b * d + i) * d + a];
                    if coeff == 0.0 {
                        continue;
                    }
                    let mut replaced = src.clone();
                    replaced[slot] = b;
                    if replaced.iter().enumerate().any(|(s, &x)| s != slot && x == b) {
                        continue; // repeated factor wedges to zero
                    }
                    let mut inversions = 0;
                    for x in 0..replaced.len() {
                        for y in x + 1..replaced.len() {
                            if replaced[x] > replaced[y] {
                                inversions += 1;
                            }
                        }
                    }
                    let mut sorted = replaced.clone();
                    sorted.sort_unstable();
                    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                    let row = idx.iter().position(|m| *m == sorted).unwrap();
                    c[(row, col)] += sign * coeff;
                }
            }
        }
        c
    };

    let space_at = |g: Mat<f64>| Space {
        dim: d,
        gram: g,
        orientation: 1,
    };

    let beta_at = |pt: &[f64]| -> Result<Vec<f64>, EvalError> {
        beta.iter().map(|e| e.eval_s(pt)).collect()
    };

    let beta_v = beta_at(p)?;
    let star_beta = hodge_star(
        &space_at(chart.metric_at(p)?),
        &KVector::new(d, degree, beta_v.clone()),
    );

    // ∇_X β, then ⋆ at p
    let nk = binomial(d, degree);
    let mut nabla_beta = vec![0.0; nk];
    for (i, &dir_i) in direction.iter().enumerate() {
        let pd = seed(p, i);
        let beta_dual: Vec<Dual64> = beta
            .iter()
            .map(|e| e.eval_s(&pd))
            .collect::<Result<_, _>>()?;
        let conn = induced(degree, i);
        for r in 0..nk {
            let mut v = beta_dual[r].der;
            for c in 0..nk {
                v += conn[(r, c)] * beta_v[c];
            }
            nabla_beta[r] += dir_i * v;
        }
    }
    let star_nabla = hodge_star(
        &space_at(chart.metric_at(p)?),
        &KVector::new(d, degree, nabla_beta),
    );

    // ∇_X(⋆β): dual-propagate the starred coefficients, then connection
    let ndk = binomial(d, d - degree);
    let mut nabla_star = vec![0.0; ndk];
    for (i, &dir_i) in direction.iter().enumerate() {
        let pd = seed(p, i);
        let g_dual = chart.metric_at(&pd)?;
        let beta_dual: Vec<Dual64> = beta
            .iter()
            .map(|e| e.eval_s(&pd))
            .collect::<Result<_, _>>()?;
        let star_dual = hodge_star(
            &Space {
                dim: d,
                gram: g_dual,
                orientation: 1,
            },
            &KVector::new(d, degree, beta_dual),
        );
        let conn = induced(d - degree, i);
        for r in 0..ndk {
            let mut v = star_dual.coeffs[r].der;
            for c in 0..ndk {
                v += conn[(r, c)] * star_beta.coeffs[c];
            }
            nabla_star[r] += dir_i * v;
        }
    }

    let defect: Vec<f64> = star_nabla
        .coeffs
        .iter()
        .zip(&nabla_star)
        .map(|(a, b)| a - b)
        .collect();
    Ok(norm_inf_vec(&defect))
}
