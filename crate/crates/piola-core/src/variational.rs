//! Null-Lagrangian checks for the volume functional E(f) = ∫ Det df dVol:
//! boundary-fixed variations leave E unchanged, the first variation is the
//! weak-form pairing ∫⟨Cof df, ∇ξ⟩, and that pairing is adjoint to the
//! coderivative.

use crate::chart::{bump_at, integrate, ChartMap, QuadratureRule, VectorField};
use crate::expr::EvalError;
use crate::identity::{cof_df_at, coderivative_cof_at, det_df_at, PointState};
use crate::linalg::Mat;
use crate::scalar::{Dual, Dual64, Scalar};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VariationError {
    #[error("varied map leaves target box at t = {t}: f_t({point:?}) = {image:?}")]
    OutsideTarget {
        t: f64,
        point: Vec<f64>,
        image: Vec<f64>,
    },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Boundary-fixed variation f_t = f + t·bump·V in target coordinates.
/// The bump factor vanishes with all derivatives on the source boundary,
/// so every f_t agrees with f there.
pub struct Variation {
    pub base: ChartMap,
    /// V^α as expressions in the source point.
    pub field: VectorField,
    pub t_max: f64,
}

impl Variation {
    /// t_max defaults to a tenth of the smallest target box side; the
    /// varied map is sampled to confirm it stays inside the target box.
    pub fn new(base: ChartMap, field: VectorField) -> Result<Self, VariationError> {
        let smallest = base
            .target
            .domain
            .iter()
            .map(|&[a, b]| b - a)
            .fold(f64::INFINITY, f64::min);
        Variation::with_t_max(base, field, 0.1 * smallest)
    }

    pub fn with_t_max(
        base: ChartMap,
        field: VectorField,
        t_max: f64,
    ) -> Result<Self, VariationError> {
        let var = Variation { base, field, t_max };
        for s in 0..200 {
            let p = var.base.source.interior_point(s + 1, 0.0);
            for t in [-t_max, t_max] {
                let fp = var.apply(t, &p)?;
                if !var.base.target.contains(&fp) {
                    return Err(VariationError::OutsideTarget {
                        t,
                        point: p,
                        image: fp,
                    });
                }
            }
        }
        Ok(var)
    }

    pub fn apply<S: Scalar>(&self, t: S, p: &[S]) -> Result<Vec<S>, EvalError> {
        let f = self.base.apply(p)?;
        let b = bump_at(&self.base.source.domain, p);
        let v = self.field.at(p)?;
        Ok(f.iter().zip(&v).map(|(&fa, &va)| fa + t * b * va).collect())
    }

    /// The variation vector field ξ = bump·V along f.
    pub fn xi_at<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, EvalError> {
        let b = bump_at(&self.base.source.domain, p);
        Ok(self.field.at(p)?.into_iter().map(|v| v * b).collect())
    }

    /// Intrinsic Det df_t at p, with the Jacobian of the varied map taken
    /// by dual seeding (the bump has no closed expression form).
    pub fn det_at(&self, t: f64, p: &[f64]) -> Result<f64, EvalError> {
        let d = self.base.dim();
        let mut jac = Mat::<f64>::zeros(d, d);
        for i in 0..d {
            let pd: Vec<Dual64> = p
                .iter()
                .enumerate()
                .map(|(k, &x)| Dual::new(x, if k == i { 1.0 } else { 0.0 }))
                .collect();
            let fd = self.apply(Dual::constant(t), &pd)?;
            for a in 0..d {
                jac[(i, a)] = fd[a].der;
            }
        }
        let fp = self.apply(t, p)?;
        let st = PointState {
            g: self.base.source.metric_at(p)?,
            h: self.base.target.metric_at(&fp)?,
            jac,
            p: p.to_vec(),
            fp,
        };
        Ok(st.det())
    }

    pub fn energy_at(&self, t: f64, rule: &QuadratureRule) -> Result<f64, EvalError> {
        integrate(&self.base.source, rule, |p| self.det_at(t, p))
    }
}

/// E(f) = ∫ Det df dVol over the source chart.
pub fn energy(map: &ChartMap, rule: &QuadratureRule) -> Result<f64, EvalError> {
    integrate(&map.source, rule, |p| det_df_at(map, p))
}

/// |E(f) − E(g)| for two maps agreeing on the source boundary.
pub fn boundary_dependence_check(
    f: &ChartMap,
    g: &ChartMap,
    rule: &QuadratureRule,
) -> Result<f64, EvalError> {
    Ok((energy(f, rule)? - energy(g, rule)?).abs())
}

/// Pointwise pairing ⟨Cof df, ∇ξ⟩ = g^{ij} (h∘f)_{αβ} (Cof df)_i^α (∇ξ)_j^β
/// with (∇_j ξ)^β = ∂_j ξ^β + (Γ^β_{γδ}∘f) ∂_j f^γ ξ^δ; ξ given by a
/// dual-capable evaluator so ∂_j ξ is exact.
fn cof_pairing_at(
    map: &ChartMap,
    p: &[f64],
    mut xi: impl FnMut(&[Dual64]) -> Result<Vec<Dual64>, EvalError>,
) -> Result<f64, EvalError> {
    let d = map.dim();
    let st = PointState::at(map, p)?;
    let cof = st.cof_matrix();
    let g_inv = st.g.inverse();
    let gamma_tgt = map.target.christoffel_at(&st.fp)?;

    let mut xi_v = vec![0.0; d];
    let mut nabla_xi = Mat::<f64>::zeros(d, d); // (j, β)
    for j in 0..d {
        let pd: Vec<Dual64> = p
            .iter()
            .enumerate()
            .map(|(k, &x)| Dual::new(x, if k == j { 1.0 } else { 0.0 }))
            .collect();
        let xd = xi(&pd)?;
        for b in 0..d {
            nabla_xi[(j, b)] = xd[b].der;
            if j == 0 {
                xi_v[b] = xd[b].val;
            }
        }
    }
    for j in 0..d {
        for beta in 0..d {
            for gm in 0..d {
                for delta in 0..d {
                    nabla_xi[(j, beta)] +=
                        gamma_tgt[(beta * d + gm) * d + delta] * st.jac[(j, gm)] * xi_v[delta];
                }
            }
        }
    }

    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            for alpha in 0..d {
                for beta in 0..d {
                    acc += g_inv[(i, j)]
                        * st.h[(alpha, beta)]
                        * cof[(alpha, i)]
                        * nabla_xi[(j, beta)];
                }
            }
        }
    }
    Ok(acc)
}

/// Exact first variation dE(f_t)/dt|₀ = ∫⟨Cof df, ∇(bump·V)⟩ dVol.
pub fn first_variation(var: &Variation, rule: &QuadratureRule) -> Result<f64, EvalError> {
    integrate(&var.base.source, rule, |p| {
        cof_pairing_at(&var.base, p, |pd| var.xi_at(pd))
    })
}

/// Central-difference oracle (E(f_h) − E(f_{−h})) / 2h.
pub fn first_variation_fd(
    var: &Variation,
    rule: &QuadratureRule,
    h: f64,
) -> Result<f64, EvalError> {
    Ok((var.energy_at(h, rule)? - var.energy_at(-h, rule)?) / (2.0 * h))
}

/// |∫⟨Cof df, ∇(bump·W)⟩ dVol| — the weak-form Piola identity. The test
/// field W is bump-localized internally so boundary terms vanish.
pub fn weak_form_residual(
    map: &ChartMap,
    w: &VectorField,
    rule: &QuadratureRule,
) -> Result<f64, EvalError> {
    let r = integrate(&map.source, rule, |p| {
        cof_pairing_at(map, p, |pd| {
            let b = bump_at(&map.source.domain, pd);
            Ok(w.at(pd)?.into_iter().map(|v| v * b).collect())
        })
    })?;
    Ok(r.abs())
}

/// The adjoint pairing ∫⟨bump·W, δ Cof df⟩ dVol with
/// ⟨ξ, η⟩ = (h∘f)_{αβ} ξ^α η^β.
pub fn adjoint_pairing(
    map: &ChartMap,
    w: &VectorField,
    rule: &QuadratureRule,
) -> Result<f64, EvalError> {
    integrate(&map.source, rule, |p| {
        let fp = map.apply(p)?;
        let h = map.target.metric_at(&fp)?;
        let b = bump_at(&map.source.domain, p);
        let xi: Vec<f64> = w.at(p)?.into_iter().map(|v| v * b).collect();
        let delta = coderivative_cof_at(map, p)?;
        Ok(crate::linalg::dot(&h.mul_vec(&delta), &xi))
    })
}

/// Scale for normalizing integral residuals: max ‖Cof df‖∞ over the
/// quadrature nodes.
pub fn cof_scale_on_rule(map: &ChartMap, rule: &QuadratureRule) -> Result<f64, EvalError> {
    let mut scale = 0.0f64;
    for p in &rule.nodes {
        scale = scale.max(cof_df_at(map, p)?.norm_inf());
    }
    Ok(scale)
}
