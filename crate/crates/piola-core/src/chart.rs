//! Coordinate-chart Riemannian geometry: metric fields on box domains,
//! Christoffel symbols from exact symbolic metric derivatives,
//! orthonormal frames, volume densities, tensor-product Gauss-Legendre
//! quadrature, and the smooth boundary bump.

use crate::expr::{EvalError, Expr};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("metric matrix must be {dim}x{dim}")]
    MetricShape { dim: usize },
    #[error("metric not symmetric at sampled point {point:?} (defect {defect:.3e})")]
    MetricNotSymmetric { point: Vec<f64>, defect: f64 },
    #[error("metric not positive definite at sampled point {point:?}")]
    MetricNotSpd { point: Vec<f64> },
    #[error("metric condition number {cond:.3e} exceeds 1e6 at {point:?}")]
    MetricIllConditioned { point: Vec<f64>, cond: f64 },
    #[error("map image {image:?} of sampled point {point:?} outside target domain")]
    ImageOutsideTarget { point: Vec<f64>, image: Vec<f64> },
    #[error("component count {got} does not match dim {dim}")]
    ComponentCount { got: usize, dim: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Halton low-discrepancy point in [0,1)^dim; `index` is 1-based.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    assert!(dim <= PRIMES.len());
    (0..dim)
        .map(|axis| {
            let base = PRIMES[axis];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Coordinate box with a metric field g_ij given by expressions.
#[derive(Clone, Debug)]
pub struct Chart {
    pub dim: usize,
    /// Axis-aligned box [a_i, b_i] per axis.
    pub domain: Vec<[f64; 2]>,
    /// Row-major d*d metric entries.
    metric: Vec<Expr>,
    /// Precomputed symbolic partials: dmetric[(k*d + i)*d + j] = ∂_k g_ij.
    dmetric: Vec<Expr>,
}

impl Chart {
    pub fn new(
        dim: usize,
        domain: Vec<[f64; 2]>,
        metric: Vec<Vec<Expr>>,
    ) -> Result<Self, ChartError> {
        assert_eq!(domain.len(), dim);
        if metric.len() != dim || metric.iter().any(|row| row.len() != dim) {
            return Err(ChartError::MetricShape { dim });
        }
        let flat: Vec<Expr> = metric.into_iter().flatten().collect();
        let mut dmetric = Vec::with_capacity(dim * dim * dim);
        for k in 0..dim {
            for e in &flat {
                dmetric.push(e.diff(k));
            }
        }
        let chart = Chart {
            dim,
            domain,
            metric: flat,
            dmetric,
        };
        chart.validate(1000)?;
        Ok(chart)
    }

    pub fn euclidean(dim: usize, domain: Vec<[f64; 2]>) -> Self {
        let metric: Vec<Vec<Expr>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| Expr::Const(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Chart::new(dim, domain, metric).expect("euclidean metric is valid")
    }

    /// Symmetry, positive definiteness and conditioning of the metric at
    /// quasi-random sample points of the domain.
    fn validate(&self, samples: usize) -> Result<(), ChartError> {
        for s in 0..samples {
            let p = self.interior_point(s + 1, 0.01);
            let g = self.metric_at(&p)?;
            let defect = g.sym_defect();
            if defect > 1e-12 {
                return Err(ChartError::MetricNotSymmetric { point: p, defect });
            }
            let l = g
                .cholesky()
                .ok_or_else(|| ChartError::MetricNotSpd { point: p.clone() })?;
            let pivots: Vec<f64> = (0..self.dim).map(|i| l[(i, i)] * l[(i, i)]).collect();
            let min = pivots.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let max = pivots.iter().fold(0.0f64, |a, &b| a.max(b));
            if min <= 1e-10 {
                return Err(ChartError::MetricNotSpd { point: p });
            }
            if max / min > 1e6 {
                return Err(ChartError::MetricIllConditioned {
                    point: p,
                    cond: max / min,
                });
            }
        }
        Ok(())
    }

    /// Halton point mapped into the domain shrunk by `margin` per axis.
    pub fn interior_point(&self, index: usize, margin: f64) -> Vec<f64> {
        let h = halton(index, self.dim);
        self.domain
            .iter()
            .zip(&h)
            .map(|(&[a, b], &t)| {
                let w = b - a;
                a + w * margin + t * w * (1.0 - 2.0 * margin)
            })
            .collect()
    }

    /// Deterministic interior sample set, shrunk 5% per axis; `seed`
    /// offsets the Halton index.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| self.interior_point(i + 1 + seed as usize, 0.05))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.domain
            .iter()
            .zip(p)
            .all(|(&[a, b], &x)| x >= a - 1e-12 && x <= b + 1e-12)
    }

    pub fn metric_at<S: Scalar>(&self, p: &[S]) -> Result<Mat<S>, EvalError> {
        let d = self.dim;
        let mut g = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = self.metric[i * d + j].eval_s(p)?;
            }
        }
        Ok(g)
    }

    pub fn inverse_metric_at<S: Scalar>(&self, p: &[S]) -> Result<Mat<S>, EvalError> {
        Ok(self.metric_at(p)?.inverse())
    }

    /// ∂_k g_ij from the precomputed symbolic partials.
    pub fn metric_deriv_at<S: Scalar>(&self, p: &[S], k: usize) -> Result<Mat<S>, EvalError> {
        let d = self.dim;
        let mut out = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self.dmetric[(k * d + i) * d + j].eval_s(p)?;
            }
        }
        Ok(out)
    }

    /// Levi-Civita symbols Γ^k_{ij} = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij),
    /// flattened as [(k*d + i)*d + j].
    pub fn christoffel_at<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, EvalError> {
        let d = self.dim;
        let g_inv = self.inverse_metric_at(p)?;
        let dg: Vec<Mat<S>> = (0..d)
            .map(|k| self.metric_deriv_at(p, k))
            .collect::<Result<_, _>>()?;
        let half = S::from_f64(0.5);
        let mut gamma = vec![S::zero(); d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut acc = S::zero();
                    for l in 0..d {
                        acc = acc
                            + g_inv[(k, l)]
                                * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gamma[(k * d + i) * d + j] = half * acc;
                }
            }
        }
        Ok(gamma)
    }

    /// √|g| at p.
    pub fn volume_density_at<S: Scalar>(&self, p: &[S]) -> Result<S, EvalError> {
        Ok(self.metric_at(p)?.det().sqrt())
    }

    /// Positively-oriented orthonormal frame: columns E_i with EᵀgE = I,
    /// obtained by Gram-Schmidt on the coordinate basis (upper-triangular
    /// with positive diagonal, hence det E > 0).
    pub fn orthonormal_frame_at<S: Scalar>(&self, p: &[S]) -> Result<Mat<S>, EvalError> {
        let d = self.dim;
        let g = self.metric_at(p)?;
        let mut cols: Vec<Vec<S>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut v = vec![S::zero(); d];
            v[i] = S::one();
            for prev in &cols {
                let proj = inner(&g, &v, prev);
                for j in 0..d {
                    v[j] = v[j] - proj * prev[j];
                }
            }
            let n = inner(&g, &v, &v).sqrt();
            for x in v.iter_mut() {
                *x = *x / n;
            }
            cols.push(v);
        }
        Ok(Mat::from_fn(d, d, |r, c| cols[c][r]))
    }
}

fn inner<S: Scalar>(g: &Mat<S>, a: &[S], b: &[S]) -> S {
    let gb = g.mul_vec(b);
    crate::linalg::dot(a, &gb)
}

/// Smooth bump on (0,1): exp(−1/(t(1−t))), extended by zero. All
/// derivatives vanish at the endpoints.
pub fn bump_1d<S: Scalar>(t: S) -> S {
    let tv = t.value();
    if tv <= 0.0 || tv >= 1.0 {
        return S::zero();
    }
    (-(S::one() / (t * (S::one() - t)))).exp()
}

/// Product bump over a box: Π_i b((x_i − a_i)/(b_i − a_i)).
pub fn bump_at<S: Scalar>(domain: &[[f64; 2]], p: &[S]) -> S {
    let mut acc = S::one();
    for (&[a, b], &x) in domain.iter().zip(p) {
        let t = (x - S::from_f64(a)) / S::from_f64(b - a);
        acc = acc * bump_1d(t);
    }
    acc
}

/// Smooth map between charts of equal dimension, with exact symbolic
/// first derivatives of each component.
#[derive(Clone, Debug)]
pub struct ChartMap {
    pub source: Chart,
    pub target: Chart,
    components: Vec<Expr>,
    /// dcomponents[i*d + a] = ∂_i f^a.
    dcomponents: Vec<Expr>,
}

impl ChartMap {
    pub fn new(source: Chart, target: Chart, components: Vec<Expr>) -> Result<Self, ChartError> {
        let d = source.dim;
        if components.len() != d || target.dim != d {
            return Err(ChartError::ComponentCount {
                got: components.len(),
                dim: d,
            });
        }
        let mut dcomponents = Vec::with_capacity(d * d);
        for i in 0..d {
            for f in &components {
                dcomponents.push(f.diff(i));
            }
        }
        let map = ChartMap {
            source,
            target,
            components,
            dcomponents,
        };
        // image must stay inside the target box
        for s in 0..500 {
            let p = map.source.interior_point(s + 1, 0.0);
            let fp = map.apply(&p)?;
            if !map.target.contains(&fp) {
                return Err(ChartError::ImageOutsideTarget {
                    point: p,
                    image: fp,
                });
            }
        }
        Ok(map)
    }

    pub fn identity(chart: Chart) -> Self {
        let comps = (0..chart.dim).map(Expr::Var).collect();
        ChartMap::new(chart.clone(), chart, comps).expect("identity map is valid")
    }

    pub fn dim(&self) -> usize {
        self.source.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn apply<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, EvalError> {
        self.components.iter().map(|f| f.eval_s(p)).collect()
    }

    /// Coordinate Jacobian J_{i a} = ∂_i f^a (row i = source axis).
    pub fn jacobian_at<S: Scalar>(&self, p: &[S]) -> Result<Mat<S>, EvalError> {
        let d = self.dim();
        let mut j = Mat::zeros(d, d);
        for i in 0..d {
            for a in 0..d {
                j[(i, a)] = self.dcomponents[i * d + a].eval_s(p)?;
            }
        }
        Ok(j)
    }
}

/// Vector field in the coordinate basis of a chart.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Self {
        VectorField { components }
    }

    pub fn at<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>, EvalError> {
        self.components.iter().map(|f| f.eval_s(p)).collect()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product Gauss-Legendre rule over a chart's box.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn for_box(domain: &[[f64; 2]], order: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let dim = domain.len();
        let total = order.pow(dim as u32);
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut idx = flat;
            let mut p = Vec::with_capacity(dim);
            let mut w = 1.0;
            for &[a, b] in domain {
                let k = idx % order;
                idx /= order;
                let half = 0.5 * (b - a);
                p.push(a + half * (xs[k] + 1.0));
                w *= half * ws[k];
            }
            nodes.push(p);
            weights.push(w);
        }
        QuadratureRule {
            order,
            nodes,
            weights,
        }
    }
}

/// ∫ field dVol over the chart box: Σ w_q field(p_q) √|g|(p_q), with a
/// fixed pairwise reduction so results are deterministic.
pub fn integrate<E>(
    chart: &Chart,
    rule: &QuadratureRule,
    mut field: impl FnMut(&[f64]) -> Result<f64, E>,
) -> Result<f64, E>
where
    E: From<EvalError>,
{
    let mut terms = Vec::with_capacity(rule.nodes.len());
    for (p, &w) in rule.nodes.iter().zip(&rule.weights) {
        let density = chart.volume_density_at(p).map_err(E::from)?;
        terms.push(w * field(p)? * density);
    }
    Ok(pairwise_sum(&terms))
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn polar_chart() -> Chart {
        // metric diag(1, r^2) with r = x0 on r ∈ [1, 3]
        let g = vec![
            vec![Expr::Const(1.0), Expr::Const(0.0)],
            vec![
                Expr::Const(0.0),
                Expr::parse("x0^2", 2).unwrap(),
            ],
        ];
        Chart::new(2, vec![[1.0, 3.0], [0.0, 1.0]], g).unwrap()
    }

    fn halfplane_chart() -> Chart {
        let g = vec![
            vec![Expr::parse("1/x1^2", 2).unwrap(), Expr::Const(0.0)],
            vec![Expr::Const(0.0), Expr::parse("1/x1^2", 2).unwrap()],
        ];
        Chart::new(2, vec![[-1.0, 1.0], [0.5, 2.5]], g).unwrap()
    }

    #[test]
    fn metric_eval_and_inverse() {
        let c = halfplane_chart();
        let g = c.metric_at(&[0.0, 2.0]).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((g[(1, 1)] - 0.25).abs() < 1e-15);
        let gi = c.inverse_metric_at(&[0.0, 2.0]).unwrap();
        assert!(g.mul(&gi).sub(&Mat::identity(2)).norm_inf() < 1e-11);

        let p = polar_chart();
        let g = p.metric_at(&[2.0, 0.3]).unwrap();
        assert!((g[(1, 1)] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn christoffel_polar_hand_values() {
        let c = polar_chart();
        let d = 2;
        let gamma = c.christoffel_at(&[2.0, 0.5]).unwrap();
        let at = |k: usize, i: usize, j: usize| gamma[(k * d + i) * d + j];
        // Γ^0_{11} = −r, Γ^1_{01} = Γ^1_{10} = 1/r at r = 2
        assert!((at(0, 1, 1) + 2.0).abs() < 1e-12);
        assert!((at(1, 0, 1) - 0.5).abs() < 1e-12);
        assert!((at(1, 1, 0) - 0.5).abs() < 1e-12);
        assert!(at(0, 0, 0).abs() < 1e-12);
        assert!(at(0, 0, 1).abs() < 1e-12);
    }

    #[test]
    fn christoffel_hyperbolic_hand_values() {
        let c = halfplane_chart();
        let d = 2;
        let gamma = c.christoffel_at(&[0.0, 1.0]).unwrap();
        let at = |k: usize, i: usize, j: usize| gamma[(k * d + i) * d + j];
        // half-plane at height 1: Γ^1_{00} = 1, Γ^0_{01} = −1, Γ^1_{11} = −1
        assert!((at(1, 0, 0) - 1.0).abs() < 1e-12);
        assert!((at(0, 0, 1) + 1.0).abs() < 1e-12);
        assert!((at(1, 1, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn christoffel_euclidean_zero() {
        let c = Chart::euclidean(3, vec![[0.0, 1.0]; 3]);
        let gamma = c.christoffel_at(&[0.2, 0.5, 0.7]).unwrap();
        assert!(gamma.iter().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn metric_compatibility_invariant() {
        let c = halfplane_chart();
        let d = 2;
        for s in 0..100 {
            let p = c.interior_point(s + 1, 0.05);
            let gamma = c.christoffel_at(&p).unwrap();
            let g = c.metric_at(&p).unwrap();
            for k in 0..d {
                let dg = c.metric_deriv_at(&p, k).unwrap();
                for i in 0..d {
                    for j in 0..d {
                        let mut r = dg[(i, j)];
                        for l in 0..d {
                            r -= gamma[(l * d + k) * d + i] * g[(l, j)]
                                + gamma[(l * d + k) * d + j] * g[(i, l)];
                        }
                        assert!(r.abs() < 1e-10, "compatibility defect {r} at {p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn volume_density_values() {
        let c = polar_chart();
        assert!((c.volume_density_at(&[3.0, 0.1]).unwrap() - 3.0).abs() < 1e-12);
        let h = halfplane_chart();
        assert!((h.volume_density_at(&[0.0, 2.0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_frame_properties() {
        let diag = Chart::new(
            2,
            vec![[0.0, 1.0], [0.0, 1.0]],
            vec![
                vec![Expr::Const(4.0), Expr::Const(0.0)],
                vec![Expr::Const(0.0), Expr::Const(9.0)],
            ],
        )
        .unwrap();
        let e = diag.orthonormal_frame_at(&[0.5, 0.5]).unwrap();
        assert!((e[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((e[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);

        let h = halfplane_chart();
        for s in 0..20 {
            let p = h.interior_point(s + 1, 0.05);
            let e = h.orthonormal_frame_at(&p).unwrap();
            let g = h.metric_at(&p).unwrap();
            let gram = e.transpose().mul(&g).mul(&e);
            assert!(gram.sub(&Mat::identity(2)).norm_inf() < 1e-11);
            // det E · √|g| = 1
            let r = e.det() * h.volume_density_at(&p).unwrap();
            assert!((r - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_constant_and_polar() {
        let c = Chart::euclidean(2, vec![[0.0, 1.0], [0.0, 1.0]]);
        let rule = QuadratureRule::for_box(&c.domain, 6);
        let v: f64 = integrate::<EvalError>(&c, &rule, |_| Ok(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-13);

        // ∫ 1 dVol over r∈[1,2], θ∈[0,1] with √g = r  ⇒  3/2
        let g = vec![
            vec![Expr::Const(1.0), Expr::Const(0.0)],
            vec![Expr::Const(0.0), Expr::parse("x0^2", 2).unwrap()],
        ];
        let pc = Chart::new(2, vec![[1.0, 2.0], [0.0, 1.0]], g).unwrap();
        let rule = QuadratureRule::for_box(&pc.domain, 8);
        let v: f64 = integrate::<EvalError>(&pc, &rule, |_| Ok(1.0)).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_exactness_degree_15() {
        // order-8 rule integrates x^15 on [0,1] exactly: 1/16
        let (xs, ws) = gauss_legendre(8);
        let mut acc = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            let t = 0.5 * (x + 1.0);
            acc += 0.5 * w * t.powi(15);
        }
        assert!((acc - 1.0 / 16.0).abs() < 1e-12);
        // weights positive, sum to interval length
        assert!(ws.iter().all(|&w| w > 0.0));
        assert!((ws.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bump_vanishes_at_boundary() {
        assert_eq!(bump_1d(0.0f64), 0.0);
        assert_eq!(bump_1d(1.0f64), 0.0);
        assert_eq!(bump_1d(-0.5f64), 0.0);
        assert!(bump_1d(0.5f64) > 0.0);
        // derivative through duals is finite and vanishes near edges
        use crate::scalar::Dual64;
        let d = bump_1d(Dual64::seeded(1e-3));
        assert!(d.der.abs() < 1e-100);
    }

    #[test]
    fn chart_map_validates_image() {
        let src = Chart::euclidean(1, vec![[0.0, 1.0]]);
        let tgt = Chart::euclidean(1, vec![[0.0, 0.5]]);
        let f = Expr::parse("x0", 1).unwrap();
        assert!(matches!(
            ChartMap::new(src, tgt, vec![f]),
            Err(ChartError::ImageOutsideTarget { .. })
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let src = Chart::euclidean(2, vec![[0.0, 1.0], [0.0, 1.0]]);
        let tgt = Chart::euclidean(2, vec![[-3.0, 3.0], [-3.0, 3.0]]);
        let f = ChartMap::new(
            src,
            tgt,
            vec![
                Expr::parse("x0^2 + sin(x1)", 2).unwrap(),
                Expr::parse("x0*x1", 2).unwrap(),
            ],
        )
        .unwrap();
        let p = [0.3, 0.7];
        let j = f.jacobian_at(&p).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            for a in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[i] += h;
                pm[i] -= h;
                let fd =
                    (f.apply(&pp).unwrap()[a] - f.apply(&pm).unwrap()[a]) / (2.0 * h);
                assert!((j[(i, a)] - fd).abs() < 1e-8);
            }
        }
    }
}
