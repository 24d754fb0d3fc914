//! Curvature of arbitrary coordinate metrics: Christoffel symbols, Ricci
//! tensor, and scalar curvature, plus closed-form shortcuts for conformally
//! flat metrics ḡ = g/φ².
//!
//! Two derivative paths feed the same formulas: analytic oracles attached to
//! the metric (exact for the shipped families, and surviving warped-product
//! assembly blockwise) or central finite differences of the component
//! function. The sign convention contracts the first index of the Riemann
//! tensor, which puts the scalar curvature of the hyperbolic half-space
//! δ/xₙ² at −n(n−1).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::{fd, Direction, ProfileFunction, ScalarField, Signature, SingularLocus};
use crate::Error;

/// Which derivative oracle curvature computations consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeMode {
    Analytic,
    #[serde(rename = "fd")]
    FiniteDifference,
}

impl DerivativeMode {
    /// Default residual tolerance for this path: analytic evaluations are
    /// exact up to rounding, finite differences carry a noise floor on
    /// second derivatives.
    pub fn default_tolerance(self) -> f64 {
        match self {
            DerivativeMode::Analytic => 1e-6,
            DerivativeMode::FiniteDifference => 1e-4,
        }
    }

    /// Minimum clearance from singular loci required to evaluate; the FD
    /// stencil must not straddle a locus.
    fn min_clearance(self) -> f64 {
        match self {
            DerivativeMode::Analytic => 1e-12,
            DerivativeMode::FiniteDifference => 1e-3,
        }
    }
}

type Components = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type D1Oracle = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;
type D2Oracle = Arc<dyn Fn(&[f64]) -> Vec<Vec<DMatrix<f64>>> + Send + Sync>;

/// A coordinate metric on an open chart: a symmetric component matrix with
/// first and second derivative oracles and a list of singular loci.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    mode: DerivativeMode,
    components: Components,
    analytic_d1: Option<D1Oracle>,
    analytic_d2: Option<D2Oracle>,
    singular_loci: Vec<SingularLocus>,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("mode", &self.mode)
            .field("analytic", &self.analytic_d1.is_some())
            .field("loci", &self.singular_loci.len())
            .finish_non_exhaustive()
    }
}

impl MetricField {
    /// Metric backed only by a component function; derivatives come from
    /// central differences.
    pub fn from_components_fd(
        dim: usize,
        components: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            mode: DerivativeMode::FiniteDifference,
            components: Arc::new(components),
            analytic_d1: None,
            analytic_d2: None,
            singular_loci: Vec::new(),
        }
    }

    /// Metric with exact derivative oracles.
    pub fn from_analytic(
        dim: usize,
        components: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        d1: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
        d2: impl Fn(&[f64]) -> Vec<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            mode: DerivativeMode::Analytic,
            components: Arc::new(components),
            analytic_d1: Some(Arc::new(d1)),
            analytic_d2: Some(Arc::new(d2)),
            singular_loci: Vec::new(),
        }
    }

    /// Flat pseudo-Euclidean metric diag(ε).
    pub fn flat(sig: &Signature) -> Self {
        let n = sig.dim();
        let diag =
            DMatrix::from_diagonal(&DVector::from_iterator(n, (0..n).map(|i| sig.eps_f64(i))));
        let d = diag.clone();
        Self::from_analytic(
            n,
            move |_| d.clone(),
            move |_| vec![DMatrix::zeros(n, n); n],
            move |_| vec![vec![DMatrix::zeros(n, n); n]; n],
        )
    }

    /// Conformally flat metric ḡ = diag(ε)/φ², with derivatives composed from
    /// the conformal function's oracles. A singular locus is attached where φ
    /// vanishes.
    pub fn conformally_flat(sig: &Signature, phi: &ScalarField) -> Self {
        let n = sig.dim();
        assert_eq!(phi.dim(), n, "conformal factor dimension mismatch");
        let eps: Vec<f64> = (0..n).map(|i| sig.eps_f64(i)).collect();

        let phi_c = phi.clone();
        let eps_c = eps.clone();
        let components = move |x: &[f64]| {
            let p = phi_c.eval(x);
            let s = 1.0 / (p * p);
            DMatrix::from_fn(n, n, |i, j| if i == j { eps_c[i] * s } else { 0.0 })
        };

        let phi_1 = phi.clone();
        let eps_1 = eps.clone();
        let d1 = move |x: &[f64]| {
            let p = phi_1.eval(x);
            let dp = phi_1.grad(x);
            let s = -2.0 / (p * p * p);
            (0..n)
                .map(|k| {
                    let c = s * dp[k];
                    DMatrix::from_fn(n, n, |i, j| if i == j { eps_1[i] * c } else { 0.0 })
                })
                .collect::<Vec<_>>()
        };

        let phi_2 = phi.clone();
        let d2 = move |x: &[f64]| {
            let p = phi_2.eval(x);
            let dp = phi_2.grad(x);
            let hp = phi_2.hess(x);
            let p3 = p * p * p;
            let p4 = p3 * p;
            (0..n)
                .map(|l| {
                    (0..n)
                        .map(|k| {
                            let c = 6.0 * dp[k] * dp[l] / p4 - 2.0 * hp[(k, l)] / p3;
                            DMatrix::from_fn(n, n, |i, j| if i == j { eps[i] * c } else { 0.0 })
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };

        let phi_locus = phi.clone();
        Self::from_analytic(n, components, d1, d2).with_locus(SingularLocus::two_sided(
            "conformal factor zero",
            move |x: &[f64]| phi_locus.eval(x),
        ))
    }

    /// Unit round 2-sphere in polar coordinates: diag(1, sin²θ). Degenerate
    /// where sin θ = 0.
    pub fn two_sphere_polar() -> Self {
        let components = |x: &[f64]| {
            let s = x[0].sin();
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, s * s]))
        };
        let d1 = |x: &[f64]| {
            let mut out = vec![DMatrix::zeros(2, 2); 2];
            out[0][(1, 1)] = (2.0 * x[0]).sin();
            out
        };
        let d2 = |x: &[f64]| {
            let mut out = vec![vec![DMatrix::zeros(2, 2); 2]; 2];
            out[0][0][(1, 1)] = 2.0 * (2.0 * x[0]).cos();
            out
        };
        Self::from_analytic(2, components, d1, d2).with_locus(SingularLocus::two_sided(
            "sin(theta) zero",
            |x: &[f64]| x[0].sin(),
        ))
    }

    pub fn with_locus(mut self, locus: SingularLocus) -> Self {
        self.singular_loci.push(locus);
        self
    }

    pub fn with_loci(mut self, loci: Vec<SingularLocus>) -> Self {
        self.singular_loci.extend(loci);
        self
    }

    /// Same metric evaluated through the other derivative path. Switching to
    /// finite differences ignores the analytic oracles entirely, which makes
    /// the FD path an independent cross-check.
    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_oracles(&self) -> bool {
        self.analytic_d1.is_some() && self.analytic_d2.is_some()
    }

    pub fn singular_loci(&self) -> &[SingularLocus] {
        &self.singular_loci
    }

    pub fn components(&self, point: &[f64]) -> DMatrix<f64> {
        (self.components)(point)
    }

    /// ∂ₖ gᵢⱼ, indexed d1[k][(i,j)].
    pub fn d1(&self, point: &[f64]) -> Vec<DMatrix<f64>> {
        match (self.mode, &self.analytic_d1) {
            (DerivativeMode::Analytic, Some(oracle)) => oracle(point),
            _ => self.fd_d1(point),
        }
    }

    /// ∂ₗ∂ₖ gᵢⱼ, indexed d2[l][k][(i,j)].
    pub fn d2(&self, point: &[f64]) -> Vec<Vec<DMatrix<f64>>> {
        match (self.mode, &self.analytic_d2) {
            (DerivativeMode::Analytic, Some(oracle)) => oracle(point),
            _ => self.fd_d2(point),
        }
    }

    fn fd_d1(&self, point: &[f64]) -> Vec<DMatrix<f64>> {
        let n = self.dim;
        let mut p = point.to_vec();
        (0..n)
            .map(|k| {
                let h = fd::step_first(point[k]);
                p[k] = point[k] + h;
                let up = self.components(&p);
                p[k] = point[k] - h;
                let dn = self.components(&p);
                p[k] = point[k];
                (up - dn) / (2.0 * h)
            })
            .collect()
    }

    fn fd_d2(&self, point: &[f64]) -> Vec<Vec<DMatrix<f64>>> {
        let n = self.dim;
        let g0 = self.components(point);
        let mut p = point.to_vec();
        let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
        for k in 0..n {
            let h = fd::step_second(point[k]);
            p[k] = point[k] + h;
            let up = self.components(&p);
            p[k] = point[k] - h;
            let dn = self.components(&p);
            p[k] = point[k];
            out[k][k] = (up + dn - 2.0 * &g0) / (h * h);
        }
        for l in 0..n {
            for k in (l + 1)..n {
                let hl = fd::step_second(point[l]);
                let hk = fd::step_second(point[k]);
                let mut eval = |sl: f64, sk: f64| {
                    p[l] = point[l] + sl * hl;
                    p[k] = point[k] + sk * hk;
                    let g = self.components(&p);
                    p[l] = point[l];
                    p[k] = point[k];
                    g
                };
                let mixed = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * hl * hk);
                out[l][k] = mixed.clone();
                out[k][l] = mixed;
            }
        }
        out
    }

    /// Checks loci clearance (stencil-aware in FD mode) and invertibility.
    pub fn check_point(&self, point: &[f64]) -> Result<(), Error> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        let clearance = self.mode.min_clearance();
        for locus in &self.singular_loci {
            if locus.clearance(point) < clearance {
                return Err(Error::OutsideDomain {
                    label: locus.label.clone(),
                });
            }
        }
        Ok(())
    }

    /// Inverse metric with the determinant guard.
    pub fn inverse_at(&self, point: &[f64]) -> Result<DMatrix<f64>, Error> {
        let g = self.components(point);
        let det = g.determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::SingularMetric { det });
        }
        g.try_inverse().ok_or(Error::SingularMetric { det })
    }
}

/// Christoffel symbols, Ricci tensor, and scalar curvature at a point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    /// Γᵏᵢⱼ indexed christoffel[k][(i,j)].
    pub christoffel: Vec<DMatrix<f64>>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

fn christoffel_from(g_inv: &DMatrix<f64>, d1: &[DMatrix<f64>], n: usize) -> Vec<DMatrix<f64>> {
    (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                0.5 * (0..n)
                    .map(|l| g_inv[(k, l)] * (d1[i][(j, l)] + d1[j][(i, l)] - d1[l][(i, j)]))
                    .sum::<f64>()
            })
        })
        .collect()
}

/// Γᵏᵢⱼ = ½ gᵏˡ(∂ᵢgⱼˡ + ∂ⱼgᵢˡ − ∂ˡgᵢⱼ).
pub fn christoffel(metric: &MetricField, point: &[f64]) -> Result<Vec<DMatrix<f64>>, Error> {
    metric.check_point(point)?;
    let g_inv = metric.inverse_at(point)?;
    let d1 = metric.d1(point);
    Ok(christoffel_from(&g_inv, &d1, metric.dim()))
}

/// Rᵢⱼ = ∂ₖΓᵏᵢⱼ − ∂ᵢΓᵏₖⱼ + ΓᵏₖₗΓˡᵢⱼ − ΓᵏᵢₗΓˡₖⱼ.
///
/// The derivative of Γ is assembled from the metric's first and second
/// derivative oracles through the product rule (∂g⁻¹ = −g⁻¹ ∂g g⁻¹), so no
/// extra differencing is layered on top of the oracles.
pub fn ricci(metric: &MetricField, point: &[f64]) -> Result<DMatrix<f64>, Error> {
    metric.check_point(point)?;
    let n = metric.dim();
    let g_inv = metric.inverse_at(point)?;
    let d1 = metric.d1(point);
    let d2 = metric.d2(point);

    let gamma = christoffel_from(&g_inv, &d1, n);

    // ∂ₘ g^{kl}
    let dginv: Vec<DMatrix<f64>> = (0..n).map(|m| -(&g_inv * &d1[m] * &g_inv)).collect();

    // ∂ₘ Γᵏᵢⱼ indexed dgamma[m][k][(i,j)]
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|m| {
            (0..n)
                .map(|k| {
                    DMatrix::from_fn(n, n, |i, j| {
                        0.5 * (0..n)
                            .map(|l| {
                                dginv[m][(k, l)] * (d1[i][(j, l)] + d1[j][(i, l)] - d1[l][(i, j)])
                                    + g_inv[(k, l)]
                                        * (d2[m][i][(j, l)] + d2[m][j][(i, l)] - d2[m][l][(i, j)])
                            })
                            .sum::<f64>()
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();

    // Γᵏₖₗ (contracted on the upper and first lower index)
    let trace_gamma: Vec<f64> = (0..n)
        .map(|l| (0..n).map(|k| gamma[k][(k, l)]).sum())
        .collect();

    let ric = DMatrix::from_fn(n, n, |i, j| {
        let div_term: f64 = (0..n).map(|k| dgamma[k][k][(i, j)]).sum();
        let grad_trace: f64 = (0..n).map(|k| dgamma[i][k][(k, j)]).sum();
        let quad_plus: f64 = (0..n).map(|l| trace_gamma[l] * gamma[l][(i, j)]).sum();
        let quad_minus: f64 = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| gamma[k][(i, l)] * gamma[l][(k, j)])
                    .sum::<f64>()
            })
            .sum();
        div_term - grad_trace + quad_plus - quad_minus
    });
    Ok(ric)
}

/// R = gⁱʲ Rᵢⱼ.
pub fn scalar_curvature(metric: &MetricField, point: &[f64]) -> Result<f64, Error> {
    let ric = ricci(metric, point)?;
    let g_inv = metric.inverse_at(point)?;
    Ok((g_inv * ric).trace())
}

/// All three curvature quantities, with the scalar traced from the same
/// Ricci evaluation.
pub fn curvature_bundle(metric: &MetricField, point: &[f64]) -> Result<CurvatureBundle, Error> {
    let christoffel = christoffel(metric, point)?;
    let ric = ricci(metric, point)?;
    let g_inv = metric.inverse_at(point)?;
    let scalar = (&g_inv * &ric).trace();
    Ok(CurvatureBundle {
        christoffel,
        ricci: ric,
        scalar,
    })
}

// ---------------------------------------------------------------------------
// Scalar analysis in a metric
// ---------------------------------------------------------------------------

/// Covariant Hessian ∇²f = ∂ᵢ∂ⱼf − Γᵏᵢⱼ ∂ₖf in the metric's Levi-Civita
/// connection.
pub fn covariant_hessian(
    metric: &MetricField,
    field: &ScalarField,
    point: &[f64],
) -> Result<DMatrix<f64>, Error> {
    let n = metric.dim();
    let gamma = christoffel(metric, point)?;
    let grad = field.grad(point);
    let hess = field.hess(point);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        hess[(i, j)] - (0..n).map(|k| gamma[k][(i, j)] * grad[k]).sum::<f64>()
    }))
}

/// Laplace–Beltrami Δf = gⁱʲ ∇²fᵢⱼ.
pub fn laplacian(metric: &MetricField, field: &ScalarField, point: &[f64]) -> Result<f64, Error> {
    let hess = covariant_hessian(metric, field, point)?;
    let g_inv = metric.inverse_at(point)?;
    Ok((g_inv * hess).trace())
}

/// |∇f|² = gⁱʲ ∂ᵢf ∂ⱼf (indefinite in mixed signatures).
pub fn gradient_norm_sq(
    metric: &MetricField,
    field: &ScalarField,
    point: &[f64],
) -> Result<f64, Error> {
    let g_inv = metric.inverse_at(point)?;
    let grad = field.grad(point);
    Ok((grad.transpose() * g_inv * &grad)[(0, 0)])
}

/// Raised gradient (∇f)ⁱ = gⁱʲ ∂ⱼf.
pub fn raised_gradient(
    metric: &MetricField,
    field: &ScalarField,
    point: &[f64],
) -> Result<DVector<f64>, Error> {
    let g_inv = metric.inverse_at(point)?;
    Ok(g_inv * field.grad(point))
}

// ---------------------------------------------------------------------------
// Closed forms for conformally flat metrics
// ---------------------------------------------------------------------------

/// Ricci tensor of ḡ = g/φ² evaluated from the closed form
/// R̄ic = (1/φ²){(n−2)φ∇²φ + [φΔφ − (n−1)|∇φ|²]g},
/// with gradient, Hessian, and Laplacian taken in the flat metric g = diag(ε).
pub fn conformal_ricci_closed(
    phi: &ScalarField,
    sig: &Signature,
    point: &[f64],
) -> Result<DMatrix<f64>, Error> {
    let n = sig.dim();
    if phi.dim() != n || point.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: point.len(),
        });
    }
    let p = phi.eval(point);
    if p == 0.0 {
        return Err(Error::VanishingConformalFactor { xi: f64::NAN });
    }
    let grad = phi.grad(point);
    let hess = phi.hess(point);
    let laplacian: f64 = (0..n).map(|k| sig.eps_f64(k) * hess[(k, k)]).sum();
    let grad_sq: f64 = (0..n).map(|k| sig.eps_f64(k) * grad[k] * grad[k]).sum();
    let trace_coeff = p * laplacian - (n as f64 - 1.0) * grad_sq;
    let scale = 1.0 / (p * p);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let flat = if i == j { sig.eps_f64(i) } else { 0.0 };
        scale * ((n as f64 - 2.0) * p * hess[(i, j)] + trace_coeff * flat)
    }))
}

/// Scalar curvature of ḡ = g/φ² for a translation-invariant conformal
/// function: R̄ = (n−1)(2φφ″ − n(φ′)²)·κ.
pub fn conformal_scalar_closed(phi: &ProfileFunction, dir: &Direction, xi: f64) -> f64 {
    let n = dir.dim() as f64;
    let p = phi.eval(xi);
    let dp = phi.d1(xi);
    let ddp = phi.d2(xi);
    (n - 1.0) * (2.0 * p * ddp - n * dp * dp) * dir.kappa()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Direction;

    fn hyperbolic3() -> MetricField {
        let sig = Signature::euclidean(3);
        let phi = ScalarField::coordinate(3, 2);
        MetricField::conformally_flat(&sig, &phi)
            .with_locus(SingularLocus::half_space("x3 > 0", |x: &[f64]| x[2]))
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let m = MetricField::flat(&Signature::euclidean(3));
        let x = [0.3, -0.2, 0.9];
        let gamma = christoffel(&m, &x).unwrap();
        for slice in &gamma {
            assert_eq!(slice.abs().max(), 0.0);
        }
        let ric = ricci(&m, &x).unwrap();
        assert_eq!(ric.abs().max(), 0.0);
        assert_eq!(scalar_curvature(&m, &x).unwrap(), 0.0);
    }

    #[test]
    fn hyperbolic_christoffel_values() {
        let m = hyperbolic3();
        let x = [0.4, -1.3, 0.7];
        let x3 = x[2];
        let gamma = christoffel(&m, &x).unwrap();
        assert!((gamma[0][(0, 2)] + 1.0 / x3).abs() < 1e-12, "Γ¹₁₃ = −1/x₃");
        assert!((gamma[2][(0, 0)] - 1.0 / x3).abs() < 1e-12, "Γ³₁₁ = 1/x₃");
        assert!((gamma[2][(2, 2)] + 1.0 / x3).abs() < 1e-12, "Γ³₃₃ = −1/x₃");
        // symmetry in the lower indices
        for slice in &gamma {
            assert_eq!(slice[(0, 2)], slice[(2, 0)]);
        }
    }

    #[test]
    fn exponential_diagonal_metric_christoffel() {
        // g = diag(e^{x1}, 1, 1): Γ¹₁₁ = ½.
        let m = MetricField::from_analytic(
            3,
            |x: &[f64]| DMatrix::from_diagonal(&DVector::from_vec(vec![x[0].exp(), 1.0, 1.0])),
            |x: &[f64]| {
                let mut d = vec![DMatrix::zeros(3, 3); 3];
                d[0][(0, 0)] = x[0].exp();
                d
            },
            |x: &[f64]| {
                let mut d = vec![vec![DMatrix::zeros(3, 3); 3]; 3];
                d[0][0][(0, 0)] = x[0].exp();
                d
            },
        );
        let gamma = christoffel(&m, &[0.3, 0.1, -0.5]).unwrap();
        assert!((gamma[0][(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_is_einstein_with_constant_minus_two() {
        let m = hyperbolic3();
        for x in [[0.2, 0.5, 0.4], [1.0, -0.7, 1.3], [-2.0, 0.0, 0.25]] {
            let ric = ricci(&m, &x).unwrap();
            let g = m.components(&x);
            let resid = (&ric + 2.0 * &g).abs().max();
            assert!(resid < 1e-10, "residual {resid} at {x:?}");
            let r = scalar_curvature(&m, &x).unwrap();
            assert!((r + 6.0).abs() < 1e-9, "R = {r}");
        }
    }

    #[test]
    fn bundle_traces_its_own_ricci() {
        let m = hyperbolic3();
        let x = [0.5, -0.1, 0.8];
        let bundle = curvature_bundle(&m, &x).unwrap();
        assert!((bundle.scalar + 6.0).abs() < 1e-9);
        let g_inv = m.inverse_at(&x).unwrap();
        let traced = (&g_inv * &bundle.ricci).trace();
        assert_eq!(bundle.scalar, traced);
        for slice in &bundle.christoffel {
            assert_eq!(slice[(0, 2)], slice[(2, 0)]);
        }
    }

    #[test]
    fn hyperbolic_fd_mode_agrees() {
        let m = hyperbolic3().with_mode(DerivativeMode::FiniteDifference);
        let x = [0.2, 0.5, 0.6];
        let ric = ricci(&m, &x).unwrap();
        let g = m.components(&x);
        let resid = (&ric + 2.0 * &g).abs().max();
        assert!(resid < 1e-4, "fd residual {resid}");
    }

    #[test]
    fn two_sphere_is_einstein_with_constant_one() {
        let m = MetricField::two_sphere_polar();
        for x in [[1.1, 0.3], [0.7, -2.0], [2.2, 4.0]] {
            let ric = ricci(&m, &x).unwrap();
            let g = m.components(&x);
            let resid = (&ric - &g).abs().max();
            assert!(resid < 1e-10, "residual {resid} at {x:?}");
            let r = scalar_curvature(&m, &x).unwrap();
            assert!((r - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn conformal_ricci_of_unit_factor_vanishes() {
        let sig = Signature::euclidean(3);
        let phi = ScalarField::constant(3, 1.0);
        let r = conformal_ricci_closed(&phi, &sig, &[0.2, -0.4, 0.9]).unwrap();
        assert_eq!(r.abs().max(), 0.0);
    }

    #[test]
    fn closed_form_conformal_ricci_matches_engine() {
        let sig = Signature::euclidean(3);
        // φ = x₃ (hyperbolic) and φ = −ξ + 5 along the x₃ axis
        let dir = Direction::axis(2, &sig).unwrap();
        let cases = [
            ScalarField::coordinate(3, 2),
            ScalarField::from_profile(&ProfileFunction::affine(-1.0, 5.0), &dir),
            ScalarField::from_profile(&ProfileFunction::exponential(1.0, 1.0), &dir),
        ];
        for phi in &cases {
            let m = MetricField::conformally_flat(&sig, phi);
            for x in [[0.3, 0.8, 0.4], [1.2, -0.5, 0.9]] {
                let closed = conformal_ricci_closed(phi, &sig, &x).unwrap();
                let engine = ricci(&m, &x).unwrap();
                let diff = (&closed - &engine).abs().max();
                assert!(diff < 1e-8, "closed vs engine diff {diff}");
            }
        }
    }

    #[test]
    fn closed_form_conformal_ricci_matches_fd_engine() {
        let sig = Signature::euclidean(3);
        let dir = Direction::axis(2, &sig).unwrap();
        let phi = ScalarField::from_profile(&ProfileFunction::exponential(1.0, 1.0), &dir);
        let m =
            MetricField::conformally_flat(&sig, &phi).with_mode(DerivativeMode::FiniteDifference);
        let x = [0.3, 0.8, 0.4];
        let closed = conformal_ricci_closed(&phi, &sig, &x).unwrap();
        let engine = ricci(&m, &x).unwrap();
        assert!((&closed - &engine).abs().max() < 1e-4);
    }

    #[test]
    fn conformal_scalar_closed_examples() {
        let sig = Signature::euclidean(3);
        let dir = Direction::axis(2, &sig).unwrap();
        // φ ≡ 1 → 0
        assert_eq!(
            conformal_scalar_closed(&ProfileFunction::constant(1.0), &dir, 0.3),
            0.0
        );
        // φ(ξ) = ξ → (n−1)(0 − n)κ = −6 on the hyperbolic chart
        let r = conformal_scalar_closed(&ProfileFunction::affine(1.0, 0.0), &dir, 0.7);
        assert!((r + 6.0).abs() < 1e-12);
        // φ(ξ) = −ξ + 5: same −n(n−1)κG² value
        let r = conformal_scalar_closed(&ProfileFunction::affine(-1.0, 5.0), &dir, 1.0);
        assert!((r + 6.0).abs() < 1e-12);
    }

    #[test]
    fn conformal_scalar_closed_matches_engine_trace() {
        let sig = Signature::euclidean(3);
        let dir = Direction::axis(2, &sig).unwrap();
        let prof = ProfileFunction::exponential(1.0, 1.0);
        let phi = ScalarField::from_profile(&prof, &dir);
        let m = MetricField::conformally_flat(&sig, &phi);
        let x = [0.4, 0.1, 0.35];
        let engine = scalar_curvature(&m, &x).unwrap();
        let closed = conformal_scalar_closed(&prof, &dir, x[2]);
        assert!((engine - closed).abs() < 1e-8, "{engine} vs {closed}");
    }

    #[test]
    fn singular_point_is_rejected() {
        let m = hyperbolic3();
        match ricci(&m, &[0.1, 0.2, 0.0]) {
            Err(Error::OutsideDomain { .. }) => {}
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn coordinate_rescaling_transforms_curvature_covariantly() {
        // Pull back by x ↦ cx: components c²g(cx). Γ picks up one factor of
        // c, Ricci two, the scalar none.
        let c = 1.7;
        for base in [hyperbolic3(), MetricField::flat(&Signature::euclidean(3))] {
            let inner = base.clone();
            let scaled = MetricField::from_components_fd(3, move |x: &[f64]| {
                let y: Vec<f64> = x.iter().map(|v| c * v).collect();
                c * c * inner.components(&y)
            });
            let x = [0.3, 0.4, 0.5];
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let gamma_s = christoffel(&scaled, &x).unwrap();
            let gamma = christoffel(&base, &y).unwrap();
            for k in 0..3 {
                let diff = (&gamma_s[k] - c * &gamma[k]).abs().max();
                assert!(diff < 1e-7, "christoffel scaling diff {diff}");
            }
            let ric_s = ricci(&scaled, &x).unwrap();
            let ric = ricci(&base, &y).unwrap();
            let diff = (&ric_s - c * c * &ric).abs().max();
            assert!(diff < 1e-4, "ricci scaling diff {diff}");
            let r_s = scalar_curvature(&scaled, &x).unwrap();
            let r = scalar_curvature(&base, &y).unwrap();
            assert!((r_s - r).abs() < 1e-3, "scalar invariance {r_s} vs {r}");
        }
    }
}
