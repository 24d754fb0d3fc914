//! Warped-product metrics ĝ = g + f²g̃ on product charts, and the residual
//! machinery that verifies (or refutes) the Einstein condition on them.
//!
//! Two independent routes lead to the same condition. The direct route
//! assembles ĝ and runs the generic curvature engine on the product chart;
//! the block route evaluates the three-equation system that characterizes
//! Einstein warped products:
//!
//! ```text
//!   Ric − (m/f)∇²f = λg          (base block)
//!   R̃ic = μg̃                     (fiber block)
//!   fΔf + (m−1)|∇f|² + λf² = μ   (scalar)
//! ```
//!
//! with Hessian, Laplacian, and gradient taken in the base metric. Reports
//! from either route carry per-equation sup-norms and verdicts against a
//! declared tolerance.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{SampleGrid, ScalarField, Signature, SingularLocus};
use crate::curvature::{
    covariant_hessian, gradient_norm_sq, laplacian, raised_gradient, ricci, scalar_curvature,
    DerivativeMode, MetricField,
};
use crate::Error;

// ---------------------------------------------------------------------------
// Residual reports
// ---------------------------------------------------------------------------

/// Per-equation residual data: one absolute value per grid point and the
/// resulting sup-norm.
#[derive(Debug, Clone, Serialize)]
pub struct EquationResidual {
    pub label: String,
    pub sup_norm: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    #[serde(skip)]
    pub per_point: Vec<f64>,
}

impl EquationResidual {
    pub fn new(label: impl Into<String>, per_point: Vec<f64>, tolerance: f64) -> Self {
        let sup_norm = per_point.iter().cloned().fold(0.0f64, f64::max);
        Self {
            label: label.into(),
            sup_norm,
            tolerance,
            pass: sup_norm <= tolerance,
            points: per_point.len(),
            per_point,
        }
    }
}

/// Residuals for a family of equations evaluated over a grid, with the
/// engine mode and an optional least-squares Einstein constant.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub mode: DerivativeMode,
    pub equations: Vec<EquationResidual>,
    pub best_fit_lambda: Option<f64>,
}

impl ResidualReport {
    pub fn new(mode: DerivativeMode) -> Self {
        Self {
            mode,
            equations: Vec::new(),
            best_fit_lambda: None,
        }
    }

    pub fn push(&mut self, eq: EquationResidual) {
        self.equations.push(eq);
    }

    /// True when every equation is within its tolerance.
    pub fn verdict(&self) -> bool {
        self.equations.iter().all(|e| e.pass)
    }

    /// Largest sup-norm over all equations.
    pub fn max_sup(&self) -> f64 {
        self.equations
            .iter()
            .map(|e| e.sup_norm)
            .fold(0.0, f64::max)
    }

    pub fn equation(&self, label: &str) -> Option<&EquationResidual> {
        self.equations.iter().find(|e| e.label == label)
    }
}

// ---------------------------------------------------------------------------
// Fibers
// ---------------------------------------------------------------------------

/// The fiber of a warped product: its metric, dimension, and the Einstein
/// constant it claims to satisfy (R̃ic = μ g̃).
#[derive(Debug, Clone)]
pub struct FiberDescriptor {
    pub m: usize,
    pub metric: MetricField,
    pub mu_claim: f64,
}

impl FiberDescriptor {
    pub fn new(m: usize, metric: MetricField, mu_claim: f64) -> Result<Self, Error> {
        if m < 2 {
            return Err(Error::InvalidParameter(
                "fiber dimension must be at least 2".into(),
            ));
        }
        if metric.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: metric.dim(),
            });
        }
        Ok(Self {
            m,
            metric,
            mu_claim,
        })
    }

    /// Flat fiber ℝᵐ with the given signature (μ = 0).
    pub fn flat(sig: &Signature) -> Result<Self, Error> {
        Self::new(sig.dim(), MetricField::flat(sig), 0.0)
    }

    /// Unit round sphere in the stereographic chart 4δ/(1+|y|²)², μ = m−1.
    pub fn unit_sphere(m: usize) -> Result<Self, Error> {
        let psi = ScalarField::from_parts(
            m,
            |y: &[f64]| 0.5 * (1.0 + y.iter().map(|v| v * v).sum::<f64>()),
            |y: &[f64]| nalgebra::DVector::from_iterator(y.len(), y.iter().cloned()),
            |y: &[f64]| DMatrix::identity(y.len(), y.len()),
        );
        let metric = MetricField::conformally_flat(&Signature::euclidean(m), &psi);
        Self::new(m, metric, m as f64 - 1.0)
    }

    /// Hyperbolic space in the half-space chart δ/yₘ², μ = −(m−1).
    pub fn hyperbolic(m: usize) -> Result<Self, Error> {
        let psi = ScalarField::coordinate(m, m - 1);
        let metric = MetricField::conformally_flat(&Signature::euclidean(m), &psi).with_locus(
            SingularLocus::half_space("fiber half-space", move |y: &[f64]| y[m - 1]),
        );
        Self::new(m, metric, -(m as f64 - 1.0))
    }

    /// Checks R̃ic = μ g̃ on the given fiber grid.
    pub fn validate(&self, grid: &SampleGrid, tol: f64) -> Result<(), Error> {
        let sup = einstein_residual(&self.metric, self.mu_claim, grid, tol)?.max_sup();
        if sup > tol {
            return Err(Error::FiberNotEinstein { sup });
        }
        Ok(())
    }

    /// The rescaled fiber (c²·g̃); used together with warping f/c, which
    /// leaves the assembled product metric unchanged.
    pub fn scaled(&self, c_squared: f64) -> Self {
        let inner = self.metric.clone();
        let dim = self.m;
        let mut scaled = MetricField::from_analytic(
            dim,
            {
                let m = inner.clone();
                move |y: &[f64]| c_squared * m.components(y)
            },
            {
                let m = inner.clone();
                move |y: &[f64]| m.d1(y).into_iter().map(|d| c_squared * d).collect()
            },
            {
                let m = inner.clone();
                move |y: &[f64]| {
                    m.d2(y)
                        .into_iter()
                        .map(|row| row.into_iter().map(|d| c_squared * d).collect())
                        .collect()
                }
            },
        )
        .with_loci(inner.singular_loci().to_vec());
        scaled = scaled.with_mode(self.metric.mode());
        Self {
            m: self.m,
            metric: scaled,
            mu_claim: self.mu_claim / c_squared,
        }
    }
}

// ---------------------------------------------------------------------------
// Warped products
// ---------------------------------------------------------------------------

/// A warped product ĝ = g + f²g̃: base metric of dimension n, fiber
/// descriptor, positive warping field f on the base, and the Einstein
/// constant the product claims to satisfy.
#[derive(Debug, Clone)]
pub struct WarpedProductSpec {
    pub base: MetricField,
    pub fiber: FiberDescriptor,
    pub f: ScalarField,
    pub lambda_claim: f64,
}

impl WarpedProductSpec {
    pub fn new(
        base: MetricField,
        fiber: FiberDescriptor,
        f: ScalarField,
        lambda_claim: f64,
    ) -> Result<Self, Error> {
        if f.dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: f.dim(),
            });
        }
        Ok(Self {
            base,
            fiber,
            f,
            lambda_claim,
        })
    }

    pub fn n(&self) -> usize {
        self.base.dim()
    }

    pub fn m(&self) -> usize {
        self.fiber.m
    }

    /// Checks f > 0 on the grid.
    pub fn validate_warp(&self, grid: &SampleGrid) -> Result<(), Error> {
        for p in grid.points() {
            let v = self.f.eval(p);
            if v <= 0.0 {
                return Err(Error::NonPositiveWarp { value: v });
            }
        }
        Ok(())
    }

    /// The algebraically equivalent spec with warping f/c and fiber metric
    /// c²g̃. Assembled components are identical (bit-for-bit when c is a
    /// binary power, since scaling by powers of two is exact).
    pub fn rescale_fiber(&self, c: f64) -> Self {
        Self {
            base: self.base.clone(),
            fiber: self.fiber.scaled(c * c),
            f: self.f.scaled(1.0 / c),
            lambda_claim: self.lambda_claim,
        }
    }
}

/// Builds the block metric on the (n+m)-dimensional product chart: base
/// block g(x), fiber block f(x)²·g̃(y), zero off-diagonal blocks. Derivative
/// oracles are composed blockwise from the base and fiber oracles and the
/// warping field's derivatives, so an analytic metric stays analytic through
/// assembly.
pub fn assemble_warped_metric(spec: &WarpedProductSpec) -> Result<MetricField, Error> {
    let n = spec.n();
    let m = spec.m();
    let dim = n + m;
    let analytic = spec.base.has_analytic_oracles() && spec.fiber.metric.has_analytic_oracles();

    let base = spec.base.clone();
    let fiber = spec.fiber.metric.clone();
    let f = spec.f.clone();

    let components = {
        let (base, fiber, f) = (base.clone(), fiber.clone(), f.clone());
        move |z: &[f64]| {
            let (x, y) = z.split_at(n);
            let g = base.components(x);
            let gt = fiber.components(y);
            let w = f.eval(x);
            let ww = w * w;
            let mut out = DMatrix::zeros(dim, dim);
            out.view_mut((0, 0), (n, n)).copy_from(&g);
            out.view_mut((n, n), (m, m)).copy_from(&(ww * gt));
            out
        }
    };

    let d1 = {
        let (base, fiber, f) = (base.clone(), fiber.clone(), f.clone());
        move |z: &[f64]| {
            let (x, y) = z.split_at(n);
            let dg = base.d1(x);
            let gt = fiber.components(y);
            let dgt = fiber.d1(y);
            let w = f.eval(x);
            let dw = f.grad(x);
            let mut out = vec![DMatrix::zeros(dim, dim); dim];
            for k in 0..n {
                out[k].view_mut((0, 0), (n, n)).copy_from(&dg[k]);
                out[k]
                    .view_mut((n, n), (m, m))
                    .copy_from(&(2.0 * w * dw[k] * &gt));
            }
            for c in 0..m {
                out[n + c]
                    .view_mut((n, n), (m, m))
                    .copy_from(&(w * w * &dgt[c]));
            }
            out
        }
    };

    let d2 = {
        let (base, fiber, f) = (base.clone(), fiber.clone(), f.clone());
        move |z: &[f64]| {
            let (x, y) = z.split_at(n);
            let ddg = base.d2(x);
            let gt = fiber.components(y);
            let dgt = fiber.d1(y);
            let ddgt = fiber.d2(y);
            let w = f.eval(x);
            let dw = f.grad(x);
            let hw = f.hess(x);
            let mut out = vec![vec![DMatrix::zeros(dim, dim); dim]; dim];
            for l in 0..n {
                for k in 0..n {
                    out[l][k].view_mut((0, 0), (n, n)).copy_from(&ddg[l][k]);
                    let c = 2.0 * (dw[k] * dw[l] + w * hw[(k, l)]);
                    out[l][k].view_mut((n, n), (m, m)).copy_from(&(c * &gt));
                }
            }
            for k in 0..n {
                for c in 0..m {
                    let block = 2.0 * w * dw[k] * &dgt[c];
                    out[n + c][k].view_mut((n, n), (m, m)).copy_from(&block);
                    out[k][n + c].view_mut((n, n), (m, m)).copy_from(&block);
                }
            }
            for c in 0..m {
                for d in 0..m {
                    out[n + c][n + d]
                        .view_mut((n, n), (m, m))
                        .copy_from(&(w * w * &ddgt[c][d]));
                }
            }
            out
        }
    };

    let mut loci: Vec<SingularLocus> = spec
        .base
        .singular_loci()
        .iter()
        .map(|l| l.on_slice(0, n))
        .collect();
    loci.extend(
        spec.fiber
            .metric
            .singular_loci()
            .iter()
            .map(|l| l.on_slice(n, m)),
    );
    let f_locus = spec.f.clone();
    loci.push(SingularLocus::half_space(
        "warping function positive",
        move |z: &[f64]| f_locus.eval(&z[..n]),
    ));

    let metric = if analytic {
        MetricField::from_analytic(dim, components, d1, d2)
    } else {
        MetricField::from_components_fd(dim, components)
    };
    Ok(metric.with_loci(loci).with_mode(
        if analytic && spec.base.mode() == DerivativeMode::Analytic {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference
        },
    ))
}

// ---------------------------------------------------------------------------
// Residual operations
// ---------------------------------------------------------------------------

/// Residual of Ric − λg over a grid, with the least-squares constant λ*
/// minimizing Σ|Rᵢⱼ − λgᵢⱼ|² reported alongside.
pub fn einstein_residual(
    metric: &MetricField,
    lambda: f64,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, Error> {
    let per_point: Vec<Result<(f64, f64, f64), Error>> = grid
        .points()
        .par_iter()
        .map(|p| {
            let ric = ricci(metric, p)?;
            let g = metric.components(p);
            let sup = (&ric - lambda * &g).abs().max();
            let rg = ric.dot(&g);
            let gg = g.dot(&g);
            Ok((sup, rg, gg))
        })
        .collect();

    let mut sups = Vec::with_capacity(per_point.len());
    let mut rg_total = 0.0;
    let mut gg_total = 0.0;
    for r in per_point {
        let (sup, rg, gg) = r?;
        sups.push(sup);
        rg_total += rg;
        gg_total += gg;
    }
    let mut report = ResidualReport::new(metric.mode());
    report.best_fit_lambda = (gg_total > 0.0).then(|| rg_total / gg_total);
    report.push(EquationResidual::new("einstein", sups, tol));
    Ok(report)
}

/// Per-point pieces of the block system on the base: the base-block residual
/// matrix, the scalar-equation residual, and the raw ingredients (f, Δf,
/// |∇f|²) shared by the scalar identities.
struct BasePointData {
    eq1_sup: f64,
    eq3: f64,
}

fn base_point_data(
    spec: &WarpedProductSpec,
    lambda: f64,
    mu: f64,
    point: &[f64],
) -> Result<BasePointData, Error> {
    let m = spec.m() as f64;
    let w = spec.f.eval(point);
    if w <= 0.0 {
        return Err(Error::NonPositiveWarp { value: w });
    }
    let ric = ricci(&spec.base, point)?;
    let g = spec.base.components(point);
    let hess = covariant_hessian(&spec.base, &spec.f, point)?;
    let eq1 = &ric - (m / w) * &hess - lambda * &g;
    let lap = laplacian(&spec.base, &spec.f, point)?;
    let grad_sq = gradient_norm_sq(&spec.base, &spec.f, point)?;
    let eq3 = w * lap + (m - 1.0) * grad_sq + lambda * w * w - mu;
    Ok(BasePointData {
        eq1_sup: eq1.abs().max(),
        eq3,
    })
}

/// The three-block characterization of the Einstein condition on a warped
/// product, one residual array per equation: base block, fiber block, and
/// the scalar equation.
pub fn oneill_residuals(
    spec: &WarpedProductSpec,
    lambda: f64,
    mu: f64,
    base_grid: &SampleGrid,
    fiber_grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, Error> {
    let base_data: Vec<Result<BasePointData, Error>> = base_grid
        .points()
        .par_iter()
        .map(|p| base_point_data(spec, lambda, mu, p))
        .collect();

    let fiber_sups: Vec<Result<f64, Error>> = fiber_grid
        .points()
        .par_iter()
        .map(|y| {
            let ric = ricci(&spec.fiber.metric, y)?;
            let gt = spec.fiber.metric.components(y);
            Ok((&ric - mu * &gt).abs().max())
        })
        .collect();

    let mut eq1 = Vec::with_capacity(base_data.len());
    let mut eq3 = Vec::with_capacity(base_data.len());
    for r in base_data {
        let d = r?;
        eq1.push(d.eq1_sup);
        eq3.push(d.eq3.abs());
    }
    let eq2 = fiber_sups.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut report = ResidualReport::new(spec.base.mode());
    report.push(EquationResidual::new("base block", eq1, tol));
    report.push(EquationResidual::new("fiber block", eq2, tol));
    report.push(EquationResidual::new("scalar equation", eq3, tol));
    Ok(report)
}

/// Pointwise residuals of the three scalar identities implied by the block
/// system: the trace of the base block, the gradient identity obtained by
/// eliminating Δf, and the divergence form of the scalar equation.
pub fn scalar_identities(
    spec: &WarpedProductSpec,
    lambda: f64,
    mu: f64,
    grid: &SampleGrid,
    tol: f64,
) -> Result<ResidualReport, Error> {
    let n = spec.n() as f64;
    let m = spec.m() as f64;
    if spec.m() < 2 {
        return Err(Error::InvalidParameter(
            "scalar identities require fiber dimension at least 2".into(),
        ));
    }

    let rows: Vec<Result<(f64, f64, f64), Error>> = grid
        .points()
        .par_iter()
        .map(|p| {
            let w = spec.f.eval(p);
            let r = scalar_curvature(&spec.base, p)?;
            let lap = laplacian(&spec.base, &spec.f, p)?;
            let grad_sq = gradient_norm_sq(&spec.base, &spec.f, p)?;
            let id1 = r * w * w - m * w * lap - n * lambda * w * w;
            let id2 = grad_sq + ((lambda * (m - n) + r) / (m * (m - 1.0))) * w * w - mu / (m - 1.0);
            // div(f∇f) = fΔf + |∇f|²
            let id3 = (w * lap + grad_sq) + (m - 2.0) * grad_sq + lambda * w * w - mu;
            Ok((id1.abs(), id2.abs(), id3.abs()))
        })
        .collect();

    let mut id1 = Vec::new();
    let mut id2 = Vec::new();
    let mut id3 = Vec::new();
    for r in rows {
        let (a, b, c) = r?;
        id1.push(a);
        id2.push(b);
        id3.push(c);
    }
    let mut report = ResidualReport::new(spec.base.mode());
    report.push(EquationResidual::new("trace identity", id1, tol));
    report.push(EquationResidual::new("gradient identity", id2, tol));
    report.push(EquationResidual::new("divergence identity", id3, tol));
    Ok(report)
}

/// Verdict of the scalar-curvature obstruction for Ricci-flat fibers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionVerdict {
    /// R < λ(n−m): nonconstant warping is not obstructed.
    Admissible,
    /// R = λ(n−m) exactly.
    Boundary,
    /// R > λ(n−m): the warping must be trivial in the μ = 0 case.
    TrivialWarping,
}

/// Margin λ(n−m) − R of the obstruction dichotomy: with a Ricci-flat fiber,
/// either the margin is nonnegative or the warping function is constant.
pub fn obstruction_margin(r: f64, lambda: f64, n: usize, m: usize) -> (f64, ObstructionVerdict) {
    let margin = lambda * (n as f64 - m as f64) - r;
    let verdict = if margin > 0.0 {
        ObstructionVerdict::Admissible
    } else if margin == 0.0 {
        ObstructionVerdict::Boundary
    } else {
        ObstructionVerdict::TrivialWarping
    };
    (margin, verdict)
}

/// Result of the gated Bochner-chain check.
#[derive(Debug, Clone)]
pub enum BochnerOutcome {
    /// The hypothesis λ = R/(n−1) with constant R does not hold on the grid.
    NotApplicable {
        reason: String,
    },
    Report(ResidualReport),
}

/// Pointwise residuals of the identity chain that holds when the base has
/// constant scalar curvature R with λ = R/(n−1):
///
/// ```text
///   −Δf = Rf/(m(n−1))
///   Ric(∇f, ∇f) = 0
///   ½Δ|∇f|² = |∇²f|² + Ric(∇f,∇f) + g(∇f, ∇Δf)
///   |∇²f|² = R²f²/(m²(n−1)²)
///   |Ric|² = R²/(n−1)
/// ```
///
/// The Laplacian of |∇f|² and the gradient of Δf are differenced from the
/// evaluated scalars, so this check carries finite-difference accuracy even
/// on analytic metrics.
pub fn bochner_identities(
    spec: &WarpedProductSpec,
    grid: &SampleGrid,
    tol: f64,
) -> Result<BochnerOutcome, Error> {
    let n = spec.n() as f64;
    let m = spec.m() as f64;
    let lambda = spec.lambda_claim;

    // Gate: R constant on the grid and λ = R/(n−1).
    let scalars: Vec<f64> = grid
        .points()
        .iter()
        .map(|p| scalar_curvature(&spec.base, p))
        .collect::<Result<_, _>>()?;
    let r0 = scalars.first().copied().unwrap_or(0.0);
    let scale = r0.abs().max(1.0);
    let gate_tol = 1e-8 * scale;
    if let Some(bad) = scalars.iter().find(|r| (*r - r0).abs() > gate_tol) {
        return Ok(BochnerOutcome::NotApplicable {
            reason: format!("scalar curvature is not constant on the grid ({r0:.6} vs {bad:.6})"),
        });
    }
    if (lambda - r0 / (n - 1.0)).abs() > gate_tol.max(1e-8 * lambda.abs().max(1.0)) {
        return Ok(BochnerOutcome::NotApplicable {
            reason: format!(
                "lambda = {lambda:.6} differs from R/(n-1) = {:.6}",
                r0 / (n - 1.0)
            ),
        });
    }

    let base = &spec.base;
    let f = &spec.f;
    let rows: Vec<Result<[f64; 5], Error>> = grid
        .points()
        .par_iter()
        .map(|p| {
            let w = f.eval(p);
            let lap = laplacian(base, f, p)?;
            let hess = covariant_hessian(base, f, p)?;
            let ric = ricci(base, p)?;
            let g_inv = base.inverse_at(p)?;
            let grad_up = raised_gradient(base, f, p)?;

            let b1 = lap + r0 * w / (m * (n - 1.0));

            let ric_grad_grad = (grad_up.transpose() * &ric * &grad_up)[(0, 0)];
            let b2 = ric_grad_grad;

            // |∇²f|² and |Ric|² with indices raised by g⁻¹
            let hess_up = &g_inv * &hess * &g_inv;
            let hess_norm_sq = hess.dot(&hess_up);
            let ric_up = &g_inv * &ric * &g_inv;
            let ric_norm_sq = ric.dot(&ric_up);

            // Δ|∇f|² and ∇Δf by differencing the evaluated scalars.
            let grad_sq_field = {
                let base = base.clone();
                let f = f.clone();
                ScalarField::from_fn_fd(base.dim(), move |x: &[f64]| {
                    gradient_norm_sq(&base, &f, x).unwrap_or(f64::NAN)
                })
            };
            let lap_grad_sq = laplacian(base, &grad_sq_field, p)?;
            let lap_field = {
                let base = base.clone();
                let f = f.clone();
                ScalarField::from_fn_fd(base.dim(), move |x: &[f64]| {
                    laplacian(&base, &f, x).unwrap_or(f64::NAN)
                })
            };
            let grad_lap = lap_field.grad(p);
            let g_grad_f_grad_lap = (grad_up.transpose() * grad_lap)[(0, 0)];

            let b3 = 0.5 * lap_grad_sq - hess_norm_sq - ric_grad_grad - g_grad_f_grad_lap;
            let b4 = hess_norm_sq - r0 * r0 * w * w / (m * m * (n - 1.0) * (n - 1.0));
            let b5 = ric_norm_sq - r0 * r0 / (n - 1.0);
            Ok([b1.abs(), b2.abs(), b3.abs(), b4.abs(), b5.abs()])
        })
        .collect();

    let mut cols: [Vec<f64>; 5] = Default::default();
    for r in rows {
        let vals = r?;
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let labels = [
        "laplacian identity",
        "ricci gradient orthogonality",
        "bochner formula",
        "hessian norm identity",
        "ricci norm identity",
    ];
    let mut report = ResidualReport::new(spec.base.mode());
    for (label, col) in labels.into_iter().zip(cols) {
        report.push(EquationResidual::new(label, col, tol));
    }
    Ok(BochnerOutcome::Report(report))
}

/// Zip-pairs base and fiber points into product-chart points, cycling the
/// shorter list.
pub fn product_grid(base: &SampleGrid, fiber: &SampleGrid) -> SampleGrid {
    if base.is_empty() || fiber.is_empty() {
        return SampleGrid::from_points(Vec::new(), base.margin().min(fiber.margin()));
    }
    let count = base.len().max(fiber.len());
    let points = (0..count)
        .map(|i| {
            let mut p = base.points()[i % base.len()].clone();
            p.extend_from_slice(&fiber.points()[i % fiber.len()]);
            p
        })
        .collect();
    SampleGrid::from_points(points, base.margin().min(fiber.margin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Direction, GridSpec, ProfileFunction};

    fn grids(spec: &WarpedProductSpec, base_spec: &GridSpec) -> (SampleGrid, SampleGrid) {
        let base = SampleGrid::generate(base_spec, spec.base.singular_loci()).unwrap();
        let fiber = SampleGrid::generate(
            &GridSpec::unit(spec.m()).with_count(base_spec.count),
            spec.fiber.metric.singular_loci(),
        )
        .unwrap();
        (base, fiber)
    }

    /// Base ℍ³ = δ/x₃², flat ℝ² fiber, f = 1/x₃: the assembled metric is
    /// δ₅/x₃² on the product chart (hyperbolic of dimension 5), λ = −4.
    fn hyperbolic_spec() -> WarpedProductSpec {
        let sig = Signature::euclidean(3);
        let phi = ScalarField::coordinate(3, 2);
        let base = MetricField::conformally_flat(&sig, &phi)
            .with_locus(SingularLocus::half_space("x3 > 0", |x: &[f64]| x[2]));
        let fiber = FiberDescriptor::flat(&Signature::euclidean(2)).unwrap();
        let dir = Direction::axis(2, &sig).unwrap();
        // f = 1/ξ = 1/x₃: denominator −gξ+c with g = −1, c = 0
        let f = ScalarField::from_profile(
            &ProfileFunction::reciprocal_affine(1.0, -1.0, 0.0).unwrap(),
            &dir,
        );
        WarpedProductSpec::new(base, fiber, f, -4.0).unwrap()
    }

    fn trivial_spec() -> WarpedProductSpec {
        let base = MetricField::flat(&Signature::euclidean(3));
        let fiber = FiberDescriptor::flat(&Signature::euclidean(2)).unwrap();
        let f = ScalarField::constant(3, 1.0);
        WarpedProductSpec::new(base, fiber, f, 0.0).unwrap()
    }

    #[test]
    fn trivial_product_assembles_block_diagonal() {
        let spec = trivial_spec();
        let metric = assemble_warped_metric(&spec).unwrap();
        let g = metric.components(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(g, DMatrix::identity(5, 5));
    }

    #[test]
    fn hyperbolic_assembly_is_conformal_product_chart() {
        let spec = hyperbolic_spec();
        let metric = assemble_warped_metric(&spec).unwrap();
        let z = [0.3, -0.2, 0.5, 1.0, 2.0];
        let g = metric.components(&z);
        let expected = DMatrix::identity(5, 5) / (0.5f64 * 0.5);
        assert!((g - expected).abs().max() < 1e-14);
    }

    #[test]
    fn assembled_oracles_match_differenced_components() {
        // The blockwise-composed d1/d2 against central differences of the
        // assembled component function, nonflat base and fiber.
        let sig = Signature::euclidean(3);
        let dir = Direction::axis(2, &sig).unwrap();
        let phi = ScalarField::from_profile(&ProfileFunction::affine(-1.0, 5.0), &dir);
        let base = MetricField::conformally_flat(&sig, &phi);
        let fiber = FiberDescriptor::unit_sphere(2).unwrap();
        let f = ScalarField::from_profile(&ProfileFunction::exponential(1.0, 0.5), &dir);
        let spec = WarpedProductSpec::new(base, fiber, f, 0.0).unwrap();
        let metric = assemble_warped_metric(&spec).unwrap();
        assert!(metric.has_analytic_oracles());

        let fd_view = metric.clone().with_mode(DerivativeMode::FiniteDifference);
        let z = [0.3, -0.2, 0.6, 0.4, -0.7];
        let d1 = metric.d1(&z);
        let d1_fd = fd_view.d1(&z);
        for (a, b) in d1.iter().zip(&d1_fd) {
            assert!((a - b).abs().max() < 1e-6, "d1 diff {}", (a - b).abs().max());
        }
        let d2 = metric.d2(&z);
        let d2_fd = fd_view.d2(&z);
        for (row_a, row_b) in d2.iter().zip(&d2_fd) {
            for (a, b) in row_a.iter().zip(row_b) {
                assert!((a - b).abs().max() < 1e-4, "d2 diff {}", (a - b).abs().max());
            }
        }
    }

    #[test]
    fn fiber_rescaling_leaves_components_identical() {
        let spec = hyperbolic_spec();
        let scaled = spec.rescale_fiber(4.0); // power of two: exact
        let a = assemble_warped_metric(&spec).unwrap();
        let b = assemble_warped_metric(&scaled).unwrap();
        let z = [0.3, -0.2, 0.5, 1.0, 2.0];
        let ga = a.components(&z);
        let gb = b.components(&z);
        assert_eq!(ga, gb);
    }

    #[test]
    fn flat_product_einstein_residual_is_zero() {
        let spec = trivial_spec();
        let metric = assemble_warped_metric(&spec).unwrap();
        let grid = SampleGrid::generate(&GridSpec::unit(5).with_count(20), &[]).unwrap();
        let report = einstein_residual(&metric, 0.0, &grid, 1e-12).unwrap();
        assert_eq!(report.max_sup(), 0.0);
        assert!(report.verdict());
    }

    #[test]
    fn hyperbolic_base_alone_is_einstein_minus_two() {
        let spec = hyperbolic_spec();
        let grid_spec = GridSpec::unit(3);
        let grid = SampleGrid::generate(&grid_spec, spec.base.singular_loci()).unwrap();
        let report = einstein_residual(&spec.base, -2.0, &grid, 1e-8).unwrap();
        assert!(report.verdict(), "sup {}", report.max_sup());
        let lstar = report.best_fit_lambda.unwrap();
        assert!((lstar + 2.0).abs() < 1e-9, "best fit {lstar}");
    }

    #[test]
    fn assembled_hyperbolic_is_einstein_minus_four() {
        let spec = hyperbolic_spec();
        let metric = assemble_warped_metric(&spec).unwrap();
        let grid = SampleGrid::generate(&GridSpec::unit(5).with_count(60), metric.singular_loci())
            .unwrap();
        let report = einstein_residual(&metric, -4.0, &grid, 1e-6).unwrap();
        assert!(report.verdict(), "sup {}", report.max_sup());
        assert!(report.max_sup() < 1e-6);
        let lstar = report.best_fit_lambda.unwrap();
        assert!((lstar + 4.0).abs() < 1e-6);
    }

    #[test]
    fn oneill_blocks_vanish_on_hyperbolic_spec() {
        let spec = hyperbolic_spec();
        let (base, fiber) = grids(&spec, &GridSpec::unit(3));
        let report = oneill_residuals(&spec, -4.0, 0.0, &base, &fiber, 1e-6).unwrap();
        assert!(report.verdict(), "max {}", report.max_sup());
    }

    #[test]
    fn oneill_blocks_vanish_on_trivial_product() {
        let spec = trivial_spec();
        let (base, fiber) = grids(&spec, &GridSpec::unit(3));
        let report = oneill_residuals(&spec, 0.0, 0.0, &base, &fiber, 1e-12).unwrap();
        assert_eq!(report.max_sup(), 0.0);
    }

    #[test]
    fn exponential_warp_on_flat_base_fails_as_predicted() {
        // f = e^ξ, α = (1,0,0): base-block residual is −mA²αᵢαⱼ (sup 2 for
        // m = 2, A = 1) and the scalar equation leaves mA²f².
        let sig = Signature::euclidean(3);
        let base = MetricField::flat(&sig);
        let fiber = FiberDescriptor::flat(&Signature::euclidean(2)).unwrap();
        let dir = Direction::axis(0, &sig).unwrap();
        let f = ScalarField::from_profile(&ProfileFunction::exponential(1.0, 1.0), &dir);
        let spec = WarpedProductSpec::new(base, fiber, f, 0.0).unwrap();
        let (base_grid, fiber_grid) = grids(&spec, &GridSpec::unit(3));

        let report = oneill_residuals(&spec, 0.0, 0.0, &base_grid, &fiber_grid, 1e-6).unwrap();
        let eq1 = report.equation("base block").unwrap();
        assert!((eq1.sup_norm - 2.0).abs() < 1e-9, "sup {}", eq1.sup_norm);
        let eq3 = report.equation("scalar equation").unwrap();
        // residual = mA²f² pointwise
        for (point, resid) in base_grid.points().iter().zip(&eq3.per_point) {
            let w = spec.f.eval(point);
            assert!((resid - 2.0 * w * w).abs() < 1e-9);
        }
    }

    #[test]
    fn scalar_identities_on_hyperbolic_spec() {
        let spec = hyperbolic_spec();
        let grid = SampleGrid::generate(&GridSpec::unit(3), spec.base.singular_loci()).unwrap();
        let report = scalar_identities(&spec, -4.0, 0.0, &grid, 1e-8).unwrap();
        assert!(report.verdict(), "max {}", report.max_sup());
    }

    #[test]
    fn scalar_identities_on_trivial_product_are_zero() {
        let spec = trivial_spec();
        let grid = SampleGrid::generate(&GridSpec::unit(3), &[]).unwrap();
        let report = scalar_identities(&spec, 0.0, 0.0, &grid, 1e-15).unwrap();
        assert_eq!(report.max_sup(), 0.0);
    }

    #[test]
    fn obstruction_margin_cases() {
        let (margin, verdict) = obstruction_margin(-6.0, -4.0, 3, 2);
        assert_eq!(margin, 2.0);
        assert_eq!(verdict, ObstructionVerdict::Admissible);
        let (margin, verdict) = obstruction_margin(0.0, 0.0, 3, 2);
        assert_eq!(margin, 0.0);
        assert_eq!(verdict, ObstructionVerdict::Boundary);
        let (margin, verdict) = obstruction_margin(1.0, 0.0, 3, 2);
        assert_eq!(margin, -1.0);
        assert_eq!(verdict, ObstructionVerdict::TrivialWarping);
    }

    #[test]
    fn bochner_gate_rejects_hyperbolic_spec() {
        // λ = −4 but R/(n−1) = −3: hypothesis fails.
        let spec = hyperbolic_spec();
        let grid =
            SampleGrid::generate(&GridSpec::unit(3).with_count(10), spec.base.singular_loci())
                .unwrap();
        match bochner_identities(&spec, &grid, 1e-6).unwrap() {
            BochnerOutcome::NotApplicable { reason } => {
                assert!(reason.contains("lambda"), "{reason}");
            }
            BochnerOutcome::Report(_) => panic!("gate should reject"),
        }
    }

    #[test]
    fn bochner_chain_on_harmonic_linear_warp() {
        // Flat base, f = x₁ on x₁ > 0, λ = R = 0: every identity vanishes.
        let sig = Signature::euclidean(3);
        let base = MetricField::flat(&sig)
            .with_locus(SingularLocus::half_space("x1 > 0", |x: &[f64]| x[0]));
        let fiber = FiberDescriptor::unit_sphere(2).unwrap();
        let f = ScalarField::coordinate(3, 0);
        let spec = WarpedProductSpec::new(base, fiber, f, 0.0).unwrap();
        let grid =
            SampleGrid::generate(&GridSpec::unit(3).with_count(15), spec.base.singular_loci())
                .unwrap();
        match bochner_identities(&spec, &grid, 1e-6).unwrap() {
            BochnerOutcome::Report(report) => {
                assert!(report.verdict(), "max {}", report.max_sup());
            }
            BochnerOutcome::NotApplicable { reason } => panic!("should apply: {reason}"),
        }
    }

    #[test]
    fn bochner_trivial_constant_warp() {
        let spec = trivial_spec();
        let grid = SampleGrid::generate(&GridSpec::unit(3).with_count(10), &[]).unwrap();
        match bochner_identities(&spec, &grid, 1e-9).unwrap() {
            BochnerOutcome::Report(report) => assert!(report.verdict()),
            BochnerOutcome::NotApplicable { reason } => panic!("should apply: {reason}"),
        }
    }

    #[test]
    fn fiber_library_validates_claimed_constants() {
        for (fiber, label) in [
            (
                FiberDescriptor::flat(&Signature::euclidean(2)).unwrap(),
                "flat",
            ),
            (
                FiberDescriptor::flat(&Signature::lorentzian(2)).unwrap(),
                "minkowski",
            ),
            (FiberDescriptor::unit_sphere(2).unwrap(), "sphere"),
            (FiberDescriptor::hyperbolic(3).unwrap(), "hyperbolic"),
        ] {
            let grid = SampleGrid::generate(
                &GridSpec::unit(fiber.m).with_count(25),
                fiber.metric.singular_loci(),
            )
            .unwrap();
            fiber
                .validate(&grid, 1e-8)
                .unwrap_or_else(|e| panic!("{label}: {e}"));
        }
    }

    #[test]
    fn direct_and_block_residuals_cross_validate() {
        let spec = hyperbolic_spec();
        let (base, fiber) = grids(&spec, &GridSpec::unit(3).with_count(40));
        let blocks = oneill_residuals(&spec, -4.0, 0.0, &base, &fiber, 1e-6).unwrap();
        let metric = assemble_warped_metric(&spec).unwrap();
        let product = product_grid(&base, &fiber);
        let direct = einstein_residual(&metric, -4.0, &product, 1e-6).unwrap();
        let a = blocks.max_sup();
        let b = direct.max_sup();
        assert!(a < 1e-6 && b < 1e-6, "both paths pass: {a} vs {b}");
    }

    #[test]
    fn non_positive_warp_is_reported() {
        let sig = Signature::euclidean(3);
        let base = MetricField::flat(&sig);
        let fiber = FiberDescriptor::flat(&Signature::euclidean(2)).unwrap();
        let f = ScalarField::constant(3, -1.0);
        let spec = WarpedProductSpec::new(base, fiber, f, 0.0).unwrap();
        let grid = SampleGrid::generate(&GridSpec::unit(3).with_count(5), &[]).unwrap();
        assert!(matches!(
            spec.validate_warp(&grid),
            Err(Error::NonPositiveWarp { .. })
        ));
        let (b, fg) = grids(&spec, &GridSpec::unit(3).with_count(5));
        assert!(matches!(
            oneill_residuals(&spec, 0.0, 0.0, &b, &fg, 1e-6),
            Err(Error::NonPositiveWarp { .. })
        ));
    }
}
