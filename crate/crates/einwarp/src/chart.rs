//! Coordinate charts and the scalar machinery shared by every other module:
//! metric signatures, translation-invariant directions, profile functions of
//! the invariant coordinate ξ, scalar fields with derivative oracles,
//! finite-difference fallbacks, and reproducible sample grids.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Diagonal sign pattern εᵢ = ±1 of a pseudo-Euclidean metric.
///
/// At least one entry must be +1; mixed signs give an indefinite chart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    eps: Vec<i8>,
}

impl Signature {
    pub fn new(eps: Vec<i8>) -> Result<Self, Error> {
        if eps.is_empty() {
            return Err(Error::InvalidSignature("empty signature".into()));
        }
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidSignature("entries must be +1 or -1".into()));
        }
        if !eps.contains(&1) {
            return Err(Error::InvalidSignature(
                "at least one entry must be +1".into(),
            ));
        }
        Ok(Self { eps })
    }

    pub fn euclidean(n: usize) -> Self {
        Self { eps: vec![1; n] }
    }

    /// One timelike direction first: (−1, +1, …, +1).
    pub fn lorentzian(n: usize) -> Self {
        let mut eps = vec![1; n];
        eps[0] = -1;
        Self { eps }
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[i8] {
        &self.eps
    }

    pub fn eps_f64(&self, i: usize) -> f64 {
        f64::from(self.eps[i])
    }
}

/// Translation-invariance data: the coefficient vector α of ξ = Σ αₖxₖ and
/// its signature norm κ = Σ εₖαₖ².
///
/// κ classifies the direction as spacelike (+), timelike (−), or lightlike
/// (0). Lightlike directions are representable but rejected by the reduction
/// operations.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    alpha: Vec<f64>,
    kappa: f64,
}

impl Direction {
    pub fn new(alpha: Vec<f64>, sig: &Signature) -> Result<Self, Error> {
        let k = kappa(&alpha, sig)?;
        Ok(Self { alpha, kappa: k })
    }

    /// Rescales α so that κ lands exactly in {−1, 0, +1}. Lightlike input
    /// (κ = 0) is kept as-is; there is no scale that normalizes it.
    pub fn normalized(alpha: Vec<f64>, sig: &Signature) -> Result<Self, Error> {
        let raw = kappa(&alpha, sig)?;
        if raw == 0.0 {
            return Ok(Self { alpha, kappa: 0.0 });
        }
        let scale = raw.abs().sqrt();
        let alpha: Vec<f64> = alpha.iter().map(|a| a / scale).collect();
        let k = if raw > 0.0 { 1.0 } else { -1.0 };
        Ok(Self { alpha, kappa: k })
    }

    /// Coordinate axis direction α = e_axis.
    pub fn axis(axis: usize, sig: &Signature) -> Result<Self, Error> {
        if axis >= sig.dim() {
            return Err(Error::DimensionMismatch {
                expected: sig.dim(),
                got: axis,
            });
        }
        let mut alpha = vec![0.0; sig.dim()];
        alpha[axis] = 1.0;
        Self::new(alpha, sig)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// ξ = Σ αₖ xₖ, the basic invariant of the translation group action.
pub fn xi_coordinate(point: &[f64], dir: &Direction) -> Result<f64, Error> {
    if point.len() != dir.dim() {
        return Err(Error::DimensionMismatch {
            expected: dir.dim(),
            got: point.len(),
        });
    }
    Ok(point.iter().zip(dir.alpha()).map(|(x, a)| a * x).sum())
}

/// κ = Σ εₖ αₖ².
pub fn kappa(alpha: &[f64], sig: &Signature) -> Result<f64, Error> {
    if alpha.len() != sig.dim() {
        return Err(Error::DimensionMismatch {
            expected: sig.dim(),
            got: alpha.len(),
        });
    }
    Ok(alpha
        .iter()
        .enumerate()
        .map(|(i, a)| sig.eps_f64(i) * a * a)
        .sum())
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central-difference utilities. Step sizes follow the usual truncation /
/// round-off balance: h ~ eps^(1/3) for first derivatives and h ~ eps^(1/4)
/// for second derivatives, scaled by max(1, |coordinate|).
pub mod fd {
    use nalgebra::{DMatrix, DVector};

    pub fn step_first(coord: f64) -> f64 {
        f64::EPSILON.powf(1.0 / 3.0) * coord.abs().max(1.0)
    }

    pub fn step_second(coord: f64) -> f64 {
        f64::EPSILON.powf(0.25) * coord.abs().max(1.0)
    }

    pub fn derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        let h = step_first(x);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    pub fn second_derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        let h = step_second(x);
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }

    pub fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DVector<f64> {
        let n = x.len();
        let mut out = DVector::zeros(n);
        let mut p = x.to_vec();
        for i in 0..n {
            let h = step_first(x[i]);
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let dn = f(&p);
            p[i] = x[i];
            out[i] = (up - dn) / (2.0 * h);
        }
        out
    }

    pub fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut out = DMatrix::zeros(n, n);
        let f0 = f(x);
        let mut p = x.to_vec();
        for i in 0..n {
            let hi = step_second(x[i]);
            p[i] = x[i] + hi;
            let up = f(&p);
            p[i] = x[i] - hi;
            let dn = f(&p);
            p[i] = x[i];
            out[(i, i)] = (up - 2.0 * f0 + dn) / (hi * hi);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let hi = step_second(x[i]);
                let hj = step_second(x[j]);
                let mut eval = |si: f64, sj: f64| {
                    p[i] = x[i] + si * hi;
                    p[j] = x[j] + sj * hj;
                    let v = f(&p);
                    p[i] = x[i];
                    p[j] = x[j];
                    v
                };
                let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * hi * hj);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

/// Central-difference gradient of a scalar function on a chart.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, point: &[f64]) -> DVector<f64> {
    fd::gradient(f, point)
}

/// Central-difference Hessian of a scalar function on a chart.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, point: &[f64]) -> DMatrix<f64> {
    fd::hessian(f, point)
}

// ---------------------------------------------------------------------------
// Profile functions of ξ
// ---------------------------------------------------------------------------

/// Open interval of valid ξ; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ALL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, xi: f64) -> bool {
        self.lo < xi && xi < self.hi
    }
}

type Scalar1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar function of the invariant coordinate ξ together with its first
/// and second derivatives and its interval of validity.
///
/// Closed-form constructors supply exact derivatives; [`ProfileFunction::from_eval_fd`]
/// falls back to central differences.
#[derive(Clone)]
pub struct ProfileFunction {
    eval: Scalar1,
    d1: Scalar1,
    d2: Scalar1,
    domain: Interval,
}

impl std::fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ProfileFunction {
    pub fn from_parts(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: Interval,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            domain,
        }
    }

    /// Derivatives by central differences of `eval`.
    pub fn from_eval_fd(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: Interval,
    ) -> Self {
        let eval = Arc::new(eval);
        let e1 = eval.clone();
        let e2 = eval.clone();
        Self {
            eval: eval.clone(),
            d1: Arc::new(move |xi| fd::derivative(&*e1, xi)),
            d2: Arc::new(move |xi| fd::second_derivative(&*e2, xi)),
            domain,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_parts(move |_| value, |_| 0.0, |_| 0.0, Interval::ALL)
    }

    /// u(ξ) = slope·ξ + intercept on the full line.
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self::from_parts(
            move |xi| slope * xi + intercept,
            move |_| slope,
            |_| 0.0,
            Interval::ALL,
        )
    }

    /// u(ξ) = scale·exp(rate·ξ).
    pub fn exponential(scale: f64, rate: f64) -> Self {
        Self::from_parts(
            move |xi| scale * (rate * xi).exp(),
            move |xi| scale * rate * (rate * xi).exp(),
            move |xi| scale * rate * rate * (rate * xi).exp(),
            Interval::ALL,
        )
    }

    /// u(ξ) = scale / (−g·ξ + c), on the side of the pole ξ = c/g where the
    /// denominator is positive (so the profile can serve as a warping
    /// function). Requires g ≠ 0.
    pub fn reciprocal_affine(scale: f64, g: f64, c: f64) -> Result<Self, Error> {
        if g == 0.0 {
            return Err(Error::InvalidParameter(
                "reciprocal_affine requires a nonzero slope".into(),
            ));
        }
        let pole = c / g;
        let domain = if g > 0.0 {
            Interval::new(f64::NEG_INFINITY, pole)
        } else {
            Interval::new(pole, f64::INFINITY)
        };
        let den = move |xi: f64| -g * xi + c;
        Ok(Self::from_parts(
            move |xi| scale / den(xi),
            move |xi| scale * g / (den(xi) * den(xi)),
            move |xi| 2.0 * scale * g * g / (den(xi) * den(xi) * den(xi)),
            domain,
        ))
    }

    pub fn restrict(mut self, domain: Interval) -> Self {
        self.domain = Interval::new(self.domain.lo.max(domain.lo), self.domain.hi.min(domain.hi));
        self
    }

    pub fn eval(&self, xi: f64) -> f64 {
        (self.eval)(xi)
    }

    pub fn d1(&self, xi: f64) -> f64 {
        (self.d1)(xi)
    }

    pub fn d2(&self, xi: f64) -> f64 {
        (self.d2)(xi)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }
}

// ---------------------------------------------------------------------------
// Scalar fields on a chart
// ---------------------------------------------------------------------------

type FieldEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type FieldGrad = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
type FieldHess = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A scalar function on a chart with gradient and Hessian oracles
/// (plain coordinate partials; no metric involved).
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: FieldEval,
    grad: FieldGrad,
    hess: FieldHess,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    /// Pulls a ξ-profile back to the chart: u(Σαₖxₖ). Partials reduce to
    /// u′αᵢ and u″αᵢαⱼ.
    pub fn from_profile(profile: &ProfileFunction, dir: &Direction) -> Self {
        let dim = dir.dim();
        let alpha = dir.alpha().to_vec();
        let p_eval = profile.clone();
        let p_grad = profile.clone();
        let p_hess = profile.clone();
        let d_eval = dir.clone();
        let a_grad = alpha.clone();
        let a_hess = alpha;
        Self {
            dim,
            eval: Arc::new(move |x| {
                p_eval.eval(xi_coordinate(x, &d_eval).expect("dimension checked at build"))
            }),
            grad: Arc::new(move |x| {
                let xi: f64 = x.iter().zip(&a_grad).map(|(x, a)| a * x).sum();
                let du = p_grad.d1(xi);
                DVector::from_iterator(a_grad.len(), a_grad.iter().map(|a| du * a))
            }),
            hess: Arc::new(move |x| {
                let xi: f64 = x.iter().zip(&a_hess).map(|(x, a)| a * x).sum();
                let ddu = p_hess.d2(xi);
                let n = a_hess.len();
                DMatrix::from_fn(n, n, |i, j| ddu * a_hess[i] * a_hess[j])
            }),
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            dim,
            eval: Arc::new(move |_| value),
            grad: Arc::new(move |_| DVector::zeros(dim)),
            hess: Arc::new(move |_| DMatrix::zeros(dim, dim)),
        }
    }

    /// The i-th coordinate function x ↦ xᵢ.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis out of range");
        Self {
            dim,
            eval: Arc::new(move |x| x[axis]),
            grad: Arc::new(move |_| {
                let mut g = DVector::zeros(dim);
                g[axis] = 1.0;
                g
            }),
            hess: Arc::new(move |_| DMatrix::zeros(dim, dim)),
        }
    }

    /// Arbitrary closure with central-difference derivatives.
    pub fn from_fn_fd(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let fg = f.clone();
        let fh = f.clone();
        Self {
            dim,
            eval: f,
            grad: Arc::new(move |x| fd::gradient(&*fg, x)),
            hess: Arc::new(move |x| fd::hessian(&*fh, x)),
        }
    }

    pub fn from_parts(
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    /// The field multiplied by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        let e = self.eval.clone();
        let g = self.grad.clone();
        let h = self.hess.clone();
        Self {
            dim: self.dim,
            eval: Arc::new(move |x| factor * e(x)),
            grad: Arc::new(move |x| factor * g(x)),
            hess: Arc::new(move |x| factor * h(x)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> DVector<f64> {
        (self.grad)(x)
    }

    pub fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        (self.hess)(x)
    }
}

// ---------------------------------------------------------------------------
// Singular loci and sample grids
// ---------------------------------------------------------------------------

/// A scalar constraint marking a singular locus of a metric.
///
/// The constraint function doubles as a distance proxy: a point is clear of
/// the locus when the value is at least `margin` (one-sided loci, e.g. the
/// x₃ > 0 half-space) or when its absolute value is (two-sided loci, e.g. the
/// pole of an affine conformal factor).
#[derive(Clone)]
pub struct SingularLocus {
    pub label: String,
    eval: FieldEval,
    one_sided: bool,
}

impl std::fmt::Debug for SingularLocus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularLocus")
            .field("label", &self.label)
            .field("one_sided", &self.one_sided)
            .finish_non_exhaustive()
    }
}

impl SingularLocus {
    pub fn two_sided(
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            one_sided: false,
        }
    }

    /// Valid region is where the constraint value is positive.
    pub fn half_space(
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            one_sided: true,
        }
    }

    pub fn clearance(&self, point: &[f64]) -> f64 {
        let v = (self.eval)(point);
        if self.one_sided {
            v
        } else {
            v.abs()
        }
    }

    /// The same locus read off a coordinate slice of a larger product chart.
    pub fn on_slice(&self, start: usize, len: usize) -> SingularLocus {
        let eval = self.eval.clone();
        SingularLocus {
            label: self.label.clone(),
            eval: Arc::new(move |x: &[f64]| eval(&x[start..start + len])),
            one_sided: self.one_sided,
        }
    }
}

/// Reproducible grid specification: an axis-aligned box, a target point
/// count, the clearance margin kept from singular loci, and an integer seed
/// that offsets the low-discrepancy sequence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub count: usize,
    #[serde(default = "GridSpec::default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GridSpec {
    pub fn default_margin() -> f64 {
        0.1
    }

    /// Unit box in `dim` coordinates, 100 points, margin 0.1, seed 0.
    pub fn unit(dim: usize) -> Self {
        Self {
            bounds: vec![[0.0, 1.0]; dim],
            count: 100,
            margin: 0.1,
            seed: 0,
        }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Shifts the bounds of one axis.
    pub fn with_axis(mut self, axis: usize, lo: f64, hi: f64) -> Self {
        self.bounds[axis] = [lo, hi];
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }
}

/// A fixed list of chart points, all clear of the declared singular loci by
/// at least `margin`.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    points: Vec<Vec<f64>>,
    margin: f64,
}

const HALTON_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

impl SampleGrid {
    /// Fills the box with a seeded Halton sequence, rejecting candidates
    /// closer than `margin` to any singular locus.
    pub fn generate(spec: &GridSpec, loci: &[SingularLocus]) -> Result<Self, Error> {
        let dim = spec.dim();
        assert!(dim <= HALTON_PRIMES.len(), "grid dimension too large");
        let mut points = Vec::with_capacity(spec.count);
        let offset = 1 + spec.seed.wrapping_mul(1_000_003);
        let budget = 1000 * spec.count.max(1) as u64;
        let mut index = 0;
        while points.len() < spec.count && index < budget {
            let candidate: Vec<f64> = (0..dim)
                .map(|d| {
                    let [lo, hi] = spec.bounds[d];
                    lo + radical_inverse(offset + index, HALTON_PRIMES[d]) * (hi - lo)
                })
                .collect();
            index += 1;
            if loci.iter().all(|l| l.clearance(&candidate) >= spec.margin) {
                points.push(candidate);
            }
        }
        if points.len() < spec.count {
            return Err(Error::GridUnsatisfiable {
                requested: spec.count,
                found: points.len(),
            });
        }
        Ok(Self {
            points,
            margin: spec.margin,
        })
    }

    pub fn from_points(points: Vec<Vec<f64>>, margin: f64) -> Self {
        Self { points, margin }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_is_the_alpha_projection() {
        let sig = Signature::euclidean(3);
        let d = Direction::new(vec![1.0, 0.0, 0.0], &sig).unwrap();
        assert_eq!(xi_coordinate(&[1.0, 2.0, 3.0], &d).unwrap(), 1.0);
        let d = Direction::new(vec![0.0, 0.0, 1.0], &sig).unwrap();
        assert_eq!(xi_coordinate(&[1.0, 2.0, 3.0], &d).unwrap(), 3.0);
        let d = Direction::new(vec![2.0, -1.0, 0.5], &sig).unwrap();
        assert_eq!(xi_coordinate(&[1.0, 1.0, 1.0], &d).unwrap(), 1.5);
    }

    #[test]
    fn xi_dimension_mismatch_is_an_error() {
        let sig = Signature::euclidean(3);
        let d = Direction::new(vec![1.0, 0.0, 0.0], &sig).unwrap();
        assert!(matches!(
            xi_coordinate(&[1.0, 2.0], &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kappa_examples() {
        let euc = Signature::euclidean(3);
        assert_eq!(kappa(&[1.0, 0.0, 0.0], &euc).unwrap(), 1.0);
        let mixed = Signature::new(vec![-1, 1, 1]).unwrap();
        assert_eq!(kappa(&[1.0, 1.0, 0.0], &mixed).unwrap(), 0.0);
        let mixed = Signature::new(vec![1, 1, -1]).unwrap();
        assert_eq!(kappa(&[0.0, 0.0, 2.0], &mixed).unwrap(), -4.0);
    }

    #[test]
    fn signature_requires_a_plus_entry() {
        assert!(Signature::new(vec![-1, -1]).is_err());
        assert!(Signature::new(vec![0, 1]).is_err());
        assert!(Signature::new(vec![]).is_err());
        assert!(Signature::new(vec![-1, 1, 1]).is_ok());
    }

    #[test]
    fn normalized_direction_has_unit_kappa() {
        let sig = Signature::euclidean(3);
        let d = Direction::normalized(vec![3.0, 4.0, 0.0], &sig).unwrap();
        assert!((d.kappa() - 1.0).abs() < 1e-15);
        let k = kappa(d.alpha(), &sig).unwrap();
        assert!((k - 1.0).abs() < 1e-12);

        let lor = Signature::lorentzian(3);
        let d = Direction::normalized(vec![2.0, 0.0, 0.0], &lor).unwrap();
        assert_eq!(d.kappa(), -1.0);

        // Lightlike stays lightlike.
        let d = Direction::normalized(vec![1.0, 1.0, 0.0], &lor).unwrap();
        assert_eq!(d.kappa(), 0.0);
    }

    #[test]
    fn fd_gradient_on_polynomials() {
        let f = |x: &[f64]| x[0] * x[0];
        let g = fd_gradient(&f, &[3.0, 0.0, 0.0]);
        assert!((g[0] - 6.0).abs() < 1e-8);
        assert!(g[1].abs() < 1e-8 && g[2].abs() < 1e-8);
    }

    #[test]
    fn fd_hessian_cross_term() {
        let f = |x: &[f64]| x[0] * x[1];
        let h = fd_hessian(&f, &[0.7, -0.3, 0.2]);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(1, 0)] - 1.0).abs() < 1e-6);
        assert!(h[(2, 2)].abs() < 1e-6);
    }

    #[test]
    fn fd_gradient_of_invariant_exponential() {
        let sig = Signature::euclidean(3);
        let dir = Direction::new(vec![1.0, 0.0, 0.0], &sig).unwrap();
        let field = ScalarField::from_profile(&ProfileFunction::exponential(1.0, 1.0), &dir);
        let x = [0.0, 0.4, -0.2];
        let f = |p: &[f64]| field.eval(p);
        let g = fd_gradient(&f, &x);
        assert!((g[0] - 1.0).abs() < 1e-6);
        assert!(g[1].abs() < 1e-6);
    }

    #[test]
    fn numeric_profile_differentiates_its_evaluation() {
        let p = ProfileFunction::from_eval_fd(|xi: f64| (xi * xi).sin(), Interval::ALL);
        let xi = 0.6f64;
        let exact_d1 = 2.0 * xi * (xi * xi).cos();
        assert!((p.d1(xi) - exact_d1).abs() < 1e-6);
        let exact_d2 = 2.0 * (xi * xi).cos() - 4.0 * xi * xi * (xi * xi).sin();
        assert!((p.d2(xi) - exact_d2).abs() < 1e-4);
    }

    #[test]
    fn profile_constructors_differentiate_correctly() {
        let p = ProfileFunction::reciprocal_affine(2.0, 1.0, 5.0).unwrap();
        // 2/(5-xi): value 0.5 at xi=1, derivative 2/(5-xi)^2 = 0.125
        assert!((p.eval(1.0) - 0.5).abs() < 1e-15);
        assert!((p.d1(1.0) - 0.125).abs() < 1e-15);
        assert!((p.d2(1.0) - 2.0 * 2.0 / 64.0).abs() < 1e-15);
        assert!(p.domain().contains(1.0));
        assert!(!p.domain().contains(6.0));

        let e = ProfileFunction::exponential(3.0, -2.0);
        let xi = 0.3;
        assert!((e.d1(xi) - fd::derivative(&|t| e.eval(t), xi)).abs() < 1e-6);
        assert!((e.d2(xi) - fd::second_derivative(&|t| e.eval(t), xi)).abs() < 1e-5);
    }

    #[test]
    fn scalar_field_from_profile_matches_fd() {
        let sig = Signature::new(vec![1, 1, -1]).unwrap();
        let dir = Direction::new(vec![0.5, -1.0, 0.25], &sig).unwrap();
        let field = ScalarField::from_profile(&ProfileFunction::exponential(1.3, 0.7), &dir);
        let x = [0.2, 0.1, -0.4];
        let g = field.grad(&x);
        let g_fd = fd_gradient(&|p| field.eval(p), &x);
        for i in 0..3 {
            assert!((g[i] - g_fd[i]).abs() < 1e-6, "grad component {i}");
        }
        let h = field.hess(&x);
        let h_fd = fd_hessian(&|p| field.eval(p), &x);
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[(i, j)] - h_fd[(i, j)]).abs() < 1e-5, "hess {i}{j}");
            }
        }
    }

    #[test]
    fn grid_respects_margins_and_seed() {
        let spec = GridSpec::unit(3);
        let locus = SingularLocus::half_space("x3 > 0", |x: &[f64]| x[2]);
        let loci = std::slice::from_ref(&locus);
        let grid = SampleGrid::generate(&spec, loci).unwrap();
        assert_eq!(grid.len(), 100);
        for p in grid.points() {
            assert!(p[2] >= 0.1);
            for (c, [lo, hi]) in p.iter().zip(&spec.bounds) {
                assert!(c >= lo && c <= hi);
            }
        }
        let again = SampleGrid::generate(&spec, loci).unwrap();
        assert_eq!(grid.points(), again.points(), "same seed, same grid");
        let other = SampleGrid::generate(&spec.clone().with_seed(7), loci).unwrap();
        assert_ne!(
            grid.points(),
            other.points(),
            "different seed, different grid"
        );
    }

    #[test]
    fn unsatisfiable_grid_reports_shortfall() {
        let spec = GridSpec::unit(2);
        let everywhere = SingularLocus::half_space("nowhere valid", |_: &[f64]| -1.0);
        match SampleGrid::generate(&spec, &[everywhere]) {
            Err(Error::GridUnsatisfiable { requested, found }) => {
                assert_eq!(requested, 100);
                assert_eq!(found, 0);
            }
            other => panic!("expected GridUnsatisfiable, got {other:?}"),
        }
    }
}
