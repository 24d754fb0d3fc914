//! The translation-invariant reduction of the Einstein condition.
//!
//! With every field a function of ξ = Σ αₖxₖ on a conformally flat base
//! ḡ = g/φ² and a Ricci-flat fiber, the Einstein condition collapses to an
//! ODE system in (φ, G), where G = φ·f′/f carries the warping slope:
//!
//! ```text
//!   (n−2)φφ″ − m(Gφ)′ = mG²
//!   φφ″ − (n−1)(φ′)² + mGφ′ = κλ
//!   nGφ′ − (Gφ)′ − mG² = κλ
//! ```
//!
//! and the warping function is recovered by quadrature,
//! f = Θ·exp(∫ G/φ dξ). The system is overdetermined: equations 1 and 3 are
//! rearranged into evolution form (eq. 3 is the only one linear in G′, eq. 2
//! contains no G′), and equation 2 rides along as an algebraic constraint
//! monitor. Trajectories integrate with fixed-step classical RK4 and halt
//! with a diagnostic on approach to φ = 0 — which is also where f develops
//! its pole — or when the monitor exceeds its bound.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chart::{fd, Direction, Interval, ProfileFunction, SampleGrid, ScalarField, Signature};
use crate::curvature::MetricField;
use crate::warp::{
    assemble_warped_metric, einstein_residual, FiberDescriptor, ResidualReport, WarpedProductSpec,
};
use crate::Error;

/// Sign branch of the square root defining the warp rate G.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootBranch {
    Positive,
    Negative,
}

impl RootBranch {
    pub fn sign(self) -> f64 {
        match self {
            RootBranch::Positive => 1.0,
            RootBranch::Negative => -1.0,
        }
    }
}

/// Dimensions, Einstein constant, causal type of the invariant direction,
/// and the root branch for G. κ = 0 (lightlike) is excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub kappa: f64,
    pub branch: RootBranch,
}

impl ReducedParams {
    pub fn new(n: usize, m: usize, lambda: f64, kappa: f64) -> Result<Self, Error> {
        if n < 3 {
            return Err(Error::InvalidParameter(
                "base dimension must be >= 3".into(),
            ));
        }
        if m < 2 {
            return Err(Error::InvalidParameter(
                "fiber dimension must be >= 2".into(),
            ));
        }
        if kappa != 1.0 && kappa != -1.0 {
            return Err(Error::InvalidParameter(
                "kappa must be +1 or -1 (lightlike directions are not reduced here)".into(),
            ));
        }
        Ok(Self {
            n,
            m,
            lambda,
            kappa,
            branch: RootBranch::Positive,
        })
    }

    pub fn with_branch(mut self, branch: RootBranch) -> Self {
        self.branch = branch;
        self
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn mf(&self) -> f64 {
        self.m as f64
    }

    /// G′ from the third reduced equation: G′ = [(n−1)Gφ′ − mG² − κλ]/φ.
    pub fn rate_derivative(&self, phi: f64, dphi: f64, rate: f64) -> f64 {
        ((self.nf() - 1.0) * rate * dphi - self.mf() * rate * rate - self.kappa * self.lambda) / phi
    }

    /// φ″ from the first reduced equation with G′ substituted:
    /// φ″ = m[G′φ + Gφ′ + G²]/((n−2)φ).
    pub fn phi_second(&self, phi: f64, dphi: f64, rate: f64) -> f64 {
        let dr = self.rate_derivative(phi, dphi, rate);
        self.mf() * (dr * phi + rate * dphi + rate * rate) / ((self.nf() - 2.0) * phi)
    }

    /// The second reduced equation evaluated with the evolution φ″: the
    /// algebraic first integral carried along trajectories.
    pub fn monitor(&self, phi: f64, dphi: f64, rate: f64) -> f64 {
        phi * self.phi_second(phi, dphi, rate) - (self.nf() - 1.0) * dphi * dphi
            + self.mf() * rate * dphi
            - self.kappa * self.lambda
    }

    /// The canonical chart frame for lifting: spacelike directions use the
    /// Euclidean signature with α along the last axis, timelike ones the
    /// Lorentzian signature with α along the first.
    pub fn canonical_frame(&self) -> LiftFrame {
        let (sig, axis) = if self.kappa > 0.0 {
            (Signature::euclidean(self.n), self.n - 1)
        } else {
            (Signature::lorentzian(self.n), 0)
        };
        let direction = Direction::axis(axis, &sig).expect("axis in range");
        LiftFrame {
            signature: sig,
            direction,
        }
    }
}

/// G(ξ) = ±√(κ[λ(n−m) − R̄]/(m(m−1))): the warp rate forced by the scalar
/// curvature of the base. A negative radicand signals that no real invariant
/// solution exists for these data.
pub fn invariant_warp_rate(
    lambda: f64,
    scalar_curv: f64,
    kappa: f64,
    n: usize,
    m: usize,
    branch: RootBranch,
) -> Result<f64, Error> {
    let radicand =
        kappa * (lambda * (n as f64 - m as f64) - scalar_curv) / (m as f64 * (m as f64 - 1.0));
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { value: radicand });
    }
    Ok(branch.sign() * radicand.sqrt())
}

// ---------------------------------------------------------------------------
// Quadrature and the warping function
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)] // recursion carries the cached endpoint values
fn adaptive_simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    mid: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_rec(f, a, fa, mid, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + adaptive_simpson_rec(f, mid, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_quadrature(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(mid), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson_rec(f, a, fa, b, fb, mid, fm, whole, tol, 48)
}

fn check_phi_nonvanishing(phi: &ProfileFunction, a: f64, b: f64) -> Result<(), Error> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let samples = 128;
    let mut prev = phi.eval(lo);
    for i in 0..=samples {
        let xi = lo + (hi - lo) * i as f64 / samples as f64;
        let v = phi.eval(xi);
        if !v.is_finite() || v.abs() < 1e-12 || v * prev < 0.0 {
            return Err(Error::VanishingConformalFactor { xi });
        }
        prev = v;
    }
    Ok(())
}

/// f(ξ) = Θ·exp(∫_{ξ₀}^{ξ} G/φ dτ) by adaptive quadrature. Returns the pair
/// (f, f′/f); the second component equals G(ξ)/φ(ξ) and is what the
/// verification loop checks the quadrature against.
pub fn warp_from_rate(
    phi: &ProfileFunction,
    rate: &ProfileFunction,
    theta: f64,
    xi0: f64,
    xi: f64,
) -> Result<(f64, f64), Error> {
    if theta <= 0.0 {
        return Err(Error::InvalidParameter("theta must be positive".into()));
    }
    check_phi_nonvanishing(phi, xi0, xi)?;
    let integrand = |t: f64| rate.eval(t) / phi.eval(t);
    let integral = adaptive_quadrature(&integrand, xi0, xi, 1e-12);
    let f = theta * integral.exp();
    Ok((f, rate.eval(xi) / phi.eval(xi)))
}

/// The warping function as a profile: value by quadrature, derivatives from
/// f′/f = G/φ and its derivative. Closure evaluations outside the validity
/// interval return NaN rather than panic.
pub fn warp_profile(
    phi: &ProfileFunction,
    rate: &ProfileFunction,
    theta: f64,
    xi0: f64,
) -> Result<ProfileFunction, Error> {
    if theta <= 0.0 {
        return Err(Error::InvalidParameter("theta must be positive".into()));
    }
    let domain = Interval::new(
        phi.domain().lo.max(rate.domain().lo),
        phi.domain().hi.min(rate.domain().hi),
    );
    let value = {
        let (phi, rate) = (phi.clone(), rate.clone());
        move |xi: f64| {
            let integrand = |t: f64| rate.eval(t) / phi.eval(t);
            let integral = adaptive_quadrature(&integrand, xi0, xi, 1e-12);
            theta * integral.exp()
        }
    };
    let value_d1 = value.clone();
    let value_d2 = value.clone();
    let (phi1, rate1) = (phi.clone(), rate.clone());
    let (phi2, rate2) = (phi.clone(), rate.clone());
    Ok(ProfileFunction::from_parts(
        value,
        move |xi| {
            let f = value_d1(xi);
            f * rate1.eval(xi) / phi1.eval(xi)
        },
        move |xi| {
            let f = value_d2(xi);
            let p = phi2.eval(xi);
            let dp = phi2.d1(xi);
            let g = rate2.eval(xi);
            let dg = rate2.d1(xi);
            // f″/f = (G/φ)² + (G′φ − Gφ′)/φ²
            f * ((g / p) * (g / p) + (dg * p - g * dp) / (p * p))
        },
        domain,
    ))
}

// ---------------------------------------------------------------------------
// ODE residuals
// ---------------------------------------------------------------------------

/// Residuals of the coupled (φ, f) system on the conformal base with a
/// Ricci-flat fiber.
pub fn ode_residuals_general(
    phi: &ProfileFunction,
    f: &ProfileFunction,
    params: &ReducedParams,
    xi: f64,
) -> [f64; 3] {
    let (n, m) = (params.nf(), params.mf());
    let kl = params.kappa * params.lambda;
    let (p, dp, ddp) = (phi.eval(xi), phi.d1(xi), phi.d2(xi));
    let (w, dw, ddw) = (f.eval(xi), f.d1(xi), f.d2(xi));
    let eq1 = (n - 2.0) * w * ddp - m * ddw * p - 2.0 * m * dp * dw;
    let eq2 = w * p * ddp - (n - 1.0) * w * dp * dp + m * p * dp * dw - kl * w;
    let eq3 =
        (n - 2.0) * w * p * dp * dw - (m - 1.0) * p * p * dw * dw - w * ddw * p * p - kl * w * w;
    [eq1, eq2, eq3]
}

/// Residuals of the reduced (φ, G) system.
pub fn ode_residuals_reduced(
    phi: &ProfileFunction,
    rate: &ProfileFunction,
    params: &ReducedParams,
    xi: f64,
) -> [f64; 3] {
    let (n, m) = (params.nf(), params.mf());
    let kl = params.kappa * params.lambda;
    let (p, dp, ddp) = (phi.eval(xi), phi.d1(xi), phi.d2(xi));
    let (g, dg) = (rate.eval(xi), rate.d1(xi));
    let rate_phi_deriv = dg * p + g * dp; // (Gφ)′
    let eq1 = (n - 2.0) * p * ddp - m * rate_phi_deriv - m * g * g;
    let eq2 = p * ddp - (n - 1.0) * dp * dp + m * g * dp - kl;
    let eq3 = n * g * dp - rate_phi_deriv - m * g * g - kl;
    [eq1, eq2, eq3]
}

/// Residuals of the constant-scalar-curvature specialization, where G is a
/// constant and the third equation loses its G′ term.
pub fn ode_residuals_constant_scalar(
    phi: &ProfileFunction,
    rate: f64,
    params: &ReducedParams,
    xi: f64,
) -> [f64; 3] {
    let (n, m) = (params.nf(), params.mf());
    let kl = params.kappa * params.lambda;
    let (p, dp, ddp) = (phi.eval(xi), phi.d1(xi), phi.d2(xi));
    let eq1 = (n - 2.0) * p * ddp - m * rate * dp - m * rate * rate;
    let eq2 = p * ddp - (n - 1.0) * dp * dp + m * rate * dp - kl;
    let eq3 = (n - 1.0) * rate * dp - m * rate * rate - kl;
    [eq1, eq2, eq3]
}

/// Real roots G₀ of the algebraic constraint obtained by eliminating φ″
/// between the first two reduced equations (using the third to remove G′):
///
/// ```text
///   m(m−1)G² − 2m(n−1)φ′G + (n−1)(n−2)(φ′)² + (m+n−2)κλ = 0
/// ```
///
/// An empty set is a valid answer: no invariant solution passes through the
/// given (φ, φ′).
pub fn admissible_initial_data(
    phi0: f64,
    dphi0: f64,
    params: &ReducedParams,
) -> Result<Vec<f64>, Error> {
    if phi0 == 0.0 {
        return Err(Error::InvalidParameter(
            "initial conformal value must be nonzero".into(),
        ));
    }
    let (n, m) = (params.nf(), params.mf());
    let a = m * (m - 1.0);
    let b = -2.0 * m * (n - 1.0) * dphi0;
    let c = (n - 1.0) * (n - 2.0) * dphi0 * dphi0 + (m + n - 2.0) * params.kappa * params.lambda;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    if disc == 0.0 {
        return Ok(vec![-b / (2.0 * a)]);
    }
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = if b == 0.0 {
        let r = (disc.sqrt()) / (2.0 * a);
        (-r, r)
    } else {
        (q / a, c / q)
    };
    let mut roots = vec![r1, r2];
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(roots)
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// One point of a reduced trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedState {
    pub xi: f64,
    pub phi: f64,
    pub dphi: f64,
    /// The warp rate G at this point.
    pub rate: f64,
}

/// Why an integration stopped before covering its span.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HaltDiagnostic {
    /// |φ| dropped below the relative threshold: the conformal factor is
    /// about to vanish and the warping function to blow up.
    NearSingularity { xi: f64, phi: f64 },
    /// The algebraic constraint monitor exceeded its bound.
    ConstraintDrift { xi: f64, monitor: f64 },
    /// A state stopped being finite.
    NumericalBreakdown { xi: f64 },
}

/// Options for [`integrate_reduced`].
#[derive(Debug, Clone, Copy)]
pub struct IntegrationOptions {
    pub step: f64,
    /// Target endpoint; integration runs forward from the initial ξ.
    pub xi_end: f64,
    pub monitor_bound: f64,
    /// Rerun at half the step and record the endpoint discrepancy.
    pub halving_check: bool,
}

impl IntegrationOptions {
    pub fn new(step: f64, xi_end: f64) -> Self {
        Self {
            step,
            xi_end,
            monitor_bound: 1e-6,
            halving_check: false,
        }
    }

    pub fn with_monitor_bound(mut self, bound: f64) -> Self {
        self.monitor_bound = bound;
        self
    }

    pub fn with_halving_check(mut self, on: bool) -> Self {
        self.halving_check = on;
        self
    }
}

/// A fixed-step trajectory of the reduced system with its per-step
/// constraint monitor.
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: ReducedParams,
    step: f64,
    states: Vec<ReducedState>,
    monitors: Vec<f64>,
    halt: Option<HaltDiagnostic>,
    error_estimate: Option<f64>,
}

impl Trajectory {
    pub fn params(&self) -> &ReducedParams {
        &self.params
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn states(&self) -> &[ReducedState] {
        &self.states
    }

    pub fn monitors(&self) -> &[f64] {
        &self.monitors
    }

    pub fn halt(&self) -> Option<&HaltDiagnostic> {
        self.halt.as_ref()
    }

    /// Endpoint discrepancy from the half-step rerun, when requested.
    pub fn error_estimate(&self) -> Option<f64> {
        self.error_estimate
    }

    pub fn final_state(&self) -> ReducedState {
        *self
            .states
            .last()
            .expect("trajectory has at least the initial state")
    }

    pub fn max_monitor(&self) -> f64 {
        self.monitors.iter().fold(0.0f64, |a, m| a.max(m.abs()))
    }

    pub fn xi_range(&self) -> (f64, f64) {
        (self.states[0].xi, self.final_state().xi)
    }

    fn segment(&self, xi: f64) -> usize {
        debug_assert!(self.states.len() >= 2);
        let last = self.states.len() - 1;
        match self
            .states
            .binary_search_by(|s| s.xi.partial_cmp(&xi).unwrap())
        {
            Ok(i) => i.min(last - 1),
            Err(0) => 0,
            Err(i) if i > last => last - 1,
            Err(i) => i - 1,
        }
    }

    fn hermite(
        &self,
        xi: f64,
        value: impl Fn(&ReducedState) -> f64,
        slope: impl Fn(&ReducedState) -> f64,
    ) -> f64 {
        if self.states.len() == 1 {
            return value(&self.states[0]);
        }
        let i = self.segment(xi);
        let (s0, s1) = (&self.states[i], &self.states[i + 1]);
        let h = s1.xi - s0.xi;
        let t = (xi - s0.xi) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * value(s0)
            + (t3 - 2.0 * t2 + t) * h * slope(s0)
            + (-2.0 * t3 + 3.0 * t2) * value(s1)
            + (t3 - t2) * h * slope(s1)
    }

    fn interpolated(&self, xi: f64) -> (f64, f64, f64) {
        let params = self.params;
        let phi = self.hermite(xi, |s| s.phi, |s| s.dphi);
        let dphi = self.hermite(xi, |s| s.dphi, |s| params.phi_second(s.phi, s.dphi, s.rate));
        let rate = self.hermite(
            xi,
            |s| s.rate,
            |s| params.rate_derivative(s.phi, s.dphi, s.rate),
        );
        (phi, dphi, rate)
    }

    /// φ as a profile: values and slopes by piecewise cubic Hermite
    /// interpolation of the stored states, second derivative from the
    /// evolution formula at the interpolated state.
    pub fn phi_profile(&self) -> ProfileFunction {
        let (lo, hi) = self.xi_range();
        let t1 = self.clone();
        let t2 = self.clone();
        let t3 = self.clone();
        ProfileFunction::from_parts(
            move |xi| t1.interpolated(xi).0,
            move |xi| t2.interpolated(xi).1,
            move |xi| {
                let (phi, dphi, rate) = t3.interpolated(xi);
                t3.params.phi_second(phi, dphi, rate)
            },
            Interval::new(lo, hi),
        )
    }

    /// The warping function f = Θ·exp(∫ G/φ) rebuilt from the trajectory.
    /// The integral is accumulated once per segment (Simpson on the
    /// interpolated integrand), so evaluations cost a lookup plus one
    /// sub-step quadrature instead of re-integrating the whole span.
    pub fn warp_profile(&self, theta: f64) -> Result<ProfileFunction, Error> {
        if theta <= 0.0 {
            return Err(Error::InvalidParameter("theta must be positive".into()));
        }
        if self.states.len() == 1 {
            let xi = self.states[0].xi;
            return Ok(ProfileFunction::constant(theta).restrict(Interval::new(xi, xi)));
        }
        let integrand = |t: &Trajectory, xi: f64| {
            let (phi, _, rate) = t.interpolated(xi);
            rate / phi
        };
        let mut cumulative = Vec::with_capacity(self.states.len());
        cumulative.push(0.0);
        for w in self.states.windows(2) {
            let (a, b) = (w[0].xi, w[1].xi);
            let mid = 0.5 * (a + b);
            let seg = (b - a) / 6.0
                * (w[0].rate / w[0].phi + 4.0 * integrand(self, mid) + w[1].rate / w[1].phi);
            cumulative.push(cumulative.last().unwrap() + seg);
        }

        let (lo, hi) = self.xi_range();
        let value = {
            let traj = self.clone();
            move |xi: f64| {
                let i = traj.segment(xi);
                let a = traj.states[i].xi;
                let mid = 0.5 * (a + xi);
                let local = (xi - a) / 6.0
                    * (traj.states[i].rate / traj.states[i].phi
                        + 4.0 * integrand(&traj, mid)
                        + integrand(&traj, xi));
                theta * (cumulative[i] + local).exp()
            }
        };
        let value_d1 = value.clone();
        let value_d2 = value.clone();
        let t1 = self.clone();
        let t2 = self.clone();
        Ok(ProfileFunction::from_parts(
            value,
            move |xi| {
                let (phi, _, rate) = t1.interpolated(xi);
                value_d1(xi) * rate / phi
            },
            move |xi| {
                let (phi, dphi, rate) = t2.interpolated(xi);
                let drate = t2.params.rate_derivative(phi, dphi, rate);
                let ratio = rate / phi;
                value_d2(xi) * (ratio * ratio + (drate * phi - rate * dphi) / (phi * phi))
            },
            Interval::new(lo, hi),
        ))
    }

    /// G as a profile, with its derivative from the evolution formula.
    pub fn rate_profile(&self) -> ProfileFunction {
        let (lo, hi) = self.xi_range();
        let t1 = self.clone();
        let t2 = self.clone();
        let t3 = self.clone();
        ProfileFunction::from_parts(
            move |xi| t1.interpolated(xi).2,
            move |xi| {
                let (phi, dphi, rate) = t2.interpolated(xi);
                t2.params.rate_derivative(phi, dphi, rate)
            },
            move |xi| {
                let t = &t3;
                fd::derivative(
                    &|u| {
                        let (phi, dphi, rate) = t.interpolated(u);
                        t.params.rate_derivative(phi, dphi, rate)
                    },
                    xi,
                )
            },
            Interval::new(lo, hi),
        )
    }

    /// CSV export with the fixed header `xi,phi,dphi,G,monitor`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "xi,phi,dphi,G,monitor")?;
        for (s, m) in self.states.iter().zip(&self.monitors) {
            writeln!(out, "{},{},{},{},{}", s.xi, s.phi, s.dphi, s.rate, m)?;
        }
        Ok(())
    }
}

fn rk4_step(params: &ReducedParams, s: &ReducedState, h: f64) -> ReducedState {
    let deriv = |phi: f64, dphi: f64, rate: f64| {
        (
            dphi,
            params.phi_second(phi, dphi, rate),
            params.rate_derivative(phi, dphi, rate),
        )
    };
    let (k1p, k1d, k1r) = deriv(s.phi, s.dphi, s.rate);
    let (k2p, k2d, k2r) = deriv(
        s.phi + 0.5 * h * k1p,
        s.dphi + 0.5 * h * k1d,
        s.rate + 0.5 * h * k1r,
    );
    let (k3p, k3d, k3r) = deriv(
        s.phi + 0.5 * h * k2p,
        s.dphi + 0.5 * h * k2d,
        s.rate + 0.5 * h * k2r,
    );
    let (k4p, k4d, k4r) = deriv(s.phi + h * k3p, s.dphi + h * k3d, s.rate + h * k3r);
    ReducedState {
        xi: s.xi + h,
        phi: s.phi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
        dphi: s.dphi + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
        rate: s.rate + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
    }
}

fn integrate_once(
    initial: ReducedState,
    params: &ReducedParams,
    opts: &IntegrationOptions,
) -> Result<Trajectory, Error> {
    if opts.step <= 0.0 || opts.xi_end <= initial.xi {
        return Err(Error::InvalidParameter(
            "integration requires a positive step and xi_end beyond the initial xi".into(),
        ));
    }
    if initial.phi == 0.0 {
        return Err(Error::InvalidParameter(
            "initial phi must be nonzero".into(),
        ));
    }
    let m0 = params.monitor(initial.phi, initial.dphi, initial.rate);
    if m0.abs() > opts.monitor_bound {
        return Err(Error::InadmissibleInitialData { monitor: m0 });
    }

    let phi_floor = 1e-6 * initial.phi.abs();
    let span = opts.xi_end - initial.xi;
    let steps = (span / opts.step).ceil() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut monitors = Vec::with_capacity(steps + 1);
    states.push(initial);
    monitors.push(m0);
    let mut halt = None;

    let mut current = initial;
    for i in 0..steps {
        let next_xi = if i + 1 == steps {
            opts.xi_end
        } else {
            initial.xi + (i + 1) as f64 * opts.step
        };
        let h = next_xi - current.xi;
        let mut candidate = rk4_step(params, &current, h);
        candidate.xi = next_xi;
        if !(candidate.phi.is_finite() && candidate.dphi.is_finite() && candidate.rate.is_finite())
        {
            halt = Some(HaltDiagnostic::NumericalBreakdown { xi: next_xi });
            break;
        }
        if candidate.phi.abs() < phi_floor {
            halt = Some(HaltDiagnostic::NearSingularity {
                xi: candidate.xi,
                phi: candidate.phi,
            });
            break;
        }
        let monitor = params.monitor(candidate.phi, candidate.dphi, candidate.rate);
        if monitor.abs() > opts.monitor_bound {
            halt = Some(HaltDiagnostic::ConstraintDrift {
                xi: candidate.xi,
                monitor,
            });
            break;
        }
        states.push(candidate);
        monitors.push(monitor);
        current = candidate;
    }

    Ok(Trajectory {
        params: *params,
        step: opts.step,
        states,
        monitors,
        halt,
        error_estimate: None,
    })
}

/// Integrates the reduced system from admissible initial data. The returned
/// trajectory carries the per-step constraint monitor; integration halts
/// with a diagnostic (not an error) when φ approaches zero or the monitor
/// leaves its bound.
pub fn integrate_reduced(
    initial: ReducedState,
    params: &ReducedParams,
    opts: &IntegrationOptions,
) -> Result<Trajectory, Error> {
    let mut traj = integrate_once(initial, params, opts)?;
    if opts.halving_check {
        let halved = integrate_once(
            initial,
            params,
            &IntegrationOptions {
                step: 0.5 * opts.step,
                halving_check: false,
                ..*opts
            },
        )?;
        let a = traj.final_state();
        let b = halved.final_state();
        if (a.xi - b.xi).abs() < 0.75 * opts.step {
            let err = (a.phi - b.phi)
                .abs()
                .max((a.dphi - b.dphi).abs())
                .max((a.rate - b.rate).abs());
            traj.error_estimate = Some(err);
        }
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Lifting trajectories back to warped metrics
// ---------------------------------------------------------------------------

/// The chart frame a trajectory is lifted into: a signature and an invariant
/// direction whose κ matches the reduced parameters.
#[derive(Debug, Clone)]
pub struct LiftFrame {
    pub signature: Signature,
    pub direction: Direction,
}

/// Options for [`lift_and_verify`].
#[derive(Debug, Clone, Copy)]
pub struct LiftOptions {
    pub count: usize,
    /// Fraction of the ξ-span shaved off both ends of the sampling window.
    pub margin_fraction: f64,
    pub seed: u64,
    pub tolerance: f64,
    /// Verify at this constant instead of the trajectory's λ.
    pub lambda_override: Option<f64>,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            count: 100,
            margin_fraction: 0.02,
            seed: 0,
            tolerance: 1e-5,
            lambda_override: None,
        }
    }
}

fn halton_point(index: u64, dims: usize, offset: u64) -> Vec<f64> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dims)
        .map(|d| {
            let mut x = 0.0;
            let base = PRIMES[d];
            let inv = 1.0 / base as f64;
            let mut scale = inv;
            let mut i = offset + index;
            while i > 0 {
                x += (i % base) as f64 * scale;
                i /= base;
                scale *= inv;
            }
            x
        })
        .collect()
}

/// Rebuilds φ and f fields from a trajectory (f by quadrature of G/φ),
/// assembles the conformal base ḡ = g/φ² warped by f over the given fiber,
/// and runs the direct Einstein residual on a grid whose ξ-pullback lies
/// inside the trajectory's range. This closes the loop from the ODE back to
/// the curvature engine.
pub fn lift_and_verify(
    traj: &Trajectory,
    theta: f64,
    fiber: &FiberDescriptor,
    frame: &LiftFrame,
    opts: &LiftOptions,
) -> Result<ResidualReport, Error> {
    let params = traj.params();
    if traj.states().len() < 2 {
        return Err(Error::InvalidParameter(
            "trajectory too short to lift (it halted immediately)".into(),
        ));
    }
    if fiber.mu_claim != 0.0 {
        return Err(Error::FiberNotRicciFlat { mu: fiber.mu_claim });
    }
    if (frame.direction.kappa() - params.kappa).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "frame direction has kappa {}, reduced parameters use {}",
            frame.direction.kappa(),
            params.kappa
        )));
    }
    let n = params.n;
    let m = params.m;
    if frame.signature.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: frame.signature.dim(),
        });
    }

    let phi_prof = traj.phi_profile();
    let (xi_lo, xi_hi) = traj.xi_range();
    let f_prof = traj.warp_profile(theta)?;

    let phi_field = ScalarField::from_profile(&phi_prof, &frame.direction);
    let f_field = ScalarField::from_profile(&f_prof, &frame.direction);
    let base = MetricField::conformally_flat(&frame.signature, &phi_field);
    let spec = WarpedProductSpec::new(base, fiber.clone(), f_field, params.lambda)?;
    let metric = assemble_warped_metric(&spec)?;

    // Sample points whose ξ-pullback covers the trajectory window, offset
    // from both ends, with transverse coordinates in the unit box.
    let span = xi_hi - xi_lo;
    let window = (
        xi_lo + opts.margin_fraction * span,
        xi_hi - opts.margin_fraction * span,
    );
    let alpha = frame.direction.alpha();
    let alpha_norm_sq: f64 = alpha.iter().map(|a| a * a).sum();
    let offset = 1 + opts.seed.wrapping_mul(1_000_003);
    let mut points = Vec::with_capacity(opts.count);
    for i in 0..opts.count as u64 {
        let h = halton_point(i, 1 + n + m, offset);
        let u = window.0 + h[0] * (window.1 - window.0);
        let t = &h[1..1 + n];
        let t_dot_alpha: f64 = t.iter().zip(alpha).map(|(t, a)| t * a).sum();
        let x: Vec<f64> = (0..n)
            .map(|j| t[j] - (t_dot_alpha - u) * alpha[j] / alpha_norm_sq)
            .collect();
        let mut z = x;
        z.extend_from_slice(&h[1 + n..]);
        points.push(z);
    }
    let grid = SampleGrid::from_points(points, opts.margin_fraction * span);
    for p in grid.points() {
        metric.check_point(p)?;
    }

    let lambda = opts.lambda_override.unwrap_or(params.lambda);
    einstein_residual(&metric, lambda, &grid, opts.tolerance)
}
