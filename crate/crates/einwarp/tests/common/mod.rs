//! Shared helpers for the integration test suites: deterministic pseudo-random
//! warped-product specs and grid plumbing.

use einwarp::chart::{Direction, GridSpec, ProfileFunction, SampleGrid, ScalarField, Signature};
use einwarp::curvature::MetricField;
use einwarp::warp::{FiberDescriptor, WarpedProductSpec};

/// splitmix64: cheap, deterministic stream of test-case bits.
pub struct Splitmix(pub u64);

impl Splitmix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    pub fn pick(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + u * (hi - lo)
    }
}

/// A deterministic "random" spec: tame profiles on the unit box, an exactly
/// Einstein fiber, and a generic λ, so residuals are nonzero but bounded.
pub fn randomized_spec(seed: u64) -> (WarpedProductSpec, f64) {
    let mut rng = Splitmix(seed.wrapping_mul(0x5851F42D4C957F2D).wrapping_add(1));
    let n = 3 + rng.pick(2); // 3 or 4
    let m = 2 + rng.pick(2); // 2 or 3

    let sig = if rng.pick(4) == 0 {
        Signature::lorentzian(n)
    } else {
        Signature::euclidean(n)
    };
    let axis = rng.pick(n);
    let dir = Direction::axis(axis, &sig).unwrap();

    let phi_profile = match rng.pick(3) {
        0 => ProfileFunction::constant(1.0),
        1 => ProfileFunction::affine(rng.uniform(-0.4, -0.1), rng.uniform(1.5, 3.0)),
        _ => ProfileFunction::exponential(rng.uniform(0.8, 1.5), rng.uniform(-0.4, 0.4)),
    };
    let base = if matches!(rng.pick(2), 0) {
        MetricField::conformally_flat(&sig, &ScalarField::from_profile(&phi_profile, &dir))
    } else {
        MetricField::flat(&sig)
    };

    let (fiber, mu) = match rng.pick(3) {
        0 => (
            FiberDescriptor::flat(&Signature::euclidean(m)).unwrap(),
            0.0,
        ),
        1 => (FiberDescriptor::unit_sphere(m).unwrap(), m as f64 - 1.0),
        _ => (FiberDescriptor::hyperbolic(m).unwrap(), -(m as f64 - 1.0)),
    };

    let f_profile = match rng.pick(3) {
        0 => ProfileFunction::exponential(rng.uniform(0.5, 1.5), rng.uniform(0.1, 0.6)),
        1 => ProfileFunction::reciprocal_affine(1.0, rng.uniform(0.2, 0.8), 3.0).unwrap(),
        _ => ProfileFunction::constant(rng.uniform(0.5, 2.0)),
    };
    let f = ScalarField::from_profile(&f_profile, &dir);
    let lambda = rng.uniform(-4.0, 1.0);

    (WarpedProductSpec::new(base, fiber, f, lambda).unwrap(), mu)
}

#[allow(dead_code)] // not every test target uses the grid helper
pub fn spec_grids(spec: &WarpedProductSpec, count: usize, seed: u64) -> (SampleGrid, SampleGrid) {
    let base = SampleGrid::generate(
        &GridSpec::unit(spec.n()).with_count(count).with_seed(seed),
        spec.base.singular_loci(),
    )
    .unwrap();
    // Keep fiber components O(1): the hyperbolic chart blows up like 1/yₘ²
    // toward its half-space boundary, so sample it away from yₘ = 0.
    let mut fiber_spec = GridSpec::unit(spec.m()).with_count(count).with_seed(seed);
    if !spec.fiber.metric.singular_loci().is_empty() {
        fiber_spec = fiber_spec.with_axis(spec.m() - 1, 0.5, 1.5);
    }
    let fiber = SampleGrid::generate(&fiber_spec, spec.fiber.metric.singular_loci()).unwrap();
    (base, fiber)
}
