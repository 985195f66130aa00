//! Seeded sampling of initial iterates and tangent search directions.
//!
//! [`RngStream`] wraps ChaCha8 with the seed as key and the stream id as the
//! cipher's stream selector. Draw `n` of stream `(seed, stream_id)` is a pure
//! function of `(seed, stream_id, n)`, so every trial reproduces bit-for-bit
//! no matter how trials are scheduled on threads.

use crate::error::{Error, Result};
use crate::linalg::geometry::{project_in_place, TINY};
use crate::linalg::{dot, norm, scale, OperatorPair, UnitBVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MAX_ATTEMPTS: usize = 100;
const NULL_THRESHOLD: f64 = 1e-150;

/// Independent random stream for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.normal();
        }
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_normal(&mut v);
        v
    }
}

/// Unit Euclidean vector in the tangent space of the point it was drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection(Vec<f64>);

impl TangentDirection {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// `ṽ / ‖ṽ‖_B` with `ṽ ~ N(0, I)`.
pub fn sample_initial(pair: &OperatorPair, rng: &mut RngStream) -> Result<UnitBVector> {
    let d = pair.dim();
    for _ in 0..MAX_ATTEMPTS {
        let v = rng.normal_vec(d);
        let bv = pair.apply_b(&v);
        let q = dot(&v, &bv);
        if q.is_finite() && q.max(0.0).sqrt() >= NULL_THRESHOLD {
            return UnitBVector::normalize(pair, v);
        }
    }
    Err(Error::DegenerateSample(MAX_ATTEMPTS))
}

/// Uniform draw from the unit sphere of the tangent space at `v`.
pub fn sample_tangent_direction(pair: &OperatorPair, v: &UnitBVector, rng: &mut RngStream) -> Result<TangentDirection> {
    let bv = pair.apply_b(v.as_slice());
    sample_tangent_with_normal(&bv, rng)
}

/// Same as [`sample_tangent_direction`] with `Bv` already at hand.
pub fn sample_tangent_with_normal(bv: &[f64], rng: &mut RngStream) -> Result<TangentDirection> {
    let d = bv.len();
    if d < 2 {
        return Err(Error::DimensionTooSmall(d, 2));
    }
    let bv_norm = norm(bv);
    if bv_norm < TINY {
        return Err(Error::DegenerateNormal);
    }
    let mut x = vec![0.0; d];
    for _ in 0..MAX_ATTEMPTS {
        rng.fill_normal(&mut x);
        project_in_place(bv, bv_norm, &mut x);
        let n = norm(&x);
        if n >= NULL_THRESHOLD {
            scale(1.0 / n, &mut x);
            debug_assert!((norm(&x) - 1.0).abs() <= 1e-12);
            debug_assert!(dot(&x, bv).abs() <= 1e-10 * bv_norm);
            return Ok(TangentDirection(x));
        }
    }
    Err(Error::DegenerateSample(MAX_ATTEMPTS))
}
