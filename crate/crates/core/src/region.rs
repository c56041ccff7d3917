//! Base-chart domains and seeded sampling.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Name of the pseudo-random generator recorded in reports.
pub const GENERATOR: &str = "ChaCha8Rng";

pub const DEFAULT_SEED: u64 = 42;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A subset of a base chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Closed coordinate box, optionally punctured by a closed ball of
    /// radius `exclude_radius` around the origin.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        exclude_radius: f64,
    },
    /// Planar sector `radius[0] ≤ r ≤ radius[1]`, `angle[0] < φ < angle[1]`
    /// (angles in radians, taken modulo 2π).
    Sector { radius: [f64; 2], angle: [f64; 2] },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Sector { .. } => 2,
        }
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        if q.len() != self.dim() || q.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            Region::Box {
                lo,
                hi,
                exclude_radius,
            } => {
                let inside = q.iter().zip(lo).zip(hi).all(|((x, a), b)| a <= x && x <= b);
                inside && (*exclude_radius <= 0.0 || q.iter().map(|x| x * x).sum::<f64>().sqrt() > *exclude_radius)
            }
            Region::Sector { radius, angle } => {
                let r = q[0].hypot(q[1]);
                if r < radius[0] || r > radius[1] || r == 0.0 {
                    return false;
                }
                angle_in(q[1].atan2(q[0]), angle[0], angle[1])
            }
        }
    }

    /// Uniform rejection sample (uniform in `(r, φ)` for sectors).
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Region::Box { lo, hi, .. } => loop {
                let q: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.random_range(*a..=*b)).collect();
                if self.contains(&q) {
                    return q;
                }
            },
            Region::Sector { radius, angle } => loop {
                let r = rng.random_range(radius[0]..=radius[1]);
                let phi = rng.random_range(angle[0]..angle[1]);
                let q = vec![r * phi.cos(), r * phi.sin()];
                if self.contains(&q) {
                    return q;
                }
            },
        }
    }

    pub fn sample_many(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// Whether `phi` lies in `(lo, hi)` modulo 2π.
pub fn angle_in(phi: f64, lo: f64, hi: f64) -> bool {
    let shifted = lo + (phi - lo).rem_euclid(2.0 * PI);
    shifted > lo && shifted < hi
}

/// A phase point: base point from `region`, momenta from [`sample_momenta`].
pub fn sample_phase_point(region: &Region, momenta: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut z = region.sample(rng);
    z.extend(sample_momenta(momenta, radius, rng));
    z
}

/// A momentum vector uniform in the ball of radius `radius`.
pub fn sample_momenta(momenta: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..momenta).map(|_| rng.random_range(-radius..=radius)).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            return p;
        }
    }
}
