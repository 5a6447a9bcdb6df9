//! Seeded stochastic error generation.
//!
//! Every random quantity in a scenario flows from a named stream derived from
//! the master seed, so a (config, seed) pair reproduces byte-identical output
//! regardless of scheduling. Satellite pseudorange errors use a first-order
//! Gauss-Markov process; HAPS errors are white Gaussian; HAPS availability is
//! gated by an elevation-dependent line-of-sight probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The deterministic generator behind every stream.
pub type RngStream = ChaCha8Rng;

#[derive(Debug, Error, PartialEq)]
pub enum ErrorModelError {
    #[error("correlation time must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("line-of-sight table is empty")]
    EmptyLosTable,
    #[error("line-of-sight table invalid: {0}")]
    InvalidLosTable(String),
}

/// Propagation environment along the receiver trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Suburban,
    DenseUrban,
}

// --- stream derivation -------------------------------------------------------

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for the sub-stream named (domain, id, sub) under a master seed.
pub fn stream_seed(master: u64, domain: &str, id: u64, sub: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in domain.as_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x100000001b3);
    }
    let mut state = master;
    let mut out = splitmix64(&mut state) ^ h;
    state ^= out ^ id;
    out = splitmix64(&mut state);
    state ^= out ^ sub;
    splitmix64(&mut state)
}

/// A fresh generator for the named sub-stream.
pub fn stream(master: u64, domain: &str, id: u64, sub: u64) -> RngStream {
    RngStream::seed_from_u64(stream_seed(master, domain, id, sub))
}

// --- sampling ----------------------------------------------------------------

/// One standard normal draw (Box-Muller). Hand-rolled so the byte stream of a
/// seeded scenario does not depend on a distribution crate's internals.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // u1 in (0, 1], u2 in [0, 1).
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One draw from N(0, sigma^2).
pub fn gaussian_error<R: Rng>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    sigma * standard_normal(rng)
}

// --- first-order Gauss-Markov --------------------------------------------------

/// First-order Gauss-Markov process with stationary standard deviation
/// `sigma` and correlation time `tau`, stepped by exact discretization:
///
/// ```text
/// x' = x e^(-dt/tau) + w,   w ~ N(0, sigma^2 (1 - e^(-2 dt/tau)))
/// ```
///
/// which reproduces the autocorrelation sigma^2 e^(-|dt|/tau) at every step
/// size, unlike an Euler update.
#[derive(Debug, Clone)]
pub struct GaussMarkov {
    value: f64,
    sigma: f64,
    tau: f64,
    rng: RngStream,
}

impl GaussMarkov {
    /// Start a process from its stationary distribution N(0, sigma^2).
    pub fn init(sigma: f64, tau: f64, mut rng: RngStream) -> Result<Self, ErrorModelError> {
        if tau <= 0.0 {
            return Err(ErrorModelError::NonPositiveTau(tau));
        }
        if sigma < 0.0 {
            return Err(ErrorModelError::NegativeSigma(sigma));
        }
        let value = gaussian_error(sigma, &mut rng);
        Ok(Self { value, sigma, tau, rng })
    }

    pub fn from_seed(sigma: f64, tau: f64, seed: u64) -> Result<Self, ErrorModelError> {
        Self::init(sigma, tau, RngStream::seed_from_u64(seed))
    }

    /// Current sample without advancing.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Advance the process by `dt` seconds and return the new sample.
    pub fn step(&mut self, dt: f64) -> f64 {
        assert!(dt > 0.0, "Gauss-Markov step interval must be positive");
        let decay = (-dt / self.tau).exp();
        let noise_sigma = self.sigma * (1.0 - decay * decay).sqrt();
        self.value = self.value * decay + gaussian_error(noise_sigma, &mut self.rng);
        self.value
    }
}

// --- line-of-sight gating ------------------------------------------------------

/// Elevation-dependent LOS probability for one environment, linearly
/// interpolated between breakpoints and clamped at the endpoints.
///
/// The shipped defaults are illustrative placeholders, not measurements; real
/// studies should supply their own table in the scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct LosProbabilityTable {
    pub environment: Environment,
    breakpoints: Vec<(f64, f64)>,
}

impl LosProbabilityTable {
    /// `breakpoints` are (elevation degrees, probability) pairs with strictly
    /// increasing elevations and probabilities non-decreasing in [0, 1].
    pub fn new(
        environment: Environment,
        breakpoints: Vec<(f64, f64)>,
    ) -> Result<Self, ErrorModelError> {
        if breakpoints.is_empty() {
            return Err(ErrorModelError::EmptyLosTable);
        }
        for window in breakpoints.windows(2) {
            if window[1].0 <= window[0].0 {
                return Err(ErrorModelError::InvalidLosTable(
                    "elevations must be strictly increasing".into(),
                ));
            }
            if window[1].1 < window[0].1 {
                return Err(ErrorModelError::InvalidLosTable(
                    "probabilities must be non-decreasing in elevation".into(),
                ));
            }
        }
        if breakpoints.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
            return Err(ErrorModelError::InvalidLosTable("probabilities outside [0, 1]".into()));
        }
        Ok(Self { environment, breakpoints })
    }

    pub fn illustrative_suburban() -> Self {
        Self::new(Environment::Suburban, vec![(15.0, 0.8), (90.0, 1.0)]).unwrap()
    }

    pub fn illustrative_dense_urban() -> Self {
        Self::new(Environment::DenseUrban, vec![(15.0, 0.35), (90.0, 1.0)]).unwrap()
    }

    /// LOS probability at an elevation (radians), clamped at the table ends.
    pub fn probability(&self, elevation: f64) -> f64 {
        let el_deg = elevation.to_degrees();
        let first = self.breakpoints[0];
        let last = self.breakpoints[self.breakpoints.len() - 1];
        if el_deg <= first.0 {
            return first.1;
        }
        if el_deg >= last.0 {
            return last.1;
        }
        for window in self.breakpoints.windows(2) {
            let (e0, p0) = window[0];
            let (e1, p1) = window[1];
            if el_deg <= e1 {
                return p0 + (p1 - p0) * (el_deg - e0) / (e1 - e0);
            }
        }
        last.1
    }
}

/// Bernoulli draw: `true` means the HAPS measurement is available this epoch.
pub fn los_gate<R: Rng>(table: &LosProbabilityTable, elevation: f64, rng: &mut R) -> bool {
    let p = table.probability(elevation);
    rng.gen::<f64>() < p
}
