use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvaluationError;

/// Ground-truth distribution for the Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal { mean: f64, stddev: f64 },
    Uniform { min: f64, max: f64 },
    Triangular { min: f64, mode: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Normal,
    Uniform,
    Triangular,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 3] = [
        DistributionKind::Normal,
        DistributionKind::Uniform,
        DistributionKind::Triangular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Normal => "normal",
            DistributionKind::Uniform => "uniform",
            DistributionKind::Triangular => "triangular",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DistributionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DistributionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown distribution `{s}`"))
    }
}

impl DistributionSpec {
    pub fn kind(&self) -> DistributionKind {
        match self {
            DistributionSpec::Normal { .. } => DistributionKind::Normal,
            DistributionSpec::Uniform { .. } => DistributionKind::Uniform,
            DistributionSpec::Triangular { .. } => DistributionKind::Triangular,
        }
    }

    pub fn validate(&self) -> Result<(), EvaluationError> {
        let ok = match *self {
            DistributionSpec::Normal { mean, stddev } => mean.is_finite() && stddev.is_finite() && stddev >= 0.0,
            DistributionSpec::Uniform { min, max } => min.is_finite() && max.is_finite() && min <= max,
            DistributionSpec::Triangular { min, mode, max } => {
                min.is_finite() && max.is_finite() && min <= mode && mode <= max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(EvaluationError::InvalidDistribution(*self))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, .. } => mean,
            DistributionSpec::Uniform { min, max } => (min + max) / 2.0,
            DistributionSpec::Triangular { min, mode, max } => (min + mode + max) / 3.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { stddev, .. } => stddev * stddev,
            DistributionSpec::Uniform { min, max } => (max - min).powi(2) / 12.0,
            DistributionSpec::Triangular {
                min: a,
                mode: c,
                max: b,
            } => (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0,
        }
    }

    pub fn median(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, .. } => mean,
            DistributionSpec::Uniform { min, max } => (min + max) / 2.0,
            DistributionSpec::Triangular {
                min: a,
                mode: c,
                max: b,
            } => {
                if b == a {
                    a
                } else if c >= (a + b) / 2.0 {
                    a + ((b - a) * (c - a) / 2.0).sqrt()
                } else {
                    b - ((b - a) * (b - c) / 2.0).sqrt()
                }
            }
        }
    }

    /// Triangular variate for a uniform `u` in `[0, 1)` by CDF inversion.
    pub fn triangular_quantile(min: f64, mode: f64, max: f64, u: f64) -> f64 {
        let span = max - min;
        if span == 0.0 {
            return min;
        }
        let split = (mode - min) / span;
        if u < split {
            min + (u * span * (mode - min)).sqrt()
        } else {
            max - ((1.0 - u) * span * (max - mode)).sqrt()
        }
    }
}

/// Draws one variate. Normal uses Box-Muller on two uniforms; triangular
/// inverts the CDF; both consume a fixed number of uniforms per draw.
pub fn sample<R: Rng + ?Sized>(dist: &DistributionSpec, rng: &mut R) -> f64 {
    match *dist {
        DistributionSpec::Normal { mean, stddev } => {
            // 1 - u lies in (0, 1], keeping ln finite.
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random::<f64>();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
            mean + stddev * z
        }
        DistributionSpec::Uniform { min, max } => {
            let u: f64 = rng.random();
            min + (max - min) * u
        }
        DistributionSpec::Triangular { min, mode, max } => {
            let u: f64 = rng.random();
            DistributionSpec::triangular_quantile(min, mode, max, u)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(
                sample(
                    &DistributionSpec::Triangular {
                        min: 4.0,
                        mode: 4.0,
                        max: 4.0
                    },
                    &mut rng
                ),
                4.0
            );
            assert_eq!(
                sample(
                    &DistributionSpec::Normal {
                        mean: 22.0,
                        stddev: 0.0
                    },
                    &mut rng
                ),
                22.0
            );
            assert_eq!(
                sample(&DistributionSpec::Uniform { min: -1.5, max: -1.5 }, &mut rng),
                -1.5
            );
        }
    }

    #[test]
    fn triangular_quantile_endpoints() {
        assert_eq!(DistributionSpec::triangular_quantile(19.0, 24.0, 25.0, 0.0), 19.0);
        let at_mode = DistributionSpec::triangular_quantile(19.0, 24.0, 25.0, 5.0 / 6.0);
        assert!((at_mode - 24.0).abs() < 1e-12);
        assert!((DistributionSpec::triangular_quantile(19.0, 24.0, 25.0, 1.0) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(DistributionSpec::Normal {
            mean: 0.0,
            stddev: -1.0
        }
        .validate()
        .is_err());
        assert!(DistributionSpec::Uniform { min: 2.0, max: 1.0 }.validate().is_err());
        assert!(DistributionSpec::Triangular {
            min: 0.0,
            mode: 3.0,
            max: 2.0
        }
        .validate()
        .is_err());
        assert!(DistributionSpec::Triangular {
            min: 19.0,
            mode: 24.0,
            max: 25.0
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn sampling_reproducible() {
        let d = DistributionSpec::Normal {
            mean: 24.0,
            stddev: 1.0,
        };
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..10).map(|_| sample(&d, &mut rng)).collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..10).map(|_| sample(&d, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }
}
