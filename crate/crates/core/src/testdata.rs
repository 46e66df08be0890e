//! Planted instances with well-separated differential angles.

use rand::Rng;

use crate::channel::{differential_cosines, sample_channel, ChannelError, ChannelRealization, SystemConfig};

/// Distance between two cosines on the circle of circumference 2.
pub fn wrapped_cos_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0);
    d.min(2.0 - d)
}

/// Smallest pairwise wrapped distance between differential cosines (`∞` for one path).
pub fn min_separation(cosines: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..cosines.len() {
        for j in i + 1..cosines.len() {
            m = m.min(wrapped_cos_distance(cosines[i], cosines[j]));
        }
    }
    m
}

/// Default separation `4/N_R`.
pub fn default_separation(n_r: usize) -> f64 {
    4.0 / n_r as f64
}

/// Draws channels until every pair of differential cosines is more than
/// `min_sep` apart on the wrapped circle.
pub fn sample_separated_channel(
    config: &SystemConfig,
    min_sep: f64,
    rng: &mut impl Rng,
    max_attempts: usize,
) -> Result<ChannelRealization, ChannelError> {
    for _ in 0..max_attempts {
        let r = sample_channel(config, rng);
        if min_separation(&differential_cosines(&r)) > min_sep {
            return Ok(r);
        }
    }
    Err(ChannelError::InvalidConfig(format!(
        "no channel with separation above {min_sep} in {max_attempts} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrapped_distance_examples() {
        assert!((wrapped_cos_distance(0.9, -0.9) - 0.2).abs() < 1e-12);
        assert!((wrapped_cos_distance(0.1, -0.3) - 0.4).abs() < 1e-12);
        assert_eq!(wrapped_cos_distance(0.5, 0.5), 0.0);
        assert!((wrapped_cos_distance(1.0, -1.0)).abs() < 1e-12);
    }

    #[test]
    fn min_separation_of_single_path_is_infinite() {
        assert_eq!(min_separation(&[0.2]), f64::INFINITY);
        assert!((min_separation(&[0.2, -0.5, 0.9]) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn sampled_channels_are_separated() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let r = sample_separated_channel(&cfg, default_separation(cfg.n_r), &mut rng, 10_000).unwrap();
            assert!(min_separation(&differential_cosines(&r)) > 0.25);
        }
    }

    #[test]
    fn impossible_separation_errors() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        assert!(sample_separated_channel(&cfg, 0.6, &mut rng, 50).is_err());
    }
}
