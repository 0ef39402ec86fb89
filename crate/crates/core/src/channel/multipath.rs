use super::{FrequencyResponse, ResourceGrid};
use crate::{seed, Error, Result, UserId};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tapped-delay-line channel with an exponential power-delay profile.
///
/// Taps sit at evenly spaced delays `l * max_delay / (tap_count - 1)` (a single
/// tap sits at zero delay). Tap `l` carries mean power proportional to
/// `exp(-delay_l / delay_spread)`, normalized so the profile sums to one. With
/// `rician_k > 0` a fraction `K / (K + 1)` of the power moves into a fixed,
/// zero-phase line-of-sight component on the zero-delay tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathModel {
    pub tap_count: usize,
    pub delay_spread: f64,
    pub max_delay: f64,
    pub rician_k: f64,
}

impl MultipathModel {
    pub fn new(tap_count: usize, delay_spread: f64, max_delay: f64, rician_k: f64) -> Result<Self> {
        let m = Self {
            tap_count,
            delay_spread,
            max_delay,
            rician_k,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_count == 0 {
            return Err(Error::InvalidModel("tap_count must be positive".into()));
        }
        if !(self.delay_spread.is_finite() && self.delay_spread > 0.0) {
            return Err(Error::InvalidModel(format!(
                "delay_spread must be positive, got {}",
                self.delay_spread
            )));
        }
        if !(self.max_delay.is_finite() && self.max_delay >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "max_delay must be >= 0, got {}",
                self.max_delay
            )));
        }
        if self.rician_k.is_nan() || self.rician_k < 0.0 {
            return Err(Error::InvalidModel(format!(
                "rician_k must be >= 0, got {}",
                self.rician_k
            )));
        }
        Ok(())
    }

    pub fn tap_delays(&self) -> Vec<f64> {
        if self.tap_count == 1 {
            return vec![0.0];
        }
        let step = self.max_delay / (self.tap_count - 1) as f64;
        (0..self.tap_count).map(|l| l as f64 * step).collect()
    }

    /// Normalized mean tap powers (sum to one).
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = self
            .tap_delays()
            .iter()
            .map(|t| (-t / self.delay_spread).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Split of total power into (line-of-sight, scattered).
    fn power_split(&self) -> (f64, f64) {
        if self.rician_k.is_infinite() {
            (1.0, 0.0)
        } else {
            let k = self.rician_k;
            (k / (k + 1.0), 1.0 / (k + 1.0))
        }
    }
}

impl Default for MultipathModel {
    fn default() -> Self {
        Self {
            tap_count: 6,
            delay_spread: 100e-9,
            max_delay: 500e-9,
            rician_k: 3.0,
        }
    }
}

/// Synthesize a frequency-selective response for `user_id`.
///
/// `H(f_i) = sum_l a_l * exp(-j 2 pi f_i tau_l)` with `f_i` the baseband
/// offset of subcarrier `i`. The tap draws depend only on `(seed, user_id,
/// model)`.
pub fn generate_multipath_channel(
    grid: &ResourceGrid,
    model: &MultipathModel,
    seed: u64,
    user_id: UserId,
) -> Result<FrequencyResponse> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, u64::from(user_id.0)));
    let (los_power, scatter_power) = model.power_split();
    let delays = model.tap_delays();

    let taps: Vec<Complex64> = model
        .tap_powers()
        .iter()
        .enumerate()
        .map(|(l, p)| {
            let sigma = (p * scatter_power / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let mut tap = Complex64::new(re * sigma, im * sigma);
            if l == 0 {
                tap += Complex64::new(los_power.sqrt(), 0.0);
            }
            tap
        })
        .collect();

    let gains = (0..grid.subcarrier_count())
        .map(|i| {
            let f = grid.baseband_offset(i);
            taps.iter()
                .zip(&delays)
                .map(|(a, tau)| a * Complex64::from_polar(1.0, -2.0 * PI * f * tau))
                .sum()
        })
        .collect();

    FrequencyResponse::new(user_id, gains, *grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_models() {
        assert!(MultipathModel::new(0, 1e-7, 1e-7, 0.0).is_err());
        assert!(MultipathModel::new(3, 0.0, 1e-7, 0.0).is_err());
        assert!(MultipathModel::new(3, -1.0, 1e-7, 0.0).is_err());
        assert!(MultipathModel::new(3, 1e-7, -1e-9, 0.0).is_err());
        assert!(MultipathModel::new(3, 1e-7, 1e-7, -0.5).is_err());
        let bad = MultipathModel {
            tap_count: 0,
            ..MultipathModel::default()
        };
        let err = generate_multipath_channel(&ResourceGrid::default(), &bad, 1, UserId(0));
        assert!(matches!(err, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn profile_is_normalized_and_decaying() {
        let m = MultipathModel::new(5, 100e-9, 400e-9, 0.0).unwrap();
        let p = m.tap_powers();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        let d = m.tap_delays();
        assert_eq!(d[0], 0.0);
        assert!((d[4] - 400e-9).abs() < 1e-20);
    }

    #[test]
    fn single_los_tap_is_flat() {
        let grid = ResourceGrid::default();
        let m = MultipathModel::new(1, 100e-9, 100e-9, f64::INFINITY).unwrap();
        let r = generate_multipath_channel(&grid, &m, 42, UserId(1)).unwrap();
        let first = r.gains()[0].norm();
        assert!(r.gains().iter().all(|g| g.norm() == first));
        assert_eq!(first, 1.0);
    }

    #[test]
    fn single_rayleigh_tap_is_flat() {
        let grid = ResourceGrid::default();
        let m = MultipathModel::new(1, 100e-9, 100e-9, 0.0).unwrap();
        let r = generate_multipath_channel(&grid, &m, 9, UserId(2)).unwrap();
        let first = r.gains()[0].norm();
        assert!(r.gains().iter().all(|g| (g.norm() - first).abs() <= 1e-15 * first));
    }

    #[test]
    fn deterministic_per_seed_and_user() {
        let grid = ResourceGrid::default();
        let m = MultipathModel::default();
        let a = generate_multipath_channel(&grid, &m, 7, UserId(1)).unwrap();
        let b = generate_multipath_channel(&grid, &m, 7, UserId(1)).unwrap();
        assert_eq!(a.gains(), b.gains());
        let c = generate_multipath_channel(&grid, &m, 7, UserId(2)).unwrap();
        assert_ne!(a.gains(), c.gains());
        let d = generate_multipath_channel(&grid, &m, 8, UserId(1)).unwrap();
        assert_ne!(a.gains(), d.gains());
    }
}
