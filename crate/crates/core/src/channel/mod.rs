//! Channel responses on a subcarrier grid.
//!
//! A [`FrequencyResponse`] holds one complex gain per subcarrier. Responses
//! are either synthesized by [`generate_multipath_channel`] or loaded from a
//! trace file, then reduced to per-block RMS magnitudes with
//! [`aggregate_blocks`] before ranking.

mod multipath;
mod trace;

pub use multipath::{generate_multipath_channel, MultipathModel};
pub use trace::{load_channel_trace, read_channel_trace, write_channel_trace};

use crate::{Error, Result, UserId};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Subcarrier grid shared by every user of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceGrid {
    subcarrier_count: usize,
    subcarrier_spacing: f64,
    block_size: usize,
    center_frequency: f64,
}

impl ResourceGrid {
    pub fn new(
        subcarrier_count: usize,
        subcarrier_spacing: f64,
        block_size: usize,
        center_frequency: f64,
    ) -> Result<Self> {
        if subcarrier_count == 0 {
            return Err(Error::InvalidGrid("subcarrier_count must be positive".into()));
        }
        if block_size == 0 {
            return Err(Error::InvalidGrid("block_size must be positive".into()));
        }
        if !subcarrier_count.is_multiple_of(block_size) {
            return Err(Error::InvalidGrid(format!(
                "subcarrier_count {subcarrier_count} is not a multiple of block_size {block_size}"
            )));
        }
        if !(subcarrier_spacing.is_finite() && subcarrier_spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "subcarrier_spacing must be positive and finite, got {subcarrier_spacing}"
            )));
        }
        if !center_frequency.is_finite() {
            return Err(Error::InvalidGrid("center_frequency must be finite".into()));
        }
        Ok(Self {
            subcarrier_count,
            subcarrier_spacing,
            block_size,
            center_frequency,
        })
    }

    /// A grid of `blocks` resource blocks with the default spacing and block size.
    pub fn with_blocks(blocks: usize) -> Result<Self> {
        let d = Self::default();
        Self::new(blocks * d.block_size, d.subcarrier_spacing, d.block_size, d.center_frequency)
    }

    pub fn subcarrier_count(&self) -> usize {
        self.subcarrier_count
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn block_count(&self) -> usize {
        self.subcarrier_count / self.block_size
    }

    /// Total occupied bandwidth in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.subcarrier_count as f64 * self.subcarrier_spacing
    }

    /// Bandwidth of one resource block in Hz.
    pub fn block_bandwidth(&self) -> f64 {
        self.block_size as f64 * self.subcarrier_spacing
    }

    /// Baseband offset of subcarrier `i` relative to the band center.
    pub fn baseband_offset(&self, i: usize) -> f64 {
        (i as f64 - self.subcarrier_count as f64 / 2.0) * self.subcarrier_spacing
    }
}

impl Default for ResourceGrid {
    /// 1500 subcarriers at 60 kHz in blocks of 12 (125 blocks, 90 MHz) at 3.75 GHz.
    fn default() -> Self {
        Self {
            subcarrier_count: 1500,
            subcarrier_spacing: 60e3,
            block_size: 12,
            center_frequency: 3.75e9,
        }
    }
}

/// Complex per-subcarrier gains of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    user_id: UserId,
    gains: Vec<Complex64>,
    grid: ResourceGrid,
}

impl FrequencyResponse {
    pub fn new(user_id: UserId, gains: Vec<Complex64>, grid: ResourceGrid) -> Result<Self> {
        if gains.len() != grid.subcarrier_count() {
            return Err(Error::DimensionMismatch {
                what: "gains vs subcarrier_count",
                expected: grid.subcarrier_count(),
                actual: gains.len(),
            });
        }
        if let Some(index) = gains.iter().position(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::NonFiniteGain { user: user_id, index });
        }
        Ok(Self { user_id, gains, grid })
    }

    pub fn user_id(&self) -> UserId {
        self.user_id
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn grid(&self) -> &ResourceGrid {
        &self.grid
    }

    /// Root-mean-square magnitude over all subcarriers.
    pub fn rms_magnitude(&self) -> f64 {
        let p: f64 = self.gains.iter().map(|g| g.norm_sqr()).sum();
        (p / self.gains.len() as f64).sqrt()
    }

    /// Rescaled to unit mean power across the band.
    pub fn normalized(&self) -> Result<Self> {
        let rms = self.rms_magnitude();
        if rms.is_nan() || rms <= 0.0 {
            return Err(Error::DegenerateBlock {
                user: self.user_id,
                block: 0,
            });
        }
        let gains = self.gains.iter().map(|g| g / rms).collect();
        Self::new(self.user_id, gains, self.grid)
    }
}

/// Per-resource-block channel magnitudes of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResponse {
    user_id: UserId,
    magnitudes: Vec<f64>,
    grid: ResourceGrid,
}

impl BlockResponse {
    /// Rejects zero, negative and non-finite magnitudes.
    pub fn new(user_id: UserId, magnitudes: Vec<f64>, grid: ResourceGrid) -> Result<Self> {
        if magnitudes.len() != grid.block_count() {
            return Err(Error::DimensionMismatch {
                what: "magnitudes vs block_count",
                expected: grid.block_count(),
                actual: magnitudes.len(),
            });
        }
        if let Some(block) = magnitudes.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::DegenerateBlock { user: user_id, block });
        }
        Ok(Self {
            user_id,
            magnitudes,
            grid,
        })
    }

    pub fn user_id(&self) -> UserId {
        self.user_id
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn grid(&self) -> &ResourceGrid {
        &self.grid
    }

    pub fn block_count(&self) -> usize {
        self.magnitudes.len()
    }

    /// The listed blocks, in the given order, on a grid of matching size.
    pub fn subset(&self, blocks: &[usize]) -> Result<Self> {
        let g = self.grid;
        let grid = ResourceGrid::new(
            blocks.len() * g.block_size(),
            g.subcarrier_spacing(),
            g.block_size(),
            g.center_frequency(),
        )?;
        let magnitudes = blocks
            .iter()
            .map(|&b| {
                self.magnitudes.get(b).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("block {b} out of range for {} blocks", self.block_count()))
                })
            })
            .collect::<Result<_>>()?;
        Self::new(self.user_id, magnitudes, grid)
    }

    /// The same magnitudes relabelled with another user id.
    pub fn with_user(&self, user_id: UserId) -> Self {
        Self {
            user_id,
            ..self.clone()
        }
    }
}

/// Noise power of one user, linear watts per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserNoise {
    user_id: UserId,
    noise_power: f64,
}

impl UserNoise {
    pub fn new(user_id: UserId, noise_power: f64) -> Result<Self> {
        if !(noise_power.is_finite() && noise_power > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise power for user {user_id} must be positive, got {noise_power}"
            )));
        }
        Ok(Self {
            user_id,
            noise_power,
        })
    }

    pub fn user_id(&self) -> UserId {
        self.user_id
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
}

/// Per-block (or per-subcarrier) transmit power coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLoading {
    coefficients: Vec<f64>,
}

impl PowerLoading {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument("power loading is empty".into()));
        }
        if let Some(i) = coefficients.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "power loading coefficient {i} must be positive, got {}",
                coefficients[i]
            )));
        }
        Ok(Self { coefficients })
    }

    /// Identical coefficient `value` on each of `len` entries.
    pub fn flat(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.coefficients.iter().map(|p| p * factor).collect())
    }
}

/// Power loading plus per-user noise: everything needed to turn block
/// magnitudes into SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub loading: PowerLoading,
    pub noise: Vec<UserNoise>,
}

impl LinkBudget {
    pub fn new(loading: PowerLoading, noise: Vec<UserNoise>) -> Self {
        Self { loading, noise }
    }

    pub fn noise_for(&self, user: UserId) -> Result<&UserNoise> {
        self.noise
            .iter()
            .find(|n| n.user_id() == user)
            .ok_or(Error::MissingNoise(user))
    }

    /// Linear SNR per block for `block`.
    pub fn snr(&self, block: &BlockResponse) -> Result<Vec<f64>> {
        snr(block, &self.loading, self.noise_for(block.user_id())?)
    }
}

/// Reduce a subcarrier response to per-block RMS magnitudes.
pub fn aggregate_blocks(response: &FrequencyResponse) -> Result<BlockResponse> {
    let grid = *response.grid();
    let size = grid.block_size();
    let magnitudes = response
        .gains()
        .chunks_exact(size)
        .map(|chunk| {
            let power: f64 = chunk.iter().map(|g| g.norm_sqr()).sum();
            (power / size as f64).sqrt()
        })
        .collect();
    BlockResponse::new(response.user_id(), magnitudes, grid)
}

/// Linear SNR per block, `p_i * |h_i|^2 / n_u`.
pub fn snr(block: &BlockResponse, loading: &PowerLoading, noise: &UserNoise) -> Result<Vec<f64>> {
    if loading.len() != block.block_count() {
        return Err(Error::DimensionMismatch {
            what: "power loading vs block_count",
            expected: block.block_count(),
            actual: loading.len(),
        });
    }
    let n = noise.noise_power();
    Ok(block
        .magnitudes()
        .iter()
        .zip(loading.coefficients())
        .map(|(m, p)| p * m * m / n)
        .collect())
}
