#![allow(dead_code)]

use compadv::channel::{
    aggregate_blocks, generate_multipath_channel, BlockResponse, LinkBudget, MultipathModel, PowerLoading,
    ResourceGrid, UserNoise,
};
use compadv::UserId;

/// Noise power giving a mean SNR of `snr_db` on unit-power channels.
pub fn noise_for_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Normalized synthetic block responses for users `1..=users` on `grid`.
pub fn synthetic_blocks(grid: &ResourceGrid, seed: u64, users: u32) -> Vec<BlockResponse> {
    let model = MultipathModel::default();
    (1..=users)
        .map(|u| {
            let h = generate_multipath_channel(grid, &model, seed, UserId(u))
                .unwrap()
                .normalized()
                .unwrap();
            aggregate_blocks(&h).unwrap()
        })
        .collect()
}

/// Two-user pair on the default 125-block grid with a flat link at `snr_db`.
pub fn default_pair(seed: u64, snr_db: f64) -> (BlockResponse, BlockResponse, LinkBudget) {
    let grid = ResourceGrid::default();
    let mut blocks = synthetic_blocks(&grid, seed, 2);
    let b2 = blocks.pop().unwrap();
    let b1 = blocks.pop().unwrap();
    let link = flat_link(grid.block_count(), &[b1.user_id(), b2.user_id()], snr_db);
    (b1, b2, link)
}

pub fn flat_link(blocks: usize, users: &[UserId], snr_db: f64) -> LinkBudget {
    let noise = users
        .iter()
        .map(|&u| UserNoise::new(u, noise_for_db(snr_db)).unwrap())
        .collect();
    LinkBudget::new(PowerLoading::flat(blocks, 1.0).unwrap(), noise)
}

/// Block response from raw magnitudes on a grid sized to fit.
pub fn blocks_from(user: u32, magnitudes: Vec<f64>) -> BlockResponse {
    let grid = ResourceGrid::with_blocks(magnitudes.len()).unwrap();
    BlockResponse::new(UserId(user), magnitudes, grid).unwrap()
}
