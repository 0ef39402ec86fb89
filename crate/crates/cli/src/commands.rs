//! The four subcommands. Each reads an effective [`ScenarioConfig`], writes
//! its data files under `output_dir`, and prints a short summary to `out`.

use crate::config::{ChannelSource, ScenarioConfig, StrategyName};
use crate::error::{CliError, CliResult};
use compadv::alloc::{
    allocate_multi_user, allocate_two_user, rank_by_ratio, ranking_consistency, spectral_efficiency,
    Demand, RankCorrelation, RankingMode, RatioRanking, SpectralEfficiencyVector,
};
use compadv::channel::{
    aggregate_blocks, generate_multipath_channel, load_channel_trace, write_channel_trace, BlockResponse,
    FrequencyResponse, LinkBudget, PowerLoading, ResourceGrid, UserNoise,
};
use compadv::metrics::{
    capacity, equal_capacity_point, improvement_from_throughput, split_allocation, summarize, tradeoff_curve,
    write_curves_csv, CapacityReport, EqualCapacityPoint, Strategy, TradeoffCurve,
};
use compadv::oracle::{difference_greedy, exhaustive_best_sum, optimality_gap, sum_objective, ENUMERATION_LIMIT};
use compadv::{seed, UserId};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Stream tag for the random-curve seed of a channel seed.
const RANDOM_CURVE_STREAM: u64 = 0x7261_6e64;

/// Channels, block magnitudes and link budget for one channel seed.
pub struct Scenario {
    pub grid: ResourceGrid,
    pub responses: Vec<FrequencyResponse>,
    pub blocks: Vec<BlockResponse>,
    pub link: LinkBudget,
}

pub fn build_scenario(cfg: &ScenarioConfig, channel_seed: u64) -> CliResult<Scenario> {
    let grid = cfg.grid();
    let responses = match cfg.channel.source {
        ChannelSource::Synthetic => {
            let model = cfg.model()?;
            (1..=cfg.allocation.users as u32)
                .map(|u| {
                    let r = generate_multipath_channel(&grid, &model, channel_seed, UserId(u))?;
                    if cfg.channel.normalize_power {
                        r.normalized()
                    } else {
                        Ok(r)
                    }
                })
                .collect::<compadv::Result<Vec<_>>>()?
        }
        ChannelSource::Trace => {
            let path = cfg.channel.trace_path.as_ref().expect("validated trace path");
            load_channel_trace(path, &grid)?
        }
    };
    if cfg.link.noise_power.len() > 1 && cfg.link.noise_power.len() != responses.len() {
        return Err(CliError::Validation(format!(
            "link.noise_power: {} values for {} users",
            cfg.link.noise_power.len(),
            responses.len()
        )));
    }
    let blocks = responses
        .iter()
        .map(aggregate_blocks)
        .collect::<compadv::Result<Vec<_>>>()?;
    let noise = responses
        .iter()
        .enumerate()
        .map(|(i, r)| UserNoise::new(r.user_id(), cfg.noise_power(i)))
        .collect::<compadv::Result<Vec<_>>>()?;
    let link = LinkBudget::new(cfg.loading(grid.block_count())?, noise);
    Ok(Scenario {
        grid,
        responses,
        blocks,
        link,
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn header(cfg: &ScenarioConfig) -> String {
    format!("compadv config-digest={}", cfg.digest())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).expect("documents always serialize");
    writeln!(w, "{text}")
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io("<stdout>", e))
}

fn two_users(s: &Scenario, command: &str) -> CliResult<()> {
    if s.blocks.len() != 2 {
        return Err(CliError::Validation(format!(
            "{command} needs exactly 2 users, scenario has {}",
            s.blocks.len()
        )));
    }
    Ok(())
}

/// `gen-channel`: write the synthetic channels as a trace file.
pub fn cmd_gen_channel(cfg: &ScenarioConfig, out: &mut dyn Write) -> CliResult<PathBuf> {
    if cfg.channel.source != ChannelSource::Synthetic {
        return Err(CliError::Validation(
            "gen-channel needs channel.source = \"synthetic\"".into(),
        ));
    }
    let s = build_scenario(cfg, cfg.seed)?;
    let path = cfg.output_dir.join("channel.csv");
    let mut w = create(&path)?;
    write_channel_trace(&mut w, &s.responses, Some(&header(cfg))).map_err(|e| CliError::io(&path, e))?;
    for r in &s.responses {
        say(out, format_args!("user {}: rms magnitude {:.6}", r.user_id(), r.rms_magnitude()))?;
    }
    say(out, format_args!("wrote {}", path.display()))?;
    Ok(path)
}

#[derive(Serialize)]
struct AllocationDoc {
    config_digest: String,
    users: Vec<UserId>,
    mode: RankingMode,
    threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    groups: Option<[Vec<UserId>; 2]>,
    m: usize,
    n: usize,
    flexible: usize,
    owners: Vec<UserId>,
    unmet_demand: BTreeMap<UserId, usize>,
    capacities: CapacityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking_consistency: Option<RankCorrelation>,
}

fn write_ratios(path: &Path, cfg: &ScenarioConfig, ranking: &RatioRanking) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "# {}", header(cfg)).map_err(io)?;
    writeln!(w, "rank,block_index,ratio").map_err(io)?;
    for (rank, (b, r)) in ranking.order.iter().zip(&ranking.ratios).enumerate() {
        writeln!(w, "{},{},{}", rank + 1, b, r).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn efficiencies(s: &Scenario) -> CliResult<Vec<SpectralEfficiencyVector>> {
    s.blocks
        .iter()
        .map(|b| Ok(spectral_efficiency(b.user_id(), &s.link.snr(b)?)?))
        .collect()
}

/// `allocate`: rank, partition and finalize; emit ratio CSV and allocation JSON.
pub fn cmd_allocate(cfg: &ScenarioConfig, out: &mut dyn Write) -> CliResult<()> {
    let s = build_scenario(cfg, cfg.seed)?;
    if s.blocks.len() < 2 {
        return Err(CliError::Validation(format!(
            "allocate needs at least 2 users, scenario has {}",
            s.blocks.len()
        )));
    }
    let threshold = cfg.threshold();

    let (ranking, partition, allocation, groups, consistency) = if s.blocks.len() == 2 {
        let demand = cfg
            .allocation
            .demand
            .map(|[a, b]| Demand::from_fractions(s.grid.block_count(), a, b))
            .transpose()?;
        let two = allocate_two_user(&s.blocks[0], &s.blocks[1], &threshold, demand, Some(&s.link))?;
        let eta = efficiencies(&s)?;
        let tau = ranking_consistency(&eta[0], &eta[1], &s.blocks[0], &s.blocks[1])?;
        (two.ranking, two.partition, two.allocation, None, Some(tau))
    } else {
        if cfg.allocation.demand.is_some() {
            return Err(CliError::Validation(
                "allocation.demand applies to two-user scenarios only".into(),
            ));
        }
        let multi = allocate_multi_user(&s.blocks, &threshold, cfg.allocation.clustering, cfg.seed)?;
        let top = multi
            .top_level
            .ok_or_else(|| CliError::Invariant("multi-user run without a top-level split".into()))?;
        (
            top.ranking,
            top.partition,
            multi.allocation,
            Some([top.group1, top.group2]),
            None,
        )
    };

    let capacities = capacity(&allocation, &s.blocks, &s.link)?;
    write_ratios(&cfg.output_dir.join("ratios.csv"), cfg, &ranking)?;
    let doc = AllocationDoc {
        config_digest: cfg.digest(),
        users: s.blocks.iter().map(|b| b.user_id()).collect(),
        mode: threshold.mode(),
        threshold: threshold.threshold(),
        groups,
        m: partition.m(),
        n: partition.n(),
        flexible: partition.flexible_blocks.len(),
        owners: allocation.owner.clone(),
        unmet_demand: allocation.unmet_demand.clone(),
        capacities: capacities.clone(),
        ranking_consistency: consistency,
    };
    write_json(&cfg.output_dir.join("allocation.json"), &doc)?;

    say(
        out,
        format_args!(
            "partition: m = {}, n = {}, flexible = {} of {} blocks (T' = {})",
            partition.m(),
            partition.n(),
            partition.flexible_blocks.len(),
            ranking.len(),
            threshold.threshold()
        ),
    )?;
    for (u, c) in &capacities.per_user {
        say(
            out,
            format_args!("user {u}: {} blocks, {:.3} Mbit/s", allocation.count_of(*u), c / 1e6),
        )?;
    }
    for (u, short) in &allocation.unmet_demand {
        say(out, format_args!("user {u}: unmet demand {short} blocks"))?;
    }
    say(out, format_args!("total: {:.3} Mbit/s", capacities.total / 1e6))?;
    if let Some(t) = consistency {
        say(out, format_args!("ranking consistency (kendall tau-b): {:.4}", t.tau))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CrossingDoc {
    strategy: &'static str,
    throughput_bps: f64,
    k: f64,
}

#[derive(Serialize)]
struct ImprovementDoc {
    baseline: &'static str,
    improvement_pct: f64,
}

#[derive(Serialize)]
struct CurveDoc {
    config_digest: String,
    seed: u64,
    curves: Vec<TradeoffCurve>,
    equal_capacity: Vec<CrossingDoc>,
    improvements: Vec<ImprovementDoc>,
}

/// One seed's curves and crossings, in requested strategy order.
pub struct SeedCurves {
    pub seed: u64,
    pub curves: Vec<TradeoffCurve>,
    pub crossings: Vec<EqualCapacityPoint>,
}

pub fn curves_for_seed(cfg: &ScenarioConfig, strategies: &[StrategyName], channel_seed: u64) -> CliResult<SeedCurves> {
    let s = build_scenario(cfg, channel_seed)?;
    two_users(&s, "curve")?;
    let mut curves = Vec::new();
    let mut crossings = Vec::new();
    for name in strategies {
        let strategy = match name {
            StrategyName::Ca => Strategy::Ca,
            StrategyName::AntiCa => Strategy::AntiCa,
            StrategyName::Random => Strategy::Random {
                seed: seed::derive(channel_seed, RANDOM_CURVE_STREAM),
                trials: cfg.curve.random_trials,
            },
        };
        let curve = tradeoff_curve(&s.blocks[0], &s.blocks[1], &s.link, strategy)?;
        crossings.push(equal_capacity_point(&curve)?);
        curves.push(curve);
    }
    Ok(SeedCurves {
        seed: channel_seed,
        curves,
        crossings,
    })
}

/// `curve`: tradeoff curves per channel seed plus CA improvement summary.
pub fn cmd_curve(cfg: &ScenarioConfig, strategies: &[StrategyName], out: &mut dyn Write) -> CliResult<()> {
    let seeds: Vec<u64> = match cfg.channel.source {
        ChannelSource::Synthetic => (0..cfg.curve.seed_count).map(|i| cfg.seed.wrapping_add(i)).collect(),
        ChannelSource::Trace => vec![cfg.seed],
    };
    let ca_index = strategies.iter().position(|s| *s == StrategyName::Ca);

    let summary_path = cfg.output_dir.join("improvement.csv");
    let mut summary = create(&summary_path)?;
    let io = |e| CliError::io(&summary_path, e);
    writeln!(summary, "# {}", header(cfg)).map_err(io)?;
    writeln!(summary, "seed,baseline,ca_throughput_bps,baseline_throughput_bps,improvement_pct").map_err(io)?;

    let mut by_baseline: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for channel_seed in seeds {
        let sc = curves_for_seed(cfg, strategies, channel_seed)?;
        let mut improvements = Vec::new();
        if let Some(ci) = ca_index {
            let ca_t = sc.crossings[ci].throughput;
            for (curve, crossing) in sc.curves.iter().zip(&sc.crossings) {
                let label = curve.strategy.label();
                if label == "ca" {
                    continue;
                }
                let pct = improvement_from_throughput(ca_t, crossing.throughput);
                writeln!(summary, "{channel_seed},{label},{ca_t},{},{pct}", crossing.throughput).map_err(io)?;
                by_baseline.entry(label).or_default().push(pct);
                improvements.push(ImprovementDoc {
                    baseline: label,
                    improvement_pct: pct,
                });
            }
        }

        let stem = format!("curve_seed{channel_seed}");
        let csv_path = cfg.output_dir.join(format!("{stem}.csv"));
        let mut w = create(&csv_path)?;
        write_curves_csv(&mut w, &sc.curves, Some(&header(cfg))).map_err(|e| CliError::io(&csv_path, e))?;

        let doc = CurveDoc {
            config_digest: cfg.digest(),
            seed: channel_seed,
            equal_capacity: sc
                .curves
                .iter()
                .zip(&sc.crossings)
                .map(|(c, p)| CrossingDoc {
                    strategy: c.strategy.label(),
                    throughput_bps: p.throughput,
                    k: p.k,
                })
                .collect(),
            improvements,
            curves: sc.curves,
        };
        write_json(&cfg.output_dir.join(format!("{stem}.json")), &doc)?;
    }
    summary.flush().map_err(io)?;

    for (baseline, values) in &by_baseline {
        if let Some(st) = summarize(values) {
            say(
                out,
                format_args!(
                    "ca vs {baseline}: {} seeds, median {:.2}%, mean {:.2}%, min {:.2}%, max {:.2}%",
                    st.count, st.median, st.mean, st.min, st.max
                ),
            )?;
        }
    }
    say(out, format_args!("wrote {}", summary_path.display()))?;
    Ok(())
}

/// Counts from an oracle sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSummary {
    pub instances: usize,
    pub checks: usize,
    pub mismatches: usize,
    pub min_gap: f64,
}

/// `oracle-check`: exhaustive vs difference-greedy equivalence and CA gaps on
/// random down-sampled grids. Fails with an invariant error on any mismatch.
pub fn cmd_oracle_check(cfg: &ScenarioConfig, max_n: usize, out: &mut dyn Write) -> CliResult<OracleSummary> {
    if max_n > ENUMERATION_LIMIT {
        return Err(compadv::Error::GuardRefused {
            blocks: max_n,
            limit: ENUMERATION_LIMIT,
        }
        .into());
    }
    if max_n == 0 {
        return Err(CliError::Validation("max_n must be positive".into()));
    }
    let path = cfg.output_dir.join("oracle_gap.csv");
    let mut w = create(&path)?;
    let io = |e| CliError::io(&path, e);
    writeln!(w, "# {}", header(cfg)).map_err(io)?;
    writeln!(w, "seed,k,ca_sum_bps,oracle_sum_bps,gap").map_err(io)?;

    let bw = cfg.grid().block_bandwidth();
    let mut summary = OracleSummary {
        instances: 0,
        checks: 0,
        mismatches: 0,
        min_gap: f64::INFINITY,
    };

    // Built-in two-block instance where ratio order and difference order
    // disagree; reported under seed 0.
    {
        let eta1 = SpectralEfficiencyVector { user_id: UserId(1), eta: vec![0.2, 101.0] };
        let eta2 = SpectralEfficiencyVector { user_id: UserId(2), eta: vec![0.1, 100.0] };
        let order = rank_by_ratio(&eta1.eta, &eta2.eta)?.order;
        let ca = split_allocation(&order, 1, UserId(1), UserId(2));
        let best = difference_greedy(&eta1, &eta2, 1, bw)?;
        let gap = optimality_gap(&ca, &best, &eta1, &eta2, bw)?;
        let ca_sum = sum_objective(&ca, &eta1, &eta2, bw);
        writeln!(w, "0,1,{ca_sum},{},{gap}", best.objective).map_err(io)?;
    }

    let low = max_n.min(4);
    let base = build_scenario(cfg, cfg.seed)?;
    two_users(&base, "oracle-check")?;
    for i in 0..cfg.oracle.instances {
        let n = low + i % (max_n - low + 1);
        let inst_seed = seed::derive(cfg.seed, i as u64);
        let s = match cfg.channel.source {
            ChannelSource::Synthetic => build_scenario(cfg, inst_seed)?,
            ChannelSource::Trace => build_scenario(cfg, cfg.seed)?,
        };
        let total = s.grid.block_count();
        if n > total {
            return Err(CliError::Validation(format!("max_n {max_n} exceeds the grid's {total} blocks")));
        }
        let mut chosen = index::sample(&mut ChaCha8Rng::seed_from_u64(inst_seed), total, n).into_vec();
        chosen.sort_unstable();

        let b1 = s.blocks[0].subset(&chosen)?;
        let b2 = s.blocks[1].subset(&chosen)?;
        let loading = PowerLoading::new(chosen.iter().map(|&b| s.link.loading.coefficients()[b]).collect())?;
        let link = LinkBudget::new(loading, s.link.noise.clone());
        let eta1 = spectral_efficiency(b1.user_id(), &link.snr(&b1)?)?;
        let eta2 = spectral_efficiency(b2.user_id(), &link.snr(&b2)?)?;
        let order = rank_by_ratio(b1.magnitudes(), b2.magnitudes())?.order;

        for k in 0..=n {
            let exhaustive = exhaustive_best_sum(&eta1, &eta2, k, bw)?;
            let greedy = difference_greedy(&eta1, &eta2, k, bw)?;
            summary.checks += 1;
            if exhaustive.objective != greedy.objective {
                summary.mismatches += 1;
            }
            let ca = split_allocation(&order, k, b1.user_id(), b2.user_id());
            let gap = optimality_gap(&ca, &greedy, &eta1, &eta2, bw)?;
            summary.min_gap = summary.min_gap.min(gap);
            let ca_sum = sum_objective(&ca, &eta1, &eta2, bw);
            writeln!(w, "{inst_seed},{k},{ca_sum},{},{gap}", greedy.objective).map_err(io)?;
        }
        summary.instances += 1;
    }
    w.flush().map_err(io)?;

    say(
        out,
        format_args!(
            "{} instances (N <= {max_n}), {} equivalence checks, {} mismatches, minimum CA gap {:.6}",
            summary.instances, summary.checks, summary.mismatches, summary.min_gap
        ),
    )?;
    say(out, format_args!("wrote {}", path.display()))?;
    if summary.mismatches > 0 {
        return Err(CliError::Invariant(format!(
            "{} of {} exhaustive/greedy checks disagree",
            summary.mismatches, summary.checks
        )));
    }
    Ok(summary)
}
