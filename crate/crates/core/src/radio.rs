//! Network geometry, channel model, sub-channel allocation and latencies.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::RadioError;
use crate::model::{EdgeServer, ExecutionMode, InterferenceModel, Placement, SystemConfig, Task, UserEquipment};
use crate::rng::{stream_rng, STREAM_CHANNEL, STREAM_PLACEMENT, STREAM_SUBCHANNEL};

/// Placed entities and their channel state. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub ue_positions: Vec<[f64; 2]>,
    pub es_positions: Vec<[f64; 2]>,
    /// `|h_kj|^2`, indexed `[ue][es]`.
    pub channel_gain: Vec<Vec<f64>>,
    /// Sub-channels held by each UE.
    pub subchannels: Vec<u32>,
    /// UE ids inside each ES's coverage disk.
    pub coverage: Vec<Vec<usize>>,
}

impl Topology {
    pub fn num_ue(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn num_es(&self) -> usize {
        self.es_positions.len()
    }

    pub fn distance(&self, ue: usize, es: usize) -> f64 {
        dist(self.ue_positions[ue], self.es_positions[es])
    }

    /// Whether `ue` lies inside the coverage disk of `es`.
    pub fn covers(&self, es: usize, ue: usize) -> bool {
        self.coverage[es].binary_search(&ue).is_ok()
    }

    /// Nearest ES whose disk contains `ue`.
    pub fn serving_es(&self, ue: usize) -> Option<usize> {
        (0..self.num_es())
            .filter(|&j| self.covers(j, ue))
            .min_by(|&a, &b| self.distance(ue, a).total_cmp(&self.distance(ue, b)))
    }
}

/// Per-task latency components, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub tx_time: f64,
    pub remote_proc: f64,
    pub local_proc: f64,
    pub offload_total: f64,
    pub local_total: f64,
    pub total: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

fn uniform_points<R: Rng>(n: usize, side: f64, rng: &mut R) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
        .collect()
}

/// Places UEs and ESs in the square region, draws channel gains and
/// sub-channel counts. A pure function of `(cfg, seed)`.
pub fn place_entities(cfg: &SystemConfig, seed: u64) -> Result<Topology, RadioError> {
    let area = cfg.region_area();
    if !(area > 0.0) {
        return Err(RadioError::ZeroArea);
    }
    let mut rng = stream_rng(seed, STREAM_PLACEMENT);
    let (n_ue, n_es) = match cfg.placement {
        Placement::Ppp => {
            let n_ue = poisson_count(cfg.ue_intensity * area, &mut rng).min(cfg.num_ue);
            let n_es = poisson_count(cfg.es_intensity * area, &mut rng).max(1);
            (n_ue, n_es)
        }
        Placement::Fixed => (cfg.num_ue, cfg.num_es),
    };
    let ue_positions = uniform_points(n_ue, cfg.region_side, &mut rng);
    let es_positions = uniform_points(n_es, cfg.region_side, &mut rng);

    let coverage = es_positions
        .iter()
        .map(|&es| {
            (0..n_ue)
                .filter(|&k| dist(ue_positions[k], es) <= cfg.coverage_radius)
                .collect()
        })
        .collect();

    let mut fade = stream_rng(seed, STREAM_CHANNEL);
    let channel_gain = ue_positions
        .iter()
        .map(|&ue| {
            es_positions
                .iter()
                .map(|&es| {
                    let pathloss = dist(ue, es).max(1.0).powf(-cfg.pathloss_exponent);
                    let h: f64 = Exp1.sample(&mut fade);
                    (pathloss * h).max(f64::MIN_POSITIVE)
                })
                .collect()
        })
        .collect();

    let mut topology = Topology {
        ue_positions,
        es_positions,
        channel_gain,
        subchannels: Vec::new(),
        coverage,
    };
    topology.subchannels = draw_subchannels(&topology, cfg, seed);
    Ok(topology)
}

/// Probability that exactly `n` sub-channels are granted in an interval of
/// length `t` under a Poisson process of rate `lambda_sc`.
pub fn subchannel_pmf(n: u32, lambda_sc: f64, t: f64) -> f64 {
    let x = lambda_sc * t;
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (2..=n).map(|k| f64::from(k).ln()).sum();
    (-x + f64::from(n) * x.ln() - ln_fact).exp()
}

/// Sub-channel grant rate for an ES serving `n_ue_covered` UEs.
pub fn subchannel_rate(cfg: &SystemConfig, n_ue_covered: usize) -> Result<f64, RadioError> {
    if n_ue_covered == 0 {
        return Err(RadioError::EmptyCoverage(0));
    }
    Ok(f64::from(cfg.num_subchannels) / n_ue_covered as f64 * cfg.mean_subchannel_request)
}

/// One unclamped Poisson draw of a sub-channel count.
pub fn draw_subchannel_count<R: Rng>(lambda_sc: f64, t: f64, rng: &mut R) -> u32 {
    poisson_count(lambda_sc * t, rng) as u32
}

/// Sub-channels per UE: a Poisson draw at the serving ES's rate, clamped to
/// `[subchannel_min, subchannel_max]`. Uncovered UEs get the minimum.
pub fn draw_subchannels(topology: &Topology, cfg: &SystemConfig, seed: u64) -> Vec<u32> {
    let mut rng = stream_rng(seed, STREAM_SUBCHANNEL);
    (0..topology.num_ue())
        .map(|ue| {
            let raw = topology
                .serving_es(ue)
                .and_then(|j| subchannel_rate(cfg, topology.coverage[j].len()).ok())
                .map(|rate| draw_subchannel_count(rate, cfg.subchannel_epoch, &mut rng))
                .unwrap_or(cfg.subchannel_min);
            raw.clamp(cfg.subchannel_min, cfg.subchannel_max)
        })
        .collect()
}

/// Signal-to-interference-plus-noise ratio of `ue` at `es`. Only UEs flagged
/// in `transmitting` (other than `ue`) interfere.
pub fn sinr(ue: usize, es: usize, topology: &Topology, cfg: &SystemConfig, transmitting: &[bool]) -> f64 {
    let power = cfg.tx_power();
    let signal = power * topology.channel_gain[ue][es];
    let interference: f64 = (0..topology.num_ue())
        .filter(|&k| k != ue && transmitting.get(k).copied().unwrap_or(false))
        .map(|k| {
            let share = match cfg.interference {
                InterferenceModel::Full => 1.0,
                InterferenceModel::CoChannel => {
                    f64::from(topology.subchannels[k]) / f64::from(cfg.num_subchannels)
                }
            };
            share * power * topology.channel_gain[k][es]
        })
        .sum();
    signal / (interference + cfg.noise_variance)
}

/// Shannon rate over the UE's share of the band, `n_sc * W / N_sc`.
pub fn shannon_rate(subchannels: u32, cfg: &SystemConfig, sinr: f64) -> f64 {
    f64::from(subchannels) * cfg.subchannel_bandwidth() * (1.0 + sinr).log2()
}

/// Achievable rate in bits/s from `ue` to `es`.
pub fn transmission_rate(ue: usize, es: usize, topology: &Topology, cfg: &SystemConfig, transmitting: &[bool]) -> f64 {
    shannon_rate(topology.subchannels[ue], cfg, sinr(ue, es, topology, cfg, transmitting))
}

/// Rate weighted by the probability that the UE offloads at all.
pub fn expected_rate(
    ue: &UserEquipment,
    es: usize,
    topology: &Topology,
    cfg: &SystemConfig,
    transmitting: &[bool],
) -> f64 {
    ue.offload_prob * transmission_rate(ue.id, es, topology, cfg, transmitting)
}

/// Up- plus down-link time for the offloaded share.
pub fn transmission_time(split: f64, len: f64, rate: f64) -> Result<f64, RadioError> {
    if split == 0.0 {
        return Ok(0.0);
    }
    if !(rate > 0.0) {
        return Err(RadioError::UnreachableServer);
    }
    Ok(2.0 * split * len / rate)
}

/// Processing time of the offloaded share on `allocated_units` cores of `es`.
pub fn remote_processing_time(split: f64, task: &Task, allocated_units: u32, es: &EdgeServer) -> Result<f64, RadioError> {
    if split == 0.0 {
        return Ok(0.0);
    }
    if allocated_units == 0 {
        return Err(RadioError::NoAllocation);
    }
    Ok(task.complexity * split * task.len / (f64::from(allocated_units) * es.speed_per_unit))
}

/// Time to run the whole task locally.
pub fn full_local_time(task: &Task, ue: &UserEquipment) -> f64 {
    task.local_time.unwrap_or_else(|| task.cycles() / ue.local_speed)
}

pub fn combine(offload: f64, local: f64, mode: ExecutionMode) -> f64 {
    match mode {
        ExecutionMode::Concurrent => offload.max(local),
        ExecutionMode::Sequential => offload + local,
    }
}

/// Latency of `task` split at `task.split` between `ue` and `es`, given the
/// link `rate` in bits/s.
pub fn latency_breakdown(
    task: &Task,
    ue: &UserEquipment,
    es: &EdgeServer,
    allocated_units: u32,
    rate: f64,
    mode: ExecutionMode,
) -> Result<LatencyBreakdown, RadioError> {
    let tx_time = transmission_time(task.split, task.len, rate)?;
    let remote_proc = remote_processing_time(task.split, task, allocated_units, es)?;
    let local_proc = (1.0 - task.split) * full_local_time(task, ue);
    let offload_total = tx_time + remote_proc;
    let local_total = local_proc;
    Ok(LatencyBreakdown {
        tx_time,
        remote_proc,
        local_proc,
        offload_total,
        local_total,
        total: combine(offload_total, local_total, mode),
    })
}

/// Writes `entity_type,id,x_m,y_m,n_sc`; ES rows leave `n_sc` empty.
pub fn write_topology_csv<W: Write>(topology: &Topology, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["entity_type", "id", "x_m", "y_m", "n_sc"])?;
    for (k, p) in topology.ue_positions.iter().enumerate() {
        w.write_record([
            "ue".to_string(),
            k.to_string(),
            p[0].to_string(),
            p[1].to_string(),
            topology.subchannels[k].to_string(),
        ])?;
    }
    for (j, p) in topology.es_positions.iter().enumerate() {
        w.write_record(["es".to_string(), j.to_string(), p[0].to_string(), p[1].to_string(), String::new()])?;
    }
    w.flush()?;
    Ok(())
}

/// Row-major channel gains, one UE per row.
pub fn write_channel_csv<W: Write>(topology: &Topology, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &topology.channel_gain {
        w.write_record(row.iter().map(|g| format!("{g:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(split: f64, len: f64, complexity: f64) -> Task {
        Task {
            id: 0,
            arrival_time: 0.0,
            len,
            complexity,
            deadline: 1.0,
            split,
            owner_ue: 0,
            local_time: None,
        }
    }

    fn ue(speed: f64) -> UserEquipment {
        UserEquipment {
            id: 0,
            position: [0.0, 0.0],
            budget: 10.0,
            local_speed: speed,
            offload_prob: 1.0,
            tx_power: 1.0,
            participation: true,
        }
    }

    fn server(speed_per_unit: f64) -> EdgeServer {
        EdgeServer {
            id: 0,
            position: [0.0, 0.0],
            capacity: 32,
            available: 32,
            speed_per_unit,
            reserve_price: 0.5,
            unit_cost: 0.1,
            participation: true,
            coverage_radius: 500.0,
        }
    }

    /// Hand-built topology with given gains towards a single ES.
    fn fixed_gains(gains: &[f64]) -> Topology {
        Topology {
            ue_positions: vec![[0.0, 0.0]; gains.len()],
            es_positions: vec![[0.0, 0.0]],
            channel_gain: gains.iter().map(|&g| vec![g]).collect(),
            subchannels: vec![1; gains.len()],
            coverage: vec![(0..gains.len()).collect()],
        }
    }

    #[test]
    fn pmf_values() {
        assert!((subchannel_pmf(0, 1.7, 1.0) - (-1.7f64).exp()).abs() < 1e-15);
        assert!((subchannel_pmf(2, 2.0, 1.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((subchannel_pmf(2, 2.0, 1.0) - 0.2707).abs() < 1e-4);
        let total: f64 = (0..=200).map(|n| subchannel_pmf(n, 11.11, 1.0)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grant_rate() {
        let mut cfg = SystemConfig::default();
        cfg.mean_subchannel_request = 2.0;
        assert!((subchannel_rate(&cfg, 20).unwrap() - 10.0).abs() < 1e-12);
        assert!((subchannel_rate(&cfg, 18).unwrap() - 100.0 / 18.0 * 2.0).abs() < 1e-12);
        cfg.mean_subchannel_request = 1.0;
        assert_eq!(subchannel_rate(&cfg, 100).unwrap(), 1.0);
        assert!(subchannel_rate(&cfg, 0).is_err());
    }

    #[test]
    fn degenerate_clamp_gives_one_each() {
        let mut cfg = SystemConfig::default();
        cfg.subchannel_min = 1;
        cfg.subchannel_max = 1;
        let topo = place_entities(&cfg, 3).unwrap();
        assert!(topo.subchannels.iter().all(|&n| n == 1));
    }

    #[test]
    fn default_draws_within_table_range() {
        let cfg = SystemConfig::default();
        for seed in 0..20 {
            let topo = place_entities(&cfg, seed).unwrap();
            assert!(topo.subchannels.iter().all(|&n| (1..=4).contains(&n)));
        }
    }

    #[test]
    fn zero_intensity_places_no_ue() {
        let mut cfg = SystemConfig::default();
        cfg.ue_intensity = 0.0;
        assert_eq!(place_entities(&cfg, 1).unwrap().num_ue(), 0);
    }

    #[test]
    fn zero_area_is_a_geometry_error() {
        let mut cfg = SystemConfig::default();
        cfg.region_side = 0.0;
        assert_eq!(place_entities(&cfg, 1), Err(RadioError::ZeroArea));
    }

    #[test]
    fn placement_is_deterministic() {
        let cfg = SystemConfig::default();
        assert_eq!(place_entities(&cfg, 42).unwrap(), place_entities(&cfg, 42).unwrap());
        assert_ne!(place_entities(&cfg, 42).unwrap(), place_entities(&cfg, 43).unwrap());
    }

    #[test]
    fn sinr_single_user_is_snr() {
        let cfg = SystemConfig::default();
        let topo = fixed_gains(&[2e-9]);
        let expected = cfg.tx_power() * 2e-9 / cfg.noise_variance;
        assert!((sinr(0, 0, &topo, &cfg, &[true]) - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn sinr_symmetric_pair_tends_to_one() {
        let mut cfg = SystemConfig::default();
        cfg.interference = InterferenceModel::Full;
        cfg.noise_variance = 1e-30;
        let topo = fixed_gains(&[1e-6, 1e-6]);
        assert!((sinr(0, 0, &topo, &cfg, &[true, true]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sinr_three_users_by_hand() {
        let mut cfg = SystemConfig::default();
        cfg.interference = InterferenceModel::Full;
        cfg.noise_variance = 1e-9;
        let topo = fixed_gains(&[4e-9, 1e-9, 3e-9]);
        let p = cfg.tx_power();
        let expected = p * 4e-9 / (p * 1e-9 + p * 3e-9 + 1e-9);
        assert!((sinr(0, 0, &topo, &cfg, &[true; 3]) - expected).abs() < 1e-12);
        // a silent UE does not interfere
        let quiet = p * 4e-9 / (p * 3e-9 + 1e-9);
        assert!((sinr(0, 0, &topo, &cfg, &[true, false, true]) - quiet).abs() < 1e-12);
    }

    #[test]
    fn rate_values() {
        let mut cfg = SystemConfig::default();
        assert_eq!(shannon_rate(3, &cfg, 0.0), 0.0);
        cfg.bandwidth = 1e6;
        cfg.num_subchannels = 1;
        assert!((shannon_rate(1, &cfg, 3.0) - 2e6).abs() < 1e-6);
    }

    #[test]
    fn expected_rate_is_linear_in_offload_prob() {
        let cfg = SystemConfig::default();
        let topo = fixed_gains(&[1e-9]);
        let mut u = ue(1e8);
        let full = expected_rate(&u, 0, &topo, &cfg, &[true]);
        assert_eq!(full, transmission_rate(0, 0, &topo, &cfg, &[true]));
        u.offload_prob = 0.5;
        assert!((expected_rate(&u, 0, &topo, &cfg, &[true]) - full / 2.0).abs() < 1e-9);
        u.offload_prob = 0.0;
        assert_eq!(expected_rate(&u, 0, &topo, &cfg, &[true]), 0.0);
    }

    #[test]
    fn transmission_times() {
        assert_eq!(transmission_time(0.0, 8e6, 0.0).unwrap(), 0.0);
        assert_eq!(transmission_time(0.5, 8e6, 4e6).unwrap(), 2.0);
        assert_eq!(transmission_time(1.0, 1e6, 1e6).unwrap(), 2.0);
        assert_eq!(transmission_time(0.1, 1e6, 0.0), Err(RadioError::UnreachableServer));
    }

    #[test]
    fn remote_times() {
        let es = server(1e9);
        assert_eq!(remote_processing_time(0.0, &task(0.0, 1e6, 1000.0), 0, &es).unwrap(), 0.0);
        assert_eq!(remote_processing_time(1.0, &task(1.0, 1e6, 1000.0), 1, &es).unwrap(), 1.0);
        assert_eq!(remote_processing_time(1.0, &task(1.0, 1e6, 1000.0), 2, &es).unwrap(), 0.5);
        assert_eq!(
            remote_processing_time(0.3, &task(0.3, 1e6, 1000.0), 0, &es),
            Err(RadioError::NoAllocation)
        );
    }

    #[test]
    fn breakdown_extremes() {
        let es = server(1e9);
        let u = ue(1e9);
        let all = latency_breakdown(&task(1.0, 1e6, 1000.0), &u, &es, 1, 1e6, ExecutionMode::Concurrent).unwrap();
        assert_eq!(all.local_total, 0.0);
        assert_eq!(all.total, all.offload_total);
        assert_eq!(all.offload_total, all.tx_time + all.remote_proc);
        let none = latency_breakdown(&task(0.0, 1e6, 1000.0), &u, &es, 0, 0.0, ExecutionMode::Concurrent).unwrap();
        assert_eq!(none.offload_total, 0.0);
        assert_eq!(none.total, none.local_total);
        assert_eq!(none.local_total, 1.0);
    }

    #[test]
    fn concurrent_vs_sequential() {
        assert_eq!(combine(2.0, 3.0, ExecutionMode::Concurrent), 3.0);
        assert_eq!(combine(2.0, 3.0, ExecutionMode::Sequential), 5.0);
    }

    #[test]
    fn topology_csv_has_one_row_per_entity() {
        let topo = place_entities(&SystemConfig::default(), 5).unwrap();
        let mut buf = Vec::new();
        write_topology_csv(&topo, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + topo.num_ue() + topo.num_es());
        assert!(text.starts_with("entity_type,id,x_m,y_m,n_sc\n"));
    }
}
