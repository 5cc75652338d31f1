//! Domain types and the validated simulation configuration.
//!
//! Units are fixed across the crate: task length in bits, complexity in
//! cycles per bit, compute speed in cycles per second, resources in integer
//! cores, prices and budgets in abstract money units, powers in watts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// A delay-sensitive computation job.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: usize,
    pub arrival_time: f64,
    /// Length in bits.
    pub len: f64,
    /// Cycles per bit.
    pub complexity: f64,
    /// Deadline in seconds, measured from arrival.
    pub deadline: f64,
    /// Offloaded fraction in `[0, 1]`.
    pub split: f64,
    pub owner_ue: usize,
    /// Full local processing time when sampled directly rather than derived
    /// from the owner's speed.
    pub local_time: Option<f64>,
}

impl Task {
    pub fn is_valid(&self) -> bool {
        self.len > 0.0
            && self.complexity > 0.0
            && self.deadline > 0.0
            && (0.0..=1.0).contains(&self.split)
    }

    /// Total cycles needed to run the whole task.
    pub fn cycles(&self) -> f64 {
        self.complexity * self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEquipment {
    pub id: usize,
    pub position: [f64; 2],
    pub budget: f64,
    /// Local compute speed in cycles per second.
    pub local_speed: f64,
    /// Probability of offloading (Bernoulli participation).
    pub offload_prob: f64,
    /// Transmit power in watts.
    pub tx_power: f64,
    pub participation: bool,
}

impl UserEquipment {
    pub fn is_valid(&self) -> bool {
        self.budget >= 0.0 && self.local_speed > 0.0 && (0.0..=1.0).contains(&self.offload_prob)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeServer {
    pub id: usize,
    pub position: [f64; 2],
    /// Total cores.
    pub capacity: u32,
    /// Cores available for this auction.
    pub available: u32,
    /// Cycles per second contributed by one core.
    pub speed_per_unit: f64,
    pub reserve_price: f64,
    pub unit_cost: f64,
    pub participation: bool,
    pub coverage_radius: f64,
}

impl EdgeServer {
    pub fn is_valid(&self) -> bool {
        self.available <= self.capacity && self.reserve_price >= 0.0 && self.unit_cost >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Local and remote shares run in parallel: latency is the max.
    #[default]
    Concurrent,
    /// Shares run one after the other: latency is the sum.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Poisson point process counts.
    #[default]
    Ppp,
    /// Exactly `num_ue` and `num_es` points, uniform in the region.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// Each transmitting UE interferes in proportion to the fraction of
    /// sub-channels it occupies.
    #[default]
    CoChannel,
    /// Every transmitting UE interferes at full power.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeMode {
    /// Full local processing time drawn from `[local_time_min, local_time_max]`.
    #[default]
    Sampled,
    /// Derived from cycles and the UE's local speed.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WinnerMode {
    #[default]
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PaymentRule {
    #[default]
    Clarke,
    /// Clarke pivot on values discounted by `incentive_factor`.
    Incentive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SellerRevenue {
    /// Revenue is the income actually collected from payments.
    Income,
    /// Revenue is the announced price times units sold.
    #[default]
    AskPrice,
}

/// Validated simulation configuration. Construct with [`validate_config`] or
/// [`SystemConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub num_ue: usize,
    pub num_es: usize,
    pub num_tasks: usize,
    pub region_side: f64,
    pub coverage_radius: f64,
    pub ue_intensity: f64,
    pub es_intensity: f64,
    pub placement: Placement,
    pub bandwidth: f64,
    pub num_subchannels: u32,
    pub mean_subchannel_request: f64,
    pub subchannel_epoch: f64,
    pub subchannel_min: u32,
    pub subchannel_max: u32,
    pub tx_power_dbm: f64,
    pub noise_dbm_per_hz: f64,
    #[serde(skip)]
    pub noise_variance: f64,
    pub pathloss_exponent: f64,
    pub interference: InterferenceModel,
    pub latency_weight: f64,
    pub price_weight: f64,
    pub incentive_factor: f64,
    pub risk_weight: f64,
    pub execution_mode: ExecutionMode,
    pub winner_mode: WinnerMode,
    pub payment_rule: PaymentRule,
    pub seller_revenue: SellerRevenue,
    pub es_capacity: u32,
    pub speed_per_unit: f64,
    pub reserve_price_min: f64,
    pub reserve_price_max: f64,
    pub unit_cost_min: f64,
    pub unit_cost_max: f64,
    pub task_len_min: f64,
    pub task_len_max: f64,
    pub complexity_min: f64,
    pub complexity_max: f64,
    pub deadline_min: f64,
    pub deadline_max: f64,
    pub local_time_mode: LocalTimeMode,
    pub local_time_min: f64,
    pub local_time_max: f64,
    pub local_speed: f64,
    pub demand_max: u32,
    pub arrival_rate: f64,
    /// Workload horizon in seconds; 0 means "until `num_tasks` arrive".
    pub horizon: f64,
    pub slot_length: f64,
    pub valuation_min: f64,
    pub valuation_max: f64,
    pub budget_min: f64,
    pub budget_max: f64,
    pub offload_prob: f64,
    pub split_step: f64,
    pub valuation_grid_points: usize,
    pub price_grid_points: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let bandwidth = 10e6;
        let noise_dbm_per_hz = -174.0;
        SystemConfig {
            num_ue: 115,
            num_es: 6,
            num_tasks: 1000,
            region_side: 1900.0,
            coverage_radius: 500.0,
            ue_intensity: 18.0 / (PI * 500.0 * 500.0),
            es_intensity: 6.0 / (1900.0 * 1900.0),
            placement: Placement::Ppp,
            bandwidth,
            num_subchannels: 100,
            mean_subchannel_request: 0.45,
            subchannel_epoch: 1.0,
            subchannel_min: 1,
            subchannel_max: 4,
            tx_power_dbm: 35.0,
            noise_dbm_per_hz,
            noise_variance: dbm_per_hz_to_watts(noise_dbm_per_hz, bandwidth),
            pathloss_exponent: 3.5,
            interference: InterferenceModel::CoChannel,
            latency_weight: 0.5,
            price_weight: 0.5,
            incentive_factor: 0.0,
            risk_weight: 0.0,
            execution_mode: ExecutionMode::Concurrent,
            winner_mode: WinnerMode::Exact,
            payment_rule: PaymentRule::Clarke,
            seller_revenue: SellerRevenue::AskPrice,
            es_capacity: 32,
            speed_per_unit: 1e8,
            reserve_price_min: 0.1,
            reserve_price_max: 1.0,
            unit_cost_min: 0.05,
            unit_cost_max: 0.5,
            task_len_min: 1e6,
            task_len_max: 8e6,
            complexity_min: 50.0,
            complexity_max: 150.0,
            deadline_min: 1.0,
            deadline_max: 7.5,
            local_time_mode: LocalTimeMode::Sampled,
            local_time_min: 3.0,
            local_time_max: 8.0,
            local_speed: 1e8,
            demand_max: 4,
            arrival_rate: 2.0,
            horizon: 0.0,
            slot_length: 10.0,
            valuation_min: 30.0,
            valuation_max: 500.0,
            budget_min: 300.0,
            budget_max: 600.0,
            offload_prob: 1.0,
            split_step: 0.05,
            valuation_grid_points: 16,
            price_grid_points: 8,
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn region_area(&self) -> f64 {
        self.region_side * self.region_side
    }

    /// Transmit power in watts.
    pub fn tx_power(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }

    /// Bandwidth of one sub-channel in Hz.
    pub fn subchannel_bandwidth(&self) -> f64 {
        self.bandwidth / f64::from(self.num_subchannels)
    }

    /// Flat TOML rendering that [`validate_config`] accepts back unchanged.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all TOML-representable")
    }
}

/// Converts a power spectral density in dBm/Hz over `bandwidth` Hz to watts.
pub fn dbm_per_hz_to_watts(level: f64, bandwidth: f64) -> f64 {
    10f64.powf((level - 30.0) / 10.0) * bandwidth
}

/// Mirror of [`SystemConfig`] with every key optional; absent keys take the
/// defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    num_ue: Option<i64>,
    num_es: Option<i64>,
    num_tasks: Option<i64>,
    region_side: Option<f64>,
    coverage_radius: Option<f64>,
    ue_intensity: Option<f64>,
    es_intensity: Option<f64>,
    placement: Option<Placement>,
    bandwidth: Option<f64>,
    num_subchannels: Option<i64>,
    mean_subchannel_request: Option<f64>,
    subchannel_epoch: Option<f64>,
    subchannel_min: Option<i64>,
    subchannel_max: Option<i64>,
    tx_power_dbm: Option<f64>,
    noise_dbm_per_hz: Option<f64>,
    pathloss_exponent: Option<f64>,
    interference: Option<InterferenceModel>,
    latency_weight: Option<f64>,
    price_weight: Option<f64>,
    incentive_factor: Option<f64>,
    risk_weight: Option<f64>,
    execution_mode: Option<ExecutionMode>,
    winner_mode: Option<WinnerMode>,
    payment_rule: Option<PaymentRule>,
    seller_revenue: Option<SellerRevenue>,
    es_capacity: Option<i64>,
    speed_per_unit: Option<f64>,
    reserve_price_min: Option<f64>,
    reserve_price_max: Option<f64>,
    unit_cost_min: Option<f64>,
    unit_cost_max: Option<f64>,
    task_len_min: Option<f64>,
    task_len_max: Option<f64>,
    complexity_min: Option<f64>,
    complexity_max: Option<f64>,
    deadline_min: Option<f64>,
    deadline_max: Option<f64>,
    local_time_mode: Option<LocalTimeMode>,
    local_time_min: Option<f64>,
    local_time_max: Option<f64>,
    local_speed: Option<f64>,
    demand_max: Option<i64>,
    arrival_rate: Option<f64>,
    horizon: Option<f64>,
    slot_length: Option<f64>,
    valuation_min: Option<f64>,
    valuation_max: Option<f64>,
    budget_min: Option<f64>,
    budget_max: Option<f64>,
    offload_prob: Option<f64>,
    split_step: Option<f64>,
    valuation_grid_points: Option<i64>,
    price_grid_points: Option<i64>,
    seed: Option<i64>,
}

fn count(field: &'static str, v: Option<i64>, default: usize) -> Result<usize, ConfigError> {
    match v {
        None => Ok(default),
        Some(n) if n >= 1 => Ok(n as usize),
        Some(n) => Err(ConfigError::range(field, n, "must be >= 1")),
    }
}

fn count_u32(field: &'static str, v: Option<i64>, default: u32) -> Result<u32, ConfigError> {
    match v {
        None => Ok(default),
        Some(n) if (1..=i64::from(u32::MAX)).contains(&n) => Ok(n as u32),
        Some(n) => Err(ConfigError::range(field, n, "must be a positive 32-bit count")),
    }
}

fn positive(field: &'static str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    let x = v.unwrap_or(default);
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::range(field, x, "must be finite and > 0"))
    }
}

fn non_negative(field: &'static str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    let x = v.unwrap_or(default);
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::range(field, x, "must be finite and >= 0"))
    }
}

fn finite(field: &'static str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    let x = v.unwrap_or(default);
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::range(field, x, "must be finite"))
    }
}

fn ordered(
    lo_field: &'static str,
    lo: f64,
    hi: f64,
) -> Result<(), ConfigError> {
    if lo <= hi {
        Ok(())
    } else {
        Err(ConfigError::range(lo_field, lo, "must not exceed its matching _max key"))
    }
}

/// Parses and validates a flat TOML key-value document. Unknown keys are
/// rejected; absent keys take their defaults.
pub fn validate_config(document: &str) -> Result<SystemConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let d = SystemConfig::default();

    let num_subchannels = count_u32("num_subchannels", raw.num_subchannels, d.num_subchannels)?;
    let subchannel_min = count_u32("subchannel_min", raw.subchannel_min, d.subchannel_min)?;
    let subchannel_max = count_u32("subchannel_max", raw.subchannel_max, d.subchannel_max)?;
    if subchannel_min > subchannel_max {
        return Err(ConfigError::range("subchannel_min", subchannel_min, "must not exceed subchannel_max"));
    }
    if subchannel_max > num_subchannels {
        return Err(ConfigError::range("subchannel_max", subchannel_max, "must not exceed num_subchannels"));
    }

    let (latency_weight, price_weight) = {
        let w1 = non_negative("latency_weight", raw.latency_weight, d.latency_weight)?;
        let w2 = non_negative("price_weight", raw.price_weight, d.price_weight)?;
        let sum = w1 + w2;
        if sum <= 0.0 {
            return Err(ConfigError::range("latency_weight", w1, "latency_weight + price_weight must be > 0"));
        }
        if (sum - 1.0).abs() <= 4.0 * f64::EPSILON {
            (w1, w2)
        } else {
            let w1 = w1 / sum;
            (w1, 1.0 - w1)
        }
    };

    let incentive_factor = non_negative("incentive_factor", raw.incentive_factor, d.incentive_factor)?;
    if incentive_factor >= 1.0 {
        return Err(ConfigError::range("incentive_factor", incentive_factor, "must be < 1"));
    }

    let offload_prob = non_negative("offload_prob", raw.offload_prob, d.offload_prob)?;
    if offload_prob > 1.0 {
        return Err(ConfigError::range("offload_prob", offload_prob, "must be <= 1"));
    }

    let split_step = positive("split_step", raw.split_step, d.split_step)?;
    if split_step > 1.0 {
        return Err(ConfigError::range("split_step", split_step, "must be <= 1"));
    }

    let seed = match raw.seed {
        None => d.seed,
        Some(s) if s >= 0 => s as u64,
        Some(s) => return Err(ConfigError::range("seed", s, "must be >= 0")),
    };

    let bandwidth = positive("bandwidth", raw.bandwidth, d.bandwidth)?;
    let noise_dbm_per_hz = finite("noise_dbm_per_hz", raw.noise_dbm_per_hz, d.noise_dbm_per_hz)?;

    let cfg = SystemConfig {
        num_ue: count("num_ue", raw.num_ue, d.num_ue)?,
        num_es: count("num_es", raw.num_es, d.num_es)?,
        num_tasks: count("num_tasks", raw.num_tasks, d.num_tasks)?,
        region_side: positive("region_side", raw.region_side, d.region_side)?,
        coverage_radius: positive("coverage_radius", raw.coverage_radius, d.coverage_radius)?,
        ue_intensity: non_negative("ue_intensity", raw.ue_intensity, d.ue_intensity)?,
        es_intensity: non_negative("es_intensity", raw.es_intensity, d.es_intensity)?,
        placement: raw.placement.unwrap_or(d.placement),
        bandwidth,
        num_subchannels,
        mean_subchannel_request: positive(
            "mean_subchannel_request",
            raw.mean_subchannel_request,
            d.mean_subchannel_request,
        )?,
        subchannel_epoch: positive("subchannel_epoch", raw.subchannel_epoch, d.subchannel_epoch)?,
        subchannel_min,
        subchannel_max,
        tx_power_dbm: finite("tx_power_dbm", raw.tx_power_dbm, d.tx_power_dbm)?,
        noise_dbm_per_hz,
        noise_variance: dbm_per_hz_to_watts(noise_dbm_per_hz, bandwidth),
        pathloss_exponent: positive("pathloss_exponent", raw.pathloss_exponent, d.pathloss_exponent)?,
        interference: raw.interference.unwrap_or(d.interference),
        latency_weight,
        price_weight,
        incentive_factor,
        risk_weight: non_negative("risk_weight", raw.risk_weight, d.risk_weight)?,
        execution_mode: raw.execution_mode.unwrap_or(d.execution_mode),
        winner_mode: raw.winner_mode.unwrap_or(d.winner_mode),
        payment_rule: raw.payment_rule.unwrap_or(d.payment_rule),
        seller_revenue: raw.seller_revenue.unwrap_or(d.seller_revenue),
        es_capacity: count_u32("es_capacity", raw.es_capacity, d.es_capacity)?,
        speed_per_unit: positive("speed_per_unit", raw.speed_per_unit, d.speed_per_unit)?,
        reserve_price_min: non_negative("reserve_price_min", raw.reserve_price_min, d.reserve_price_min)?,
        reserve_price_max: non_negative("reserve_price_max", raw.reserve_price_max, d.reserve_price_max)?,
        unit_cost_min: non_negative("unit_cost_min", raw.unit_cost_min, d.unit_cost_min)?,
        unit_cost_max: non_negative("unit_cost_max", raw.unit_cost_max, d.unit_cost_max)?,
        task_len_min: positive("task_len_min", raw.task_len_min, d.task_len_min)?,
        task_len_max: positive("task_len_max", raw.task_len_max, d.task_len_max)?,
        complexity_min: positive("complexity_min", raw.complexity_min, d.complexity_min)?,
        complexity_max: positive("complexity_max", raw.complexity_max, d.complexity_max)?,
        deadline_min: positive("deadline_min", raw.deadline_min, d.deadline_min)?,
        deadline_max: positive("deadline_max", raw.deadline_max, d.deadline_max)?,
        local_time_mode: raw.local_time_mode.unwrap_or(d.local_time_mode),
        local_time_min: positive("local_time_min", raw.local_time_min, d.local_time_min)?,
        local_time_max: positive("local_time_max", raw.local_time_max, d.local_time_max)?,
        local_speed: positive("local_speed", raw.local_speed, d.local_speed)?,
        demand_max: count_u32("demand_max", raw.demand_max, d.demand_max)?,
        arrival_rate: positive("arrival_rate", raw.arrival_rate, d.arrival_rate)?,
        horizon: non_negative("horizon", raw.horizon, d.horizon)?,
        slot_length: positive("slot_length", raw.slot_length, d.slot_length)?,
        valuation_min: non_negative("valuation_min", raw.valuation_min, d.valuation_min)?,
        valuation_max: non_negative("valuation_max", raw.valuation_max, d.valuation_max)?,
        budget_min: non_negative("budget_min", raw.budget_min, d.budget_min)?,
        budget_max: non_negative("budget_max", raw.budget_max, d.budget_max)?,
        offload_prob,
        split_step,
        valuation_grid_points: count("valuation_grid_points", raw.valuation_grid_points, d.valuation_grid_points)?,
        price_grid_points: count("price_grid_points", raw.price_grid_points, d.price_grid_points)?,
        seed,
    };

    ordered("reserve_price_min", cfg.reserve_price_min, cfg.reserve_price_max)?;
    ordered("unit_cost_min", cfg.unit_cost_min, cfg.unit_cost_max)?;
    ordered("task_len_min", cfg.task_len_min, cfg.task_len_max)?;
    ordered("complexity_min", cfg.complexity_min, cfg.complexity_max)?;
    ordered("deadline_min", cfg.deadline_min, cfg.deadline_max)?;
    ordered("local_time_min", cfg.local_time_min, cfg.local_time_max)?;
    ordered("valuation_min", cfg.valuation_min, cfg.valuation_max)?;
    ordered("budget_min", cfg.budget_min, cfg.budget_max)?;
    Ok(cfg)
}
