//! Scenario configuration.
//!
//! A scenario is a TOML document. Every omitted field takes a default and
//! the resolved configuration can be echoed back as TOML; parsing the echo
//! yields the same configuration. Unknown keys are rejected. See
//! `docs/config.md` for the schema.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compliance::{ComplianceModel, ControllerGains};
use crate::domain::{NodeId, Position, PreferenceWeights, RenewableKind, SimParams};
use crate::mobility::RoadGraph;
use crate::rng::{stream_rng, streams};

/// Bumped whenever a default value changes.
pub const DEFAULTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub diagnostics: Vec<FieldError>,
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { diagnostics: vec![FieldError { path: path.into(), message: message.into() }] }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        write!(f, "invalid configuration: {}", lines.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArenaMode {
    UnitSquare,
    RoadGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig {
    pub mode: ArenaMode,
    /// Road-graph file, relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Explicit,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationsConfig {
    pub count: usize,
    #[serde(default = "defaults::chargers")]
    pub chargers: u32,
    #[serde(default = "defaults::tariff")]
    pub tariff_eur_per_kwh: f64,
    #[serde(default = "defaults::placement")]
    pub placement: Placement,
    /// Seed for random placement; unused once resolved.
    #[serde(default)]
    pub placement_seed: u64,
    /// Unit-square coordinates, one per station.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<[f64; 2]>,
    /// Road-graph nodes, one per station.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeId>,
    /// Renewable source per station; defaults to repeating pv, wind, none.
    #[serde(default)]
    pub renewables: Vec<RenewableKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenewablesConfig {
    pub pv_nominal_kw: f64,
    pub wind_nominal_kw: f64,
    /// Time of day at simulation time zero (s after midnight).
    pub start_time_of_day_s: f64,
    pub sunrise_s: f64,
    pub sunset_s: f64,
    pub wind_step_s: u64,
    /// Standard deviation of one wind step, as a fraction of nominal power.
    pub wind_volatility: f64,
    /// Generation is modelled this long past the horizon, so forecasts for
    /// late charging windows stay defined.
    pub tail_s: u64,
}

impl Default for RenewablesConfig {
    fn default() -> Self {
        Self {
            pv_nominal_kw: 10.0,
            wind_nominal_kw: 5.0,
            start_time_of_day_s: 9.0 * 3600.0,
            sunrise_s: 6.0 * 3600.0,
            sunset_s: 20.0 * 3600.0,
            wind_step_s: 60,
            wind_volatility: 0.05,
            tail_s: 24 * 3600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub charge_rate_kwh_per_s: f64,
    pub m_max_s: f64,
    /// Defaults to sqrt(2) in the unit square and to the graph diameter.
    pub d_max: Option<f64>,
    /// Defaults to 0.02 units/s in the unit square and 10 m/s on a graph.
    pub vehicle_speed: Option<f64>,
    pub arrival_rate_per_s: f64,
    pub horizon_s: u64,
    pub sample_interval_s: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            charge_rate_kwh_per_s: 0.0061,
            m_max_s: 3600.0,
            d_max: None,
            vehicle_speed: None,
            arrival_rate_per_s: 500.0 / (7.0 * 3600.0),
            horizon_s: 7 * 3600,
            sample_interval_s: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub mean_kwh: f64,
    pub std_kwh: f64,
    pub min_kwh: f64,
    pub max_kwh: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { mean_kwh: 5.0, std_kwh: 1.2, min_kwh: 1.0, max_kwh: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub share: f64,
    pub alpha: PreferenceWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    /// Every driver uses the same weights.
    Fixed { alpha: PreferenceWeights },
    /// Each driver draws a component with probability `share`.
    Mixture { components: Vec<MixtureComponent> },
    /// Marks a scenario meant for the weight sweep; every grid point is
    /// run with fixed weights.
    Sweep { divisions: u32 },
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig::Fixed { alpha: PreferenceWeights::ALL_TIME }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Centralized,
    Decentralized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub max_protocol_steps: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { kind: SolverKind::Centralized, max_protocol_steps: crate::assignment::DEFAULT_MAX_PROTOCOL_STEPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplianceMode {
    /// Every driver complies.
    Off,
    /// Drivers comply with fixed probability `q`.
    Fixed,
    /// Compliance follows the bond, which the controller regulates.
    ClosedLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplianceConfig {
    pub mode: ComplianceMode,
    pub q: f64,
    /// Compliance with no bond at stake.
    pub base_compliance: f64,
    /// Bond scale of the compliance response.
    pub sensitivity: f64,
    pub target: f64,
    pub kp: f64,
    pub ki: f64,
    pub bond_min: f64,
    pub bond_max: f64,
    pub initial_bond: f64,
    /// Settlements per compliance estimate.
    pub window: usize,
    /// Settlements between controller updates.
    pub cadence: usize,
    /// Bond escrowed when the controller is not running.
    pub fixed_bond: f64,
    /// Escrow deadline = assignment time + travel time x slack.
    pub deadline_slack: f64,
}

impl ComplianceConfig {
    pub fn model(&self) -> ComplianceModel {
        ComplianceModel { base_compliance: self.base_compliance, sensitivity: self.sensitivity }
    }

    pub fn gains(&self) -> ControllerGains {
        ControllerGains { kp: self.kp, ki: self.ki }
    }
}

impl Default for ComplianceConfig {
    fn default() -> Self {
        Self {
            mode: ComplianceMode::Off,
            q: 1.0,
            base_compliance: ComplianceModel::default().base_compliance,
            sensitivity: ComplianceModel::default().sensitivity,
            target: 0.9,
            kp: ControllerGains::default().kp,
            ki: ControllerGains::default().ki,
            bond_min: 0.0,
            bond_max: 50.0,
            initial_bond: 0.0,
            window: 20,
            cadence: 20,
            fixed_bond: 5.0,
            deadline_slack: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LedgerConfig {
    pub enabled: bool,
    pub pow_delay_steps: u64,
    /// Tokens given to each vehicle on spawn; defaults to 10 x bond_max.
    pub endowment_tokens: Option<f64>,
    pub treasury_supply_tokens: f64,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self { enabled: true, pow_delay_steps: 2, endowment_tokens: None, treasury_supply_tokens: 1e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub runs: usize,
    pub base_seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { runs: 20, base_seed: 1 }
    }
}

pub const REPORTS: [&str; 7] = ["summary", "vehicles", "stations", "participation", "controller", "ledger", "events"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Artifact directory, relative to the working directory.
    pub dir: PathBuf,
    pub reports: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), reports: REPORTS.iter().map(|s| s.to_string()).collect() }
    }
}

impl OutputConfig {
    pub fn wants(&self, report: &str) -> bool {
        self.reports.iter().any(|r| r == report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "defaults::version")]
    pub defaults_version: u32,
    #[serde(default)]
    pub name: String,
    pub arena: ArenaConfig,
    pub stations: StationsConfig,
    #[serde(default)]
    pub renewables: RenewablesConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub compliance: ComplianceConfig,
    #[serde(default)]
    pub ledger: LedgerConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    graph: LoadedGraph,
}

/// The graph named by `arena.graph_file`, loaded once at parse time.
/// Equality follows the file name, so the cache itself never differs.
#[derive(Debug, Clone, Default)]
struct LoadedGraph(Option<Arc<RoadGraph>>);

impl PartialEq for LoadedGraph {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

mod defaults {
    use super::Placement;

    pub fn version() -> u32 {
        super::DEFAULTS_VERSION
    }

    pub fn chargers() -> u32 {
        2
    }

    pub fn tariff() -> f64 {
        0.45
    }

    pub fn placement() -> Placement {
        Placement::Explicit
    }
}

impl ScenarioConfig {
    pub fn graph(&self) -> Option<&Arc<RoadGraph>> {
        self.graph.0.as_ref()
    }

    /// Resolved simulation parameters.
    pub fn sim_params(&self) -> SimParams {
        SimParams {
            charge_rate_kwh_per_s: self.sim.charge_rate_kwh_per_s,
            m_max_s: self.sim.m_max_s,
            d_max: self.sim.d_max.expect("resolved at parse time"),
            vehicle_speed: self.sim.vehicle_speed.expect("resolved at parse time"),
            arrival_rate_per_s: self.sim.arrival_rate_per_s,
            horizon_s: self.sim.horizon_s as f64,
        }
    }

    pub fn endowment_tokens(&self) -> f64 {
        self.ledger.endowment_tokens.expect("resolved at parse time")
    }

    /// The resolved configuration as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn with_weights(&self, weights: WeightsConfig) -> Self {
        Self { weights, ..self.clone() }
    }
}

/// Reads, overrides, resolves and validates a scenario file.
pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::field("", format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_and_validate(&text, &base, overrides)
}

/// Parses `source`, applies dotted-path `key=value` overrides, fills in
/// defaults and validates the result.
pub fn parse_and_validate(source: &str, base_dir: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let mut doc: toml::Table =
        source.parse().map_err(|e: toml::de::Error| ConfigError::field("", e.message().to_string()))?;
    for ov in overrides {
        apply_override(&mut doc, ov)?;
    }
    let de = toml::Value::Table(doc);
    let mut cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::field(if path == "." { String::new() } else { path }, e.inner().to_string())
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    resolve(&mut cfg)?;
    validate(&cfg)?;
    Ok(cfg)
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::field(spec, "override must look like section.key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("just inserted"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = doc;
    for p in parents {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::field(key, format!("`{p}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn resolve(cfg: &mut ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.defaults_version != DEFAULTS_VERSION {
        return Err(ConfigError::field(
            "defaults_version",
            format!("configuration targets defaults version {}, this build uses {DEFAULTS_VERSION}", cfg.defaults_version),
        ));
    }
    match cfg.arena.mode {
        ArenaMode::UnitSquare => {
            cfg.sim.d_max.get_or_insert(std::f64::consts::SQRT_2);
            cfg.sim.vehicle_speed.get_or_insert(0.02);
        }
        ArenaMode::RoadGraph => {
            let rel = cfg
                .arena
                .graph_file
                .clone()
                .ok_or_else(|| ConfigError::field("arena.graph_file", "required in road_graph mode"))?;
            let graph = RoadGraph::load(&cfg.base_dir.join(&rel))
                .map_err(|e| ConfigError::field("arena.graph_file", e.to_string()))?;
            cfg.sim.d_max.get_or_insert(graph.diameter());
            cfg.sim.vehicle_speed.get_or_insert(10.0);
            cfg.graph = LoadedGraph(Some(Arc::new(graph)));
        }
    }
    if cfg.ledger.endowment_tokens.is_none() {
        cfg.ledger.endowment_tokens = Some(10.0 * cfg.compliance.bond_max);
    }
    let st = &mut cfg.stations;
    if st.placement == Placement::Random {
        let mut rng = stream_rng(st.placement_seed, streams::PLACEMENT);
        match cfg.arena.mode {
            ArenaMode::UnitSquare => {
                st.positions = (0..st.count).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
            }
            ArenaMode::RoadGraph => {
                let ids = cfg.graph.0.as_ref().expect("graph loaded above").node_ids().to_vec();
                if ids.len() < st.count {
                    return Err(ConfigError::field("stations.count", "more stations than graph nodes"));
                }
                let picked = rand::seq::index::sample(&mut rng, ids.len(), st.count);
                let mut nodes: Vec<NodeId> = picked.into_iter().map(|i| ids[i]).collect();
                nodes.sort_unstable();
                st.nodes = nodes;
            }
        }
        st.placement = Placement::Explicit;
        st.placement_seed = 0;
    }
    if st.renewables.is_empty() {
        let cycle = [RenewableKind::Pv, RenewableKind::Wind, RenewableKind::None];
        st.renewables = (0..st.count).map(|i| cycle[i % 3]).collect();
    }
    Ok(())
}

fn validate(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    let mut errs = Vec::new();
    let mut err = |path: &str, msg: String| errs.push(FieldError { path: path.to_string(), message: msg });

    let st = &cfg.stations;
    if st.count == 0 {
        err("stations.count", "at least one station is required".into());
    }
    if st.chargers == 0 {
        err("stations.chargers", "must be at least 1".into());
    }
    if !(st.tariff_eur_per_kwh > 0.0) {
        err("stations.tariff_eur_per_kwh", "must be strictly positive".into());
    }
    if st.renewables.len() != st.count {
        err("stations.renewables", format!("{} entries for {} stations", st.renewables.len(), st.count));
    }
    match cfg.arena.mode {
        ArenaMode::UnitSquare => {
            if st.positions.len() != st.count {
                err("stations.positions", format!("{} positions for {} stations", st.positions.len(), st.count));
            }
            for (i, [x, y]) in st.positions.iter().enumerate() {
                if Position::in_unit_square(*x, *y).is_err() {
                    err(&format!("stations.positions[{i}]"), format!("({x}, {y}) lies outside the unit square"));
                }
            }
            if !st.nodes.is_empty() {
                err("stations.nodes", "only meaningful in road_graph mode".into());
            }
        }
        ArenaMode::RoadGraph => {
            let graph = cfg.graph().expect("resolved");
            if st.nodes.len() != st.count {
                err("stations.nodes", format!("{} nodes for {} stations", st.nodes.len(), st.count));
            }
            for (i, n) in st.nodes.iter().enumerate() {
                if !graph.contains(*n) {
                    err(&format!("stations.nodes[{i}]"), format!("node {n} is not in the graph"));
                }
            }
            if !st.positions.is_empty() {
                err("stations.positions", "only meaningful in unit_square mode".into());
            }
        }
    }

    let r = &cfg.renewables;
    if r.pv_nominal_kw < 0.0 || r.wind_nominal_kw < 0.0 {
        err("renewables", "nominal powers must be non-negative".into());
    }
    if !(r.sunset_s > r.sunrise_s) {
        err("renewables.sunset_s", "must be after sunrise".into());
    }
    if r.wind_step_s == 0 {
        err("renewables.wind_step_s", "must be at least 1".into());
    }

    let s = &cfg.sim;
    for (name, v) in [
        ("sim.charge_rate_kwh_per_s", s.charge_rate_kwh_per_s),
        ("sim.m_max_s", s.m_max_s),
        ("sim.d_max", s.d_max.unwrap_or(0.0)),
        ("sim.vehicle_speed", s.vehicle_speed.unwrap_or(0.0)),
        ("sim.arrival_rate_per_s", s.arrival_rate_per_s),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            err(name, format!("must be strictly positive, got {v}"));
        }
    }
    if s.horizon_s == 0 {
        err("sim.horizon_s", "must be strictly positive".into());
    }
    if s.sample_interval_s == 0 {
        err("sim.sample_interval_s", "must be at least 1".into());
    }

    let e = &cfg.energy;
    if !(e.min_kwh > 0.0 && e.max_kwh > e.min_kwh) {
        err("energy", "need 0 < min_kwh < max_kwh".into());
    }
    if !(e.std_kwh >= 0.0) {
        err("energy.std_kwh", "must be non-negative".into());
    }

    match &cfg.weights {
        WeightsConfig::Fixed { .. } => {}
        WeightsConfig::Mixture { components } => {
            if components.is_empty() {
                err("weights.components", "at least one component required".into());
            }
            let total: f64 = components.iter().map(|c| c.share).sum();
            if components.iter().any(|c| c.share < 0.0) || (total - 1.0).abs() > 1e-9 {
                err("weights.components", format!("shares must be non-negative and sum to 1, got {total}"));
            }
        }
        WeightsConfig::Sweep { divisions } => {
            if *divisions == 0 {
                err("weights.divisions", "must be at least 1".into());
            }
        }
    }

    if cfg.solver.max_protocol_steps == 0 {
        err("solver.max_protocol_steps", "must be at least 1".into());
    }

    let c = &cfg.compliance;
    if !(0.0..=1.0).contains(&c.q) {
        err("compliance.q", "must lie in [0, 1]".into());
    }
    if !(0.0..=1.0).contains(&c.target) {
        err("compliance.target", "must lie in [0, 1]".into());
    }
    if !(0.0..=1.0).contains(&c.base_compliance) {
        err("compliance.base_compliance", "must lie in [0, 1]".into());
    }
    if !(c.sensitivity > 0.0) {
        err("compliance.sensitivity", "must be strictly positive".into());
    }
    if !(c.bond_min >= 0.0 && c.bond_max >= c.bond_min) {
        err("compliance.bond_max", "need 0 <= bond_min <= bond_max".into());
    }
    if c.window == 0 || c.cadence == 0 {
        err("compliance.window", "window and cadence must be at least 1".into());
    }
    if !(c.fixed_bond >= 0.0) {
        err("compliance.fixed_bond", "must be non-negative".into());
    }
    if !(c.deadline_slack >= 1.0) {
        err("compliance.deadline_slack", "must be at least 1 so compliant drivers can make it".into());
    }
    if c.mode == ComplianceMode::ClosedLoop && !cfg.ledger.enabled {
        err("compliance.mode", "closed_loop needs ledger.enabled = true".into());
    }

    let l = &cfg.ledger;
    if !(cfg.endowment_tokens() >= 0.0) || !(l.treasury_supply_tokens >= 0.0) {
        err("ledger", "token amounts must be non-negative".into());
    }
    if l.treasury_supply_tokens * 1e6 > u64::MAX as f64 / 2.0 {
        err("ledger.treasury_supply_tokens", "too large".into());
    }

    if cfg.monte_carlo.runs == 0 {
        err("monte_carlo.runs", "must be at least 1".into());
    }
    for r in &cfg.output.reports {
        if !REPORTS.contains(&r.as_str()) {
            err("output.reports", format!("unknown report `{r}`; known: {}", REPORTS.join(", ")));
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(ConfigError { diagnostics: errs })
    }
}
