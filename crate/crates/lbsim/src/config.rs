//! Scenario configuration: a TOML file with exhaustive defaults, so the
//! stock experiments are each a handful of lines. Field names and defaults
//! mirror the reference experiment setup (4.5 Mbps links, WFQ weights
//! 0.22/0.33/0.44, buffer depths 24/53/374 packets, 50-byte probes every
//! 0.5 s, 500-byte data packets, 4 Mbps main traffic starting at t=5 s).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::router::{ClassConfig, ClassMap, ServiceClass};
use crate::sim::NodeId;
use crate::topology::{default_topology, LinkSpec, Topology};
use crate::traffic::{SourceModel, SourceSpec};
use crate::{Error, Result};

impl serde::Serialize for ServiceClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for ServiceClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        match raw.as_str() {
            "ef" => Ok(ServiceClass::Ef),
            "af" => Ok(ServiceClass::Af),
            "be" => Ok(ServiceClass::Be),
            other => Err(serde::de::Error::custom(format!(
                "unknown service class {other:?} (expected ef, af or be)"
            ))),
        }
    }
}

/// Whether data traffic is pinned to a single path or balanced over two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balancing {
    /// The candidate set is restricted to the first discovered path and
    /// every packet takes it.
    SinglePath,
    /// Probes grade every candidate path; the two best split the traffic.
    TwoPath,
}

/// Per-class triple as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassValues<T> {
    pub ef: T,
    pub af: T,
    pub be: T,
}

impl<T: Copy> ClassValues<T> {
    pub fn get(&self, class: ServiceClass) -> T {
        match class {
            ServiceClass::Ef => self.ef,
            ServiceClass::Af => self.af,
            ServiceClass::Be => self.be,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub from: String,
    pub to: String,
    #[serde(default = "default_link_capacity")]
    pub capacity_bps: f64,
    #[serde(default)]
    pub prop_delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    /// Optional explicit node list; otherwise derived from the links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<String>>,
    pub source: String,
    pub destination: String,
    pub ingress: String,
    pub links: Vec<LinkConfig>,
    /// Optional explicit candidate paths (router hops, ingress first);
    /// overrides discovery.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<String>>>,
}

/// Traffic model section of a source entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SourceModelConfig {
    Cbr {
        #[serde(default = "default_cbr_rate")]
        rate_bps: f64,
    },
    ParetoOnoff {
        #[serde(default = "default_on_scale")]
        on_scale: f64,
        #[serde(default = "default_shape")]
        on_shape: f64,
        #[serde(default = "default_off_scale")]
        off_scale: f64,
        #[serde(default = "default_shape")]
        off_shape: f64,
        #[serde(default = "default_interarrival_mean")]
        interarrival_mean: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    #[serde(flatten)]
    pub model: SourceModelConfig,
    #[serde(default = "default_start_time")]
    pub start_time: f64,
    /// Defaults to the scenario's data_bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_bytes: Option<u32>,
    /// Requested-class fractions; must sum to 1.
    #[serde(default = "default_class_mix")]
    pub class_mix: BTreeMap<ServiceClass, f64>,
}

impl Default for SourceConfig {
    /// The stock main-traffic source: 4 Mbps CBR, EF-requested, start 5 s.
    fn default() -> SourceConfig {
        SourceConfig {
            model: SourceModelConfig::Cbr {
                rate_bps: default_cbr_rate(),
            },
            start_time: default_start_time(),
            packet_bytes: None,
            class_mix: default_class_mix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_balancing")]
    pub balancing: Balancing,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_probing_period")]
    pub probing_period_s: f64,
    #[serde(default = "default_probe_bytes")]
    pub probe_bytes: u32,
    #[serde(default = "default_data_bytes")]
    pub data_bytes: u32,
    #[serde(default = "default_wfq_weights")]
    pub wfq_weights: ClassValues<f64>,
    #[serde(default = "default_buffer_pkts")]
    pub buffer_pkts: ClassValues<u32>,
    #[serde(default = "default_k")]
    pub k_s: f64,
    #[serde(default = "default_stats_window")]
    pub stats_window_s: f64,
    /// When set, probe arrivals also update the routers' averages.
    #[serde(default)]
    pub probes_update_ema: bool,
    #[serde(default = "default_probe_class")]
    pub probe_requested_class: ServiceClass,
    /// Empty means the single stock CBR source.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<SourceConfig>,
    /// Absent means the stock seven-router two-branch topology.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyConfig>,
    /// Reduced WFQ service rate per router, bits/second.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub router_overrides: BTreeMap<String, f64>,
}

fn default_balancing() -> Balancing {
    Balancing::TwoPath
}
fn default_duration() -> f64 {
    60.0
}
fn default_probing_period() -> f64 {
    0.5
}
fn default_probe_bytes() -> u32 {
    50
}
fn default_data_bytes() -> u32 {
    500
}
fn default_wfq_weights() -> ClassValues<f64> {
    ClassValues { ef: 0.22, af: 0.33, be: 0.44 }
}
fn default_buffer_pkts() -> ClassValues<u32> {
    ClassValues { ef: 24, af: 53, be: 374 }
}
fn default_k() -> f64 {
    0.01
}
fn default_stats_window() -> f64 {
    1.0
}
fn default_probe_class() -> ServiceClass {
    ServiceClass::Ef
}
fn default_cbr_rate() -> f64 {
    4.0e6
}
fn default_start_time() -> f64 {
    5.0
}
fn default_on_scale() -> f64 {
    40.0
}
fn default_off_scale() -> f64 {
    1.0
}
fn default_shape() -> f64 {
    1.4
}
fn default_interarrival_mean() -> f64 {
    0.001
}
fn default_link_capacity() -> f64 {
    4.5e6
}
fn default_class_mix() -> BTreeMap<ServiceClass, f64> {
    [(ServiceClass::Ef, 1.0)].into()
}

impl ScenarioConfig {
    /// A named scenario with every field at its stock value.
    pub fn with_defaults(name: &str) -> ScenarioConfig {
        toml::from_str(&format!("name = {name:?}")).expect("defaults are valid")
    }

    pub fn from_toml_str(raw: &str) -> Result<ScenarioConfig> {
        let config: ScenarioConfig =
            toml::from_str(raw).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<ScenarioConfig> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_toml_str(&raw)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The configured sources, or the stock CBR source when none are given.
    pub fn effective_sources(&self) -> Vec<SourceConfig> {
        if self.sources.is_empty() {
            vec![SourceConfig::default()]
        } else {
            self.sources.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |value: f64, field: &str| -> Result<()> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{field}: must be > 0, got {value}")))
            }
        };
        positive(self.duration_s, "duration_s")?;
        positive(self.probing_period_s, "probing_period_s")?;
        positive(self.stats_window_s, "stats_window_s")?;
        positive(self.k_s, "k_s")?;
        if self.probe_bytes == 0 {
            return Err(Error::Config("probe_bytes: must be >= 1".into()));
        }
        if self.data_bytes == 0 {
            return Err(Error::Config("data_bytes: must be >= 1".into()));
        }
        let w = &self.wfq_weights;
        for (v, f) in [(w.ef, "wfq_weights.ef"), (w.af, "wfq_weights.af"), (w.be, "wfq_weights.be")] {
            positive(v, f)?;
            if v > 1.0 {
                return Err(Error::Config(format!("{f}: must be <= 1, got {v}")));
            }
        }
        let wsum = w.ef + w.af + w.be;
        if wsum > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "wfq_weights: sum {wsum} exceeds 1"
            )));
        }
        for (v, f) in [
            (self.buffer_pkts.ef, "buffer_pkts.ef"),
            (self.buffer_pkts.af, "buffer_pkts.af"),
            (self.buffer_pkts.be, "buffer_pkts.be"),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{f}: must be >= 1")));
            }
        }
        for (i, source) in self.effective_sources().iter().enumerate() {
            let field = |name: &str| format!("sources[{i}].{name}");
            if !(source.start_time.is_finite() && source.start_time >= 0.0) {
                return Err(Error::Config(format!(
                    "{}: must be >= 0, got {}",
                    field("start_time"),
                    source.start_time
                )));
            }
            if source.packet_bytes == Some(0) {
                return Err(Error::Config(format!("{}: must be >= 1", field("packet_bytes"))));
            }
            match &source.model {
                SourceModelConfig::Cbr { rate_bps } => {
                    positive(*rate_bps, &field("rate_bps"))?;
                }
                SourceModelConfig::ParetoOnoff {
                    on_scale,
                    on_shape,
                    off_scale,
                    off_shape,
                    interarrival_mean,
                } => {
                    positive(*on_scale, &field("on_scale"))?;
                    positive(*off_scale, &field("off_scale"))?;
                    positive(*interarrival_mean, &field("interarrival_mean"))?;
                    for (v, f) in [(*on_shape, field("on_shape")), (*off_shape, field("off_shape"))] {
                        if !(v.is_finite() && v > 1.0) {
                            return Err(Error::Config(format!(
                                "{f}: shape must be > 1 for a finite mean, got {v}"
                            )));
                        }
                    }
                }
            }
            if source.class_mix.is_empty() {
                return Err(Error::Config(format!("{}: must not be empty", field("class_mix"))));
            }
            let mut mix_sum = 0.0;
            for (&class, &frac) in &source.class_mix {
                if !(0.0..=1.0).contains(&frac) {
                    return Err(Error::Config(format!(
                        "{}.{}: fraction must lie in [0, 1], got {frac}",
                        field("class_mix"),
                        class.name()
                    )));
                }
                mix_sum += frac;
            }
            if (mix_sum - 1.0).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "{}: fractions sum to {mix_sum}, expected 1",
                    field("class_mix")
                )));
            }
        }
        for (router, &rate) in &self.router_overrides {
            positive(rate, &format!("router_overrides.{router}"))?;
        }
        Ok(())
    }

    /// Resolve the topology section (or the stock topology) into a graph.
    pub fn build_topology(&self) -> Result<Topology> {
        let Some(tc) = &self.topology else {
            return Ok(default_topology());
        };
        let names = match &tc.nodes {
            Some(nodes) => nodes.clone(),
            None => {
                let mut names = Vec::new();
                let mut push = |n: &str| {
                    if !names.iter().any(|x| x == n) {
                        names.push(n.to_string());
                    }
                };
                push(&tc.source);
                push(&tc.destination);
                push(&tc.ingress);
                for l in &tc.links {
                    push(&l.from);
                    push(&l.to);
                }
                names
            }
        };
        let specs: Vec<LinkSpec<'_>> = tc
            .links
            .iter()
            .map(|l| LinkSpec {
                from: &l.from,
                to: &l.to,
                capacity_bps: l.capacity_bps,
                prop_delay_s: l.prop_delay_s,
            })
            .collect();
        Topology::from_parts(
            names,
            &tc.source,
            &tc.destination,
            &tc.ingress,
            &specs,
            tc.paths.clone(),
        )
    }

    pub fn class_configs(&self) -> ClassMap<ClassConfig> {
        ClassMap::from_fn(|c| ClassConfig {
            wfq_weight: self.wfq_weights.get(c),
            max_buffer_pkts: self.buffer_pkts.get(c),
        })
    }

    /// Source specs with packet sizes resolved against `data_bytes`.
    pub fn source_specs(&self) -> Vec<SourceSpec> {
        self.effective_sources()
            .iter()
            .map(|s| {
                let model = match &s.model {
                    SourceModelConfig::Cbr { rate_bps } => SourceModel::Cbr { rate_bps: *rate_bps },
                    SourceModelConfig::ParetoOnoff {
                        on_scale,
                        on_shape,
                        off_scale,
                        off_shape,
                        interarrival_mean,
                    } => SourceModel::ParetoOnOff {
                        on_scale: *on_scale,
                        on_shape: *on_shape,
                        off_scale: *off_scale,
                        off_shape: *off_shape,
                        interarrival_mean: *interarrival_mean,
                    },
                };
                // Class order gives the cumulative draw a fixed layout.
                let mut mix: Vec<(ServiceClass, f64)> =
                    s.class_mix.iter().map(|(&c, &f)| (c, f)).collect();
                mix.sort_by_key(|(c, _)| c.index());
                SourceSpec {
                    model,
                    start_time: s.start_time,
                    packet_bytes: s.packet_bytes.unwrap_or(self.data_bytes),
                    class_mix: mix,
                }
            })
            .collect()
    }
}

/// Everything the engine needs, resolved and validated.
pub struct CompiledScenario {
    pub topology: Topology,
    /// Candidate paths in id order: ("p1", hops), ("p2", hops), ...
    pub candidates: Vec<(String, Vec<NodeId>)>,
    pub n_select: usize,
    pub sources: Vec<SourceSpec>,
    pub class_configs: ClassMap<ClassConfig>,
    pub service_rates: BTreeMap<NodeId, f64>,
    pub probe_bits: u64,
    pub probing_period_s: f64,
    pub stats_window_s: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub k_s: f64,
    pub probes_update_ema: bool,
    pub probe_requested: ServiceClass,
}

impl ScenarioConfig {
    pub fn compile(&self, seed_override: Option<u64>) -> Result<CompiledScenario> {
        self.validate()?;
        let topology = self.build_topology()?;
        for link in topology.out_links(topology.source) {
            if link.to != topology.ingress {
                return Err(Error::Config(format!(
                    "topology: source must connect only to the ingress router, found link to {:?}",
                    topology.node_name(link.to)
                )));
            }
        }
        let mut hops_list = match &topology.candidate_paths {
            Some(paths) => paths.clone(),
            None => topology.discover_paths(2)?,
        };
        let n_select = match self.balancing {
            Balancing::SinglePath => {
                hops_list.truncate(1);
                1
            }
            Balancing::TwoPath => 2,
        };
        let candidates: Vec<(String, Vec<NodeId>)> = hops_list
            .into_iter()
            .enumerate()
            .map(|(i, hops)| (format!("p{}", i + 1), hops))
            .collect();
        let mut service_rates = BTreeMap::new();
        for router in topology.router_ids() {
            let default_rate = topology
                .out_links(router)
                .map(|l| l.capacity_bps)
                .fold(f64::INFINITY, f64::min);
            if default_rate.is_finite() {
                service_rates.insert(router, default_rate);
            }
        }
        for (name, &rate) in &self.router_overrides {
            let id = topology.node_id(name).ok_or_else(|| {
                Error::Config(format!("router_overrides.{name}: unknown router"))
            })?;
            if !service_rates.contains_key(&id) {
                return Err(Error::Config(format!(
                    "router_overrides.{name}: node is not a router"
                )));
            }
            service_rates.insert(id, rate);
        }
        Ok(CompiledScenario {
            topology,
            candidates,
            n_select,
            sources: self.source_specs(),
            class_configs: self.class_configs(),
            service_rates,
            probe_bits: self.probe_bytes as u64 * 8,
            probing_period_s: self.probing_period_s,
            stats_window_s: self.stats_window_s,
            duration_s: self.duration_s,
            seed: seed_override.unwrap_or(self.seed),
            k_s: self.k_s,
            probes_update_ema: self.probes_update_ema,
            probe_requested: self.probe_requested_class,
        })
    }
}
