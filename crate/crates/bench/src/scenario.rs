//! TOML scenario files.
//!
//! A file holds one scenario, or several under `[[scenario]]`:
//!
//! ```toml
//! name = "example-2"
//!
//! [channel]
//! a = 2.0
//! b = 2.0
//! noise = 1.0           # optional, default 1
//! bandwidth_mhz = 1.0   # optional, default 1
//!
//! [harvest]
//! instants = [0.0, 2.0, 4.0, 6.0]
//! source = [10.0, 9.0, 14.0, 8.0]
//! relay = [7.0, 5.0, 5.0, 5.0]
//! deadline = 7.0
//! ```
//!
//! Instead of `noise`/`bandwidth_mhz`, a `[channel.physical]` table with
//! `noise_density_w_per_hz`, `bandwidth_hz` and `path_loss_db` may be given.

use std::fs;
use std::path::Path;

use ehrelay::{AllocationResult, ChannelModel, EHProfile, GateFailure, PhysicalLink, PolicyOutcome, PolicyTag, Segment};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    Normalized {
        a: f64,
        b: f64,
        noise: f64,
        bandwidth_mhz: f64,
    },
    Physical {
        a: f64,
        b: f64,
        link: PhysicalLink,
    },
}

impl ChannelSpec {
    pub fn model(&self) -> ehrelay::Result<ChannelModel> {
        match *self {
            ChannelSpec::Normalized {
                a,
                b,
                noise,
                bandwidth_mhz,
            } => ChannelModel::with_bandwidth(a, b, noise, bandwidth_mhz),
            ChannelSpec::Physical { a, b, link } => ChannelModel::from_physical(a, b, link),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// The channel as written in the file.
    pub spec: ChannelSpec,
    /// Normalized channel derived from `spec`.
    pub channel: ChannelModel,
    pub profile: EHProfile,
}

impl Scenario {
    pub fn new(name: impl Into<String>, channel: ChannelModel, profile: EHProfile) -> Self {
        Self {
            name: name.into(),
            spec: ChannelSpec::Normalized {
                a: channel.a,
                b: channel.b,
                noise: channel.noise,
                bandwidth_mhz: channel.bandwidth_mhz,
            },
            channel,
            profile,
        }
    }

    /// Canonical TOML text; loading it gives back an identical scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioFile::from(self)).expect("scenario fields are plain TOML values")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    channel: ChannelSection,
    harvest: HarvestSection,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    a: f64,
    b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    physical: Option<PhysicalSection>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysicalSection {
    noise_density_w_per_hz: f64,
    bandwidth_hz: f64,
    path_loss_db: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarvestSection {
    instants: Vec<f64>,
    source: Vec<f64>,
    relay: Vec<f64>,
    deadline: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSet {
    scenario: Vec<ScenarioFile>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let channel = match s.spec {
            ChannelSpec::Normalized {
                a,
                b,
                noise,
                bandwidth_mhz,
            } => ChannelSection {
                a,
                b,
                noise: Some(noise),
                bandwidth_mhz: Some(bandwidth_mhz),
                physical: None,
            },
            ChannelSpec::Physical { a, b, link } => ChannelSection {
                a,
                b,
                noise: None,
                bandwidth_mhz: None,
                physical: Some(PhysicalSection {
                    noise_density_w_per_hz: link.noise_density_w_per_hz,
                    bandwidth_hz: link.bandwidth_hz,
                    path_loss_db: link.path_loss_db,
                }),
            },
        };
        ScenarioFile {
            name: s.name.clone(),
            channel,
            harvest: HarvestSection {
                instants: s.profile.instants().to_vec(),
                source: s.profile.e1().to_vec(),
                relay: s.profile.e2().to_vec(),
                deadline: s.profile.deadline(),
            },
        }
    }
}

impl ScenarioFile {
    fn validate(self, origin: &str) -> Result<Scenario> {
        let context = format!("{origin}: scenario `{}`", self.name);
        let invalid = |source| BenchError::Validation {
            context: context.clone(),
            source,
        };
        let c = self.channel;
        let spec = match c.physical {
            Some(p) => {
                if c.noise.is_some() || c.bandwidth_mhz.is_some() {
                    return Err(invalid(ehrelay::Error::Invalid(
                        "give either `noise`/`bandwidth_mhz` or a `physical` block, not both".into(),
                    )));
                }
                ChannelSpec::Physical {
                    a: c.a,
                    b: c.b,
                    link: PhysicalLink {
                        noise_density_w_per_hz: p.noise_density_w_per_hz,
                        bandwidth_hz: p.bandwidth_hz,
                        path_loss_db: p.path_loss_db,
                    },
                }
            }
            None => ChannelSpec::Normalized {
                a: c.a,
                b: c.b,
                noise: c.noise.unwrap_or(1.0),
                bandwidth_mhz: c.bandwidth_mhz.unwrap_or(1.0),
            },
        };
        let channel = spec.model().map_err(invalid)?;
        let h = self.harvest;
        let profile = EHProfile::new(h.instants, h.source, h.relay, h.deadline).map_err(invalid)?;
        Ok(Scenario {
            name: self.name,
            spec,
            channel,
            profile,
        })
    }
}

fn parse_error(origin: &str, text: &str, err: serde_path_to_error::Error<toml::de::Error>) -> BenchError {
    let field = err.path().to_string();
    let inner = err.into_inner();
    parse_error_at(origin, text, field, &inner)
}

fn parse_error_at(origin: &str, text: &str, field: String, err: &toml::de::Error) -> BenchError {
    let line = err
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    BenchError::Parse {
        origin: origin.to_string(),
        line,
        field,
        message: err.message().to_string(),
    }
}

/// Parses one or more scenarios from TOML text. `origin` labels errors.
pub fn parse_scenarios(text: &str, origin: &str) -> Result<Vec<Scenario>> {
    let de = toml::Deserializer::parse(text).map_err(|e| parse_error_at(origin, text, ".".into(), &e))?;
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error_at(origin, text, ".".into(), &e))?;
    let files = if table.contains_key("scenario") {
        let set: ScenarioSet = serde_path_to_error::deserialize(de).map_err(|e| parse_error(origin, text, e))?;
        set.scenario
    } else {
        vec![serde_path_to_error::deserialize(de).map_err(|e| parse_error(origin, text, e))?]
    };
    files.into_iter().map(|f| f.validate(origin)).collect()
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenarios(&text, &path.display().to_string())
}

/// Loads a file that must contain exactly one scenario.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let mut all = load_scenarios(path)?;
    if all.len() != 1 {
        return Err(BenchError::Validation {
            context: path.display().to_string(),
            source: ehrelay::Error::Invalid(format!("expected one scenario, found {}", all.len())),
        });
    }
    Ok(all.remove(0))
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    write(path, &scenario.to_toml())
}

/// Canonical text for a scenario set, as written by `gen`.
pub fn scenarios_to_toml(scenarios: &[Scenario]) -> String {
    let set = ScenarioSet {
        scenario: scenarios.iter().map(ScenarioFile::from).collect(),
    };
    toml::to_string(&set).expect("scenario fields are plain TOML values")
}

pub fn save_scenarios(scenarios: &[Scenario], path: &Path) -> Result<()> {
    write(path, &scenarios_to_toml(scenarios))
}

/// What `alloc` reports for one scenario and policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub policy: PolicyTag,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput: Option<f64>,
    pub source_segments: Vec<Segment>,
    pub relay_segments: Vec<Segment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub not_applicable: Option<GateFailure>,
}

impl ResultRecord {
    pub fn new(scenario: &Scenario, policy: PolicyTag, outcome: &PolicyOutcome) -> Self {
        match outcome {
            PolicyOutcome::Allocated(r) => Self {
                scenario: scenario.name.clone(),
                policy,
                applicable: true,
                throughput: Some(r.throughput),
                source_segments: r.source_segments(&scenario.profile),
                relay_segments: r.relay_segments(&scenario.profile),
                allocation: Some(r.clone()),
                not_applicable: None,
            },
            PolicyOutcome::NotApplicable(g) => Self {
                scenario: scenario.name.clone(),
                policy,
                applicable: false,
                throughput: None,
                source_segments: Vec::new(),
                relay_segments: Vec::new(),
                allocation: None,
                not_applicable: Some(g.clone()),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize to JSON") + "\n"
    }
}

pub fn save_result(record: &ResultRecord, path: &Path) -> Result<()> {
    write(path, &record.to_json())
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}
