//! Serializable report types and their JSON/text rendering.

use std::collections::BTreeMap;

use kmsgraph::classify::{ClosedSubgroup, FactorVerdict, Subgroup};
use kmsgraph::geodesics::{BratteliDiagram, BratteliSummary};
use kmsgraph::series::{PeriodReport, RecurrenceVerdict, Verdict};
use kmsgraph::{Basis, GraphSpec, Interval, ValidationReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Decimal digits used for interval endpoints.
pub const DIGITS: usize = 20;

/// Outward-rounded `[lo, hi]` as decimal strings.
pub type IntervalJson = [String; 2];

pub fn interval(x: &Interval) -> IntervalJson {
    x.to_decimal_pair(DIGITS)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub spec_name: String,
    pub spec_sha256: String,
    pub precision_bits: u32,
    pub n_max: usize,
    pub tol: f64,
}

impl Header {
    pub fn new(spec: &GraphSpec, precision_bits: u32, n_max: usize, tol: f64) -> Self {
        let digest = Sha256::digest(spec.to_canonical_json().as_bytes());
        Header {
            tool: "kmsgraph".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            spec_name: spec.name().to_string(),
            spec_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            precision_bits,
            n_max,
            tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub header: Header,
    pub validation: ValidationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceJson {
    pub verdict: Verdict,
    pub sum: IntervalJson,
    pub partial: IntervalJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<IntervalJson>,
    pub n_used: usize,
}

impl From<&RecurrenceVerdict> for RecurrenceJson {
    fn from(r: &RecurrenceVerdict) -> Self {
        RecurrenceJson {
            verdict: r.verdict,
            sum: interval(&r.sum),
            partial: interval(&r.partial),
            tail: r.tail.as_ref().map(interval),
            n_used: r.n_used,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_at_beta: Option<IntervalJson>,
    pub generators: Vec<String>,
    pub stable: bool,
    pub max_len: usize,
}

impl SubgroupJson {
    pub fn new(basis: &Basis, g: &ClosedSubgroup) -> Self {
        let (generator, generator_at_beta) = match &g.group {
            Subgroup::Cyclic { generator, scaled } => {
                (Some(basis.display(generator)), Some(interval(scaled)))
            }
            _ => (None, None),
        };
        SubgroupJson {
            kind: g.group.label().to_string(),
            generator,
            generator_at_beta,
            generators: g.generators.iter().map(|x| basis.display(x)).collect(),
            stable: g.stable,
            max_len: g.max_len,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorJson {
    #[serde(rename = "type")]
    pub factor_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<IntervalJson>,
    pub rule: String,
    pub provisional: bool,
    pub caveats: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<SubgroupJson>,
}

impl FactorJson {
    pub fn new(basis: &Basis, v: &FactorVerdict) -> Self {
        FactorJson {
            factor_type: v.factor.label().to_string(),
            n: match v.factor {
                kmsgraph::classify::FactorType::IFinite(n) => Some(n),
                _ => None,
            },
            lambda: v.factor.lambda().map(interval),
            rule: v.rule.clone(),
            provisional: v.provisional,
            caveats: v.caveats.clone(),
            subgroup: v.subgroup.as_ref().map(|g| SubgroupJson::new(basis, g)),
        }
    }
}

/// A computed value or the reason it could not be computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicJson {
    pub status: String,
    pub critical: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_radius: Option<IntervalJson>,
    pub values: BTreeMap<String, IntervalJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SummabilityJson {
    Summable {
        value: IntervalJson,
        window: (u64, u64),
    },
    NotSummable {
        reason: String,
    },
    Undecided {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitJson {
    pub name: String,
    pub cycle_len: usize,
    pub step_counts: Vec<usize>,
    pub slim: bool,
    pub summability: Outcome<SummabilityJson>,
    pub factor: Outcome<FactorJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub header: Header,
    pub vertex: String,
    pub beta: IntervalJson,
    pub validation: ValidationReport,
    pub period: Outcome<PeriodReport>,
    pub recurrence: Outcome<RecurrenceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_critical: Option<Outcome<IntervalJson>>,
    pub harmonic: Outcome<HarmonicJson>,
    pub gamma: Outcome<SubgroupJson>,
    pub conservative_factor: Outcome<FactorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_factor: Option<FactorJson>,
    pub exits: Vec<ExitJson>,
    pub ground_states: Outcome<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCriticalReport {
    pub header: Header,
    pub vertex: String,
    pub beta_critical: IntervalJson,
    pub iterations: usize,
    pub harmonic_threshold: Outcome<[f64; 2]>,
    /// Both routes locate the same `β` to within the bisection tolerances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routes_agree: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    pub lambda: IntervalJson,
    pub abs_difference: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorTypeReport {
    pub header: Header,
    pub kind: String,
    pub beta: IntervalJson,
    pub vertex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<String>,
    pub factor: FactorJson,
    /// `e^{-d h}` at the critical point, for constant potential 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_lambda: Option<EntropyCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassJson {
    pub endpoint: String,
    pub f_value: String,
    pub multiplicity: u64,
    pub members: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: usize,
    pub to: usize,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SummaryJson {
    FiniteSimplex { extreme_points: usize },
    Uhf { ratios: Vec<u64> },
    Af { dimensions: Vec<Vec<u64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStatesReport {
    pub header: Header,
    pub vertex: String,
    pub levels: Vec<Vec<ClassJson>>,
    pub edges: Vec<Vec<EdgeJson>>,
    pub summary: SummaryJson,
    pub description: String,
    pub note: String,
}

fn small(x: u128) -> Result<u64, String> {
    u64::try_from(x).map_err(|_| format!("multiplicity {x} exceeds 64 bits"))
}

impl GroundStatesReport {
    pub fn new(
        header: Header,
        spec: &GraphSpec,
        vertex: String,
        d: &BratteliDiagram,
    ) -> Result<Self, String> {
        let basis = spec.basis();
        let levels = d
            .levels
            .iter()
            .map(|lvl| {
                lvl.iter()
                    .map(|c| {
                        Ok(ClassJson {
                            endpoint: spec.vertex_name(c.endpoint),
                            f_value: basis.display(&c.value),
                            multiplicity: small(c.multiplicity)?,
                            members: c.members.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, String>>()
            })
            .collect::<Result<Vec<_>, String>>()?;
        let edges = d
            .edges
            .iter()
            .map(|lvl| {
                lvl.iter()
                    .map(|e| {
                        Ok(EdgeJson {
                            from: e.from,
                            to: e.to,
                            count: small(e.count)?,
                        })
                    })
                    .collect::<Result<Vec<_>, String>>()
            })
            .collect::<Result<Vec<_>, String>>()?;
        let summary = match &d.summary {
            BratteliSummary::FiniteSimplex(k) => SummaryJson::FiniteSimplex { extreme_points: *k },
            BratteliSummary::Uhf { ratios } => SummaryJson::Uhf {
                ratios: ratios.iter().map(|&r| small(r)).collect::<Result<_, _>>()?,
            },
            BratteliSummary::Af { dimensions } => SummaryJson::Af {
                dimensions: dimensions
                    .iter()
                    .map(|l| l.iter().map(|&r| small(r)).collect::<Result<_, _>>())
                    .collect::<Result<_, _>>()?,
            },
        };
        Ok(GroundStatesReport {
            header,
            vertex,
            levels,
            edges,
            summary,
            description: kmsgraph::geodesics::ground_state_summary(d),
            note: kmsgraph::geodesics::GROUND_STATE_NOTE.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExamplesReport {
    pub examples: Vec<String>,
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize to JSON");
    let mut s = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Flattened `path: value` lines, one per leaf.
pub fn to_text<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize to JSON");
    let mut out = String::new();
    flatten(&value, String::new(), &mut out);
    out
}

fn flatten(v: &Value, path: String, out: &mut String) {
    let leaf = |out: &mut String, s: String| {
        out.push_str(if path.is_empty() { "value" } else { &path });
        out.push_str(": ");
        out.push_str(&s);
        out.push('\n');
    };
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, x) in m {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten(x, p, out);
            }
        }
        Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_string) => {
            leaf(out, format!("[{}, {}]", str_of(&a[0]), str_of(&a[1])));
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = a.iter().map(scalar).collect();
            leaf(out, format!("[{}]", parts.join(", ")));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(x, format!("{path}[{i}]"), out);
            }
        }
        other => leaf(out, scalar(other)),
    }
}

fn str_of(v: &Value) -> &str {
    v.as_str().unwrap_or_default()
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
