//! Closed subgroups generated by cycle values and the factor-type rules built
//! on them.

use std::collections::BTreeSet;
use std::fmt;

use rug::Rational;

use crate::error::{Error, Result};
use crate::exits::{is_slim, stage_states, ExitPath, StageStates};
use crate::graph::{closed_walk_values, validate, GraphSpec, Vertex};
use crate::interval::Interval;
use crate::series::{classify_recurrence, gurevich_entropy, period, SeriesConfig, Verdict};
use crate::symbolic::{rational_gcd, Basis, SymbolicReal};

/// Closed subgroup of the reals generated by a finite set of exact values.
#[derive(Clone, Debug, PartialEq)]
pub enum Subgroup {
    Zero,
    /// `ℤ·β·generator` with `generator > 0`.
    Cyclic {
        generator: SymbolicReal,
        scaled: Interval,
    },
    Dense,
}

impl Subgroup {
    pub fn label(&self) -> &'static str {
        match self {
            Subgroup::Zero => "zero",
            Subgroup::Cyclic { .. } => "cyclic",
            Subgroup::Dense => "dense",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedSubgroup {
    pub group: Subgroup,
    /// Independent differences the group was generated from, unscaled.
    pub generators: Vec<SymbolicReal>,
    /// The reduction over the first half of the scan gave the same group.
    pub stable: bool,
    pub max_len: usize,
}

/// Reduces a set of exact values to the closed subgroup they generate,
/// scaled by `β`.
fn reduce(
    basis: &Basis,
    values: &[SymbolicReal],
    beta: &Interval,
) -> (Subgroup, Vec<SymbolicReal>) {
    let Some(first) = values.iter().find(|x| !x.is_zero()) else {
        return (Subgroup::Zero, Vec::new());
    };
    let mut ratios = Vec::new();
    for x in values.iter().filter(|x| !x.is_zero()) {
        match x.ratio_to(first) {
            Some(q) => ratios.push(q),
            None => return (Subgroup::Dense, vec![first.clone(), x.clone()]),
        }
    }
    let mut generator = first.scale(&rational_gcd(&ratios));
    if basis.sign(&generator).is_lt() {
        generator = generator.neg();
    }
    let scaled = beta * &basis.eval(&generator, beta.prec());
    (
        Subgroup::Cyclic {
            generator: generator.clone(),
            scaled,
        },
        vec![generator],
    )
}

fn differences(values: &BTreeSet<SymbolicReal>) -> Vec<SymbolicReal> {
    let mut it = values.iter();
    let Some(x0) = it.next() else {
        return Vec::new();
    };
    it.map(|x| x.sub(x0)).collect()
}

/// Subgroup generated by `β(F(μ) - F(μ'))` over loops `μ, μ'` at `v` of length
/// at most `max_len`.
pub fn cycle_value_group(
    spec: &GraphSpec,
    v: Vertex,
    beta: &Interval,
    max_len: usize,
) -> Result<ClosedSubgroup> {
    let by_len = closed_walk_values(spec, v, max_len);
    let upto =
        |m: usize| -> BTreeSet<SymbolicReal> { by_len[1..=m].iter().flatten().cloned().collect() };
    let all = upto(max_len);
    if all.is_empty() {
        return Err(Error::NoLoopFound {
            vertex: spec.vertex_name(v),
            max_len,
        });
    }
    let (group, generators) = reduce(spec.basis(), &differences(&all), beta);
    let (half, _) = reduce(spec.basis(), &differences(&upto(max_len / 2)), beta);
    let stable = match (&half, &group) {
        (Subgroup::Cyclic { generator: a, .. }, Subgroup::Cyclic { generator: b, .. }) => a == b,
        (a, b) => a.label() == b.label(),
    };
    Ok(ClosedSubgroup {
        group,
        generators,
        stable,
        max_len,
    })
}

/// Subgroup generated by `β(F(e_i) - F(e_j))` over edges of one step, for the
/// steps that repeat forever.
pub fn stage_ratio_group(
    spec: &GraphSpec,
    stages: &StageStates,
    beta: &Interval,
) -> ClosedSubgroup {
    let mut diffs = Vec::new();
    for s in &stages.period {
        if let Some(x0) = s.exponents.first() {
            diffs.extend(s.exponents.iter().skip(1).map(|x| x.sub(x0)));
        }
    }
    let (group, generators) = reduce(spec.basis(), &diffs, beta);
    ClosedSubgroup {
        group,
        generators,
        stable: true,
        max_len: stages.period.len(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FactorType {
    IFinite(u64),
    IInfinite,
    II1,
    IIInfinite,
    III0,
    IIILambda(Interval),
    III1,
}

impl FactorType {
    pub fn label(&self) -> &'static str {
        match self {
            FactorType::IFinite(_) => "I_n",
            FactorType::IInfinite => "I_inf",
            FactorType::II1 => "II_1",
            FactorType::IIInfinite => "II_inf",
            FactorType::III0 => "III_0",
            FactorType::IIILambda(_) => "III_lambda",
            FactorType::III1 => "III_1",
        }
    }

    pub fn lambda(&self) -> Option<&Interval> {
        match self {
            FactorType::IIILambda(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for FactorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorType::IFinite(n) => write!(f, "I_{n}"),
            FactorType::IIILambda(l) => write!(f, "III_lambda (lambda in {l})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    Boundary,
    Conservative,
    Exit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorVerdict {
    pub factor: FactorType,
    pub rule: String,
    pub subgroup: Option<ClosedSubgroup>,
    /// The subgroup scan had not stabilized.
    pub provisional: bool,
    pub caveats: Vec<String>,
}

const RULE_BOUNDARY: &str = "weights carried by a boundary path are of type I_inf";
const RULE_GAMMA: &str =
    "the Connes invariant of a conservative weight equals the closed cycle-value group; dense gives III_1, dZ gives III_{e^-d}";
const RULE_EXIT: &str = "an exit weight has the Connes invariant of the Araki-Woods factor of its step Gibbs states; a trivial group gives I_inf for slim exits and II_inf otherwise";

/// Type from a subgroup that is not zero.
fn type_from_group(g: &Subgroup) -> FactorType {
    match g {
        Subgroup::Dense => FactorType::III1,
        Subgroup::Cyclic { scaled, .. } => FactorType::IIILambda((-scaled).exp()),
        Subgroup::Zero => unreachable!("zero group handled by the caller"),
    }
}

pub fn classify_boundary() -> FactorVerdict {
    FactorVerdict {
        factor: FactorType::IInfinite,
        rule: RULE_BOUNDARY.into(),
        subgroup: None,
        provisional: false,
        caveats: Vec::new(),
    }
}

/// Factor type of the conservative weight at `β`, from loops at `v` up to `max_len`.
pub fn classify_conservative(
    spec: &GraphSpec,
    v: Vertex,
    beta: &Interval,
    max_len: usize,
    cfg: &SeriesConfig,
) -> Result<FactorVerdict> {
    if beta.contains_zero() {
        return Err(Error::InvalidHypothesis("β must be nonzero".into()));
    }
    let report = validate(spec, max_len)?;
    let mut caveats = Vec::new();
    if report.zero_cycle_found() {
        return Err(Error::InvalidHypothesis(format!(
            "zero-value cycle: {:?}",
            report.zero_cycle
        )));
    }
    caveats.push(format!(
        "no zero-value cycle up to length {max_len}; longer cycles unchecked"
    ));
    match classify_recurrence(spec, v, beta, cfg) {
        Ok(r) if r.verdict == Verdict::Recurrent => {}
        Ok(r) => caveats.push(format!(
            "conservativity not certified at this β: recurrence verdict {:?}",
            r.verdict
        )),
        Err(e) => caveats.push(format!("recurrence not checked: {e}")),
    }
    let group = cycle_value_group(spec, v, beta, max_len)?;
    if group.group == Subgroup::Zero {
        return Err(Error::InvalidHypothesis("all loop values coincide".into()));
    }
    Ok(FactorVerdict {
        factor: type_from_group(&group.group),
        rule: RULE_GAMMA.into(),
        provisional: !group.stable,
        subgroup: Some(group),
        caveats,
    })
}

pub fn classify_exit(spec: &GraphSpec, exit: &ExitPath, beta: &Interval) -> Result<FactorVerdict> {
    let states = stage_states(spec, exit, beta);
    if states.period.is_empty() {
        return Err(Error::NotEventuallyPeriodic);
    }
    let group = stage_ratio_group(spec, &states, beta);
    let factor = match group.group {
        Subgroup::Zero if is_slim(spec, exit) => FactorType::IInfinite,
        Subgroup::Zero => FactorType::IIInfinite,
        ref g => type_from_group(g),
    };
    Ok(FactorVerdict {
        factor,
        rule: RULE_EXIT.into(),
        subgroup: Some(group),
        provisional: false,
        caveats: vec!["extremality of the exit weight is assumed".into()],
    })
}

/// `e^{-d h}` from the period `d` and the entropy `h` at `v`; for the constant
/// potential 1 at the critical point this is the `λ` of the conservative weight.
pub fn lambda_from_entropy(spec: &GraphSpec, v: Vertex, cfg: &SeriesConfig) -> Result<Interval> {
    let d = period(spec, v, cfg.n_max.min(200))?;
    let h = gurevich_entropy(spec, v, cfg.n_max, cfg.precision)?;
    Ok((-h.interval.mul_rational(&Rational::from(d.period))).exp())
}
