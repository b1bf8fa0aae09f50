//! Exit paths of ray templates: step products `t^β(i)`, β-summability, the
//! exit measures `m_t`, slimness and the per-step Gibbs data.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphSpec, Vertex};
use crate::interval::Interval;
use crate::series::{
    classify_recurrence, edge_weights, geometric_tail, SeriesConfig, Verdict, WalkEngine,
};
use crate::symbolic::SymbolicReal;

/// Largest relative width accepted for the limit over the exit window.
const LIMIT_REL_WIDTH: f64 = 1e-6;

/// A vertex ray `t_1, t_2, …` following one cycle of the forward stage map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitPath {
    name: String,
    start: Option<Vertex>,
    /// Local vertex at stage `1 + j`, repeating with the cycle length.
    cycle: Vec<u32>,
}

impl ExitPath {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Base vertex the ray is attached to, used as `t_1`.
    pub fn start(&self) -> Option<Vertex> {
        self.start
    }

    pub fn cycle_len(&self) -> usize {
        self.cycle.len()
    }

    /// `t_i`, for `i ≥ 1`.
    pub fn vertex(&self, i: u64) -> Vertex {
        assert!(i >= 1, "exit vertices are numbered from 1");
        let stage = match self.start {
            Some(b) if i == 1 => return b,
            Some(_) => i - 1,
            None => i,
        };
        Vertex::Stage {
            stage,
            local: self.cycle[((stage - 1) % self.cycle.len() as u64) as usize],
        }
    }

    /// Edges `t_i → t_{i+1}`.
    pub fn step_edges(&self, spec: &GraphSpec, i: u64) -> Vec<Edge> {
        let next = self.vertex(i + 1);
        spec.out_edges(self.vertex(i))
            .into_iter()
            .filter(|e| e.dst == next)
            .collect()
    }

    /// `k_i`, the number of edges from `t_i` to `t_{i+1}`.
    pub fn step_count(&self, spec: &GraphSpec, i: u64) -> usize {
        self.step_edges(spec, i).len()
    }

    /// Index of the first step between two stage vertices.
    fn first_stage_step(&self) -> u64 {
        if self.start.is_some() {
            2
        } else {
            1
        }
    }

    /// `k_i` over one repetition of the stage cycle; the sequence repeats from there on.
    pub fn tail_counts(&self, spec: &GraphSpec) -> Vec<usize> {
        let i0 = self.first_stage_step();
        let reps = spec.template().map_or(1, |t| t.period()).max(1);
        let len = lcm(self.cycle.len(), reps) as u64;
        (i0..i0 + len).map(|i| self.step_count(spec, i)).collect()
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// One exit per elementary cycle of the forward map on `(phase, local)`
/// pairs that passes through phase 0.
pub fn canonical_exits(spec: &GraphSpec) -> Result<Vec<ExitPath>> {
    let t = spec
        .template()
        .ok_or_else(|| Error::Domain("finite graphs have no exits".into()))?;
    let p = t.period();
    let n = t.locals().len();
    let node = |phase: usize, local: u32| phase * n + local as usize;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); p * n];
    for phase in 0..p {
        let stage = phase as u64 + 1;
        for l in 0..n as u32 {
            for e in spec.out_edges(Vertex::Stage { stage, local: l }) {
                if let Vertex::Stage {
                    stage: s2,
                    local: l2,
                } = e.dst
                {
                    let target = node((phase + 1) % p, l2);
                    if s2 == stage + 1 && !succ[node(phase, l)].contains(&target) {
                        succ[node(phase, l)].push(target);
                    }
                }
            }
        }
    }
    for s in &mut succ {
        s.sort_unstable();
    }
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        // Elementary cycles whose smallest phase-0 node is `root`.
        let mut stack = vec![(root, 0usize)];
        let mut path = vec![root];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next >= succ[u].len() {
                stack.pop();
                path.pop();
                continue;
            }
            let w = succ[u][*next];
            *next += 1;
            if w == root {
                cycles.push(path.clone());
            } else if !path.contains(&w) && !(w < n && w < root) {
                path.push(w);
                stack.push((w, 0));
            }
        }
    }
    let base_start = |local: u32| {
        spec.base_vertices().find(|&b| {
            spec.out_edges(b)
                .iter()
                .any(|e| e.dst == Vertex::Stage { stage: 1, local })
        })
    };
    Ok(cycles
        .into_iter()
        .map(|c| {
            let cycle: Vec<u32> = c.iter().map(|&x| (x % n) as u32).collect();
            let mut names: Vec<&str> = Vec::new();
            for &l in &cycle {
                let s = t.locals()[l as usize].as_str();
                if !names.contains(&s) {
                    names.push(s);
                }
            }
            ExitPath {
                name: names.join("/"),
                start: base_start(cycle[0]),
                cycle,
            }
        })
        .collect())
}

pub fn find_exit(spec: &GraphSpec, name: &str) -> Result<ExitPath> {
    canonical_exits(spec)?
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownExit(name.to_string()))
}

/// Eventually one edge per step.
pub fn is_slim(spec: &GraphSpec, exit: &ExitPath) -> bool {
    exit.tail_counts(spec).iter().all(|&k| k == 1)
}

/// `t^β(1), …, t^β(i_max)` with `t^β(1) = 1`.
pub fn t_beta(spec: &GraphSpec, exit: &ExitPath, beta: &Interval, i_max: u64) -> Vec<Interval> {
    let weights = edge_weights(spec, beta);
    let mut out = vec![Interval::one(beta.prec())];
    for i in 1..i_max {
        let a = exit
            .step_edges(spec, i)
            .iter()
            .fold(Interval::zero(beta.prec()), |acc, e| {
                &acc + &weights[e.pot as usize]
            });
        let next = &out[i as usize - 1] * &a;
        out.push(next);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Summability {
    /// Enclosure of `lim_i t^β(i)^{-1} Σ_n A(β)^n_{v t_i}` over the exit window.
    Summable {
        value: Interval,
        window: (u64, u64),
    },
    NotSummable {
        reason: String,
    },
    Undecided {
        reason: String,
    },
}

/// β-summability of the exit, read at its first vertex.
pub fn summability(
    spec: &GraphSpec,
    exit: &ExitPath,
    beta: &Interval,
    cfg: &SeriesConfig,
) -> Result<Summability> {
    let root = exit.vertex(1);
    let verdict = classify_recurrence(spec, root, beta, cfg)?;
    match verdict.verdict {
        Verdict::Transient => limit_ratio(spec, exit, beta, root, cfg),
        Verdict::Recurrent | Verdict::Supercritical => Ok(Summability::NotSummable {
            reason: format!("Σ f_n = {} makes Σ_n A^n diverge", verdict.sum),
        }),
        Verdict::Undecided => Ok(Summability::Undecided {
            reason: format!("recurrence undecided, Σ f_n ⊆ {}", verdict.sum),
        }),
    }
}

fn summable_value(s: Summability) -> Result<Interval> {
    match s {
        Summability::Summable { value, .. } => Ok(value),
        Summability::NotSummable { reason } => Err(Error::Divergent(reason)),
        Summability::Undecided { reason } => Err(Error::UndecidedAtPrecision(reason)),
    }
}

/// `m_t(Z(v))`.
pub fn exit_measure(
    spec: &GraphSpec,
    exit: &ExitPath,
    beta: &Interval,
    v: Vertex,
    cfg: &SeriesConfig,
) -> Result<Interval> {
    let at_root = summable_value(summability(spec, exit, beta, cfg)?)?;
    if v == exit.vertex(1) {
        return Ok(at_root);
    }
    summable_value(limit_ratio(spec, exit, beta, v, cfg)?)
}

/// Mass `Σ_{ξ} m_t(Z(ξ)) = t^β(n+1) m_t(Z(t_{n+1}))` of the ascent prefixes `ξ`
/// of length `n`, for `n = 0..=depth`.
pub fn ascent_masses(
    spec: &GraphSpec,
    exit: &ExitPath,
    beta: &Interval,
    depth: u64,
    cfg: &SeriesConfig,
) -> Result<Vec<Interval>> {
    let mut out = vec![summable_value(summability(spec, exit, beta, cfg)?)?];
    let tb = t_beta(spec, exit, beta, depth + 1);
    for n in 1..=depth {
        let m = summable_value(limit_ratio(spec, exit, beta, exit.vertex(n + 1), cfg)?)?;
        out.push(&tb[n as usize] * &m);
    }
    Ok(out)
}

fn limit_ratio(
    spec: &GraphSpec,
    exit: &ExitPath,
    beta: &Interval,
    v: Vertex,
    cfg: &SeriesConfig,
) -> Result<Summability> {
    let prec = cfg.precision;
    let beta = beta.clone().with_prec(prec);
    let reach = (cfg.n_max / 8).max(8) as u64;
    let i_max = v.stage() + reach;
    let i_lo = i_max - reach / 4;
    let engine = WalkEngine::new(spec, v, cfg.n_max)?;
    let trunc = engine.truncation();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (j, i) in (i_lo..=i_max).enumerate() {
        let idx = trunc.index_of(exit.vertex(i)).ok_or_else(|| {
            Error::OutOfRegion(format!("exit vertex {i} is beyond the truncation"))
        })?;
        slot.insert(idx, j);
    }
    let width = (i_max - i_lo + 1) as usize;
    let mut series: Vec<Vec<Interval>> = vec![Vec::with_capacity(cfg.n_max); width];
    let mut partial: Vec<Interval> = vec![Interval::zero(prec); width];
    if let Some(&j) = slot.get(&engine.root()) {
        partial[j] = Interval::one(prec);
    }
    let weights = edge_weights(spec, &beta);
    engine.propagate(
        engine.root(),
        &weights,
        prec,
        cfg.n_max,
        Default::default(),
        |_, x, support| {
            for s in series.iter_mut() {
                s.push(Interval::zero(prec));
            }
            for &w in support {
                if let Some(&j) = slot.get(&(w as usize)) {
                    *series[j].last_mut().unwrap() = x[w as usize].clone();
                    partial[j] = &partial[j] + &x[w as usize];
                }
            }
            ControlFlow::Continue(())
        },
    );
    let tb = t_beta(spec, exit, &beta, i_max);
    let mut hull: Option<Interval> = None;
    for (j, i) in (i_lo..=i_max).enumerate() {
        let Some(tail) = geometric_tail(&series[j]) else {
            return Ok(Summability::Undecided {
                reason: format!("no certified ratio bound for the series at t_{i}"),
            });
        };
        let ratio = (&partial[j] + &tail).checked_div(&tb[i as usize - 1])?;
        hull = Some(match hull {
            None => ratio,
            Some(h) => h.hull(&ratio),
        });
    }
    let value = hull.expect("nonempty window");
    if value.width_f64() > LIMIT_REL_WIDTH * value.mag().to_f64().max(f64::MIN_POSITIVE) {
        return Ok(Summability::Undecided {
            reason: format!("ratios over the window spread over {value}"),
        });
    }
    Ok(Summability::Summable {
        value,
        window: (i_lo, i_max),
    })
}

/// Gibbs weights of one step: `e^{-βF(e_j)} / Z` over the step edges.
#[derive(Clone, Debug, PartialEq)]
pub struct StageState {
    pub exponents: Vec<SymbolicReal>,
    pub probabilities: Vec<Interval>,
}

/// Step data: the steps before the stage pattern starts, then one repetition of it.
#[derive(Clone, Debug, PartialEq)]
pub struct StageStates {
    pub prefix: Vec<StageState>,
    pub period: Vec<StageState>,
}

pub fn stage_states(spec: &GraphSpec, exit: &ExitPath, beta: &Interval) -> StageStates {
    let prec = beta.prec();
    let state = |i: u64| {
        let edges = exit.step_edges(spec, i);
        let exponents: Vec<SymbolicReal> =
            edges.iter().map(|e| spec.potential(e).clone()).collect();
        let weights: Vec<Interval> = exponents
            .iter()
            .map(|f| (-(beta * &spec.basis().eval(f, prec))).exp())
            .collect();
        let z = weights.iter().fold(Interval::zero(prec), |acc, w| &acc + w);
        let probabilities = weights
            .iter()
            .map(|w| w.checked_div(&z).expect("positive partition sum"))
            .collect();
        StageState {
            exponents,
            probabilities,
        }
    };
    let i0 = exit.first_stage_step();
    let len = exit.tail_counts(spec).len() as u64;
    StageStates {
        prefix: (1..i0).map(state).collect(),
        period: (i0..i0 + len).map(state).collect(),
    }
}
