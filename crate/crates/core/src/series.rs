//! Loop and first-return series of the weighted transfer matrix `A(β)`.
//!
//! `A(β)_{vw} = Σ e^{-βF(e)}` over edges `e: v → w`. Powers of `A` at the
//! root are computed by forward propagation on a truncation large enough to
//! contain every relevant walk, so each entry is exact up to interval
//! rounding. First returns come from the same propagation with the root
//! made absorbing.

use std::ops::ControlFlow;

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{closed_walk_values, truncate, GraphSpec, Truncation, Vertex};
use crate::interval::{Interval, DEFAULT_PRECISION};

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesConfig {
    pub n_max: usize,
    pub precision: u32,
    pub tol: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            n_max: 400,
            precision: DEFAULT_PRECISION,
            tol: 1e-9,
        }
    }
}

/// `e^{-βF}` for every entry of the potential table.
pub fn edge_weights(spec: &GraphSpec, beta: &Interval) -> Vec<Interval> {
    let prec = beta.prec();
    spec.potentials()
        .iter()
        .map(|p| (-(beta * &spec.basis().eval(p, prec))).exp())
        .collect()
}

/// A truncation prepared for repeated propagation at different `β`.
#[derive(Clone, Debug)]
pub struct WalkEngine {
    trunc: Truncation,
    adj: Vec<Vec<(u32, u32)>>,
    to_root: Vec<usize>,
}

/// Per-run options for [`WalkEngine::propagate`].
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Walk {
    /// Vertex whose mass is removed after every step.
    pub taboo: Option<usize>,
    /// Drop mass that cannot return to the root within this many total steps.
    pub horizon: Option<usize>,
}

impl WalkEngine {
    pub fn new(spec: &GraphSpec, root: Vertex, radius: usize) -> Result<Self> {
        spec.require_row_finite()?;
        let trunc = truncate(spec, root, radius.max(1))?;
        let adj = trunc.adjacency();
        let mut to_root = vec![usize::MAX; trunc.len()];
        let r = trunc.root();
        to_root[r] = 0;
        let mut queue = std::collections::VecDeque::from([r]);
        while let Some(w) = queue.pop_front() {
            for &e in trunc.in_edges(w) {
                let u = trunc.source(e);
                if to_root[u] == usize::MAX {
                    to_root[u] = to_root[w] + 1;
                    queue.push_back(u);
                }
            }
        }
        Ok(WalkEngine {
            trunc,
            adj,
            to_root,
        })
    }

    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    pub fn root(&self) -> usize {
        self.trunc.root()
    }

    /// Runs `x_n = x_{n-1} A` from the unit vector at `start`, calling `visit`
    /// with the step number, the new vector and its support.
    pub(crate) fn propagate<F>(
        &self,
        start: usize,
        weights: &[Interval],
        prec: u32,
        steps: usize,
        walk: Walk,
        mut visit: F,
    ) where
        F: FnMut(usize, &[Interval], &[u32]) -> ControlFlow<()>,
    {
        let n = self.adj.len();
        let mut cur = vec![Interval::zero(prec); n];
        let mut nxt = vec![Interval::zero(prec); n];
        let mut in_next = vec![false; n];
        let mut active: Vec<u32> = vec![start as u32];
        cur[start] = Interval::one(prec);
        let mut scratch = Float::new(prec);
        for step in 1..=steps {
            let mut next_active = Vec::with_capacity(active.len() + 4);
            let budget = walk.horizon.map(|h| h.saturating_sub(step));
            for &u in &active {
                let xu = &cur[u as usize];
                if xu.hi().is_zero() {
                    continue;
                }
                for &(w, p) in &self.adj[u as usize] {
                    let wi = w as usize;
                    if budget.is_some_and(|b| self.to_root[wi] > b) {
                        continue;
                    }
                    if !in_next[wi] {
                        in_next[wi] = true;
                        nxt[wi].set_zero();
                        next_active.push(w);
                    }
                    nxt[wi].add_mul_nonneg(xu, &weights[p as usize], &mut scratch);
                }
            }
            for &w in &next_active {
                in_next[w as usize] = false;
            }
            let flow = visit(step, &nxt, &next_active);
            if let Some(t) = walk.taboo {
                if next_active.contains(&(t as u32)) {
                    nxt[t].set_zero();
                }
            }
            std::mem::swap(&mut cur, &mut nxt);
            active = next_active;
            if flow.is_break() {
                break;
            }
        }
    }

    /// Root entries of `A^n` (or of the taboo walk) for `n = 0..=steps`.
    fn root_series(
        &self,
        weights: &[Interval],
        prec: u32,
        steps: usize,
        first_return: bool,
    ) -> Vec<Interval> {
        let r = self.root();
        let mut out = vec![if first_return {
            Interval::zero(prec)
        } else {
            Interval::one(prec)
        }];
        let walk = Walk {
            taboo: first_return.then_some(r),
            horizon: Some(steps),
        };
        self.propagate(r, weights, prec, steps, walk, |_, x, support| {
            out.push(if support.contains(&(r as u32)) {
                x[r].clone()
            } else {
                Interval::zero(prec)
            });
            ControlFlow::Continue(())
        });
        out.resize(steps + 1, Interval::zero(prec));
        out
    }

    /// Exact walk counts at the root, ignoring potentials.
    pub fn root_counts(&self, steps: usize, first_return: bool) -> Vec<Integer> {
        let n = self.adj.len();
        let r = self.root();
        let mut cur = vec![Integer::new(); n];
        let mut nxt = vec![Integer::new(); n];
        cur[r] = Integer::from(1);
        let mut out = vec![Integer::from(if first_return { 0 } else { 1 })];
        for step in 1..=steps {
            let budget = steps - step;
            for x in nxt.iter_mut() {
                *x = Integer::new();
            }
            for (u, xu) in cur.iter().enumerate() {
                if *xu == 0 {
                    continue;
                }
                for &(w, _) in &self.adj[u] {
                    if self.to_root[w as usize] <= budget {
                        nxt[w as usize] += xu;
                    }
                }
            }
            out.push(nxt[r].clone());
            if first_return {
                nxt[r] = Integer::new();
            }
            std::mem::swap(&mut cur, &mut nxt);
        }
        out
    }

    /// Recurrence verdict at the given edge weights.
    pub fn classify(&self, weights: &[Interval], cfg: &SeriesConfig) -> RecurrenceVerdict {
        let prec = cfg.precision;
        let r = self.root();
        let mut f = vec![Interval::zero(prec)];
        let mut partial = Interval::zero(prec);
        let walk = Walk {
            taboo: Some(r),
            horizon: Some(cfg.n_max),
        };
        self.propagate(r, weights, prec, cfg.n_max, walk, |_, x, support| {
            let v = if support.contains(&(r as u32)) {
                x[r].clone()
            } else {
                Interval::zero(prec)
            };
            partial = &partial + &v;
            f.push(v);
            if partial.certainly_gt_f64(1.0 + cfg.tol) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        verdict_from_series(&f, partial, cfg)
    }
}

fn verdict_from_series(f: &[Interval], partial: Interval, cfg: &SeriesConfig) -> RecurrenceVerdict {
    let n_used = f.len() - 1;
    let tail = if partial.certainly_gt_f64(1.0 + cfg.tol) {
        None
    } else {
        geometric_tail(&f[1..])
    };
    let sum = match &tail {
        Some(t) => &partial + t,
        None => partial.clone(),
    };
    let verdict =
        if tail.is_some() && sum.lo_f64() >= 1.0 - cfg.tol && sum.hi_f64() <= 1.0 + cfg.tol {
            Verdict::Recurrent
        } else if partial.certainly_gt_f64(1.0) {
            Verdict::Supercritical
        } else if tail.is_some() && sum.certainly_lt_f64(1.0) {
            Verdict::Transient
        } else {
            Verdict::Undecided
        };
    RecurrenceVerdict {
        verdict,
        sum,
        partial,
        tail,
        n_used,
    }
}

impl RecurrenceVerdict {
    /// Strict comparison of `Σ f_n` with 1, ignoring the recurrence tolerance.
    fn side(&self) -> Side {
        if self.partial.certainly_gt_f64(1.0) {
            Side::Below
        } else if self.tail.is_some() && self.sum.certainly_lt_f64(1.0) {
            Side::Above
        } else {
            Side::Unknown
        }
    }
}

/// Bound on `Σ_{n > N} a_n` for a nonnegative sequence `a_1..a_N`, read off
/// the ratios of block sums over the final quarter of the data.
///
/// Blocks of size 1 to 8 are tried so periodic zero patterns do not spoil the
/// ratio; the bound is the geometric continuation of the last block at the
/// worst observed ratio, doubled. Returns `[0, 0]` when the final window is
/// identically zero and `None` when no block size yields a ratio below 1.
pub(crate) fn geometric_tail(seq: &[Interval]) -> Option<Interval> {
    let prec = seq.first().map_or(DEFAULT_PRECISION, Interval::prec);
    let n = seq.len();
    if n < 8 {
        return None;
    }
    let mut best: Option<Float> = None;
    for block in 1..=8usize {
        let m = n / block;
        if m < 8 {
            break;
        }
        // g[0] is the block ending at the last entry.
        let g: Vec<Interval> = (0..m)
            .map(|j| {
                let end = n - j * block;
                seq[end - block..end]
                    .iter()
                    .fold(Interval::zero(prec), |acc, x| &acc + x)
            })
            .collect();
        let window = (m / 4).max(4);
        if g[..window].iter().all(|x| x.hi().is_zero()) {
            return Some(Interval::zero(prec));
        }
        if !g[..window].iter().all(Interval::is_positive) {
            continue;
        }
        let mut q = Float::new(prec);
        for j in 0..window - 1 {
            // ratio of a later block to the one before it
            let ratio =
                Float::with_val_round(prec, g[j].hi() / g[j + 1].lo(), rug::float::Round::Up).0;
            if ratio > q {
                q = ratio;
            }
        }
        if q >= 1 {
            continue;
        }
        let one_minus = Float::with_val_round(prec, 1 - &q, rug::float::Round::Down).0;
        let bound = Float::with_val_round(prec, g[0].hi() * &q, rug::float::Round::Up).0;
        let bound =
            Float::with_val_round(prec, &bound / &one_minus, rug::float::Round::Up).0 * 2u32;
        if best.as_ref().is_none_or(|b| bound < *b) {
            best = Some(bound);
        }
    }
    best.map(|b| Interval::new(Float::new(prec), b))
}

#[derive(Clone, Debug)]
pub struct SeriesTable {
    pub root: Vertex,
    pub beta: Interval,
    /// `L[n] ⊇ A(β)^n_{vv}`, with `L[0] = 1`.
    pub loops: Vec<Interval>,
    /// First-return weights `f[n]`, with `f[0] = 0`; empty until computed.
    pub first_returns: Vec<Interval>,
    /// Truncation radius certifying each loop entry.
    pub exact_radius: Vec<usize>,
}

impl SeriesTable {
    pub fn n_max(&self) -> usize {
        self.loops.len() - 1
    }
}

fn check_precision(values: &[Interval], prec: u32) -> Result<()> {
    let limit = Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)));
    for (n, x) in values.iter().enumerate() {
        if !x.hi().is_finite() {
            return Err(Error::PrecisionExhausted(format!("entry {n} overflowed")));
        }
        let w = x.width();
        let scale = x.mag();
        if !x.hi().is_zero() && w > Float::with_val(prec, &scale * &limit) {
            return Err(Error::PrecisionExhausted(format!(
                "entry {n} has relative width above 2^-{}",
                prec / 2
            )));
        }
    }
    Ok(())
}

/// Loop weights `L[n] ⊇ A(β)^n_{vv}` for `n ≤ n_max`.
pub fn loop_weights(
    spec: &GraphSpec,
    v: Vertex,
    beta: &Interval,
    cfg: &SeriesConfig,
) -> Result<SeriesTable> {
    loop_weights_with_radius(spec, v, beta, cfg, cfg.n_max)
}

/// As [`loop_weights`] on a truncation of the given radius (at least `n_max`).
pub fn loop_weights_with_radius(
    spec: &GraphSpec,
    v: Vertex,
    beta: &Interval,
    cfg: &SeriesConfig,
    radius: usize,
) -> Result<SeriesTable> {
    if cfg.n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if radius < cfg.n_max {
        return Err(Error::Domain("truncation radius below n_max".into()));
    }
    let engine = WalkEngine::new(spec, v, radius)?;
    let beta = beta.clone().with_prec(cfg.precision);
    let weights = edge_weights(spec, &beta);
    let loops = engine.root_series(&weights, cfg.precision, cfg.n_max, false);
    check_precision(&loops, cfg.precision)?;
    Ok(SeriesTable {
        root: v,
        beta,
        exact_radius: (0..=cfg.n_max).collect(),
        loops,
        first_returns: Vec::new(),
    })
}

/// Fills `first_returns` from the loop weights by the renewal recursion
/// `f[n] = L[n] - Σ_{k<n} f[k] L[n-k]`.
pub fn first_return_weights(table: &SeriesTable) -> SeriesTable {
    let l = &table.loops;
    let prec = l[0].prec();
    let mut f = vec![Interval::zero(prec); l.len()];
    for n in 1..l.len() {
        let mut acc = l[n].clone();
        for k in 1..n {
            if !f[k].hi().is_zero() || !f[k].lo().is_zero() {
                acc = &acc - &(&f[k] * &l[n - k]);
            }
        }
        f[n] = acc;
    }
    SeriesTable {
        first_returns: f,
        ..table.clone()
    }
}

/// Loop and first-return weights, both by direct propagation.
pub fn first_return_series(
    spec: &GraphSpec,
    v: Vertex,
    beta: &Interval,
    cfg: &SeriesConfig,
) -> Result<SeriesTable> {
    let mut table = loop_weights(spec, v, beta, cfg)?;
    let engine = WalkEngine::new(spec, v, cfg.n_max)?;
    let weights = edge_weights(spec, &table.beta);
    table.first_returns = engine.root_series(&weights, cfg.precision, cfg.n_max, true);
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Transient,
    Recurrent,
    Supercritical,
    Undecided,
}

#[derive(Clone, Debug)]
pub struct RecurrenceVerdict {
    pub verdict: Verdict,
    /// Enclosure of `Σ f_n(β)`: partial sum plus tail bound when certified.
    pub sum: Interval,
    pub partial: Interval,
    pub tail: Option<Interval>,
    pub n_used: usize,
}

pub fn classify_recurrence(
    spec: &GraphSpec,
    v: Vertex,
    beta: &Interval,
    cfg: &SeriesConfig,
) -> Result<RecurrenceVerdict> {
    let engine = WalkEngine::new(spec, v, cfg.n_max)?;
    let beta = beta.clone().with_prec(cfg.precision);
    Ok(engine.classify(&edge_weights(spec, &beta), cfg))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period: u64,
    /// The gcd over loops of length at most `max_len / 2` already equals `period`.
    pub stable: bool,
    pub max_len: usize,
}

/// Gcd of the lengths of loops at `v` up to `max_len`.
pub fn period(spec: &GraphSpec, v: Vertex, max_len: usize) -> Result<PeriodReport> {
    let engine = WalkEngine::new(spec, v, max_len.max(1))?;
    let counts = engine.root_counts(max_len, false);
    let gcd_upto = |m: usize| {
        (1..=m)
            .filter(|&n| counts[n] != 0)
            .fold(0u64, |g, n| gcd(g, n as u64))
    };
    let full = gcd_upto(max_len);
    if full == 0 {
        return Err(Error::NoLoopFound {
            vertex: spec.vertex_name(v),
            max_len,
        });
    }
    Ok(PeriodReport {
        period: full,
        stable: gcd_upto(max_len / 2) == full,
        max_len,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug)]
pub struct Entropy {
    /// `[lower, upper]` enclosure of the entropy.
    pub interval: Interval,
    /// `max_n (1/n) log c_n` over the window.
    pub supermultiplicative_lower: Interval,
    /// The upper end relies on extrapolating first-return counts without an
    /// exact repeating pattern.
    pub upper_heuristic: bool,
    pub n_max: usize,
}

/// Exact tail model for first-return counts: `c_{n+d} = r c_n` on the final window.
struct CountTail {
    last: Vec<(usize, Rational)>,
    period: u32,
    ratio: Rational,
    exact: bool,
}

fn detect_count_tail(fc: &[Integer]) -> Option<CountTail> {
    let n = fc.len() - 1;
    let start = n / 2;
    // (period, worst ratio, per-step rate) of the slowest-growing inexact fit
    let mut fallback: Option<(u32, f64, f64)> = None;
    for d in 1..=8usize {
        if start + d > n {
            break;
        }
        let mut ratio: Option<Rational> = None;
        let mut exact = true;
        let mut worst = 0f64;
        for i in start..=n - d {
            let (a, b) = (&fc[i], &fc[i + d]);
            if *a == 0 {
                if *b != 0 {
                    exact = false;
                    worst = f64::INFINITY;
                }
                continue;
            }
            let q = Rational::from((b.clone(), a.clone()));
            worst = worst.max(q.to_f64());
            match &ratio {
                None => ratio = Some(q),
                Some(r) if *r == q => {}
                Some(_) => exact = false,
            }
        }
        let last: Vec<(usize, Rational)> = (n + 1 - d..=n)
            .map(|i| (i, Rational::from(fc[i].clone())))
            .collect();
        if exact {
            return Some(CountTail {
                last,
                period: d as u32,
                ratio: ratio.unwrap_or_default(),
                exact: true,
            });
        }
        let rate = worst.powf(1.0 / d as f64);
        if rate.is_finite() && fallback.is_none_or(|(_, _, r)| rate < r) {
            fallback = Some((d as u32, worst, rate));
        }
    }
    let (d, worst, _) = fallback?;
    let d = d as usize;
    let last = (n + 1 - d..=n)
        .map(|i| (i, Rational::from(fc[i].clone())))
        .collect();
    let ratio = Rational::from_f64(worst * (1.0 + 1e-6))?;
    Some(CountTail {
        last,
        period: d as u32,
        ratio,
        exact: false,
    })
}

fn poly_at(coeffs: &[Integer], z: &Interval) -> Interval {
    let prec = z.prec();
    let mut acc = Interval::zero(prec);
    for c in coeffs.iter().rev() {
        acc = &(&acc * z) + &Interval::from_rational(prec, &Rational::from(c.clone()));
    }
    acc
}

impl CountTail {
    /// Enclosure of the extrapolated tail at `z`, or `None` if it diverges.
    fn at(&self, z: &Interval) -> Option<Interval> {
        let prec = z.prec();
        let s = z.powi(self.period).mul_rational(&self.ratio);
        if !s.certainly_lt_f64(1.0) {
            return None;
        }
        let head = self.last.iter().fold(Interval::zero(prec), |acc, (i, c)| {
            &acc + &z.powi(*i as u32).mul_rational(c)
        });
        let geo = s.checked_div(&(&Interval::one(prec) - &s)).ok()?;
        Some(&head * &geo)
    }
}

/// Gurevich entropy at `v`: growth rate of unweighted loop counts.
pub fn gurevich_entropy(
    spec: &GraphSpec,
    v: Vertex,
    n_max: usize,
    precision: u32,
) -> Result<Entropy> {
    let engine = WalkEngine::new(spec, v, n_max)?;
    let counts = engine.root_counts(n_max, false);
    let fc = engine.root_counts(n_max, true);
    if counts.iter().skip(1).all(|c| *c == 0) {
        return Err(Error::NoLoopFound {
            vertex: spec.vertex_name(v),
            max_len: n_max,
        });
    }
    let prec = precision;
    let mut supermultiplicative = Interval::zero(prec);
    for (n, c) in counts.iter().enumerate().skip(1) {
        if *c > 1 {
            let est = Interval::from_rational(prec, &Rational::from(c.clone()))
                .ln()?
                .mul_rational(&Rational::from((1, n as u64)));
            if est.lo() > supermultiplicative.lo() {
                supermultiplicative = est;
            }
        }
    }
    let mut lower = supermultiplicative.clone();

    let point = |x: &Float| Interval::new(x.clone(), x.clone());
    let bisect = |mut a: Float, mut b: Float, go_left: &dyn Fn(&Interval) -> bool| {
        for _ in 0..(prec + 16) {
            let mid = Float::with_val(prec + 2, &a + &b) / 2u32;
            let mid = Float::with_val(prec, mid);
            if mid <= a || mid >= b {
                break;
            }
            if go_left(&point(&mid)) {
                b = mid;
            } else {
                a = mid;
            }
        }
        (a, b)
    };
    let zero = Float::new(prec);
    let one = Float::with_val(prec, 1);

    let tiny = Float::with_val(prec, Float::i_exp(1, -60));
    if poly_at(&fc, &point(&tiny)).certainly_gt_f64(1.0) {
        return Err(Error::Divergent(
            "first-return counts exceed 1 at z = 2^-60".into(),
        ));
    }

    // Lower bound: a point where the truncated first-return series exceeds 1.
    let above = |z: &Interval| poly_at(&fc, z).certainly_gt_f64(1.0);
    let renewal_lower = if above(&point(&one)) {
        let (_, b) = bisect(zero.clone(), one.clone(), &above);
        -point(&b).ln()?
    } else {
        Interval::zero(prec)
    };
    if renewal_lower.lo() > lower.lo() {
        lower = renewal_lower;
    }

    // Upper bound: a point where the completed series stays below 1.
    let tail = detect_count_tail(&fc);
    let below = |z: &Interval| match &tail {
        Some(t) => t
            .at(z)
            .is_some_and(|tz| (&poly_at(&fc, z) + &tz).certainly_lt_f64(1.0)),
        None => false,
    };
    let upper_heuristic = tail.as_ref().is_none_or(|t| !t.exact);
    let upper_lo = if below(&point(&one)) {
        one.clone()
    } else {
        let (a, _) = bisect(zero.clone(), one.clone(), &|z| !below(z));
        a
    };
    if upper_lo.is_zero() {
        return Err(Error::Divergent(
            "no point below the first-return singularity was certified".into(),
        ));
    }
    let upper = -point(&upper_lo).ln()?;
    let hi = if upper.hi() >= lower.lo() {
        upper.hi().clone()
    } else {
        lower.lo().clone()
    };
    let lo = if lower.lo().is_sign_negative() {
        Float::new(prec)
    } else {
        lower.lo().clone()
    };
    Ok(Entropy {
        interval: Interval::new(lo, hi),
        supermultiplicative_lower: supermultiplicative,
        upper_heuristic,
        n_max,
    })
}

#[derive(Clone, Debug)]
pub struct BetaCritical {
    pub interval: Interval,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Below,
    Above,
    Unknown,
}

/// Scan length used to check the zero-value cycle hypothesis before bisection.
const MONOTONE_SCAN_LEN: usize = 12;

/// Critical inverse temperature: the `β` where `Σ f_n(β)` crosses 1.
///
/// Requires `F ≥ 0` and no zero-value cycle through `v` up to a short scan
/// length, so that the sum is strictly decreasing. The bracket defaults to
/// `[0, 16]`; its lower end must be certified supercritical and its upper end
/// transient.
pub fn beta_critical(
    spec: &GraphSpec,
    v: Vertex,
    bracket: Option<(f64, f64)>,
    beta_tol: f64,
    cfg: &SeriesConfig,
) -> Result<BetaCritical> {
    if !spec.potentials_nonnegative() {
        return Err(Error::NotMonotone("potential takes negative values".into()));
    }
    let scan = closed_walk_values(spec, v, MONOTONE_SCAN_LEN);
    if let Some(n) = (1..scan.len()).find(|&n| scan[n].iter().any(|x| x.is_zero())) {
        return Err(Error::NotMonotone(format!(
            "zero-value loop of length {n} at {}",
            spec.vertex_name(v)
        )));
    }
    let (mut lo, mut hi) = bracket.unwrap_or((0.0, 16.0));
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::BracketInvalid(format!(
            "[{lo}, {hi}] is not an interval"
        )));
    }
    let engine = WalkEngine::new(spec, v, cfg.n_max)?;
    let prec = cfg.precision;
    let side = |b: f64| {
        let w = edge_weights(spec, &Interval::from_f64(prec, b));
        engine.classify(&w, cfg).side()
    };
    if side(lo) != Side::Below {
        return Err(Error::BracketInvalid(format!(
            "lower end {lo} is not certified supercritical"
        )));
    }
    if side(hi) != Side::Above {
        return Err(Error::BracketInvalid(format!(
            "upper end {hi} is not certified transient"
        )));
    }
    let mut iterations = 0;
    while hi - lo > beta_tol {
        iterations += 1;
        let w = hi - lo;
        let mut moved = false;
        for offset in [0.5, 0.375, 0.625, 0.25, 0.75] {
            let mid = lo + w * offset;
            if mid <= lo || mid >= hi {
                continue;
            }
            match side(mid) {
                Side::Below => lo = mid,
                Side::Above => hi = mid,
                Side::Unknown => continue,
            }
            moved = true;
            break;
        }
        if !moved {
            return Err(Error::UndecidedAtPrecision(format!(
                "sign of the first-return sum is undecided throughout [{lo}, {hi}]"
            )));
        }
    }
    Ok(BetaCritical {
        interval: Interval::hull_of(prec, lo, hi),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::builtin;

    fn two_loops() -> GraphSpec {
        GraphSpec::from_json(
            r#"{"name":"two","base":{"vertices":["v"],"edges":[{"src":"v","dst":"v","f":{"1":"1"},"count":2}]}}"#,
        )
        .unwrap()
    }

    fn cfg(n: usize) -> SeriesConfig {
        SeriesConfig {
            n_max: n,
            ..SeriesConfig::default()
        }
    }

    #[test]
    fn two_loops_power_and_first_return() {
        let g = two_loops();
        let beta = Interval::from_decimal(128, "0.7").unwrap();
        let t = first_return_series(&g, Vertex::Base(0), &beta, &cfg(10)).unwrap();
        let w = 2.0 * (-0.7f64).exp();
        for n in 0..=10 {
            assert!((t.loops[n].mid_f64() - w.powi(n as i32)).abs() < 1e-12);
        }
        assert!((t.first_returns[1].mid_f64() - w).abs() < 1e-15);
        assert!(t.first_returns[2..].iter().all(|x| x.hi().is_zero()));
        let d = first_return_weights(&t);
        assert!(d.first_returns[3].contains_f64(0.0));
    }

    #[test]
    fn g5_first_loop_at_four() {
        let g = builtin("G5").unwrap();
        let t1 = g.vertex_by_name("t1").unwrap();
        let beta = Interval::from_decimal(128, "0.6").unwrap();
        let t = loop_weights(&g, t1, &beta, &cfg(6)).unwrap();
        assert!(t.loops[1..4].iter().all(|x| x.hi().is_zero()));
        assert!((t.loops[4].mid_f64() - 2.0 * (-2.4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn g5_verdicts() {
        let g = builtin("G5").unwrap();
        let t1 = g.vertex_by_name("t1").unwrap();
        let c = SeriesConfig::default();
        let at = |b: &str| {
            classify_recurrence(&g, t1, &Interval::from_decimal(128, b).unwrap(), &c).unwrap()
        };
        let tr = at("0.6");
        assert_eq!(tr.verdict, Verdict::Transient);
        let u = (-1.2f64).exp();
        assert!((tr.sum.mid_f64() - 2.0 * u * u / (1.0 - 2.0 * u)).abs() < 1e-12);
        assert_eq!(at("0.3").verdict, Verdict::Supercritical);
        let crit = Interval::from_f64(128, 3f64.sqrt() + 1.0)
            .ln()
            .unwrap()
            .mul_rational(&Rational::from((1, 2)));
        let v = classify_recurrence(&g, t1, &crit, &c).unwrap();
        assert_eq!(v.verdict, Verdict::Recurrent);
    }

    #[test]
    fn periods() {
        let g = builtin("G5").unwrap();
        assert_eq!(
            period(&g, g.vertex_by_name("t1").unwrap(), 12)
                .unwrap()
                .period,
            2
        );
        let p = builtin("PINWHEEL3").unwrap();
        let r = period(&p, p.vertex_by_name("1").unwrap(), 12).unwrap();
        assert_eq!(r.period, 1);
        assert!(r.stable);
        assert_eq!(period(&two_loops(), Vertex::Base(0), 3).unwrap().period, 1);
    }

    #[test]
    fn entropy_of_two_loops() {
        let e = gurevich_entropy(&two_loops(), Vertex::Base(0), 40, 128).unwrap();
        assert!(e.interval.contains_f64(2f64.ln()) || e.interval.width_f64() < 1e-30);
        assert!((e.interval.mid_f64() - 2f64.ln()).abs() < 1e-12);
        assert!(!e.upper_heuristic);
    }

    #[test]
    fn tail_of_geometric_sequence() {
        let seq: Vec<Interval> = (1..=40)
            .map(|n| Interval::from_f64(128, 0.5f64.powi(n)))
            .collect();
        let t = geometric_tail(&seq).unwrap();
        assert!(t.hi_f64() >= 0.5f64.powi(40));
        assert!(t.hi_f64() < 1e-10);
        assert!(geometric_tail(&vec![Interval::one(128); 40]).is_none());
    }
}
