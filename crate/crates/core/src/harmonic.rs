//! Harmonic vectors `ψ = A(β)ψ` and the cylinder measures they induce.
//!
//! On finite graphs the Perron vector is found by power iteration and the
//! spectral radius is certified with Collatz–Wielandt bounds. On ray
//! templates the harmonic equations over a window of stages are solved by
//! propagation, leaving a few free parameters; the stage recursion of each
//! arm is then split into modes, and existence is read off the sign of the
//! dominant-mode coefficient.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphSpec, PathPrefix, Vertex};
use crate::interval::Interval;
use crate::series::{edge_weights, SeriesConfig};

/// Stages solved explicitly before switching to the arm recursions.
pub const RAY_WINDOW: u64 = 64;

/// Furthest stage the ray evaluator will propagate to.
const MAX_EVAL_STAGE: u64 = 1 << 20;

/// Dominant mode of one arm's stage recursion.
#[derive(Clone, Debug)]
pub struct ArmMode {
    pub locals: Vec<String>,
    /// Dominant eigenvalue of the per-period transfer matrix.
    pub growth_rate: f64,
    /// The dominant eigenvector is positive, so the arm may carry this mode.
    pub positive_mode: bool,
    /// Amplitude of the dominant mode, normalized to stage 0.
    pub coefficient: Interval,
}

#[derive(Clone, Debug)]
struct RayTail {
    window: u64,
    period: u64,
    arms: Vec<Vec<u32>>,
    /// Per arm, per phase: transfer matrix on `(Ψ_{k-1}, Ψ_k)`.
    steps: Vec<Vec<Vec<Vec<Interval>>>>,
    /// Per arm: state `(Ψ_K, Ψ_{K+1})` at the end of the window.
    state: Vec<Vec<Interval>>,
}

#[derive(Clone, Debug)]
pub struct HarmonicVector {
    v0: Vertex,
    beta: Interval,
    values: BTreeMap<Vertex, Interval>,
    arms: Vec<ArmMode>,
    ray: Option<RayTail>,
    spectral_radius: Option<Interval>,
    critical: bool,
}

#[derive(Clone, Debug)]
pub enum HarmonicOutcome {
    Exists(HarmonicVector),
    NoSolution {
        reason: String,
        spectral_radius: Option<Interval>,
    },
}

impl HarmonicOutcome {
    pub fn exists(&self) -> bool {
        matches!(self, HarmonicOutcome::Exists(_))
    }

    pub fn vector(&self) -> Option<&HarmonicVector> {
        match self {
            HarmonicOutcome::Exists(h) => Some(h),
            HarmonicOutcome::NoSolution { .. } => None,
        }
    }
}

impl HarmonicVector {
    pub fn normalization_vertex(&self) -> Vertex {
        self.v0
    }

    pub fn beta(&self) -> &Interval {
        &self.beta
    }

    pub fn arms(&self) -> &[ArmMode] {
        &self.arms
    }

    pub fn spectral_radius(&self) -> Option<&Interval> {
        self.spectral_radius.as_ref()
    }

    /// `β` encloses the existence threshold and the growth modes were set to zero.
    pub fn is_critical(&self) -> bool {
        self.critical
    }

    /// Explicitly solved values, in vertex order.
    pub fn values(&self) -> impl Iterator<Item = (&Vertex, &Interval)> {
        self.values.iter()
    }

    /// `ψ_v`, propagating the arm recursions beyond the solved window.
    pub fn value(&self, v: Vertex) -> Result<Interval> {
        if let Some(x) = self.values.get(&v) {
            return Ok(x.clone());
        }
        let out = || Error::OutOfRegion(format!("{v:?} is outside the solved region"));
        let (Some(ray), Vertex::Stage { stage, local }) = (&self.ray, v) else {
            return Err(out());
        };
        if stage > MAX_EVAL_STAGE {
            return Err(out());
        }
        let arm = ray
            .arms
            .iter()
            .position(|a| a.contains(&local))
            .ok_or_else(out)?;
        let pos = ray.arms[arm].iter().position(|&l| l == local).unwrap();
        let m = ray.arms[arm].len();
        let mut state = ray.state[arm].clone();
        // state holds (Ψ_k, Ψ_{k+1}) for k = current
        let mut k = ray.window;
        while k + 1 < stage {
            let phase = (k % ray.period) as usize;
            state = apply(&ray.steps[arm][phase], &state);
            k += 1;
        }
        Ok(state[m + pos].clone())
    }

    /// `ψ_v - Σ_e e^{-βF(e)} ψ_{r(e)}`.
    pub fn residual(&self, spec: &GraphSpec, v: Vertex) -> Result<Interval> {
        let weights = edge_weights(spec, &self.beta);
        let mut acc = self.value(v)?;
        for e in spec.out_edges(v) {
            acc = &acc - &(&weights[e.pot as usize] * &self.value(e.dst)?);
        }
        Ok(acc)
    }
}

fn apply(t: &[Vec<Interval>], x: &[Interval]) -> Vec<Interval> {
    let prec = x[0].prec();
    t.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(Interval::zero(prec), |acc, (a, b)| &acc + &(a * b))
        })
        .collect()
}

/// `m(Z(μ)) = e^{-βF(μ)} ψ_{r(μ)}`.
pub fn cylinder_measure(
    spec: &GraphSpec,
    h: &HarmonicVector,
    path: &PathPrefix,
) -> Result<Interval> {
    let prec = h.beta.prec();
    let f = spec.basis().eval(path.value(), prec);
    let scale = (-(&h.beta * &f)).exp();
    Ok(&scale * &h.value(path.end())?)
}

/// Harmonic vector on a finite strongly connected graph, normalized at `v0`.
pub fn solve_finite(
    spec: &GraphSpec,
    beta: &Interval,
    v0: Vertex,
    cfg: &SeriesConfig,
) -> Result<HarmonicOutcome> {
    if !spec.is_finite() {
        return Err(Error::Domain("solve_finite needs a finite graph".into()));
    }
    spec.require_row_finite()?;
    if !crate::graph::validate(spec, 0)?.strongly_connected {
        return Err(Error::NotStronglyConnected);
    }
    let prec = cfg.precision;
    let beta = beta.clone().with_prec(prec);
    let weights = edge_weights(spec, &beta);
    let n = spec.num_base_vertices();
    let mut a = vec![vec![Interval::zero(prec); n]; n];
    for u in 0..n {
        for e in spec.out_edges(Vertex::Base(u as u32)) {
            let Vertex::Base(w) = e.dst else {
                unreachable!("finite graphs have base vertices only")
            };
            a[u][w as usize] = &a[u][w as usize] + &weights[e.pot as usize];
        }
    }
    let mid: Vec<Vec<Float>> = a
        .iter()
        .map(|r| r.iter().map(Interval::mid).collect())
        .collect();

    // power iteration on A + I
    let mut x = vec![Float::with_val(prec, 1); n];
    let eps = Float::with_val(prec, Float::i_exp(1, 16 - prec as i32));
    for _ in 0..100_000 {
        let mut y: Vec<Float> = (0..n)
            .map(|i| {
                let mut s = Float::with_val(prec, &x[i]);
                for j in 0..n {
                    s += Float::with_val(prec, &mid[i][j] * &x[j]);
                }
                s
            })
            .collect();
        let norm = y
            .iter()
            .fold(Float::new(prec), |m, v| if *v > m { v.clone() } else { m });
        for v in &mut y {
            *v /= &norm;
        }
        let delta = x.iter().zip(&y).fold(Float::new(prec), |m, (p, q)| {
            let d = Float::with_val(prec, p - q).abs();
            if d > m {
                d
            } else {
                m
            }
        });
        x = y;
        if delta < eps {
            break;
        }
    }
    if x.iter().any(|v| *v <= 0) {
        return Err(Error::PrecisionExhausted(
            "Perron iteration produced a non-positive entry".into(),
        ));
    }
    let xi: Vec<Interval> = x
        .iter()
        .map(|v| Interval::new(v.clone(), v.clone()))
        .collect();
    let ax = apply(&a, &xi);
    let mut radius: Option<Interval> = None;
    for i in 0..n {
        let q = ax[i].checked_div(&xi[i])?;
        radius = Some(match radius {
            None => q,
            Some(r) => Interval::new(r.lo().clone().min(q.lo()), r.hi().clone().max(q.hi())),
        });
    }
    let radius = radius.expect("nonempty graph");
    if radius.lo_f64() >= 1.0 - cfg.tol && radius.hi_f64() <= 1.0 + cfg.tol {
        let Vertex::Base(b0) = v0 else {
            return Err(Error::UnknownVertex(format!("{v0:?}")));
        };
        let norm = xi
            .get(b0 as usize)
            .ok_or_else(|| Error::UnknownVertex(format!("{v0:?}")))?
            .clone();
        let values = (0..n)
            .map(|i| (Vertex::Base(i as u32), xi[i].checked_div(&norm).unwrap()))
            .collect();
        return Ok(HarmonicOutcome::Exists(HarmonicVector {
            v0,
            beta,
            values,
            arms: Vec::new(),
            ray: None,
            spectral_radius: Some(radius),
            critical: false,
        }));
    }
    if radius.hi_f64() < 1.0 - cfg.tol || radius.lo_f64() > 1.0 + cfg.tol {
        return Ok(HarmonicOutcome::NoSolution {
            reason: format!("spectral radius {radius} is not 1"),
            spectral_radius: Some(radius),
        });
    }
    Err(Error::PrecisionExhausted(format!(
        "spectral radius {radius} straddles the tolerance band"
    )))
}

/// `value = constant + Σ coeffs[i] θ_i` over free parameters `θ`.
#[derive(Clone, Debug)]
struct Affine {
    constant: Interval,
    coeffs: Vec<Interval>,
}

impl Affine {
    fn constant(x: Interval) -> Self {
        Affine {
            constant: x,
            coeffs: Vec::new(),
        }
    }

    fn param(i: usize, prec: u32) -> Self {
        let mut coeffs = vec![Interval::zero(prec); i + 1];
        coeffs[i] = Interval::one(prec);
        Affine {
            constant: Interval::zero(prec),
            coeffs,
        }
    }

    fn add_scaled(&mut self, other: &Affine, s: &Interval) {
        self.constant = &self.constant + &(&other.constant * s);
        let prec = s.prec();
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), Interval::zero(prec));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = &*a + &(b * s);
        }
    }

    fn scaled(&self, s: &Interval) -> Affine {
        let mut out = Affine::constant(Interval::zero(s.prec()));
        out.add_scaled(self, s);
        out
    }

    fn coeff(&self, i: usize) -> Interval {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| Interval::zero(self.constant.prec()))
    }

    fn eval(&self, theta: &[Interval]) -> Interval {
        self.coeffs
            .iter()
            .zip(theta)
            .fold(self.constant.clone(), |acc, (a, t)| &acc + &(a * t))
    }
}

/// Linear system of harmonic equations over a finite set of vertices.
struct System {
    prec: u32,
    vars: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    eqs: Vec<Vec<(usize, Interval)>>,
    value: Vec<Option<Affine>>,
    nparams: usize,
}

impl System {
    fn new(vars: Vec<Vertex>, prec: u32) -> Self {
        let index = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = vars.len();
        System {
            prec,
            vars,
            index,
            eqs: Vec::new(),
            value: vec![None; n],
            nparams: 0,
        }
    }

    /// Adds `ψ_u = Σ w_e ψ_{r(e)}` if every target is a variable.
    fn add_equation(&mut self, spec: &GraphSpec, u: Vertex, weights: &[Interval]) -> bool {
        let mut terms: BTreeMap<usize, Interval> = BTreeMap::new();
        terms.insert(self.index[&u], Interval::one(self.prec));
        for e in spec.out_edges(u) {
            let Some(&j) = self.index.get(&e.dst) else {
                return false;
            };
            let slot = terms.entry(j).or_insert_with(|| Interval::zero(self.prec));
            *slot = &*slot - &weights[e.pot as usize];
        }
        self.eqs.push(terms.into_iter().collect());
        true
    }

    fn new_param(&mut self) -> Affine {
        self.nparams += 1;
        Affine::param(self.nparams - 1, self.prec)
    }

    /// Propagates every equation with a single unknown. When stuck, the
    /// first open equation gets all but its last unknown turned into free
    /// parameters (only if `allow_params`). Returns the residuals of
    /// equations that ended with no unknown left unused.
    fn solve(&mut self, allow_params: bool) -> Result<Vec<Affine>> {
        let m = self.eqs.len();
        let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); self.vars.len()];
        let mut open = vec![0usize; m];
        for (k, eq) in self.eqs.iter().enumerate() {
            for (v, _) in eq {
                occurs[*v].push(k);
                if self.value[*v].is_none() {
                    open[k] += 1;
                }
            }
        }
        let mut used = vec![false; m];
        let mut queue: VecDeque<usize> = (0..m).filter(|&k| open[k] == 1).collect();
        loop {
            while let Some(k) = queue.pop_front() {
                if used[k] || open[k] != 1 {
                    continue;
                }
                let eq = self.eqs[k].clone();
                let (x, ax) = eq
                    .iter()
                    .find(|(v, _)| self.value[*v].is_none())
                    .cloned()
                    .unwrap();
                if ax.contains_zero() {
                    return Err(Error::UndecidedAtPrecision(format!(
                        "pivot for {:?} is not bounded away from zero",
                        self.vars[x]
                    )));
                }
                let mut rest = Affine::constant(Interval::zero(self.prec));
                for (v, a) in &eq {
                    if *v != x {
                        rest.add_scaled(self.value[*v].as_ref().unwrap(), a);
                    }
                }
                let s = -ax.recip()?;
                self.value[x] = Some(rest.scaled(&s));
                used[k] = true;
                for &k2 in &occurs[x] {
                    open[k2] -= 1;
                    if open[k2] == 1 && !used[k2] {
                        queue.push_back(k2);
                    }
                }
            }
            let Some(k) = (0..m).find(|&k| !used[k] && open[k] >= 2) else {
                break;
            };
            if !allow_params {
                return Err(Error::UndecidedAtPrecision(
                    "stage recursion is not determined".into(),
                ));
            }
            let unknowns: Vec<usize> = self.eqs[k]
                .iter()
                .map(|(v, _)| *v)
                .filter(|&v| self.value[v].is_none())
                .collect();
            let last = *unknowns.iter().max().unwrap();
            for &v in unknowns.iter().filter(|&&v| v != last) {
                self.value[v] = Some(self.new_param());
                for &k2 in &occurs[v] {
                    open[k2] -= 1;
                }
            }
            queue.push_back(k);
        }
        let mut residuals = Vec::new();
        for k in 0..m {
            if !used[k] && open[k] == 0 {
                let mut r = Affine::constant(Interval::zero(self.prec));
                for (v, a) in &self.eqs[k] {
                    r.add_scaled(self.value[*v].as_ref().unwrap(), a);
                }
                residuals.push(r);
            }
        }
        Ok(residuals)
    }
}

/// One-step transfer matrix of an arm: `(Ψ_{k-1}, Ψ_k) ↦ (Ψ_k, Ψ_{k+1})` for
/// a stage `k` of the given phase.
fn arm_step(
    spec: &GraphSpec,
    arm: &[u32],
    k: u64,
    weights: &[Interval],
    prec: u32,
) -> Result<Vec<Vec<Interval>>> {
    let m = arm.len();
    let at = |stage: u64| arm.iter().map(move |&l| Vertex::Stage { stage, local: l });
    let vars: Vec<Vertex> = at(k - 1).chain(at(k)).chain(at(k + 1)).collect();
    let mut sys = System::new(vars, prec);
    for i in 0..2 * m {
        sys.value[i] = Some(sys.new_param());
    }
    for u in at(k) {
        if !sys.add_equation(spec, u, weights) {
            return Err(Error::Domain("arm equation leaves the arm".into()));
        }
    }
    for u in at(k + 1) {
        sys.add_equation(spec, u, weights);
    }
    sys.solve(false)?;
    let mut t = vec![vec![Interval::zero(prec); 2 * m]; 2 * m];
    for i in 0..m {
        t[i][m + i] = Interval::one(prec);
    }
    for i in 0..m {
        let f = sys.value[2 * m + i].as_ref().ok_or_else(|| {
            Error::UndecidedAtPrecision("stage recursion is not determined".into())
        })?;
        for j in 0..2 * m {
            t[m + i][j] = f.coeff(j);
        }
    }
    Ok(t)
}

fn matmul(a: &[Vec<Interval>], b: &[Vec<Interval>]) -> Vec<Vec<Interval>> {
    let n = a.len();
    let prec = a[0][0].prec();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Interval::zero(prec), |acc, k| &acc + &(&a[i][k] * &b[k][j])))
                .collect()
        })
        .collect()
}

fn null_vector(m: DMatrix<f64>) -> nalgebra::DVector<f64> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (imin, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
            );
    v_t.row(imin).transpose()
}

struct Spectral {
    lambda: f64,
    left: Vec<f64>,
    positive: bool,
}

/// Dominant real eigenvalue with its left eigenvector (scaled so that the
/// right eigenvector, made positive in its largest entry, pairs to 1).
fn dominant_mode(t: &[Vec<Interval>]) -> Result<Spectral> {
    let n = t.len();
    let m = DMatrix::from_fn(n, n, |i, j| t[i][j].mid_f64());
    let eig = m.clone().complex_eigenvalues();
    let (mut best, mut second) = (nalgebra::Complex::new(0.0, 0.0), 0.0f64);
    for z in eig.iter() {
        if z.norm() > best.norm() {
            second = best.norm();
            best = *z;
        } else if z.norm() > second {
            second = z.norm();
        }
    }
    let lambda = best.re;
    if lambda <= 0.0 || best.im.abs() > 1e-12 * best.norm() || second > best.norm() * (1.0 - 1e-9) {
        return Err(Error::UndecidedAtPrecision(format!(
            "arm recursion has no simple positive dominant eigenvalue (leading {best}, next modulus {second})"
        )));
    }
    let shift = DMatrix::identity(n, n) * lambda;
    let mut right = null_vector(&m - &shift);
    let left = null_vector(m.transpose() - shift);
    let (imax, _) = right
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    if right[imax] < 0.0 {
        right = -right;
    }
    let scale = right.amax();
    let positive = right.iter().all(|&v| v >= -1e-9 * scale);
    let pair = left.dot(&right);
    if pair.abs() < 1e-12 {
        return Err(Error::UndecidedAtPrecision(
            "defective dominant eigenvalue".into(),
        ));
    }
    Ok(Spectral {
        lambda,
        left: left.iter().map(|v| v / pair).collect(),
        positive,
    })
}

/// Solves linear constraints `Σ a_i θ_i + c = 0` by interval elimination.
enum ParamSolve {
    Solved(Vec<Interval>),
    Inconsistent(String),
    Underdetermined,
}

fn solve_params(constraints: &[Affine], nparams: usize, prec: u32) -> ParamSolve {
    let mut rows: Vec<(Vec<Interval>, Interval)> = constraints
        .iter()
        .map(|c| {
            (
                (0..nparams).map(|i| c.coeff(i)).collect(),
                c.constant.clone(),
            )
        })
        .collect();
    let mut pivots = Vec::new();
    let mut free_rows: Vec<usize> = (0..rows.len()).collect();
    for col in 0..nparams {
        let best = free_rows.iter().copied().max_by(|&a, &b| {
            rows[a].0[col]
                .mid_f64()
                .abs()
                .total_cmp(&rows[b].0[col].mid_f64().abs())
        });
        let Some(r) = best else {
            return ParamSolve::Underdetermined;
        };
        if rows[r].0[col].contains_zero() {
            return ParamSolve::Underdetermined;
        }
        free_rows.retain(|&x| x != r);
        let (prow, pc) = rows[r].clone();
        for &o in &free_rows {
            let factor = rows[o].0[col].checked_div(&prow[col]).unwrap();
            for j in 0..nparams {
                rows[o].0[j] = &rows[o].0[j] - &(&factor * &prow[j]);
            }
            rows[o].1 = &rows[o].1 - &(&factor * &pc);
        }
        pivots.push((col, r));
    }
    for &o in &free_rows {
        if !rows[o].1.contains_zero() {
            return ParamSolve::Inconsistent(format!(
                "constraint residual {} excludes zero",
                rows[o].1
            ));
        }
    }
    let mut theta = vec![Interval::zero(prec); nparams];
    for &(col, r) in pivots.iter().rev() {
        let (row, c) = &rows[r];
        let mut acc = -c.clone();
        for j in col + 1..nparams {
            acc = &acc - &(&row[j] * &theta[j]);
        }
        theta[col] = acc.checked_div(&row[col]).unwrap();
    }
    ParamSolve::Solved(theta)
}

/// Harmonic vector on a ray template, normalized at `v0`.
pub fn solve_ray(
    spec: &GraphSpec,
    beta: &Interval,
    v0: Vertex,
    cfg: &SeriesConfig,
) -> Result<HarmonicOutcome> {
    let t = spec
        .template()
        .ok_or_else(|| Error::Domain("solve_ray needs a ray template".into()))?;
    spec.require_row_finite()?;
    let prec = cfg.precision;
    let beta = beta.clone().with_prec(prec);
    let weights = edge_weights(spec, &beta);
    let p = t.period() as u64;
    let window = RAY_WINDOW.div_ceil(p) * p;
    if v0.stage() > window || !spec.contains_vertex(v0) {
        return Err(Error::OutOfRegion(format!(
            "normalization vertex {v0:?} outside the window"
        )));
    }
    let nloc = t.locals().len() as u32;
    let mut vars: Vec<Vertex> = spec.base_vertices().collect();
    for k in 1..=window + 1 {
        vars.extend((0..nloc).map(|l| Vertex::Stage { stage: k, local: l }));
    }
    let mut sys = System::new(vars.clone(), prec);
    for &u in &vars {
        if u.stage() <= window {
            if !sys.add_equation(spec, u, &weights) {
                return Err(Error::Domain(format!(
                    "edge from {} leaves the window",
                    spec.vertex_name(u)
                )));
            }
        } else {
            sys.add_equation(spec, u, &weights);
        }
    }
    let i0 = sys.index[&v0];
    sys.value[i0] = Some(Affine::constant(Interval::one(prec)));
    let mut constraints = sys.solve(true)?;
    if sys.value.iter().any(Option::is_none) {
        return Err(Error::UndecidedAtPrecision(
            "window values are not determined".into(),
        ));
    }

    let arms = t.arms();
    let mut steps = Vec::new();
    let mut modes = Vec::new();
    let mut coeff_forms = Vec::new();
    for arm in &arms {
        let per_phase: Vec<Vec<Vec<Interval>>> = (0..p)
            .map(|phi| arm_step(spec, arm, p + 1 + phi, &weights, prec))
            .collect::<Result<_>>()?;
        let mut period_map = per_phase[0].clone();
        for step in &per_phase[1..] {
            period_map = matmul(step, &period_map);
        }
        let spec_mode = dominant_mode(&period_map)?;
        let m = arm.len();
        let state: Vec<&Affine> = (0..2 * m)
            .map(|i| {
                let stage = window + (i / m) as u64;
                sys.value[sys.index[&Vertex::Stage {
                    stage,
                    local: arm[i % m],
                }]]
                    .as_ref()
                    .unwrap()
            })
            .collect();
        let damp = Interval::from_f64(prec, spec_mode.lambda)
            .powi((window / p) as u32)
            .recip()?;
        let mut c = Affine::constant(Interval::zero(prec));
        for (w, x) in spec_mode.left.iter().zip(&state) {
            c.add_scaled(x, &(&Interval::from_f64(prec, *w) * &damp));
        }
        steps.push(per_phase);
        coeff_forms.push(c);
        modes.push(spec_mode);
    }

    // Mixed-sign dominant modes must vanish; positive ones grow at a common amplitude.
    let positive: Vec<usize> = (0..arms.len()).filter(|&j| modes[j].positive).collect();
    for j in 0..arms.len() {
        if !modes[j].positive {
            constraints.push(coeff_forms[j].clone());
        }
    }
    for w in positive.windows(2) {
        let mut d = coeff_forms[w[1]].clone();
        d.add_scaled(&coeff_forms[w[0]], &Interval::from_int(prec, -1));
        constraints.push(d);
    }
    let mut critical = false;
    let (values, arm_modes) = loop {
        let theta = match solve_params(&constraints, sys.nparams, prec) {
            ParamSolve::Solved(theta) => theta,
            ParamSolve::Inconsistent(reason) => {
                return Ok(HarmonicOutcome::NoSolution {
                    reason,
                    spectral_radius: None,
                });
            }
            ParamSolve::Underdetermined => {
                return Err(Error::UndecidedAtPrecision(format!(
                    "{} free parameters but only {} usable constraints",
                    sys.nparams,
                    constraints.len()
                )));
            }
        };
        let values: BTreeMap<Vertex, Interval> = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, sys.value[i].as_ref().unwrap().eval(&theta)))
            .collect();
        let arm_modes: Vec<ArmMode> = arms
            .iter()
            .enumerate()
            .map(|(j, arm)| ArmMode {
                locals: arm
                    .iter()
                    .map(|&l| t.locals()[l as usize].clone())
                    .collect(),
                growth_rate: modes[j].lambda,
                positive_mode: modes[j].positive,
                coefficient: coeff_forms[j].eval(&theta),
            })
            .collect();
        if let Some(a) = arm_modes
            .iter()
            .find(|a| a.positive_mode && a.coefficient.is_negative())
        {
            return Ok(HarmonicOutcome::NoSolution {
                reason: format!(
                    "dominant mode of arm {:?} has negative amplitude {}",
                    a.locals, a.coefficient
                ),
                spectral_radius: None,
            });
        }
        // An amplitude straddling zero means β encloses the threshold: continue on the branch
        // where the growth modes vanish.
        let straddling = positive
            .iter()
            .any(|&j| arm_modes[j].coefficient.contains_zero());
        if straddling && !critical {
            critical = true;
            constraints.push(coeff_forms[positive[0]].clone());
            continue;
        }
        break (values, arm_modes);
    };
    if let Some((v, x)) = values.iter().find(|(_, x)| x.is_negative()) {
        return Ok(HarmonicOutcome::NoSolution {
            reason: format!("ψ at {} is negative: {x}", spec.vertex_name(*v)),
            spectral_radius: None,
        });
    }
    if !arm_modes
        .iter()
        .all(|a| a.positive_mode && (critical || a.coefficient.is_positive()))
    {
        return Err(Error::UndecidedAtPrecision(
            "an arm has no positive dominant mode".into(),
        ));
    }
    let mut values = values;
    if critical {
        // Errors grow along the suppressed modes, so only an initial run of stages is certified.
        let first_bad = values
            .iter()
            .find(|(_, x)| !x.is_positive())
            .map(|(v, _)| v.stage());
        if let Some(k) = first_bad {
            if k <= p {
                return Err(Error::UndecidedAtPrecision(format!(
                    "critical vector is not certified positive beyond stage {}",
                    k.saturating_sub(1)
                )));
            }
            values.retain(|v, _| v.stage() < k);
        }
    } else if !values.values().all(Interval::is_positive) {
        return Err(Error::UndecidedAtPrecision(
            "positivity is not certified at this precision".into(),
        ));
    }
    let ray = values
        .contains_key(&Vertex::Stage {
            stage: window + 1,
            local: 0,
        })
        .then(|| {
            let state = arms
                .iter()
                .map(|arm| {
                    let m = arm.len();
                    (0..2 * m)
                        .map(|i| {
                            values[&Vertex::Stage {
                                stage: window + (i / m) as u64,
                                local: arm[i % m],
                            }]
                                .clone()
                        })
                        .collect()
                })
                .collect();
            RayTail {
                window,
                period: p,
                arms,
                steps,
                state,
            }
        });
    Ok(HarmonicOutcome::Exists(HarmonicVector {
        v0,
        beta,
        values,
        arms: arm_modes,
        ray,
        spectral_radius: None,
        critical,
    }))
}

/// Dispatches to [`solve_finite`] or [`solve_ray`].
pub fn solve(
    spec: &GraphSpec,
    beta: &Interval,
    v0: Vertex,
    cfg: &SeriesConfig,
) -> Result<HarmonicOutcome> {
    if spec.is_finite() {
        solve_finite(spec, beta, v0, cfg)
    } else {
        solve_ray(spec, beta, v0, cfg)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExistenceThreshold {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Bisection for the smallest `β` at which a positive harmonic vector exists.
pub fn existence_threshold(
    spec: &GraphSpec,
    v0: Vertex,
    bracket: (f64, f64),
    beta_tol: f64,
    cfg: &SeriesConfig,
) -> Result<ExistenceThreshold> {
    let prec = cfg.precision;
    let exists = |b: f64| -> Option<bool> {
        match solve(spec, &Interval::from_f64(prec, b), v0, cfg) {
            Ok(HarmonicOutcome::Exists(_)) => Some(true),
            Ok(HarmonicOutcome::NoSolution { .. }) => Some(false),
            Err(_) => None,
        }
    };
    let (mut lo, mut hi) = bracket;
    if exists(lo) != Some(false) || exists(hi) != Some(true) {
        return Err(Error::BracketInvalid(format!(
            "existence does not change sign on [{lo}, {hi}]"
        )));
    }
    let mut iterations = 0;
    while hi - lo > beta_tol {
        iterations += 1;
        let w = hi - lo;
        let mut moved = false;
        for offset in [0.5, 0.375, 0.625, 0.25, 0.75] {
            let mid = lo + w * offset;
            match exists(mid) {
                Some(true) => hi = mid,
                Some(false) => lo = mid,
                None => continue,
            }
            moved = true;
            break;
        }
        if !moved {
            return Err(Error::UndecidedAtPrecision(format!(
                "existence undecided throughout [{lo}, {hi}]"
            )));
        }
    }
    Ok(ExistenceThreshold { lo, hi, iterations })
}
