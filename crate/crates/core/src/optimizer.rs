//! SA-PGA: projected gradient ascent on the worst user's beamformer and on
//! each movable antenna position, wrapped in a simulated-annealing outer
//! loop with Metropolis acceptance.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal, ChannelModel, ChannelRealization, PhaseTable};
use crate::geometry::{ArrayLayout, Position3};
use crate::gradients::{grad_t_from_channels, grad_w_from_channels, mc_average_grad};
use crate::math::{self, norm_sqr};
use crate::metrics::{secrecy_report, Beamformer};

/// Per-coordinate AdaGrad. The effective step `δ/√(acc_i + ε)` can only
/// shrink because `acc_i` only grows.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGrad {
    step: f64,
    eps: f64,
    acc: Vec<f64>,
}

impl AdaGrad {
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(step: f64, eps: f64, dim: usize) -> Self {
        Self {
            step,
            eps,
            acc: vec![0.0; dim],
        }
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.acc
    }

    pub fn effective_step(&self, i: usize) -> f64 {
        self.step / math::sqrt(self.acc[i] + self.eps)
    }

    /// Fold `g` into coordinate `i` and return the ascent increment.
    pub fn increment(&mut self, i: usize, g: f64) -> f64 {
        self.acc[i] += g * g;
        self.effective_step(i) * g
    }
}

/// Which path gains the Monte-Carlo gradient estimator redraws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McResample {
    /// Eavesdropper gains only; Bob channels are known.
    #[default]
    Eve,
    /// Bob and eavesdropper gains.
    All,
    /// Nominal gains every draw, so the estimator is deterministic.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaPgaConfig {
    pub t0: f64,
    pub beta: f64,
    pub delta_w: f64,
    pub delta_t: f64,
    pub tau_w: f64,
    pub tau_t: f64,
    /// Outer annealing iterations.
    pub max_iter: usize,
    /// Cap on each inner PGA loop.
    pub inner_max_iter: usize,
    pub mc_w: usize,
    pub mc_t: usize,
    /// Never accept a worse candidate.
    pub greedy: bool,
    pub mc_resample: McResample,
    pub adagrad_eps: f64,
    /// When false only the beamformer is optimized.
    pub optimize_positions: bool,
}

impl Default for SaPgaConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            beta: 0.9,
            delta_w: 0.01,
            delta_t: 0.001,
            tau_w: 0.005,
            tau_t: 1e-4,
            max_iter: 1000,
            inner_max_iter: 1000,
            mc_w: 10,
            mc_t: 10,
            greedy: false,
            mc_resample: McResample::Eve,
            adagrad_eps: AdaGrad::DEFAULT_EPS,
            optimize_positions: true,
        }
    }
}

/// A layout and beamformer together with their evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub layout: ArrayLayout,
    pub beamformer: Beamformer,
    /// Worst-user secrecy rate, floored at zero.
    pub secrecy: f64,
    /// Worst-user rate margin `R_b − max_m R_e`, possibly negative.
    pub margin: f64,
    pub worst_k: usize,
    pub best_m: usize,
    pub bob_rate: f64,
    pub eve_rate: f64,
}

pub fn evaluate_solution(
    model: &ChannelModel,
    layout: ArrayLayout,
    beamformer: Beamformer,
    noise: f64,
) -> Solution {
    let ch = model.realize(&layout.positions);
    solution_from(&ch, layout, beamformer, noise)
}

fn solution_from(
    ch: &ChannelRealization,
    layout: ArrayLayout,
    beamformer: Beamformer,
    noise: f64,
) -> Solution {
    let report = secrecy_report(ch, &beamformer, noise);
    Solution {
        secrecy: report.worst_secrecy(),
        margin: report.worst_margin(),
        worst_k: report.worst_k,
        best_m: report.best_m,
        bob_rate: report.worst_bob_rate(),
        eve_rate: report.worst_eve_rate(),
        layout,
        beamformer,
    }
}

/// Per-user maximum-ratio transmission with an equal power split:
/// `w_k = √(P/K) h_k / ‖h_k‖`. A zero channel gets a uniform-phase beam.
pub fn init_beamformer(ch: &ChannelRealization, p_max: f64) -> Beamformer {
    let users = ch.h_bob.len();
    let n = ch.num_antennas();
    let amp = math::sqrt(p_max / users as f64);
    let cols: Vec<Vec<Complex64>> = ch
        .h_bob
        .iter()
        .map(|h| {
            let norm = math::sqrt(norm_sqr(h));
            if norm > 0.0 {
                h.iter().map(|z| z * (amp / norm)).collect()
            } else {
                let u = amp / math::sqrt(n as f64);
                vec![Complex64::new(u, 0.0); n]
            }
        })
        .collect();
    Beamformer::from_columns(&cols, p_max)
}

/// Metropolis rule: always accept an improvement, otherwise accept with
/// probability `exp((r_new − r_prev)/temp)`. A nonpositive temperature
/// never accepts a worse value.
pub fn metropolis_accept<R: Rng + ?Sized>(r_new: f64, r_prev: f64, temp: f64, rng: &mut R) -> bool {
    if r_new > r_prev {
        return true;
    }
    if temp <= 0.0 {
        return false;
    }
    let u: f64 = rng.random();
    u < math::exp((r_new - r_prev) / temp)
}

/// Phase tables for every link at the current layout, so the Monte-Carlo
/// gradient draws only re-weight cached phases.
#[derive(Debug, Clone)]
pub struct LinkCache {
    bob: Vec<PhaseTable>,
    eve: PhaseTable,
    /// `e^{−j k r_m·p_u}` per eavesdropper position.
    eve_receive: Vec<Vec<Complex64>>,
}

impl LinkCache {
    pub fn new(model: &ChannelModel, positions: &[Position3]) -> Self {
        let ones = vec![Complex64::new(1.0, 0.0); model.eve_paths.len()];
        Self {
            bob: model
                .bob_paths
                .iter()
                .map(|p| PhaseTable::new(positions, p, model.lambda))
                .collect(),
            eve: PhaseTable::new(positions, &model.eve_paths, model.lambda),
            eve_receive: (0..model.num_eves())
                .map(|m| model.eve_effective_gains(m, &ones))
                .collect(),
        }
    }

    pub fn update(&mut self, n: usize, t: Position3) {
        for table in &mut self.bob {
            table.update(n, t);
        }
        self.eve.update(n, t);
    }
}

/// Path gains for one Monte-Carlo draw of the pair `(k, m)`; the Eve gains
/// already carry the receive phase of position `m`.
struct GainDraw {
    bob: Vec<Complex64>,
    eve: Vec<Complex64>,
}

fn draw_gains<R: Rng + ?Sized>(
    model: &ChannelModel,
    cache: &LinkCache,
    k: usize,
    m: usize,
    mode: McResample,
    rng: &mut R,
) -> GainDraw {
    let bob_paths = &model.bob_paths[k];
    let bob = match mode {
        McResample::All => complex_normal(bob_paths.len(), bob_paths.gain_variance(), rng),
        _ => bob_paths.gains().to_vec(),
    };
    let eve_raw = match mode {
        McResample::None => model.eve_paths.gains().to_vec(),
        _ => complex_normal(
            model.eve_paths.len(),
            model.eve_paths.gain_variance(),
            rng,
        ),
    };
    let eve = eve_raw
        .iter()
        .zip(&cache.eve_receive[m])
        .map(|(s, e)| s * e)
        .collect();
    GainDraw { bob, eve }
}

/// Result of one inner PGA loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PgaOutcome<T> {
    pub value: T,
    pub iterations: usize,
    /// Whether the returned value came straight out of the power
    /// projection, in which case its power equals the budget.
    pub projected: bool,
}

/// Scale column `k` so that the total power equals `p_max` if it exceeds
/// it. Returns whether scaling happened.
pub fn project_power(w: &mut Beamformer, k: usize) -> bool {
    let total = w.power();
    if total <= w.p_max {
        return false;
    }
    let col = w.column_power(k);
    let room = (w.p_max - (total - col)).max(0.0);
    let s = math::sqrt(room / col);
    for z in w.column_mut(k) {
        *z *= s;
    }
    true
}

/// Gradient ascent on `w_k` with AdaGrad steps and the power projection.
/// Stops when a step moves the column by less than `tau_w` or after
/// `inner_max_iter` steps. A non-finite gradient ends the loop and keeps
/// the last feasible beamformer.
#[allow(clippy::too_many_arguments)]
pub fn pga_w<R: Rng + ?Sized>(
    model: &ChannelModel,
    cache: &LinkCache,
    w: &Beamformer,
    k: usize,
    m: usize,
    noise: f64,
    cfg: &SaPgaConfig,
    adagrad: &mut AdaGrad,
    rng: &mut R,
) -> PgaOutcome<Beamformer> {
    let n = w.num_antennas();
    let mut cur = w.clone();
    let mut projected = false;
    let mut h_b = vec![Complex64::new(0.0, 0.0); n];
    let mut h_e = h_b.clone();
    let mut iterations = 0;
    for _ in 0..cfg.inner_max_iter.max(1) {
        iterations += 1;
        let g: Vec<Complex64> = mc_average_grad(cfg.mc_w.max(1), |_| {
            let draw = draw_gains(model, cache, k, m, cfg.mc_resample, rng);
            cache.bob[k].channel_into(&draw.bob, &mut h_b);
            cache.eve.channel_into(&draw.eve, &mut h_e);
            grad_w_from_channels(&h_b, &h_e, &cur, k, noise)
        });
        if g.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            break;
        }
        let mut next = cur.clone();
        for (i, (z, gi)) in next.column_mut(k).iter_mut().zip(&g).enumerate() {
            let base = 2 * (k * n + i);
            z.re += adagrad.increment(base, gi.re);
            z.im += adagrad.increment(base + 1, gi.im);
        }
        projected = project_power(&mut next, k);
        let moved: f64 = next
            .column(k)
            .iter()
            .zip(cur.column(k))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        cur = next;
        if math::sqrt(moved) < cfg.tau_w {
            break;
        }
    }
    PgaOutcome {
        value: cur,
        iterations,
        projected,
    }
}

/// Gradient ascent on every movable antenna in index order. Each step is
/// mapped through the layout's projection; a rejected projection ends that
/// antenna's loop. `cache` tracks the returned layout.
#[allow(clippy::too_many_arguments)]
pub fn pga_t<R: Rng + ?Sized>(
    model: &ChannelModel,
    cache: &mut LinkCache,
    layout: &ArrayLayout,
    w: &Beamformer,
    k: usize,
    m: usize,
    noise: f64,
    cfg: &SaPgaConfig,
    adagrad: &mut AdaGrad,
    rng: &mut R,
) -> PgaOutcome<ArrayLayout> {
    let mut cur = layout.clone();
    let n_ant = cur.len();
    let mut h_b = vec![Complex64::new(0.0, 0.0); n_ant];
    let mut h_e = h_b.clone();
    let mut iterations = 0;
    let movable: Vec<usize> = cur.movable_indices().collect();
    for n in movable {
        for _ in 0..cfg.inner_max_iter.max(1) {
            iterations += 1;
            let g: [f64; 3] = mc_average_grad(cfg.mc_t.max(1), |_| {
                let draw = draw_gains(model, cache, k, m, cfg.mc_resample, rng);
                cache.bob[k].channel_into(&draw.bob, &mut h_b);
                cache.eve.channel_into(&draw.eve, &mut h_e);
                let db = cache.bob[k].derivative(n, &draw.bob);
                let de = cache.eve.derivative(n, &draw.eve);
                grad_t_from_channels(&h_b, &h_e, &db, &de, w, n, k, noise)
            });
            if g.iter().any(|v| !v.is_finite()) {
                break;
            }
            let t = cur.positions[n];
            let cand = Position3::new(
                t.x + adagrad.increment(3 * n, g[0]),
                t.y + adagrad.increment(3 * n + 1, g[1]),
                t.z + adagrad.increment(3 * n + 2, g[2]),
            );
            let Some(p) = cur.project_candidate(n, cand) else {
                break;
            };
            cur.positions[n] = p;
            cache.update(n, p);
            if p.distance(t) < cfg.tau_t {
                break;
            }
        }
    }
    PgaOutcome {
        value: cur,
        iterations,
        projected: false,
    }
}

/// One outer iteration of the annealing loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Worst-user margin of this iteration's candidate.
    pub objective: f64,
    pub accepted: bool,
    pub temperature: f64,
    /// Margin of the accepted state after the decision.
    pub current: f64,
    /// Best margin seen so far.
    pub best: f64,
    /// `tr(WWᴴ)` of the candidate.
    pub power: f64,
    /// Whether the candidate beamformer was the output of the power
    /// projection.
    pub projected: bool,
    /// Whether the candidate layout and beamformer satisfy every constraint.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaPgaResult {
    /// Highest-margin accepted solution, including the initial one.
    pub best: Solution,
    /// Accepted state after the last iteration.
    pub last: Solution,
    pub trace: Vec<TraceRecord>,
}

/// Simulated-annealing SA-PGA from `init`. Each iteration picks the worst
/// user and its strongest eavesdropper position from the accepted state,
/// runs beamformer then position PGA, and accepts by the Metropolis rule.
/// A rejected candidate restores both beamformer and layout. `observer`
/// sees each trace record with the accepted state after the decision.
pub fn sa_pga<R, F>(
    model: &ChannelModel,
    init: Solution,
    noise: f64,
    cfg: &SaPgaConfig,
    rng: &mut R,
    mut observer: F,
) -> SaPgaResult
where
    R: Rng + ?Sized,
    F: FnMut(&TraceRecord, &Solution),
{
    let n = init.layout.len();
    let users = init.beamformer.num_users();
    let mut ada_w = AdaGrad::new(cfg.delta_w, cfg.adagrad_eps, 2 * n * users);
    let mut ada_t = AdaGrad::new(cfg.delta_t, cfg.adagrad_eps, 3 * n);
    let mut cache = LinkCache::new(model, &init.layout.positions);
    let greedy = cfg.greedy || cfg.t0 <= 0.0;
    let mut temp = cfg.t0;
    let mut prev = init;
    let mut best = prev.clone();
    let mut trace = Vec::with_capacity(cfg.max_iter);

    for iter in 0..cfg.max_iter {
        let (k, m) = (prev.worst_k, prev.best_m);
        let w_out = pga_w(model, &cache, &prev.beamformer, k, m, noise, cfg, &mut ada_w, rng);
        let layout = if cfg.optimize_positions {
            pga_t(
                model,
                &mut cache,
                &prev.layout,
                &w_out.value,
                k,
                m,
                noise,
                cfg,
                &mut ada_t,
                rng,
            )
            .value
        } else {
            prev.layout.clone()
        };
        let power = w_out.value.power();
        let feasible = layout.check_feasible().is_ok() && w_out.value.is_feasible();
        let cand = evaluate_solution(model, layout, w_out.value, noise);
        let accepted = feasible
            && if greedy {
                cand.margin > prev.margin
            } else {
                metropolis_accept(cand.margin, prev.margin, temp, rng)
            };
        let objective = cand.margin;
        if accepted {
            prev = cand;
        } else {
            for i in prev.layout.movable_indices() {
                cache.update(i, prev.layout.positions[i]);
            }
        }
        if prev.margin > best.margin {
            best = prev.clone();
        }
        let rec = TraceRecord {
            iter,
            objective,
            accepted,
            temperature: temp,
            current: prev.margin,
            best: best.margin,
            power,
            projected: w_out.projected,
            feasible,
        };
        observer(&rec, &prev);
        trace.push(rec);
        temp *= cfg.beta;
    }
    SaPgaResult {
        best,
        last: prev,
        trace,
    }
}
