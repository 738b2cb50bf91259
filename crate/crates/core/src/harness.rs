//! Scenario construction, fixed-array baselines, the one-dimensional
//! position search and Monte-Carlo parameter sweeps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, LinkSide, PathSet};
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, EveRegion, EveSampling, MoveRegion, Pairing, Position3};
use crate::math::{self, PI};
use crate::metrics::Beamformer;
use crate::optimizer::{
    evaluate_solution, init_beamformer, sa_pga, McResample, SaPgaConfig, SaPgaResult, Solution,
};
use crate::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    /// Fixed uniform linear array along x.
    Ula,
    /// Fixed square planar array in the x-y plane.
    Upa,
    /// Square planar array whose four corner elements move.
    #[default]
    Ma,
}

impl ArrayKind {
    pub fn label(self) -> &'static str {
        match self {
            ArrayKind::Ula => "ULA",
            ArrayKind::Upa => "UPA",
            ArrayKind::Ma => "MA",
        }
    }
}

impl fmt::Display for ArrayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the fixed-array baselines choose their beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineBeam {
    /// Maximum-ratio transmission, no optimization.
    #[default]
    Mrt,
    /// The annealing loop run on the beamformer alone.
    Optimized,
}

/// Every scenario and optimizer parameter. Lengths in meters, powers in
/// watts, gains in dB, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lambda: f64,
    pub users: usize,
    pub eve_points: usize,
    pub antennas: usize,
    pub paths: usize,
    pub bob_distance_range: [f64; 2],
    /// Distance from the array to the center of the eavesdropper square.
    pub eve_distance: f64,
    /// Half the side of the eavesdropper square.
    pub eve_half_length: f64,
    pub bs_height: f64,
    pub p_max: f64,
    pub noise: f64,
    pub g0_db: f64,
    pub alpha: f64,
    pub array_kind: ArrayKind,
    /// Overrides the default corner mask of the movable array.
    pub movable_mask: Option<Vec<bool>>,
    /// Side of each movement box; defaults to 4λ.
    pub move_range: Option<f64>,
    /// Defaults to 4λ for the movable array and λ/2 otherwise.
    pub d_min: Option<f64>,
    pub pairing: Pairing,
    pub eve_sampling: EveSampling,
    pub baseline_beam: BaselineBeam,
    pub t0: f64,
    pub beta: f64,
    pub delta_w: f64,
    pub delta_t: f64,
    pub tau_w: f64,
    pub tau_t: f64,
    pub max_iter: usize,
    pub inner_max_iter: usize,
    pub mc_w: usize,
    pub mc_t: usize,
    pub mc_resample: McResample,
    pub greedy: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let sa = SaPgaConfig::default();
        Self {
            lambda: 0.0107,
            users: 5,
            eve_points: 3,
            antennas: 9,
            paths: 3,
            bob_distance_range: [25.0, 35.0],
            eve_distance: 50.0,
            eve_half_length: 2.0,
            bs_height: 10.0,
            p_max: 0.01,
            noise: 5e-4,
            g0_db: 30.0,
            alpha: 2.0,
            array_kind: ArrayKind::Ma,
            movable_mask: None,
            move_range: None,
            d_min: None,
            pairing: Pairing::Consecutive,
            eve_sampling: EveSampling::Uniform,
            baseline_beam: BaselineBeam::Mrt,
            t0: sa.t0,
            beta: sa.beta,
            delta_w: sa.delta_w,
            delta_t: sa.delta_t,
            tau_w: sa.tau_w,
            tau_t: sa.tau_t,
            max_iter: sa.max_iter,
            inner_max_iter: sa.inner_max_iter,
            mc_w: sa.mc_w,
            mc_t: sa.mc_t,
            mc_resample: sa.mc_resample,
            greedy: sa.greedy,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn move_range(&self) -> f64 {
        self.move_range.unwrap_or(4.0 * self.lambda)
    }

    pub fn d_min_for(&self, kind: ArrayKind) -> f64 {
        self.d_min.unwrap_or(match kind {
            ArrayKind::Ma => 4.0 * self.lambda,
            ArrayKind::Ula | ArrayKind::Upa => self.lambda / 2.0,
        })
    }

    pub fn sa_config(&self) -> SaPgaConfig {
        SaPgaConfig {
            t0: self.t0,
            beta: self.beta,
            delta_w: self.delta_w,
            delta_t: self.delta_t,
            tau_w: self.tau_w,
            tau_t: self.tau_t,
            max_iter: self.max_iter,
            inner_max_iter: self.inner_max_iter,
            mc_w: self.mc_w,
            mc_t: self.mc_t,
            greedy: self.greedy,
            mc_resample: self.mc_resample,
            ..SaPgaConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("eve_distance", self.eve_distance),
            ("eve_half_length", self.eve_half_length),
            ("bs_height", self.bs_height),
            ("p_max", self.p_max),
            ("noise", self.noise),
            ("alpha", self.alpha),
            ("move_range", self.move_range()),
            ("d_min", self.d_min_for(self.array_kind)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("users", self.users),
            ("eve_points", self.eve_points),
            ("antennas", self.antennas),
            ("paths", self.paths),
            ("mc_w", self.mc_w),
            ("mc_t", self.mc_t),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.antennas < 2 {
            return Err(Error::InvalidConfig("antennas must be at least 2".to_string()));
        }
        let [lo, hi] = self.bob_distance_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bob_distance_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if !(self.beta >= 0.0 && self.t0 >= 0.0 && self.g0_db.is_finite()) {
            return Err(Error::InvalidConfig(
                "t0 and beta must be nonnegative and g0_db finite".to_string(),
            ));
        }
        if !(self.tau_w >= 0.0 && self.tau_t >= 0.0 && self.delta_w > 0.0 && self.delta_t > 0.0) {
            return Err(Error::InvalidConfig(
                "step sizes must be positive and thresholds nonnegative".to_string(),
            ));
        }
        if self.eve_distance <= self.eve_half_length {
            return Err(Error::InfeasibleScenario(format!(
                "eavesdropper square half-length {} reaches the array at distance {}",
                self.eve_half_length, self.eve_distance
            )));
        }
        Ok(())
    }
}

fn square_side(n: usize) -> Result<usize> {
    let side = math::sqrt(n as f64) as usize;
    [side, side + 1]
        .into_iter()
        .find(|s| s * s == n)
        .ok_or_else(|| Error::InfeasibleScenario(format!("a planar array needs a square antenna count, got {n}")))
}

/// `n` fixed elements along x at spacing `spacing`, starting at the origin.
pub fn ula_positions(n: usize, spacing: f64) -> Vec<Position3> {
    (0..n)
        .map(|i| Position3::new(i as f64 * spacing, 0.0, 0.0))
        .collect()
}

/// Square grid centered at the origin in the x-y plane, raster order
/// (x fastest).
pub fn upa_positions(n: usize, spacing: f64) -> Result<Vec<Position3>> {
    let side = square_side(n)?;
    let off = (side as f64 - 1.0) / 2.0;
    Ok((0..n)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            Position3::new((col as f64 - off) * spacing, (row as f64 - off) * spacing, 0.0)
        })
        .collect())
}

/// Planar array at λ/2 whose corners move. Each corner box extends outward
/// from the corner by the movement range in x and y, with z pinned; the
/// corners start at their box centers.
pub fn ma_layout(cfg: &ScenarioConfig) -> Result<ArrayLayout> {
    let n = cfg.antennas;
    let side = square_side(n)?;
    let grid = upa_positions(n, cfg.lambda / 2.0)?;
    let corners = [0, side - 1, n - side, n - 1];
    let movable = match &cfg.movable_mask {
        Some(mask) if mask.len() != n => {
            return Err(Error::InfeasibleScenario(format!(
                "movable_mask has {} entries for {n} antennas",
                mask.len()
            )))
        }
        Some(mask) => mask.clone(),
        None => (0..n).map(|i| corners.contains(&i)).collect(),
    };
    let a = cfg.move_range();
    let mut positions = grid.clone();
    let mut regions = Vec::with_capacity(n);
    for (i, p) in grid.iter().enumerate() {
        if !movable[i] {
            regions.push(MoveRegion::point(*p));
            continue;
        }
        // outward along each axis; interior elements get a centered box
        let span = |v: f64| {
            if v > 0.0 {
                (v, v + a)
            } else if v < 0.0 {
                (v - a, v)
            } else {
                (v - a / 2.0, v + a / 2.0)
            }
        };
        let region = MoveRegion::new(span(p.x), span(p.y), (0.0, 0.0))?;
        positions[i] = region.center();
        regions.push(region);
    }
    ArrayLayout::new(positions, regions, movable, cfg.d_min_for(ArrayKind::Ma), cfg.pairing)
        .map_err(|e| Error::InfeasibleScenario(e.to_string()))
}

pub fn array_layout(kind: ArrayKind, cfg: &ScenarioConfig) -> Result<ArrayLayout> {
    let spacing = cfg.lambda / 2.0;
    let d_min = cfg.d_min_for(kind);
    let fixed = |positions| {
        ArrayLayout::fixed(positions, d_min).map_err(|e| Error::InfeasibleScenario(e.to_string()))
    };
    match kind {
        ArrayKind::Ula => fixed(ula_positions(cfg.antennas, spacing)),
        ArrayKind::Upa => fixed(upa_positions(cfg.antennas, spacing)?),
        ArrayKind::Ma => ma_layout(cfg),
    }
}

/// The layout-independent random draw of one replicate: users, virtual
/// eavesdropper positions and every path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub bob_positions: Vec<Position3>,
    pub bob_distances: Vec<f64>,
    pub eve_region: EveRegion,
    pub model: ChannelModel,
}

/// Draw users on the ground at distance `U[lo, hi]` and azimuth
/// `U[−π/2, π/2]`, virtual eavesdroppers in the square, then Bob paths
/// (per-user path loss) and the shared eavesdropper paths (path loss at the
/// square's center distance).
pub fn draw_environment<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Environment> {
    cfg.validate()?;
    let [lo, hi] = cfg.bob_distance_range;
    let dist = Uniform::new_inclusive(lo, hi)
        .map_err(|e| Error::InvalidConfig(format!("bob_distance_range: {e}")))?;
    let azimuth = Uniform::new_inclusive(-PI / 2.0, PI / 2.0).expect("finite range");
    let mut bob_positions = Vec::with_capacity(cfg.users);
    let mut bob_distances = Vec::with_capacity(cfg.users);
    for _ in 0..cfg.users {
        let d = dist.sample(rng);
        let az = azimuth.sample(rng);
        bob_distances.push(d);
        bob_positions.push(Position3::new(d * math::cos(az), d * math::sin(az), 0.0));
    }
    let eve_region = EveRegion::new(cfg.eve_distance, cfg.eve_half_length, cfg.bs_height)
        .map_err(|e| Error::InfeasibleScenario(e.to_string()))?;
    let eve_positions = eve_region.sample_virtual_eves(cfg.eve_points, cfg.eve_sampling, rng);
    let bob_paths = bob_distances
        .iter()
        .map(|&d| PathSet::sample(cfg.paths, LinkSide::Bob, cfg.g0_db, d, cfg.alpha, rng))
        .collect::<Result<Vec<_>>>()?;
    let eve_paths = PathSet::sample(
        cfg.paths,
        LinkSide::Eve,
        cfg.g0_db,
        cfg.eve_distance,
        cfg.alpha,
        rng,
    )?;
    Ok(Environment {
        bob_positions,
        bob_distances,
        eve_region,
        model: ChannelModel {
            lambda: cfg.lambda,
            bob_paths,
            eve_paths,
            eve_positions,
        },
    })
}

/// An environment plus an array, with the maximum-ratio starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub env: Environment,
    pub initial: Solution,
}

pub fn scenario_for(env: Environment, kind: ArrayKind, cfg: &ScenarioConfig) -> Result<Scenario> {
    let layout = array_layout(kind, cfg)?;
    let ch = env.model.realize(&layout.positions);
    let w = init_beamformer(&ch, cfg.p_max);
    let initial = evaluate_solution(&env.model, layout, w, cfg.noise);
    Ok(Scenario { env, initial })
}

/// Draw an environment and place the configured array in it.
pub fn build_scenario<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Scenario> {
    let env = draw_environment(cfg, rng)?;
    scenario_for(env, cfg.array_kind, cfg)
}

/// Random streams of replicate `rep`: the environment draw and the
/// optimizer's own randomness never share a stream.
pub fn replicate_streams(seed: u64, rep: u64) -> (rand_chacha::ChaCha8Rng, rand_chacha::ChaCha8Rng) {
    (stream_rng(seed, 2 * rep), stream_rng(seed, 2 * rep + 1))
}

/// Optimize (or, for a fixed array with MRT baselines, just evaluate) the
/// configured method in one environment.
pub fn solve_method<R: Rng + ?Sized>(
    env: &Environment,
    kind: ArrayKind,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Solution> {
    let scenario = scenario_for(env.clone(), kind, cfg)?;
    let sa = cfg.sa_config();
    Ok(match (kind, cfg.baseline_beam) {
        (ArrayKind::Ma, _) => sa_pga(&env.model, scenario.initial, cfg.noise, &sa, rng, |_, _| {}).best,
        (_, BaselineBeam::Mrt) => scenario.initial,
        (_, BaselineBeam::Optimized) => {
            let sa = SaPgaConfig {
                optimize_positions: false,
                ..sa
            };
            sa_pga(&env.model, scenario.initial, cfg.noise, &sa, rng, |_, _| {}).best
        }
    })
}

/// Full annealing run for the configured array, returning the trace too.
pub fn run_optimize(cfg: &ScenarioConfig) -> Result<(Scenario, SaPgaResult)> {
    let (mut env_rng, mut opt_rng) = replicate_streams(cfg.seed, 0);
    let scenario = build_scenario(cfg, &mut env_rng)?;
    let result = sa_pga(
        &scenario.env.model,
        scenario.initial.clone(),
        cfg.noise,
        &cfg.sa_config(),
        &mut opt_rng,
        |_, _| {},
    );
    Ok((scenario, result))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Paths,
    Alpha,
    Noise,
    /// Distance of the eavesdropper square.
    Distance,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Paths => "paths",
            SweepVar::Alpha => "alpha",
            SweepVar::Noise => "noise",
            SweepVar::Distance => "distance",
        }
    }

    /// Copy of `cfg` with this variable set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut out = cfg.clone();
        match self {
            SweepVar::Paths => {
                if !(value >= 1.0 && libm::trunc(value) == value) {
                    return Err(Error::InvalidConfig(format!(
                        "path count must be a positive integer, got {value}"
                    )));
                }
                out.paths = value as usize;
            }
            SweepVar::Alpha => out.alpha = value,
            SweepVar::Noise => out.noise = value,
            SweepVar::Distance => out.eve_distance = value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl core::str::FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paths" => Ok(SweepVar::Paths),
            "alpha" => Ok(SweepVar::Alpha),
            "noise" => Ok(SweepVar::Noise),
            "distance" => Ok(SweepVar::Distance),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep variable {other:?} (expected paths, alpha, noise or distance)"
            ))),
        }
    }
}

/// Mean outcome of one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub method: ArrayKind,
    pub rep_count: usize,
    pub mean_secrecy: f64,
    /// Worst user's rate.
    pub mean_bob_capacity: f64,
    /// Strongest eavesdropper position's rate on the worst user's stream.
    pub mean_eve_capacity: f64,
    pub seed_base: u64,
}

pub const SWEEP_METHODS: [ArrayKind; 3] = [ArrayKind::Ma, ArrayKind::Ula, ArrayKind::Upa];

/// Every grid point times every method, `reps` replicates each. Replicate
/// `r` draws its environment from the same stream at every grid point and
/// for every method. Results are ordered by grid point, then method.
pub fn run_sweep<F>(
    var: SweepVar,
    grid: &[f64],
    reps: usize,
    methods: &[ArrayKind],
    cfg: &ScenarioConfig,
    seed: u64,
    mut progress: F,
) -> Result<Vec<SweepResult>>
where
    F: FnMut(usize, usize),
{
    if grid.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".to_string()));
    }
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".to_string()));
    }
    let mut out = Vec::with_capacity(grid.len() * methods.len());
    for (gi, &value) in grid.iter().enumerate() {
        let point = var.apply(cfg, value)?;
        let mut sums = vec![[0.0f64; 3]; methods.len()];
        for rep in 0..reps {
            let (mut env_rng, opt_seed) = replicate_streams(seed, rep as u64);
            let env = draw_environment(&point, &mut env_rng)?;
            for (mi, &kind) in methods.iter().enumerate() {
                let mut opt_rng = opt_seed.clone();
                let s = solve_method(&env, kind, &point, &mut opt_rng)?;
                sums[mi][0] += s.secrecy;
                sums[mi][1] += s.bob_rate;
                sums[mi][2] += s.eve_rate;
            }
        }
        for (mi, &kind) in methods.iter().enumerate() {
            let n = reps as f64;
            out.push(SweepResult {
                sweep_var: var.name().to_string(),
                sweep_value: value,
                method: kind,
                rep_count: reps,
                mean_secrecy: sums[mi][0] / n,
                mean_bob_capacity: sums[mi][1] / n,
                mean_eve_capacity: sums[mi][2] / n,
                seed_base: seed,
            });
        }
        progress(gi + 1, grid.len());
    }
    Ok(out)
}

/// Grid of candidate offsets for the one-dimensional search: `0, step, …,
/// range`.
pub fn search_grid(step: f64, range: f64) -> Vec<f64> {
    let count = libm::round(range / step) as usize;
    (0..=count).map(|i| i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Antennas `1..=n` each take their best offset in turn.
    MoveAll,
    /// Antennas `1..=n` searched jointly over every offset combination.
    MoveParts,
}

impl SearchMode {
    pub fn name(self) -> &'static str {
        match self {
            SearchMode::MoveAll => "move_all",
            SearchMode::MoveParts => "move_parts",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub mode: SearchMode,
    pub moved: usize,
    pub secrecy: f64,
    pub margin: f64,
    pub baseline_secrecy: f64,
    /// Chosen offset of every antenna, meters.
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTable {
    pub baseline_secrecy: f64,
    pub baseline_margin: f64,
    pub rows: Vec<SearchRow>,
}

/// Per-beam projections `conj(h_n) w_{n,j}` of every antenna at every grid
/// offset, so a trial layout's `h^H w_j` is a sum of table entries.
struct OffsetTable {
    /// Index `((link * antennas + n) * offsets + g) * beams + j`; links are
    /// Bobs then eavesdropper positions.
    coef: Vec<Complex64>,
    links: usize,
    antennas: usize,
    offsets: usize,
    beams: usize,
    users: usize,
}

impl OffsetTable {
    fn new(model: &ChannelModel, base: &[Position3], offsets: &[f64], w: &Beamformer) -> Self {
        let users = model.num_users();
        let links = users + model.num_eves();
        let beams = w.num_users();
        let mut coef = Vec::with_capacity(links * base.len() * offsets.len() * beams);
        for link in 0..links {
            for (n, p) in base.iter().enumerate() {
                for &o in offsets {
                    let t = [Position3::new(p.x, p.y + o, p.z)];
                    let h = if link < users {
                        crate::channel::bob_channel(&t, &model.bob_paths[link], model.lambda)[0]
                    } else {
                        let r = model.eve_positions[link - users];
                        crate::channel::eve_channel(&t, r, &model.eve_paths, model.lambda)[0]
                    };
                    coef.extend(w.columns().map(|col| h.conj() * col[n]));
                }
            }
        }
        Self {
            coef,
            links,
            antennas: base.len(),
            offsets: offsets.len(),
            beams,
            users,
        }
    }

    fn entry(&self, link: usize, n: usize, g: usize) -> &[Complex64] {
        let at = ((link * self.antennas + n) * self.offsets + g) * self.beams;
        &self.coef[at..at + self.beams]
    }

    /// Projections of every link with antennas `from..` at `choice`.
    fn partial(&self, choice: &[usize], from: usize, out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for link in 0..self.links {
            let dst = &mut out[link * self.beams..(link + 1) * self.beams];
            for (n, &g) in choice.iter().enumerate().skip(from) {
                for (d, c) in dst.iter_mut().zip(self.entry(link, n, g)) {
                    *d += c;
                }
            }
        }
    }

    /// Add antenna `n` at offset `g` to `partial`, writing into `out`.
    fn with_antenna(&self, partial: &[Complex64], n: usize, g: usize, out: &mut [Complex64]) {
        for link in 0..self.links {
            let span = link * self.beams..(link + 1) * self.beams;
            for ((d, p), c) in out[span.clone()]
                .iter_mut()
                .zip(&partial[span])
                .zip(self.entry(link, n, g))
            {
                *d = p + c;
            }
        }
    }

    /// Worst-user margin from per-link projections. The log is monotone, so
    /// the worst user is found on SINR ratios and one log is taken.
    fn margin(&self, proj: &[Complex64], noise: f64) -> f64 {
        let sinr = |link: usize, k: usize| {
            let a = &proj[link * self.beams..(link + 1) * self.beams];
            let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            let own = a[k].norm_sqr();
            own / (total - own + noise)
        };
        let mut worst = f64::INFINITY;
        for k in 0..self.users {
            let eve = (self.users..self.links)
                .map(|m| sinr(m, k))
                .fold(0.0, f64::max);
            worst = worst.min((1.0 + sinr(k, k)) / (1.0 + eve));
        }
        math::log2(worst)
    }

    /// Sums antennas `1..` first and antenna 0 last, the same order the
    /// odometer uses, so a layout scores bit-identically in both modes.
    fn margin_of(&self, choice: &[usize], noise: f64, scratch: &mut [Complex64]) -> f64 {
        let mut rest = vec![Complex64::new(0.0, 0.0); scratch.len()];
        self.partial(choice, 1, &mut rest);
        self.with_antenna(&rest, 0, choice[0], scratch);
        self.margin(scratch, noise)
    }
}

/// One-dimensional search for a linear array: each antenna may shift along
/// y by one of `offsets` with the beamformer frozen at maximum-ratio
/// transmission for the unshifted array. Rows for `n = 1..=N` in both
/// modes. Both modes include the unshifted choice, so every row is at least
/// the baseline; the joint search covers every greedy choice, so it is never
/// below the greedy row.
pub fn one_dim_search(
    model: &ChannelModel,
    base: &[Position3],
    offsets: &[f64],
    p_max: f64,
    noise: f64,
) -> SearchTable {
    let n = base.len();
    let w = init_beamformer(&model.realize(base), p_max);
    let table = OffsetTable::new(model, base, offsets, &w);
    let width = table.links * table.beams;
    let mut scratch = vec![Complex64::new(0.0, 0.0); width];
    let mut choice = vec![0usize; n];
    let baseline_margin = table.margin_of(&choice, noise, &mut scratch);
    let baseline_secrecy = baseline_margin.max(0.0);
    let offsets_of = |c: &[usize]| c.iter().map(|&g| offsets[g]).collect::<Vec<_>>();
    let mut rows = Vec::with_capacity(2 * n);

    let mut greedy_margin = baseline_margin;
    for moved in 1..=n {
        let j = moved - 1;
        let mut best = (greedy_margin, choice[j]);
        for g in 0..offsets.len() {
            choice[j] = g;
            let m = table.margin_of(&choice, noise, &mut scratch);
            if m > best.0 {
                best = (m, g);
            }
        }
        choice[j] = best.1;
        greedy_margin = best.0;
        rows.push(SearchRow {
            mode: SearchMode::MoveAll,
            moved,
            secrecy: greedy_margin.max(0.0),
            margin: greedy_margin,
            baseline_secrecy,
            offsets: offsets_of(&choice),
        });
    }

    // Odometer over the first `moved` antennas, antenna 0 fastest; the sum
    // over antennas 1.. is refreshed only when a higher digit turns.
    let mut rest = vec![Complex64::new(0.0, 0.0); width];
    for moved in 1..=n {
        let mut trial = vec![0usize; n];
        let mut best = (baseline_margin, trial.clone());
        table.partial(&trial, 1, &mut rest);
        loop {
            for g in 0..offsets.len() {
                trial[0] = g;
                table.with_antenna(&rest, 0, g, &mut scratch);
                let m = table.margin(&scratch, noise);
                if m > best.0 {
                    best = (m, trial.clone());
                }
            }
            trial[0] = 0;
            let mut i = 1;
            while i < moved {
                trial[i] += 1;
                if trial[i] < offsets.len() {
                    break;
                }
                trial[i] = 0;
                i += 1;
            }
            if i >= moved {
                break;
            }
            table.partial(&trial, 1, &mut rest);
        }
        rows.push(SearchRow {
            mode: SearchMode::MoveParts,
            moved,
            secrecy: best.0.max(0.0),
            margin: best.0,
            baseline_secrecy,
            offsets: offsets_of(&best.1),
        });
    }
    SearchTable {
        baseline_secrecy,
        baseline_margin,
        rows,
    }
}

/// Antenna count, spacing and offset grid of the default one-dimensional
/// search: six elements at λ/2, offsets `0..=4λ` in steps of λ/2.
pub fn one_dim_setup(cfg: &ScenarioConfig) -> (Vec<Position3>, Vec<f64>) {
    (
        ula_positions(6, cfg.lambda / 2.0),
        search_grid(cfg.lambda / 2.0, 4.0 * cfg.lambda),
    )
}

/// Draw an environment from `cfg.seed` and run the default search.
pub fn run_one_dim_search(cfg: &ScenarioConfig) -> Result<SearchTable> {
    let (mut env_rng, _) = replicate_streams(cfg.seed, 0);
    let env = draw_environment(cfg, &mut env_rng)?;
    let (base, offsets) = one_dim_setup(cfg);
    Ok(one_dim_search(&env.model, &base, &offsets, cfg.p_max, cfg.noise))
}

/// Worst finite-difference disagreement of the analytic gradients over a
/// batch of random instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradAudit {
    pub instances: usize,
    pub max_err_w: f64,
    pub max_err_t: f64,
}

pub const FD_STEP_W: f64 = 1e-6;
pub const FD_STEP_T: f64 = 1e-9;

fn relative_l2(analytic: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    math::sqrt(num / den)
}

/// Compare `grad_w` and `grad_t` against central differences on
/// `instances` random draws with the configured shapes. Each instance uses
/// stream `i` of `seed`: an environment, the configured array jittered by
/// up to λ per axis, a random beamformer at the power budget, and a random
/// (user, eavesdropper, antenna) triple.
pub fn gradient_audit(cfg: &ScenarioConfig, instances: usize, seed: u64) -> Result<GradAudit> {
    use crate::gradients::{fd_oracle, grad_t, grad_w};
    use crate::metrics::objective_value;

    let base = array_layout(cfg.array_kind, cfg)?.positions;
    let mut audit = GradAudit {
        instances,
        max_err_w: 0.0,
        max_err_t: 0.0,
    };
    for i in 0..instances {
        let mut rng = stream_rng(seed, i as u64);
        let env = draw_environment(cfg, &mut rng)?;
        let jitter = Uniform::new_inclusive(-cfg.lambda, cfg.lambda).expect("finite range");
        let positions: Vec<Position3> = base
            .iter()
            .map(|p| {
                Position3::new(
                    p.x + jitter.sample(&mut rng),
                    p.y + jitter.sample(&mut rng),
                    p.z + jitter.sample(&mut rng),
                )
            })
            .collect();
        let n = positions.len();
        let mut cols: Vec<Vec<Complex64>> = (0..cfg.users)
            .map(|_| crate::channel::complex_normal(n, 1.0, &mut rng))
            .collect();
        let total: f64 = cols.iter().map(|c| math::norm_sqr(c)).sum();
        let scale = math::sqrt(cfg.p_max / total);
        for z in cols.iter_mut().flatten() {
            *z *= scale;
        }
        let w = Beamformer::from_columns(&cols, cfg.p_max);
        let k = rng.random_range(0..cfg.users);
        let m = rng.random_range(0..cfg.eve_points);
        let ant = rng.random_range(0..n);
        let model = &env.model;
        let ch = model.realize(&positions);

        let g = grad_w(&ch, &w, k, m, cfg.noise);
        let analytic: Vec<f64> = g.iter().flat_map(|z| [z.re, z.im]).collect();
        let x0: Vec<f64> = w.column(k).iter().flat_map(|z| [z.re, z.im]).collect();
        let mut trial = w.clone();
        let fd = fd_oracle(
            |x| {
                for (j, z) in trial.column_mut(k).iter_mut().enumerate() {
                    *z = Complex64::new(x[2 * j], x[2 * j + 1]);
                }
                objective_value(&ch, &trial, cfg.noise, k, m)
            },
            &x0,
            FD_STEP_W,
        )?;
        audit.max_err_w = audit.max_err_w.max(relative_l2(&analytic, &fd));

        let g = grad_t(model, &positions, &w, ant, k, m, cfg.noise);
        let mut moved = positions.clone();
        let fd = fd_oracle(
            |x| {
                moved[ant] = Position3::new(x[0], x[1], x[2]);
                objective_value(&model.realize(&moved), &w, cfg.noise, k, m)
            },
            &positions[ant].to_array(),
            FD_STEP_T,
        )?;
        audit.max_err_t = audit.max_err_t.max(relative_l2(&g, &fd));
    }
    Ok(audit)
}
