//! Far-field field-response channels.
//!
//! Every path contributes a unit-modulus phase `e^{j k t·p}` with
//! `k = 2π/λ`, weighted by a complex path gain. Bob links use an all-ones
//! receive response; the eavesdropper link adds the receive phase of the
//! virtual position `r_m`, which enters with a minus sign once the receive
//! response is conjugated.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position3;
use crate::math::{self, cis, PI};

/// Unit propagation direction `[cosθ cosφ, cosθ sinφ, sinθ]`.
pub fn direction_vector(theta: f64, phi: f64) -> Position3 {
    let ct = math::cos(theta);
    Position3::new(ct * math::cos(phi), ct * math::sin(phi), math::sin(theta))
}

#[inline]
pub fn wavenumber(lambda: f64) -> f64 {
    2.0 * PI / lambda
}

/// Which end of the link the angles describe; sets the sampling ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSide {
    /// Departure angles toward a legitimate user: θ, φ ∈ [−π/2, π/2].
    Bob,
    /// Arrival angles at the eavesdropper: θ ∈ [0, π], φ ∈ [−π/2, π/2].
    Eve,
}

/// Propagation paths of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    theta: Vec<f64>,
    phi: Vec<f64>,
    dirs: Vec<Position3>,
    gains: Vec<Complex64>,
    /// Per-path variance the gains were drawn with; used when resampling.
    gain_variance: f64,
}

impl PathSet {
    pub fn new(
        theta: Vec<f64>,
        phi: Vec<f64>,
        gains: Vec<Complex64>,
        gain_variance: f64,
    ) -> Result<Self> {
        let l = theta.len();
        if l == 0 || phi.len() != l || gains.len() != l {
            return Err(Error::InvalidConfig(alloc::format!(
                "path set needs L >= 1 with matching lengths, got θ {l}, φ {}, gains {}",
                phi.len(),
                gains.len()
            )));
        }
        let dirs = theta
            .iter()
            .zip(&phi)
            .map(|(&t, &p)| direction_vector(t, p))
            .collect();
        Ok(Self {
            theta,
            phi,
            dirs,
            gains,
            gain_variance,
        })
    }

    /// Draw angles for `side`, then gains with the path-loss variance.
    pub fn sample<R: Rng + ?Sized>(
        l: usize,
        side: LinkSide,
        g0_db: f64,
        distance: f64,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let (theta, phi) = sample_path_angles(l, side, rng);
        let gains = sample_path_gains(l, g0_db, distance, alpha, rng);
        Self::new(
            theta,
            phi,
            gains,
            path_gain_variance(l, g0_db, distance, alpha),
        )
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn directions(&self) -> &[Position3] {
        &self.dirs
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn gain_variance(&self) -> f64 {
        self.gain_variance
    }

    /// Same geometry with different path gains.
    pub fn with_gains(&self, gains: Vec<Complex64>) -> Self {
        assert_eq!(gains.len(), self.len(), "gain count must match path count");
        Self {
            gains,
            ..self.clone()
        }
    }
}

/// Transmit field-response vector of an antenna at `t`: one phase per path.
pub fn transmit_frv(t: Position3, paths: &PathSet, lambda: f64) -> Vec<Complex64> {
    let k = wavenumber(lambda);
    paths.dirs.iter().map(|p| cis(k * t.dot(*p))).collect()
}

/// Receive field-response vector of a receiver at `r`.
pub fn receive_frv(r: Position3, paths: &PathSet, lambda: f64) -> Vec<Complex64> {
    transmit_frv(r, paths, lambda)
}

/// Bob channel in the per-antenna weighted-sum form
/// `h_n = Σ_l σ_l e^{j k t_n·p_l}`.
pub fn bob_channel(positions: &[Position3], paths: &PathSet, lambda: f64) -> Vec<Complex64> {
    let k = wavenumber(lambda);
    positions
        .iter()
        .map(|t| {
            paths
                .dirs
                .iter()
                .zip(&paths.gains)
                .map(|(p, s)| s * cis(k * t.dot(*p)))
                .sum()
        })
        .collect()
}

/// Eavesdropper channel in the weighted-sum form
/// `h_n = Σ_u σ_u e^{−j k r·p_u} e^{j k t_n·p_u}`.
///
/// The receive phase is evaluated on its own: `k r·p` is tens of thousands
/// of radians, so fusing it with the transmit phase would round differently
/// from the cached-phase path used by the optimizer.
pub fn eve_channel(
    positions: &[Position3],
    r: Position3,
    paths: &PathSet,
    lambda: f64,
) -> Vec<Complex64> {
    let k = wavenumber(lambda);
    let folded: Vec<Complex64> = paths
        .dirs
        .iter()
        .zip(&paths.gains)
        .map(|(p, s)| s * cis(-k * r.dot(*p)))
        .collect();
    positions
        .iter()
        .map(|t| {
            paths
                .dirs
                .iter()
                .zip(&folded)
                .map(|(p, s)| s * cis(k * t.dot(*p)))
                .sum()
        })
        .collect()
}

/// Transmit field-response matrix `G` (L x N, row-major) for an array.
pub fn field_response_matrix(
    positions: &[Position3],
    paths: &PathSet,
    lambda: f64,
) -> Vec<Vec<Complex64>> {
    let cols: Vec<Vec<Complex64>> = positions
        .iter()
        .map(|t| transmit_frv(*t, paths, lambda))
        .collect();
    (0..paths.len())
        .map(|l| cols.iter().map(|c| c[l]).collect())
        .collect()
}

fn diag(values: &[Complex64]) -> Vec<Vec<Complex64>> {
    let l = values.len();
    (0..l)
        .map(|i| {
            (0..l)
                .map(|j| if i == j { values[i] } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect()
}

/// Bob channel via the matrix composition `Gᵀ Σᵀ f` with an all-ones `f`.
pub fn bob_channel_matrix_form(
    positions: &[Position3],
    paths: &PathSet,
    lambda: f64,
) -> Vec<Complex64> {
    let g = field_response_matrix(positions, paths, lambda);
    let sigma = diag(&paths.gains);
    let l = paths.len();
    let f = vec![Complex64::new(1.0, 0.0); l];
    // Σᵀ f
    let sf: Vec<Complex64> = (0..l)
        .map(|i| (0..l).map(|j| sigma[j][i] * f[j]).sum())
        .collect();
    // Gᵀ (Σᵀ f)
    (0..positions.len())
        .map(|n| (0..l).map(|i| g[i][n] * sf[i]).sum())
        .collect()
}

/// Eavesdropper channel via `((f^e)^H Σ G)ᵀ`.
pub fn eve_channel_matrix_form(
    positions: &[Position3],
    r: Position3,
    paths: &PathSet,
    lambda: f64,
) -> Vec<Complex64> {
    let g = field_response_matrix(positions, paths, lambda);
    let sigma = diag(&paths.gains);
    let fe = receive_frv(r, paths, lambda);
    let l = paths.len();
    // row vector (f^e)^H Σ
    let row: Vec<Complex64> = (0..l)
        .map(|j| (0..l).map(|i| fe[i].conj() * sigma[i][j]).sum())
        .collect();
    (0..positions.len())
        .map(|n| (0..l).map(|j| row[j] * g[j][n]).sum())
        .collect()
}

/// `10^{g0/10} / L · d^{−α}`.
pub fn path_gain_variance(l: usize, g0_db: f64, distance: f64, alpha: f64) -> f64 {
    math::pow(10.0, g0_db / 10.0) / l as f64 * math::pow(distance, -alpha)
}

/// Complex Gaussian path gains `CN(0, path_gain_variance)`.
pub fn sample_path_gains<R: Rng + ?Sized>(
    l: usize,
    g0_db: f64,
    distance: f64,
    alpha: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    complex_normal(l, path_gain_variance(l, g0_db, distance, alpha), rng)
}

/// `count` i.i.d. draws from `CN(0, variance)`.
pub fn complex_normal<R: Rng + ?Sized>(count: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    let s = math::sqrt(0.5 * variance);
    (0..count)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Elevation and azimuth per path, uniform over the side's ranges.
pub fn sample_path_angles<R: Rng + ?Sized>(
    l: usize,
    side: LinkSide,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let half = Uniform::new_inclusive(-PI / 2.0, PI / 2.0).expect("finite range");
    let theta_dist = match side {
        LinkSide::Bob => half,
        LinkSide::Eve => Uniform::new_inclusive(0.0, PI).expect("finite range"),
    };
    let mut theta = Vec::with_capacity(l);
    let mut phi = Vec::with_capacity(l);
    for _ in 0..l {
        theta.push(theta_dist.sample(rng));
        phi.push(half.sample(rng));
    }
    (theta, phi)
}

/// All channel vectors for one antenna layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_bob: Vec<Vec<Complex64>>,
    pub h_eve: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn num_antennas(&self) -> usize {
        self.h_bob.first().map_or(0, Vec::len)
    }

    /// Multiply every channel vector by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let scale = |v: &Vec<Vec<Complex64>>| {
            v.iter()
                .map(|h| h.iter().map(|z| z * c).collect())
                .collect()
        };
        Self {
            h_bob: scale(&self.h_bob),
            h_eve: scale(&self.h_eve),
        }
    }
}

/// Layout-independent propagation environment: every Bob's paths, the
/// eavesdropper's shared transmit paths and the virtual positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub lambda: f64,
    pub bob_paths: Vec<PathSet>,
    pub eve_paths: PathSet,
    pub eve_positions: Vec<Position3>,
}

impl ChannelModel {
    pub fn num_users(&self) -> usize {
        self.bob_paths.len()
    }

    pub fn num_eves(&self) -> usize {
        self.eve_positions.len()
    }

    pub fn realize(&self, positions: &[Position3]) -> ChannelRealization {
        ChannelRealization {
            h_bob: self
                .bob_paths
                .iter()
                .map(|p| bob_channel(positions, p, self.lambda))
                .collect(),
            h_eve: self
                .eve_positions
                .iter()
                .map(|r| eve_channel(positions, *r, &self.eve_paths, self.lambda))
                .collect(),
        }
    }

    /// Eavesdropper path gains folded with the receive phase of position
    /// `m`: `σ_u e^{−j k r_m·p_u}`. With these, the Eve channel has the same
    /// shape as a Bob channel.
    pub fn eve_effective_gains(&self, m: usize, gains: &[Complex64]) -> Vec<Complex64> {
        let k = wavenumber(self.lambda);
        let r = self.eve_positions[m];
        self.eve_paths
            .dirs
            .iter()
            .zip(gains)
            .map(|(p, s)| s * cis(-k * r.dot(*p)))
            .collect()
    }
}

/// Cached per-antenna path phases `e^{j k t_n·p_l}` for one path set, so
/// that channels for many gain draws cost a weighted sum each.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    k: f64,
    dirs: Vec<Position3>,
    phases: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(positions: &[Position3], paths: &PathSet, lambda: f64) -> Self {
        let mut table = Self {
            k: wavenumber(lambda),
            dirs: paths.dirs.clone(),
            phases: vec![Complex64::new(0.0, 0.0); positions.len() * paths.len()],
        };
        for (n, t) in positions.iter().enumerate() {
            table.update(n, *t);
        }
        table
    }

    pub fn num_paths(&self) -> usize {
        self.dirs.len()
    }

    /// Recompute the phases of antenna `n` at its new position `t`.
    pub fn update(&mut self, n: usize, t: Position3) {
        let l = self.dirs.len();
        for (slot, p) in self.phases[n * l..(n + 1) * l].iter_mut().zip(&self.dirs) {
            *slot = cis(self.k * t.dot(*p));
        }
    }

    /// Channel vector for the given (effective) gains.
    pub fn channel_into(&self, gains: &[Complex64], out: &mut [Complex64]) {
        let l = self.dirs.len();
        for (h, row) in out.iter_mut().zip(self.phases.chunks_exact(l)) {
            *h = row.iter().zip(gains).map(|(e, s)| e * s).sum();
        }
    }

    /// `∂h_n/∂t_n` for the given gains: `Σ_l σ_l j k p_l e^{j k t_n·p_l}`.
    pub fn derivative(&self, n: usize, gains: &[Complex64]) -> [Complex64; 3] {
        let l = self.dirs.len();
        let mut d = [Complex64::new(0.0, 0.0); 3];
        for ((e, s), p) in self.phases[n * l..(n + 1) * l].iter().zip(gains).zip(&self.dirs) {
            let term = e * s * Complex64::new(0.0, self.k);
            d[0] += term * p.x;
            d[1] += term * p.y;
            d[2] += term * p.z;
        }
        d
    }
}
