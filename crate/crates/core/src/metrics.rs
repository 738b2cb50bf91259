//! SINRs, achievable rates and the worst-user / best-eavesdropper secrecy
//! rate. All rates are in bits/s/Hz.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::math::{self, inner, norm_sqr};

/// Transmit beamforming matrix `W = [w_1 … w_K]` (N x K, column-major)
/// under a total power budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformer {
    n: usize,
    k: usize,
    data: Vec<Complex64>,
    pub p_max: f64,
}

/// Slack on the power budget check.
pub const POWER_SLACK: f64 = 1e-9;

impl Beamformer {
    pub fn zeros(n: usize, k: usize, p_max: f64) -> Self {
        Self {
            n,
            k,
            data: vec![Complex64::new(0.0, 0.0); n * k],
            p_max,
        }
    }

    pub fn from_columns(columns: &[Vec<Complex64>], p_max: f64) -> Self {
        let k = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == n), "ragged beamformer columns");
        Self {
            n,
            k,
            data: columns.iter().flatten().copied().collect(),
            p_max,
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.n
    }

    pub fn num_users(&self) -> usize {
        self.k
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn column_mut(&mut self, k: usize) -> &mut [Complex64] {
        &mut self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.k)
    }

    /// `tr(W W^H)`.
    pub fn power(&self) -> f64 {
        norm_sqr(&self.data)
    }

    pub fn column_power(&self, k: usize) -> f64 {
        norm_sqr(self.column(k))
    }

    pub fn is_feasible(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.power() <= self.p_max + POWER_SLACK
    }
}

/// `|h^H w_k|² / (Σ_{k'≠k} |h^H w_{k'}|² + σ²)` for one receive channel.
pub fn sinr(h: &[Complex64], w: &Beamformer, k: usize, noise: f64) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (j, col) in w.columns().enumerate() {
        let g = inner(h, col).norm_sqr();
        if j == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    signal / (interference + noise)
}

pub fn sinr_bob(ch: &ChannelRealization, w: &Beamformer, k: usize, noise: f64) -> f64 {
    sinr(&ch.h_bob[k], w, k, noise)
}

pub fn sinr_eve(ch: &ChannelRealization, w: &Beamformer, m: usize, k: usize, noise: f64) -> f64 {
    sinr(&ch.h_eve[m], w, k, noise)
}

#[inline]
pub fn rate(sinr: f64) -> f64 {
    math::log2(1.0 + sinr)
}

/// Per-user rates plus the worst user and its strongest eavesdropper
/// position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub rate_bob: Vec<f64>,
    /// `rate_eve[m][k]`: eavesdropper at position `m` decoding user `k`.
    pub rate_eve: Vec<Vec<f64>>,
    /// `rate_bob[k] − max_m rate_eve[m][k]`, without the floor at zero.
    pub margin: Vec<f64>,
    /// `max(margin[k], 0)`.
    pub secrecy: Vec<f64>,
    pub worst_k: usize,
    pub best_m: usize,
}

impl SecrecyReport {
    /// Worst-user secrecy rate, floored at zero.
    pub fn worst_secrecy(&self) -> f64 {
        self.secrecy[self.worst_k]
    }

    /// Worst-user margin without the floor; the quantity the optimizer
    /// maximizes.
    pub fn worst_margin(&self) -> f64 {
        self.margin[self.worst_k]
    }

    pub fn worst_bob_rate(&self) -> f64 {
        self.rate_bob[self.worst_k]
    }

    pub fn worst_eve_rate(&self) -> f64 {
        self.rate_eve[self.best_m][self.worst_k]
    }
}

/// Enumerate every (user, eavesdropper position) pair. Ties go to the
/// lowest index.
pub fn secrecy_report(ch: &ChannelRealization, w: &Beamformer, noise: f64) -> SecrecyReport {
    let k_count = ch.h_bob.len();
    let rate_bob: Vec<f64> = (0..k_count)
        .map(|k| rate(sinr_bob(ch, w, k, noise)))
        .collect();
    let rate_eve: Vec<Vec<f64>> = (0..ch.h_eve.len())
        .map(|m| {
            (0..k_count)
                .map(|k| rate(sinr_eve(ch, w, m, k, noise)))
                .collect()
        })
        .collect();
    let margin: Vec<f64> = (0..k_count)
        .map(|k| {
            let eve = rate_eve
                .iter()
                .map(|r| r[k])
                .fold(f64::NEG_INFINITY, f64::max);
            rate_bob[k] - eve
        })
        .collect();
    let secrecy = margin.iter().map(|&m| m.max(0.0)).collect();
    let worst_k = argmin(&margin);
    let best_m = argmax(rate_eve.iter().map(|r| r[worst_k]));
    SecrecyReport {
        rate_bob,
        rate_eve,
        margin,
        secrecy,
        worst_k,
        best_m,
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Difference of logs for a fixed (user, eavesdropper position) pair; may
/// be negative.
pub fn objective_value(
    ch: &ChannelRealization,
    w: &Beamformer,
    noise: f64,
    k: usize,
    m: usize,
) -> f64 {
    rate(sinr_bob(ch, w, k, noise)) - rate(sinr_eve(ch, w, m, k, noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex64> {
        (0..n)
            .map(|_| c(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
            .collect()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, m: usize) -> (ChannelRealization, Beamformer) {
        let ch = ChannelRealization {
            h_bob: (0..k).map(|_| random_vec(rng, n, 1.0)).collect(),
            h_eve: (0..m).map(|_| random_vec(rng, n, 0.6)).collect(),
        };
        let cols: Vec<_> = (0..k).map(|_| random_vec(rng, n, 0.02)).collect();
        (ch, Beamformer::from_columns(&cols, 0.01))
    }

    /// Scalar re-implementation of the SINR without the shared helpers.
    fn sinr_oracle(h: &[Complex64], w: &Beamformer, k: usize, noise: f64) -> f64 {
        let mut powers = Vec::new();
        for j in 0..w.num_users() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (hn, wn) in h.iter().zip(w.column(j)) {
                let (a, b) = (hn.re, -hn.im);
                let (x, y) = (wn.re, wn.im);
                re += a * x - b * y;
                im += a * y + b * x;
            }
            powers.push(re * re + im * im);
        }
        let interference: f64 = powers.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, p)| p).sum();
        powers[k] / (interference + noise)
    }

    #[test]
    fn single_user_without_interference() {
        let h = vec![c(2.0, 0.0), c(0.0, 0.0)];
        let w = Beamformer::from_columns(&[vec![c(1.0, 0.0), c(0.0, 0.0)]], 10.0);
        assert_relative_eq!(sinr(&h, &w, 0, 0.5), 8.0);
    }

    #[test]
    fn zero_beam_gives_zero_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (ch, mut w) = random_instance(&mut rng, 4, 3, 2);
        w.column_mut(1).fill(c(0.0, 0.0));
        assert_eq!(sinr_bob(&ch, &w, 1, 0.1), 0.0);
        assert_eq!(sinr_eve(&ch, &w, 0, 1, 0.1), 0.0);
    }

    #[test]
    fn eve_orthogonal_to_all_beams() {
        let w = Beamformer::from_columns(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(2.0, 1.0), c(0.0, 0.0)]], 10.0);
        let ch = ChannelRealization {
            h_bob: vec![vec![c(1.0, 0.0), c(1.0, 0.0)]; 2],
            h_eve: vec![vec![c(0.0, 0.0), c(3.0, -1.0)]],
        };
        assert_eq!(sinr_eve(&ch, &w, 0, 0, 0.1), 0.0);
        assert_eq!(sinr_eve(&ch, &w, 0, 1, 0.1), 0.0);
    }

    #[test]
    fn sinr_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (ch, w) = random_instance(&mut rng, 6, 3, 2);
            for k in 0..3 {
                assert_relative_eq!(sinr_bob(&ch, &w, k, 5e-4), sinr_oracle(&ch.h_bob[k], &w, k, 5e-4), max_relative = 1e-12);
                for m in 0..2 {
                    assert_relative_eq!(sinr_eve(&ch, &w, m, k, 5e-4), sinr_oracle(&ch.h_eve[m], &w, k, 5e-4), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn identical_channels_give_zero_secrecy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut ch, w) = random_instance(&mut rng, 5, 2, 3);
        let h = ch.h_bob[0].clone();
        ch.h_bob[1] = h.clone();
        ch.h_eve = vec![h; 3];
        let rep = secrecy_report(&ch, &w, 1e-3);
        for k in 0..2 {
            assert_eq!(rep.secrecy[k], 0.0);
            assert_relative_eq!(rep.margin[k], 0.0, epsilon = 1e-12);
        }
        assert_relative_eq!(objective_value(&ch, &w, 1e-3, 0, 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_beamformer_ties_break_to_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (ch, _) = random_instance(&mut rng, 4, 3, 2);
        let rep = secrecy_report(&ch, &Beamformer::zeros(4, 3, 0.01), 1e-3);
        assert!(rep.secrecy.iter().all(|&s| s == 0.0));
        assert_eq!((rep.worst_k, rep.best_m), (0, 0));
    }

    #[test]
    fn report_matches_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (ch, w) = random_instance(&mut rng, 6, 5, 3);
            let noise = 5e-4;
            let rep = secrecy_report(&ch, &w, noise);
            // independent enumeration over all (k, m)
            let mut worst = (f64::INFINITY, 0usize);
            for k in 0..5 {
                let rb = (1.0 + sinr_oracle(&ch.h_bob[k], &w, k, noise)).log2();
                let re = (0..3)
                    .map(|m| (1.0 + sinr_oracle(&ch.h_eve[m], &w, k, noise)).log2())
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_relative_eq!(rep.secrecy[k], (rb - re).max(0.0), epsilon = 1e-12);
                if rb - re < worst.0 {
                    worst = (rb - re, k);
                }
            }
            assert_eq!(rep.worst_k, worst.1);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for m in 0..3 {
                let re = (1.0 + sinr_oracle(&ch.h_eve[m], &w, worst.1, noise)).log2();
                if re > best.0 {
                    best = (re, m);
                }
            }
            assert_eq!(rep.best_m, best.1);
        }
    }

    #[test]
    fn objective_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut ch, w) = random_instance(&mut rng, 5, 3, 2);
        let noise = 5e-4;
        let v = objective_value(&ch, &w, noise, 1, 0);
        let want = (1.0 + sinr_oracle(&ch.h_bob[1], &w, 1, noise)).log2()
            - (1.0 + sinr_oracle(&ch.h_eve[0], &w, 1, noise)).log2();
        assert_relative_eq!(v, want, epsilon = 1e-12);
        ch.h_eve[0].fill(c(0.0, 0.0));
        assert_relative_eq!(objective_value(&ch, &w, noise, 1, 0), rate(sinr_bob(&ch, &w, 1, noise)));
    }

    #[test]
    fn more_noise_lowers_every_positive_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (ch, w) = random_instance(&mut rng, 5, 3, 2);
            for k in 0..3 {
                let lo = sinr_bob(&ch, &w, k, 1e-4);
                let hi = sinr_bob(&ch, &w, k, 2e-4);
                assert!(lo > 0.0 && hi < lo);
            }
        }
    }

    #[test]
    fn zeroing_worst_beam_recovers_nonnegative_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let (ch, w) = random_instance(&mut rng, 5, 4, 3);
            let rep = secrecy_report(&ch, &w, 5e-4);
            let (k, m) = (rep.worst_k, rep.best_m);
            let mut silenced = w.clone();
            silenced.column_mut(k).fill(c(0.0, 0.0));
            let best = objective_value(&ch, &w, 5e-4, k, m).max(objective_value(&ch, &silenced, 5e-4, k, m));
            assert!(best >= 0.0);
        }
    }

    #[test]
    fn common_channel_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (ch, w) = random_instance(&mut rng, 5, 3, 2);
        let scale = c(0.3, -1.2);
        let scaled = ch.scaled(scale);
        for k in 0..3 {
            for j in 0..3 {
                let a = inner(&ch.h_bob[k], w.column(j)).norm_sqr();
                let b = inner(&scaled.h_bob[k], w.column(j)).norm_sqr();
                assert_relative_eq!(b, a * scale.norm_sqr(), max_relative = 1e-12);
            }
        }
        // argmin/argmax are recomputed on the scaled channels, not assumed
        let rep = secrecy_report(&scaled, &w, 5e-4);
        let brute = (0..3)
            .min_by(|&a, &b| rep.margin[a].total_cmp(&rep.margin[b]))
            .unwrap();
        assert_eq!(rep.worst_k, brute);
    }

    #[test]
    fn beamformer_power() {
        let w = Beamformer::from_columns(&[vec![c(0.1, 0.0), c(0.0, 0.1)], vec![c(0.0, 0.0), c(0.05, 0.0)]], 0.0225);
        assert_relative_eq!(w.power(), 0.0225);
        assert!(w.is_feasible());
        assert_relative_eq!(w.column_power(1), 0.0025);
    }
}
