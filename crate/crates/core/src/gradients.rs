//! Analytic gradients of the fixed-pair objective
//!
//! ```text
//! F = log2(1 + S_b/(I_b + σ²)) − log2(1 + S_e/(I_e + σ²))
//! ```
//!
//! where `S = |h^H w_k|²` is the worst user's own signal and
//! `I = Σ_{k'≠k} |h^H w_{k'}|²` its interference, for Bob `k` and the
//! eavesdropper position `m`.
//!
//! Beamformer gradients use the conjugate (Wirtinger) convention scaled by
//! two: entry `n` is `∂F/∂Re w_n + j ∂F/∂Im w_n = 2 ∂F/∂w_n*`, which gives
//! `∇|h^H w|² = 2 h h^H w`. Position gradients are real 3-vectors.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{wavenumber, ChannelModel, ChannelRealization, PathSet};
use crate::error::{Error, Result};
use crate::geometry::Position3;
use crate::math::{cis, inner, LN_2};
use crate::metrics::Beamformer;

/// Signal and interference powers seen through one channel.
#[derive(Debug, Clone, Copy)]
struct LinkPowers {
    signal: f64,
    interference: f64,
}

fn link_powers(h: &[Complex64], w: &Beamformer, k: usize, projections: &mut [Complex64]) -> LinkPowers {
    let mut interference = 0.0;
    for (j, col) in w.columns().enumerate() {
        projections[j] = inner(h, col);
        if j != k {
            interference += projections[j].norm_sqr();
        }
    }
    LinkPowers {
        signal: projections[k].norm_sqr(),
        interference,
    }
}

/// Beamformer gradient from the two channel vectors of the selected pair.
pub fn grad_w_from_channels(
    h_bob: &[Complex64],
    h_eve: &[Complex64],
    w: &Beamformer,
    k: usize,
    noise: f64,
) -> Vec<Complex64> {
    let wk = w.column(k);
    let a_b = inner(h_bob, wk);
    let a_e = inner(h_eve, wk);
    let mut total_b = noise;
    let mut total_e = noise;
    for col in w.columns() {
        total_b += inner(h_bob, col).norm_sqr();
        total_e += inner(h_eve, col).norm_sqr();
    }
    let cb = a_b * (2.0 / (LN_2 * total_b));
    let ce = a_e * (2.0 / (LN_2 * total_e));
    h_bob
        .iter()
        .zip(h_eve)
        .map(|(hb, he)| hb * cb - he * ce)
        .collect()
}

/// Gradient with respect to `w_k` for the pair `(k, m)`.
pub fn grad_w(
    ch: &ChannelRealization,
    w: &Beamformer,
    k: usize,
    m: usize,
    noise: f64,
) -> Vec<Complex64> {
    grad_w_from_channels(&ch.h_bob[k], &ch.h_eve[m], w, k, noise)
}

/// `∂h_i/∂t_n` for every antenna `i` (rows), for a channel built from
/// `paths` with receive position `r` (`None` for a Bob link). Only row `n`
/// is nonzero since `t_n` enters `h_n` alone.
pub fn channel_jacobian(
    positions: &[Position3],
    paths: &PathSet,
    r: Option<Position3>,
    lambda: f64,
    n: usize,
) -> Vec<[Complex64; 3]> {
    let kw = wavenumber(lambda);
    let zero = Complex64::new(0.0, 0.0);
    let mut jac = vec![[zero; 3]; positions.len()];
    let t = positions[n];
    let r = r.unwrap_or(Position3::ORIGIN);
    let mut row = [zero; 3];
    for (p, s) in paths.directions().iter().zip(paths.gains()) {
        // d/dt e^{j k (t - r)·p} = j k p e^{j k (t - r)·p}, receive phase kept separate
        let term = s * cis(-kw * r.dot(*p)) * cis(kw * t.dot(*p)) * Complex64::new(0.0, kw);
        row[0] += term * p.x;
        row[1] += term * p.y;
        row[2] += term * p.z;
    }
    jac[n] = row;
    jac
}

/// Position gradient of antenna `n` given both channels and the derivative
/// of their `n`-th entries.
#[allow(clippy::too_many_arguments)]
pub fn grad_t_from_channels(
    h_bob: &[Complex64],
    h_eve: &[Complex64],
    dh_bob: &[Complex64; 3],
    dh_eve: &[Complex64; 3],
    w: &Beamformer,
    n: usize,
    k: usize,
    noise: f64,
) -> [f64; 3] {
    let users = w.num_users();
    let mut proj = vec![Complex64::new(0.0, 0.0); users];
    let mut out = [0.0; 3];
    for (h, dh, sign) in [(h_bob, dh_bob, 1.0), (h_eve, dh_eve, -1.0)] {
        let pw = link_powers(h, w, k, &mut proj);
        let total = pw.signal + pw.interference + noise;
        let rest = pw.interference + noise;
        for (axis, d) in dh.iter().enumerate() {
            // ∂|a_j|²/∂x = 2 Re(conj(a_j) conj(∂h_n/∂x) w_{n,j})
            let mut d_signal = 0.0;
            let mut d_interf = 0.0;
            for (j, a) in proj.iter().enumerate() {
                let g = 2.0 * (a.conj() * d.conj() * w.column(j)[n]).re;
                if j == k {
                    d_signal = g;
                } else {
                    d_interf += g;
                }
            }
            let dlog = (d_signal + d_interf) / total - d_interf / rest;
            out[axis] += sign * dlog / LN_2;
        }
    }
    out
}

/// Gradient of the pair objective with respect to the position of antenna
/// `n`, built from scratch out of the channel model.
pub fn grad_t(
    model: &ChannelModel,
    positions: &[Position3],
    w: &Beamformer,
    n: usize,
    k: usize,
    m: usize,
    noise: f64,
) -> [f64; 3] {
    let lambda = model.lambda;
    let r = model.eve_positions[m];
    let h_b = crate::channel::bob_channel(positions, &model.bob_paths[k], lambda);
    let h_e = crate::channel::eve_channel(positions, r, &model.eve_paths, lambda);
    let jb = channel_jacobian(positions, &model.bob_paths[k], None, lambda, n);
    let je = channel_jacobian(positions, &model.eve_paths, Some(r), lambda, n);
    grad_t_from_channels(&h_b, &h_e, &jb[n], &je[n], w, n, k, noise)
}

/// Central finite differences `(f(x + h e_i) − f(x − h e_i)) / 2h`.
pub fn fd_oracle<F>(mut f: F, x0: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut grad = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        x[i] = x0[i] + step;
        let fp = f(&x);
        x[i] = x0[i] - step;
        let fm = f(&x);
        x[i] = x0[i];
        if !(fp.is_finite() && fm.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        grad.push((fp - fm) / (2.0 * step));
    }
    Ok(grad)
}

/// Gradient types that can be averaged over Monte-Carlo draws.
pub trait GradAccumulate: Sized {
    fn add_assign(&mut self, other: &Self);
    fn scale(&mut self, s: f64);
}

impl GradAccumulate for Vec<Complex64> {
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
    fn scale(&mut self, s: f64) {
        for a in self.iter_mut() {
            *a *= s;
        }
    }
}

impl GradAccumulate for [f64; 3] {
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            *a += b;
        }
    }
    fn scale(&mut self, s: f64) {
        for a in self.iter_mut() {
            *a *= s;
        }
    }
}

/// Arithmetic mean of `count >= 1` gradient draws, summed in sample order.
pub fn mc_average_grad<G, F>(count: usize, mut sample: F) -> G
where
    G: GradAccumulate,
    F: FnMut(usize) -> G,
{
    assert!(count >= 1, "Monte-Carlo average needs at least one sample");
    let mut acc = sample(0);
    for i in 1..count {
        acc.add_assign(&sample(i));
    }
    if count > 1 {
        acc.scale(1.0 / count as f64);
    }
    acc
}
