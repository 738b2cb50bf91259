//! Array and eavesdropper-region geometry.
//!
//! Positions are Cartesian, in meters, with the base station at the origin.
//! Each transmit antenna owns an axis-aligned movement box; a box with zero
//! extent on an axis pins that coordinate (a planar `A x A` square is the
//! `z_min == z_max` case). The eavesdropper's potential area is a square of
//! side `2r` centered at `(d, 0, 0)` on the ground plane.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Relative slack used when checking the spacing constraint after a
/// projection that lands exactly on `d_min`.
const SPACING_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Position3 = Position3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Position3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn distance(self, other: Position3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Position3 {
    type Output = Position3;
    fn add(self, o: Position3) -> Position3 {
        Position3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Position3 {
    type Output = Position3;
    fn sub(self, o: Position3) -> Position3 {
        Position3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Position3;
    fn mul(self, s: f64) -> Position3 {
        Position3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Position3 {
    type Output = Position3;
    fn neg(self) -> Position3 {
        Position3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned movement box of one antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl MoveRegion {
    pub fn new(
        (x_min, x_max): (f64, f64),
        (y_min, y_max): (f64, f64),
        (z_min, z_max): (f64, f64),
    ) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !(ok(x_min, x_max) && ok(y_min, y_max) && ok(z_min, z_max)) {
            return Err(Error::InvalidLayout(format!(
                "movement box bounds must be finite with min <= max, got \
                 x [{x_min}, {x_max}] y [{y_min}, {y_max}] z [{z_min}, {z_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            z_min,
            z_max,
        })
    }

    /// Zero-extent box pinning an antenna at `p`.
    pub fn point(p: Position3) -> Self {
        Self {
            x_min: p.x,
            x_max: p.x,
            y_min: p.y,
            y_max: p.y,
            z_min: p.z,
            z_max: p.z,
        }
    }

    pub fn contains(&self, p: Position3) -> bool {
        let tol = 1e-12;
        p.x >= self.x_min - tol
            && p.x <= self.x_max + tol
            && p.y >= self.y_min - tol
            && p.y <= self.y_max + tol
            && p.z >= self.z_min - tol
            && p.z <= self.z_max + tol
    }

    pub fn center(&self) -> Position3 {
        Position3::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
            0.5 * (self.z_min + self.z_max),
        )
    }
}

/// Per-axis clamp onto the movement box. This is the Euclidean projection
/// onto an axis-aligned box.
pub fn project_box(p: Position3, region: &MoveRegion) -> Position3 {
    Position3::new(
        p.x.max(region.x_min).min(region.x_max),
        p.y.max(region.y_min).min(region.y_max),
        p.z.max(region.z_min).min(region.z_max),
    )
}

/// Push `candidate` radially away from `anchor` onto the sphere of radius
/// `d_min` if it sits closer than that. A candidate coinciding with the
/// anchor is moved along `+x`.
pub fn project_min_distance(candidate: Position3, anchor: Position3, d_min: f64) -> Position3 {
    let offset = candidate - anchor;
    let dist = offset.norm();
    if dist >= d_min {
        return candidate;
    }
    if dist == 0.0 {
        return anchor + Position3::new(d_min, 0.0, 0.0);
    }
    anchor + offset * (d_min / dist)
}

/// Which antenna pairs the minimum-spacing rule is enforced on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Each movable antenna is checked against the closest lower-index
    /// movable antenna only.
    #[default]
    Consecutive,
    /// Every pair of movable antennas is checked.
    AllPairs,
}

/// Antenna positions plus the constraints that govern their movement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub positions: Vec<Position3>,
    pub regions: Vec<MoveRegion>,
    pub movable: Vec<bool>,
    pub d_min: f64,
    pub pairing: Pairing,
}

impl ArrayLayout {
    pub fn new(
        positions: Vec<Position3>,
        regions: Vec<MoveRegion>,
        movable: Vec<bool>,
        d_min: f64,
        pairing: Pairing,
    ) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(Error::InvalidLayout(format!(
                "need at least two antennas, got {n}"
            )));
        }
        if regions.len() != n || movable.len() != n {
            return Err(Error::InvalidLayout(format!(
                "positions ({n}), regions ({}) and movable mask ({}) differ in length",
                regions.len(),
                movable.len()
            )));
        }
        if !(d_min > 0.0 && d_min.is_finite()) {
            return Err(Error::InvalidLayout(format!(
                "minimum spacing must be positive, got {d_min}"
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidLayout(format!(
                "antenna {i} has a non-finite coordinate"
            )));
        }
        let layout = Self {
            positions,
            regions,
            movable,
            d_min,
            pairing,
        };
        layout.check_feasible()?;
        Ok(layout)
    }

    /// Layout with every antenna pinned in place.
    pub fn fixed(positions: Vec<Position3>, d_min: f64) -> Result<Self> {
        let regions = positions.iter().copied().map(MoveRegion::point).collect();
        let movable = alloc::vec![false; positions.len()];
        Self::new(positions, regions, movable, d_min, Pairing::Consecutive)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn movable_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.movable
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    /// Closest lower-index movable antenna; for a fully movable array this
    /// is simply `n - 1`.
    pub fn predecessor(&self, n: usize) -> Option<usize> {
        (0..n).rev().find(|&i| self.movable[i])
    }

    /// Antennas the spacing rule compares antenna `n` against.
    fn spacing_partners(&self, n: usize) -> Vec<usize> {
        match self.pairing {
            Pairing::Consecutive => {
                let mut v = Vec::new();
                if let Some(p) = self.predecessor(n) {
                    v.push(p);
                }
                // the successor's check involves `n` as its anchor
                if let Some(s) = (n + 1..self.len()).find(|&i| self.movable[i]) {
                    if self.movable[n] {
                        v.push(s);
                    }
                }
                v
            }
            Pairing::AllPairs => self
                .movable_indices()
                .filter(|&i| i != n && self.movable[n])
                .collect(),
        }
    }

    fn spacing_ok(&self, a: Position3, b: Position3) -> bool {
        a.distance(b) >= self.d_min * (1.0 - SPACING_SLACK)
    }

    /// Whether antenna `n` placed at `p` satisfies the spacing rule with
    /// every partner (other antennas at their current positions).
    pub fn spacing_ok_at(&self, n: usize, p: Position3) -> bool {
        self.spacing_partners(n)
            .into_iter()
            .all(|i| self.spacing_ok(p, self.positions[i]))
    }

    /// Box containment for movable antennas and the spacing rule.
    pub fn check_feasible(&self) -> Result<()> {
        for n in self.movable_indices() {
            if !self.regions[n].contains(self.positions[n]) {
                return Err(Error::InvalidLayout(format!(
                    "antenna {n} at {:?} lies outside its movement box",
                    self.positions[n]
                )));
            }
        }
        let movable: Vec<usize> = self.movable_indices().collect();
        let violated = match self.pairing {
            Pairing::Consecutive => movable
                .windows(2)
                .find(|w| !self.spacing_ok(self.positions[w[0]], self.positions[w[1]]))
                .map(|w| (w[0], w[1])),
            Pairing::AllPairs => movable
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| movable[i + 1..].iter().map(move |&b| (a, b)))
                .find(|&(a, b)| !self.spacing_ok(self.positions[a], self.positions[b])),
        };
        if let Some((a, b)) = violated {
            return Err(Error::InvalidLayout(format!(
                "antennas {a} and {b} are {} m apart, below d_min = {} m",
                self.positions[a].distance(self.positions[b]),
                self.d_min
            )));
        }
        Ok(())
    }

    /// Map a gradient-step candidate for antenna `n` onto the feasible set:
    /// spacing projection against the anchor, then the box clamp, then one
    /// more spacing check. `None` means the move is rejected and the antenna
    /// should stay where it is.
    pub fn project_candidate(&self, n: usize, candidate: Position3) -> Option<Position3> {
        let mut p = candidate;
        let anchor = match self.pairing {
            Pairing::Consecutive => self.predecessor(n),
            Pairing::AllPairs => self
                .movable_indices()
                .filter(|&i| i != n)
                .filter(|&i| p.distance(self.positions[i]) < self.d_min)
                .min_by(|&a, &b| {
                    p.distance(self.positions[a])
                        .total_cmp(&p.distance(self.positions[b]))
                }),
        };
        if let Some(a) = anchor {
            p = project_min_distance(p, self.positions[a], self.d_min);
        }
        p = project_box(p, &self.regions[n]);
        self.spacing_ok_at(n, p).then_some(p)
    }
}

/// The eavesdropper's potential area and the array height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveRegion {
    /// Distance from the base station to the square's center (m).
    pub d: f64,
    /// Half side length of the square (m).
    pub r: f64,
    /// Height of the array above ground (m).
    pub h: f64,
}

/// How virtual eavesdropper positions are placed inside the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveSampling {
    #[default]
    Uniform,
    Lattice,
}

impl EveRegion {
    pub fn new(d: f64, r: f64, h: f64) -> Result<Self> {
        let region = Self { d, r, h };
        region.validate()?;
        Ok(region)
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.d > self.r && self.h > 0.0) || !self.d.is_finite() {
            return Err(Error::InfeasibleRegion {
                d: self.d,
                r: self.r,
            });
        }
        Ok(())
    }

    pub fn center(&self) -> Position3 {
        Position3::new(self.d, 0.0, 0.0)
    }

    /// Elevation range `[atan(h/(d+r)), atan(h/(d-r))]`.
    pub fn theta_bounds(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok((
            math::atan(self.h / (self.d + self.r)),
            math::atan(self.h / (self.d - self.r)),
        ))
    }

    /// Azimuth range `±asin(r / sqrt((d-r)^2 + r^2))`.
    pub fn phi_bounds(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let f = math::sqrt((self.d - self.r) * (self.d - self.r) + self.r * self.r);
        let hi = math::asin(self.r / f);
        Ok((-hi, hi))
    }

    /// Ground-plane point seen under elevation `theta` and azimuth `phi`.
    pub fn position_from_angles(&self, theta: f64, phi: f64) -> Result<Position3> {
        let tol = 1e-12;
        let (t_lo, t_hi) = self.theta_bounds()?;
        if !(theta >= t_lo - tol && theta <= t_hi + tol) {
            return Err(Error::AngleOutOfBounds {
                name: "theta",
                value: theta,
                lo: t_lo,
                hi: t_hi,
            });
        }
        let (p_lo, p_hi) = self.phi_bounds()?;
        if !(phi >= p_lo - tol && phi <= p_hi + tol) {
            return Err(Error::AngleOutOfBounds {
                name: "phi",
                value: phi,
                lo: p_lo,
                hi: p_hi,
            });
        }
        let ground = self.h / math::tan(theta);
        Ok(Position3::new(
            ground * math::cos(phi),
            ground * math::sin(phi),
            0.0,
        ))
    }

    /// Inverse of [`position_from_angles`](Self::position_from_angles) for a
    /// ground-plane point: `(theta, phi)`.
    pub fn angles_of(&self, p: Position3) -> (f64, f64) {
        let ground = math::sqrt(p.x * p.x + p.y * p.y);
        (math::atan(self.h / ground), math::atan2(p.y, p.x))
    }

    /// `m` virtual eavesdropper positions on the ground inside the square.
    pub fn sample_virtual_eves<R: Rng + ?Sized>(
        &self,
        m: usize,
        sampling: EveSampling,
        rng: &mut R,
    ) -> Vec<Position3> {
        match sampling {
            EveSampling::Uniform => (0..m)
                .map(|_| {
                    let u: f64 = rng.random();
                    let v: f64 = rng.random();
                    Position3::new(
                        self.d - self.r + 2.0 * self.r * u,
                        -self.r + 2.0 * self.r * v,
                        0.0,
                    )
                })
                .collect(),
            EveSampling::Lattice => {
                let mut side = 1;
                while side * side < m {
                    side += 1;
                }
                let cell = 2.0 * self.r / side as f64;
                (0..m)
                    .map(|i| {
                        let (row, col) = (i / side, i % side);
                        Position3::new(
                            self.d - self.r + (col as f64 + 0.5) * cell,
                            -self.r + (row as f64 + 0.5) * cell,
                            0.0,
                        )
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn region() -> EveRegion {
        EveRegion::new(50.0, 2.0, 10.0).unwrap()
    }

    #[test]
    fn theta_bounds_closed_form() {
        let (lo, hi) = region().theta_bounds().unwrap();
        assert_relative_eq!(lo, 0.189_988_287_918_715_7, epsilon = 1e-12);
        assert_relative_eq!(hi, 0.205_395_389_189_767_4, epsilon = 1e-12);
    }

    #[test]
    fn theta_bounds_collapse_for_point_region() {
        let (lo, hi) = EveRegion::new(50.0, 1e-9, 10.0)
            .unwrap()
            .theta_bounds()
            .unwrap();
        assert_relative_eq!(lo, 0.2f64.atan(), epsilon = 1e-9);
        assert_relative_eq!(hi, 0.2f64.atan(), epsilon = 1e-9);
    }

    #[test]
    fn degenerate_region_is_rejected() {
        let bad = EveRegion { d: 2.0, r: 2.0, h: 10.0 };
        assert!(matches!(bad.theta_bounds(), Err(Error::InfeasibleRegion { .. })));
        assert!(matches!(bad.phi_bounds(), Err(Error::InfeasibleRegion { .. })));
        assert!(EveRegion::new(2.0, 2.0, 10.0).is_err());
    }

    #[test]
    fn phi_bounds_closed_form() {
        let (lo, hi) = region().phi_bounds().unwrap();
        assert_relative_eq!(hi, 0.041_642_579_098_588_43, epsilon = 1e-12);
        assert_relative_eq!(lo, -hi);
        let (_, hi) = EveRegion::new(3.0, 2.0, 1.0).unwrap().phi_bounds().unwrap();
        assert_relative_eq!(hi, 1.107_148_717_794_090_4, epsilon = 1e-12);
        let (lo, hi) = EveRegion::new(50.0, 1e-12, 1.0).unwrap().phi_bounds().unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);
    }

    #[test]
    fn position_from_angles_on_axis() {
        let reg = region();
        let p = reg.position_from_angles((10.0f64 / 50.0).atan(), 0.0).unwrap();
        assert_relative_eq!(p.x, 50.0, epsilon = 1e-9);
        assert_eq!((p.y, p.z), (0.0, 0.0));
        let p = reg.position_from_angles((10.0f64 / 48.0).atan(), 0.0).unwrap();
        assert_relative_eq!(p.x, 48.0, epsilon = 1e-9);
    }

    #[test]
    fn position_from_angles_rejects_out_of_range() {
        let reg = region();
        let (_, phi_hi) = reg.phi_bounds().unwrap();
        let theta = (10.0f64 / 50.0).atan();
        assert!(matches!(
            reg.position_from_angles(theta, phi_hi + 1e-3),
            Err(Error::AngleOutOfBounds { name: "phi", .. })
        ));
        assert!(matches!(
            reg.position_from_angles(0.5, 0.0),
            Err(Error::AngleOutOfBounds { name: "theta", .. })
        ));
    }

    #[test]
    fn square_corners_against_angle_bounds() {
        // The near corners sit exactly on the azimuth bound and inside the
        // elevation range. The far corners are farther than d + r from the
        // base station, so their elevation falls just below the lower bound.
        let reg = region();
        let (t_lo, t_hi) = reg.theta_bounds().unwrap();
        let (p_lo, p_hi) = reg.phi_bounds().unwrap();
        for sy in [-1.0, 1.0] {
            let near = Position3::new(reg.d - reg.r, sy * reg.r, 0.0);
            let (t, p) = reg.angles_of(near);
            assert!(t > t_lo && t < t_hi);
            assert_relative_eq!(p.abs(), p_hi, epsilon = 1e-12);

            let far = Position3::new(reg.d + reg.r, sy * reg.r, 0.0);
            let (t, p) = reg.angles_of(far);
            assert!(p > p_lo && p < p_hi);
            assert!(t < t_lo);
        }
        // Axis points of the square hit the elevation bounds exactly.
        let (t, _) = reg.angles_of(Position3::new(reg.d + reg.r, 0.0, 0.0));
        assert_relative_eq!(t, t_lo, epsilon = 1e-12);
        let (t, _) = reg.angles_of(Position3::new(reg.d - reg.r, 0.0, 0.0));
        assert_relative_eq!(t, t_hi, epsilon = 1e-12);
    }

    #[test]
    fn angles_round_trip_on_center_line() {
        let reg = region();
        for x in [48.0, 49.0, 50.0, 51.5, 52.0] {
            let p = Position3::new(x, 0.0, 0.0);
            let (t, ph) = reg.angles_of(p);
            let q = reg.position_from_angles(t, ph).unwrap();
            assert_relative_eq!(q.x, x, epsilon = 1e-9);
            assert_relative_eq!(q.y, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn virtual_eves_are_deterministic_and_inside() {
        let reg = region();
        let a = reg.sample_virtual_eves(3, EveSampling::Uniform, &mut ChaCha8Rng::seed_from_u64(9));
        let b = reg.sample_virtual_eves(3, EveSampling::Uniform, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        for p in &a {
            assert!(p.x >= 48.0 && p.x <= 52.0 && p.y.abs() <= 2.0 && p.z == 0.0);
        }
    }

    #[test]
    fn degenerate_square_gives_center() {
        let reg = EveRegion::new(50.0, 1e-12, 10.0).unwrap();
        let p = reg.sample_virtual_eves(1, EveSampling::Uniform, &mut ChaCha8Rng::seed_from_u64(1));
        assert_relative_eq!(p[0].x, 50.0, epsilon = 1e-9);
        assert_relative_eq!(p[0].y, 0.0, epsilon = 1e-9);
        let q = reg.sample_virtual_eves(1, EveSampling::Lattice, &mut ChaCha8Rng::seed_from_u64(1));
        assert_relative_eq!(q[0].x, 50.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_eves_mean_converges_to_center() {
        let reg = region();
        let pts = reg.sample_virtual_eves(1000, EveSampling::Uniform, &mut ChaCha8Rng::seed_from_u64(3));
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.x).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.y).sum::<f64>() / n;
        assert!((mx - 50.0).abs() < 0.1 && my.abs() < 0.1, "mean ({mx}, {my})");
    }

    #[test]
    fn lattice_eves_cover_grid() {
        let reg = region();
        let pts = reg.sample_virtual_eves(4, EveSampling::Lattice, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(pts[0], Position3::new(49.0, -1.0, 0.0));
        assert_eq!(pts[3], Position3::new(51.0, 1.0, 0.0));
    }

    #[test]
    fn box_projection_examples() {
        let b = MoveRegion::new((0.0, 0.04), (0.0, 0.04), (0.0, 0.04)).unwrap();
        let p = Position3::new(0.01, 0.01, 0.0);
        assert_eq!(project_box(p, &b), p);
        let flat = MoveRegion::new((0.0, 0.04), (0.0, 0.04), (0.0, 0.0)).unwrap();
        assert_eq!(
            project_box(Position3::new(-1.0, 0.02, 9.0), &flat),
            Position3::new(0.0, 0.02, 0.0)
        );
    }

    #[test]
    fn move_region_rejects_inverted_bounds() {
        assert!(MoveRegion::new((1.0, 0.0), (0.0, 1.0), (0.0, 0.0)).is_err());
    }

    #[test]
    fn min_distance_examples() {
        let d = 0.01;
        let o = Position3::ORIGIN;
        assert_eq!(project_min_distance(Position3::new(d / 2.0, 0.0, 0.0), o, d), Position3::new(d, 0.0, 0.0));
        let q = project_min_distance(Position3::new(0.0, 0.3 * d, 0.4 * d), o, d);
        assert_relative_eq!(q.y, 0.6 * d, epsilon = 1e-15);
        assert_relative_eq!(q.z, 0.8 * d, epsilon = 1e-15);
        let far = Position3::new(0.0, 2.0 * d, 0.0);
        assert_eq!(project_min_distance(far, o, d), far);
        // coincident points move along +x
        assert_eq!(project_min_distance(o, o, d), Position3::new(d, 0.0, 0.0));
    }

    fn ula(n: usize, lambda: f64) -> ArrayLayout {
        let positions: Vec<_> = (0..n)
            .map(|i| Position3::new(i as f64 * lambda / 2.0, 0.0, 0.0))
            .collect();
        let regions = positions
            .iter()
            .map(|p| MoveRegion::new((p.x, p.x), (0.0, 4.0 * lambda), (0.0, 0.0)).unwrap())
            .collect();
        ArrayLayout::new(positions, regions, alloc::vec![true; n], lambda / 2.0, Pairing::Consecutive)
            .unwrap()
    }

    #[test]
    fn layout_validation() {
        let lambda = 0.0107;
        let l = ula(4, lambda);
        assert_eq!(l.predecessor(0), None);
        assert_eq!(l.predecessor(3), Some(2));
        let mut bad = l.clone();
        bad.positions[1] = bad.positions[0];
        assert!(bad.check_feasible().is_err());
        let mut outside = l.clone();
        outside.positions[2].y = -1.0;
        assert!(outside.check_feasible().is_err());
        assert!(ArrayLayout::fixed(alloc::vec![Position3::ORIGIN], 0.1).is_err());
    }

    #[test]
    fn projected_candidate_is_feasible() {
        let lambda = 0.0107;
        let l = ula(3, lambda);
        // pushing antenna 1 onto antenna 0 along x is impossible: the box pins x
        let c = Position3::new(0.0, 0.0, 0.0);
        let p = l.project_candidate(1, c).unwrap();
        assert!(l.regions[1].contains(p));
        assert!(p.distance(l.positions[0]) >= l.d_min * (1.0 - 1e-12));
        // a candidate far outside the box is clamped
        let p = l.project_candidate(2, Position3::new(5.0, 5.0, 5.0)).unwrap();
        assert_eq!(p, Position3::new(lambda, 4.0 * lambda, 0.0));
    }

    proptest! {
        #[test]
        fn box_projection_is_nearest_point(
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
            lo in -0.5f64..0.0, w in 0.0f64..0.5,
        ) {
            let b = MoveRegion::new((lo, lo + w), (lo, lo + 0.5 * w), (lo, lo)).unwrap();
            let p = Position3::new(x, y, z);
            let q = project_box(p, &b);
            prop_assert!(b.contains(q));
            prop_assert_eq!(project_box(q, &b), q);
            // grid search over the box never beats the clamp
            let steps = 20;
            let best = (0..=steps).flat_map(|i| (0..=steps).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let g = Position3::new(
                        b.x_min + (b.x_max - b.x_min) * i as f64 / steps as f64,
                        b.y_min + (b.y_max - b.y_min) * j as f64 / steps as f64,
                        b.z_min,
                    );
                    g.distance(p)
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert!(q.distance(p) <= best + 1e-12);
        }

        #[test]
        fn min_distance_projection_properties(
            cx in -1.0f64..1.0, cy in -1.0f64..1.0, cz in -1.0f64..1.0,
            d_min in 0.01f64..3.0,
        ) {
            let anchor = Position3::new(0.1, -0.2, 0.3);
            let c = anchor + Position3::new(cx, cy, cz);
            let q = project_min_distance(c, anchor, d_min);
            prop_assert!(q.distance(anchor) >= d_min * (1.0 - 1e-12));
            if c.distance(anchor) < d_min {
                prop_assert!((q.distance(anchor) - d_min).abs() <= 1e-12 * d_min.max(1.0));
                // collinear with the anchor -> candidate ray
                let u = c - anchor;
                let v = q - anchor;
                let cross = Position3::new(u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x);
                prop_assert!(cross.norm() <= 1e-9 * u.norm().max(1e-300) * v.norm());
                prop_assert!(u.dot(v) >= 0.0);
            }
            let again = project_min_distance(q, anchor, d_min);
            prop_assert!(again.distance(q) <= 1e-12 * d_min);
        }
    }
}
