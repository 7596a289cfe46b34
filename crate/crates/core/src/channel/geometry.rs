//! Device positions, motion, and the URA steering vector.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::CVec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        debug_assert!(z >= 0.0);
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let h = self.horizontal_distance(other);
        h.hypot(self.z - other.z)
    }

    /// Zenith angle `theta` (from the +z axis) and azimuth `phi` of `target`
    /// as seen from `self`.
    pub fn angles_to(&self, target: &Position3D) -> (f64, f64) {
        let (dx, dy, dz) = (target.x - self.x, target.y - self.y, target.z - self.z);
        let d = (dx * dx + dy * dy + dz * dz).sqrt();
        if d == 0.0 {
            return (0.0, 0.0);
        }
        ((dz / d).clamp(-1.0, 1.0).acos(), dy.atan2(dx))
    }
}

/// Uniform rectangular array. Element `(m_h, m_v)` sits at flat index
/// `m_h * mv + m_v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub mh: usize,
    pub mv: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn half_wavelength(mh: usize, mv: usize, wavelength: f64) -> Self {
        Self { mh, mv, spacing: wavelength / 2.0, wavelength }
    }

    pub fn num_antennas(&self) -> usize {
        self.mh * self.mv
    }

    pub fn is_valid(&self) -> bool {
        self.mh >= 1 && self.mv >= 1 && self.spacing > 0.0 && self.wavelength > 0.0
    }
}

/// Unit-norm array response toward zenith angle `theta`, azimuth `phi`.
pub fn steering_vector(theta: f64, phi: f64, geom: &ArrayGeometry) -> CVec {
    let m = geom.num_antennas();
    let k = 2.0 * PI / geom.wavelength * geom.spacing;
    let (h_step, v_step) = (theta.sin() * phi.sin(), theta.cos());
    let scale = 1.0 / (m as f64).sqrt();
    CVec::from_fn(m, |idx, _| {
        let (mh, mv) = (idx / geom.mv, idx % geom.mv);
        let arg = k * (mh as f64 * h_step + mv as f64 * v_step);
        Complex64::from_polar(scale, arg)
    })
}

/// Piecewise-linear path traversed at constant speed; the device parks at
/// the last waypoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<[f64; 2]>,
    /// m/s
    pub speed: f64,
}

impl Trajectory {
    pub fn stationary(x: f64, y: f64) -> Self {
        Self { waypoints: vec![[x, y]], speed: 0.0 }
    }

    /// Arc of a circle centred at `center`, starting at angle `start` and
    /// sweeping `sweep` radians, discretised into `segments` chords.
    pub fn circular_arc(center: [f64; 2], radius: f64, start: f64, sweep: f64, segments: usize, speed: f64) -> Self {
        let segments = segments.max(1);
        let waypoints = (0..=segments)
            .map(|i| {
                let a = start + sweep * i as f64 / segments as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self { waypoints, speed }
    }

    pub fn position_at(&self, time: f64) -> [f64; 2] {
        let first = self.waypoints[0];
        if self.waypoints.len() == 1 || self.speed <= 0.0 || time <= 0.0 {
            return first;
        }
        let mut remaining = self.speed * time;
        for w in self.waypoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if remaining <= len && len > 0.0 {
                let f = remaining / len;
                return [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
            }
            remaining -= len;
        }
        *self.waypoints.last().unwrap()
    }
}

/// Straight-line constant-velocity flight at fixed altitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightTrack {
    pub start: [f64; 2],
    /// Degrees counter-clockwise from +x.
    pub heading_deg: f64,
    pub speed: f64,
}

impl FlightTrack {
    pub fn position_at(&self, time: f64) -> [f64; 2] {
        let h = self.heading_deg.to_radians();
        let s = self.speed * time;
        [self.start[0] + s * h.cos(), self.start[1] + s * h.sin()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 299_792_458.0 / 2e9;

    #[test]
    fn single_antenna_steering_is_one() {
        let g = ArrayGeometry::half_wavelength(1, 1, LAMBDA);
        for &(t, p) in &[(0.3, 1.2), (2.0, -0.7), (0.0, 0.0)] {
            let a = steering_vector(t, p, &g);
            assert_eq!(a.len(), 1);
            assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn broadside_vertical_pair_is_in_phase() {
        let g = ArrayGeometry::half_wavelength(1, 2, LAMBDA);
        let a = steering_vector(PI / 2.0, 0.0, &g);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_matches_elementwise_formula() {
        // Direct evaluation of the exponent for every (m_h, m_v) pair.
        let g = ArrayGeometry::half_wavelength(4, 4, LAMBDA);
        let (theta, phi) = (0.4137, 2.2861);
        let a = steering_vector(theta, phi, &g);
        let mut idx = 0;
        for mh in 1..=4 {
            for mv in 1..=4 {
                let e = 2.0 * PI / LAMBDA
                    * (LAMBDA / 2.0)
                    * ((mh as f64 - 1.0) * theta.sin() * phi.sin() + (mv as f64 - 1.0) * theta.cos());
                let expect = Complex64::new(e.cos(), e.sin()) / 4.0;
                assert!((a[idx] - expect).norm() < 1e-14, "element {idx}");
                idx += 1;
            }
        }
        let n: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_interpolates_and_parks() {
        let t = Trajectory { waypoints: vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]], speed: 2.0 };
        assert_eq!(t.position_at(0.0), [0.0, 0.0]);
        assert_eq!(t.position_at(2.5), [5.0, 0.0]);
        assert_eq!(t.position_at(7.5), [10.0, 5.0]);
        assert_eq!(t.position_at(100.0), [10.0, 10.0]);
    }

    #[test]
    fn aircraft_covers_speed_times_time() {
        let f = FlightTrack { start: [0.0, 0.0], heading_deg: 90.0, speed: 250.0 };
        let p = f.position_at(0.02 * 50.0);
        assert!(p[0].abs() < 1e-9);
        assert!((p[1] - 250.0).abs() < 1e-9);
    }

    #[test]
    fn zenith_angle_of_overhead_target_is_zero() {
        let bs = Position3D::new(0.0, 0.0, 30.0);
        let au = Position3D::new(0.0, 0.0, 10_000.0);
        let (theta, _) = bs.angles_to(&au);
        assert!(theta.abs() < 1e-12);
    }
}
