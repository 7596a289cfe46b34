use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fading::{evolve_nlos, fresh_nlos};
use super::geometry::{steering_vector, ArrayGeometry, FlightTrack, Position3D, Trajectory};
use super::pathloss::{db_to_linear, fsp_path_loss, uma_los_probability, uma_path_loss};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CVec};
use crate::rng::{stream, Domain};

const AU_LINK_BASE: u64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub bs_positions: Vec<Position3D>,
    pub tu_trajectories: Vec<Trajectory>,
    pub tu_height: f64,
    pub au_tracks: Vec<FlightTrack>,
    pub au_height: f64,
    pub array: ArrayGeometry,
    pub carrier_hz: f64,
    pub slot_s: f64,
    pub alpha: f64,
    pub rician_k_db: f64,
}

impl ChannelConfig {
    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }
    pub fn num_tu(&self) -> usize {
        self.tu_trajectories.len()
    }
    pub fn num_au(&self) -> usize {
        self.au_tracks.len()
    }
    pub fn num_antennas(&self) -> usize {
        self.array.num_antennas()
    }

    pub fn tu_position(&self, k: usize, slot: usize) -> Position3D {
        let [x, y] = self.tu_trajectories[k].position_at(slot as f64 * self.slot_s);
        Position3D::new(x, y, self.tu_height)
    }

    pub fn au_position(&self, l: usize, slot: usize) -> Position3D {
        let [x, y] = self.au_tracks[l].position_at(slot as f64 * self.slot_s);
        Position3D::new(x, y, self.au_height)
    }

    fn validate(&self) -> Result<()> {
        if self.bs_positions.is_empty() || self.tu_trajectories.is_empty() {
            return Err(Error::Config("need at least one BS and one TU".into()));
        }
        if !self.array.is_valid() {
            return Err(Error::Config("antenna array must have at least one element and positive spacing".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("fading correlation must be in [0, 1], got {}", self.alpha)));
        }
        if self.tu_trajectories.iter().any(|t| t.waypoints.is_empty()) {
            return Err(Error::Config("every TU trajectory needs a waypoint".into()));
        }
        Ok(())
    }
}

/// Statistical description of a BS -> AU link: zenith angle, azimuth,
/// inverse path loss, distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuLinkStats {
    pub theta: f64,
    pub phi: f64,
    pub gain: f64,
    pub distance: f64,
}

/// All channel realisations of one slot. Indexed `[bs][user]`.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub slot: usize,
    pub tu: Vec<Vec<CVec>>,
    pub au: Vec<Vec<CVec>>,
    /// Path-loss-scaled LoS part of each AU channel, `sqrt(1/L) g^LoS`.
    pub au_los: Vec<Vec<CVec>>,
    pub au_stats: Vec<Vec<AuLinkStats>>,
    /// Inverse UMa path loss per BS -> TU link.
    pub tu_gain: Vec<Vec<f64>>,
}

impl ChannelSet {
    pub fn num_bs(&self) -> usize {
        self.tu.len()
    }
    pub fn num_tu(&self) -> usize {
        self.tu.first().map_or(0, Vec::len)
    }
    pub fn num_au(&self) -> usize {
        self.au.first().map_or(0, Vec::len)
    }
    pub fn num_antennas(&self) -> usize {
        self.tu.first().and_then(|r| r.first()).map_or(0, |h| h.len())
    }

    /// `||h_{n,k}||^2`, indexed `[tu][bs]`.
    pub fn strengths(&self) -> Vec<Vec<f64>> {
        (0..self.num_tu()).map(|k| (0..self.num_bs()).map(|n| norm_sqr(&self.tu[n][k])).collect()).collect()
    }
}

/// Rayleigh BS -> TU channel `sqrt(1/L) h^NLoS`.
pub fn tu_channel(inv_path_loss: f64, nlos: &CVec) -> CVec {
    nlos * Complex64::from(inv_path_loss.sqrt())
}

/// Rician BS -> AU channel. `kappa` is linear; `f64::INFINITY` gives pure LoS.
pub fn au_channel(inv_path_loss: f64, kappa: f64, los: &CVec, nlos: &CVec) -> CVec {
    let s = inv_path_loss.sqrt();
    if kappa.is_infinite() {
        return los * Complex64::from(s);
    }
    let a = (kappa / (kappa + 1.0)).sqrt() * s;
    let b = (1.0 / (kappa + 1.0)).sqrt() * s;
    los * Complex64::from(a) + nlos * Complex64::from(b)
}

/// LoS array response with the reference-antenna phase `exp(-j 2 pi d / lambda)`.
pub fn los_component(distance: f64, theta: f64, phi: f64, array: &ArrayGeometry) -> CVec {
    let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * distance / array.wavelength);
    steering_vector(theta, phi, array) * phase
}

#[derive(Clone, Debug)]
pub struct FadingState {
    pub tu_nlos: Vec<Vec<CVec>>,
    pub au_nlos: Vec<Vec<CVec>>,
    /// Drawn once per BS -> TU link; never changes during a run.
    pub los_blocked: Vec<Vec<bool>>,
}

/// Owns the fading state and advances it slot by slot. The realisation at
/// slot `t` depends only on `(config, seed, t)`.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    cfg: ChannelConfig,
    seed: u64,
    slot: usize,
    fading: FadingState,
}

impl ChannelModel {
    pub fn new(cfg: ChannelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let (n_bs, n_tu, n_au, m) = (cfg.num_bs(), cfg.num_tu(), cfg.num_au(), cfg.num_antennas());
        let mut tu_nlos = Vec::with_capacity(n_bs);
        let mut au_nlos = Vec::with_capacity(n_bs);
        let mut los_blocked = Vec::with_capacity(n_bs);
        for n in 0..n_bs {
            let mut row = Vec::with_capacity(n_tu);
            let mut blocked = Vec::with_capacity(n_tu);
            for k in 0..n_tu {
                let link = tu_link(n, k, n_tu);
                row.push(fresh_nlos(m, &mut stream(seed, Domain::Fading, link, 0)));
                let d2d = cfg.bs_positions[n].horizontal_distance(&cfg.tu_position(k, 0));
                let u: f64 = stream(seed, Domain::LosState, link, 0).random();
                blocked.push(u >= uma_los_probability(d2d));
            }
            tu_nlos.push(row);
            los_blocked.push(blocked);
            au_nlos.push(
                (0..n_au).map(|l| fresh_nlos(m, &mut stream(seed, Domain::Fading, au_link(n, l, n_au), 0))).collect(),
            );
        }
        Ok(Self { cfg, seed, slot: 0, fading: FadingState { tu_nlos, au_nlos, los_blocked } })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn fading(&self) -> &FadingState {
        &self.fading
    }

    /// Moves the NLoS states to the next slot.
    pub fn advance(&mut self) {
        let next = self.slot + 1;
        let alpha = self.cfg.alpha;
        let (n_tu, n_au) = (self.cfg.num_tu(), self.cfg.num_au());
        for (n, row) in self.fading.tu_nlos.iter_mut().enumerate() {
            for (k, h) in row.iter_mut().enumerate() {
                let mut rng = stream(self.seed, Domain::Fading, tu_link(n, k, n_tu), next as u64);
                *h = evolve_nlos(h, alpha, &mut rng);
            }
        }
        for (n, row) in self.fading.au_nlos.iter_mut().enumerate() {
            for (l, g) in row.iter_mut().enumerate() {
                let mut rng = stream(self.seed, Domain::Fading, au_link(n, l, n_au), next as u64);
                *g = evolve_nlos(g, alpha, &mut rng);
            }
        }
        self.slot = next;
    }

    pub fn channels(&self) -> Result<ChannelSet> {
        let cfg = &self.cfg;
        let (n_bs, n_tu, n_au) = (cfg.num_bs(), cfg.num_tu(), cfg.num_au());
        let kappa = db_to_linear(cfg.rician_k_db);
        let tu_pos: Vec<_> = (0..n_tu).map(|k| cfg.tu_position(k, self.slot)).collect();
        let au_pos: Vec<_> = (0..n_au).map(|l| cfg.au_position(l, self.slot)).collect();

        let mut tu = Vec::with_capacity(n_bs);
        let mut tu_gain = Vec::with_capacity(n_bs);
        let mut au = Vec::with_capacity(n_bs);
        let mut au_los = Vec::with_capacity(n_bs);
        let mut au_stats = Vec::with_capacity(n_bs);
        for n in 0..n_bs {
            let bs = cfg.bs_positions[n];
            let mut hrow = Vec::with_capacity(n_tu);
            let mut grow = Vec::with_capacity(n_tu);
            for k in 0..n_tu {
                let d2d = bs.horizontal_distance(&tu_pos[k]).max(f64::MIN_POSITIVE);
                let loss = uma_path_loss(d2d, bs.z, cfg.tu_height, cfg.carrier_hz, self.fading.los_blocked[n][k])?;
                let gain = 1.0 / loss;
                hrow.push(tu_channel(gain, &self.fading.tu_nlos[n][k]));
                grow.push(gain);
            }
            tu.push(hrow);
            tu_gain.push(grow);

            let mut arow = Vec::with_capacity(n_au);
            let mut lrow = Vec::with_capacity(n_au);
            let mut srow = Vec::with_capacity(n_au);
            for l in 0..n_au {
                let d = bs.distance(&au_pos[l]);
                let (theta, phi) = bs.angles_to(&au_pos[l]);
                let gain = 1.0 / fsp_path_loss(d, cfg.carrier_hz)?;
                let los = los_component(d, theta, phi, &cfg.array);
                arow.push(au_channel(gain, kappa, &los, &self.fading.au_nlos[n][l]));
                lrow.push(los * Complex64::from(gain.sqrt()));
                srow.push(AuLinkStats { theta, phi, gain, distance: d });
            }
            au.push(arow);
            au_los.push(lrow);
            au_stats.push(srow);
        }
        Ok(ChannelSet { slot: self.slot, tu, au, au_los, au_stats, tu_gain })
    }
}

fn tu_link(n: usize, k: usize, n_tu: usize) -> u64 {
    (n * n_tu + k) as u64
}

fn au_link(n: usize, l: usize, n_au: usize) -> u64 {
    AU_LINK_BASE + (n * n_au + l) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::pathloss::SPEED_OF_LIGHT;
    use crate::rng::complex_normal;

    fn small_config(alpha: f64) -> ChannelConfig {
        let lambda = SPEED_OF_LIGHT / 2e9;
        ChannelConfig {
            bs_positions: vec![Position3D::new(0.0, 0.0, 30.0), Position3D::new(400.0, 0.0, 30.0)],
            tu_trajectories: vec![Trajectory::stationary(100.0, 50.0), Trajectory::stationary(300.0, -80.0)],
            tu_height: 1.5,
            au_tracks: vec![FlightTrack { start: [-2000.0, 500.0], heading_deg: 0.0, speed: 250.0 }],
            au_height: 10_000.0,
            array: ArrayGeometry::half_wavelength(2, 2, lambda),
            carrier_hz: 2e9,
            slot_s: 0.02,
            alpha,
            rician_k_db: 15.0,
        }
    }

    #[test]
    fn unit_gain_passes_nlos_through() {
        let mut rng = stream(1, Domain::Test, 0, 0);
        let h = fresh_nlos(4, &mut rng);
        assert_eq!(tu_channel(1.0, &h), h);
    }

    #[test]
    fn pure_los_limit_has_path_gain_norm() {
        let lambda = SPEED_OF_LIGHT / 2e9;
        let arr = ArrayGeometry::half_wavelength(4, 4, lambda);
        let los = los_component(10_000.0, 0.3, 1.1, &arr);
        let mut rng = stream(1, Domain::Test, 0, 1);
        let nlos = fresh_nlos(16, &mut rng);
        let g = au_channel(1e-12, f64::INFINITY, &los, &nlos);
        assert!((norm_sqr(&g).sqrt() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn zero_kappa_is_scaled_rayleigh() {
        let lambda = SPEED_OF_LIGHT / 2e9;
        let arr = ArrayGeometry::half_wavelength(2, 2, lambda);
        let los = los_component(5000.0, 0.3, 1.1, &arr);
        let mut rng = stream(1, Domain::Test, 0, 2);
        let nlos = fresh_nlos(4, &mut rng);
        let g = au_channel(4.0, 0.0, &los, &nlos);
        assert!((g - nlos * Complex64::from(2.0)).norm() < 1e-12);
    }

    #[test]
    fn rayleigh_power_matches_path_gain() {
        let m = 4;
        let gain = 3.7e-11;
        let n = 100_000;
        let mut rng = stream(5, Domain::Test, 0, 3);
        let mean: f64 =
            (0..n).map(|_| norm_sqr(&tu_channel(gain, &fresh_nlos(m, &mut rng)))).sum::<f64>() / n as f64;
        let expect = m as f64 * gain;
        assert!((mean / expect - 1.0).abs() < 0.02, "{mean} vs {expect}");
    }

    #[test]
    fn rician_power_matches_expectation() {
        // E||g||^2 = (1/L) (kappa/(kappa+1) ||a||^2 + M/(kappa+1)), ||a|| = 1.
        let lambda = SPEED_OF_LIGHT / 2e9;
        let arr = ArrayGeometry::half_wavelength(4, 4, lambda);
        let kappa = db_to_linear(15.0);
        let gain = 1.4e-12;
        let los = los_component(10_000.0, 0.5, -0.4, &arr);
        let mut rng = stream(5, Domain::Test, 0, 4);
        let n = 50_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let nlos = CVec::from_fn(16, |_, _| complex_normal(&mut rng));
                norm_sqr(&au_channel(gain, kappa, &los, &nlos))
            })
            .sum::<f64>()
            / n as f64;
        let expect = gain * (kappa / (kappa + 1.0) + 16.0 / (kappa + 1.0));
        assert!((mean / expect - 1.0).abs() < 0.01, "{mean} vs {expect}");
    }

    #[test]
    fn identical_seeds_give_identical_sequences() {
        let mut a = ChannelModel::new(small_config(0.64), 9).unwrap();
        let mut b = ChannelModel::new(small_config(0.64), 9).unwrap();
        for _ in 0..20 {
            let (ca, cb) = (a.channels().unwrap(), b.channels().unwrap());
            for n in 0..2 {
                for k in 0..2 {
                    assert_eq!(ca.tu[n][k], cb.tu[n][k]);
                }
                assert_eq!(ca.au[n][0], cb.au[n][0]);
            }
            a.advance();
            b.advance();
        }
    }

    #[test]
    fn frozen_fading_repeats_channels() {
        let mut model = ChannelModel::new(small_config(1.0), 2).unwrap();
        let first = model.channels().unwrap();
        model.advance();
        let second = model.channels().unwrap();
        // TUs are stationary, so with alpha = 1 nothing changes.
        assert_eq!(first.tu, second.tu);
    }

    #[test]
    fn los_state_is_frozen() {
        let mut model = ChannelModel::new(small_config(0.64), 4).unwrap();
        let before = model.fading().los_blocked.clone();
        for _ in 0..50 {
            model.advance();
        }
        assert_eq!(before, model.fading().los_blocked);
    }

    #[test]
    fn long_run_stays_stationary() {
        let mut model = ChannelModel::new(small_config(0.64), 21).unwrap();
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..5000 {
            model.advance();
            for row in &model.fading().tu_nlos {
                for h in row {
                    acc += norm_sqr(h);
                    count += h.len();
                }
            }
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }
}
