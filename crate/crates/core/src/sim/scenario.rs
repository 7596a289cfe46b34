//! Scenario configuration. The file format is TOML; every key has a default,
//! so an empty file describes the full-size reference network.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelConfig, FlightTrack, Position3D, Trajectory, SPEED_OF_LIGHT};
use crate::encoding::{ActionScales, EncodingParams, FeatureScale, SetSizes};
use crate::error::{Error, Result};
use crate::learn::{CupHyper, D3qnHyper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub slots: usize,
    pub geometry: GeometrySection,
    pub radio: RadioSection,
    pub encoding: EncodingSection,
    pub action: ActionScales,
    pub bs_agent: BsAgentSection,
    pub cup: CupHyper,
    pub tu_agent: TuAgentSection,
    pub d3qn: D3qnHyper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuPath {
    pub waypoints: Vec<[f64; 2]>,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub num_bs: usize,
    /// Inter-site distance of the hexagonal layout.
    pub isd_m: f64,
    pub bs_height_m: f64,
    pub num_tu: usize,
    pub tu_height_m: f64,
    pub tu_speed_mps: f64,
    /// Radii of the generated TU arcs as fractions of the inter-site distance.
    pub tu_radius_fractions: Vec<f64>,
    pub num_au: usize,
    pub au_height_m: f64,
    pub au_speed_mps: f64,
    /// Lateral offset of generated flight tracks from the network centre.
    pub au_offset_m: f64,
    /// Explicit BS ground positions; replaces the hexagonal layout.
    pub bs_positions: Option<Vec<[f64; 2]>>,
    /// Explicit TU paths; replaces the generated arcs.
    pub tu: Option<Vec<TuPath>>,
    /// Explicit flight tracks; replaces the generated ones.
    pub au: Option<Vec<FlightTrack>>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            num_bs: 7,
            isd_m: 500.0,
            bs_height_m: 30.0,
            num_tu: 21,
            tu_height_m: 1.5,
            tu_speed_mps: 5.0,
            tu_radius_fractions: vec![0.2, 0.35, 0.5],
            num_au: 2,
            au_height_m: 10_000.0,
            au_speed_mps: 250.0,
            au_offset_m: 300.0,
            bs_positions: None,
            tu: None,
            au: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Noise power over the whole band, in watts.
    pub noise_w: f64,
    pub p_max_w: f64,
    pub i_max_w: f64,
    pub mh: usize,
    pub mv: usize,
    pub slot_s: f64,
    pub alpha: f64,
    pub rician_k_db: f64,
    pub zeta_r: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            carrier_hz: 2e9,
            bandwidth_hz: 10e6,
            noise_w: 3.98e-14,
            p_max_w: 20.0,
            i_max_w: 1.6e-13,
            mh: 4,
            mv: 4,
            slot_s: 0.02,
            alpha: 0.64,
            rician_k_db: 15.0,
            zeta_r: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingSection {
    pub codebook_size: usize,
    pub nc: usize,
    pub b_in: usize,
    pub b_in_pri: usize,
    pub k_in: usize,
    pub k_out: usize,
    pub log_floor: f64,
}

impl Default for EncodingSection {
    fn default() -> Self {
        Self { codebook_size: 128, nc: 4, b_in: 4, b_in_pri: 5, k_in: 3, k_out: 3, log_floor: -40.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsAgentSection {
    pub hidden: Vec<usize>,
    /// Penalty weight of the penalised-reward baseline.
    pub penalty_zeta: f64,
}

impl Default for BsAgentSection {
    fn default() -> Self {
        Self { hidden: vec![512, 128, 64], penalty_zeta: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuAgentSection {
    pub hidden: Vec<usize>,
}

impl Default for TuAgentSection {
    fn default() -> Self {
        Self { hidden: vec![64, 32] }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            slots: 6000,
            geometry: GeometrySection::default(),
            radio: RadioSection::default(),
            encoding: EncodingSection::default(),
            action: ActionScales::default(),
            bs_agent: BsAgentSection::default(),
            cup: CupHyper::default(),
            tu_agent: TuAgentSection::default(),
            d3qn: D3qnHyper::default(),
        }
    }
}

/// The first `count` sites of a hexagonal grid, nearest to the origin first.
pub fn hex_sites(count: usize, isd: f64) -> Vec<[f64; 2]> {
    let mut rings = 0i64;
    while 3 * rings * (rings + 1) + 1 < count as i64 {
        rings += 1;
    }
    let mut sites = Vec::new();
    for q in -rings..=rings {
        for r in -rings..=rings {
            if (q + r).abs() > rings {
                continue;
            }
            let x = isd * (q as f64 + r as f64 / 2.0);
            let y = isd * (r as f64 * 3f64.sqrt() / 2.0);
            let ring = q.abs().max(r.abs()).max((q + r).abs());
            let mut angle = y.atan2(x);
            if angle < 0.0 {
                angle += 2.0 * PI;
            }
            sites.push((ring, angle, [x, y]));
        }
    }
    sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    sites.into_iter().take(count).map(|s| s.2).collect()
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn num_bs(&self) -> usize {
        self.geometry.bs_positions.as_ref().map_or(self.geometry.num_bs, Vec::len)
    }

    pub fn num_tu(&self) -> usize {
        self.geometry.tu.as_ref().map_or(self.geometry.num_tu, Vec::len)
    }

    pub fn num_au(&self) -> usize {
        self.geometry.au.as_ref().map_or(self.geometry.num_au, Vec::len)
    }

    pub fn num_antennas(&self) -> usize {
        self.radio.mh * self.radio.mv
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let r = &self.radio;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_bs() == 0 || self.num_tu() == 0 || self.num_au() == 0 {
            return bad("BS, TU and AU counts must all be at least 1".into());
        }
        if r.mh == 0 || r.mv == 0 {
            return bad("antenna array must have at least one element".into());
        }
        for (name, v) in [
            ("carrier_hz", r.carrier_hz),
            ("bandwidth_hz", r.bandwidth_hz),
            ("noise_w", r.noise_w),
            ("p_max_w", r.p_max_w),
            ("i_max_w", r.i_max_w),
            ("slot_s", r.slot_s),
            ("isd_m", g.isd_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&r.alpha) || !(0.0..=1.0).contains(&r.zeta_r) {
            return bad("alpha and zeta_r must lie in [0, 1]".into());
        }
        let e = &self.encoding;
        if e.codebook_size == 0 || e.nc == 0 || e.nc > e.codebook_size {
            return bad(format!("need 1 <= nc <= codebook_size, got nc={} C={}", e.nc, e.codebook_size));
        }
        if e.b_in == 0 || e.b_in_pri == 0 || e.k_in == 0 || e.k_out == 0 {
            return bad("set sizes must be at least 1".into());
        }
        if g.tu_radius_fractions.is_empty() {
            return bad("tu_radius_fractions must not be empty".into());
        }
        if self.cup.minibatch == 0 || self.cup.buffer_len == 0 || self.d3qn.batch == 0 || self.d3qn.memory == 0 {
            return bad("buffer and batch sizes must be at least 1".into());
        }
        if let Some(paths) = &g.tu {
            if paths.iter().any(|p| p.waypoints.is_empty()) {
                return bad("every TU path needs at least one waypoint".into());
            }
        }
        Ok(())
    }

    pub fn bs_sites(&self) -> Vec<[f64; 2]> {
        self.geometry.bs_positions.clone().unwrap_or_else(|| hex_sites(self.geometry.num_bs, self.geometry.isd_m))
    }

    /// Explicit paths, or arcs around each TU's home site: TU `k` lives in
    /// cell `k mod N` on radius class `k div N`, alternating direction.
    pub fn tu_trajectories(&self) -> Vec<Trajectory> {
        let g = &self.geometry;
        if let Some(paths) = &g.tu {
            return paths.iter().map(|p| Trajectory { waypoints: p.waypoints.clone(), speed: p.speed }).collect();
        }
        let sites = self.bs_sites();
        let n = sites.len();
        let length = g.tu_speed_mps * self.slots as f64 * self.radio.slot_s;
        (0..g.num_tu)
            .map(|k| {
                let (cell, j) = (k % n, k / n);
                let fractions = &g.tu_radius_fractions;
                let radius = g.isd_m * fractions[j % fractions.len()];
                let start = 2.0 * PI * ((0.29 * j as f64 + 0.61 * cell as f64).fract());
                let dir = if k % 2 == 0 { 1.0 } else { -1.0 };
                let sweep = dir * length / radius;
                let segments = ((sweep.abs() / (PI / 16.0)).ceil() as usize).max(1);
                Trajectory::circular_arc(sites[cell], radius, start, sweep, segments, g.tu_speed_mps)
            })
            .collect()
    }

    /// Explicit tracks, or straight passes over the network centre that
    /// alternate direction and are centred on the middle of the run.
    pub fn au_tracks(&self) -> Vec<FlightTrack> {
        let g = &self.geometry;
        if let Some(tracks) = &g.au {
            return tracks.clone();
        }
        let half = g.au_speed_mps * self.slots as f64 * self.radio.slot_s / 2.0;
        (0..g.num_au)
            .map(|l| {
                let side = if l % 2 == 0 { 1.0 } else { -1.0 };
                let offset = side * g.au_offset_m * (l / 2 + 1) as f64;
                if l % 2 == 0 {
                    FlightTrack { start: [-half, offset], heading_deg: 0.0, speed: g.au_speed_mps }
                } else {
                    FlightTrack { start: [half, offset], heading_deg: 180.0, speed: g.au_speed_mps }
                }
            })
            .collect()
    }

    pub fn channel_config(&self) -> ChannelConfig {
        let g = &self.geometry;
        let wavelength = SPEED_OF_LIGHT / self.radio.carrier_hz;
        ChannelConfig {
            bs_positions: self.bs_sites().into_iter().map(|[x, y]| Position3D::new(x, y, g.bs_height_m)).collect(),
            tu_trajectories: self.tu_trajectories(),
            tu_height: g.tu_height_m,
            au_tracks: self.au_tracks(),
            au_height: g.au_height_m,
            array: ArrayGeometry::half_wavelength(self.radio.mh, self.radio.mv, wavelength),
            carrier_hz: self.radio.carrier_hz,
            slot_s: self.radio.slot_s,
            alpha: self.radio.alpha,
            rician_k_db: self.radio.rician_k_db,
        }
    }

    pub fn encoding_params(&self) -> EncodingParams {
        let e = &self.encoding;
        EncodingParams {
            codebook_size: e.codebook_size,
            nc: e.nc,
            sets: SetSizes { b_in: e.b_in, b_in_pri: e.b_in_pri, k_in: e.k_in, k_out: e.k_out },
            scale: FeatureScale { log_floor: e.log_floor },
            i_max: self.radio.i_max_w,
        }
    }

    pub fn sigma2(&self) -> Vec<f64> {
        vec![self.radio.noise_w; self.num_tu()]
    }

    /// Scalars exchanged between BSs per slot by the learning schemes.
    pub fn learning_exchange_count(&self) -> usize {
        let e = &self.encoding;
        let (k, l) = (self.num_tu(), self.num_au());
        (3 * e.nc * k + k + 2) * e.b_in * e.k_in + (k + 6) * e.b_in_pri * l + 3 * e.k_out * e.b_in + 2 * l
    }

    /// Scalars exchanged per slot by the centralised optimizer schemes.
    pub fn optimizer_exchange_count(&self) -> usize {
        let m = self.num_antennas();
        let others = self.num_bs().saturating_sub(1);
        2 * m * others * self.num_tu() + 2 * m * others * self.num_au()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_network() {
        let s = Scenario::from_toml("").unwrap();
        assert_eq!(s, Scenario::default());
        assert_eq!((s.num_bs(), s.num_tu(), s.num_au(), s.num_antennas()), (7, 21, 2, 16));
    }

    #[test]
    fn exchange_counts_reference() {
        let s = Scenario::default();
        assert_eq!(s.learning_exchange_count(), 3610);
        assert_eq!(s.optimizer_exchange_count(), 4416);
    }

    #[test]
    fn exchange_counts_by_hand() {
        let mut s = Scenario::default();
        s.geometry.num_bs = 1;
        assert_eq!(s.optimizer_exchange_count(), 0);
        s.geometry.num_bs = 3;
        s.geometry.num_tu = 2;
        s.geometry.num_au = 1;
        s.radio.mh = 2;
        s.radio.mv = 1;
        s.encoding = EncodingSection { codebook_size: 8, nc: 1, b_in: 1, b_in_pri: 2, k_in: 1, k_out: 1, log_floor: -40.0 };
        // (3*1*2 + 2 + 2)*1*1 + (2+6)*2*1 + 3*1*1 + 2*1 = 10 + 16 + 3 + 2
        assert_eq!(s.learning_exchange_count(), 31);
        // 2*2*2*2 + 2*2*2*1
        assert_eq!(s.optimizer_exchange_count(), 24);
    }

    #[test]
    fn hex_layout_distances() {
        let sites = hex_sites(7, 500.0);
        assert_eq!(sites[0], [0.0, 0.0]);
        for s in &sites[1..] {
            assert!((s[0].hypot(s[1]) - 500.0).abs() < 1e-9);
        }
        let three = hex_sites(3, 500.0);
        let d = (three[1][0] - three[2][0]).hypot(three[1][1] - three[2][1]);
        assert!((d - 500.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Scenario::from_toml("bogus = 1").is_err());
        assert!(Scenario::from_toml("[radio]\np_max_w = -1.0").is_err());
        assert!(Scenario::from_toml("[geometry]\nnum_au = 0").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = Scenario::default();
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn generated_tracks_cross_the_centre_mid_run() {
        let s = Scenario::default();
        let cfg = s.channel_config();
        let mid = cfg.au_position(0, s.slots / 2);
        assert!(mid.x.abs() < 1e-6);
        assert_eq!(cfg.tu_trajectories.len(), 21);
    }
}
