//! Large-scale path loss: free space toward the aircraft, 3GPP UMa toward
//! terrestrial users. All functions return a linear power ratio (>= 1).

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const UMA_MIN_D2D: f64 = 10.0;
const UMA_MAX_D2D: f64 = 5_000.0;
/// Effective environment height for UMa with a UT below 13 m.
const UMA_HE: f64 = 1.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn fsp_path_loss_db(d: f64, fc: f64) -> Result<f64> {
    if !(d > 0.0) || !(fc > 0.0) {
        return Err(Error::InvalidArgument(format!("free-space loss needs d > 0 and fc > 0, got d={d}, fc={fc}")));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * d * fc / SPEED_OF_LIGHT).log10())
}

pub fn fsp_path_loss(d: f64, fc: f64) -> Result<f64> {
    fsp_path_loss_db(d, fc).map(db_to_linear)
}

fn clamp_d2d(d2d: f64) -> f64 {
    if d2d < UMA_MIN_D2D || d2d > UMA_MAX_D2D {
        let c = d2d.clamp(UMA_MIN_D2D, UMA_MAX_D2D);
        log::warn!("UMa distance {d2d:.2} m outside [10, 5000] m, clamped to {c:.2} m");
        c
    } else {
        d2d
    }
}

fn uma_los_db(d2d: f64, h_bs: f64, h_ut: f64, fc: f64) -> f64 {
    let f_ghz = fc / 1e9;
    let d3d = d2d.hypot(h_bs - h_ut);
    let d_bp = 4.0 * (h_bs - UMA_HE) * (h_ut - UMA_HE) * fc / SPEED_OF_LIGHT;
    if d2d <= d_bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * f_ghz.log10()
    } else {
        28.0 + 40.0 * d3d.log10() + 20.0 * f_ghz.log10() - 9.0 * (d_bp * d_bp + (h_bs - h_ut).powi(2)).log10()
    }
}

fn uma_nlos_db(d2d: f64, h_bs: f64, h_ut: f64, fc: f64) -> f64 {
    let f_ghz = fc / 1e9;
    let d3d = d2d.hypot(h_bs - h_ut);
    let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * f_ghz.log10() - 0.6 * (h_ut - 1.5);
    nlos.max(uma_los_db(d2d, h_bs, h_ut, fc))
}

/// UMa path loss in dB without shadow fading. Distances outside the
/// model's validity range are clamped (with a warning).
pub fn uma_path_loss_db(d2d: f64, h_bs: f64, h_ut: f64, fc: f64, los_blocked: bool) -> Result<f64> {
    if !(d2d > 0.0) {
        return Err(Error::InvalidArgument(format!("UMa loss needs d2d > 0, got {d2d}")));
    }
    let d2d = clamp_d2d(d2d);
    Ok(if los_blocked { uma_nlos_db(d2d, h_bs, h_ut, fc) } else { uma_los_db(d2d, h_bs, h_ut, fc) })
}

pub fn uma_path_loss(d2d: f64, h_bs: f64, h_ut: f64, fc: f64, los_blocked: bool) -> Result<f64> {
    uma_path_loss_db(d2d, h_bs, h_ut, fc, los_blocked).map(db_to_linear)
}

/// UMa LoS probability for a UT below 13 m.
pub fn uma_los_probability(d2d: f64) -> f64 {
    if d2d <= 18.0 {
        1.0
    } else {
        18.0 / d2d + (-d2d / 63.0).exp() * (1.0 - 18.0 / d2d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FC: f64 = 2e9;

    #[test]
    fn unit_argument_gives_zero_db() {
        let d = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * FC);
        assert!(fsp_path_loss_db(d, FC).unwrap().abs() < 1e-12);
        assert!((fsp_path_loss(d, FC).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ten_km_at_two_ghz() {
        // 20 log10(4 pi 1e4 2e9 / c), evaluated independently.
        let db = fsp_path_loss_db(1e4, FC).unwrap();
        assert!((db - 118.468383135163).abs() < 1e-9, "{db}");
    }

    #[test]
    fn doubling_distance_adds_six_db() {
        let a = fsp_path_loss_db(1234.0, FC).unwrap();
        let b = fsp_path_loss_db(2468.0, FC).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_distance() {
        assert!(fsp_path_loss(0.0, FC).is_err());
        assert!(fsp_path_loss(-1.0, FC).is_err());
        assert!(uma_path_loss(0.0, 30.0, 1.5, FC, false).is_err());
    }

    #[test]
    fn uma_los_at_100m_matches_closed_form() {
        // Independent evaluation: 28 + 22 log10(d3d) + 20 log10(2), d3d = hypot(100, 28.5).
        let db = uma_path_loss_db(100.0, 30.0, 1.5, FC, false).unwrap();
        assert!((db - 78.39367678080421).abs() < 1e-9, "{db}");
        let nlos = uma_path_loss_db(100.0, 30.0, 1.5, FC, true).unwrap();
        assert!((nlos - 98.38332009431875).abs() < 1e-9, "{nlos}");
        let far = uma_path_loss_db(1000.0, 30.0, 1.5, FC, false).unwrap();
        assert!((far - 107.42903314370488).abs() < 1e-9, "{far}");
    }

    #[test]
    fn nlos_never_below_los() {
        for i in 0..500 {
            let d = 10.0 + i as f64 * 10.0;
            let los = uma_path_loss_db(d, 30.0, 1.5, FC, false).unwrap();
            let nlos = uma_path_loss_db(d, 30.0, 1.5, FC, true).unwrap();
            assert!(nlos >= los);
        }
    }

    #[test]
    fn monotone_over_valid_range() {
        for blocked in [false, true] {
            let mut prev = f64::NEG_INFINITY;
            let mut d = 35.0;
            while d <= 5000.0 {
                let v = uma_path_loss_db(d, 30.0, 1.5, FC, blocked).unwrap();
                assert!(v >= prev - 1e-12, "d={d}");
                prev = v;
                d += 1.0;
            }
        }
    }

    #[test]
    fn out_of_range_distance_is_clamped() {
        let near = uma_path_loss_db(2.0, 30.0, 1.5, FC, false).unwrap();
        let at_min = uma_path_loss_db(10.0, 30.0, 1.5, FC, false).unwrap();
        assert_eq!(near, at_min);
    }

    #[test]
    fn los_probability_shape() {
        assert_eq!(uma_los_probability(10.0), 1.0);
        assert!((uma_los_probability(100.0) - 0.3476708368442312).abs() < 1e-12);
        assert!(uma_los_probability(1000.0) < uma_los_probability(100.0));
    }
}
