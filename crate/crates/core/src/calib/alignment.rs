//! Object position alignment: lattice pose snapping and median albedo
//! extraction.

use super::CalibError;
use crate::frame::Frame;

/// Placement lattice spacing, meters.
pub const LATTICE_SPACING_M: f64 = 0.05;

/// Rotation catalogue, degrees. 90 is reachable for inputs already in
/// [0, 90]; values outside that range are reduced modulo 90 first, so 90 and
/// 0 denote the same lattice orientation there.
pub const YAW_CATALOGUE_DEG: [f64; 5] = [0.0, 30.0, 45.0, 60.0, 90.0];

/// Snap a raw (x, y, yaw°) pose to the 5 cm placement lattice and the
/// rotation catalogue.
///
/// Position ties round away from zero; yaw ties go to the smaller angle.
/// Idempotent: snapped poses are fixed points.
pub fn snap_pose(raw: (f64, f64, f64)) -> (f64, f64, f64) {
    // Multiplying by the exact reciprocal (20 = 1/0.05) keeps half-cell
    // inputs (e.g. 0.125) on exact .5 ties, which `round` sends away
    // from zero as required.
    let snap_axis = |v: f64| (v * 20.0).round() / 20.0;

    let yaw = raw.2;
    let y = if (0.0..=90.0).contains(&yaw) {
        yaw
    } else {
        yaw.rem_euclid(90.0)
    };
    let mut best = YAW_CATALOGUE_DEG[0];
    let mut best_d = (y - best).abs();
    for &c in &YAW_CATALOGUE_DEG[1..] {
        let d = (y - c).abs();
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    (snap_axis(raw.0), snap_axis(raw.1), best)
}

/// Per-channel median albedo of a rectangular frame region, in [0, 1].
pub fn extract_albedo(
    frame: &Frame,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
) -> Result<[f64; 3], CalibError> {
    if w == 0 || h == 0 || x0 + w > frame.width() || y0 + h > frame.height() {
        return Err(CalibError::EmptyPatch);
    }
    let mut chans: [Vec<u8>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            let p = frame.pixel(x, y);
            for c in 0..3 {
                chans[c].push(p[c]);
            }
        }
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        chans[c].sort_unstable();
        let n = chans[c].len();
        let med = if n % 2 == 1 {
            f64::from(chans[c][n / 2])
        } else {
            (f64::from(chans[c][n / 2 - 1]) + f64::from(chans[c][n / 2])) / 2.0
        };
        out[c] = med / 255.0;
    }
    Ok(out)
}

/// Median of raw channel values (helper for value-level tests and tools).
pub fn median_f64(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_fixed_point() {
        assert_eq!(snap_pose((0.10, 0.25, 45.0)), (0.10, 0.25, 45.0));
    }

    #[test]
    fn snaps_to_nearest_node_and_angle() {
        let (x, y, yaw) = snap_pose((0.112, 0.238, 37.0));
        assert!((x - 0.10).abs() < 1e-12);
        assert!((y - 0.25).abs() < 1e-12);
        assert_eq!(yaw, 30.0);
    }

    #[test]
    fn position_ties_round_away_from_zero() {
        let (x, y, yaw) = snap_pose((0.125, 0.0, 0.0));
        assert!((x - 0.15).abs() < 1e-12);
        assert_eq!(y, 0.0);
        assert_eq!(yaw, 0.0);
    }

    #[test]
    fn yaw_ties_go_to_smaller_angle() {
        assert_eq!(snap_pose((0.0, 0.0, 37.5)).2, 30.0);
        assert_eq!(snap_pose((0.0, 0.0, 15.0)).2, 0.0);
        assert_eq!(snap_pose((0.0, 0.0, 75.0)).2, 60.0);
    }

    #[test]
    fn yaw_reduces_modulo_90_and_90_is_reachable() {
        assert_eq!(snap_pose((0.0, 0.0, 84.0)).2, 90.0);
        assert_eq!(snap_pose((0.0, 0.0, 90.0)).2, 90.0);
        assert_eq!(snap_pose((0.0, 0.0, 100.0)).2, 0.0);
        assert_eq!(snap_pose((0.0, 0.0, 127.0)).2, 30.0);
    }

    #[test]
    fn snap_is_idempotent_on_samples() {
        for i in 0..200 {
            let raw = (
                f64::from(i) * 0.0037,
                f64::from(i) * 0.0023 + 0.01,
                f64::from(i) * 3.7 - 60.0,
            );
            let once = snap_pose(raw);
            assert_eq!(snap_pose(once), once, "not idempotent at {raw:?}");
        }
    }

    #[test]
    fn snapping_error_is_bounded_by_half_cell() {
        for i in 0..500 {
            let x = f64::from(i) * 0.00117;
            let y = 0.6 - f64::from(i) * 0.00093;
            let (sx, sy, _) = snap_pose((x, y, 0.0));
            assert!((sx - x).abs() <= 0.025 + 1e-12);
            assert!((sy - y).abs() <= 0.025 + 1e-12);
        }
    }

    #[test]
    fn albedo_of_uniform_patch_is_its_color() {
        let mut f = Frame::new(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                f.set_pixel(x, y, [51, 102, 204]);
            }
        }
        let a = extract_albedo(&f, 1, 1, 5, 5).unwrap();
        assert!((a[0] - 51.0 / 255.0).abs() < 1e-12);
        assert!((a[1] - 102.0 / 255.0).abs() < 1e-12);
        assert!((a[2] - 204.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn albedo_is_robust_to_ten_percent_outliers() {
        let mut f = Frame::new(10, 10);
        for y in 0..10 {
            for x in 0..10 {
                f.set_pixel(x, y, [100, 150, 50]);
            }
        }
        // 10 outlier pixels out of 100.
        for k in 0..10 {
            f.set_pixel(k, 0, [255, 255, 255]);
        }
        let a = extract_albedo(&f, 0, 0, 10, 10).unwrap();
        assert!((a[0] - 100.0 / 255.0).abs() < 1e-12);
        assert!((a[1] - 150.0 / 255.0).abs() < 1e-12);
        assert!((a[2] - 50.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn median_arithmetic() {
        assert_eq!(median_f64(&[0.1, 0.2, 0.3]), Some(0.2));
        assert_eq!(median_f64(&[0.3, 0.1]), Some(0.2));
        assert_eq!(median_f64(&[]), None);
    }

    #[test]
    fn empty_patch_errors() {
        let f = Frame::new(4, 4);
        assert!(extract_albedo(&f, 0, 0, 0, 3).is_err());
        assert!(extract_albedo(&f, 2, 2, 4, 4).is_err());
    }
}
