//! Plane-to-image homography estimation (normalized DLT).

use super::CalibError;
use nalgebra::{DMatrix, Matrix3, Vector3};

/// Similarity normalization: translate centroid to origin, scale mean
/// distance to sqrt(2). Returns (transform, transformed points).
fn normalize(points: &[[f64; 2]]) -> Result<(Matrix3<f64>, Vec<[f64; 2]>), CalibError> {
    let n = points.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in points {
        cx += p[0];
        cy += p[1];
    }
    cx /= n;
    cy /= n;
    let mut mean_dist = 0.0;
    for p in points {
        mean_dist += ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt();
    }
    mean_dist /= n;
    if mean_dist < 1e-12 {
        return Err(CalibError::Degenerate("coincident points".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let mapped = points
        .iter()
        .map(|p| [s * (p[0] - cx), s * (p[1] - cy)])
        .collect();
    Ok((t, mapped))
}

/// Estimate H with `image ~ H * plane` (homogeneous) from ≥ 4 plane-image
/// correspondences via the normalized direct linear transform.
pub fn estimate_homography(
    plane: &[[f64; 2]],
    image: &[[f64; 2]],
) -> Result<Matrix3<f64>, CalibError> {
    if plane.len() != image.len() {
        return Err(CalibError::LengthMismatch {
            p3: plane.len(),
            p2: image.len(),
        });
    }
    if plane.len() < 4 {
        return Err(CalibError::NotEnoughPoints {
            need: 4,
            got: plane.len(),
        });
    }
    let (t_p, pn) = normalize(plane)?;
    let (t_i, im) = normalize(image)?;

    let n = pn.len();
    // Pad to at least 9 rows so the thin SVD's V spans all of R^9 and the
    // nullspace vector is reachable for the minimal 4-point case.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (k, (p, q)) in pn.iter().zip(im.iter()).enumerate() {
        let (x, y) = (p[0], p[1]);
        let (u, v) = (q[0], q[1]);
        let r0 = 2 * k;
        a[(r0, 0)] = x;
        a[(r0, 1)] = y;
        a[(r0, 2)] = 1.0;
        a[(r0, 6)] = -u * x;
        a[(r0, 7)] = -u * y;
        a[(r0, 8)] = -u;
        let r1 = r0 + 1;
        a[(r1, 3)] = x;
        a[(r1, 4)] = y;
        a[(r1, 5)] = 1.0;
        a[(r1, 6)] = -v * x;
        a[(r1, 7)] = -v * y;
        a[(r1, 8)] = -v;
    }

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| CalibError::Degenerate("svd failed".into()))?;
    // nalgebra does not sort singular values; locate the nullspace row.
    let mut min_idx = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[min_idx] {
            min_idx = i;
        }
    }
    // Guard against rank deficiency (e.g. collinear points): the two smallest
    // singular values must be well separated.
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if sv.len() >= 2 {
        let smallest_kept = sv[sv.len() - 2];
        if smallest_kept < 1e-9 * sv[0] {
            return Err(CalibError::Degenerate(
                "rank-deficient homography system (collinear points?)".into(),
            ));
        }
    }
    let h_row = v_t.row(min_idx);
    let hn = Matrix3::new(
        h_row[0], h_row[1], h_row[2],
        h_row[3], h_row[4], h_row[5],
        h_row[6], h_row[7], h_row[8],
    );

    // Denormalize: H = T_img^-1 * Hn * T_plane.
    let t_i_inv = t_i
        .try_inverse()
        .ok_or_else(|| CalibError::Degenerate("normalization not invertible".into()))?;
    let mut h = t_i_inv * hn * t_p;
    // Fix scale so h33-ish magnitude is 1 (use the largest element for
    // stability) and the sign maps the first point with positive w.
    let p0 = Vector3::new(plane[0][0], plane[0][1], 1.0);
    let w0 = (h * p0).z;
    let norm = h.norm();
    if norm < 1e-15 {
        return Err(CalibError::Degenerate("zero homography".into()));
    }
    h /= norm;
    if w0 < 0.0 {
        h = -h;
    }
    Ok(h)
}

/// Apply a homography to a plane point.
pub fn apply_homography(h: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let q = h * Vector3::new(p[0], p[1], 1.0);
    [q.x / q.z, q.y / q.z]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_homography() {
        let h_true = Matrix3::new(1.2, 0.1, 30.0, -0.05, 0.9, 40.0, 1e-4, -2e-4, 1.0);
        let plane: Vec<[f64; 2]> = (0..4)
            .flat_map(|r| (0..5).map(move |c| [c as f64 * 10.0, r as f64 * 10.0]))
            .collect();
        let image: Vec<[f64; 2]> = plane.iter().map(|p| apply_homography(&h_true, *p)).collect();
        let h = estimate_homography(&plane, &image).unwrap();
        for p in &plane {
            let q = apply_homography(&h, *p);
            let q0 = apply_homography(&h_true, *p);
            assert!((q[0] - q0[0]).abs() < 1e-8 && (q[1] - q0[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_collinear_points() {
        let plane: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let image = plane.clone();
        assert!(estimate_homography(&plane, &image).is_err());
    }

    #[test]
    fn rejects_three_points() {
        let plane = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let image = plane.clone();
        assert!(matches!(
            estimate_homography(&plane, &image),
            Err(CalibError::NotEnoughPoints { .. })
        ));
    }
}
