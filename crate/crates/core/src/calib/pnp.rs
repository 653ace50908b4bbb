//! Planar PnP: homography-decomposition initialization plus Gauss–Newton
//! refinement of the reprojection error.
//!
//! The calibration target is coplanar, so a generic 6-point DLT is
//! degenerate; instead the board plane is parameterized in 2D, a
//! plane-to-image homography is estimated, and `K⁻¹H` is decomposed into the
//! two candidate poses (sign ambiguity). Both candidates are refined and the
//! one with lower reprojection RMS wins.

use super::homography::estimate_homography;
use super::{CalibError, CameraModel, CornerSet};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues exponential map so(3) -> SO(3).
fn exp_so3(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    if theta < 1e-12 {
        return Matrix3::identity() + skew(w);
    }
    let k = skew(&(w / theta));
    Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos())
}

/// Project rotation-ish matrix onto SO(3) via SVD.
fn orthonormalize(r: &Matrix3<f64>) -> Result<Matrix3<f64>, CalibError> {
    let svd = r.svd(true, true);
    let u = svd.u.ok_or_else(|| CalibError::Degenerate("svd failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| CalibError::Degenerate("svd failed".into()))?;
    let mut rot = u * v_t;
    if rot.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        rot = u2 * v_t;
    }
    Ok(rot)
}

/// Root-mean-square 2D reprojection residual of a camera over a corner set.
///
/// Total function: points with nonpositive depth yield `f64::INFINITY`.
pub fn reprojection_rms(corners: &CornerSet, camera: &CameraModel) -> f64 {
    let r = camera.rotation();
    let t = camera.translation();
    let mut acc = 0.0;
    let n = corners.points3d.len();
    if n == 0 {
        return 0.0;
    }
    for (p, uv) in corners.points3d.iter().zip(corners.points2d.iter()) {
        let pc = r * Vector3::from_column_slice(p) + t;
        if pc.z <= 0.0 {
            return f64::INFINITY;
        }
        let du = camera.fx * pc.x / pc.z + camera.cx - uv[0];
        let dv = camera.fy * pc.y / pc.z + camera.cy - uv[1];
        acc += du * du + dv * dv;
    }
    (acc / n as f64).sqrt()
}

/// Build an orthonormal in-plane basis for a coplanar point set.
/// Returns (centroid, world-to-plane rotation M with rows [e1; e2; n]).
fn plane_basis(points: &[[f64; 3]]) -> Result<(Vector3<f64>, Matrix3<f64>), CalibError> {
    let n = points.len() as f64;
    let mut c = Vector3::zeros();
    for p in points {
        c += Vector3::from_column_slice(p);
    }
    c /= n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = Vector3::from_column_slice(p) - c;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    // Eigenvalues ascending order is not guaranteed; sort indices.
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let normal = eig.eigenvectors.column(idx[0]).into_owned();
    let e1 = eig.eigenvectors.column(idx[2]).into_owned();
    if eig.eigenvalues[idx[1]] < 1e-12 * eig.eigenvalues[idx[2]].max(1e-300) {
        return Err(CalibError::Degenerate(
            "points are collinear; plane basis undefined".into(),
        ));
    }
    let e2 = normal.cross(&e1);
    let m = Matrix3::from_rows(&[e1.transpose(), e2.transpose(), normal.transpose()]);
    Ok((c, m))
}

fn rms_of(r: &Matrix3<f64>, t: &Vector3<f64>, corners: &CornerSet, cam: &CameraModel) -> f64 {
    let mut probe = cam.clone();
    probe.set_extrinsics(r, t);
    reprojection_rms(corners, &probe)
}

/// Gauss–Newton refinement of (R, t) minimizing squared reprojection error.
/// Backtracks on the step, so the returned RMS never exceeds the initial one.
fn refine(
    corners: &CornerSet,
    cam: &CameraModel,
    mut r: Matrix3<f64>,
    mut t: Vector3<f64>,
) -> (Matrix3<f64>, Vector3<f64>, f64) {
    let n = corners.len();
    let mut best_rms = rms_of(&r, &t, corners, cam);
    for _ in 0..60 {
        let mut jac = DMatrix::<f64>::zeros(2 * n, 6);
        let mut res = DVector::<f64>::zeros(2 * n);
        let mut ok = true;
        for (k, (p, uv)) in corners
            .points3d
            .iter()
            .zip(corners.points2d.iter())
            .enumerate()
        {
            let rp = r * Vector3::from_column_slice(p);
            let pc = rp + t;
            if pc.z <= 0.0 {
                ok = false;
                break;
            }
            let (x, y, z) = (pc.x, pc.y, pc.z);
            let inv_z = 1.0 / z;
            let u_hat = cam.fx * x * inv_z + cam.cx;
            let v_hat = cam.fy * y * inv_z + cam.cy;
            res[2 * k] = uv[0] - u_hat;
            res[2 * k + 1] = uv[1] - v_hat;
            // d(uv)/d(pc)
            let du = Vector3::new(cam.fx * inv_z, 0.0, -cam.fx * x * inv_z * inv_z);
            let dv = Vector3::new(0.0, cam.fy * inv_z, -cam.fy * y * inv_z * inv_z);
            // pc = exp(w)·R·p + t + dt  =>  dpc/dw = -skew(R p), dpc/dt = I
            let dpc_dw = -skew(&rp);
            for j in 0..3 {
                let col = Vector3::new(dpc_dw[(0, j)], dpc_dw[(1, j)], dpc_dw[(2, j)]);
                jac[(2 * k, j)] = du.dot(&col);
                jac[(2 * k + 1, j)] = dv.dot(&col);
                jac[(2 * k, 3 + j)] = du[j];
                jac[(2 * k + 1, 3 + j)] = dv[j];
            }
        }
        if !ok {
            break;
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        let Some(step) = jtj.lu().solve(&jtr) else { break };
        // Backtracking line search keeps the RMS monotone.
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..24 {
            let dw = Vector3::new(step[0], step[1], step[2]) * scale;
            let dt = Vector3::new(step[3], step[4], step[5]) * scale;
            let r_new = exp_so3(&dw) * r;
            let t_new = t + dt;
            let rms_new = rms_of(&r_new, &t_new, corners, cam);
            if rms_new < best_rms {
                r = r_new;
                t = t_new;
                best_rms = rms_new;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved || step.norm() * scale < 1e-14 {
            break;
        }
    }
    (r, t, best_rms)
}

/// Recover world-to-camera extrinsics from ≥ 4 coplanar correspondences.
///
/// Returns `(R, t)` with `x_cam = R·p_world + t`, R orthonormalized, chosen
/// from the two homography sign decompositions by lower reprojection RMS and
/// refined by Gauss–Newton.
pub fn solve_pnp(
    corners: &CornerSet,
    intrinsics: &CameraModel,
) -> Result<(Matrix3<f64>, Vector3<f64>), CalibError> {
    if corners.points3d.len() != corners.points2d.len() {
        return Err(CalibError::LengthMismatch {
            p3: corners.points3d.len(),
            p2: corners.points2d.len(),
        });
    }
    if corners.len() < 4 {
        return Err(CalibError::NotEnoughPoints {
            need: 4,
            got: corners.len(),
        });
    }

    let (centroid, m) = plane_basis(&corners.points3d)?;
    let plane_pts: Vec<[f64; 2]> = corners
        .points3d
        .iter()
        .map(|p| {
            let q = m * (Vector3::from_column_slice(p) - centroid);
            [q.x, q.y]
        })
        .collect();

    let h = estimate_homography(&plane_pts, &corners.points2d)?;
    let k_inv = Matrix3::new(
        1.0 / intrinsics.fx,
        0.0,
        -intrinsics.cx / intrinsics.fx,
        0.0,
        1.0 / intrinsics.fy,
        -intrinsics.cy / intrinsics.fy,
        0.0,
        0.0,
        1.0,
    );
    let g = k_inv * h;
    let h1 = g.column(0).into_owned();
    let h2 = g.column(1).into_owned();
    let h3 = g.column(2).into_owned();
    let scale = 2.0 / (h1.norm() + h2.norm());
    if !scale.is_finite() || scale <= 0.0 {
        return Err(CalibError::Degenerate("zero homography columns".into()));
    }

    let mut best: Option<(Matrix3<f64>, Vector3<f64>, f64)> = None;
    for sign in [1.0f64, -1.0] {
        let r1 = h1 * scale * sign;
        let r2 = h2 * scale * sign;
        let r3 = r1.cross(&r2);
        let r_plane = match orthonormalize(&Matrix3::from_columns(&[r1, r2, r3])) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let t_plane = h3 * scale * sign;
        // Compose plane frame with world frame: x_cam = R_p·M·(p - c) + t_p.
        let r_world = r_plane * m;
        let t_world = t_plane - r_world * centroid;
        let (r_ref, t_ref, rms) = refine(corners, intrinsics, r_world, t_world);
        match &best {
            Some((_, _, best_rms)) if *best_rms <= rms => {}
            _ => best = Some((r_ref, t_ref, rms)),
        }
    }

    let (r, t, rms) = best.ok_or_else(|| CalibError::Degenerate("no valid pose".into()))?;
    if !rms.is_finite() {
        return Err(CalibError::Degenerate(
            "all candidate poses place points behind the camera".into(),
        ));
    }
    Ok((orthonormalize(&r)?, t))
}
