//! Real-to-sim alignment toolkit: pinhole projection, checkerboard
//! rendering/detection, planar PnP extrinsics recovery, reprojection
//! diagnostics, lattice pose snapping, and median albedo extraction.

mod alignment;
mod board;
mod homography;
mod pnp;

pub use alignment::{extract_albedo, snap_pose, LATTICE_SPACING_M, YAW_CATALOGUE_DEG};
pub use board::{board_view, detect_corners, render_board, BoardView};
pub use homography::estimate_homography;
pub use pnp::{reprojection_rms, solve_pnp};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("camera invalid: {0}")]
    InvalidCamera(String),
    #[error("point has nonpositive depth z={0}")]
    NonPositiveDepth(f64),
    #[error("need at least {need} correspondences, got {got}")]
    NotEnoughPoints { need: usize, got: usize },
    #[error("corner set lengths differ: {p3} world vs {p2} pixel")]
    LengthMismatch { p3: usize, p2: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("corner detection: expected {expected} corners, found {found}")]
    CornerCount { expected: usize, found: usize },
    #[error("corner detection: {0}")]
    Detection(String),
    #[error("checkerboard invalid: {0}")]
    InvalidBoard(String),
    #[error("empty patch")]
    EmptyPatch,
}

/// Pinhole camera: intrinsics in pixels plus world-to-camera extrinsics
/// (`x_cam = R * p_world + t`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major rotation, world to camera.
    pub r: [[f64; 3]; 3],
    /// Translation, world to camera, meters.
    pub t: [f64; 3],
}

impl CameraModel {
    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_row_slice(&[
            self.r[0][0], self.r[0][1], self.r[0][2],
            self.r[1][0], self.r[1][1], self.r[1][2],
            self.r[2][0], self.r[2][1], self.r[2][2],
        ])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.t[0], self.t[1], self.t[2])
    }

    pub fn set_extrinsics(&mut self, r: &Matrix3<f64>, t: &Vector3<f64>) {
        for i in 0..3 {
            for j in 0..3 {
                self.r[i][j] = r[(i, j)];
            }
            self.t[i] = t[i];
        }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation().transpose() * self.translation())
    }

    /// Validate focal lengths and rotation orthonormality (RᵀR = I and
    /// det R = 1, both within 1e-9).
    pub fn validate(&self) -> Result<(), CalibError> {
        if !(self.fx > 0.0) || !(self.fy > 0.0) {
            return Err(CalibError::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(CalibError::InvalidCamera("zero resolution".into()));
        }
        let r = self.rotation();
        let gram = r.transpose() * r;
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - target).abs());
            }
        }
        if dev > 1e-9 {
            return Err(CalibError::InvalidCamera(format!(
                "rotation not orthonormal (max deviation {dev:.3e})"
            )));
        }
        if (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(CalibError::InvalidCamera(format!(
                "rotation determinant {} != 1",
                r.determinant()
            )));
        }
        Ok(())
    }

    /// Build a camera at `eye` looking at `target` (world up = +z).
    pub fn look_at(
        fx: f64,
        fy: f64,
        width: usize,
        height: usize,
        eye: [f64; 3],
        target: [f64; 3],
    ) -> Result<CameraModel, CalibError> {
        let eye_v = Vector3::from_column_slice(&eye);
        let fwd = (Vector3::from_column_slice(&target) - eye_v)
            .try_normalize(1e-12)
            .ok_or_else(|| CalibError::InvalidCamera("eye equals target".into()))?;
        // Camera +x to the world +y side when looking down, so the table
        // appears upright; fall back to world +x if forward is near +y.
        let hint = if fwd.cross(&Vector3::y()).norm() > 1e-6 {
            Vector3::y()
        } else {
            Vector3::x()
        };
        let right = hint
            .cross(&fwd)
            .try_normalize(1e-12)
            .ok_or_else(|| CalibError::InvalidCamera("degenerate orientation".into()))?;
        let down = fwd.cross(&right);
        let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), fwd.transpose()]);
        let t = -r * eye_v;
        let mut cam = CameraModel {
            fx,
            fy,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            r: [[0.0; 3]; 3],
            t: [0.0; 3],
            width,
            height,
        };
        cam.set_extrinsics(&r, &t);
        cam.validate()?;
        Ok(cam)
    }

    /// Same pose with intrinsics and resolution scaled by `k`.
    pub fn scaled(&self, k: f64) -> CameraModel {
        CameraModel {
            fx: self.fx * k,
            fy: self.fy * k,
            cx: self.cx * k,
            cy: self.cy * k,
            width: (self.width as f64 * k).round() as usize,
            height: (self.height as f64 * k).round() as usize,
            r: self.r,
            t: self.t,
        }
    }
}

/// Project world points through the pinhole model:
/// `u = fx·X/Z + cx, v = fy·Y/Z + cy` with `(X,Y,Z) = R·p + t`.
///
/// Errors on any point with nonpositive depth.
pub fn project(points3d: &[[f64; 3]], camera: &CameraModel) -> Result<Vec<[f64; 2]>, CalibError> {
    camera.validate()?;
    let r = camera.rotation();
    let t = camera.translation();
    points3d
        .iter()
        .map(|p| {
            let pc = r * Vector3::from_column_slice(p) + t;
            if pc.z <= 0.0 {
                return Err(CalibError::NonPositiveDepth(pc.z));
            }
            Ok([
                camera.fx * pc.x / pc.z + camera.cx,
                camera.fy * pc.y / pc.z + camera.cy,
            ])
        })
        .collect()
}

/// Project a single world point.
pub fn project_point(p: [f64; 3], camera: &CameraModel) -> Result<[f64; 2], CalibError> {
    let r = camera.rotation();
    let t = camera.translation();
    let pc = r * Vector3::from_column_slice(&p) + t;
    if pc.z <= 0.0 {
        return Err(CalibError::NonPositiveDepth(pc.z));
    }
    Ok([
        camera.fx * pc.x / pc.z + camera.cx,
        camera.fy * pc.y / pc.z + camera.cy,
    ])
}

/// Planar calibration target: a checkerboard with `inner_rows x inner_cols`
/// inner corners posed in the world frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkerboard {
    pub inner_rows: usize,
    pub inner_cols: usize,
    /// Square edge length, meters.
    pub square_size: f64,
    /// Board origin (outer corner of the first square) in world coordinates.
    pub origin: [f64; 3],
    /// Unit vector along board columns (u axis), world frame.
    pub u_axis: [f64; 3],
    /// Unit vector along board rows (v axis), world frame.
    pub v_axis: [f64; 3],
}

impl Checkerboard {
    /// A board lying flat on the table plane (z = 0) with axes aligned to x/y.
    pub fn flat_on_table(inner_rows: usize, inner_cols: usize, square: f64, origin_xy: [f64; 2]) -> Self {
        Checkerboard {
            inner_rows,
            inner_cols,
            square_size: square,
            origin: [origin_xy[0], origin_xy[1], 0.0],
            u_axis: [1.0, 0.0, 0.0],
            v_axis: [0.0, 1.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<(), CalibError> {
        if self.inner_rows < 3 || self.inner_cols < 3 {
            return Err(CalibError::InvalidBoard(format!(
                "need at least 3x3 inner corners, got {}x{}",
                self.inner_rows, self.inner_cols
            )));
        }
        if !(self.square_size > 0.0) {
            return Err(CalibError::InvalidBoard("square size must be positive".into()));
        }
        Ok(())
    }

    /// World coordinates of a point at board-plane coordinates (u, v)
    /// measured in squares from the first inner corner.
    pub fn board_to_world(&self, u: f64, v: f64) -> [f64; 3] {
        let s = self.square_size;
        [
            self.origin[0] + (u + 1.0) * s * self.u_axis[0] + (v + 1.0) * s * self.v_axis[0],
            self.origin[1] + (u + 1.0) * s * self.u_axis[1] + (v + 1.0) * s * self.v_axis[1],
            self.origin[2] + (u + 1.0) * s * self.u_axis[2] + (v + 1.0) * s * self.v_axis[2],
        ]
    }

    /// Inner corner world coordinates in canonical row-major order.
    pub fn inner_corners_world(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.inner_rows * self.inner_cols);
        for r in 0..self.inner_rows {
            for c in 0..self.inner_cols {
                out.push(self.board_to_world(c as f64, r as f64));
            }
        }
        out
    }
}

/// Matched 3D-2D correspondences in canonical row-major board order.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSet {
    pub points3d: Vec<[f64; 3]>,
    pub points2d: Vec<[f64; 2]>,
}

impl CornerSet {
    pub fn new(points3d: Vec<[f64; 3]>, points2d: Vec<[f64; 2]>) -> Result<Self, CalibError> {
        if points3d.len() != points2d.len() {
            return Err(CalibError::LengthMismatch {
                p3: points3d.len(),
                p2: points2d.len(),
            });
        }
        if points3d.len() < 4 {
            return Err(CalibError::NotEnoughPoints {
                need: 4,
                got: points3d.len(),
            });
        }
        Ok(CornerSet { points3d, points2d })
    }

    pub fn len(&self) -> usize {
        self.points3d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points3d.is_empty()
    }
}
