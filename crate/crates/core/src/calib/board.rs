//! Synthetic checkerboard rendering and corner detection with sub-pixel
//! refinement.
//!
//! The board carries an orientation marker (a disc in the outer corner
//! square nearest the board origin) so detection can return corners in
//! canonical row-major order matching the board frame, not just up to a
//! 180° flip.

use super::homography::{apply_homography, estimate_homography};
use super::{CalibError, CameraModel, Checkerboard, CornerSet};
use crate::frame::Frame;
use nalgebra::{Matrix3, Vector3};

const DARK: f64 = 0.08;
const LIGHT: f64 = 0.95;
const BACKGROUND: f64 = 0.55;
/// Quiet-zone width around the checker pattern, in squares.
const MARGIN_SQUARES: f64 = 1.0;
const MARKER_RADIUS_SQUARES: f64 = 0.30;

/// A rendered calibration view plus its ground-truth corner projections.
#[derive(Debug, Clone)]
pub struct BoardView {
    pub image: Frame,
    pub true_corners: Vec<[f64; 2]>,
}

/// Render the checkerboard seen through `camera` by ray-plane intersection,
/// supersampled `ss`x`ss` per pixel. Deterministic.
pub fn render_board(
    board: &Checkerboard,
    camera: &CameraModel,
    ss: usize,
) -> Result<Frame, CalibError> {
    board.validate()?;
    camera.validate()?;
    let ss = ss.max(1);
    let r_t = camera.rotation().transpose();
    let center = camera.center();

    let u_axis = Vector3::from_column_slice(&board.u_axis);
    let v_axis = Vector3::from_column_slice(&board.v_axis);
    let normal = u_axis.cross(&v_axis);
    let origin = Vector3::from_column_slice(&board.origin);
    let cols_total = board.inner_cols as f64 + 1.0;
    let rows_total = board.inner_rows as f64 + 1.0;

    let mut frame = Frame::new(camera.width, camera.height);
    let inv_fx = 1.0 / camera.fx;
    let inv_fy = 1.0 / camera.fy;
    let sub = 1.0 / ss as f64;

    for py in 0..camera.height {
        for px in 0..camera.width {
            let mut acc = 0.0;
            for sy in 0..ss {
                for sx in 0..ss {
                    let u = px as f64 + (sx as f64 + 0.5) * sub;
                    let v = py as f64 + (sy as f64 + 0.5) * sub;
                    let dir_cam =
                        Vector3::new((u - camera.cx) * inv_fx, (v - camera.cy) * inv_fy, 1.0);
                    let dir = r_t * dir_cam;
                    let denom = dir.dot(&normal);
                    if denom.abs() < 1e-12 {
                        acc += BACKGROUND;
                        continue;
                    }
                    let t_hit = (origin - center).dot(&normal) / denom;
                    if t_hit <= 0.0 {
                        acc += BACKGROUND;
                        continue;
                    }
                    let hit = center + dir * t_hit;
                    let rel = hit - origin;
                    let s = rel.dot(&u_axis) / board.square_size;
                    let r = rel.dot(&v_axis) / board.square_size;
                    acc += shade_board_point(s, r, cols_total, rows_total);
                }
            }
            let g = (acc / (ss * ss) as f64).clamp(0.0, 1.0);
            let q = (g * 255.0).round() as u8;
            frame.set_pixel(px, py, [q, q, q]);
        }
    }
    Ok(frame)
}

/// Board-plane shading at square coordinates (s across columns, r down rows).
fn shade_board_point(s: f64, r: f64, cols_total: f64, rows_total: f64) -> f64 {
    let m = MARGIN_SQUARES;
    if s < -m || s > cols_total + m || r < -m || r > rows_total + m {
        return BACKGROUND;
    }
    if s < 0.0 || s > cols_total || r < 0.0 || r > rows_total {
        return LIGHT; // quiet zone
    }
    // Orientation marker in the first square.
    let ds = s - 0.5;
    let dr = r - 0.5;
    if ds * ds + dr * dr < MARKER_RADIUS_SQUARES * MARKER_RADIUS_SQUARES {
        return LIGHT;
    }
    let parity = (s.floor() as i64 + r.floor() as i64).rem_euclid(2);
    if parity == 0 {
        DARK
    } else {
        LIGHT
    }
}

/// Render a view plus the inner corners projected through the camera, as
/// ground truth for detector tests.
pub fn board_view(
    board: &Checkerboard,
    camera: &CameraModel,
    ss: usize,
) -> Result<BoardView, CalibError> {
    let image = render_board(board, camera, ss)?;
    let true_corners = super::project(&board.inner_corners_world(), camera)?;
    Ok(BoardView { image, true_corners })
}

fn luminance(frame: &Frame) -> Vec<f64> {
    frame
        .raw()
        .chunks_exact(3)
        .map(|p| {
            (0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])) / 255.0
        })
        .collect()
}

/// Saddle-point response: product of opposite-sign diagonal deviations,
/// evaluated for both the diagonal and axis-aligned sample patterns so
/// rotated boards still respond.
fn corner_response(g: &[f64], w: usize, h: usize, d: usize) -> Vec<f64> {
    let mut resp = vec![0.0; w * h];
    let di = d as isize;
    for y in d..h - d {
        for x in d..w - d {
            let at = |dx: isize, dy: isize| {
                g[(y as isize + dy) as usize * w + (x as isize + dx) as usize]
            };
            let score = |p1: f64, p2: f64, q1: f64, q2: f64| {
                let m = (p1 + p2 + q1 + q2) / 4.0;
                let a = (p1 + p2) / 2.0 - m;
                let b = (q1 + q2) / 2.0 - m;
                (-a * b).max(0.0)
            };
            let s_diag = score(at(-di, -di), at(di, di), at(-di, di), at(di, -di));
            let s_axis = score(at(-di, 0), at(di, 0), at(0, -di), at(0, di));
            resp[y * w + x] = s_diag.max(s_axis);
        }
    }
    resp
}

/// 3x3 local maxima above `threshold`, strongest first, greedily thinned to
/// a minimum separation.
fn find_peaks(resp: &[f64], w: usize, h: usize, threshold: f64, min_sep: f64) -> Vec<[f64; 2]> {
    let mut peaks: Vec<(f64, usize, usize)> = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let v = resp[y * w + x];
            if v < threshold {
                continue;
            }
            let mut is_max = true;
            'nb: for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nv = resp[(y as i32 + dy) as usize * w + (x as i32 + dx) as usize];
                    if nv > v || (nv == v && (dy < 0 || (dy == 0 && dx < 0))) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                peaks.push((v, x, y));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let min_sep2 = min_sep * min_sep;
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for (_, x, y) in peaks {
        let p = [x as f64, y as f64];
        if kept
            .iter()
            .all(|q| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) >= min_sep2)
        {
            kept.push(p);
        }
    }
    kept
}

/// Largest-area quadrilateral over the convex hull of the candidates.
fn extreme_quad(points: &[[f64; 2]]) -> Option<[[f64; 2]; 4]> {
    let hull = convex_hull(points);
    if hull.len() < 4 {
        return None;
    }
    let n = hull.len();
    let mut best = (0.0, [0usize; 4]);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let area = quad_area(&hull[a], &hull[b], &hull[c], &hull[d]);
                    if area > best.0 {
                        best = (area, [a, b, c, d]);
                    }
                }
            }
        }
    }
    Some([
        hull[best.1[0]],
        hull[best.1[1]],
        hull[best.1[2]],
        hull[best.1[3]],
    ])
}

fn cross(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew monotone chain.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup();
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(n);
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(n);
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn quad_area(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2], d: &[f64; 2]) -> f64 {
    let tri = |p: &[f64; 2], q: &[f64; 2], r: &[f64; 2]| {
        ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])).abs() / 2.0
    };
    tri(a, b, c) + tri(a, c, d)
}

/// One association pass: nearest unused candidate per predicted node within
/// a per-node radius (a fraction of the local grid spacing, which varies
/// under perspective). Returns per-node matches and the total squared
/// distance over matched nodes.
fn associate(
    cands: &[[f64; 2]],
    h: &Matrix3<f64>,
    cols: usize,
    rows: usize,
    radius_frac: f64,
) -> (Vec<Option<usize>>, f64) {
    let pred: Vec<[f64; 2]> = (0..rows * cols)
        .map(|k| apply_homography(h, [(k % cols) as f64, (k / cols) as f64]))
        .collect();
    let local_r2 = |k: usize| {
        let (c, r) = (k % cols, k / cols);
        let p = pred[k];
        let mut spacing = f64::INFINITY;
        if c + 1 < cols {
            let q = pred[k + 1];
            spacing = spacing.min((q[0] - p[0]).hypot(q[1] - p[1]));
        }
        if c > 0 {
            let q = pred[k - 1];
            spacing = spacing.min((q[0] - p[0]).hypot(q[1] - p[1]));
        }
        if r + 1 < rows {
            let q = pred[k + cols];
            spacing = spacing.min((q[0] - p[0]).hypot(q[1] - p[1]));
        }
        if r > 0 {
            let q = pred[k - cols];
            spacing = spacing.min((q[0] - p[0]).hypot(q[1] - p[1]));
        }
        (radius_frac * spacing).powi(2)
    };

    let mut used = vec![false; cands.len()];
    let mut matches: Vec<Option<usize>> = vec![None; rows * cols];
    let mut total = 0.0;
    for k in 0..rows * cols {
        let p = pred[k];
        let r2 = local_r2(k);
        let mut best: Option<(f64, usize)> = None;
        for (i, cand) in cands.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d2 = (cand[0] - p[0]).powi(2) + (cand[1] - p[1]).powi(2);
            if d2 < r2 && best.map_or(true, |(bd, _)| d2 < bd) {
                best = Some((d2, i));
            }
        }
        if let Some((d2, i)) = best {
            used[i] = true;
            matches[k] = Some(i);
            total += d2;
        }
    }
    (matches, total)
}

/// Associate candidates to lattice nodes given a corner-to-corner
/// assignment; returns (total squared distance, matched pixel per node).
///
/// A first tolerant pass from the 4-corner homography seeds a refit on all
/// matched nodes, which absorbs the perspective the corner-only fit misses;
/// the strict second pass must then match every node.
fn match_grid(
    cands: &[[f64; 2]],
    quad: &[[f64; 2]; 4],
    cols: usize,
    rows: usize,
) -> Option<(f64, Vec<[f64; 2]>)> {
    let lattice_corners = [
        [0.0, 0.0],
        [cols as f64 - 1.0, 0.0],
        [cols as f64 - 1.0, rows as f64 - 1.0],
        [0.0, rows as f64 - 1.0],
    ];
    let h0 = estimate_homography(&lattice_corners, quad).ok()?;

    let (first, _) = associate(cands, &h0, cols, rows, 0.45);
    let matched_count = first.iter().flatten().count();
    if matched_count < (rows * cols) * 3 / 5 {
        return None;
    }
    let mut lat = Vec::with_capacity(matched_count);
    let mut img = Vec::with_capacity(matched_count);
    for (k, m) in first.iter().enumerate() {
        if let Some(i) = m {
            lat.push([(k % cols) as f64, (k / cols) as f64]);
            img.push(cands[*i]);
        }
    }
    let h1 = estimate_homography(&lat, &img).ok()?;

    let (second, total) = associate(cands, &h1, cols, rows, 0.35);
    let mut matched = Vec::with_capacity(rows * cols);
    for m in second {
        matched.push(cands[m?]);
    }
    Some((total, matched))
}

/// Response-weighted centroid over a 5x5 window around an integer peak.
fn response_centroid(resp: &[f64], w: usize, h: usize, p: [f64; 2]) -> [f64; 2] {
    let cx = p[0] as i64;
    let cy = p[1] as i64;
    let mut acc = [0.0, 0.0];
    let mut total = 0.0;
    for dy in -2i64..=2 {
        for dx in -2i64..=2 {
            let x = cx + dx;
            let y = cy + dy;
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                continue;
            }
            let v = resp[y as usize * w + x as usize];
            acc[0] += v * x as f64;
            acc[1] += v * y as f64;
            total += v;
        }
    }
    if total > 0.0 {
        [acc[0] / total, acc[1] / total]
    } else {
        p
    }
}

/// Separable Gaussian smoothing (sigma 1, radius 2). The hard checker edges
/// become a smooth saddle a local quadratic can fit.
fn smooth(g: &[f64], w: usize, h: usize) -> Vec<f64> {
    let k = [0.0545, 0.2442, 0.4026, 0.2442, 0.0545];
    let mut tmp = vec![0.0; w * h];
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let xi = (x as i64 + i as i64 - 2).clamp(0, w as i64 - 1) as usize;
                acc += kv * g[y * w + xi];
            }
            tmp[y * w + x] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let yi = (y as i64 + i as i64 - 2).clamp(0, h as i64 - 1) as usize;
                acc += kv * tmp[yi * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Fit a local quadratic to the smoothed patch and return its stationary
/// (saddle) point for sub-pixel corner refinement. Runs a second pass
/// centered on the first estimate to cancel off-center bias.
fn refine_subpixel(g_smooth: &[f64], w: usize, h: usize, p: [f64; 2]) -> [f64; 2] {
    let mut center = p;
    for _ in 0..3 {
        let r = 3i64;
        let cx = center[0].round() as i64;
        let cy = center[1].round() as i64;
        if cx < r || cy < r || cx >= w as i64 - r || cy >= h as i64 - r {
            return center;
        }
        // Least squares for f = a + bx + cy + dx^2 + exy + fy^2 on the patch.
        let mut ata = [[0.0f64; 6]; 6];
        let mut atb = [0.0f64; 6];
        for dy in -r..=r {
            for dx in -r..=r {
                let x = dx as f64;
                let y = dy as f64;
                let row = [1.0, x, y, x * x, x * y, y * y];
                let val = g_smooth[(cy + dy) as usize * w + (cx + dx) as usize];
                for i in 0..6 {
                    for j in 0..6 {
                        ata[i][j] += row[i] * row[j];
                    }
                    atb[i] += row[i] * val;
                }
            }
        }
        let a_mat = nalgebra::SMatrix::<f64, 6, 6>::from_fn(|i, j| ata[i][j]);
        let b_vec = nalgebra::SVector::<f64, 6>::from_fn(|i, _| atb[i]);
        let Some(coef) = a_mat.lu().solve(&b_vec) else { return center };
        let (b, c, d, e, f) = (coef[1], coef[2], coef[3], coef[4], coef[5]);
        let det = 4.0 * d * f - e * e;
        if det.abs() < 1e-12 {
            return center;
        }
        let sx = (-2.0 * f * b + e * c) / det;
        let sy = (-2.0 * d * c + e * b) / det;
        if sx.abs() > 2.0 || sy.abs() > 2.0 {
            return center;
        }
        center = [cx as f64 + sx, cy as f64 + sy];
    }
    center
}

/// Mean luminance in a small disc around a lattice-space position mapped
/// through the grid homography. `step` is the sample pitch in lattice units.
fn sample_disc(
    g: &[f64],
    w: usize,
    h: usize,
    hmat: &Matrix3<f64>,
    lattice: [f64; 2],
    step: f64,
) -> f64 {
    let mut acc = 0.0;
    let mut n = 0.0;
    for dv in -2i32..=2 {
        for du in -2i32..=2 {
            let p = apply_homography(
                hmat,
                [
                    lattice[0] + f64::from(du) * step,
                    lattice[1] + f64::from(dv) * step,
                ],
            );
            let x = p[0].round() as i64;
            let y = p[1].round() as i64;
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                acc += g[y as usize * w + x as usize];
                n += 1.0;
            }
        }
    }
    if n > 0.0 {
        acc / n
    } else {
        0.0
    }
}

/// Detect the inner corners of `board` in `image`, sub-pixel refined, in
/// canonical row-major order from the marker corner of the board.
pub fn detect_corners(image: &Frame, board: &Checkerboard) -> Result<CornerSet, CalibError> {
    board.validate()?;
    let (w, h) = (image.width(), image.height());
    let expected = board.inner_rows * board.inner_cols;
    let g = luminance(image);
    let resp = corner_response(&g, w, h, 2);
    let max_resp = resp.iter().cloned().fold(0.0f64, f64::max);
    if max_resp < 1e-4 {
        return Err(CalibError::CornerCount {
            expected,
            found: 0,
        });
    }
    // Sharp corners plateau the response; re-center each peak on the local
    // response centroid before any geometry runs on it.
    let cands: Vec<[f64; 2]> = find_peaks(&resp, w, h, 0.42 * max_resp, 4.0)
        .into_iter()
        .map(|p| response_centroid(&resp, w, h, p))
        .collect();
    if cands.len() != expected {
        return Err(CalibError::CornerCount {
            expected,
            found: cands.len(),
        });
    }

    let quad = extreme_quad(&cands)
        .ok_or_else(|| CalibError::Detection("candidate cloud has no quad hull".into()))?;

    // Try every rotation and reflection of the corner assignment; keep the
    // lattice association with the smallest total residual.
    let (cols, rows) = (board.inner_cols, board.inner_rows);
    let mut best: Option<(f64, Vec<[f64; 2]>, [[f64; 2]; 4])> = None;
    for refl in 0..2 {
        for rot in 0..4 {
            let mut q = quad;
            if refl == 1 {
                q.swap(1, 3);
            }
            q.rotate_left(rot);
            if let Some((score, matched)) = match_grid(&cands, &q, cols, rows) {
                if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
                    best = Some((score, matched, q));
                }
            }
        }
    }
    let (_, mut ordered, quad_used) = best.ok_or_else(|| {
        CalibError::Detection("could not associate candidates to the board lattice".into())
    })?;

    // Orientation: find which outer corner square holds the marker disc.
    let _ = quad_used;
    let all_lattice: Vec<[f64; 2]> = (0..rows * cols)
        .map(|k| [(k % cols) as f64, (k / cols) as f64])
        .collect();
    let hmat = estimate_homography(&all_lattice, &ordered)
        .map_err(|_| CalibError::Detection("grid homography failed".into()))?;
    let outer_centers = [
        [-0.5, -0.5],
        [cols as f64 - 0.5, -0.5],
        [cols as f64 - 0.5, rows as f64 - 0.5],
        [-0.5, rows as f64 - 0.5],
    ];
    // The marker square is the only corner square with internal contrast: a
    // bright disc at its center against dark square corners. Comparing the
    // square's center with its own corner regions is flip- and
    // lighting-independent.
    let mut marker_idx = 0;
    let mut marker_score = f64::NEG_INFINITY;
    for (i, oc) in outer_centers.iter().enumerate() {
        let center_lum = sample_disc(&g, w, h, &hmat, *oc, 0.06);
        let mut corner_lum = 0.0;
        for (du, dv) in [(-0.33, -0.33), (0.33, -0.33), (0.33, 0.33), (-0.33, 0.33)] {
            corner_lum += sample_disc(&g, w, h, &hmat, [oc[0] + du, oc[1] + dv], 0.03);
        }
        let score = center_lum - corner_lum / 4.0;
        if score > marker_score {
            marker_score = score;
            marker_idx = i;
        }
    }
    if marker_score < 0.2 {
        return Err(CalibError::Detection(
            "orientation marker not found near any board corner".into(),
        ));
    }
    // Rotate the row-major labeling so the marker corner becomes index (0,0).
    ordered = relabel_for_marker(&ordered, cols, rows, marker_idx);

    // Pixel index (i, j) has its center at continuous (i+0.5, j+0.5); the
    // returned coordinates use the continuous convention of `project`.
    let g_smooth = smooth(&g, w, h);
    let refined: Vec<[f64; 2]> = ordered
        .iter()
        .map(|p| {
            let q = refine_subpixel(&g_smooth, w, h, *p);
            [q[0] + 0.5, q[1] + 0.5]
        })
        .collect();
    CornerSet::new(board.inner_corners_world(), refined)
}

/// Re-index a row-major grid so that lattice corner `marker_idx`
/// (0: (0,0), 1: (C-1,0), 2: (C-1,R-1), 3: (0,R-1)) becomes the origin.
///
/// A rectangular grid's point set is symmetric under row/column flips (the
/// assignment search already rules out transposes), so finding the marker at
/// corner 1, 2, or 3 means the labeling is column-flipped, 180°-rotated, or
/// row-flipped respectively; undo that flip.
fn relabel_for_marker(
    grid: &[[f64; 2]],
    cols: usize,
    rows: usize,
    marker_idx: usize,
) -> Vec<[f64; 2]> {
    let get = |c: usize, r: usize| grid[r * cols + c];
    let mut out = Vec::with_capacity(grid.len());
    for r in 0..rows {
        for c in 0..cols {
            out.push(match marker_idx {
                0 => get(c, r),
                1 => get(cols - 1 - c, r),
                2 => get(cols - 1 - c, rows - 1 - r),
                _ => get(c, rows - 1 - r),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::{project, solve_pnp, reprojection_rms};

    fn calib_camera() -> CameraModel {
        CameraModel::look_at(560.0, 560.0, 480, 480, [0.31, 0.24, 0.80], [0.3, 0.3, 0.0]).unwrap()
    }

    fn board_9x6() -> Checkerboard {
        Checkerboard::flat_on_table(6, 9, 0.05, [0.04, 0.11])
    }

    #[test]
    fn detects_all_corners_within_half_pixel() {
        let board = board_9x6();
        let cam = calib_camera();
        let view = board_view(&board, &cam, 3).unwrap();
        let set = detect_corners(&view.image, &board).unwrap();
        assert_eq!(set.len(), 54);
        for (got, want) in set.points2d.iter().zip(view.true_corners.iter()) {
            let err = (got[0] - want[0]).hypot(got[1] - want[1]);
            assert!(err < 0.5, "corner error {err:.3} px at {want:?}");
        }
    }

    #[test]
    fn detection_is_deterministic() {
        let board = board_9x6();
        let cam = calib_camera();
        let img = render_board(&board, &cam, 3).unwrap();
        let a = detect_corners(&img, &board).unwrap();
        let b = detect_corners(&img, &board).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blank_image_is_a_detection_error() {
        let board = board_9x6();
        let mut img = Frame::new(480, 480);
        for y in 0..480 {
            for x in 0..480 {
                img.set_pixel(x, y, [128, 128, 128]);
            }
        }
        assert!(matches!(
            detect_corners(&img, &board),
            Err(CalibError::CornerCount { .. })
        ));
    }

    #[test]
    fn detection_survives_rotated_views() {
        let board = board_9x6();
        for (eye, seed) in [
            ([0.55, 0.13, 0.72], 0),
            ([0.10, 0.52, 0.65], 1),
            ([0.52, 0.50, 0.80], 2),
        ] {
            let cam = CameraModel::look_at(560.0, 560.0, 480, 480, eye, [0.3, 0.3, 0.0]).unwrap();
            let view = board_view(&board, &cam, 3).unwrap();
            let set = detect_corners(&view.image, &board)
                .unwrap_or_else(|e| panic!("view {seed}: {e}"));
            for (got, want) in set.points2d.iter().zip(view.true_corners.iter()) {
                let err = (got[0] - want[0]).hypot(got[1] - want[1]);
                assert!(err < 0.5, "view {seed}: corner error {err:.3} px");
            }
        }
    }

    #[test]
    fn detect_then_pnp_recovers_camera_pose() {
        let board = board_9x6();
        let cam = calib_camera();
        let img = render_board(&board, &cam, 3).unwrap();
        let set = detect_corners(&img, &board).unwrap();
        let (r, t) = solve_pnp(&set, &cam).unwrap();
        // Sub-pixel detection noise maps into a small tilt/depth wobble for
        // a single planar view; millidegree-scale error is expected.
        let rel = r.transpose() * cam.rotation();
        let ang = (((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0)).acos();
        assert!(ang < 1e-2, "rotation error {ang:.2e} rad");
        assert!((t - cam.translation()).norm() < 1e-2);
        let mut rec = cam.clone();
        rec.set_extrinsics(&r, &t);
        // Residual dominated by sub-pixel detection error.
        let rms = reprojection_rms(&set, &rec);
        assert!(rms < 0.5, "reprojection rms {rms:.3} px");
    }

    #[test]
    fn exact_projection_of_corners_matches_render_geometry() {
        // The renderer and the projector must agree on where corners land:
        // sample the rendered image at a projected corner and verify it sits
        // on a dark/light boundary (mid-gray under supersampling).
        let board = board_9x6();
        let cam = calib_camera();
        let img = render_board(&board, &cam, 4).unwrap();
        let uv = project(&board.inner_corners_world(), &cam).unwrap();
        let g = luminance(&img);
        for p in uv {
            // Average the 2x2 pixels surrounding the continuous coordinate;
            // a 4-square junction must mix dark and light.
            let x = (p[0] - 0.5).floor() as usize;
            let y = (p[1] - 0.5).floor() as usize;
            let v = (g[y * img.width() + x]
                + g[y * img.width() + x + 1]
                + g[(y + 1) * img.width() + x]
                + g[(y + 1) * img.width() + x + 1])
                / 4.0;
            assert!(
                (0.25..0.80).contains(&v),
                "corner neighborhood at {p:?} has pure color {v}"
            );
        }
    }
}
