//! Sim-channel renderer: flat-color projected footprints with supersampled
//! coverage, a two-finger gripper glyph whose gap shows the open state, and
//! a ground ring whose radius encodes lift height.

use super::{Shape, SimError, WorldState};
use crate::calib::{project_point, CameraModel};
use crate::frame::Frame;
use serde::{Deserialize, Serialize};

/// Raster settings shared by both channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub width: usize,
    pub height: usize,
    pub supersample: usize,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            width: 64,
            height: 64,
            supersample: 2,
        }
    }
}

/// Material colors and the affine transform applied to object albedos.
/// The sim palette is the identity on object colors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Palette {
    pub void: [f32; 3],
    pub table: [f32; 3],
    pub gripper: [f32; 3],
    pub ring: [f32; 3],
    pub fixture: [f32; 3],
    pub object_gain: [f32; 3],
    pub object_bias: [f32; 3],
}

pub const SIM_TABLE: [f32; 3] = [0.82, 0.82, 0.86];
pub const SIM_TABLE_COLORED: [f32; 3] = [0.76, 0.62, 0.42];
pub const SIM_GRIPPER: [f32; 3] = [0.92, 0.92, 0.92];

impl Palette {
    /// Classical-simulator appearance: bright table, white-gray gripper.
    pub fn sim(colored_background: bool) -> Palette {
        Palette {
            void: [0.06, 0.06, 0.08],
            table: if colored_background {
                SIM_TABLE_COLORED
            } else {
                SIM_TABLE
            },
            gripper: SIM_GRIPPER,
            ring: [0.90, 0.55, 0.15],
            fixture: SIM_GRIPPER,
            object_gain: [1.0, 1.0, 1.0],
            object_bias: [0.0, 0.0, 0.0],
        }
    }

    fn object_color(&self, albedo: [f32; 3]) -> [f32; 3] {
        [
            albedo[0] * self.object_gain[0] + self.object_bias[0],
            albedo[1] * self.object_gain[1] + self.object_bias[1],
            albedo[2] * self.object_gain[2] + self.object_bias[2],
        ]
    }
}

enum Element {
    Poly {
        pts: Vec<[f64; 2]>,
        bbox: [f64; 4],
        color: [f32; 3],
    },
    Ring {
        outer: Vec<[f64; 2]>,
        inner: Vec<[f64; 2]>,
        bbox: [f64; 4],
        color: [f32; 3],
    },
}

fn bbox_of(pts: &[[f64; 2]]) -> [f64; 4] {
    let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for p in pts {
        bb[0] = bb[0].min(p[0]);
        bb[1] = bb[1].max(p[0]);
        bb[2] = bb[2].min(p[1]);
        bb[3] = bb[3].max(p[1]);
    }
    bb
}

fn point_in_poly(pts: &[[f64; 2]], x: f64, y: f64) -> bool {
    // Winding-free even-odd test; convex or not, orientation-independent.
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (pts[i][0], pts[i][1]);
        let (xj, yj) = (pts[j][0], pts[j][1]);
        if ((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi) {
            inside = true;
        }
        j = i;
    }
    inside
}

fn project_loop(
    world_pts: &[(f32, f32, f32)],
    camera: &CameraModel,
) -> Option<Vec<[f64; 2]>> {
    let mut out = Vec::with_capacity(world_pts.len());
    for p in world_pts {
        match project_point([f64::from(p.0), f64::from(p.1), f64::from(p.2)], camera) {
            Ok(uv) => out.push(uv),
            Err(_) => return None,
        }
    }
    Some(out)
}

fn circle_points(cx: f32, cy: f32, z: f32, r: f32, segments: usize) -> Vec<(f32, f32, f32)> {
    (0..segments)
        .map(|k| {
            let a = (k as f32) / (segments as f32) * std::f32::consts::TAU;
            (cx + r * a.cos(), cy + r * a.sin(), z)
        })
        .collect()
}

fn push_poly(
    elements: &mut Vec<Element>,
    camera: &CameraModel,
    world_pts: &[(f32, f32, f32)],
    color: [f32; 3],
) {
    if let Some(pts) = project_loop(world_pts, camera) {
        let bbox = bbox_of(&pts);
        elements.push(Element::Poly { pts, bbox, color });
    }
}

/// Compose the paint-ordered element list for a state.
fn build_elements(state: &WorldState, camera: &CameraModel, palette: &Palette) -> Vec<Element> {
    let mut els = Vec::new();

    // Ground ring encoding gripper lift height.
    let g = state.gripper_pose;
    let ring_outer = 0.018 + 0.25 * g.2;
    let ring_inner = (ring_outer - 0.010).max(0.004);
    let outer = project_loop(&circle_points(g.0, g.1, 0.0, ring_outer, 20), camera);
    let inner = project_loop(&circle_points(g.0, g.1, 0.0, ring_inner, 20), camera);
    if let (Some(outer), Some(inner)) = (outer, inner) {
        let bbox = bbox_of(&outer);
        els.push(Element::Ring {
            outer,
            inner,
            bbox,
            color: palette.ring,
        });
    }

    // Flat scenery first, then objects bottom-up so stacks read correctly.
    let mut order: Vec<usize> = (0..state.objects.len()).collect();
    order.sort_by(|&a, &b| {
        let oa = &state.objects[a];
        let ob = &state.objects[b];
        let pa = matches!(oa.shape, Shape::Pad);
        let pb = matches!(ob.shape, Shape::Pad);
        pb.cmp(&pa)
            .then(oa.top().partial_cmp(&ob.top()).unwrap())
            .then(oa.id.cmp(&ob.id))
    });
    for idx in order {
        let obj = &state.objects[idx];
        let color = palette.object_color(obj.color);
        let z_top = obj.top();
        if obj.shape == Shape::Bottle {
            let pts = circle_points(obj.pose.0, obj.pose.1, z_top, obj.size.0 / 2.0, 16);
            push_poly(&mut els, camera, &pts, color);
        } else {
            let fp = obj.footprint();
            let pts: Vec<(f32, f32, f32)> =
                fp.iter().map(|(x, y)| (*x, *y, z_top)).collect();
            push_poly(&mut els, camera, &pts, color);
        }
    }

    // Receiver fixture: static two-finger glyph.
    if let Some(fix) = &state.fixture {
        let (fx, fy, fz) = fix.pos;
        for side in [-1.0f32, 1.0] {
            let cx = fx + side * 0.018;
            let pts = [
                (cx - 0.007, fy - 0.017, fz),
                (cx + 0.007, fy - 0.017, fz),
                (cx + 0.007, fy + 0.017, fz),
                (cx - 0.007, fy + 0.017, fz),
            ];
            push_poly(&mut els, camera, &pts, palette.fixture);
        }
    }

    // Gripper: palm dot plus two fingers; the gap shows open/closed.
    let gap = if state.gripper_open { 0.050 } else { 0.024 };
    let palm = [
        (g.0 - 0.008, g.1 - 0.008, g.2),
        (g.0 + 0.008, g.1 - 0.008, g.2),
        (g.0 + 0.008, g.1 + 0.008, g.2),
        (g.0 - 0.008, g.1 + 0.008, g.2),
    ];
    push_poly(&mut els, camera, &palm, palette.gripper);
    for side in [-1.0f32, 1.0] {
        let cx = g.0 + side * gap / 2.0;
        let pts = [
            (cx - 0.007, g.1 - 0.017, g.2),
            (cx + 0.007, g.1 - 0.017, g.2),
            (cx + 0.007, g.1 + 0.017, g.2),
            (cx - 0.007, g.1 + 0.017, g.2),
        ];
        push_poly(&mut els, camera, &pts, palette.gripper);
    }

    els
}

/// Per-subsample flat shading: table quad then paint-ordered elements.
pub(crate) fn shade_subsample(
    elements: &[Element],
    table_poly: &Option<Vec<[f64; 2]>>,
    palette: &Palette,
    x: f64,
    y: f64,
) -> [f32; 3] {
    let mut color = palette.void;
    if let Some(tp) = table_poly {
        if point_in_poly(tp, x, y) {
            color = palette.table;
        }
    }
    for el in elements {
        match el {
            Element::Poly { pts, bbox, color: c } => {
                if x >= bbox[0] && x <= bbox[1] && y >= bbox[2] && y <= bbox[3]
                    && point_in_poly(pts, x, y)
                {
                    color = *c;
                }
            }
            Element::Ring {
                outer,
                inner,
                bbox,
                color: c,
            } => {
                if x >= bbox[0] && x <= bbox[1] && y >= bbox[2] && y <= bbox[3]
                    && point_in_poly(outer, x, y)
                    && !point_in_poly(inner, x, y)
                {
                    color = *c;
                }
            }
        }
    }
    color
}

pub(crate) struct Scene {
    elements: Vec<Element>,
    table_poly: Option<Vec<[f64; 2]>>,
}

pub(crate) fn build_scene(
    state: &WorldState,
    camera: &CameraModel,
    palette: &Palette,
    table_size: f32,
) -> Scene {
    let ts = table_size;
    let table_poly = project_loop(
        &[(0.0, 0.0, 0.0), (ts, 0.0, 0.0), (ts, ts, 0.0), (0.0, ts, 0.0)],
        camera,
    );
    Scene {
        elements: build_elements(state, camera, palette),
        table_poly,
    }
}

/// Render a state with an explicit palette; both channels share this
/// geometry path, so silhouettes agree exactly.
pub fn render_with_palette(
    state: &WorldState,
    camera: &CameraModel,
    palette: &Palette,
    table_size: f32,
    rp: &RenderParams,
) -> Result<Frame, SimError> {
    camera.validate()?;
    let scene = build_scene(state, camera, palette, table_size);
    let ss = rp.supersample.max(1);
    let sub = 1.0 / ss as f64;
    let inv_n = 1.0 / (ss * ss) as f32;
    let mut frame = Frame::new(rp.width, rp.height);
    for py in 0..rp.height {
        for px in 0..rp.width {
            let mut acc = [0.0f32; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let x = px as f64 + (sx as f64 + 0.5) * sub;
                    let y = py as f64 + (sy as f64 + 0.5) * sub;
                    let c = shade_subsample(&scene.elements, &scene.table_poly, palette, x, y);
                    acc[0] += c[0];
                    acc[1] += c[1];
                    acc[2] += c[2];
                }
            }
            frame.set_pixel(px, py, [
                quant(acc[0] * inv_n),
                quant(acc[1] * inv_n),
                quant(acc[2] * inv_n),
            ]);
        }
    }
    Ok(frame)
}

/// Supersampled shading buffer before quantization; the real channel
/// post-processes this.
pub(crate) fn shade_buffer(
    state: &WorldState,
    camera: &CameraModel,
    palette: &Palette,
    table_size: f32,
    rp: &RenderParams,
) -> Result<Vec<[f32; 3]>, SimError> {
    camera.validate()?;
    let scene = build_scene(state, camera, palette, table_size);
    let ss = rp.supersample.max(1);
    let sub = 1.0 / ss as f64;
    let inv_n = 1.0 / (ss * ss) as f32;
    let mut buf = vec![[0.0f32; 3]; rp.width * rp.height];
    for py in 0..rp.height {
        for px in 0..rp.width {
            let mut acc = [0.0f32; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let x = px as f64 + (sx as f64 + 0.5) * sub;
                    let y = py as f64 + (sy as f64 + 0.5) * sub;
                    let c = shade_subsample(&scene.elements, &scene.table_poly, palette, x, y);
                    acc[0] += c[0];
                    acc[1] += c[1];
                    acc[2] += c[2];
                }
            }
            buf[py * rp.width + px] = [acc[0] * inv_n, acc[1] * inv_n, acc[2] * inv_n];
        }
    }
    Ok(buf)
}

pub(crate) fn quant(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Classical-simulator channel with the default sim palette.
pub fn render_sim(
    state: &WorldState,
    camera: &CameraModel,
    colored_background: bool,
    table_size: f32,
    rp: &RenderParams,
) -> Result<Frame, SimError> {
    render_with_palette(state, camera, &Palette::sim(colored_background), table_size, rp)
}

/// Mean pixel position of pixels exactly matching a quantized color
/// (test oracle for projection agreement).
pub fn rendered_centroid(frame: &Frame, color: [f32; 3]) -> Option<(f64, f64)> {
    let target = [quant(color[0]), quant(color[1]), quant(color[2])];
    let mut n = 0.0;
    let mut acc = (0.0, 0.0);
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if frame.pixel(x, y) == target {
                // Pixel center in continuous image coordinates.
                acc.0 += x as f64 + 0.5;
                acc.1 += y as f64 + 0.5;
                n += 1.0;
            }
        }
    }
    (n > 0.0).then(|| (acc.0 / n, acc.1 / n))
}
