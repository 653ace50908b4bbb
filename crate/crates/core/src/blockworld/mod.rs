//! Deterministic 2.5D tabletop simulator: grid-initialized objects, a
//! gripper with a radius-based grasp model, action primitives, scripted task
//! scheduling, exact replay, and a sim-style renderer.
//!
//! World coordinates: x/y on the table plane in meters, z up. All state
//! arithmetic is f32 so serialized trajectories round-trip bit-exactly.

mod primitives;
mod render;
mod success;
mod tasks;

pub use primitives::compile_primitive;
pub use render::{render_sim, render_with_palette, rendered_centroid, Palette};
pub use success::check_success;
pub use tasks::{init_world, plan_task, schedule_task, schedule_task_with_plan, task_objects};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("action component {value} exceeds max step {max}")]
    ActionBounds { value: f32, max: f32 },
    #[error("unknown object id '{0}'")]
    UnknownObject(String),
    #[error("primitive infeasible: {0}")]
    Infeasible(String),
    #[error("unknown task '{0}'")]
    UnknownTask(String),
    #[error("task generation failed for {task} seed {seed}: {detail}")]
    Generation {
        task: String,
        seed: u64,
        detail: String,
    },
    #[error(transparent)]
    Calib(#[from] crate::calib::CalibError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Block,
    Bottle,
    Card,
    Pad,
}

impl Shape {
    /// Pads are scenery, everything else can be grasped.
    pub fn graspable(self) -> bool {
        !matches!(self, Shape::Pad)
    }

    /// Vertical extent, meters.
    pub fn thickness(self) -> f32 {
        match self {
            Shape::Block => 0.030,
            Shape::Bottle => 0.110,
            Shape::Card => 0.003,
            Shape::Pad => 0.004,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: String,
    pub shape: Shape,
    /// RGB in [0, 1].
    pub color: [f32; 3],
    /// (x, y, z, yaw degrees); z is the base height.
    pub pose: (f32, f32, f32, f32),
    /// Footprint (width along local x, height along local y), meters.
    pub size: (f32, f32),
}

impl ObjectInstance {
    /// Grasp point: the object center at half thickness.
    pub fn grasp_point(&self) -> (f32, f32, f32) {
        (
            self.pose.0,
            self.pose.1,
            self.pose.2 + self.shape.thickness() / 2.0,
        )
    }

    /// Footprint corners in world xy, honoring yaw.
    pub fn footprint(&self) -> [(f32, f32); 4] {
        let (cx, cy) = (self.pose.0, self.pose.1);
        let yaw = self.pose.3.to_radians();
        let (s, c) = yaw.sin_cos();
        let (hw, hh) = (self.size.0 / 2.0, self.size.1 / 2.0);
        let rot = |x: f32, y: f32| (cx + c * x - s * y, cy + s * x + c * y);
        [rot(-hw, -hh), rot(hw, -hh), rot(hw, hh), rot(-hw, hh)]
    }

    /// Top surface height.
    pub fn top(&self) -> f32 {
        self.pose.2 + self.shape.thickness()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GripperCmd {
    Hold,
    Open,
    Close,
}

impl GripperCmd {
    pub fn as_str(self) -> &'static str {
        match self {
            GripperCmd::Hold => "hold",
            GripperCmd::Open => "open",
            GripperCmd::Close => "close",
        }
    }

    pub fn parse(s: &str) -> Option<GripperCmd> {
        match s {
            "hold" => Some(GripperCmd::Hold),
            "open" => Some(GripperCmd::Open),
            "close" => Some(GripperCmd::Close),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowLevelAction {
    pub dx: f32,
    pub dy: f32,
    pub dz: f32,
    pub gripper_cmd: GripperCmd,
}

impl LowLevelAction {
    pub fn hold() -> Self {
        LowLevelAction {
            dx: 0.0,
            dy: 0.0,
            dz: 0.0,
            gripper_cmd: GripperCmd::Hold,
        }
    }

    pub fn grip(cmd: GripperCmd) -> Self {
        LowLevelAction {
            dx: 0.0,
            dy: 0.0,
            dz: 0.0,
            gripper_cmd: cmd,
        }
    }

    pub fn movement(dx: f32, dy: f32, dz: f32) -> Self {
        LowLevelAction {
            dx,
            dy,
            dz,
            gripper_cmd: GripperCmd::Hold,
        }
    }
}

/// Fixed receiving gripper used by the handover task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverFixture {
    pub pos: (f32, f32, f32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub gripper_pose: (f32, f32, f32),
    pub gripper_open: bool,
    pub held_object: Option<String>,
    pub objects: Vec<ObjectInstance>,
    /// Present only for handover tasks.
    pub fixture: Option<ReceiverFixture>,
    pub step_index: u32,
}

impl WorldState {
    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    fn object_mut(&mut self, id: &str) -> Option<&mut ObjectInstance> {
        self.objects.iter_mut().find(|o| o.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    MoveTo { target: MoveTarget },
    Grasp { object: String },
    Release,
    Lift { height: f32 },
    Shake { cycles: u32, amplitude: f32 },
    Push { object: String, direction: (f32, f32), distance: f32 },
    Stack { on: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MoveTarget {
    Object(String),
    Point((f32, f32, f32)),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    ShakeBottle,
    MoveCardAway,
    StackBlocksTwo,
    PlacePad,
    Handover,
}

impl TaskName {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::ShakeBottle => "shake_bottle",
            TaskName::MoveCardAway => "move_card_away",
            TaskName::StackBlocksTwo => "stack_blocks_two",
            TaskName::PlacePad => "place_pad",
            TaskName::Handover => "handover",
        }
    }

    pub fn parse(s: &str) -> Option<TaskName> {
        match s {
            "shake_bottle" => Some(TaskName::ShakeBottle),
            "move_card_away" => Some(TaskName::MoveCardAway),
            "stack_blocks_two" => Some(TaskName::StackBlocksTwo),
            "place_pad" => Some(TaskName::PlacePad),
            "handover" => Some(TaskName::Handover),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRegion {
    InDomain,
    OodSpatial,
}

impl InitRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            InitRegion::InDomain => "in_domain",
            InitRegion::OodSpatial => "ood_spatial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectVariant {
    Canonical,
    OodObject,
}

impl ObjectVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectVariant::Canonical => "canonical",
            ObjectVariant::OodObject => "ood_object",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundVariant {
    Default,
    Colored,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: TaskName,
    pub init_region: InitRegion,
    pub object_variant: ObjectVariant,
    pub clutter: bool,
    pub background_variant: BackgroundVariant,
}

impl TaskSpec {
    pub fn new(name: TaskName) -> Self {
        TaskSpec {
            name,
            init_region: InitRegion::InDomain,
            object_variant: ObjectVariant::Canonical,
            clutter: false,
            background_variant: BackgroundVariant::Default,
        }
    }

    pub fn with_region(mut self, region: InitRegion) -> Self {
        self.init_region = region;
        self
    }

    pub fn with_variant(mut self, variant: ObjectVariant) -> Self {
        self.object_variant = variant;
        self
    }

    pub fn with_clutter(mut self, clutter: bool) -> Self {
        self.clutter = clutter;
        self
    }

    pub fn with_background(mut self, bg: BackgroundVariant) -> Self {
        self.background_variant = bg;
        self
    }

    /// Compact label used in episode ids and report rows.
    pub fn label(&self) -> String {
        let mut s = self.name.as_str().to_string();
        if self.clutter {
            s.push_str("_cluttered");
        }
        if self.background_variant == BackgroundVariant::Colored {
            s.push_str("_colored_bg");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub actions: Vec<LowLevelAction>,
    pub states: Vec<WorldState>,
    pub task: TaskSpec,
    pub seed: u64,
}

/// Global simulator constants. Defaults match the desk-scale platform: a
/// 0.6 m square table with the 5 cm placement lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub table_size: f32,
    pub max_step: f32,
    pub grasp_radius: f32,
    pub hover_height: f32,
    pub lift_height: f32,
    pub z_max: f32,
    /// Half-extent of the central region used by card tasks.
    pub central_half: f32,
    /// Extra margin beyond the central region for "completely away".
    pub move_away_margin: f32,
    /// Stack success tolerance on xy center distance.
    pub stack_tolerance: f32,
    /// Minimum lift height for shake success.
    pub shake_min_height: f32,
    /// Minimum direction sign changes for shake success.
    pub shake_min_sign_changes: u32,
    pub shake_cycles: u32,
    pub shake_amplitude: f32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            table_size: 0.6,
            max_step: 0.02,
            grasp_radius: 0.03,
            hover_height: 0.07,
            lift_height: 0.14,
            z_max: 0.30,
            central_half: 0.10,
            move_away_margin: 0.05,
            stack_tolerance: 0.02,
            shake_min_height: 0.10,
            shake_min_sign_changes: 3,
            shake_cycles: 3,
            shake_amplitude: 0.02,
        }
    }
}

/// Pure deterministic transition kernel.
///
/// Translation applies first (clipped to the table volume), then the gripper
/// command; a held object's pose tracks the gripper exactly.
pub fn step(
    state: &WorldState,
    action: &LowLevelAction,
    cfg: &SimConfig,
) -> Result<WorldState, SimError> {
    let limit = cfg.max_step * (1.0 + 1e-5);
    for v in [action.dx, action.dy, action.dz] {
        if !(v.abs() <= limit) {
            return Err(SimError::ActionBounds {
                value: v,
                max: cfg.max_step,
            });
        }
    }

    let mut next = state.clone();
    next.step_index = state.step_index + 1;
    next.gripper_pose = (
        (state.gripper_pose.0 + action.dx).clamp(0.0, cfg.table_size),
        (state.gripper_pose.1 + action.dy).clamp(0.0, cfg.table_size),
        (state.gripper_pose.2 + action.dz).clamp(0.0, cfg.z_max),
    );

    match action.gripper_cmd {
        GripperCmd::Hold => {}
        GripperCmd::Open => {
            next.gripper_open = true;
            if let Some(id) = next.held_object.take() {
                release_object(&mut next, &id);
            }
        }
        GripperCmd::Close => {
            if next.gripper_open && next.held_object.is_none() {
                if let Some(id) = nearest_graspable(&next, cfg) {
                    next.held_object = Some(id);
                }
            }
            next.gripper_open = false;
        }
    }

    if let Some(id) = next.held_object.clone() {
        let pose = next.gripper_pose;
        if let Some(obj) = next.object_mut(&id) {
            obj.pose.0 = pose.0;
            obj.pose.1 = pose.1;
            obj.pose.2 = pose.2;
        }
    }

    Ok(next)
}

/// Nearest graspable object within the grasp radius of the gripper,
/// ties broken by lexicographic id.
fn nearest_graspable(state: &WorldState, cfg: &SimConfig) -> Option<String> {
    let g = state.gripper_pose;
    let mut best: Option<(f32, &str)> = None;
    for obj in &state.objects {
        if !obj.shape.graspable() {
            continue;
        }
        let p = obj.grasp_point();
        let d = ((g.0 - p.0).powi(2) + (g.1 - p.1).powi(2) + (g.2 - p.2).powi(2)).sqrt();
        if d > cfg.grasp_radius {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && obj.id.as_str() < bid),
        };
        if better {
            best = Some((d, obj.id.as_str()));
        }
    }
    best.map(|(_, id)| id.to_string())
}

/// Drop a released object: caught by the receiver fixture when close enough,
/// otherwise it settles on the highest surface under its center.
fn release_object(state: &mut WorldState, id: &str) {
    let obj_pos = match state.object(id) {
        Some(o) => (o.pose.0, o.pose.1, o.pose.2),
        None => return,
    };
    if let Some(fix) = state.fixture {
        let d = ((obj_pos.0 - fix.pos.0).powi(2)
            + (obj_pos.1 - fix.pos.1).powi(2)
            + (obj_pos.2 - fix.pos.2).powi(2))
        .sqrt();
        if d <= 0.04 {
            if let Some(obj) = state.object_mut(id) {
                obj.pose.0 = fix.pos.0;
                obj.pose.1 = fix.pos.1;
                obj.pose.2 = fix.pos.2;
            }
            return;
        }
    }
    let drop_z = stack_height_at(state, obj_pos.0, obj_pos.1, id);
    if let Some(obj) = state.object_mut(id) {
        obj.pose.2 = drop_z;
    }
}

/// Top of the highest other object whose footprint contains (x, y).
pub fn stack_height_at(state: &WorldState, x: f32, y: f32, exclude: &str) -> f32 {
    let mut z = 0.0f32;
    for obj in &state.objects {
        if obj.id == exclude {
            continue;
        }
        if point_in_footprint(x, y, obj) {
            z = z.max(obj.top());
        }
    }
    z
}

pub(crate) fn point_in_footprint(x: f32, y: f32, obj: &ObjectInstance) -> bool {
    let yaw = obj.pose.3.to_radians();
    let (s, c) = yaw.sin_cos();
    let dx = x - obj.pose.0;
    let dy = y - obj.pose.1;
    // Rotate into the object frame.
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    lx.abs() <= obj.size.0 / 2.0 && ly.abs() <= obj.size.1 / 2.0
}

/// Apply `actions` from `initial`, returning all intermediate states
/// (`len(actions) + 1` entries, the first being `initial`).
pub fn replay(
    initial: &WorldState,
    actions: &[LowLevelAction],
    cfg: &SimConfig,
) -> Result<Vec<WorldState>, SimError> {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(initial.clone());
    for action in actions {
        let next = step(states.last().unwrap(), action, cfg)?;
        states.push(next);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(id: &str, x: f32, y: f32) -> ObjectInstance {
        ObjectInstance {
            id: id.into(),
            shape: Shape::Block,
            color: [0.1, 0.6, 0.2],
            pose: (x, y, 0.0, 0.0),
            size: (0.04, 0.04),
        }
    }

    fn base_state() -> WorldState {
        WorldState {
            gripper_pose: (0.3, 0.1, 0.1),
            gripper_open: true,
            held_object: None,
            objects: vec![block("green", 0.3, 0.3)],
            fixture: None,
            step_index: 0,
        }
    }

    #[test]
    fn identity_action_only_bumps_step_index() {
        let cfg = SimConfig::default();
        let s = base_state();
        let next = step(&s, &LowLevelAction::hold(), &cfg).unwrap();
        assert_eq!(next.step_index, 1);
        let mut expected = s.clone();
        expected.step_index = 1;
        assert_eq!(next, expected);
    }

    #[test]
    fn translation_moves_gripper_exactly() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        s.gripper_pose = (0.0, 0.0, 0.1);
        let next = step(&s, &LowLevelAction::movement(0.02, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(next.gripper_pose, (0.02, 0.0, 0.1));
    }

    #[test]
    fn close_within_grasp_radius_grabs_the_block() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        // 0.01 m above the block center.
        s.gripper_pose = (0.3, 0.3, 0.015 + 0.01);
        let next = step(&s, &LowLevelAction::grip(GripperCmd::Close), &cfg).unwrap();
        assert_eq!(next.held_object.as_deref(), Some("green"));
        assert!(!next.gripper_open);
    }

    #[test]
    fn close_out_of_range_grabs_nothing() {
        let cfg = SimConfig::default();
        let s = base_state(); // gripper far from the block
        let next = step(&s, &LowLevelAction::grip(GripperCmd::Close), &cfg).unwrap();
        assert_eq!(next.held_object, None);
        assert!(!next.gripper_open);
    }

    #[test]
    fn grasp_tie_breaks_by_distance_then_id() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        s.objects = vec![block("b", 0.300, 0.300), block("a", 0.302, 0.300)];
        s.gripper_pose = (0.301, 0.300, 0.015);
        // Equidistant between "a" and "b": lexicographic id wins.
        let next = step(&s, &LowLevelAction::grip(GripperCmd::Close), &cfg).unwrap();
        assert_eq!(next.held_object.as_deref(), Some("a"));
    }

    #[test]
    fn held_object_tracks_gripper_and_releases_to_surface() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        s.gripper_pose = (0.3, 0.3, 0.015);
        let s = step(&s, &LowLevelAction::grip(GripperCmd::Close), &cfg).unwrap();
        assert_eq!(s.held_object.as_deref(), Some("green"));
        let s = step(&s, &LowLevelAction::movement(0.0, 0.0, 0.02), &cfg).unwrap();
        let obj = s.object("green").unwrap();
        assert_eq!(
            (obj.pose.0, obj.pose.1, obj.pose.2),
            s.gripper_pose,
            "held pose must equal gripper pose"
        );
        let s = step(&s, &LowLevelAction::grip(GripperCmd::Open), &cfg).unwrap();
        assert_eq!(s.held_object, None);
        assert_eq!(s.object("green").unwrap().pose.2, 0.0);
    }

    #[test]
    fn release_on_top_of_another_block_stacks() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        s.objects = vec![block("green", 0.3, 0.3), block("yellow", 0.4, 0.3)];
        s.gripper_pose = (0.4, 0.3, 0.015);
        let s = step(&s, &LowLevelAction::grip(GripperCmd::Close), &cfg).unwrap();
        assert_eq!(s.held_object.as_deref(), Some("yellow"));
        // Carry over the green block in small steps.
        let mut cur = s;
        for _ in 0..5 {
            cur = step(&cur, &LowLevelAction::movement(-0.02, 0.0, 0.0), &cfg).unwrap();
        }
        let dropped = step(&cur, &LowLevelAction::grip(GripperCmd::Open), &cfg).unwrap();
        let yellow = dropped.object("yellow").unwrap();
        assert_eq!(yellow.pose.2, 0.030, "yellow should rest on green's top");
    }

    #[test]
    fn oversized_action_is_a_bounds_error() {
        let cfg = SimConfig::default();
        let s = base_state();
        let bad = LowLevelAction::movement(0.021, 0.0, 0.0);
        assert!(matches!(
            step(&s, &bad, &cfg),
            Err(SimError::ActionBounds { .. })
        ));
    }

    #[test]
    fn gripper_stays_inside_table_volume() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        s.gripper_pose = (0.01, 0.59, 0.005);
        let next = step(&s, &LowLevelAction::movement(-0.02, 0.02, -0.02), &cfg).unwrap();
        assert_eq!(next.gripper_pose, (0.0, 0.6, 0.0));
    }

    #[test]
    fn replay_empty_returns_initial_only() {
        let cfg = SimConfig::default();
        let s = base_state();
        let states = replay(&s, &[], &cfg).unwrap();
        assert_eq!(states, vec![s]);
    }

    #[test]
    fn replay_length_contract() {
        let cfg = SimConfig::default();
        let s = base_state();
        let actions = vec![LowLevelAction::hold(); 7];
        let states = replay(&s, &actions, &cfg).unwrap();
        assert_eq!(states.len(), 8);
    }

    #[test]
    fn fixture_catches_released_object() {
        let cfg = SimConfig::default();
        let mut s = base_state();
        s.fixture = Some(ReceiverFixture {
            pos: (0.32, 0.32, 0.10),
        });
        s.gripper_pose = (0.3, 0.3, 0.015);
        let s = step(&s, &LowLevelAction::grip(GripperCmd::Close), &cfg).unwrap();
        let mut cur = s;
        // Rise and approach the fixture.
        for _ in 0..5 {
            cur = step(&cur, &LowLevelAction::movement(0.004, 0.004, 0.017), &cfg).unwrap();
        }
        let d = ((cur.gripper_pose.0 - 0.32).powi(2)
            + (cur.gripper_pose.1 - 0.32).powi(2)
            + (cur.gripper_pose.2 - 0.10).powi(2))
        .sqrt();
        assert!(d < 0.04, "setup should end near the fixture, d={d}");
        let dropped = step(&cur, &LowLevelAction::grip(GripperCmd::Open), &cfg).unwrap();
        let obj = dropped.object("green").unwrap();
        assert_eq!((obj.pose.0, obj.pose.1, obj.pose.2), (0.32, 0.32, 0.10));
    }
}
