//! Action primitives: the atomic building blocks tasks are scripted from.
//! Each compiles against the current state into a bounded low-level action
//! sequence whose execution achieves the primitive's postcondition.

use super::{
    replay, GripperCmd, LowLevelAction, MoveTarget, Primitive, SimConfig, SimError, WorldState,
};

/// Straight-line motion split into `ceil(dist / max_step)` equal steps; each
/// per-axis component stays within the step bound because the Euclidean step
/// length does.
fn move_steps(from: (f32, f32, f32), to: (f32, f32, f32), cfg: &SimConfig) -> Vec<LowLevelAction> {
    let delta = (to.0 - from.0, to.1 - from.1, to.2 - from.2);
    let dist = (delta.0 * delta.0 + delta.1 * delta.1 + delta.2 * delta.2).sqrt();
    if dist == 0.0 {
        return Vec::new();
    }
    let n = (dist / cfg.max_step).ceil().max(1.0) as usize;
    let nf = n as f32;
    (0..n)
        .map(|_| LowLevelAction::movement(delta.0 / nf, delta.1 / nf, delta.2 / nf))
        .collect()
}

fn resolve_target(
    target: &MoveTarget,
    state: &WorldState,
) -> Result<(f32, f32, f32), SimError> {
    match target {
        MoveTarget::Point(p) => Ok(*p),
        MoveTarget::Object(id) => state
            .object(id)
            .map(|o| o.grasp_point())
            .ok_or_else(|| SimError::UnknownObject(id.clone())),
    }
}

/// Compile a primitive into low-level actions, validating feasibility
/// against `state`.
pub fn compile_primitive(
    p: &Primitive,
    state: &WorldState,
    cfg: &SimConfig,
) -> Result<Vec<LowLevelAction>, SimError> {
    match p {
        Primitive::MoveTo { target } => {
            let to = resolve_target(target, state)?;
            Ok(move_steps(state.gripper_pose, to, cfg))
        }
        Primitive::Grasp { object } => {
            if state.held_object.is_some() {
                return Err(SimError::Infeasible(format!(
                    "grasp '{object}' while already holding '{}'",
                    state.held_object.as_deref().unwrap_or("")
                )));
            }
            let obj = state
                .object(object)
                .ok_or_else(|| SimError::UnknownObject(object.clone()))?;
            if !obj.shape.graspable() {
                return Err(SimError::Infeasible(format!(
                    "object '{object}' is not graspable"
                )));
            }
            let grasp = obj.grasp_point();
            let hover = (grasp.0, grasp.1, grasp.2 + cfg.hover_height);
            let mut seq = Vec::new();
            if !state.gripper_open {
                seq.push(LowLevelAction::grip(GripperCmd::Open));
            }
            let cur = state.gripper_pose;
            seq.extend(move_steps(cur, hover, cfg));
            seq.extend(move_steps(hover, grasp, cfg));
            seq.push(LowLevelAction::grip(GripperCmd::Close));
            Ok(seq)
        }
        Primitive::Release => Ok(vec![LowLevelAction::grip(GripperCmd::Open)]),
        Primitive::Lift { height } => {
            let g = state.gripper_pose;
            Ok(move_steps(g, (g.0, g.1, *height), cfg))
        }
        Primitive::Shake { cycles, amplitude } => {
            if *cycles < 1 {
                return Err(SimError::Infeasible("shake needs cycles >= 1".into()));
            }
            if !(*amplitude > 0.0) {
                return Err(SimError::Infeasible("shake needs amplitude > 0".into()));
            }
            let g = state.gripper_pose;
            // Swing away from the nearer table edge so clipping never eats
            // the oscillation.
            let sign: f32 = if g.0 < cfg.table_size / 2.0 { 1.0 } else { -1.0 };
            let mut seq = move_steps(g, (g.0, g.1, cfg.lift_height), cfg);
            let swing = |dir: f32, seq: &mut Vec<LowLevelAction>| {
                let n = (*amplitude / cfg.max_step).ceil().max(1.0) as usize;
                let step = *amplitude / n as f32;
                for _ in 0..n {
                    seq.push(LowLevelAction::movement(dir * step, 0.0, 0.0));
                }
            };
            for _ in 0..*cycles {
                swing(sign, &mut seq);
                swing(-sign, &mut seq);
            }
            Ok(seq)
        }
        Primitive::Push {
            object,
            direction,
            distance,
        } => {
            let obj = state
                .object(object)
                .ok_or_else(|| SimError::UnknownObject(object.clone()))?;
            let norm = (direction.0 * direction.0 + direction.1 * direction.1).sqrt();
            if !(norm > 0.0) || !(*distance > 0.0) {
                return Err(SimError::Infeasible("push needs a direction and distance".into()));
            }
            let dir = (direction.0 / norm, direction.1 / norm);
            let contact = 0.5 * obj.size.0.max(obj.size.1) + 0.01;
            let start = (
                obj.pose.0 - dir.0 * contact,
                obj.pose.1 - dir.1 * contact,
                obj.pose.2 + obj.shape.thickness() / 2.0,
            );
            let end = (
                start.0 + dir.0 * *distance,
                start.1 + dir.1 * *distance,
                start.2,
            );
            let mut seq = Vec::new();
            if state.gripper_open {
                seq.push(LowLevelAction::grip(GripperCmd::Close));
            }
            let hover = (start.0, start.1, start.2 + cfg.hover_height);
            seq.extend(move_steps(state.gripper_pose, hover, cfg));
            seq.extend(move_steps(hover, start, cfg));
            seq.extend(move_steps(start, end, cfg));
            Ok(seq)
        }
        Primitive::Stack { on } => {
            let held = state.held_object.as_deref().ok_or_else(|| {
                SimError::Infeasible("stack requires a held object".into())
            })?;
            let target = state
                .object(on)
                .ok_or_else(|| SimError::UnknownObject(on.clone()))?;
            if target.id == held {
                return Err(SimError::Infeasible("cannot stack an object on itself".into()));
            }
            let place = (target.pose.0, target.pose.1, target.top() + 0.002);
            let g = state.gripper_pose;
            let hover = (place.0, place.1, (place.2 + cfg.hover_height).max(g.2));
            let mut seq = Vec::new();
            seq.extend(move_steps(g, hover, cfg));
            seq.extend(move_steps(hover, place, cfg));
            seq.push(LowLevelAction::grip(GripperCmd::Open));
            Ok(seq)
        }
    }
}

/// Compile and execute a primitive sequence from `state`, returning the
/// concatenated actions and the final state.
pub fn run_plan(
    state: &WorldState,
    plan: &[Primitive],
    cfg: &SimConfig,
) -> Result<(Vec<LowLevelAction>, Vec<WorldState>), SimError> {
    let mut actions = Vec::new();
    let mut states = vec![state.clone()];
    for prim in plan {
        let cur = states.last().unwrap().clone();
        let seq = compile_primitive(prim, &cur, cfg)?;
        let tail = replay(&cur, &seq, cfg)?;
        states.extend(tail.into_iter().skip(1));
        actions.extend(seq);
    }
    Ok((actions, states))
}
