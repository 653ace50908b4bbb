//! Per-task success predicates over the final state and full trace.

use super::{point_in_footprint, SimConfig, TaskName, TaskSpec, WorldState};

/// Task-specific success check. Total: returns false on malformed input
/// (e.g. missing objects) rather than erroring.
pub fn check_success(
    task: &TaskSpec,
    final_state: &WorldState,
    trace: &[WorldState],
    cfg: &SimConfig,
) -> bool {
    if trace.is_empty() {
        return false;
    }
    match task.name {
        TaskName::ShakeBottle => shake_success(final_state, trace, cfg),
        TaskName::MoveCardAway => card_away_success(final_state, cfg),
        TaskName::StackBlocksTwo => stack_success(final_state, cfg),
        TaskName::PlacePad => place_pad_success(final_state),
        TaskName::Handover => handover_success(final_state, trace),
    }
}

/// Bottle exceeded the lift height and oscillated (direction sign changes of
/// its x motion while raised).
fn shake_success(final_state: &WorldState, trace: &[WorldState], cfg: &SimConfig) -> bool {
    let Some(_) = final_state.object("bottle") else {
        return false;
    };
    let raised: Vec<f32> = trace
        .iter()
        .filter_map(|s| {
            let o = s.object("bottle")?;
            (o.pose.2 >= cfg.shake_min_height * 0.8).then_some(o.pose.0)
        })
        .collect();
    let max_z = trace
        .iter()
        .filter_map(|s| s.object("bottle").map(|o| o.pose.2))
        .fold(0.0f32, f32::max);
    if max_z < cfg.shake_min_height {
        return false;
    }
    let deltas: Vec<f32> = raised
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > 1e-6)
        .collect();
    let sign_changes = deltas
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count() as u32;
    sign_changes >= cfg.shake_min_sign_changes
}

/// Card center completely outside the central region (with margin).
fn card_away_success(final_state: &WorldState, cfg: &SimConfig) -> bool {
    let Some(card) = final_state.object("card") else {
        return false;
    };
    let cx = cfg.table_size / 2.0;
    let away = cfg.central_half + cfg.move_away_margin;
    let dx = (card.pose.0 - cx).abs();
    let dy = (card.pose.1 - cx).abs();
    (dx > away || dy > away) && final_state.held_object.is_none()
}

/// Yellow stacked on green: xy centers within tolerance, yellow strictly
/// above, and nothing held.
fn stack_success(final_state: &WorldState, cfg: &SimConfig) -> bool {
    let (Some(green), Some(yellow)) = (
        final_state.object("block_green"),
        final_state.object("block_yellow"),
    ) else {
        return false;
    };
    let dx = yellow.pose.0 - green.pose.0;
    let dy = yellow.pose.1 - green.pose.1;
    let centered = (dx * dx + dy * dy).sqrt() <= cfg.stack_tolerance;
    let above = yellow.pose.2 >= green.pose.2 + green.shape.thickness() * 0.8;
    centered && above && final_state.held_object.is_none()
}

/// Mouse footprint fully inside the pad footprint.
fn place_pad_success(final_state: &WorldState) -> bool {
    let (Some(mouse), Some(pad)) = (final_state.object("mouse"), final_state.object("pad"))
    else {
        return false;
    };
    let corners = mouse.footprint();
    corners
        .iter()
        .all(|(x, y)| point_in_footprint(*x, *y, pad))
        && final_state.held_object.is_none()
}

/// The bottle was carried by the gripper at some point and ended caught by
/// the receiver fixture.
fn handover_success(final_state: &WorldState, trace: &[WorldState]) -> bool {
    let Some(fix) = final_state.fixture else {
        return false;
    };
    let Some(bottle) = final_state.object("bottle") else {
        return false;
    };
    let was_held = trace
        .iter()
        .any(|s| s.held_object.as_deref() == Some("bottle"));
    let d = ((bottle.pose.0 - fix.pos.0).powi(2)
        + (bottle.pose.1 - fix.pos.1).powi(2)
        + (bottle.pose.2 - fix.pos.2).powi(2))
    .sqrt();
    was_held && d <= 0.02 && final_state.held_object.is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockworld::{schedule_task, ObjectInstance, Shape, TaskSpec};

    fn card_state(x: f32, y: f32) -> WorldState {
        WorldState {
            gripper_pose: (0.3, 0.1, 0.1),
            gripper_open: true,
            held_object: None,
            objects: vec![ObjectInstance {
                id: "card".into(),
                shape: Shape::Card,
                color: [0.1, 0.2, 0.8],
                pose: (x, y, 0.0, 0.0),
                size: (0.089, 0.064),
            }],
            fixture: None,
            step_index: 0,
        }
    }

    #[test]
    fn untouched_card_in_center_is_not_success() {
        let cfg = SimConfig::default();
        let task = TaskSpec::new(TaskName::MoveCardAway);
        let s = card_state(0.30, 0.30);
        assert!(!check_success(&task, &s, &[s.clone()], &cfg));
    }

    #[test]
    fn card_moved_far_is_success() {
        let cfg = SimConfig::default();
        let task = TaskSpec::new(TaskName::MoveCardAway);
        let s = card_state(0.50, 0.30);
        assert!(check_success(&task, &s, &[s.clone()], &cfg));
    }

    #[test]
    fn scheduled_shake_passes_its_own_check() {
        let cfg = SimConfig::default();
        let task = TaskSpec::new(TaskName::ShakeBottle);
        let traj = schedule_task(&task, 5, &cfg).unwrap();
        assert!(check_success(
            &task,
            traj.states.last().unwrap(),
            &traj.states,
            &cfg
        ));
    }

    #[test]
    fn stack_offset_beyond_tolerance_fails() {
        let cfg = SimConfig::default();
        let task = TaskSpec::new(TaskName::StackBlocksTwo);
        let mk = |x: f32| WorldState {
            gripper_pose: (0.3, 0.1, 0.1),
            gripper_open: true,
            held_object: None,
            objects: vec![
                ObjectInstance {
                    id: "block_green".into(),
                    shape: Shape::Block,
                    color: [0.1, 0.6, 0.2],
                    pose: (0.30, 0.30, 0.0, 0.0),
                    size: (0.04, 0.04),
                },
                ObjectInstance {
                    id: "block_yellow".into(),
                    shape: Shape::Block,
                    color: [0.9, 0.85, 0.1],
                    pose: (x, 0.30, 0.030, 0.0),
                    size: (0.04, 0.04),
                },
            ],
            fixture: None,
            step_index: 0,
        };
        // Offset of 2x the tolerance fails, centered succeeds.
        let bad = mk(0.30 + 2.0 * cfg.stack_tolerance);
        assert!(!check_success(&task, &bad, &[bad.clone()], &cfg));
        let good = mk(0.30);
        assert!(check_success(&task, &good, &[good.clone()], &cfg));
    }

    #[test]
    fn empty_trace_is_never_success() {
        let cfg = SimConfig::default();
        let task = TaskSpec::new(TaskName::MoveCardAway);
        let s = card_state(0.50, 0.30);
        assert!(!check_success(&task, &s, &[], &cfg));
    }
}
