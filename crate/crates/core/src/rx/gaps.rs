//! Missed-payload detection from the two-bit Ab state cycle.

use serde::{Deserialize, Serialize};

use crate::frame::{AbState, FrameStructure};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub after_packet_state: AbState,
    pub missed_count: u8,
    /// Frames bracketing the gap: last frame before, first frame after.
    pub frame_indices: (usize, usize),
}

/// One recovered packet in receive order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation<'a> {
    pub state: AbState,
    pub payload: &'a [u8],
    pub first_frame: usize,
    pub last_frame: usize,
}

/// Steps forward from `a` to `b` on the state cycle `order`.
pub fn cycle_distance(order: &[AbState], a: AbState, b: AbState) -> Option<usize> {
    let ia = order.iter().position(|&s| s == a)?;
    let ib = order.iter().position(|&s| s == b)?;
    Some((ib + order.len() - ia) % order.len())
}

/// Transmit order of combined states.
pub fn state_cycle(version: FrameStructure) -> Vec<AbState> {
    (0..version.state_period() as u64)
        .map(|i| AbState::for_packet(version, i))
        .collect()
}

/// Payloads missed between one observation and the next.
pub fn missed_between(order: &[AbState], prev: &Observation<'_>, next: &Observation<'_>) -> usize {
    match cycle_distance(order, prev.state, next.state) {
        Some(0) if prev.payload == next.payload => 0,
        Some(0) => order.len() - 1,
        Some(g) => g - 1,
        None => 0,
    }
}

/// Gap reports for consecutive observations on the given state cycle.
pub fn detect_missed(observations: &[Observation<'_>], order: &[AbState]) -> Vec<GapReport> {
    observations
        .windows(2)
        .filter_map(|w| {
            let missed = missed_between(order, &w[0], &w[1]);
            (missed > 0).then(|| GapReport {
                after_packet_state: w[0].state,
                missed_count: missed as u8,
                frame_indices: (w[0].last_frame, w[1].first_frame),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(state: u8, payload: &[u8]) -> Observation<'_> {
        Observation {
            state: AbState(state),
            payload,
            first_frame: 0,
            last_frame: 0,
        }
    }

    #[test]
    fn cycle_examples() {
        let order = state_cycle(FrameStructure::V2TwoAbPairs);
        assert_eq!(order, vec![AbState(0), AbState(1), AbState(2), AbState(3)]);
        // (1,1) then two steps ahead
        let gaps = detect_missed(&[obs(3, &[0]), obs(1, &[1])], &order);
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].missed_count, 1);
        assert_eq!(gaps[0].after_packet_state, AbState(3));
        assert!(detect_missed(&[obs(2, &[1]), obs(2, &[1])], &order).is_empty());
        assert_eq!(
            detect_missed(&[obs(2, &[1]), obs(2, &[0])], &order)[0].missed_count,
            3
        );
        assert!(detect_missed(&[obs(2, &[1]), obs(3, &[0])], &order).is_empty());
        assert_eq!(
            detect_missed(&[obs(2, &[1]), obs(1, &[0])], &order)[0].missed_count,
            2
        );
    }

    #[test]
    fn custom_cycle_order() {
        let order = [AbState(0), AbState(2), AbState(3), AbState(1)];
        assert_eq!(cycle_distance(&order, AbState(2), AbState(1)), Some(2));
    }
}
