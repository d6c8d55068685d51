use std::fmt;

use super::{AdaptiveState, Point};

/// How a state was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Local,
    Interaction,
}

impl MoveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MoveKind::Local => "local",
            MoveKind::Interaction => "interaction",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recorded output of one chain.
///
/// `states`, `accepted` and `move_kind` always have the same length, one
/// entry per recorded (post burn-in) step. `step_offset` is the 1-based
/// index of the first recorded step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainTrace {
    pub states: Vec<Point>,
    pub accepted: Vec<bool>,
    pub move_kind: Vec<MoveKind>,
    /// Thinned `(step, state)` snapshots of the adaptive parameter (AM only).
    pub param_snapshots: Vec<(usize, AdaptiveState)>,
    pub step_offset: usize,
}

impl ChainTrace {
    pub fn with_capacity(n: usize, step_offset: usize) -> Self {
        Self {
            states: Vec::with_capacity(n),
            accepted: Vec::with_capacity(n),
            move_kind: Vec::with_capacity(n),
            param_snapshots: Vec::new(),
            step_offset,
        }
    }

    pub fn push(&mut self, state: Point, accepted: bool, kind: MoveKind) {
        self.states.push(state);
        self.accepted.push(accepted);
        self.move_kind.push(kind);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |p| p.len())
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return f64::NAN;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }

    /// Fraction of recorded steps that were interaction proposals.
    pub fn interaction_rate(&self) -> f64 {
        if self.move_kind.is_empty() {
            return f64::NAN;
        }
        self.move_kind.iter().filter(|&&k| k == MoveKind::Interaction).count() as f64 / self.move_kind.len() as f64
    }

    /// Number of strict sign changes of coordinate `coord` along the trace.
    /// Exact zeros do not reset the last observed sign.
    pub fn sign_changes(&self, coord: usize) -> usize {
        let mut last = 0.0f64;
        let mut changes = 0;
        for s in &self.states {
            let v = s[coord];
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
        changes
    }
}
