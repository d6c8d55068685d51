//! Interacting tempering: a ladder of chains where each level may jump to
//! a uniformly drawn past state of the level above.

use log::debug;
use nalgebra::DMatrix;
use rand::Rng;

use super::{rwm_step, ChainTrace, EmpiricalMeasure, MoveKind, Point, Proposal};
use crate::error::{check_dim, Error, Result};
use crate::rng::{RngStream, StreamRng};
use crate::target::{LogDensity, TargetDensity, TemperedDensity};

/// `exp(min(0, β (log π(y) − log π(x))))`.
pub fn it_acceptance<D: LogDensity + ?Sized>(x: &Point, y: &Point, target: &D, beta: f64) -> Result<f64> {
    let lx = target.log_density_at(x.as_slice())?;
    let ly = target.log_density_at(y.as_slice())?;
    if lx == f64::NEG_INFINITY {
        return Err(Error::InvalidInput("current state outside the support".into()));
    }
    Ok(acceptance_from_logs(lx, ly, beta))
}

#[inline]
fn acceptance_from_logs(lx: f64, ly: f64, beta: f64) -> f64 {
    (beta * (ly - lx)).min(0.0).exp()
}

/// Interaction branch given its two draws: propose `history[index]` and
/// accept iff `accept_u < α(x, z)`.
pub fn interaction_move<D: LogDensity + ?Sized>(
    x: &Point,
    history: &[Point],
    target: &D,
    beta: f64,
    accept_u: f64,
    index: usize,
) -> Result<(Point, bool)> {
    let z = history.get(index).ok_or_else(|| Error::InvalidInput(format!("history index {index} out of range")))?;
    check_dim(x.len(), z.len())?;
    let alpha = it_acceptance(x, z, target, beta)?;
    if accept_u < alpha {
        Ok((z.clone(), true))
    } else {
        Ok((x.clone(), false))
    }
}

/// Result of one interacting-tempering step.
#[derive(Debug, Clone, PartialEq)]
pub struct ItMove {
    pub point: Point,
    pub kind: MoveKind,
    pub accepted: bool,
}

/// One step at a tempered level.
///
/// `interaction_rng` supplies, in order, the branch uniform, then (for the
/// interaction branch only) the acceptance uniform and the history index.
/// The local branch is an [`rwm_step`] driven by `local_rng`, so with
/// `upsilon = 0` the step is exactly an `rwm_step` on `local_rng`.
///
/// An empty history turns the interaction branch into a local move.
#[allow(clippy::too_many_arguments)]
pub fn it_step<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    x: &Point,
    history: &[Point],
    proposal: &Proposal,
    level: &TemperedDensity,
    beta: f64,
    upsilon: f64,
    interaction_rng: &mut R1,
    local_rng: &mut R2,
) -> Result<ItMove> {
    let branch: f64 = interaction_rng.gen();
    if branch < upsilon {
        if history.is_empty() {
            debug!("interaction branch with empty history; taking a local move");
        } else {
            let accept_u: f64 = interaction_rng.gen();
            let index = interaction_rng.gen_range(0..history.len());
            let (point, accepted) = interaction_move(x, history, level.base(), beta, accept_u, index)?;
            return Ok(ItMove { point, kind: MoveKind::Interaction, accepted });
        }
    }
    let (point, accepted) = rwm_step(x, proposal, level, local_rng)?;
    Ok(ItMove { point, kind: MoveKind::Local, accepted })
}

/// Temperature ladder and per-level settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    pub temperatures: Vec<f64>,
    pub upsilon: f64,
    pub proposal_covs: Vec<DMatrix<f64>>,
    pub steps: usize,
    pub burn_in: usize,
}

impl LadderConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let t = &self.temperatures;
        if t.is_empty() {
            return Err(Error::Config("temperatures: at least one level is required".into()));
        }
        if t[0] != 1.0 {
            return Err(Error::Config(format!("temperatures: first entry must be exactly 1, got {}", t[0])));
        }
        if let Some(w) = t.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Config(format!(
                "temperatures: must be strictly ascending, found {} followed by {}",
                w[0], w[1]
            )));
        }
        if !(self.upsilon > 0.0 && self.upsilon < 1.0) {
            return Err(Error::Config(format!("upsilon: must lie in the open interval (0, 1), got {}", self.upsilon)));
        }
        if self.proposal_covs.len() != t.len() {
            return Err(Error::Config(format!(
                "proposal_covs: expected one matrix per level ({}), got {}",
                t.len(),
                self.proposal_covs.len()
            )));
        }
        for (k, c) in self.proposal_covs.iter().enumerate() {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::Config(format!(
                    "proposal_covs[{k}]: expected {dim}x{dim}, got {}x{}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        if self.steps == 0 {
            return Err(Error::Config("steps: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.temperatures.len()
    }

    /// Exponent `1/T_k − 1/T_{k+1}` of the move from level `k` (0-based)
    /// into the history of level `k + 1`.
    pub fn level_beta(&self, k: usize) -> f64 {
        1.0 / self.temperatures[k] - 1.0 / self.temperatures[k + 1]
    }
}

/// Streams `(local, interaction)` used by 0-based level `k` of a ladder
/// seeded with `stream`.
pub fn ladder_streams(stream: RngStream, k: usize) -> (RngStream, RngStream) {
    let k = k as u64;
    (stream.derive(0, 2 * k), stream.derive(0, 2 * k + 1))
}

struct Level {
    target: TemperedDensity,
    proposal: Proposal,
    x: Point,
    history: EmpiricalMeasure,
    local_rng: StreamRng,
    interaction_rng: StreamRng,
}

/// A K-level interacting tempering ladder advanced one synchronized sweep
/// at a time.
///
/// In sweep `n → n+1` the top level makes a plain random-walk move, then
/// levels `K−1, …, 1` each make an [`it_step`] against the history of the
/// level above restricted to indices `≤ n`. Every history starts with the
/// level's initial state.
pub struct ItLadder {
    cfg: LadderConfig,
    levels: Vec<Level>,
    time: usize,
}

impl ItLadder {
    pub fn new(cfg: LadderConfig, target: &TargetDensity, x0_per_level: &[Point], stream: RngStream) -> Result<Self> {
        cfg.validate(target.dim())?;
        if x0_per_level.len() != cfg.levels() {
            return Err(Error::Config(format!(
                "x0: expected one initial state per level ({}), got {}",
                cfg.levels(),
                x0_per_level.len()
            )));
        }
        let mut levels = Vec::with_capacity(cfg.levels());
        for (k, (t, x0)) in cfg.temperatures.iter().zip(x0_per_level).enumerate() {
            check_dim(target.dim(), x0.len())?;
            let (local, interaction) = ladder_streams(stream, k);
            levels.push(Level {
                target: TemperedDensity::new(target.clone(), *t)?,
                proposal: Proposal::new(&cfg.proposal_covs[k])
                    .map_err(|e| Error::Config(format!("proposal_covs[{k}]: {e}")))?,
                x: x0.clone(),
                history: EmpiricalMeasure::with_initial(x0.clone()),
                local_rng: local.rng(),
                interaction_rng: interaction.rng(),
            });
        }
        Ok(Self { cfg, levels, time: 0 })
    }

    pub fn config(&self) -> &LadderConfig {
        &self.cfg
    }

    /// Number of completed sweeps.
    pub fn time(&self) -> usize {
        self.time
    }

    /// History of 0-based level `k`, including its initial state.
    pub fn history(&self, k: usize) -> &EmpiricalMeasure {
        &self.levels[k].history
    }

    pub fn current(&self, k: usize) -> &Point {
        &self.levels[k].x
    }

    /// Advances every level by one step; returns the moves, indexed by level.
    pub fn sweep(&mut self) -> Result<Vec<ItMove>> {
        let n = self.time;
        let top = self.levels.len() - 1;
        let mut moves: Vec<Option<ItMove>> = vec![None; self.levels.len()];

        {
            let lv = &mut self.levels[top];
            let (point, accepted) = rwm_step(&lv.x, &lv.proposal, &lv.target, &mut lv.local_rng)?;
            lv.x = point.clone();
            lv.history.push(point.clone());
            moves[top] = Some(ItMove { point, kind: MoveKind::Local, accepted });
        }

        for k in (0..top).rev() {
            let beta = self.cfg.level_beta(k);
            let (lower, upper) = self.levels.split_at_mut(k + 1);
            let lv = &mut lower[k];
            let visible = upper[0].history.prefix(n + 1);
            let mv = it_step(
                &lv.x,
                visible,
                &lv.proposal,
                &lv.target,
                beta,
                self.cfg.upsilon,
                &mut lv.interaction_rng,
                &mut lv.local_rng,
            )?;
            lv.x = mv.point.clone();
            lv.history.push(mv.point.clone());
            moves[k] = Some(mv);
        }

        self.time += 1;
        Ok(moves.into_iter().map(|m| m.expect("every level moved")).collect())
    }
}

/// Runs the ladder for `cfg.steps` sweeps and returns one trace per level,
/// level 1 (the target temperature) first.
pub fn run_it_ladder(
    cfg: &LadderConfig,
    target: &TargetDensity,
    x0_per_level: &[Point],
    stream: RngStream,
) -> Result<Vec<ChainTrace>> {
    let mut ladder = ItLadder::new(cfg.clone(), target, x0_per_level, stream)?;
    let recorded = cfg.steps.saturating_sub(cfg.burn_in);
    let mut traces: Vec<ChainTrace> =
        (0..cfg.levels()).map(|_| ChainTrace::with_capacity(recorded, cfg.burn_in + 1)).collect();
    for n in 0..cfg.steps {
        let moves = ladder.sweep()?;
        if n >= cfg.burn_in {
            for (trace, mv) in traces.iter_mut().zip(moves) {
                trace.push(mv.point, mv.accepted, mv.kind);
            }
        }
    }
    Ok(traces)
}
