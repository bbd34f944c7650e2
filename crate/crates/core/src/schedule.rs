//! Curriculum schedules keyed on fractional training epochs.
//!
//! * GAEF blend weight `w`: linear from 1 to 0 over its horizon (8 epochs).
//! * GREL loss weight `lambda`: linear from 1 to 0 over its horizon (8 epochs).
//! * Learning rate: during pre-training every layer addition or pooling change
//!   drops the rate to 1e-4 and ramps it linearly back to 3e-4; pre-training
//!   ends at 2.25 epochs; the rate holds at 3e-4 through epoch 8 and is then
//!   controlled by Newbob on the held-out loss.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_HORIZON_EPOCHS: f64 = 8.0;

/// Training progress at the moment a scalar is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurriculumState {
    pub epochs_completed: f64,
    /// Epoch of the most recent pre-training event (layer added or pool size
    /// changed), if any has happened.
    pub last_pretrain_event: Option<f64>,
}

impl CurriculumState {
    pub fn at(epochs_completed: f64) -> Self {
        CurriculumState { epochs_completed, last_pretrain_event: None }
    }

    pub fn with_event(epochs_completed: f64, event: f64) -> Self {
        CurriculumState { epochs_completed, last_pretrain_event: Some(event) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epochs_completed.is_finite() && self.epochs_completed >= 0.0) {
            return Err(Error::InvalidArgument(format!("epochs completed {}", self.epochs_completed)));
        }
        Ok(())
    }
}

/// Fractional epoch from an optimizer step count.
pub fn fractional_epoch(step: u64, steps_per_epoch: u64) -> f64 {
    step as f64 / steps_per_epoch as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub ramp_start: f64,
    pub peak: f64,
    /// Ramp length after each pre-training event, in epochs.
    pub ramp_epochs: f64,
    pub pretrain_end: f64,
    /// Constant-rate phase lasts until this epoch; Newbob afterwards.
    pub hold_until: f64,
    /// Halve when the relative held-out improvement over an epoch is below this.
    pub newbob_threshold: f64,
    pub newbob_factor: f64,
    pub floor: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            ramp_start: 1.0e-4,
            peak: 3.0e-4,
            ramp_epochs: 0.25,
            pretrain_end: 2.25,
            hold_until: 8.0,
            newbob_threshold: 0.005,
            newbob_factor: 0.5,
            floor: 1e-6,
        }
    }
}

impl LrSchedule {
    /// Learning rate at `state`. `dev_losses[i]` is the held-out loss measured
    /// after epoch `i + 1`; Newbob only acts on epochs whose loss and the
    /// previous epoch's loss are both known.
    pub fn rate(&self, state: &CurriculumState, dev_losses: &[f64]) -> f64 {
        let e = state.epochs_completed;
        if e < self.pretrain_end {
            if let Some(ev) = state.last_pretrain_event {
                let since = e - ev;
                if (0.0..self.ramp_epochs).contains(&since) {
                    return self.ramp_start + (self.peak - self.ramp_start) * since / self.ramp_epochs;
                }
            }
            return self.peak;
        }
        if e <= self.hold_until {
            return self.peak;
        }
        let mut lr = self.peak;
        let first = self.hold_until.floor() as usize + 1;
        for epoch in first..=e.floor() as usize {
            let (Some(&before), Some(&after)) = (dev_losses.get(epoch.wrapping_sub(2)), dev_losses.get(epoch - 1))
            else {
                break;
            };
            if (before - after) / before < self.newbob_threshold {
                lr = (lr * self.newbob_factor).max(self.floor);
            }
        }
        lr
    }
}

/// Horizons for `w` and `lambda` plus the learning-rate policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub w_horizon: f64,
    pub lambda_horizon: f64,
    pub lr: LrSchedule,
}

impl Default for Schedules {
    fn default() -> Self {
        Schedules {
            w_horizon: DEFAULT_HORIZON_EPOCHS,
            lambda_horizon: DEFAULT_HORIZON_EPOCHS,
            lr: LrSchedule::default(),
        }
    }
}

fn linear_decay(epochs: f64, horizon: f64) -> f64 {
    (1.0 - epochs / horizon).clamp(0.0, 1.0)
}

impl Schedules {
    pub fn validate(&self) -> Result<()> {
        for (name, h) in [("w_horizon", self.w_horizon), ("lambda_horizon", self.lambda_horizon)] {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Config { field: name.into(), reason: format!("{h} must be positive") });
            }
        }
        Ok(())
    }

    /// GAEF weight on the clean feature.
    pub fn w(&self, state: &CurriculumState) -> f64 {
        linear_decay(state.epochs_completed, self.w_horizon)
    }

    /// GREL weight on the enhancement MSE.
    pub fn lambda(&self, state: &CurriculumState) -> f64 {
        linear_decay(state.epochs_completed, self.lambda_horizon)
    }

    pub fn lr(&self, state: &CurriculumState, dev_losses: &[f64]) -> f64 {
        self.lr.rate(state, dev_losses)
    }
}

/// Epochs at which pre-training events happen.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainPlan {
    pub events: Vec<f64>,
}

impl Default for PretrainPlan {
    /// Nine events a quarter epoch apart, so the last ramp finishes at 2.25.
    fn default() -> Self {
        PretrainPlan { events: (0..9).map(|i| f64::from(i) * 0.25).collect() }
    }
}

impl PretrainPlan {
    pub fn state_at(&self, epochs: f64) -> CurriculumState {
        let last = self.events.iter().copied().filter(|&ev| ev <= epochs).reduce(f64::max);
        CurriculumState { epochs_completed: epochs, last_pretrain_event: last }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub epoch: f64,
    pub w: f64,
    pub lambda: f64,
    pub lr: f64,
}

/// Samples all three schedules at `points_per_epoch` evenly spaced points per
/// epoch from 0 through `end_epoch` inclusive.
pub fn schedule_trace(
    schedules: &Schedules,
    plan: &PretrainPlan,
    dev_losses: &[f64],
    end_epoch: u32,
    points_per_epoch: u32,
) -> Vec<TracePoint> {
    let n = u64::from(end_epoch) * u64::from(points_per_epoch.max(1));
    (0..=n)
        .map(|i| {
            let epoch = i as f64 / f64::from(points_per_epoch.max(1));
            let state = plan.state_at(epoch);
            TracePoint {
                epoch,
                w: schedules.w(&state),
                lambda: schedules.lambda(&state),
                lr: schedules.lr(&state, dev_losses),
            }
        })
        .collect()
}

/// One `epoch w lambda lr` line per point.
pub fn format_trace(points: &[TracePoint]) -> String {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "{} {} {} {}", p.epoch, p.w, p.lambda, p.lr);
    }
    s
}

pub fn parse_trace(text: &str) -> Result<Vec<TracePoint>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format("schedule trace", format!("line {}: {e}", i + 1)))?;
            match vals[..] {
                [epoch, w, lambda, lr] => Ok(TracePoint { epoch, w, lambda, lr }),
                _ => Err(Error::format("schedule trace", format!("line {}: expected 4 columns", i + 1))),
            }
        })
        .collect()
}
