//! Three-stage optimal memetic exploration.

use serde::{Deserialize, Serialize};

use super::{Evaluator, ParamError};
use crate::bench::{random_solution, Problem, Solution};
use crate::fxp::{Fx, RngState};

/// Stage entered when the short-distance budget runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortExit {
    /// Always restart long-distance exploration.
    Long,
    /// Back to middle distance if the elite improved on the one saved when
    /// the short stage started, else long distance.
    MiddleIfImproved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsomeParams {
    /// Expected fraction of elite coordinates inherited by a long-distance trial.
    pub alpha_e: Fx,
    /// Middle-distance hypercube side as a fraction of the range.
    pub delta: Fx,
    /// Samples per middle-distance batch.
    pub k: u32,
    /// Initial short-distance radius as a fraction of the range.
    pub rho: Fx,
    /// Evaluations per short-distance activation.
    pub short_budget: u32,
    pub short_exit: ShortExit,
}

impl Default for TsomeParams {
    fn default() -> Self {
        TsomeParams {
            alpha_e: Fx::lit(0.05),
            delta: Fx::lit(0.2),
            k: 4,
            rho: Fx::lit(0.4),
            short_budget: 150,
            short_exit: ShortExit::Long,
        }
    }
}

impl TsomeParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |field, reason| {
            Err(ParamError {
                algorithm: "3some",
                field,
                reason,
            })
        };
        if self.alpha_e <= Fx::ZERO || self.alpha_e >= Fx::ONE {
            return err("alpha_e", "must lie strictly between 0 and 1");
        }
        if self.delta <= Fx::ZERO || self.delta > Fx::ONE {
            return err("delta", "must lie in (0, 1]");
        }
        if self.k == 0 {
            return err("k", "must be at least 1");
        }
        if self.rho <= Fx::ZERO {
            return err("rho", "must be positive");
        }
        if self.short_budget == 0 {
            return err("short_budget", "must be at least 1");
        }
        Ok(())
    }

    /// Continuation probability of the exponential crossover,
    /// `0.5^(1 / (n * alpha_e))`.
    pub fn crossover_rate(&self, n: usize) -> Fx {
        self.alpha_e
            .mul_int(n as i32)
            .and_then(|ne| Fx::ONE.div(ne))
            .and_then(|e| Fx::HALF.pow(e))
            .unwrap_or(Fx::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Long,
    Middle,
    Short { radius: Fx, used: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsomeState {
    pub params: TsomeParams,
    pub elite: Solution,
    pub trial: Solution,
    /// Elite at the start of the current short-distance stage.
    pub saved_elite: Solution,
    pub stage: Stage,
    cr: Fx,
}

impl TsomeState {
    pub fn new(p: &Problem, params: TsomeParams, rng: &mut RngState) -> Self {
        let elite = random_solution(rng, p);
        TsomeState {
            cr: params.crossover_rate(p.dim()),
            params,
            trial: elite.clone(),
            saved_elite: elite.clone(),
            elite,
            stage: Stage::Long,
        }
    }

    pub(super) fn step(&mut self, ev: &mut Evaluator, rng: &mut RngState) {
        if !self.elite.is_evaluated() {
            ev.eval_solution(&mut self.elite);
            return;
        }
        match self.stage {
            Stage::Long => self.long_step(ev, rng),
            Stage::Middle => self.middle_step(ev, rng),
            Stage::Short { .. } => self.short_step(ev),
        }
    }

    /// Evaluates the trial slot and swaps it in on strict improvement.
    fn try_trial(&mut self, ev: &mut Evaluator) -> bool {
        let f = ev.eval_solution(&mut self.trial);
        if f < self.elite.f() {
            std::mem::swap(&mut self.elite, &mut self.trial);
            true
        } else {
            false
        }
    }

    /// Uniform sample that inherits a cyclic run of elite coordinates.
    fn long_step(&mut self, ev: &mut Evaluator, rng: &mut RngState) {
        let p = ev.problem();
        let n = self.elite.x.len();
        for t in self.trial.x.iter_mut() {
            *t = rng.uniform(p.lower(), p.upper());
        }
        let mut j = rng.index(n);
        let mut copied = 0;
        loop {
            self.trial.x[j] = self.elite.x[j];
            copied += 1;
            j = (j + 1) % n;
            if copied == n || !rng.chance(self.cr) {
                break;
            }
        }
        if self.try_trial(ev) {
            self.stage = Stage::Middle;
        }
    }

    /// `k` samples in a hypercube centred on the elite, recentring after
    /// each improvement.
    fn middle_step(&mut self, ev: &mut Evaluator, rng: &mut RngState) {
        let p = ev.problem().clone();
        let half = Fx::from_raw(((p.width_raw() * self.params.delta.raw() as i64) >> 17) as i32);
        let lo = half.neg().expect("half-width in range");
        let mut improved = false;
        for _ in 0..self.params.k {
            if ev.exhausted() {
                return;
            }
            for (t, &e) in self.trial.x.iter_mut().zip(&self.elite.x) {
                *t = p.wrap_raw(e.raw() as i64 + rng.uniform(lo, half).raw() as i64);
            }
            improved |= self.try_trial(ev);
        }
        if !improved {
            self.saved_elite.clone_from(&self.elite);
            let radius = Fx::from_raw(((p.width_raw() * self.params.rho.raw() as i64) >> 16).min(i32::MAX as i64) as i32);
            self.stage = Stage::Short {
                radius: radius.max(Fx::ULP),
                used: 0,
            };
        }
    }

    /// One sweep over the coordinates: probe `-r`, then `+r/2`. A sweep
    /// without improvement halves the radius.
    fn short_step(&mut self, ev: &mut Evaluator) {
        let Stage::Short { mut radius, mut used } = self.stage else {
            unreachable!("short step outside the short stage");
        };
        let p = ev.problem().clone();
        let budget = self.params.short_budget;
        let n = self.elite.x.len();
        let mut improved = false;
        let mut complete = true;
        'sweep: for i in 0..n {
            for offset in [-(radius.raw() as i64), (radius.raw() as i64 + 1) / 2] {
                if ev.exhausted() || used >= budget {
                    complete = false;
                    break 'sweep;
                }
                self.trial.x.clone_from(&self.elite.x);
                self.trial.x[i] = p.wrap_raw(self.elite.x[i].raw() as i64 + offset);
                used += 1;
                if self.try_trial(ev) {
                    improved = true;
                    continue 'sweep;
                }
            }
        }
        if complete && !improved {
            radius = Fx::from_raw((radius.raw() / 2).max(1));
        }
        self.stage = if used >= budget {
            match self.params.short_exit {
                ShortExit::Long => Stage::Long,
                ShortExit::MiddleIfImproved if self.elite.f() < self.saved_elite.f() => Stage::Middle,
                ShortExit::MiddleIfImproved => Stage::Long,
            }
        } else {
            Stage::Short { radius, used }
        };
    }

    pub(super) fn adopt(&mut self, s: &Solution) {
        self.elite = s.clone();
        self.stage = Stage::Middle;
    }
}
