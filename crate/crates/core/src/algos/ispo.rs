//! Intelligent single particle optimization.

use serde::{Deserialize, Serialize};

use super::{Evaluator, ParamError};
use crate::bench::{random_solution, Problem, Solution};
use crate::fxp::{Fx, RngState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IspoParams {
    /// Acceleration.
    pub a: Fx,
    /// Acceleration power factor.
    pub p: u32,
    /// Learning coefficient.
    pub b: Fx,
    /// Shrinking factor.
    pub s_f: Fx,
    /// Learning factors below this magnitude reset to zero. The nominal
    /// 1e-5 is below resolution, so the default is one ulp.
    pub epsilon: Fx,
    /// Perturbations per variable.
    pub h: u32,
}

impl Default for IspoParams {
    fn default() -> Self {
        IspoParams {
            a: Fx::ONE,
            p: 10,
            b: Fx::TWO,
            s_f: Fx::from_int(4),
            epsilon: Fx::ULP,
            h: 30,
        }
    }
}

impl IspoParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |field, reason| {
            Err(ParamError {
                algorithm: "ispo",
                field,
                reason,
            })
        };
        if self.h == 0 {
            return err("h", "must be at least 1");
        }
        if self.s_f <= Fx::ONE {
            return err("s_f", "must be greater than 1");
        }
        if self.epsilon <= Fx::ZERO {
            return err("epsilon", "must be positive");
        }
        Ok(())
    }
}

/// `A / t^P * r + B * L` for a given draw `r`.
///
/// The first term is one rounded integer division, so it stays exact for
/// large `t^P`. If `B * L` leaves the range the learning term is dropped,
/// which is what a reset of `L` would produce.
pub fn ispo_velocity_with(pr: &IspoParams, t: u32, l: Fx, r: Fx) -> Fx {
    debug_assert!(t >= 1);
    let num = pr.a.raw() as i128 * r.raw() as i128;
    let accel = match (t as i128).checked_pow(pr.p).and_then(|d| d.checked_mul(1 << 16)) {
        Some(den) => {
            let q = num / den;
            let rem = num % den;
            let q = if 2 * rem.abs() >= den { q + num.signum() } else { q };
            Fx::from_raw(q as i32)
        }
        None => Fx::ZERO,
    };
    pr.b.mul(l).and_then(|bl| accel.add(bl)).unwrap_or(accel)
}

/// Velocity with `r` drawn uniformly from `[-0.5, 0.5]`.
pub fn ispo_velocity(pr: &IspoParams, t: u32, l: Fx, rng: &mut RngState) -> Fx {
    let r = rng.uniform(Fx::HALF.neg().expect("in range"), Fx::HALF);
    ispo_velocity_with(pr, t, l, r)
}

/// Learning-factor update after a perturbation with velocity `v`.
pub fn ispo_learn(pr: &IspoParams, l: Fx, v: Fx, success: bool) -> Fx {
    let next = if success {
        v
    } else {
        l.div(pr.s_f).expect("shrinking factor above one")
    };
    if next.abs().unwrap_or(Fx::MAX) < pr.epsilon {
        Fx::ZERO
    } else {
        next
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IspoState {
    pub params: IspoParams,
    pub particle: Solution,
    pub trial: Solution,
    /// Variable currently being perturbed.
    pub var: usize,
    /// Next perturbation index, `1..=H`.
    pub t: u32,
    /// Learning factor.
    pub l: Fx,
}

impl IspoState {
    pub fn new(p: &Problem, params: IspoParams, rng: &mut RngState) -> Self {
        let particle = random_solution(rng, p);
        IspoState {
            params,
            trial: particle.clone(),
            particle,
            var: 0,
            t: 1,
            l: Fx::ZERO,
        }
    }

    /// One step perturbs one variable `H` times.
    pub(super) fn step(&mut self, ev: &mut Evaluator, rng: &mut RngState) {
        if !self.particle.is_evaluated() {
            ev.eval_solution(&mut self.particle);
            return;
        }
        let i = self.var;
        while self.t <= self.params.h && !ev.exhausted() {
            let v = ispo_velocity(&self.params, self.t, self.l, rng);
            self.trial.x.clone_from(&self.particle.x);
            self.trial.x[i] = ev.problem().wrap_raw(self.particle.x[i].raw() as i64 + v.raw() as i64);
            let f = ev.eval_solution(&mut self.trial);
            let success = f <= self.particle.f();
            if success {
                std::mem::swap(&mut self.particle, &mut self.trial);
            }
            self.l = ispo_learn(&self.params, self.l, v, success);
            self.t += 1;
        }
        if self.t > self.params.h {
            self.var = (i + 1) % self.particle.x.len();
            self.t = 1;
            self.l = Fx::ZERO;
        }
    }

    pub(super) fn adopt(&mut self, s: &Solution) {
        self.particle = s.clone();
        self.t = 1;
        self.l = Fx::ZERO;
    }
}
