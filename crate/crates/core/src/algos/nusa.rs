//! Simulated annealing with a non-uniform, shrinking neighbourhood.

use serde::{Deserialize, Serialize};

use super::{Evaluator, ParamError};
use crate::bench::{random_solution, Problem, Solution};
use crate::fxp::wide::Wx;
use crate::fxp::{Fx, RngState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NusaParams {
    /// Neighbourhood-shape exponent.
    pub b: u32,
    /// Trial samples per iteration.
    pub n_s: u32,
    /// Initial temperature.
    pub t0: Fx,
    /// Geometric cooling factor per iteration.
    pub alpha: Fx,
    /// Maximum generation number. `None` derives it from the node budget
    /// as `budget / n_s`.
    pub horizon: Option<u32>,
}

impl Default for NusaParams {
    fn default() -> Self {
        NusaParams {
            b: 5,
            n_s: 3,
            t0: Fx::ONE,
            alpha: Fx::lit(0.99),
            horizon: None,
        }
    }
}

impl NusaParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |field, reason| {
            Err(ParamError {
                algorithm: "nusa",
                field,
                reason,
            })
        };
        if self.n_s == 0 {
            return err("n_s", "must be at least 1");
        }
        if self.alpha <= Fx::ZERO || self.alpha >= Fx::ONE {
            return err("alpha", "must lie strictly between 0 and 1");
        }
        if self.t0 < Fx::ZERO {
            return err("t0", "must not be negative");
        }
        if self.horizon == Some(0) {
            return err("horizon", "must be at least 1");
        }
        Ok(())
    }

    pub fn horizon_for(&self, budget: u64) -> u32 {
        self.horizon
            .unwrap_or_else(|| (budget / self.n_s as u64).clamp(1, u32::MAX as u64) as u32)
    }
}

/// `y * (1 - rho^((1 - k/N)^b))` for a given `rho` in `(0, 1)`.
///
/// Evaluated on the wide intermediate and rounded once; the result is
/// clamped to `[0, y]`.
pub fn nusa_delta_with(k: u32, y: Fx, n: u32, b: u32, rho: Fx) -> Fx {
    debug_assert!(n >= 1 && k <= n);
    debug_assert!(rho > Fx::ZERO && rho < Fx::ONE);
    if y <= Fx::ZERO || k >= n {
        return Fx::ZERO;
    }
    let shape = (|| {
        let e = Wx::int((n - k) as i64).div(Wx::int(n as i64))?.powi(b)?;
        let decay = Wx::from_fx(rho).ln()?.mul(e)?.exp()?;
        Wx::from_fx(y).mul(Wx::ONE.sub(decay)?)?.to_fx()
    })();
    shape.map_or(Fx::ZERO, |d| d.max(Fx::ZERO).min(y))
}

pub fn nusa_delta(k: u32, y: Fx, n: u32, b: u32, rng: &mut RngState) -> Fx {
    nusa_delta_with(k, y, n, b, rng.open_unit())
}

/// Non-uniform perturbation of every coordinate. The result stays inside
/// the closed box by construction, so no wrapping is applied.
pub fn nusa_perturb(x: &[Fx], k: u32, horizon: u32, b: u32, p: &Problem, rng: &mut RngState) -> Vec<Fx> {
    let mut out = x.to_vec();
    perturb_into(&mut out, x, k, horizon, b, p, rng);
    out
}

fn perturb_into(out: &mut [Fx], x: &[Fx], k: u32, horizon: u32, b: u32, p: &Problem, rng: &mut RngState) {
    let (lo, hi) = (p.lower(), p.upper());
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = if rng.coin() {
            let d = nusa_delta(k, hi.sub(xi).unwrap_or(Fx::ZERO), horizon, b, rng);
            xi.add(d).unwrap_or(hi)
        } else {
            let d = nusa_delta(k, xi.sub(lo).unwrap_or(Fx::ZERO), horizon, b, rng);
            xi.sub(d).unwrap_or(lo)
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NusaState {
    pub params: NusaParams,
    pub current: Solution,
    pub trial: Solution,
    /// Iteration counter, saturating at the horizon.
    pub k: u32,
    pub horizon: u32,
}

impl NusaState {
    pub fn new(p: &Problem, params: NusaParams, budget: u64, rng: &mut RngState) -> Self {
        let current = random_solution(rng, p);
        NusaState {
            horizon: params.horizon_for(budget),
            params,
            trial: current.clone(),
            current,
            k: 0,
        }
    }

    fn temperature(&self) -> Fx {
        let decay = self.params.alpha.powi(self.k as i32).unwrap_or(Fx::ZERO);
        self.params.t0.mul(decay).unwrap_or(Fx::ZERO)
    }

    fn accept(&self, f_trial: Fx, rng: &mut RngState) -> bool {
        let f_cur = self.current.f();
        if f_trial <= f_cur {
            return true;
        }
        let t = self.temperature();
        if t == Fx::ZERO {
            return false;
        }
        let Ok(prob) = f_trial.sub(f_cur).and_then(|df| df.div(t)).and_then(|r| r.neg()).and_then(Fx::exp) else {
            return false;
        };
        rng.unit() < prob
    }

    /// One iteration: `N_s` trials around the current point, each accepted
    /// by the Metropolis rule at the iteration's temperature.
    pub(super) fn step(&mut self, ev: &mut Evaluator, rng: &mut RngState) {
        if !self.current.is_evaluated() {
            ev.eval_solution(&mut self.current);
            return;
        }
        for _ in 0..self.params.n_s {
            if ev.exhausted() {
                break;
            }
            perturb_into(
                &mut self.trial.x,
                &self.current.x,
                self.k,
                self.horizon,
                self.params.b,
                ev.problem(),
                rng,
            );
            let f = ev.eval_solution(&mut self.trial);
            if self.accept(f, rng) {
                std::mem::swap(&mut self.current, &mut self.trial);
            }
        }
        self.k = (self.k + 1).min(self.horizon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::FunctionId;

    #[test]
    fn delta_edge_cases() {
        let rho = Fx::lit(0.3);
        assert_eq!(nusa_delta_with(10, Fx::TWO, 10, 5, rho), Fx::ZERO);
        assert_eq!(nusa_delta_with(0, Fx::ZERO, 10, 5, rho), Fx::ZERO);
        // k = 0: y(1 - rho).
        assert_eq!(nusa_delta_with(0, Fx::TWO, 10, 5, rho), Fx::lit(1.4));
    }

    #[test]
    fn delta_at_start_is_uniform_over_zero_y() {
        let mut rng = RngState::new(8);
        let y = Fx::lit(3.0);
        let draws = 10_000;
        let mut bins = [0usize; 10];
        for _ in 0..draws {
            let d = nusa_delta(0, y, 100, 5, &mut rng).to_real();
            assert!((0.0..=3.0).contains(&d));
            bins[((d / 3.0 * 10.0) as usize).min(9)] += 1;
        }
        for b in bins {
            assert!((b as f64 / draws as f64 - 0.1).abs() < 0.015, "{bins:?}");
        }
    }

    #[test]
    fn delta_non_increasing_in_k() {
        for rho in [0.001, 0.2, 0.5, 0.9, 0.9999] {
            let rho = Fx::lit(rho);
            let mut prev = Fx::MAX;
            for k in 0..=50 {
                let d = nusa_delta_with(k, Fx::lit(4.0), 50, 5, rho);
                assert!(d <= prev);
                prev = d;
            }
        }
    }

    #[test]
    fn perturb_stays_in_box_and_freezes_at_horizon() {
        let p = Problem::new(FunctionId::new(1).unwrap(), 4).unwrap();
        let mut rng = RngState::new(9);
        let x = vec![Fx::TWO, Fx::lit(-2.0), Fx::ZERO, Fx::lit(1.3)];
        for k in [0, 5, 50] {
            for _ in 0..1000 {
                assert!(p.in_bounds(&nusa_perturb(&x, k, 100, 5, &p, &mut rng)));
            }
        }
        assert_eq!(nusa_perturb(&x, 100, 100, 5, &p, &mut rng), x);
    }

    #[test]
    fn step_uses_n_s_evaluations() {
        let p = Problem::new(FunctionId::new(3).unwrap(), 5).unwrap();
        let mut rng = RngState::new(10);
        let mut st = NusaState::new(&p, NusaParams::default(), 1000, &mut rng);
        assert_eq!(st.horizon, 333);
        let mut best = Solution::new(Vec::new());
        let mut ev = Evaluator::new(&p, &mut best, u64::MAX);
        st.step(&mut ev, &mut rng);
        assert_eq!(ev.used(), 1);
        let mut ev = Evaluator::new(&p, &mut best, u64::MAX);
        st.step(&mut ev, &mut rng);
        assert_eq!(ev.used(), 3);
        assert_eq!(st.k, 1);
    }

    #[test]
    fn cold_chain_rejects_worse() {
        let p = Problem::new(FunctionId::new(1).unwrap(), 2).unwrap();
        let mut rng = RngState::new(1);
        let mut st = NusaState::new(
            &p,
            NusaParams {
                t0: Fx::ZERO,
                ..NusaParams::default()
            },
            1000,
            &mut rng,
        );
        st.current = Solution::evaluated(vec![Fx::ZERO; 2], Fx::ZERO);
        assert!(!st.accept(Fx::ULP, &mut rng));
        assert!(st.accept(Fx::ZERO, &mut rng));
    }
}
