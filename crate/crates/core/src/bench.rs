//! The fifteen-function test suite over `[-2, 2]^n`, evaluated in fixed point.

use std::fmt;
use std::str::FromStr;

use crate::fxp::wide::Wx;
use crate::fxp::{Fx, FxError, FxResult, RngState};

/// Largest dimension whose solution plus fitness fits one 128-byte packet.
pub const MAX_DIM: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionId(u8);

struct FunctionInfo {
    name: &'static str,
    unimodal: bool,
    separable: bool,
}

const INFO: [FunctionInfo; 15] = [
    FunctionInfo {
        name: "Sphere",
        unimodal: true,
        separable: true,
    },
    FunctionInfo {
        name: "Rosenbrock",
        unimodal: false,
        separable: false,
    },
    FunctionInfo {
        name: "Ackley",
        unimodal: false,
        separable: false,
    },
    FunctionInfo {
        name: "Griewank",
        unimodal: false,
        separable: false,
    },
    FunctionInfo {
        name: "Rastrigin",
        unimodal: false,
        separable: true,
    },
    FunctionInfo {
        name: "Michalewicz",
        unimodal: false,
        separable: true,
    },
    FunctionInfo {
        name: "Schwefel",
        unimodal: false,
        separable: true,
    },
    FunctionInfo {
        name: "Schwefel 1.2",
        unimodal: true,
        separable: false,
    },
    FunctionInfo {
        name: "Schwefel 2.21",
        unimodal: true,
        separable: false,
    },
    FunctionInfo {
        name: "Schwefel 2.22",
        unimodal: true,
        separable: true,
    },
    FunctionInfo {
        name: "Alpine",
        unimodal: false,
        separable: true,
    },
    FunctionInfo {
        name: "Axis Parallel",
        unimodal: true,
        separable: false,
    },
    FunctionInfo {
        name: "Moved Axis Parallel",
        unimodal: true,
        separable: false,
    },
    FunctionInfo {
        name: "Power Sum",
        unimodal: true,
        separable: false,
    },
    FunctionInfo {
        name: "Zakharov",
        unimodal: true,
        separable: false,
    },
];

impl FunctionId {
    pub const COUNT: usize = 15;

    pub fn new(index: u8) -> Option<Self> {
        (1..=15).contains(&index).then_some(FunctionId(index))
    }

    pub fn all() -> impl Iterator<Item = FunctionId> {
        (1..=15).map(FunctionId)
    }

    /// One-based index, `1` for `f1`.
    pub fn index(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        INFO[self.0 as usize - 1].name
    }

    pub fn unimodal(self) -> bool {
        INFO[self.0 as usize - 1].unimodal
    }

    pub fn separable(self) -> bool {
        INFO[self.0 as usize - 1].separable
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown problem id `{0}` (expected f1..f15)")]
    UnknownId(String),
    #[error("dimension {0} outside 1..={MAX_DIM}: a packet carries at most {MAX_DIM} coordinates plus the fitness")]
    Dimension(usize),
    #[error("lower bound {lower} above upper bound {upper}")]
    Bounds { lower: Fx, upper: Fx },
}

impl FromStr for FunctionId {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('f')
            .and_then(|d| d.parse::<u8>().ok())
            .and_then(FunctionId::new)
            .ok_or_else(|| ProblemError::UnknownId(s.to_owned()))
    }
}

/// A benchmark instance: function, dimension and box bounds shared by all
/// coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    id: FunctionId,
    n: usize,
    lower: Fx,
    upper: Fx,
}

impl Problem {
    pub fn new(id: FunctionId, n: usize) -> Result<Self, ProblemError> {
        Problem::with_bounds(id, n, Fx::from_int(-2), Fx::from_int(2))
    }

    /// Equal bounds are accepted and pin every coordinate.
    pub fn with_bounds(id: FunctionId, n: usize, lower: Fx, upper: Fx) -> Result<Self, ProblemError> {
        if n == 0 || n > MAX_DIM {
            return Err(ProblemError::Dimension(n));
        }
        if lower > upper {
            return Err(ProblemError::Bounds { lower, upper });
        }
        Ok(Problem { id, n, lower, upper })
    }

    pub fn id(&self) -> FunctionId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> Fx {
        self.lower
    }

    pub fn upper(&self) -> Fx {
        self.upper
    }

    /// `upper - lower` in raw units.
    pub fn width_raw(&self) -> i64 {
        self.upper.raw() as i64 - self.lower.raw() as i64
    }

    pub fn in_bounds(&self, x: &[Fx]) -> bool {
        x.len() == self.n && x.iter().all(|&v| v >= self.lower && v <= self.upper)
    }

    /// Maps a raw (possibly out-of-range) coordinate into `[lower, upper)`.
    pub fn wrap_raw(&self, v: i64) -> Fx {
        let width = self.width_raw();
        if width == 0 {
            return self.lower;
        }
        let lo = self.lower.raw() as i64;
        Fx::from_raw((lo + (v - lo).rem_euclid(width)) as i32)
    }

    /// Toroidal wrap of a single coordinate; in-range values are unchanged
    /// except `upper`, which maps to `lower`.
    pub fn wrap(&self, v: Fx) -> Fx {
        if v >= self.lower && v < self.upper {
            v
        } else {
            self.wrap_raw(v.raw() as i64)
        }
    }
}

pub fn toroidal_wrap(x: &[Fx], p: &Problem) -> Vec<Fx> {
    x.iter().map(|&v| p.wrap(v)).collect()
}

/// A candidate point; `fitness` is `None` until evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub x: Vec<Fx>,
    pub fitness: Option<Fx>,
}

impl Solution {
    pub fn new(x: Vec<Fx>) -> Self {
        Solution { x, fitness: None }
    }

    pub fn evaluated(x: Vec<Fx>, fitness: Fx) -> Self {
        Solution { x, fitness: Some(fitness) }
    }

    /// Fitness, with unevaluated points ranking last.
    pub fn f(&self) -> Fx {
        self.fitness.unwrap_or(Fx::MAX)
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }
}

pub fn random_solution(rng: &mut RngState, p: &Problem) -> Solution {
    Solution::new((0..p.n).map(|_| rng.uniform(p.lower, p.upper)).collect())
}

type WxResult = Result<Wx, FxError>;

fn sum_of(it: impl IntoIterator<Item = WxResult>) -> WxResult {
    it.into_iter().try_fold(Wx::ZERO, |acc, v| acc.add(v?))
}

fn prod_of(it: impl IntoIterator<Item = WxResult>) -> WxResult {
    it.into_iter().try_fold(Wx::ONE, |acc, v| acc.mul(v?))
}

fn sq(v: Wx) -> WxResult {
    v.mul(v)
}

/// Evaluates the objective. Intermediates are carried in Q32.32 and the
/// result is rounded to Q16.16 once; a value outside the Q16.16 range is an
/// overflow. Counting evaluations is the caller's job.
pub fn evaluate(p: &Problem, x: &[Fx]) -> FxResult {
    debug_assert_eq!(x.len(), p.n);
    let n = x.len() as i64;
    let xs: Vec<Wx> = x.iter().map(|&v| Wx::from_fx(v)).collect();
    // (1-based index, coordinate)
    let ix = || xs.iter().enumerate().map(|(i, &v)| (i as i64 + 1, v));
    let two_pi = Wx::lit(std::f64::consts::TAU);
    let v = match p.id.0 {
        1 => sum_of(xs.iter().map(|&v| sq(v))),
        2 => sum_of(xs.windows(2).map(|w| {
            let a = sq(w[1].sub(sq(w[0])?)?)?.mul_int(100)?;
            a.add(sq(Wx::ONE.sub(w[0])?)?)
        })),
        3 => (|| {
            let mean_sq = sum_of(xs.iter().map(|&v| sq(v)))?.div_int(n)?;
            let mean_cos = sum_of(xs.iter().map(|&v| Ok(two_pi.mul(v)?.cos())))?.div_int(n)?;
            let a = Wx::lit(-0.2).mul(mean_sq.sqrt()?)?.exp()?.mul_int(-20)?;
            let b = mean_cos.exp()?;
            a.sub(b)?.add(Wx::int(20))?.add(Wx::lit(std::f64::consts::E))
        })(),
        4 => (|| {
            let s = sum_of(xs.iter().map(|&v| sq(v)))?.div_int(4000)?;
            let prod = prod_of(ix().map(|(i, v)| Ok(v.div(Wx::int(i).sqrt()?)?.cos())))?;
            s.sub(prod)?.add(Wx::ONE)
        })(),
        5 => (|| {
            let s = sum_of(xs.iter().map(|&v| sq(v)?.sub(two_pi.mul(v)?.cos().mul_int(10)?)))?;
            Wx::int(10 * n).add(s)
        })(),
        6 => {
            let pi = Wx::lit(std::f64::consts::PI);
            sum_of(ix().map(|(i, v)| {
                let inner = sq(v)?.mul_int(i)?.div(pi)?.sin();
                v.sin().mul(inner.powi(20)?)
            }))
            .map(Wx::neg)
        }
        7 => (|| {
            let s = sum_of(xs.iter().map(|&v| v.mul(v.abs().sqrt()?.sin())))?;
            Wx::lit(418.9829).mul_int(n)?.sub(s)
        })(),
        8 => {
            let mut partial = Wx::ZERO;
            sum_of(xs.iter().map(|&v| {
                partial = partial.add(v)?;
                sq(partial)
            }))
        }
        9 => return Ok(x.iter().copied().max().expect("non-empty")),
        10 => (|| {
            let s = sum_of(xs.iter().map(|&v| Ok(v.abs())))?;
            s.add(prod_of(xs.iter().map(|&v| Ok(v.abs())))?)
        })(),
        11 => sum_of(xs.iter().map(|&v| Ok(v.mul(v.sin())?.add(v.div_int(10)?)?.abs()))),
        12 => sum_of(ix().map(|(i, v)| sq(v)?.mul_int(i))),
        13 => sum_of(ix().map(|(i, v)| sq(v)?.mul_int(5 * i))),
        14 => sum_of(ix().map(|(i, v)| v.abs().powi(i as u32 + 1))),
        15 => (|| {
            let s1 = sum_of(xs.iter().map(|&v| sq(v)))?;
            let s2 = sum_of(ix().map(|(i, v)| v.mul_int(i)))?.div_int(2)?;
            s1.add(sq(s2)?)?.add(s2.powi(4)?)
        })(),
        _ => unreachable!("validated id"),
    };
    v?.to_fx()
}

/// Evaluation under the search-time overflow policy: an overflowing point
/// scores the worst representable value.
pub fn evaluate_or_worst(p: &Problem, x: &[Fx]) -> Fx {
    match evaluate(p, x) {
        Ok(v) => v,
        Err(FxError::Overflow) | Err(FxError::DivByZero) | Err(FxError::Domain) => Fx::MAX,
    }
}
