//! The elitist (1+1) EA.
//!
//! One parent, one offspring per iteration; the offspring replaces the
//! parent whenever its fitness is not worse. Fitness functions with an
//! incremental route ([`SetFunction::value_after_flips`]) are evaluated
//! without materializing the offspring.

use std::time::Instant;

use thiserror::Error;

use crate::bitstring::BitString;
use crate::mutation::{FlipBuffer, MutationOperator};
use crate::rng::trial_rng;
use crate::set_function::SetFunction;

/// Tolerance for target comparisons on real-valued landscapes.
pub const REAL_TARGET_TOLERANCE: f64 = 1e-9;

/// In debug builds, every this-many evaluations the incremental value is
/// cross-checked against a full evaluation.
const DELTA_CHECK_INTERVAL: u64 = 4096;

/// The wall-clock deadline is polled every this-many evaluations.
const DEADLINE_POLL_INTERVAL: u64 = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EaError {
    #[error("{what} has length {got}, fitness expects {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("evaluation budget must be at least 1")]
    ZeroBudget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCondition {
    pub max_evaluations: u64,
    pub target_fitness: Option<f64>,
    pub deadline: Option<Instant>,
}

impl StopCondition {
    pub fn budget(max_evaluations: u64) -> Self {
        Self {
            max_evaluations,
            target_fitness: None,
            deadline: None,
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_fitness = Some(target);
        self
    }

    /// Abandons the run once `deadline` has passed; the record is then
    /// marked `timed_out`.
    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }

    fn reached(&self, fitness: f64, integral: bool) -> bool {
        match self.target_fitness {
            Some(t) if integral => fitness >= t,
            Some(t) => fitness >= t - REAL_TARGET_TOLERANCE,
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    /// 1-based index of the evaluation that produced this fitness.
    pub evaluation: u64,
    pub fitness: f64,
}

/// Outcome of one EA run: the initial point plus every strict improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub improvements: Vec<Improvement>,
    pub final_solution: BitString,
    pub final_fitness: f64,
    pub evaluations_used: u64,
    pub seed: u64,
    pub reached_target: bool,
    pub timed_out: bool,
}

impl RunRecord {
    /// Best fitness known after `evaluations` evaluations.
    ///
    /// Values past the end of the run report the final fitness.
    pub fn best_at(&self, evaluations: u64) -> f64 {
        let idx = self.improvements.partition_point(|imp| imp.evaluation <= evaluations);
        self.improvements[idx.saturating_sub(1)].fitness
    }
}

/// Runs the (1+1) EA. See [`run_opo_ea_observed`].
pub fn run_opo_ea<F: SetFunction + ?Sized>(
    fitness: &F,
    operator: &MutationOperator,
    stop: &StopCondition,
    seed: u64,
    init: Option<&BitString>,
) -> Result<RunRecord, EaError> {
    run_opo_ea_observed(fitness, operator, stop, seed, init, |_, _| {})
}

/// Runs the (1+1) EA and calls `on_accept(evaluation, fitness)` for the
/// initial point and for every accepted offspring, including equal-fitness
/// replacements.
///
/// Starts from `init` or, if absent, from a uniformly random string drawn
/// from the run's RNG. Exactly one evaluation is spent on the initial point
/// and one per iteration; the run stops when the budget is used up or the
/// target is reached.
pub fn run_opo_ea_observed<F, O>(
    fitness: &F,
    operator: &MutationOperator,
    stop: &StopCondition,
    seed: u64,
    init: Option<&BitString>,
    mut on_accept: O,
) -> Result<RunRecord, EaError>
where
    F: SetFunction + ?Sized,
    O: FnMut(u64, f64),
{
    let n = fitness.ground_size();
    if operator.len() != n {
        return Err(EaError::LengthMismatch {
            what: "operator",
            expected: n,
            got: operator.len(),
        });
    }
    if let Some(x) = init {
        if x.len() != n {
            return Err(EaError::LengthMismatch {
                what: "initial solution",
                expected: n,
                got: x.len(),
            });
        }
    }
    if stop.max_evaluations == 0 {
        return Err(EaError::ZeroBudget);
    }

    let integral = fitness.is_integral();
    let mut rng = trial_rng(seed);
    let mut x = match init {
        Some(x) => x.clone(),
        None => BitString::random(n, &mut rng),
    };
    let mut fx = fitness.value(&x);
    let mut evaluations = 1u64;
    let mut improvements = vec![Improvement {
        evaluation: 1,
        fitness: fx,
    }];
    on_accept(1, fx);

    let mut buf = FlipBuffer::new(n);
    let mut offspring = x.clone();
    let mut timed_out = false;
    while evaluations < stop.max_evaluations && !stop.reached(fx, integral) {
        if let Some(deadline) = stop.deadline {
            if evaluations.is_multiple_of(DEADLINE_POLL_INTERVAL) && Instant::now() >= deadline {
                timed_out = true;
                break;
            }
        }
        operator.sample_flips(&mut buf, &mut rng);
        let flips = buf.flips();
        let fy = match fitness.value_after_flips(&x, fx, flips) {
            Some(v) => {
                if cfg!(debug_assertions) && evaluations.is_multiple_of(DELTA_CHECK_INTERVAL) {
                    offspring.clone_from(&x);
                    offspring.flip_all(flips);
                    let full = fitness.value(&offspring);
                    debug_assert!(
                        (full - v).abs() <= 1e-9 * full.abs().max(1.0),
                        "incremental evaluation {v} disagrees with full evaluation {full}"
                    );
                }
                v
            }
            None => {
                offspring.clone_from(&x);
                offspring.flip_all(flips);
                fitness.value(&offspring)
            }
        };
        evaluations += 1;
        if fy >= fx {
            x.flip_all(flips);
            if fy > fx {
                improvements.push(Improvement {
                    evaluation: evaluations,
                    fitness: fy,
                });
            }
            fx = fy;
            on_accept(evaluations, fx);
        }
    }

    Ok(RunRecord {
        reached_target: stop.reached(fx, integral),
        improvements,
        final_solution: x,
        final_fitness: fx,
        evaluations_used: evaluations,
        seed,
        timed_out,
    })
}
