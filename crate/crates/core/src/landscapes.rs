//! Closed-form pseudo-Boolean benchmarks: OneMax and Jump.

use thiserror::Error;

use crate::bitstring::BitString;
use crate::set_function::SetFunction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("jump parameters need 1 < m < n (got m = {m}, n = {n})")]
pub struct JumpParamsError {
    pub m: usize,
    pub n: usize,
}

/// Number of ones.
pub fn onemax(x: &BitString) -> usize {
    x.count_ones()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpParams {
    m: usize,
    n: usize,
}

impl JumpParams {
    pub fn new(m: usize, n: usize) -> Result<Self, JumpParamsError> {
        if 1 < m && m < n {
            Ok(Self { m, n })
        } else {
            Err(JumpParamsError { m, n })
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Jump value as a function of the number of ones.
    #[allow(clippy::if_same_then_else)]
    pub fn value_at(&self, ones: usize) -> usize {
        let (m, n) = (self.m, self.n);
        if ones <= n - m {
            m + ones
        } else if ones == n {
            m + ones
        } else {
            n - ones
        }
    }
}

/// `Jump_{m,n}`: OneMax shifted by `m`, with a gap of width `m - 1` in front
/// of the all-ones optimum.
pub fn jump(params: JumpParams, x: &BitString) -> usize {
    debug_assert_eq!(x.len(), params.n);
    params.value_at(x.count_ones())
}

/// Net change in the number of ones after toggling `flips`.
fn ones_after_flips(x: &BitString, flips: &[usize]) -> usize {
    let turned_on = flips.iter().filter(|&&i| !x.get(i)).count();
    x.count_ones() + turned_on - (flips.len() - turned_on)
}

#[derive(Debug, Clone, Copy)]
pub struct OneMax {
    n: usize,
}

impl OneMax {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl SetFunction for OneMax {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &BitString) -> f64 {
        onemax(set) as f64
    }

    fn value_after_flips(&self, set: &BitString, current: f64, flips: &[usize]) -> Option<f64> {
        let gained = flips.iter().filter(|&&i| !set.get(i)).count() as f64;
        Some(current + 2.0 * gained - flips.len() as f64)
    }

    fn is_integral(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Jump {
    params: JumpParams,
}

impl Jump {
    pub fn new(params: JumpParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> JumpParams {
        self.params
    }
}

impl SetFunction for Jump {
    fn ground_size(&self) -> usize {
        self.params.n
    }

    fn value(&self, set: &BitString) -> f64 {
        jump(self.params, set) as f64
    }

    fn value_after_flips(&self, set: &BitString, _current: f64, flips: &[usize]) -> Option<f64> {
        Some(self.params.value_at(ones_after_flips(set, flips)) as f64)
    }

    fn is_integral(&self) -> bool {
        true
    }
}
