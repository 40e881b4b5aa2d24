use std::sync::Arc;

use crate::bitstring::BitString;

/// A function from subsets of `{0..n}` (given as characteristic vectors) to
/// the reals. Every fitness landscape in this crate implements it.
pub trait SetFunction: Send + Sync {
    fn ground_size(&self) -> usize;

    fn value(&self, set: &BitString) -> f64;

    /// Value of `set` with the positions in `flips` toggled, given
    /// `current == self.value(set)`.
    ///
    /// `flips` is ascending and duplicate-free. Returns `None` when the
    /// function has no incremental route; callers then fall back to
    /// [`SetFunction::value`] on a modified copy.
    fn value_after_flips(&self, set: &BitString, current: f64, flips: &[usize]) -> Option<f64> {
        let _ = (set, current, flips);
        None
    }

    /// Whether all values are integers, which lets callers compare exactly.
    fn is_integral(&self) -> bool {
        false
    }
}

macro_rules! forward_set_function {
    ($($ptr:ty),*) => {$(
        impl<F: SetFunction + ?Sized> SetFunction for $ptr {
            fn ground_size(&self) -> usize {
                (**self).ground_size()
            }
            fn value(&self, set: &BitString) -> f64 {
                (**self).value(set)
            }
            fn value_after_flips(&self, set: &BitString, current: f64, flips: &[usize]) -> Option<f64> {
                (**self).value_after_flips(set, current, flips)
            }
            fn is_integral(&self) -> bool {
                (**self).is_integral()
            }
        }
    )*};
}

forward_set_function!(&F, Box<F>, Arc<F>);

/// Adapts a closure into a [`SetFunction`]; handy for tests and ad-hoc
/// objectives.
pub struct FnSetFunction<F> {
    n: usize,
    f: F,
    integral: bool,
}

impl<F> FnSetFunction<F>
where
    F: Fn(&BitString) -> f64 + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f, integral: false }
    }

    pub fn integral(mut self) -> Self {
        self.integral = true;
        self
    }
}

impl<F> SetFunction for FnSetFunction<F>
where
    F: Fn(&BitString) -> f64 + Send + Sync,
{
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &BitString) -> f64 {
        (self.f)(set)
    }

    fn is_integral(&self) -> bool {
        self.integral
    }
}
