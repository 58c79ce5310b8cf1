//! Compensated accumulation used by every quadrature reduction.

use crate::scalar::Real;

/// Neumaier's variant of Kahan summation.
///
/// The result does not depend on anything but the order of `add` calls, so a
/// fixed iteration order gives bit-identical sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum<F> {
    sum: F,
    comp: F,
}

impl<F: Real> NeumaierSum<F> {
    pub fn new() -> Self {
        Self { sum: F::zero(), comp: F::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> F {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice, in slice order.
pub fn compensated_sum<F: Real>(xs: impl IntoIterator<Item = F>) -> F {
    let mut acc = NeumaierSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
    }
}
