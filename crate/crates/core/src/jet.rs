//! First-order forward-mode jets in the two planar directions.
//!
//! A [`Jet`] carries a value together with its `x` and `y` partial
//! derivatives. Arithmetic applies the chain rule, so any field assembled
//! from jets comes with its gradient.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Num, Zero};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub dx: T,
    pub dy: T,
}

impl<T> Jet<T> {
    pub const fn new(value: T, dx: T, dy: T) -> Self {
        Self { value, dx, dy }
    }
}

impl<T: Copy + Zero> Jet<T> {
    pub fn constant(value: T) -> Self {
        Self { value, dx: T::zero(), dy: T::zero() }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }
}

impl<T: Copy + Num> Jet<T> {
    /// Multiplies value and derivatives by a constant.
    #[inline]
    pub fn scale(self, k: T) -> Self {
        Self { value: self.value * k, dx: self.dx * k, dy: self.dy * k }
    }

    /// Applies a scalar function with known derivative at the current value.
    #[inline]
    pub fn chain(self, value: T, derivative: T) -> Self {
        Self { value, dx: self.dx * derivative, dy: self.dy * derivative }
    }
}

impl<T: Copy + Num> Add for Jet<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self { value: self.value + o.value, dx: self.dx + o.dx, dy: self.dy + o.dy }
    }
}

impl<T: Copy + Num> Sub for Jet<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self { value: self.value - o.value, dx: self.dx - o.dx, dy: self.dy - o.dy }
    }
}

impl<T: Copy + Num> AddAssign for Jet<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Copy + Num> SubAssign for Jet<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Copy + Num + Neg<Output = T>> Neg for Jet<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self { value: -self.value, dx: -self.dx, dy: -self.dy }
    }
}

impl<T: Copy + Num> Mul for Jet<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self {
            value: self.value * o.value,
            dx: self.dx * o.value + self.value * o.dx,
            dy: self.dy * o.value + self.value * o.dy,
        }
    }
}

impl<T: Copy + Num> Div for Jet<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.value;
        let q = self.value * inv;
        Self { value: q, dx: (self.dx - q * o.dx) * inv, dy: (self.dy - q * o.dy) * inv }
    }
}

impl<F: Real> Jet<F> {
    /// The coordinate function `x`.
    pub fn x(x: F) -> Self {
        Self::new(x, F::one(), F::zero())
    }

    /// The coordinate function `y`.
    pub fn y(y: F) -> Self {
        Self::new(y, F::zero(), F::one())
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, F::lit(0.5) / s)
    }

    #[inline]
    pub fn ln(self) -> Self {
        self.chain(self.value.ln(), F::one() / self.value)
    }

    #[inline]
    pub fn recip(self) -> Self {
        let inv = F::one() / self.value;
        self.chain(inv, -inv * inv)
    }

    #[inline]
    pub fn powi(self, n: i32) -> Self {
        let v = self.value.powi(n);
        self.chain(v, F::from_i32(n).unwrap() * self.value.powi(n - 1))
    }

    /// Squared gradient norm `|∇f|²`.
    #[inline]
    pub fn grad_norm_sqr(&self) -> F {
        self.dx * self.dx + self.dy * self.dy
    }

    #[inline]
    pub fn to_complex(self) -> Jet<Complex<F>> {
        Jet::new(
            Complex::new(self.value, F::zero()),
            Complex::new(self.dx, F::zero()),
            Complex::new(self.dy, F::zero()),
        )
    }
}

impl<F: Real> Jet<Complex<F>> {
    /// The identity map `z ↦ z`: derivative 1 along `x` and `i` along `y`.
    pub fn z(z: Complex<F>) -> Self {
        Self::new(z, Complex::new(F::one(), F::zero()), Complex::new(F::zero(), F::one()))
    }

    /// The conjugate identity `z ↦ z̄`.
    pub fn zbar(z: Complex<F>) -> Self {
        Self::new(z.conj(), Complex::new(F::one(), F::zero()), Complex::new(F::zero(), -F::one()))
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.value.conj(), self.dx.conj(), self.dy.conj())
    }

    #[inline]
    pub fn re(self) -> Jet<F> {
        Jet::new(self.value.re, self.dx.re, self.dy.re)
    }

    #[inline]
    pub fn im(self) -> Jet<F> {
        Jet::new(self.value.im, self.dx.im, self.dy.im)
    }

    /// `|w|²` with derivative `2 Re(w̄ ∂w)`.
    #[inline]
    pub fn norm_sqr(self) -> Jet<F> {
        let two = F::lit(2.0);
        let v = self.value;
        Jet::new(v.norm_sqr(), two * (v.conj() * self.dx).re, two * (v.conj() * self.dy).re)
    }

    /// `Re(w₁ w̄₂)`, the real inner product of two complex jets.
    #[inline]
    pub fn real_dot(self, o: Self) -> Jet<F> {
        (self * o.conj()).re()
    }

    #[inline]
    pub fn mul_real(self, k: Jet<F>) -> Self {
        self * k.to_complex()
    }

    #[inline]
    pub fn div_real(self, k: Jet<F>) -> Self {
        let inv = k.recip();
        self.mul_real(inv)
    }

    #[inline]
    pub fn scale_real(self, k: F) -> Self {
        self.scale(Complex::new(k, F::zero()))
    }
}

/// Minimal arithmetic needed by [`Vec3`].
pub trait Ring: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Zero {}

impl<T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Zero> Ring for T {}

impl<T: Copy + Num> Zero for Jet<T> {
    fn zero() -> Self {
        Self::constant(T::zero())
    }

    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.dx.is_zero() && self.dy.is_zero()
    }
}

/// A Cartesian 3-vector with components of any ring-like type.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Ring> Vec3<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self([a, b, c])
    }

    pub fn zero() -> Self {
        Self([T::zero(); 3])
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Self([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    #[inline]
    pub fn norm_sqr(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn scale(&self, k: T) -> Self {
        Self(self.0.map(|c| c * k))
    }
}

impl<T: Ring> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Ring> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Ring + Neg<Output = T>> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

/// A 3-vector field sample: value with both planar derivatives.
pub type VecJet<F> = Vec3<Jet<F>>;

impl<F: Real> Vec3<Jet<F>> {
    pub fn value(&self) -> Vec3<F> {
        Vec3(self.0.map(|c| c.value))
    }

    pub fn dx(&self) -> Vec3<F> {
        Vec3(self.0.map(|c| c.dx))
    }

    pub fn dy(&self) -> Vec3<F> {
        Vec3(self.0.map(|c| c.dy))
    }

    /// Pointwise `∇a : ∇b = Σ_k ∇a_k · ∇b_k`.
    #[inline]
    pub fn grad_inner(&self, o: &Self) -> F {
        let mut s = F::zero();
        for k in 0..3 {
            s = s + self.0[k].dx * o.0[k].dx + self.0[k].dy * o.0[k].dy;
        }
        s
    }

    /// Pointwise `|∇a|²`.
    #[inline]
    pub fn grad_norm_sqr(&self) -> F {
        self.grad_inner(self)
    }

    /// Builds a jet from a complex first component pair `(Re w, Im w)` and a real third component.
    #[inline]
    pub fn from_complex_real(w: Jet<Complex<F>>, t: Jet<F>) -> Self {
        Vec3([w.re(), w.im(), t])
    }

    #[inline]
    pub fn scale_jet(&self, k: Jet<F>) -> Self {
        Vec3(self.0.map(|c| c * k))
    }

    #[inline]
    pub fn scale_real(&self, k: F) -> Self {
        Vec3(self.0.map(|c| c.scale(k)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<G: Fn(f64, f64) -> f64>(g: G, x: f64, y: f64) -> (f64, f64) {
        let h = 1e-6;
        ((g(x + h, y) - g(x - h, y)) / (2.0 * h), (g(x, y + h) - g(x, y - h)) / (2.0 * h))
    }

    #[test]
    fn quotient_and_sqrt_match_finite_differences() {
        let f = |x: Jet<f64>, y: Jet<f64>| ((x * x + y * y + Jet::constant(1.0)).sqrt() / (x + Jet::constant(3.0))).ln();
        let (x0, y0) = (0.3, -0.7);
        let j = f(Jet::x(x0), Jet::y(y0));
        let (gx, gy) = fd(|x, y| f(Jet::constant(x), Jet::constant(y)).value, x0, y0);
        assert!((j.dx - gx).abs() < 1e-8);
        assert!((j.dy - gy).abs() < 1e-8);
    }

    #[test]
    fn complex_identity_has_cauchy_riemann_derivatives() {
        let z = Complex::new(1.0f64, 1.0);
        let sq = Jet::z(z) * Jet::z(z);
        assert_eq!(sq.value, Complex::new(0.0, 2.0));
        assert_eq!(sq.dx, Complex::new(2.0, 2.0));
        assert_eq!(sq.dy, Complex::new(-2.0, 2.0));
        let n = sq.norm_sqr();
        // |z²|² = |z|⁴, ∂x = 4x|z|²
        assert!((n.value - 4.0).abs() < 1e-15);
        assert!((n.dx - 8.0).abs() < 1e-14);
    }

    #[test]
    fn cross_product_is_antisymmetric_and_orthogonal() {
        let a = Vec3::new(1.0f64, 2.0, 3.0);
        let b = Vec3::new(-2.0, 0.5, 4.0);
        let c = a.cross(&b);
        assert_eq!(c, -b.cross(&a));
        assert!(c.dot(&a).abs() < 1e-14 && c.dot(&b).abs() < 1e-14);
    }
}
