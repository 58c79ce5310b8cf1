//! Sphere-valued fields with first derivatives, their perturbations along
//! tangent fields, and pointwise densities.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::jet::{Jet, Vec3, VecJet};
use crate::rational_maps::RationalMap;
use crate::scalar::Real;

/// A map `ℝ² → ℝ³` evaluated together with its planar derivatives.
///
/// Sphere-valued fields, tangent perturbations and kernel fields all share
/// this interface.
pub trait Field<F: Real>: Sync {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>>;
}

impl<F: Real, T: Field<F> + ?Sized> Field<F> for &T {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        (**self).eval(z)
    }
}

impl<F: Real, T: Field<F> + ?Sized> Field<F> for Box<T> {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        (**self).eval(z)
    }
}

/// Adapter turning a closure into a [`Field`].
pub struct FnField<G>(pub G);

impl<F: Real, G: Fn(Complex<F>) -> Result<VecJet<F>> + Sync> Field<F> for FnField<G> {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        (self.0)(z)
    }
}

/// A constant field.
pub struct ConstantField<F>(pub Vec3<F>);

impl<F: Real> Field<F> for ConstantField<F> {
    fn eval(&self, _z: Complex<F>) -> Result<VecJet<F>> {
        Ok(Vec3(self.0 .0.map(Jet::constant)))
    }
}

/// Homogeneous stereographic lift of a pair `(N, D)`:
/// `(2 N D̄, |N|² − |D|²) / (|N|² + |D|²)`.
///
/// This is `𝒮(N/D)` and stays smooth through poles of `N/D`.
#[inline]
pub fn stereo_homogeneous<F: Real>(n: Jet<Complex<F>>, d: Jet<Complex<F>>) -> Result<VecJet<F>> {
    let nn = n.norm_sqr();
    let dd = d.norm_sqr();
    let s = nn + dd;
    if !(s.value > F::zero()) || !s.value.is_finite() {
        return Err(Error::PoleHit { x: f64::NAN, y: f64::NAN });
    }
    let inv = s.recip();
    let w = (n * d.conj()).mul_real(inv).scale_real(F::lit(2.0));
    Ok(Vec3::from_complex_real(w, (nn - dd) * inv))
}

/// Inverse stereographic projection of a complex number (value only).
pub fn stereo<F: Real>(w: Complex<F>) -> Vec3<F> {
    let n = w.norm_sqr();
    let s = F::one() + n;
    let two = F::lit(2.0);
    Vec3::new(two * w.re / s, two * w.im / s, (n - F::one()) / s)
}

/// `𝒮(p/q)` for a rational map.
#[derive(Clone, Debug)]
pub struct Lift<F> {
    map: RationalMap<F>,
}

pub fn lift<F: Real>(m: RationalMap<F>) -> Lift<F> {
    Lift { map: m }
}

impl<F: Real> Lift<F> {
    pub fn map(&self) -> &RationalMap<F> {
        &self.map
    }
}

impl<F: Real> Field<F> for Lift<F> {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        let (n, d) = self.map.eval_jets(z);
        stereo_homogeneous(n, d).map_err(|_| Error::PoleHit { x: z.re.as_f64(), y: z.im.as_f64() })
    }
}

/// `|∇𝒮(p/q)|²` in the cleared form `8|p'q − pq'|² / (|p|² + |q|²)²`.
pub fn dirichlet_density<F: Real>(m: &RationalMap<F>, z: Complex<F>) -> F {
    let w = match m.orientation() {
        crate::rational_maps::Orientation::Holomorphic => z,
        crate::rational_maps::Orientation::AntiHolomorphic => z.conj(),
    };
    let (p, dp) = m.p().eval_with_derivative(w);
    let (q, dq) = m.q().eval_with_derivative(w);
    let s = p.norm_sqr() + q.norm_sqr();
    F::lit(8.0) * (dp * q - p * dq).norm_sqr() / (s * s)
}

/// Energy density `|∇u|²` from a jet.
#[inline]
pub fn energy_density<F: Real>(u: &VecJet<F>) -> F {
    u.grad_norm_sqr()
}

/// Degree density `u · (u_y × u_x)`; integrates to `4π deg u`.
#[inline]
pub fn degree_density<F: Real>(u: &VecJet<F>) -> F {
    u.value().dot(&u.dy().cross(&u.dx()))
}

/// Pointwise densities of a sphere-valued field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensitySample<F> {
    pub dirichlet: F,
    pub degree: F,
}

pub fn sample<F: Real>(u: &impl Field<F>, z: Complex<F>) -> Result<DensitySample<F>> {
    let j = u.eval(z)?;
    Ok(DensitySample { dirichlet: energy_density(&j), degree: degree_density(&j) })
}

/// Hopf differential `u_y·u_y − u_x·u_x + 2i u_x·u_y`.
pub fn hopf_differential<F: Real>(u: &VecJet<F>) -> Complex<F> {
    let (ux, uy) = (u.dx(), u.dy());
    Complex::new(uy.norm_sqr() - ux.norm_sqr(), F::lit(2.0) * ux.dot(&uy))
}

/// Pointwise energy excess over the degree bound.
///
/// Returns `½|u_x − σ u × u_y|²`, which integrates to
/// `𝓔(u) − 4πσ deg u`. With `σ = sign(deg u)` this is the energy deficit as
/// a sum of non-negative terms, free of the cancellation in `𝓔 − 4π|d|`.
#[inline]
pub fn bogomolnyi_density<F: Real>(u: &VecJet<F>, sigma: F) -> F {
    let r = u.dx() - u.value().cross(&u.dy()).scale(sigma);
    F::lit(0.5) * r.norm_sqr()
}

/// `u = εv + √(1 − ε²|v|²) Φ` for a tangent field `v` along `Φ`.
pub struct PerturbedField<B, V, F> {
    pub base: B,
    pub v: V,
    pub eps: F,
}

/// Tolerance on `|v·Φ|` relative to `1 + |v|`.
pub const TANGENCY_TOL: f64 = 1e-8;

pub fn perturb_on_sphere<F: Real, B: Field<F>, V: Field<F>>(base: B, v: V, eps: F) -> PerturbedField<B, V, F> {
    PerturbedField { base, v, eps }
}

/// Pieces of a perturbation at one point.
pub struct PerturbationSample<F: Real> {
    pub base: VecJet<F>,
    pub v: VecJet<F>,
    /// `u − Φ`, evaluated without cancellation.
    pub displacement: VecJet<F>,
}

impl<F: Real, B: Field<F>, V: Field<F>> PerturbedField<B, V, F> {
    /// Evaluates `Φ`, `v` and `u − Φ = εv − ε²|v|²/(1 + √(1 − ε²|v|²)) Φ`.
    pub fn parts(&self, z: Complex<F>) -> Result<PerturbationSample<F>> {
        let phi = self.base.eval(z)?;
        let v = self.v.eval(z)?;
        let (x, y) = (z.re.as_f64(), z.im.as_f64());
        let vv = v.value();
        let tang = vv.dot(&phi.value()).abs();
        if tang.as_f64() > TANGENCY_TOL * (1.0 + vv.norm_sqr().sqrt().as_f64()) {
            return Err(Error::TangencyViolation { x, y, residual: tang.as_f64() });
        }
        let e2 = Jet::constant(self.eps * self.eps);
        let a = e2 * v.dot(&v);
        if !(a.value < F::one()) {
            return Err(Error::AmplitudeTooLarge { x, y, value: a.value.as_f64() });
        }
        let root = (Jet::constant(F::one()) - a).sqrt();
        let shrink = a / (Jet::constant(F::one()) + root);
        let disp = v.scale_real(self.eps) - phi.scale_jet(shrink);
        Ok(PerturbationSample { base: phi, v, displacement: disp })
    }
}

impl<F: Real, B: Field<F>, V: Field<F>> Field<F> for PerturbedField<B, V, F> {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        let s = self.parts(z)?;
        let a = Jet::constant(self.eps * self.eps) * s.v.dot(&s.v);
        let root = (Jet::constant(F::one()) - a).sqrt();
        Ok(s.v.scale_real(self.eps) + s.base.scale_jet(root))
    }
}

/// Samples `(x, y, u1, u2, u3)` as CSV for plotting.
pub fn dump_csv<F: Real>(u: &impl Field<F>, points: &[Complex<F>]) -> Result<String> {
    let mut out = String::from("x,y,u1,u2,u3\n");
    for &z in points {
        let v = u.eval(z)?.value();
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", z.re, z.im, v.0[0], v.0[1], v.0[2]).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational_maps::{ComplexPoly, Orientation};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn psi_map(r: f64) -> RationalMap<f64> {
        RationalMap::holomorphic(ComplexPoly::new(vec![c(0.0, -2.0 * r * r), c(0.0, 0.0), c(1.0, 0.0)]), ComplexPoly::from_real(&[1.0])).unwrap()
    }

    #[test]
    fn lift_of_identity_at_origin_is_south_pole() {
        let u = lift(RationalMap::identity()).eval(c(0.0, 0.0)).unwrap().value();
        assert_eq!(u, Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn lift_tends_to_north_pole() {
        let u = lift(RationalMap::identity()).eval(c(1e8, 0.0)).unwrap().value();
        assert!((u.0[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lift_of_psi_hits_south_pole_at_center() {
        let r = 4.0;
        let u = lift(psi_map(r)).eval(c(r, r)).unwrap().value();
        assert!((u.0[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn lift_passes_through_poles() {
        let m = RationalMap::holomorphic(ComplexPoly::from_real(&[1.0]), ComplexPoly::from_real(&[0.0, 1.0])).unwrap();
        let u = lift(m).eval(c(0.0, 0.0)).unwrap();
        assert_eq!(u.value(), Vec3::new(0.0, 0.0, 1.0));
        assert!(u.grad_norm_sqr().is_finite());
    }

    #[test]
    fn dirichlet_density_examples() {
        assert!((dirichlet_density(&RationalMap::identity(), c(0.0, 0.0)) - 8.0).abs() < 1e-15);
        let r = 2.5;
        assert_eq!(dirichlet_density(&psi_map(r), c(0.0, 0.0)), 0.0);
        for z in [c(0.3, -1.0), c(2.0, 2.5), c(-4.0, 1.0)] {
            let p = z * z - c(0.0, 2.0 * r * r);
            let expect = 32.0 * z.norm_sqr() / (1.0 + p.norm_sqr()).powi(2);
            let got = dirichlet_density(&psi_map(r), z);
            assert!((got - expect).abs() <= 1e-13 * expect);
            let jet = lift(psi_map(r)).eval(z).unwrap();
            assert!((jet.grad_norm_sqr() - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn degree_density_sign_and_bound() {
        let u = lift(RationalMap::identity()).eval(c(0.0, 0.0)).unwrap();
        assert!((degree_density(&u) - 4.0).abs() < 1e-14);
        let anti = RationalMap::identity().with_orientation(Orientation::AntiHolomorphic);
        let u = lift(anti).eval(c(0.2, 0.1)).unwrap();
        assert!(degree_density(&u) < 0.0);
        let k = ConstantField(Vec3::new(0.0, 0.0, 1.0)).eval(c(1.0, 1.0)).unwrap();
        assert_eq!(degree_density(&k), 0.0);
    }

    #[test]
    fn bogomolnyi_density_vanishes_on_holomorphic_lifts() {
        let u = lift(psi_map(3.0));
        for z in [c(0.1, 0.2), c(3.0, 2.9), c(-5.0, 1.0)] {
            let j = u.eval(z).unwrap();
            assert!(bogomolnyi_density(&j, 1.0) <= 1e-14 * j.grad_norm_sqr());
            let excess = bogomolnyi_density(&j, 1.0) - 0.5 * j.grad_norm_sqr() + degree_density(&j);
            // ½|u_x − u×u_y|² = ½|∇u|² − u·(u_y×u_x)
            assert!(excess.abs() <= 1e-12 * j.grad_norm_sqr());
        }
    }

    #[test]
    fn hopf_vanishes_for_constant_and_lifts() {
        let k = ConstantField(Vec3::new(1.0, 0.0, 0.0)).eval(c(1.0, 1.0)).unwrap();
        assert_eq!(hopf_differential(&k), c(0.0, 0.0));
        let u = lift(psi_map(2.0)).eval(c(1.3, -0.7)).unwrap();
        assert!(hopf_differential(&u).norm() <= 1e-12 * u.grad_norm_sqr());
    }

    /// `v = e₃ × Φ`: a smooth tangent field.
    fn rotation(base: Lift<f64>) -> impl Field<f64> {
        FnField(move |z| {
            let p = base.eval(z)?;
            let e3 = Vec3::new(Jet::zero(), Jet::zero(), Jet::constant(1.0));
            Ok(e3.cross(&p))
        })
    }

    #[test]
    fn perturbation_stays_on_sphere() {
        let base = lift(psi_map(1.0));
        let u0 = perturb_on_sphere(base.clone(), rotation(base.clone()), 0.0);
        let z = c(0.4, 0.9);
        assert_eq!(u0.eval(z).unwrap(), base.eval(z).unwrap());
        let u = perturb_on_sphere(base.clone(), rotation(base.clone()), 0.1);
        for z in [c(0.4, 0.9), c(-2.0, 0.1), c(3.0, 3.0)] {
            let j = u.eval(z).unwrap();
            assert!((j.value().norm_sqr() - 1.0).abs() < 1e-15);
            assert!(j.value().dot(&j.dx()).abs() < 1e-12);
            let s = u.parts(z).unwrap();
            let d = (j - s.base) - s.displacement;
            assert!(d.value().norm_sqr() < 1e-30);
        }
    }

    #[test]
    fn perturbation_rejects_normal_fields_and_large_amplitude() {
        let base = lift(psi_map(1.0));
        let b2 = base.clone();
        let normal = FnField(move |z| b2.eval(z));
        let u = perturb_on_sphere(base.clone(), normal, 0.1);
        assert!(matches!(u.eval(c(0.5, 0.5)), Err(Error::TangencyViolation { .. })));
        let u = perturb_on_sphere(base.clone(), rotation(base), 10.0);
        assert!(matches!(u.eval(c(0.5, 0.5)), Err(Error::AmplitudeTooLarge { .. })));
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let s = dump_csv(&lift(RationalMap::identity()), &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("x,y,u1,u2,u3"));
    }
}
