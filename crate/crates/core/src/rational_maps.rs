//! Complex polynomials, rational maps and Möbius transformations.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::Real;

/// Relative coefficient threshold used for irreducibility checks.
pub const GCD_TOL: f64 = 1e-10;

/// Polynomial in one complex variable, coefficients in ascending degree.
///
/// The leading stored coefficient is nonzero; the zero polynomial has no
/// coefficients at all.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPoly<F> {
    coeffs: Vec<Complex<F>>,
}

impl<F: Real> ComplexPoly<F> {
    pub fn new(mut coeffs: Vec<Complex<F>>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex<F>) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `z`.
    pub fn identity() -> Self {
        Self::new(vec![Complex::zero(), Complex::one()])
    }

    /// Builds the monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex<F>]) -> Self {
        let mut p = Self::constant(Complex::one());
        for &z0 in roots {
            p = &p * &Self::new(vec![-z0, Complex::one()]);
        }
        p
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex::new(F::lit(c), F::zero())).collect())
    }

    pub fn coeffs(&self) -> &[Complex<F>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Complex<F>> {
        self.coeffs.last().copied()
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> F {
        self.coeffs.iter().fold(F::zero(), |m, c| m.max(c.norm()))
    }

    pub fn eval(&self, z: Complex<F>) -> Complex<F> {
        self.coeffs.iter().rev().fold(Complex::zero(), |acc, &c| acc * z + c)
    }

    /// Value and complex derivative by a fused Horner recurrence.
    pub fn eval_with_derivative(&self, z: Complex<F>) -> (Complex<F>, Complex<F>) {
        let mut p = Complex::zero();
        let mut dp = Complex::zero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Value with planar derivatives.
    ///
    /// For the holomorphic orientation `∂x p = p'(z)` and `∂y p = i p'(z)`.
    /// For the anti-holomorphic one the polynomial is evaluated at `z̄`, so
    /// `∂x = p'(z̄)` and `∂y = -i p'(z̄)`.
    pub fn eval_jet(&self, z: Complex<F>, orientation: Orientation) -> Jet<Complex<F>> {
        match orientation {
            Orientation::Holomorphic => {
                let (p, dp) = self.eval_with_derivative(z);
                Jet::new(p, dp, dp * Complex::i())
            }
            Orientation::AntiHolomorphic => {
                let (p, dp) = self.eval_with_derivative(z.conj());
                Jet::new(p, dp, -dp * Complex::i())
            }
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * F::from_usize(k).unwrap())
                .collect(),
        )
    }

    pub fn scale(&self, k: Complex<F>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    /// Coefficient-wise conjugate, i.e. the polynomial `conj(p(conj z))`.
    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Euclidean division `self = q·d + rem`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.coeffs[dd];
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![Complex::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let f = rem[k + dd] / lead;
            quot[k] = f;
            for (j, &c) in d.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j] - f * c;
            }
            rem[k + dd] = Complex::zero();
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// Drops leading coefficients whose modulus is at most `thresh`.
    fn trim_below(mut self, thresh: F) -> Self {
        while self.coeffs.last().is_some_and(|c| c.norm() <= thresh) {
            self.coeffs.pop();
        }
        self
    }

    fn normalized(&self) -> Self {
        let m = self.max_norm();
        if m > F::zero() {
            self.scale(Complex::new(F::one() / m, F::zero()))
        } else {
            self.clone()
        }
    }

    /// All complex roots by Durand–Kerner iteration, in no particular order.
    pub fn roots(&self) -> Vec<Complex<F>> {
        let Some(n) = self.degree() else { return Vec::new() };
        if n == 0 {
            return Vec::new();
        }
        let lead = self.coeffs[n];
        let monic: Vec<_> = self.coeffs.iter().map(|&c| c / lead).collect();
        let monic = Self { coeffs: monic };
        let bound = F::one() + monic.coeffs[..n].iter().fold(F::zero(), |m, c| m.max(c.norm()));
        let seed = Complex::new(F::lit(0.4), F::lit(0.9));
        let mut z: Vec<Complex<F>> = (0..n)
            .map(|k| seed.powu(k as u32) * bound)
            .collect();
        let tol = F::epsilon() * F::lit(4.0);
        for _ in 0..500 {
            let mut delta = F::zero();
            for i in 0..n {
                let mut den = Complex::one();
                for j in 0..n {
                    if i != j {
                        den = den * (z[i] - z[j]);
                    }
                }
                let step = monic.eval(z[i]) / den;
                z[i] = z[i] - step;
                delta = delta.max(step.norm() / (F::one() + z[i].norm()));
            }
            if delta <= tol {
                break;
            }
        }
        z
    }
}

impl<F: Real> std::ops::Add for &ComplexPoly<F> {
    type Output = ComplexPoly<F>;
    fn add(self, o: Self) -> ComplexPoly<F> {
        let n = self.coeffs.len().max(o.coeffs.len());
        let get = |v: &[Complex<F>], k: usize| v.get(k).copied().unwrap_or_else(Complex::zero);
        ComplexPoly::new((0..n).map(|k| get(&self.coeffs, k) + get(&o.coeffs, k)).collect())
    }
}

impl<F: Real> std::ops::Sub for &ComplexPoly<F> {
    type Output = ComplexPoly<F>;
    fn sub(self, o: Self) -> ComplexPoly<F> {
        self + &o.scale(-Complex::one())
    }
}

impl<F: Real> std::ops::Mul for &ComplexPoly<F> {
    type Output = ComplexPoly<F>;
    fn mul(self, o: Self) -> ComplexPoly<F> {
        if self.is_zero() || o.is_zero() {
            return ComplexPoly::zero();
        }
        let mut out = vec![Complex::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        ComplexPoly::new(out)
    }
}

/// Degree of the numerical gcd of `p` and `q`.
///
/// Runs the Euclidean remainder sequence on max-norm normalized polynomials;
/// a remainder whose coefficients are all below `tol` counts as zero, and
/// leading remainder coefficients below `tol` are discarded.
pub fn gcd_degree<F: Real>(p: &ComplexPoly<F>, q: &ComplexPoly<F>, tol: F) -> usize {
    let (mut a, mut b) = (p.normalized(), q.normalized());
    if a.is_zero() {
        return b.degree().unwrap_or(0);
    }
    if b.is_zero() {
        return a.degree().unwrap_or(0);
    }
    if a.degree() < b.degree() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.degree() == Some(0) {
            return 0;
        }
        let (_, rem) = a.div_rem(&b);
        if rem.max_norm() <= tol {
            return b.degree().unwrap_or(0);
        }
        let rem = rem.normalized().trim_below(tol);
        a = b;
        b = rem;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    #[serde(rename = "holo")]
    Holomorphic,
    #[serde(rename = "anti")]
    AntiHolomorphic,
}

impl Orientation {
    /// `+1` for holomorphic maps, `-1` for anti-holomorphic ones.
    pub fn sign(self) -> i32 {
        match self {
            Self::Holomorphic => 1,
            Self::AntiHolomorphic => -1,
        }
    }
}

/// An irreducible pair `(p, q)`; the harmonic map it defines is `𝒮(p/q)`,
/// with `z` replaced by `z̄` for the anti-holomorphic orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap<F> {
    p: ComplexPoly<F>,
    q: ComplexPoly<F>,
    orientation: Orientation,
}

impl<F: Real> RationalMap<F> {
    /// Validates `q ≠ 0` and irreducibility at the default tolerance.
    pub fn new(p: ComplexPoly<F>, q: ComplexPoly<F>, orientation: Orientation) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let g = gcd_degree(&p, &q, F::lit(GCD_TOL));
        if g > 0 {
            return Err(Error::NotIrreducible(g));
        }
        Ok(Self { p, q, orientation })
    }

    pub fn holomorphic(p: ComplexPoly<F>, q: ComplexPoly<F>) -> Result<Self> {
        Self::new(p, q, Orientation::Holomorphic)
    }

    /// The identity map `z`, a degree one harmonic map.
    pub fn identity() -> Self {
        Self { p: ComplexPoly::identity(), q: ComplexPoly::constant(Complex::one()), orientation: Orientation::Holomorphic }
    }

    pub fn p(&self) -> &ComplexPoly<F> {
        &self.p
    }

    pub fn q(&self) -> &ComplexPoly<F> {
        &self.q
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Signed topological degree `±max(deg p, deg q)`.
    pub fn degree(&self) -> i64 {
        let d = self.p.degree().unwrap_or(0).max(self.q.degree().unwrap_or(0)) as i64;
        d * self.orientation.sign() as i64
    }

    /// `p/q` at `z` (or at `z̄`); `None` at a pole.
    pub fn eval(&self, z: Complex<F>) -> Option<Complex<F>> {
        let w = match self.orientation {
            Orientation::Holomorphic => z,
            Orientation::AntiHolomorphic => z.conj(),
        };
        let d = self.q.eval(w);
        if d.is_zero() {
            None
        } else {
            Some(self.p.eval(w) / d)
        }
    }

    /// Numerator and denominator jets at `z`.
    pub fn eval_jets(&self, z: Complex<F>) -> (Jet<Complex<F>>, Jet<Complex<F>>) {
        (self.p.eval_jet(z, self.orientation), self.q.eval_jet(z, self.orientation))
    }

    /// Divides `p` and `q` by the leading coefficient of `p`.
    pub fn normalize_monic(&self) -> Result<Self> {
        let lead = self.p.leading().ok_or(Error::ZeroNumerator)?;
        let inv = Complex::<F>::one() / lead;
        let mut p = self.p.scale(inv);
        if let Some(c) = p.coeffs.last_mut() {
            *c = Complex::one();
        }
        Ok(Self { p, q: self.q.scale(inv), orientation: self.orientation })
    }

    /// `(p/q) ∘ F` with denominators cleared, renormalized monic.
    pub fn compose_moebius(&self, f: &Moebius<F>) -> Result<Self> {
        f.check()?;
        // For z ↦ p(z̄)/q(z̄), composing with F amounts to composing p/q with
        // the Möbius map whose coefficients are conjugated.
        let g = match self.orientation {
            Orientation::Holomorphic => *f,
            Orientation::AntiHolomorphic => f.conj(),
        };
        let n = self.p.degree().unwrap_or(0).max(self.q.degree().unwrap_or(0));
        let num = ComplexPoly::new(vec![g.b, g.a]);
        let den = ComplexPoly::new(vec![g.d, g.c]);
        let mut num_pows = vec![ComplexPoly::constant(Complex::one())];
        let mut den_pows = vec![ComplexPoly::constant(Complex::one())];
        for k in 1..=n {
            num_pows.push(&num_pows[k - 1] * &num);
            den_pows.push(&den_pows[k - 1] * &den);
        }
        let clear = |poly: &ComplexPoly<F>| {
            let mut acc = ComplexPoly::zero();
            for (k, &c) in poly.coeffs().iter().enumerate() {
                acc = &acc + &(&num_pows[k] * &den_pows[n - k]).scale(c);
            }
            acc
        };
        let out = Self { p: clear(&self.p), q: clear(&self.q), orientation: self.orientation };
        if out.q.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        out.normalize_monic()
    }

    /// Coefficient distance `|·|_∞` between monic normal forms.
    pub fn coeff_distance(&self, other: &Self) -> Result<F> {
        let a = self.normalize_monic()?;
        let b = other.normalize_monic()?;
        let diff = |x: &ComplexPoly<F>, y: &ComplexPoly<F>| (x - y).max_norm();
        Ok(diff(&a.p, &b.p).max(diff(&a.q, &b.q)))
    }
}

/// `z ↦ (az + b)/(cz + d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moebius<F> {
    pub a: Complex<F>,
    pub b: Complex<F>,
    pub c: Complex<F>,
    pub d: Complex<F>,
}

impl<F: Real> Moebius<F> {
    pub fn new(a: Complex<F>, b: Complex<F>, c: Complex<F>, d: Complex<F>) -> Result<Self> {
        let m = Self { a, b, c, d };
        m.check()?;
        Ok(m)
    }

    pub fn identity() -> Self {
        Self { a: Complex::one(), b: Complex::zero(), c: Complex::zero(), d: Complex::one() }
    }

    pub fn determinant(&self) -> Complex<F> {
        self.a * self.d - self.b * self.c
    }

    fn check(&self) -> Result<()> {
        let scale = [self.a, self.b, self.c, self.d].iter().fold(F::zero(), |m, c| m.max(c.norm()));
        let det = self.determinant().norm();
        if !(det > F::lit(1e-12) * scale * scale) {
            return Err(Error::DegenerateMoebius(det.as_f64()));
        }
        Ok(())
    }

    pub fn apply(&self, z: Complex<F>) -> Complex<F> {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Self) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    fn conj(&self) -> Self {
        Self { a: self.a.conj(), b: self.b.conj(), c: self.c.conj(), d: self.d.conj() }
    }
}

// JSON: polynomials as arrays of [re, im] pairs, ascending degree.

impl<F: Real + Serialize> Serialize for ComplexPoly<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[F; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de, F: Real + Deserialize<'de>> Deserialize<'de> for ComplexPoly<F> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[F; 2]>::deserialize(d)?;
        Ok(Self::new(pairs.into_iter().map(|[re, im]| Complex::new(re, im)).collect()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "F: Real + Serialize", deserialize = "F: Real + Deserialize<'de>"))]
struct MapRepr<F> {
    p: ComplexPoly<F>,
    q: ComplexPoly<F>,
    #[serde(default)]
    orientation: Orientation,
}

impl<F: Real + Serialize> Serialize for RationalMap<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapRepr { p: self.p.clone(), q: self.q.clone(), orientation: self.orientation }.serialize(s)
    }
}

impl<'de, F: Real + Deserialize<'de>> Deserialize<'de> for RationalMap<F> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MapRepr::<F>::deserialize(d)?;
        Self::new(r.p, r.q, r.orientation).map_err(D::Error::custom)
    }
}

impl<F: Real> fmt::Display for ComplexPoly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})z"),
                _ => format!("({c})z^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
