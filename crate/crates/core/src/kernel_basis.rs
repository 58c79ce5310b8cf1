//! The degree-2 family `Ψ[α] = (a z² + b z + c) / (1 − d z − e z²)`, its ten
//! kernel fields and their Gram matrix.
//!
//! Parameters are packed as `a = α₁ + iα₂`, `b = α₃ + iα₄`, `c = α₅ + iα₆`,
//! `d = α₇ + iα₈`, `e = α₉ + iα₁₀`. Indices in the public API are 1-based.
//!
//! The kernel fields are variations of the homogeneous pair `(N, D)`:
//!
//! | i | δN | δD | β |
//! |---|----|----|---|
//! | 1, 2 | `N`, `iN` | 0 | 0 |
//! | 3, 4 | `z`, `iz` | 0 | −1 |
//! | 5, 6 | `1`, `i` | 0 | 0 |
//! | 7, 8 | 0 | `−z`, `−iz` | −1 |
//! | 9, 10 | 0 | `−z²`, `−iz²` | −2 |
//!
//! each multiplied by `r^β`. They are the velocities of the retraction
//! [`ParamVec::retract`] along the coordinate axes.

use std::array;

use nalgebra::{SMatrix, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Vec3, VecJet};
use crate::quadrature::{integrate_vec_best_effort, QuadScheme};
use crate::rational_maps::{gcd_degree, ComplexPoly, RationalMap, GCD_TOL};
use crate::scalar::Real;
use crate::sphere_fields::{stereo_homogeneous, Field};

pub const DIM: usize = 10;

/// Scale exponents `β_i` (0-based storage).
pub const BETA: [i32; DIM] = [0, 0, -1, -1, 0, 0, -1, -1, -2, -2];

/// Absolute tolerance applied to every Gram entry.
pub const GRAM_ABS_TOL: f64 = 1e-9;

/// Block permutation of the Gram matrix (1-based indices).
pub const BLOCKS: [&[usize]; 4] = [&[1, 10, 6], &[2, 9, 5], &[3, 8], &[4, 7]];

/// Entry pairs whose Gram entries vanish at `α_r` (1-based, `i < j`).
pub const ZERO_PAIRS: [(usize, usize); 37] = [
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 7), (1, 8), (1, 9),
    (2, 3), (2, 4), (2, 6), (2, 7), (2, 8), (2, 10),
    (3, 4), (3, 5), (3, 6), (3, 7), (3, 9), (3, 10),
    (4, 5), (4, 6), (4, 8), (4, 9), (4, 10),
    (5, 6), (5, 7), (5, 8), (5, 10),
    (6, 7), (6, 8), (6, 9),
    (7, 8), (7, 9), (7, 10),
    (8, 9), (8, 10),
    (9, 10),
];

/// Upper-triangle pairs `(i, j)`, 0-based, `i ≤ j`, in row-major order.
pub fn upper_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..DIM).flat_map(|i| (i..DIM).map(move |j| (i, j)))
}

/// `r^{β_i}` for a 1-based index.
pub fn beta_scale<F: Real>(i: usize, r: F) -> F {
    r.powi(BETA[i - 1])
}

/// A point of the parameter space ℝ¹⁰.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVec<F>(pub [F; DIM]);

impl<F: Real> ParamVec<F> {
    /// The base point with `Ψ[α_r](z) = z² − 2ir² = (z − r − ir)(z + r + ir)`.
    pub fn alpha_r(r: F) -> Self {
        let mut a = [F::zero(); DIM];
        a[0] = F::one();
        a[5] = -F::lit(2.0) * r * r;
        Self(a)
    }

    /// `[a, b, c, d, e]`.
    pub fn coeffs(&self) -> [Complex<F>; 5] {
        array::from_fn(|k| Complex::new(self.0[2 * k], self.0[2 * k + 1]))
    }

    pub fn from_coeffs(c: [Complex<F>; 5]) -> Self {
        Self(array::from_fn(|k| if k % 2 == 0 { c[k / 2].re } else { c[k / 2].im }))
    }

    pub fn numerator(&self) -> ComplexPoly<F> {
        let [a, b, c, _, _] = self.coeffs();
        ComplexPoly::new(vec![c, b, a])
    }

    pub fn denominator(&self) -> ComplexPoly<F> {
        let [_, _, _, d, e] = self.coeffs();
        ComplexPoly::new(vec![Complex::new(F::one(), F::zero()), -d, -e])
    }

    /// Checks `a ≠ 0` and coprimality of numerator and denominator.
    pub fn validate(&self) -> Result<()> {
        if self.coeffs()[0].norm() == F::zero() {
            return Err(Error::Invalid("leading coefficient a = α₁ + iα₂ vanishes".into()));
        }
        let g = gcd_degree(&self.numerator(), &self.denominator(), F::lit(GCD_TOL));
        if g > 0 {
            return Err(Error::NotIrreducible(g));
        }
        Ok(())
    }

    pub fn to_map(&self) -> Result<RationalMap<F>> {
        self.validate()?;
        RationalMap::holomorphic(self.numerator(), self.denominator())
    }

    /// Reads the parameters of a holomorphic map of degree at most 2 whose
    /// denominator does not vanish at the origin.
    pub fn from_map(m: &RationalMap<F>) -> Result<Self> {
        if m.orientation() != crate::rational_maps::Orientation::Holomorphic {
            return Err(Error::Invalid("family is holomorphic".into()));
        }
        let coef = |p: &ComplexPoly<F>, k: usize| p.coeffs().get(k).copied().unwrap_or(Complex::new(F::zero(), F::zero()));
        if m.p().degree().unwrap_or(0) > 2 || m.q().degree().unwrap_or(0) > 2 {
            return Err(Error::Invalid("degree exceeds 2".into()));
        }
        let q0 = coef(m.q(), 0);
        if q0.norm() == F::zero() {
            return Err(Error::Invalid("denominator vanishes at the origin".into()));
        }
        let (p, q) = (m.p(), m.q());
        let out = Self::from_coeffs([coef(p, 2) / q0, coef(p, 1) / q0, coef(p, 0) / q0, -coef(q, 1) / q0, -coef(q, 2) / q0]);
        out.validate()?;
        Ok(out)
    }

    /// Moves along the chart whose coordinate velocities are the kernel
    /// fields at scale `r`:
    /// `(a, b, c) ↦ (1 + s₁ + is₂)(a, b, c) + (0, (s₃ + is₄)/r, s₅ + is₆)`,
    /// `d ↦ d + (s₇ + is₈)/r`, `e ↦ e + (s₉ + is₁₀)/r²`.
    pub fn retract(&self, s: &[F; DIM], r: F) -> Self {
        let [a, b, c, d, e] = self.coeffs();
        let w = |k: usize| Complex::new(s[2 * k], s[2 * k + 1]);
        let g = Complex::new(F::one(), F::zero()) + w(0);
        Self::from_coeffs([a * g, b * g + w(1) / r, c * g + w(2), d + w(3) / r, e + w(4) / (r * r)])
    }

    /// Chart coordinates of `target` about `self`, the inverse of [`retract`](Self::retract).
    pub fn chart(&self, target: &Self, r: F) -> [F; DIM] {
        let [a, b, c, d, e] = self.coeffs();
        let [a2, b2, c2, d2, e2] = target.coeffs();
        let g = a2 / a;
        let w = [g - Complex::new(F::one(), F::zero()), (b2 - b * g) * r, c2 - c * g, (d2 - d) * r, (e2 - e) * r * r];
        array::from_fn(|k| if k % 2 == 0 { w[k / 2].re } else { w[k / 2].im })
    }

    /// Euclidean length of the chart coordinates of `other` about `self`.
    pub fn scaled_distance(&self, other: &Self, r: F) -> F {
        self.chart(other, r).iter().fold(F::zero(), |s, v| s + *v * *v).sqrt()
    }

    /// Homogeneous pair `(z, N, D)` as complex jets.
    fn pair(&self, z: Complex<F>) -> [Jet<Complex<F>>; 3] {
        let [a, b, c, d, e] = self.coeffs();
        let zj = Jet::z(z);
        let k = Jet::constant;
        let n = (k(a) * zj + k(b)) * zj + k(c);
        let den = k(Complex::new(F::one(), F::zero())) - (k(d) + k(e) * zj) * zj;
        [zj, n, den]
    }
}

/// `Ψ[α](z)` with planar derivatives.
pub fn psi_eval<F: Real>(alpha: &ParamVec<F>, z: Complex<F>) -> Result<Jet<Complex<F>>> {
    let [_, n, d] = alpha.pair(z);
    if d.value.norm() < F::min_positive_value().max(F::lit(1e-300)) {
        return Err(Error::PoleHit { x: z.re.as_f64(), y: z.im.as_f64() });
    }
    Ok(n / d)
}

/// `𝒮(Ψ[α])` as a field.
#[derive(Clone, Copy, Debug)]
pub struct FamilyField<F> {
    pub alpha: ParamVec<F>,
}

impl<F: Real> Field<F> for FamilyField<F> {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        let [_, n, d] = self.alpha.pair(z);
        stereo_homogeneous(n, d)
    }
}

/// `𝒮(Ψ[α])` and the ten kernel fields at one point.
#[derive(Clone, Copy, Debug)]
pub struct KernelFrame<F: Real> {
    pub phi: VecJet<F>,
    pub k: [VecJet<F>; DIM],
}

impl<F: Real> KernelFrame<F> {
    /// `|∇𝒮(Ψ[α])|²`.
    pub fn grad_phi_sq(&self) -> F {
        self.phi.grad_norm_sqr()
    }
}

struct Homog<F: Real> {
    z: Jet<Complex<F>>,
    n: Jet<Complex<F>>,
    d: Jet<Complex<F>>,
    s: Jet<F>,
    u12: Jet<Complex<F>>,
    u3: Jet<F>,
}

impl<F: Real> Homog<F> {
    fn new(alpha: &ParamVec<F>, z: Complex<F>) -> Result<Self> {
        let [zj, n, d] = alpha.pair(z);
        let nn = n.norm_sqr();
        let dd = d.norm_sqr();
        let s = nn + dd;
        if !(s.value > F::zero()) {
            return Err(Error::PoleHit { x: z.re.as_f64(), y: z.im.as_f64() });
        }
        let u12 = (n * d.conj()).scale_real(F::lit(2.0)).div_real(s);
        let u3 = (nn - dd) / s;
        Ok(Self { z: zj, n, d, s, u12, u3 })
    }

    fn phi(&self) -> VecJet<F> {
        VecJet::from_complex_real(self.u12, self.u3)
    }

    /// `(δN, δD)` of the 1-based generator `i`.
    fn generator(&self, i: usize) -> (Jet<Complex<F>>, Jet<Complex<F>>) {
        let zero = Jet::zero();
        let im = Jet::constant(Complex::new(F::zero(), F::one()));
        let one = Jet::constant(Complex::new(F::one(), F::zero()));
        let z2 = self.z * self.z;
        match i {
            1 => (self.n, zero),
            2 => (im * self.n, zero),
            3 => (self.z, zero),
            4 => (im * self.z, zero),
            5 => (one, zero),
            6 => (im, zero),
            7 => (zero, -self.z),
            8 => (zero, -(im * self.z)),
            9 => (zero, -z2),
            10 => (zero, -(im * z2)),
            _ => unreachable!(),
        }
    }

    fn variation(&self, i: usize, r: F) -> VecJet<F> {
        let (dn, dd) = self.generator(i);
        let two = F::lit(2.0);
        let dnn = self.n.real_dot(dn).scale(two);
        let ddd = self.d.real_dot(dd).scale(two);
        let ds = dnn + ddd;
        let v12 = ((dn * self.d.conj() + self.n * dd.conj()).scale_real(two) - self.u12.mul_real(ds)).div_real(self.s);
        let v3 = (dnn - ddd - self.u3 * ds) / self.s;
        VecJet::from_complex_real(v12, v3).scale_real(beta_scale(i, r))
    }
}

/// Evaluates `𝒮(Ψ[α])` and all kernel fields at scale `r`.
pub fn kernel_frame<F: Real>(alpha: &ParamVec<F>, r: F, z: Complex<F>) -> Result<KernelFrame<F>> {
    let h = Homog::new(alpha, z)?;
    Ok(KernelFrame { phi: h.phi(), k: array::from_fn(|i| h.variation(i + 1, r)) })
}

/// `𝒮(Ψ[α])` and the combination `Σ c K_i` over the listed 1-based indices.
pub fn kernel_combination<F: Real>(alpha: &ParamVec<F>, r: F, z: Complex<F>, terms: &[(usize, F)]) -> Result<(VecJet<F>, VecJet<F>)> {
    let h = Homog::new(alpha, z)?;
    let mut acc = Vec3([Jet::zero(); 3]);
    for &(i, c) in terms {
        acc = acc + h.variation(i, r).scale_real(c);
    }
    Ok((h.phi(), acc))
}

/// One kernel field `K_i[α]` at scale `r`.
#[derive(Clone, Copy, Debug)]
pub struct KernelField<F> {
    pub alpha: ParamVec<F>,
    pub index: usize,
    pub r: F,
}

impl<F: Real> KernelField<F> {
    pub fn beta(&self) -> i32 {
        BETA[self.index - 1]
    }
}

pub fn kernel_field<F: Real>(alpha: ParamVec<F>, i: usize, r: F) -> Result<KernelField<F>> {
    if !(1..=DIM).contains(&i) {
        return Err(Error::InvalidIndex(i));
    }
    alpha.validate()?;
    Ok(KernelField { alpha, index: i, r })
}

impl<F: Real> Field<F> for KernelField<F> {
    fn eval(&self, z: Complex<F>) -> Result<VecJet<F>> {
        Ok(Homog::new(&self.alpha, z)?.variation(self.index, self.r))
    }
}

/// Central difference of `𝒮(Ψ[retract(α, t e_i)])` in `t`, step `h`.
pub fn kernel_fd<F: Real>(alpha: &ParamVec<F>, i: usize, r: F, z: Complex<F>, h: F) -> Result<Vec3<F>> {
    let mut s = [F::zero(); DIM];
    s[i - 1] = h;
    let plus = FamilyField { alpha: alpha.retract(&s, r) }.eval(z)?.value();
    s[i - 1] = -h;
    let minus = FamilyField { alpha: alpha.retract(&s, r) }.eval(z)?.value();
    Ok((plus - minus).scale(F::one() / (h + h)))
}

/// The explicit kernel fields at `α_r`, written as
/// `ζ((1 + |ψ|²)δψ − ψ δ|ψ|², δ|ψ|²)` with `ζ = 2/(1 + |ψ|²)²` and `ψ = z² − 2ir²`.
pub fn closed_form<F: Real>(i: usize, r: F, z: Complex<F>) -> Result<VecJet<F>> {
    if !(1..=DIM).contains(&i) {
        return Err(Error::InvalidIndex(i));
    }
    let two = F::lit(2.0);
    let r2 = r * r;
    let (x, y) = (Jet::x(z.re), Jet::y(z.im));
    let zj = Jet::z(z);
    let im = Jet::constant(Complex::new(F::zero(), F::one()));
    let psi = zj * zj - Jet::constant(Complex::new(F::zero(), two * r2));
    let p = psi.norm_sqr();
    let one = Jet::constant(F::one());
    let opp = one + p;
    let zeta = (opp * opp).recip().scale(two);
    let (a, b) = match i {
        1 => (psi.mul_real(one - p), p.scale(two)),
        2 => ((im * psi).mul_real(opp), Jet::zero()),
        3 => {
            let g = (x * x * x - y.scale(two * r2) + x * y * y).scale(two);
            (zj.mul_real(opp) - psi.mul_real(g), g)
        }
        4 => {
            let g = (y * y * y - x.scale(two * r2) + x * x * y).scale(two);
            ((im * zj).mul_real(opp) - psi.mul_real(g), g)
        }
        5 => {
            let g = (x * x - y * y).scale(two);
            (opp.to_complex() - psi.mul_real(g), g)
        }
        6 => {
            let g = (x * y - Jet::constant(r2)).scale(F::lit(4.0));
            (im.mul_real(opp) - psi.mul_real(g), g)
        }
        7 => {
            let w = (x * p).scale(two);
            ((zj * psi).mul_real(opp) - psi.mul_real(w), w)
        }
        8 => {
            let w = (y * p).scale(-two);
            ((im * zj * psi).mul_real(opp) - psi.mul_real(w), w)
        }
        9 => {
            let w = ((x * x - y * y) * p).scale(two);
            ((zj * zj * psi).mul_real(opp) - psi.mul_real(w), w)
        }
        _ => {
            let w = (x * y * p).scale(-F::lit(4.0));
            ((im * zj * zj * psi).mul_real(opp) - psi.mul_real(w), w)
        }
    };
    Ok(VecJet::from_complex_real(a.mul_real(zeta), b * zeta).scale_real(beta_scale(i, r)))
}

/// `ℐ_ij = ¼(1 + |ψ|²)² K_i·K_j` at `α_r`, computed from the kernel fields.
pub fn inner_product_table<F: Real>(r: F, z: Complex<F>) -> Result<[[F; DIM]; DIM]> {
    let fr = kernel_frame(&ParamVec::alpha_r(r), r, z)?;
    let p = psi_r(r, z).norm_sqr();
    let w = (F::one() + p) * (F::one() + p) / F::lit(4.0);
    let k = fr.k.map(|v| v.value());
    Ok(array::from_fn(|i| array::from_fn(|j| w * k[i].dot(&k[j]))))
}

fn psi_r<F: Real>(r: F, z: Complex<F>) -> Complex<F> {
    z * z - Complex::new(F::zero(), F::lit(2.0) * r * r)
}

/// The tabulated polynomial expressions for `ℐ_ij` at `α_r`.
pub fn inner_product_closed<F: Real>(r: F, z: Complex<F>) -> [[F; DIM]; DIM] {
    let (x, y) = (z.re, z.im);
    let l = |v: f64| F::lit(v);
    let r2 = r * r;
    let p = psi_r(r, z).norm_sqr();
    let q = x * x + y * y;
    let ri = F::one() / r;
    let ri2 = ri * ri;
    let ri3 = ri2 * ri;
    let ri4 = ri2 * ri2;
    let u = x * x * x - l(2.0) * r2 * y + x * y * y;
    let v = y * y * y - l(2.0) * r2 * x + x * x * y;
    let s = x * x * x + l(2.0) * r2 * y - l(3.0) * x * y * y;
    let t = l(2.0) * r2 * x - l(3.0) * x * x * y + y * y * y;
    let w4 = x.powi(4) + l(4.0) * r2 * x * y - l(6.0) * x * x * y * y + y.powi(4);
    let d = x * x - y * y;
    let mut m = [[F::zero(); DIM]; DIM];
    let mut set = |i: usize, j: usize, val: F| {
        m[i - 1][j - 1] = val;
        m[j - 1][i - 1] = val;
    };
    set(1, 1, p);
    set(1, 3, ri * u);
    set(1, 4, ri * v);
    set(1, 5, d);
    set(1, 6, l(2.0) * (x * y - r2));
    set(1, 7, ri * x * p);
    set(1, 8, -ri * y * p);
    set(1, 9, ri2 * d * p);
    set(1, 10, -l(2.0) * ri2 * x * y * p);
    set(2, 2, p);
    set(2, 3, -ri * v);
    set(2, 4, ri * u);
    set(2, 5, l(2.0) * (r2 - x * y));
    set(2, 6, d);
    set(2, 7, ri * y * p);
    set(2, 8, ri * x * p);
    set(2, 9, l(2.0) * ri2 * x * y * p);
    set(2, 10, ri2 * d * p);
    set(3, 3, ri2 * q);
    set(3, 5, ri * x);
    set(3, 6, ri * y);
    set(3, 7, ri2 * (x.powi(4) - y.powi(4)));
    set(3, 8, l(2.0) * ri2 * (r2 - x * y) * q);
    set(3, 9, ri3 * q * s);
    set(3, 10, ri3 * q * t);
    set(4, 4, ri2 * q);
    set(4, 5, -ri * y);
    set(4, 6, ri * x);
    set(4, 7, -l(2.0) * ri2 * (r2 - x * y) * q);
    set(4, 8, ri2 * (x.powi(4) - y.powi(4)));
    set(4, 9, -ri3 * q * t);
    set(4, 10, ri3 * q * s);
    set(5, 5, F::one());
    set(5, 7, ri * s);
    set(5, 8, ri * t);
    set(5, 9, ri2 * w4);
    set(5, 10, l(2.0) * ri2 * (r2 - l(2.0) * x * y) * d);
    set(6, 6, F::one());
    set(6, 7, -ri * t);
    set(6, 8, ri * s);
    set(6, 9, -l(2.0) * ri2 * (r2 - l(2.0) * x * y) * d);
    set(6, 10, ri2 * w4);
    set(7, 7, ri2 * q * p);
    set(7, 9, ri3 * x * q * p);
    set(7, 10, -ri3 * y * q * p);
    set(8, 8, ri2 * q * p);
    set(8, 9, ri3 * y * q * p);
    set(8, 10, ri3 * x * q * p);
    set(9, 9, ri4 * q * q * p);
    set(10, 10, ri4 * q * q * p);
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramMethod {
    /// `∫ 128(x² + y²)/(1 + |ψ|²)⁴ ℐ_ij` with the tabulated `ℐ_ij` (only at `α_r`).
    Tabulated,
    /// `∫ |∇𝒮(Ψ[α])|² K_i·K_j`.
    Weighted,
    /// `∫ ∇K_i : ∇K_j`.
    Gradients,
}

/// The matrix `𝒥[α]` with per-entry error estimates.
#[derive(Clone, Debug, Serialize)]
pub struct GramMatrix<F> {
    pub entries: [[F; DIM]; DIM],
    pub err: [[F; DIM]; DIM],
    pub r: F,
    pub alpha: ParamVec<F>,
    pub method: GramMethod,
    pub rel_tol: F,
    pub abs_tol: F,
    pub converged: bool,
}

impl<F: Real> GramMatrix<F> {
    /// Entry `𝒥_ij`, 1-based.
    pub fn get(&self, i: usize, j: usize) -> F {
        self.entries[i - 1][j - 1]
    }

    pub fn err_at(&self, i: usize, j: usize) -> F {
        self.err[i - 1][j - 1]
    }

    pub fn max_diag(&self) -> F {
        (0..DIM).fold(F::zero(), |m, i| m.max(self.entries[i][i].abs()))
    }

    pub fn max_err(&self) -> F {
        self.err.iter().flatten().fold(F::zero(), |m, e| m.max(*e))
    }

    /// Rows of `{:.16e}` values separated by commas.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.entries {
            let line: Vec<String> = row.iter().map(|v| format!("{:.16e}", v.as_f64())).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

impl GramMatrix<f64> {
    pub fn matrix(&self) -> SMatrix<f64, DIM, DIM> {
        SMatrix::from_fn(|i, j| self.entries[i][j])
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; DIM] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        array::from_fn(|i| ev[i])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn det(&self) -> f64 {
        self.matrix().lu().determinant()
    }

    /// JSON metadata with tolerances and per-entry error estimates.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "r": self.r,
            "alpha": self.alpha,
            "method": self.method,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "converged": self.converged,
            "err": self.err,
        })
    }
}

fn assemble<F: Real, G>(alpha: &ParamVec<F>, r: F, s: &QuadScheme<F>, method: GramMethod, g: G) -> Result<GramMatrix<F>>
where
    G: Fn(Complex<F>, &mut [F]) -> Result<()> + Sync,
{
    alpha.validate()?;
    let abs_tol = s.abs_tol.max(F::lit(GRAM_ABS_TOL));
    let scheme = s.clone().with_abs_tol(abs_tol);
    let res = integrate_vec_best_effort(&scheme, DIM * (DIM + 1) / 2, g)?;
    let mut entries = [[F::zero(); DIM]; DIM];
    let mut err = [[F::zero(); DIM]; DIM];
    for (k, (i, j)) in upper_pairs().enumerate() {
        entries[i][j] = res.value[k];
        entries[j][i] = res.value[k];
        err[i][j] = res.err_est[k];
        err[j][i] = res.err_est[k];
    }
    Ok(GramMatrix { entries, err, r, alpha: *alpha, method, rel_tol: s.target_rel_tol, abs_tol, converged: res.converged })
}

/// `𝒥_ij = ∫|∇𝒮(Ψ[α])|² K_i·K_j`. At `α_r` the tabulated integrand is used.
pub fn gram_matrix<F: Real>(alpha: &ParamVec<F>, r: F, s: &QuadScheme<F>) -> Result<GramMatrix<F>> {
    if *alpha == ParamVec::alpha_r(r) {
        return assemble(alpha, r, s, GramMethod::Tabulated, |z, out| {
            let p = psi_r(r, z).norm_sqr();
            let opp = F::one() + p;
            let w = F::lit(128.0) * z.norm_sqr() / (opp * opp * opp * opp);
            let t = inner_product_closed(r, z);
            for (k, (i, j)) in upper_pairs().enumerate() {
                out[k] = w * t[i][j];
            }
            Ok(())
        });
    }
    gram_weighted(alpha, r, s)
}

/// `∫|∇𝒮(Ψ[α])|² K_i·K_j` from the kernel fields, at any `α`.
pub fn gram_weighted<F: Real>(alpha: &ParamVec<F>, r: F, s: &QuadScheme<F>) -> Result<GramMatrix<F>> {
    assemble(alpha, r, s, GramMethod::Weighted, |z, out| {
        let fr = kernel_frame(alpha, r, z)?;
        let w = fr.grad_phi_sq();
        let k = fr.k.map(|v| v.value());
        for (n, (i, j)) in upper_pairs().enumerate() {
            out[n] = w * k[i].dot(&k[j]);
        }
        Ok(())
    })
}

/// `∫∇K_i : ∇K_j`.
pub fn gram_via_gradients<F: Real>(alpha: &ParamVec<F>, r: F, s: &QuadScheme<F>) -> Result<GramMatrix<F>> {
    assemble(alpha, r, s, GramMethod::Gradients, |z, out| {
        let fr = kernel_frame(alpha, r, z)?;
        for (n, (i, j)) in upper_pairs().enumerate() {
            out[n] = fr.k[i].grad_inner(&fr.k[j]);
        }
        Ok(())
    })
}
