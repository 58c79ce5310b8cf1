//! Large-`r` expansions of integrals `∫ p(x, y, r) / (1 + |ψ_r|²)^l` with
//! `ψ_r = z² − 2ir²`, and the block form of the Gram matrix they imply.
//!
//! The values `p(𝟙)`, `∇p(𝟙)`, `Δp(𝟙)` at `𝟙 = (1, 1, 1)` and
//! `−𝟙 = (−1, −1, 1)` are computed exactly in rationals.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

/// A polynomial in `x`, `y` and `r^{±1}`, homogeneous of total degree `k`.
///
/// Negative powers of `r` are allowed; they only enter through the degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogPoly3 {
    /// `(i, j, m) ↦ c` for the monomial `c x^i y^j r^m`.
    terms: BTreeMap<(u32, u32, i32), Q>,
    degree: i32,
}

impl HomogPoly3 {
    /// Builds from `(i, j, m, c)`; fails unless `i + j + m` is constant.
    pub fn new(terms: impl IntoIterator<Item = (u32, u32, i32, Q)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut degree = None;
        for (i, j, m, c) in terms {
            let d = i as i32 + j as i32 + m;
            if *degree.get_or_insert(d) != d {
                return Err(Error::Invalid(format!("monomial x^{i} y^{j} r^{m} breaks homogeneity")));
            }
            *map.entry((i, j, m)).or_insert_with(Q::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Self { terms: map, degree: degree.unwrap_or(0) })
    }

    pub fn zero(degree: i32) -> Self {
        Self { terms: BTreeMap::new(), degree }
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(Q::from_integer(c), 0, 0, 0)
    }

    pub fn monomial(c: Q, i: u32, j: u32, m: i32) -> Self {
        Self::new([(i, j, m, c)]).expect("single monomial")
    }

    pub fn x() -> Self {
        Self::monomial(Q::one(), 1, 0, 0)
    }

    pub fn y() -> Self {
        Self::monomial(Q::one(), 0, 1, 0)
    }

    /// `r^m`.
    pub fn r_pow(m: i32) -> Self {
        Self::monomial(Q::one(), 0, 0, m)
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, i32, Q)> + '_ {
        self.terms.iter().map(|(&(i, j, m), &c)| (i, j, m, c))
    }

    pub fn scale(&self, k: Q) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= k);
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn eval(&self, x: f64, y: f64, r: f64) -> f64 {
        self.terms()
            .map(|(i, j, m, c)| c.to_f64().unwrap() * x.powi(i as i32) * y.powi(j as i32) * r.powi(m))
            .sum()
    }

    pub fn dx(&self) -> Self {
        let t = self.terms().filter(|t| t.0 > 0).map(|(i, j, m, c)| (i - 1, j, m, c * Q::from_integer(i as i64)));
        Self::new(t).map(|p| p.with_degree(self.degree - 1)).unwrap()
    }

    pub fn dy(&self) -> Self {
        let t = self.terms().filter(|t| t.1 > 0).map(|(i, j, m, c)| (i, j - 1, m, c * Q::from_integer(j as i64)));
        Self::new(t).map(|p| p.with_degree(self.degree - 1)).unwrap()
    }

    /// `Δ_{x,y} p`.
    pub fn laplacian(&self) -> Self {
        &self.dx().dx() + &self.dy().dy()
    }

    /// Exact value at `(s, s, 1)` for `s = ±1`.
    pub fn at_diagonal(&self, s: i64) -> Q {
        self.terms().fold(Q::zero(), |acc, (i, j, _, c)| acc + c * Q::from_integer(s.pow(i + j)))
    }

    fn with_degree(mut self, d: i32) -> Self {
        self.degree = d;
        self
    }
}

impl Add for &HomogPoly3 {
    type Output = HomogPoly3;
    fn add(self, o: Self) -> HomogPoly3 {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, o.degree, "adding polynomials of different degree");
        HomogPoly3::new(self.terms().chain(o.terms())).unwrap()
    }
}

impl Neg for &HomogPoly3 {
    type Output = HomogPoly3;
    fn neg(self) -> HomogPoly3 {
        self.scale(-Q::one())
    }
}

impl Sub for &HomogPoly3 {
    type Output = HomogPoly3;
    fn sub(self, o: Self) -> HomogPoly3 {
        self + &(-o)
    }
}

impl Mul for &HomogPoly3 {
    type Output = HomogPoly3;
    fn mul(self, o: Self) -> HomogPoly3 {
        let t = self
            .terms()
            .flat_map(|(i, j, m, c)| o.terms().map(move |(i2, j2, m2, c2)| (i + i2, j + j2, m + m2, c * c2)));
        HomogPoly3::new(t).unwrap().with_degree(self.degree + o.degree)
    }
}

impl fmt::Display for HomogPoly3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, j, m, c) in self.terms() {
            let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
            write!(f, "{}{}", if first { "" } else { " " }, sign)?;
            write!(f, "{}", c.abs())?;
            for (v, e) in [("x", i as i32), ("y", j as i32), ("r", m)] {
                match e {
                    0 => {}
                    1 => write!(f, "·{v}")?,
                    _ => write!(f, "·{v}^{e}")?,
                }
            }
            first = false;
        }
        Ok(())
    }
}

/// Which expansion applies to an integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// `∫ p / (1 + |ψ|²)^l`.
    Plain,
    /// `∫ p |ψ|² / (1 + |ψ|²)^l`.
    Weighted,
    /// `∫ p / (1 + |ψ|²)^l` with `p(𝟙) = p(−𝟙) = 0`.
    CenteredZero,
}

/// Two-term expansion `leading_coeff·r^{leading_exp} + correction_coeff·r^{correction_exp} + O(r^{remainder_exp})`,
/// together with its value at one `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub kind: Expansion,
    pub k: i32,
    pub l: i32,
    pub r: f64,
    pub leading_coeff: f64,
    pub leading_exp: i32,
    pub correction_coeff: f64,
    pub correction_exp: i32,
    pub remainder_exp: f64,
    /// `leading_coeff·r^{leading_exp}`.
    pub leading: f64,
    /// `correction_coeff·r^{correction_exp}`.
    pub correction: f64,
    /// `p(𝟙) = p(−𝟙) = 0`.
    pub centered: bool,
}

impl AsymptoticPrediction {
    pub fn value(&self) -> f64 {
        self.leading + self.correction
    }

    /// Re-evaluates the same expansion at another `r`.
    pub fn at(&self, r: f64) -> Self {
        Self {
            r,
            leading: self.leading_coeff * r.powi(self.leading_exp),
            correction: self.correction_coeff * r.powi(self.correction_exp),
            ..*self
        }
    }
}

/// Exact coefficients, in units of `π`, of the `r^{k−2}` and `r^{k−6}` terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactTerms {
    pub leading: Q,
    pub correction: Q,
}

struct Diag {
    p1: Q,
    pm: Q,
    px1: Q,
    py1: Q,
    pxm: Q,
    pym: Q,
    lap1: Q,
    lapm: Q,
}

fn diag(p: &HomogPoly3) -> Diag {
    let (px, py, lap) = (p.dx(), p.dy(), p.laplacian());
    Diag {
        p1: p.at_diagonal(1),
        pm: p.at_diagonal(-1),
        px1: px.at_diagonal(1),
        py1: py.at_diagonal(1),
        pxm: px.at_diagonal(-1),
        pym: py.at_diagonal(-1),
        lap1: lap.at_diagonal(1),
        lapm: lap.at_diagonal(-1),
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn check(ok: bool, what: &str, k: i32, l: i32) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(format!("{what} (k = {k}, l = {l})")))
    }
}

/// Exact terms of the plain expansion; requires `l ≥ 3` and `4l > k + 2`.
pub fn plain_terms(p: &HomogPoly3, l: i32) -> Result<ExactTerms> {
    let k = p.degree();
    check(l >= 3 && 4 * l > k + 2, "plain expansion needs l >= 3 and l > k/4 + 1/2", k, l)?;
    let d = diag(p);
    let l = l as i64;
    let lead = (d.p1 + d.pm) / q(8 * (l - 1));
    let c1 = (d.lap1 + d.lapm) / q(256 * (l - 1) * (l - 2));
    let c2 = (-d.px1 - d.py1 + d.pxm + d.pym + d.p1 + d.pm) / q(128 * (l - 1) * (l - 2));
    Ok(ExactTerms { leading: lead, correction: c1 + c2 })
}

/// Exact terms of the `|ψ|²`-weighted expansion; requires `l ≥ 4` and `4l > k + 6`.
pub fn weighted_terms(p: &HomogPoly3, l: i32) -> Result<ExactTerms> {
    let k = p.degree();
    check(l >= 4 && 4 * l > k + 6, "weighted expansion needs l >= 4 and l > k/4 + 3/2", k, l)?;
    let d = diag(p);
    let l = l as i64;
    let lead = (d.p1 + d.pm) / q(8 * (l - 1) * (l - 2));
    let c1 = (d.lap1 + d.lapm) / q(128 * (l - 1) * (l - 2) * (l - 3));
    let c2 = (-d.px1 - d.py1 + d.pxm + d.pym + d.p1 + d.pm) / q(64 * (l - 1) * (l - 2) * (l - 3));
    Ok(ExactTerms { leading: lead, correction: c1 + c2 })
}

/// Exact `r^{k−6}` coefficient when `p` vanishes at both bubble centers; the
/// leading term is zero.
pub fn centered_zero_terms(p: &HomogPoly3, l: i32) -> Result<ExactTerms> {
    let k = p.degree();
    check(l >= 3 && 4 * l > k + 2, "centered expansion needs l >= 3 and l > k/4 + 1/2", k, l)?;
    let d = diag(p);
    if !d.p1.is_zero() || !d.pm.is_zero() {
        return Err(Error::HypothesisViolated(format!("p(1,1,1) = {}, p(-1,-1,1) = {}", d.p1, d.pm)));
    }
    let l = l as i64;
    let c = (d.lap1 + d.lapm - q(2) * d.px1 - q(2) * d.py1 + q(2) * d.pxm + q(2) * d.pym) / q(256 * (l - 1) * (l - 2));
    Ok(ExactTerms { leading: Q::zero(), correction: c })
}

fn predict(kind: Expansion, p: &HomogPoly3, l: i32, r: f64, t: ExactTerms, rem: f64) -> AsymptoticPrediction {
    let k = p.degree();
    let pi = |x: Q| PI * x.to_f64().unwrap();
    let centered = p.at_diagonal(1).is_zero() && p.at_diagonal(-1).is_zero();
    AsymptoticPrediction {
        kind,
        k,
        l,
        r,
        leading_coeff: pi(t.leading),
        leading_exp: k - 2,
        correction_coeff: pi(t.correction),
        correction_exp: k - 6,
        remainder_exp: rem,
        leading: pi(t.leading) * r.powi(k - 2),
        correction: pi(t.correction) * r.powi(k - 6),
        centered,
    }
}

/// `∫ p / (1 + |ψ_r|²)^l ≈ π[p(𝟙) + p(−𝟙)]/(8(l−1))·r^{k−2} + (…)·r^{k−6}`, remainder `r^{k−8}`.
pub fn expand_plain(p: &HomogPoly3, l: i32, r: f64) -> Result<AsymptoticPrediction> {
    let t = plain_terms(p, l)?;
    Ok(predict(Expansion::Plain, p, l, r, t, (p.degree() - 8) as f64))
}

/// `∫ p |ψ_r|² / (1 + |ψ_r|²)^l`, remainder `r^{k−8}`.
pub fn expand_weighted(p: &HomogPoly3, l: i32, r: f64) -> Result<AsymptoticPrediction> {
    let t = weighted_terms(p, l)?;
    Ok(predict(Expansion::Weighted, p, l, r, t, (p.degree() - 8) as f64))
}

/// `∫ p / (1 + |ψ_r|²)^l` for `p(𝟙) = p(−𝟙) = 0`, remainder `r^{k−17/2}`.
pub fn expand_centered_zero(p: &HomogPoly3, l: i32, r: f64) -> Result<AsymptoticPrediction> {
    let t = centered_zero_terms(p, l)?;
    Ok(predict(Expansion::CenteredZero, p, l, r, t, p.degree() as f64 - 8.5))
}

pub fn expand(kind: Expansion, p: &HomogPoly3, l: i32, r: f64) -> Result<AsymptoticPrediction> {
    match kind {
        Expansion::Plain => expand_plain(p, l, r),
        Expansion::Weighted => expand_weighted(p, l, r),
        Expansion::CenteredZero => expand_centered_zero(p, l, r),
    }
}

/// Asymptotic description of one Gram entry at `α_r`.
#[derive(Clone, Debug)]
pub struct EntryExpansion {
    pub i: usize,
    pub j: usize,
    pub kind: Expansion,
    /// Integrand numerator: `𝒥_ij = ∫ p (|ψ|²)^w / (1 + |ψ|²)⁴` with `w = 1` when weighted.
    pub p: HomogPoly3,
    pub l: i32,
    /// Stated terms in units of `π`.
    pub stated: ExactTerms,
}

impl EntryExpansion {
    pub fn exact(&self) -> Result<ExactTerms> {
        match self.kind {
            Expansion::Plain => plain_terms(&self.p, self.l),
            Expansion::Weighted => weighted_terms(&self.p, self.l),
            Expansion::CenteredZero => centered_zero_terms(&self.p, self.l),
        }
    }

    pub fn predict(&self, r: f64) -> Result<AsymptoticPrediction> {
        expand(self.kind, &self.p, self.l, r)
    }

    /// Evaluates the full integrand `p·|ψ|^{2w}/(1+|ψ|²)^l` at a point.
    pub fn integrand(&self, x: f64, y: f64, r: f64) -> f64 {
        let pp = (x * x - y * y).powi(2) + (2.0 * x * y - 2.0 * r * r).powi(2);
        let w = if self.kind == Expansion::Weighted { pp } else { 1.0 };
        self.p.eval(x, y, r) * w / (1.0 + pp).powi(self.l)
    }
}

fn frac(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

/// The Gram entries at `α_r` that carry a nontrivial expansion.
pub fn gram_entry_expansions() -> Vec<EntryExpansion> {
    use Expansion::*;
    let x = HomogPoly3::x();
    let y = HomogPoly3::y();
    let rho = &(&x * &x) + &(&y * &y);
    let c = |n: i64| HomogPoly3::constant(n);
    let rp = HomogPoly3::r_pow;
    let xy = &x * &y;
    let r2 = rp(2);
    let xy_m_r2 = &xy - &r2;
    let w4 = {
        let x4 = &(&x * &x) * &(&x * &x);
        let y4 = &(&y * &y) * &(&y * &y);
        let mixed = &(&c(4) * &r2) * &xy;
        let x2y2 = &(&c(6) * &xy) * &xy;
        &(&(&x4 + &y4) + &mixed) - &x2y2
    };
    let base = &c(128) * &rho;
    let mk = |i, j, kind, p: HomogPoly3, lead: Q, corr: Q| EntryExpansion { i, j, kind, p, l: 4, stated: ExactTerms { leading: lead, correction: corr } };
    let z = Q::zero();
    let p11 = base.clone();
    let p1_10 = &(&base * &xy) * &(&c(-2) * &rp(-2));
    let p29 = &(&base * &xy) * &(&c(2) * &rp(-2));
    let p33 = &(&base * &rho) * &rp(-2);
    let p77 = p33.clone();
    let p99 = &(&(&base * &rho) * &rho) * &rp(-4);
    let p16 = &(&c(2) * &base) * &xy_m_r2;
    let p38 = &(&(&c(-2) * &base) * &rho) * &(&xy_m_r2 * &rp(-2));
    let p59 = &(&base * &w4) * &rp(-2);
    vec![
        mk(1, 1, Weighted, p11.clone(), frac(32, 3), z),
        mk(2, 2, Weighted, p11, frac(32, 3), z),
        mk(1, 10, Weighted, p1_10, frac(-64, 3), z),
        mk(2, 9, Weighted, p29, frac(64, 3), z),
        mk(1, 6, CenteredZero, p16.clone(), z, z),
        mk(2, 5, CenteredZero, -&p16, z, z),
        mk(3, 3, Plain, p33.clone(), frac(128, 3), frac(4, 3)),
        mk(4, 4, Plain, p33, frac(128, 3), frac(4, 3)),
        mk(3, 8, CenteredZero, p38.clone(), z, frac(-16, 3)),
        mk(4, 7, CenteredZero, -&p38, z, frac(16, 3)),
        mk(5, 5, Plain, base.clone(), frac(64, 3), z),
        mk(6, 6, Plain, base, frac(64, 3), z),
        mk(5, 9, CenteredZero, p59.clone(), z, z),
        mk(6, 10, CenteredZero, p59, z, z),
        mk(7, 7, Weighted, p77.clone(), frac(64, 3), frac(8, 3)),
        mk(8, 8, Weighted, p77, frac(64, 3), frac(8, 3)),
        mk(9, 9, Weighted, p99.clone(), frac(128, 3), frac(64, 3)),
        mk(10, 10, Weighted, p99, frac(128, 3), frac(64, 3)),
    ]
}

/// Predicted blocks of `𝒥^r / (16π/3)` after the permutation
/// `{1, 10, 6}, {2, 9, 5}, {3, 8}, {4, 7}`; the `O(r^{−9/2})` couplings are set to 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockPrediction {
    pub r: f64,
    pub a1: [[f64; 3]; 3],
    pub a2: [[f64; 3]; 3],
    pub a3: [[f64; 2]; 2],
    pub a4: [[f64; 2]; 2],
    pub lambda: [f64; 3],
    pub det_blocks: [f64; 4],
    /// `det 𝒥^r` from the blocks.
    pub det: f64,
    /// Leading `2⁶⁰π¹⁰/3¹⁰·r⁻⁸`.
    pub det_leading: f64,
}

/// `2⁶⁰π¹⁰/3¹⁰`.
pub fn det_constant() -> f64 {
    2f64.powi(60) * PI.powi(10) / 3f64.powi(10)
}

/// Normalization `16π/3` of the blocks.
pub fn block_scale() -> f64 {
    16.0 * PI / 3.0
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn predicted_blocks(r: f64) -> BlockPrediction {
    let r4 = r.powi(-4);
    let r2 = r.powi(-2);
    let l1 = 8.0 + 0.25 * r4;
    let l2 = 4.0 + 0.5 * r4;
    let l3 = 8.0 + 4.0 * r4;
    let a1 = [[2.0, -4.0, 0.0], [-4.0, l3, 0.0], [0.0, 0.0, 4.0]];
    let a2 = [[2.0, 4.0, 0.0], [4.0, l3, 0.0], [0.0, 0.0, 4.0]];
    let a3 = [[l1, -r2], [-r2, l2]];
    let a4 = [[l1, r2], [r2, l2]];
    let det_blocks = [det3(&a1), det3(&a2), det2(&a3), det2(&a4)];
    let det = block_scale().powi(10) * det_blocks.iter().product::<f64>();
    BlockPrediction { r, a1, a2, a3, a4, lambda: [l1, l2, l3], det_blocks, det, det_leading: det_constant() * r.powi(-8) }
}

impl BlockPrediction {
    /// The full predicted `𝒥^r` in the original index order.
    pub fn matrix(&self) -> [[f64; 10]; 10] {
        let mut m = [[0.0; 10]; 10];
        let s = block_scale();
        let mut put = |idx: &[usize], f: &dyn Fn(usize, usize) -> f64| {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    m[i - 1][j - 1] = s * f(a, b);
                }
            }
        };
        put(&[1, 10, 6], &|a, b| self.a1[a][b]);
        put(&[2, 9, 5], &|a, b| self.a2[a][b]);
        put(&[3, 8], &|a, b| self.a3[a][b]);
        put(&[4, 7], &|a, b| self.a4[a][b]);
        m
    }
}
