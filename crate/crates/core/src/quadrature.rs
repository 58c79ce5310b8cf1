//! Adaptive tensor Gauss–Legendre quadrature over the whole plane.
//!
//! The plane is tiled by patches in three chart types: Cartesian rectangles,
//! polar annular sectors about a center, and inverted exterior sectors where
//! the radial variable is `t = R/ρ ∈ (0, 1]`. An exterior sector may be cut
//! by a straight line, which lets two bubble sites share the plane along
//! their bisector.
//!
//! Each patch is integrated with tensor rules of order `n` and `2n`; the
//! higher order result is kept and the difference is the patch error
//! estimate. Integrands are vector valued so that many related integrals
//! share nodes and refinement.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::VecJet;
use crate::rational_maps::RationalMap;
use crate::scalar::Real;
use crate::sphere_fields::{degree_density, energy_density, Field};
use crate::summation::NeumaierSum;

/// Straight line bounding an inverted sector: the set of points whose
/// projection on direction `normal_angle` from the chart center is below
/// `distance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HalfPlaneCut<F> {
    pub normal_angle: F,
    pub distance: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Chart<F> {
    /// `(s, t) = (x, y)`.
    Cartesian,
    /// `(s, t) = (ρ, θ)` about `center`.
    Polar { center: Complex<F> },
    /// `(s, t) = (τ, θ)`; `ρ = radius / t` with `t` running linearly in `τ`
    /// from the cut line (or from infinity) up to `ρ = radius`.
    Inverted { center: Complex<F>, radius: F, cut: Option<HalfPlaneCut<F>> },
}

impl<F: Real> Chart<F> {
    /// Maps chart coordinates to a point and the area Jacobian.
    #[inline]
    pub fn map(&self, s: F, t: F) -> (Complex<F>, F) {
        match *self {
            Chart::Cartesian => (Complex::new(s, t), F::one()),
            Chart::Polar { center } => {
                let (sn, cs) = t.sin_cos();
                (center + Complex::new(s * cs, s * sn), s)
            }
            Chart::Inverted { center, radius, cut } => {
                let lo = cut.map_or(F::zero(), |c| (radius / c.distance * (t - c.normal_angle).cos()).max(F::zero()));
                let span = F::one() - lo;
                let tt = lo + span * s;
                let rho = radius / tt;
                let (sn, cs) = t.sin_cos();
                (center + Complex::new(rho * cs, rho * sn), rho * radius / (tt * tt) * span)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Patch<F> {
    pub chart: Chart<F>,
    pub s: [F; 2],
    pub t: [F; 2],
    pub depth: u32,
}

impl<F: Real> Patch<F> {
    fn split(&self) -> [Self; 4] {
        let two = F::lit(2.0);
        let sm = (self.s[0] + self.s[1]) / two;
        let tm = (self.t[0] + self.t[1]) / two;
        let d = self.depth + 1;
        let mk = |s: [F; 2], t: [F; 2]| Patch { chart: self.chart, s, t, depth: d };
        [
            mk([self.s[0], sm], [self.t[0], tm]),
            mk([sm, self.s[1]], [self.t[0], tm]),
            mk([self.s[0], sm], [tm, self.t[1]]),
            mk([sm, self.s[1]], [tm, self.t[1]]),
        ]
    }
}

/// A tiling of the plane together with accuracy targets.
#[derive(Clone, Debug, Serialize)]
pub struct QuadScheme<F> {
    pub patches: Vec<Patch<F>>,
    pub order: usize,
    pub target_rel_tol: F,
    pub abs_tol: F,
    pub max_refinement_depth: u32,
}

pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: u32 = 12;
/// Radial grading ratio between consecutive annuli.
const GRADING: f64 = 4.0;
const SECTORS: usize = 8;

fn graded<F: Real>(a: F, b: F) -> Vec<F> {
    let n = ((b / a).ln() / F::lit(GRADING).ln()).ceil().max(F::one());
    let n = n.to_usize().unwrap();
    (0..=n).map(|k| if k == n { b } else { a * (b / a).powf(F::from_usize(k).unwrap() / F::from_usize(n).unwrap()) }).collect()
}

fn push_site<F: Real>(out: &mut Vec<Patch<F>>, center: Complex<F>, radii: &[F], cut: Option<HalfPlaneCut<F>>, phase: F) {
    let step = F::lit(2.0 * PI / SECTORS as f64);
    let sector = |k: usize| [phase + step * F::from_usize(k).unwrap(), phase + step * F::from_usize(k + 1).unwrap()];
    for w in radii.windows(2) {
        for k in 0..SECTORS {
            out.push(Patch { chart: Chart::Polar { center }, s: [w[0], w[1]], t: sector(k), depth: 0 });
        }
    }
    let radius = *radii.last().unwrap();
    for k in 0..SECTORS {
        out.push(Patch { chart: Chart::Inverted { center, radius, cut }, s: [F::zero(), F::one()], t: sector(k), depth: 0 });
    }
}

impl<F: Real> QuadScheme<F> {
    fn with_patches(patches: Vec<Patch<F>>) -> Self {
        Self {
            patches,
            order: DEFAULT_ORDER,
            target_rel_tol: F::lit(DEFAULT_REL_TOL),
            abs_tol: F::zero(),
            max_refinement_depth: DEFAULT_MAX_DEPTH,
        }
    }

    /// The two-bubble tiling for the degree-2 family at scale `r`.
    ///
    /// Each bubble center `±(r, r)` owns the half-plane on its side of
    /// `x + y = 0`. Around a center the annuli are graded geometrically from
    /// `10⁻⁴/r` to `√r` and from `√r` to `r`, so both kink circles of the
    /// cutoff are patch boundaries; beyond `r` the half-plane is covered by
    /// inverted sectors cut along the bisector.
    pub fn bubble_pair(r: F) -> Self {
        assert!(r >= F::one(), "bubble scheme needs r >= 1");
        let sr = r.sqrt();
        let inner = F::lit(1e-4) / r;
        let mut radii = vec![F::zero()];
        radii.extend(graded(inner, sr));
        if r > sr {
            radii.extend(graded(sr, r).into_iter().skip(1));
        }
        let dist = F::SQRT_2() * r;
        let mut patches = Vec::new();
        let quarter = F::FRAC_PI_4();
        for (center, normal) in [(Complex::new(r, r), quarter * F::lit(5.0)), (Complex::new(-r, -r), quarter)] {
            let cut = HalfPlaneCut { normal_angle: normal, distance: dist };
            push_site(&mut patches, center, &radii, Some(cut), normal);
        }
        Self::with_patches(patches)
    }

    /// A single polar site at `center`, graded from `inner` to `outer`, with
    /// the exterior covered by inversion.
    pub fn single_site(center: Complex<F>, inner: F, outer: F) -> Self {
        let mut radii = vec![F::zero()];
        radii.extend(graded(inner, outer));
        let mut patches = Vec::new();
        push_site(&mut patches, center, &radii, None, F::zero());
        Self::with_patches(patches)
    }

    /// A single-site tiling sized from the zeros and poles of a map.
    pub fn for_map(m: &RationalMap<F>) -> Self {
        let mut pts = m.p().roots();
        pts.extend(m.q().roots());
        let conj = m.orientation() == crate::rational_maps::Orientation::AntiHolomorphic;
        if conj {
            pts.iter_mut().for_each(|z| *z = z.conj());
        }
        if pts.is_empty() {
            return Self::single_site(Complex::new(F::zero(), F::zero()), F::lit(1e-4), F::one());
        }
        let n = F::from_usize(pts.len()).unwrap();
        let center = pts.iter().fold(Complex::new(F::zero(), F::zero()), |a, &z| a + z) / n;
        let spread = pts.iter().fold(F::zero(), |a, z| a.max((z - center).norm()));
        let mut core = F::one();
        let dp = m.p().derivative();
        for z in m.p().roots() {
            let s = m.q().eval(z).norm() / dp.eval(z).norm();
            if s.is_finite() && s > F::zero() {
                core = core.min(s);
            }
        }
        Self::single_site(center, F::lit(1e-4) * core, F::lit(2.0) * spread + F::lit(2.0))
    }

    /// One Cartesian rectangle; not a tiling of the plane.
    pub fn rectangle(x: [F; 2], y: [F; 2]) -> Self {
        Self::with_patches(vec![Patch { chart: Chart::Cartesian, s: x, t: y, depth: 0 }])
    }

    pub fn with_rel_tol(mut self, tol: F) -> Self {
        self.target_rel_tol = tol;
        self
    }

    pub fn with_abs_tol(mut self, tol: F) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_refinement_depth = depth;
        self
    }

    /// Radii of the circles about `center` that are patch boundaries.
    pub fn boundary_radii(&self, center: Complex<F>) -> Vec<F> {
        let mut out = Vec::new();
        for p in &self.patches {
            match p.chart {
                Chart::Polar { center: c } if c == center => out.extend(p.s),
                Chart::Inverted { center: c, radius, .. } if c == center => out.push(radius),
                _ => {}
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

impl<F: Real + Serialize> QuadScheme<F> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A quadrature value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate<F> {
    pub value: F,
    pub err: F,
}

/// Result of a vector-valued integration.
#[derive(Clone, Debug, Serialize)]
pub struct QuadResult<F> {
    pub value: Vec<F>,
    pub err_est: Vec<F>,
    /// `∫|f_k|`, the scale against which rounding is judged.
    pub abs_integral: Vec<F>,
    pub patches: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl<F: Real> QuadResult<F> {
    pub fn get(&self, k: usize) -> Estimate<F> {
        Estimate { value: self.value[k], err: self.err_est[k] }
    }

    fn into_strict(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::ToleranceNotMet {
                value: self.value.iter().map(|v| v.as_f64()).collect(),
                err_est: self.err_est.iter().map(|v| v.as_f64()).collect(),
            })
        }
    }
}

struct Rule<F> {
    x: Vec<F>,
    w: Vec<F>,
}

impl<F: Real> Rule<F> {
    fn new(n: usize) -> Self {
        let g = GaussLegendre::new(std::num::NonZeroUsize::new(n).expect("order >= 1"));
        Self { x: g.nodes().map(|&x| F::lit(x)).collect(), w: g.weights().map(|&w| F::lit(w)).collect() }
    }
}

struct PatchEval<F> {
    patch: Patch<F>,
    value: Vec<F>,
    err: Vec<F>,
    abs: Vec<F>,
    /// Consecutive refinements per component that failed to halve the error.
    stalls: Vec<u8>,
}

/// A component stops driving refinement of a patch after this many
/// consecutive splits that did not halve its error: the estimate is then
/// dominated by rounding in the integrand rather than by truncation.
const MAX_STALLS: u8 = 2;

fn apply_rule<F: Real, G>(patch: &Patch<F>, rule: &Rule<F>, dim: usize, f: &G, buf: &mut [F], acc: &mut [F], abs: Option<&mut [F]>) -> Result<()>
where
    G: Fn(Complex<F>, &mut [F]) -> Result<()>,
{
    let two = F::lit(2.0);
    let (hs, ms) = ((patch.s[1] - patch.s[0]) / two, (patch.s[1] + patch.s[0]) / two);
    let (ht, mt) = ((patch.t[1] - patch.t[0]) / two, (patch.t[1] + patch.t[0]) / two);
    acc.iter_mut().for_each(|a| *a = F::zero());
    let mut abs = abs;
    if let Some(a) = abs.as_deref_mut() {
        a.iter_mut().for_each(|v| *v = F::zero());
    }
    for (xi, wi) in rule.x.iter().zip(&rule.w) {
        let s = ms + hs * *xi;
        for (xj, wj) in rule.x.iter().zip(&rule.w) {
            let t = mt + ht * *xj;
            let (z, jac) = patch.chart.map(s, t);
            let w = *wi * *wj * hs * ht * jac;
            f(z, buf)?;
            for k in 0..dim {
                let v = w * buf[k];
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { x: z.re.as_f64(), y: z.im.as_f64() });
                }
                acc[k] = acc[k] + v;
            }
            if let Some(a) = abs.as_deref_mut() {
                for k in 0..dim {
                    a[k] = a[k] + (w * buf[k]).abs();
                }
            }
        }
    }
    Ok(())
}

fn eval_patch<F: Real, G>(patch: Patch<F>, lo: &Rule<F>, hi: &Rule<F>, dim: usize, f: &G) -> Result<PatchEval<F>>
where
    G: Fn(Complex<F>, &mut [F]) -> Result<()>,
{
    let mut buf = vec![F::zero(); dim];
    let mut a = vec![F::zero(); dim];
    let mut b = vec![F::zero(); dim];
    let mut abs = vec![F::zero(); dim];
    apply_rule(&patch, lo, dim, f, &mut buf, &mut a, None)?;
    apply_rule(&patch, hi, dim, f, &mut buf, &mut b, Some(&mut abs))?;
    let err = a.iter().zip(&b).map(|(x, y)| (*x - *y).abs()).collect();
    Ok(PatchEval { patch, value: b, err, abs, stalls: vec![0; dim] })
}

fn totals<F: Real>(evals: &[PatchEval<F>], dim: usize) -> (Vec<F>, Vec<F>, Vec<F>) {
    let mut v = vec![NeumaierSum::new(); dim];
    let mut e = vec![NeumaierSum::new(); dim];
    let mut a = vec![NeumaierSum::new(); dim];
    for p in evals {
        for k in 0..dim {
            v[k].add(p.value[k]);
            e[k].add(p.err[k]);
            a[k].add(p.abs[k]);
        }
    }
    let fin = |s: Vec<NeumaierSum<F>>| s.iter().map(|x| x.total()).collect::<Vec<_>>();
    (fin(v), fin(e), fin(a))
}

/// Integrates a vector-valued integrand, returning the best result even when
/// the tolerance is not met (`converged == false`).
///
/// `f(z, out)` writes `dim` integrand values at `z`. Patches are evaluated in
/// parallel but reduced in a fixed order, so the result does not depend on
/// the number of worker threads.
pub fn integrate_vec_best_effort<F: Real, G>(s: &QuadScheme<F>, dim: usize, f: G) -> Result<QuadResult<F>>
where
    G: Fn(Complex<F>, &mut [F]) -> Result<()> + Sync,
{
    integrate_vec_abs_tols(s, &vec![s.abs_tol; dim], f)
}

/// Best-effort integration with a separate absolute tolerance per component,
/// each raised to at least `s.abs_tol`.
///
/// Useful when some components are differences of nearly equal fields and
/// sit far below the scale of their own rounding.
pub fn integrate_vec_abs_tols<F: Real, G>(s: &QuadScheme<F>, abs_tols: &[F], f: G) -> Result<QuadResult<F>>
where
    G: Fn(Complex<F>, &mut [F]) -> Result<()> + Sync,
{
    let dim = abs_tols.len();
    let lo = Rule::new(s.order);
    let hi = Rule::new(2 * s.order);
    let per_patch = s.order * s.order * 5;
    let mut evals: Vec<PatchEval<F>> = s
        .patches
        .par_iter()
        .map(|p| eval_patch(*p, &lo, &hi, dim, &f))
        .collect::<Result<_>>()?;
    let mut evaluations = evals.len() * per_patch;
    let noise = F::lit(50.0) * F::epsilon();
    loop {
        let (value, err, abs) = totals(&evals, dim);
        let tol: Vec<F> = (0..dim)
            .map(|k| s.abs_tol.max(abs_tols[k]).max(s.target_rel_tol * value[k].abs()).max(F::lit(1e3) * F::epsilon() * abs[k]))
            .collect();
        let open: Vec<usize> = (0..dim).filter(|&k| err[k] > tol[k]).collect();
        let done = |converged| QuadResult { value: value.clone(), err_est: err.clone(), abs_integral: abs.clone(), patches: evals.len(), evaluations, converged };
        if open.is_empty() {
            return Ok(done(true));
        }
        // error still reachable by refinement, excluding stalled patches
        let open: Vec<usize> = open
            .into_iter()
            .filter(|&k| {
                let active = evals.iter().filter(|p| p.stalls[k] < MAX_STALLS).fold(F::zero(), |a, p| a + p.err[k]);
                active > F::lit(0.5) * tol[k]
            })
            .collect();
        if open.is_empty() {
            return Ok(done(false));
        }
        let n = F::from_usize(evals.len()).unwrap();
        let refine: Vec<bool> = evals
            .iter()
            .map(|p| {
                p.patch.depth < s.max_refinement_depth
                    && open.iter().any(|&k| p.stalls[k] < MAX_STALLS && p.err[k] > tol[k] / n && p.err[k] > noise * p.abs[k])
            })
            .collect();
        if !refine.iter().any(|&b| b) {
            return Ok(done(false));
        }
        let children: Vec<Patch<F>> = evals.iter().zip(&refine).filter(|(_, &r)| r).flat_map(|(p, _)| p.patch.split()).collect();
        let mut fresh = children
            .par_iter()
            .map(|p| eval_patch(*p, &lo, &hi, dim, &f))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        evaluations += children.len() * per_patch;
        let mut next = Vec::with_capacity(evals.len() + children.len());
        for (p, r) in evals.into_iter().zip(refine) {
            if r {
                let mut kids: Vec<PatchEval<F>> = fresh.by_ref().take(4).collect();
                for k in 0..dim {
                    let e = kids.iter().fold(F::zero(), |a, c| a + c.err[k]);
                    let stall = if e > F::lit(0.5) * p.err[k] { p.stalls[k].saturating_add(1) } else { 0 };
                    kids.iter_mut().for_each(|c| c.stalls[k] = stall);
                }
                next.extend(kids);
            } else {
                next.push(p);
            }
        }
        evals = next;
    }
}

/// Like [`integrate_vec_best_effort`] but fails with
/// [`Error::ToleranceNotMet`] when refinement is exhausted.
pub fn integrate_vec<F: Real, G>(s: &QuadScheme<F>, dim: usize, f: G) -> Result<QuadResult<F>>
where
    G: Fn(Complex<F>, &mut [F]) -> Result<()> + Sync,
{
    integrate_vec_best_effort(s, dim, f)?.into_strict()
}

/// Scalar integration.
pub fn integrate<F: Real, G>(f: G, s: &QuadScheme<F>) -> Result<Estimate<F>>
where
    G: Fn(Complex<F>) -> F + Sync,
{
    let r = integrate_vec(s, 1, |z, out: &mut [F]| {
        out[0] = f(z);
        Ok(())
    })?;
    Ok(r.get(0))
}

/// Integrates pointwise functionals of a field's jet.
pub fn integrate_field<F: Real, U: Field<F>, G>(u: &U, s: &QuadScheme<F>, dim: usize, g: G) -> Result<QuadResult<F>>
where
    G: Fn(&VecJet<F>, &mut [F]) + Sync,
{
    integrate_vec(s, dim, |z, out: &mut [F]| {
        let j = u.eval(z)?;
        g(&j, out);
        Ok(())
    })
}

/// Dirichlet energy `½∫|∇u|²`.
pub fn energy<F: Real>(u: &impl Field<F>, s: &QuadScheme<F>) -> Result<Estimate<F>> {
    let r = integrate_field(u, s, 1, |j, out| out[0] = energy_density(j))?;
    let h = F::lit(0.5);
    Ok(Estimate { value: h * r.value[0], err: h * r.err_est[0] })
}

/// Degree `(1/4π)∫u·(u_y × u_x)`, unrounded.
pub fn degree<F: Real>(u: &impl Field<F>, s: &QuadScheme<F>) -> Result<Estimate<F>> {
    let r = integrate_field(u, s, 1, |j, out| out[0] = degree_density(j))?;
    let k = F::one() / (F::lit(4.0) * F::PI());
    Ok(Estimate { value: k * r.value[0], err: k * r.err_est[0] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational_maps::{ComplexPoly, Orientation};
    use crate::sphere_fields::lift;

    #[test]
    fn kink_circles_are_patch_boundaries() {
        let r = 10.0f64;
        let s = QuadScheme::bubble_pair(r);
        for c in [Complex::new(r, r), Complex::new(-r, -r)] {
            let radii = s.boundary_radii(c);
            assert!(radii.iter().any(|&x| (x - r.sqrt()).abs() < 1e-12));
            assert!(radii.contains(&r));
            assert!(radii.iter().any(|&x| (x - 1e-5).abs() < 1e-18));
        }
    }

    #[test]
    fn standard_integrals_over_bubble_scheme() {
        let s = QuadScheme::<f64>::bubble_pair(10.0);
        let a = integrate(|z| 1.0 / (1.0 + z.norm_sqr()).powi(2), &s).unwrap();
        assert!((a.value - PI).abs() <= 1e-10 * PI);
        let g = integrate(|z| (-z.norm_sqr()).exp(), &s).unwrap();
        assert!((g.value - PI).abs() <= 1e-10 * PI);
    }

    #[test]
    fn polynomial_exactness_on_rectangles() {
        // ∫∫ x^a y^b over [-1,2]×[0,3] with a + b ≤ 2n − 1 per variable
        let s = QuadScheme::rectangle([-1.0, 2.0], [0.0, 3.0]).with_order(4).with_max_depth(0);
        for (a, b) in [(7, 0), (0, 7), (5, 7), (7, 7)] {
            let exact = (2f64.powi(a + 1) - (-1f64).powi(a + 1)) / (a + 1) as f64 * 3f64.powi(b + 1) / (b + 1) as f64;
            let r = integrate_vec_best_effort(&s, 1, |z, out: &mut [f64]| {
                out[0] = z.re.powi(a) * z.im.powi(b);
                Ok(())
            })
            .unwrap();
            assert!((r.value[0] - exact).abs() <= 1e-13 * exact.abs().max(1.0), "{a} {b}");
            assert!(r.err_est[0] <= 1e-13 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn error_estimate_does_not_grow_under_refinement() {
        let base = QuadScheme::rectangle([0.0, 1.0], [0.0, 1.0]).with_order(3).with_rel_tol(0.0);
        let f = |z: Complex<f64>, out: &mut [f64]| {
            out[0] = (5.0 * z.re).sin() * (3.0 * z.im).exp() / (1.0 + z.norm_sqr());
            Ok(())
        };
        let mut prev = f64::INFINITY;
        for depth in 0..4 {
            let r = integrate_vec_best_effort(&base.clone().with_max_depth(depth), 1, f).unwrap();
            assert!(r.err_est[0] <= prev);
            prev = r.err_est[0];
        }
    }

    #[test]
    fn degrees_of_basic_lifts() {
        let id = RationalMap::<f64>::identity();
        let s = QuadScheme::for_map(&id);
        let d = degree(&lift(id.clone()), &s).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6);
        let e = energy(&lift(id.clone()), &s).unwrap();
        assert!((e.value - 4.0 * PI).abs() < 1e-8 * 4.0 * PI);
        let anti = id.with_orientation(Orientation::AntiHolomorphic);
        let d = degree(&lift(anti.clone()), &QuadScheme::for_map(&anti)).unwrap();
        assert!((d.value + 1.0).abs() < 1e-6);
    }

    #[test]
    fn psi_energy_over_bubble_scheme() {
        let r = 5.0;
        let m = RationalMap::holomorphic(
            ComplexPoly::new(vec![Complex::new(0.0, -2.0 * r * r), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]),
            ComplexPoly::from_real(&[1.0]),
        )
        .unwrap();
        let s = QuadScheme::bubble_pair(r);
        let e = integrate(|z| crate::sphere_fields::dirichlet_density(&m, z), &s).unwrap();
        assert!((e.value - 16.0 * PI).abs() <= 1e-8 * 16.0 * PI);
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let s = QuadScheme::<f64>::bubble_pair(7.0);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| integrate(|z| (-(z - Complex::new(7.0, 7.0)).norm_sqr()).exp() * z.re.cos(), &s).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.err.to_bits(), b.err.to_bits());
    }

    #[test]
    fn inverted_chart_covers_half_plane_once() {
        // A wide Gaussian centered between the sites crosses the bisector cut
        // and both exterior charts.
        let s = QuadScheme::<f64>::bubble_pair(4.0);
        let r = integrate_vec_best_effort(&s, 1, |z, out: &mut [f64]| {
            out[0] = (-(z.norm_sqr() / 400.0)).exp();
            Ok(())
        })
        .unwrap();
        assert!((r.value[0] - 400.0 * PI).abs() < 1e-9 * 400.0 * PI, "{}", r.value[0]);
    }
}
