//! The logarithmic-cutoff perturbation of `Φ = 𝒮(ψ_r)`, `ψ_r = z² − 2ir²`.
//!
//! The direction `𝒦^r = 2K₂ − K₉` is cut off by `f^r`, which is `+1` near the
//! zero `r + ir` of `ψ_r`, `−1` near `−r − ir`, and decays logarithmically
//! across the annuli `√r < s < r`. Subtracting `Σ c_i K_i` with `𝒥c = p`
//! makes the direction orthogonal to the kernel to first order.
//!
//! The Dirichlet cost of the direction is dominated by `64π/3·r⁻⁴`, while the
//! energy deficit it produces is of order `16π/(r⁴ ln r)`, so the stability
//! ratio grows like `(4/3) ln r`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, VecJet};
use crate::kernel_basis::{gram_matrix, kernel_combination, kernel_frame, FamilyField, GramMatrix, ParamVec, BLOCKS, DIM};
use crate::projector::{project, ProjectOptions, ProjectionResult};
use crate::quadrature::{integrate_vec_best_effort, QuadScheme};
use crate::sphere_fields::{bogomolnyi_density, degree_density, perturb_on_sphere, Field, PerturbedField};

/// Default `ε` schedule: runs at `ε` and `ε/2`.
pub const DEFAULT_EPS: f64 = 1e-2;

/// Projector stopping tolerance used by reports, tighter than the default so
/// the ε⁴ error of the projected distance stays below the quadrature error.
pub const REPORT_GRAD_TOL: f64 = 1e-10;

/// Residual above which [`solve_c`] reports [`Error::IllConditioned`].
pub const SOLVE_TOL: f64 = 1e-8;

/// `Θ^r(w)`: 1 for `|w| < √r`, `2 − 2 ln|w|/ln r` up to `|w| = r`, then 0.
pub fn theta(r: f64, w: Complex<f64>) -> Jet<f64> {
    let s2 = w.norm_sqr();
    if s2 <= r {
        return Jet::constant(1.0);
    }
    if s2 >= r * r {
        return Jet::zero();
    }
    let lr = r.ln();
    let k = -2.0 / (s2 * lr);
    Jet::new(2.0 - s2.ln() / lr, k * w.re, k * w.im)
}

/// The cutoff `f^r(z) = Θ^r(z − r − ir) − Θ^r(z + r + ir)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffField {
    pub r: f64,
}

impl CutoffField {
    pub fn center(&self) -> Complex<f64> {
        Complex::new(self.r, self.r)
    }

    pub fn eval(&self, z: Complex<f64>) -> Jet<f64> {
        let c = self.center();
        theta(self.r, z - c) - theta(self.r, z + c)
    }
}

/// `𝒦^r = 2K₂^r − K₉^r` at `α_r`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScriptK {
    pub r: f64,
}

pub fn script_k(r: f64) -> Result<ScriptK> {
    if !(r >= 2.0) {
        return Err(Error::Invalid(format!("script_k needs r >= 2, got {r}")));
    }
    Ok(ScriptK { r })
}

impl ScriptK {
    /// `(Φ, 𝒦^r)` at `z`.
    pub fn with_base(&self, z: Complex<f64>) -> Result<(VecJet<f64>, VecJet<f64>)> {
        kernel_combination(&ParamVec::alpha_r(self.r), self.r, z, &[(2, 2.0), (9, -1.0)])
    }
}

impl Field<f64> for ScriptK {
    fn eval(&self, z: Complex<f64>) -> Result<VecJet<f64>> {
        Ok(self.with_base(z)?.1)
    }
}

/// The direction `v = f^r 𝒦^r − Σ c_i K_i^r`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DirectionField {
    pub r: f64,
    pub c: [f64; DIM],
}

impl DirectionField {
    /// `f^r 𝒦^r` alone.
    pub fn uncorrected(r: f64) -> Self {
        Self { r, c: [0.0; DIM] }
    }
}

impl Field<f64> for DirectionField {
    fn eval(&self, z: Complex<f64>) -> Result<VecJet<f64>> {
        let f = CutoffField { r: self.r }.eval(z);
        let mut terms = vec![(2, 2.0 * f.value), (9, -f.value)];
        terms.extend((0..DIM).filter(|&i| self.c[i] != 0.0).map(|i| (i + 1, -self.c[i])));
        let (_, v) = kernel_combination(&ParamVec::alpha_r(self.r), self.r, z, &terms)?;
        if f.dx == 0.0 && f.dy == 0.0 {
            return Ok(v);
        }
        // the product rule term ∇f ⊗ 𝒦
        let k = ScriptK { r: self.r }.with_base(z)?.1.value();
        let mut out = v;
        for a in 0..3 {
            out.0[a].dx += f.dx * k.0[a];
            out.0[a].dy += f.dy * k.0[a];
        }
        Ok(out)
    }
}

/// A vector of ten integrals with error estimates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelVector {
    pub value: [f64; DIM],
    pub err: [f64; DIM],
}

impl KernelVector {
    /// Component `i`, 1-based.
    pub fn get(&self, i: usize) -> f64 {
        self.value[i - 1]
    }
}

/// `p_j = ∫|∇Φ|² f^r 𝒦^r·K_j^r`.
pub fn p_vector(r: f64, s: &QuadScheme<f64>) -> Result<KernelVector> {
    script_k(r)?;
    let alpha = ParamVec::alpha_r(r);
    let cut = CutoffField { r };
    let res = integrate_vec_best_effort(s, DIM, |z, out| {
        let f = cut.eval(z).value;
        if f == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        let fr = kernel_frame(&alpha, r, z)?;
        let k = fr.k[1].value().scale(2.0) - fr.k[8].value();
        let w = fr.grad_phi_sq() * f;
        for (o, kj) in out.iter_mut().zip(&fr.k) {
            *o = w * k.dot(&kj.value());
        }
        Ok(())
    })?;
    Ok(KernelVector { value: std::array::from_fn(|i| res.value[i]), err: std::array::from_fn(|i| res.err_est[i]) })
}

/// The three integrals controlling the cutoff direction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffEnergetics {
    pub r: f64,
    /// `∫|∇Φ|²|f𝒦|²`.
    pub weighted: f64,
    /// `∫|∇f|²|𝒦|²`.
    pub cutoff_gradient: f64,
    /// `∫|∇(f𝒦)|²`.
    pub full: f64,
    /// `∫|∇(f𝒦)|² − |∇Φ|²|f𝒦|²`, integrated as one density.
    pub second_variation: f64,
    pub err: [f64; 4],
}

impl CutoffEnergetics {
    /// `|full − (weighted + cutoff_gradient)| / full`.
    pub fn split_residual(&self) -> f64 {
        (self.full - self.weighted - self.cutoff_gradient).abs() / self.full
    }
}

pub fn cutoff_energetics(r: f64, s: &QuadScheme<f64>) -> Result<CutoffEnergetics> {
    script_k(r)?;
    let v = DirectionField::uncorrected(r);
    let res = integrate_vec_best_effort(s, 4, |z, out| {
        let f = CutoffField { r }.eval(z);
        if f.value == 0.0 && f.dx == 0.0 && f.dy == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        let (phi, k) = ScriptK { r }.with_base(z)?;
        let vj = v.eval(z)?;
        let k2 = k.value().norm_sqr();
        let g = phi.grad_norm_sqr();
        let vv = vj.value().norm_sqr();
        out[0] = g * vv;
        out[1] = f.grad_norm_sqr() * k2;
        out[2] = vj.grad_norm_sqr();
        out[3] = vj.grad_norm_sqr() - g * vv;
        Ok(())
    })?;
    Ok(CutoffEnergetics {
        r,
        weighted: res.value[0],
        cutoff_gradient: res.value[1],
        full: res.value[2],
        second_variation: res.value[3],
        err: std::array::from_fn(|i| res.err_est[i]),
    })
}

/// Leading behaviour of [`CutoffEnergetics::weighted`]: `64π/3·r⁻⁴`.
pub fn weighted_leading(r: f64) -> f64 {
    64.0 * PI / 3.0 / r.powi(4)
}

/// Radial estimate of [`CutoffEnergetics::cutoff_gradient`]: `32π/(r⁴ ln r)`.
pub fn cutoff_gradient_leading(r: f64) -> f64 {
    32.0 * PI / (r.powi(4) * r.ln())
}

/// Solution of `𝒥c = p` with its relative residual.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CSolution {
    pub c: [f64; DIM],
    pub residual: f64,
}

impl CSolution {
    pub fn get(&self, i: usize) -> f64 {
        self.c[i - 1]
    }
}

fn block_solve(j: &GramMatrix<f64>, rhs: &[f64; DIM]) -> Result<[f64; DIM]> {
    let mut x = [0.0; DIM];
    for block in BLOCKS {
        let n = block.len();
        let m = DMatrix::from_fn(n, n, |a, b| j.get(block[a], block[b]));
        let b = DVector::from_fn(n, |a, _| rhs[block[a] - 1]);
        let sol = m.lu().solve(&b).ok_or(Error::IllConditioned(f64::INFINITY))?;
        for (a, &i) in block.iter().enumerate() {
            x[i - 1] = sol[a];
        }
    }
    Ok(x)
}

fn apply(j: &GramMatrix<f64>, x: &[f64; DIM]) -> [f64; DIM] {
    std::array::from_fn(|i| (0..DIM).map(|k| j.entries[i][k] * x[k]).sum())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `𝒥c = p` block by block, then refines once against the full matrix.
pub fn solve_c(j: &GramMatrix<f64>, p: &[f64; DIM]) -> Result<CSolution> {
    let mut c = block_solve(j, p)?;
    let res: [f64; DIM] = std::array::from_fn(|i| p[i] - apply(j, &c)[i]);
    let dc = block_solve(j, &res)?;
    for i in 0..DIM {
        c[i] += dc[i];
    }
    let jc = apply(j, &c);
    let r: Vec<f64> = (0..DIM).map(|i| jc[i] - p[i]).collect();
    let pn = norm(p);
    let residual = if pn == 0.0 { norm(&r) } else { norm(&r) / pn };
    if !(residual <= SOLVE_TOL) {
        return Err(Error::IllConditioned(residual));
    }
    Ok(CSolution { c, residual })
}

/// The perturbed map `u = εv + √(1 − ε²|v|²) Φ`.
pub type CounterexampleField = PerturbedField<FamilyField<f64>, DirectionField, f64>;

pub fn build_u(r: f64, eps: f64, c: &[f64; DIM]) -> CounterexampleField {
    perturb_on_sphere(FamilyField { alpha: ParamVec::alpha_r(r) }, DirectionField { r, c: *c }, eps)
}

/// Energetics of a perturbation `u = Φ + ζ` of `Φ`.
#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub eps: f64,
    /// `𝓔(u) − 4π deg u` from the Bogomol'nyi density.
    pub deficit: f64,
    pub deficit_err: f64,
    pub degree: f64,
    /// `ε²∫|∇v|²`.
    pub dist_sq_formula: f64,
    pub dist_sq_formula_err: f64,
    /// `½∫|∇ζ|² − |ζ|²|∇Φ|²`, equal to the deficit when `deg u = deg Φ`.
    pub identity_half: f64,
    pub identity_err: f64,
    /// `∫∇u : ∇K_i`.
    pub orthogonality: [f64; DIM],
    pub quad_err: f64,
}

pub fn measure<B: Field<f64>, V: Field<f64>>(u: &PerturbedField<B, V, f64>, alpha: &ParamVec<f64>, r: f64, s: &QuadScheme<f64>) -> Result<Measurement> {
    let res = integrate_vec_best_effort(s, 5 + DIM, |z, out| {
        let p = u.parts(z)?;
        let fr = kernel_frame(alpha, r, z)?;
        let uj = p.base + p.displacement;
        let zeta = p.displacement;
        out[0] = bogomolnyi_density(&uj, 1.0);
        out[1] = degree_density(&uj);
        out[2] = p.v.grad_norm_sqr();
        out[3] = zeta.grad_norm_sqr() - zeta.value().norm_sqr() * p.base.grad_norm_sqr();
        out[4] = 0.0;
        for i in 0..DIM {
            out[5 + i] = zeta.grad_inner(&fr.k[i]);
        }
        Ok(())
    })?;
    let e2 = u.eps * u.eps;
    Ok(Measurement {
        eps: u.eps,
        deficit: res.value[0],
        deficit_err: res.err_est[0],
        degree: res.value[1] / (4.0 * PI),
        dist_sq_formula: e2 * res.value[2],
        dist_sq_formula_err: e2 * res.err_est[2],
        identity_half: 0.5 * res.value[3],
        identity_err: 0.5 * res.err_est[3],
        orthogonality: std::array::from_fn(|i| res.value[5 + i]),
        quad_err: res.err_est.iter().copied().fold(0.0, f64::max),
    })
}

/// Measurements and projection at one `ε`.
#[derive(Clone, Debug, Serialize)]
pub struct EpsSample {
    pub measurement: Measurement,
    pub projection: ProjectionResult,
}

/// `(4q(ε/2) − q(ε))/3` for `q = Q/ε²`, exact for `Q = aε² + bε⁴`.
pub fn richardson(q_eps: f64, q_half: f64, eps: f64) -> f64 {
    let a = q_eps / (eps * eps);
    let b = q_half / (0.25 * eps * eps);
    (4.0 * b - a) / 3.0
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub p: KernelVector,
    pub c: CSolution,
    pub gram_max_err: f64,
    /// Runs at `ε` and `ε/2`.
    pub samples: [EpsSample; 2],
    pub deficit_eps2_coeff: f64,
    pub dist2_formula_eps2_coeff: f64,
    pub dist2_eps2_coeff: f64,
    /// Largest quadrature error estimate over every integral in the report.
    pub quad_err_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub r: f64,
    pub eps: f64,
    /// `𝓔(u) − 8π` at `ε`.
    pub deficit: f64,
    pub dist_sq_formula: f64,
    pub dist_sq_projected: f64,
    /// Extrapolated `ε²` coefficient of the projected distance over that of the deficit.
    pub ratio: f64,
    pub log_ratio: f64,
    /// `dist²/(deficit·(1 + |ln deficit|))` from the extrapolated coefficients at `ε`.
    pub conj_ratio: f64,
    pub diagnostics: Diagnostics,
}

/// Scheme and projector settings for [`report_with`].
#[derive(Clone, Debug)]
pub struct ReportConfig {
    pub scheme: QuadScheme<f64>,
    pub project: ProjectOptions,
}

impl ReportConfig {
    pub fn new(r: f64) -> Self {
        let mut project = ProjectOptions::new(r);
        project.grad_tol = REPORT_GRAD_TOL;
        Self { scheme: QuadScheme::bubble_pair(r), project }
    }
}

pub fn report(r: f64, eps: f64) -> Result<CounterexampleReport> {
    report_with(r, eps, &ReportConfig::new(r))
}

pub fn report_with(r: f64, eps: f64, cfg: &ReportConfig) -> Result<CounterexampleReport> {
    if !(r >= 5.0) {
        return Err(Error::Invalid(format!("report needs r >= 5, got {r}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    let s = &cfg.scheme;
    let alpha = ParamVec::alpha_r(r);
    let gram = gram_matrix(&alpha, r, s)?;
    let p = p_vector(r, s)?;
    let c = solve_c(&gram, &p.value)?;
    let run = |e: f64| -> Result<EpsSample> {
        let u = build_u(r, e, &c.c);
        let measurement = measure(&u, &alpha, r, s)?;
        let projection = project(&u, &alpha, s, &cfg.project)?;
        Ok(EpsSample { measurement, projection })
    };
    let (a, b) = rayon::join(|| run(eps), || run(0.5 * eps));
    let samples = [a?, b?];
    let [m0, m1] = [&samples[0].measurement, &samples[1].measurement];
    let deficit_coeff = richardson(m0.deficit, m1.deficit, eps);
    let formula_coeff = richardson(m0.dist_sq_formula, m1.dist_sq_formula, eps);
    let proj_coeff = richardson(samples[0].projection.dist_sq, samples[1].projection.dist_sq, eps);
    let ratio = proj_coeff / deficit_coeff;
    let d = deficit_coeff * eps * eps;
    let conj_ratio = proj_coeff * eps * eps / (d * (1.0 + d.ln().abs()));
    let quad_err_bound = samples
        .iter()
        .flat_map(|x| [x.measurement.quad_err, x.projection.dist_sq_err])
        .chain(p.err)
        .chain([gram.max_err()])
        .fold(0.0, f64::max);
    Ok(CounterexampleReport {
        r,
        eps,
        deficit: m0.deficit,
        dist_sq_formula: m0.dist_sq_formula,
        dist_sq_projected: samples[0].projection.dist_sq,
        ratio,
        log_ratio: ratio / r.ln(),
        conj_ratio,
        diagnostics: Diagnostics {
            p,
            c,
            gram_max_err: gram.max_err(),
            samples,
            deficit_eps2_coeff: deficit_coeff,
            dist2_formula_eps2_coeff: formula_coeff,
            dist2_eps2_coeff: proj_coeff,
            quad_err_bound,
        },
    })
}

/// One row of a sweep in CSV order.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub eps: f64,
    pub deficit_eps2_coeff: f64,
    pub dist2_eps2_coeff: f64,
    pub ratio: f64,
    pub ratio_over_lnr: f64,
    pub conj_ratio: f64,
    pub quad_err_bound: f64,
}

pub const SWEEP_HEADER: &str = "r,eps,deficit_eps2_coeff,dist2_eps2_coeff,ratio,ratio_over_lnr,conj_ratio,quad_err_bound";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        [self.r, self.eps, self.deficit_eps2_coeff, self.dist2_eps2_coeff, self.ratio, self.ratio_over_lnr, self.conj_ratio, self.quad_err_bound]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl From<&CounterexampleReport> for SweepRow {
    fn from(x: &CounterexampleReport) -> Self {
        Self {
            r: x.r,
            eps: x.eps,
            deficit_eps2_coeff: x.diagnostics.deficit_eps2_coeff,
            dist2_eps2_coeff: x.diagnostics.dist2_eps2_coeff,
            ratio: x.ratio,
            ratio_over_lnr: x.log_ratio,
            conj_ratio: x.conj_ratio,
            quad_err_bound: x.diagnostics.quad_err_bound,
        }
    }
}

/// Reports for each `r`, in order.
pub fn sweep(r_list: &[f64], eps: f64) -> Result<Vec<CounterexampleReport>> {
    r_list.iter().map(|&r| report(r, eps)).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `𝓔(u_ε) − 8π − ½ε²Q` for `u_ε` built from `f^r𝒦^r` alone.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondVariation {
    pub r: f64,
    pub eps: f64,
    /// `Q = ∫|∇v|² − |∇Φ|²|v|²`.
    pub q: f64,
    pub deficit: f64,
    pub remainder: f64,
    pub err: f64,
}

pub fn second_variation(r: f64, eps: f64, s: &QuadScheme<f64>) -> Result<SecondVariation> {
    let u = perturb_on_sphere(FamilyField { alpha: ParamVec::alpha_r(r) }, DirectionField::uncorrected(r), eps);
    let res = integrate_vec_best_effort(s, 2, |z, out| {
        let p = u.parts(z)?;
        let uj = p.base + p.displacement;
        out[0] = bogomolnyi_density(&uj, 1.0);
        out[1] = p.v.grad_norm_sqr() - p.base.grad_norm_sqr() * p.v.value().norm_sqr();
        Ok(())
    })?;
    let q = res.value[1];
    let deficit = res.value[0];
    Ok(SecondVariation { r, eps, q, deficit, remainder: deficit - 0.5 * eps * eps * q, err: res.err_est[0] + 0.5 * eps * eps * res.err_est[1] })
}
