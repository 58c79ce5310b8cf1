//! Nearest point of the degree-2 family in the Ḣ¹ seminorm.
//!
//! For a field `u` the objective is `D(α) = ∫|∇(u − 𝒮(Ψ[α]))|²`, integrated
//! directly from the difference. The optimizer works in the chart of
//! [`ParamVec::retract`], whose coordinate velocities are the kernel fields,
//! so the gradient of `½D` is `−g` with `g_i = ∫∇(u − 𝒮(Ψ[α])) : ∇K_i[α]`
//! and the Gauss–Newton model matrix is the Gram matrix `𝒥[α]`.

use nalgebra::{Cholesky, SVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, Vec3, VecJet};
use crate::kernel_basis::{gram_weighted, kernel_frame, FamilyField, ParamVec, DIM};
use crate::quadrature::{integrate_vec_abs_tols, integrate_vec_best_effort, Estimate, QuadScheme};
use crate::sphere_fields::{bogomolnyi_density, perturb_on_sphere, Field};

pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_MAX_HALVINGS: usize = 20;
pub const DEFAULT_GRAD_TOL: f64 = 1e-9;
/// Accuracy of each gradient component relative to the stopping threshold.
pub const GRAD_TOL_FRACTION: f64 = 1e-2;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProjectOptions {
    /// Scale `r` of the chart normalization `r^{β_i}`.
    pub r: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Stop when `‖g‖ ≤ grad_tol·(1 + ‖∇u‖²)`.
    pub grad_tol: f64,
}

impl ProjectOptions {
    pub fn new(r: f64) -> Self {
        Self { r, max_iter: DEFAULT_MAX_ITER, max_halvings: DEFAULT_MAX_HALVINGS, grad_tol: DEFAULT_GRAD_TOL }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionResult {
    pub alpha_star: ParamVec<f64>,
    pub dist_sq: f64,
    pub dist_sq_err: f64,
    /// `‖g(α*)‖`.
    pub grad_norm: f64,
    /// Quadrature error bound on `‖g(α*)‖`.
    pub grad_norm_err: f64,
    pub grad: [f64; DIM],
    /// `‖∇u‖²`.
    pub dirichlet: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Smallest eigenvalue of `𝒥[α*]`.
    pub min_model_eigenvalue: f64,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

impl ProjectionResult {
    /// Turns an unconverged result into [`Error::NotConverged`].
    pub fn into_strict(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, grad_norm: self.grad_norm })
        }
    }

    /// Distance from `alpha` in the scaled chart coordinates.
    pub fn scaled_distance(&self, alpha: &ParamVec<f64>, r: f64) -> f64 {
        self.alpha_star.scaled_distance(alpha, r)
    }
}

/// `D(α)`, `g(α)` and `‖∇u‖²` from one integration.
#[derive(Clone, Debug)]
pub struct Residual {
    pub dist_sq: Estimate<f64>,
    pub grad: [f64; DIM],
    pub grad_err: [f64; DIM],
    pub dirichlet: f64,
}

/// `grad_abs_tol` bounds the absolute error of each `g_i`; the components
/// are differences of nearly equal fields and cannot be resolved relatively.
/// `D` gets the absolute tolerance `grad_abs_tol²`.
pub fn residual<U: Field<f64>>(u: &U, alpha: &ParamVec<f64>, r: f64, s: &QuadScheme<f64>, grad_abs_tol: f64) -> Result<Residual> {
    alpha.validate()?;
    let mut tols = [grad_abs_tol; DIM + 2];
    tols[0] = s.abs_tol.max(grad_abs_tol * grad_abs_tol);
    tols[DIM + 1] = s.abs_tol;
    let res = integrate_vec_abs_tols(s, &tols, |z, out| {
        let uj = u.eval(z)?;
        let fr = kernel_frame(alpha, r, z)?;
        let w = uj - fr.phi;
        out[0] = w.grad_norm_sqr();
        for i in 0..DIM {
            out[1 + i] = w.grad_inner(&fr.k[i]);
        }
        out[DIM + 1] = uj.grad_norm_sqr();
        Ok(())
    })?;
    Ok(Residual {
        dist_sq: res.get(0),
        grad: std::array::from_fn(|i| res.value[1 + i]),
        grad_err: std::array::from_fn(|i| res.err_est[1 + i]),
        dirichlet: res.value[DIM + 1],
    })
}

/// `∫|∇u − ∇𝒮(Ψ[α])|²`.
pub fn distance_sq<U: Field<f64>>(u: &U, alpha: &ParamVec<f64>, s: &QuadScheme<f64>) -> Result<Estimate<f64>> {
    alpha.validate()?;
    let fam = FamilyField { alpha: *alpha };
    let res = integrate_vec_best_effort(s, 1, |z, out| {
        out[0] = (u.eval(z)? - fam.eval(z)?).grad_norm_sqr();
        Ok(())
    })?;
    Ok(res.get(0))
}

fn norm(v: &[f64; DIM]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gauss–Newton descent on `D(α)` from `alpha0`.
///
/// A result with `converged == false` carries the best iterate found.
pub fn project<U: Field<f64>>(u: &U, alpha0: &ParamVec<f64>, s: &QuadScheme<f64>, opts: &ProjectOptions) -> Result<ProjectionResult> {
    let r = opts.r;
    let mut alpha = *alpha0;
    let dirichlet = integrate_vec_best_effort(s, 1, |z, out| {
        out[0] = u.eval(z)?.grad_norm_sqr();
        Ok(())
    })?
    .value[0];
    let stop = opts.grad_tol * (1.0 + dirichlet);
    let gtol = GRAD_TOL_FRACTION * stop;
    let mut cur = residual(u, &alpha, r, s, gtol)?;
    let mut history = vec![cur.dist_sq.value];
    let mut iterations = 0;
    let mut min_ev;
    loop {
        let gram = gram_weighted(&alpha, r, s)?;
        min_ev = gram.min_eigenvalue();
        let gn = norm(&cur.grad);
        if gn <= stop || iterations >= opts.max_iter {
            break;
        }
        let chol = Cholesky::new(gram.matrix()).ok_or(Error::SingularModel(iterations))?;
        let step = chol.solve(&SVector::<f64, DIM>::from_column_slice(&cur.grad));
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let s_vec: [f64; DIM] = std::array::from_fn(|i| t * step[i]);
            let trial = alpha.retract(&s_vec, r);
            if trial.validate().is_ok() {
                if let Ok(next) = residual(u, &trial, r, s, gtol) {
                    if next.dist_sq.value <= cur.dist_sq.value * (1.0 + 1e-10) + 1e-300 {
                        accepted = Some((trial, next));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((a, next)) => {
                alpha = a;
                cur = next;
                history.push(cur.dist_sq.value);
            }
            None => break,
        }
    }
    let grad_norm = norm(&cur.grad);
    Ok(ProjectionResult {
        alpha_star: alpha,
        dist_sq: cur.dist_sq.value,
        dist_sq_err: cur.dist_sq.err,
        grad_norm,
        grad_norm_err: norm(&cur.grad_err),
        grad: cur.grad,
        dirichlet: cur.dirichlet,
        iterations,
        converged: grad_norm <= stop,
        min_model_eigenvalue: min_ev,
        history,
    })
}

/// A Gaussian bump `A exp(−|z − c|²/w²)` with vector amplitude.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: [f64; 3],
}

/// Sum of bumps projected onto the tangent plane of `𝒮(Ψ[α])`.
#[derive(Clone, Debug)]
pub struct BumpField {
    pub alpha: ParamVec<f64>,
    pub bumps: Vec<Bump>,
}

impl Field<f64> for BumpField {
    fn eval(&self, z: Complex<f64>) -> Result<VecJet<f64>> {
        let phi = FamilyField { alpha: self.alpha }.eval(z)?;
        let mut w = Vec3([Jet::zero(); 3]);
        for b in &self.bumps {
            let dx = z.re - b.center[0];
            let dy = z.im - b.center[1];
            let w2 = b.width * b.width;
            let g = (-(dx * dx + dy * dy) / w2).exp();
            let gj = Jet::new(g, -2.0 * dx / w2 * g, -2.0 * dy / w2 * g);
            let a = Vec3(b.amplitude.map(Jet::constant));
            w = w + a.scale_jet(gj);
        }
        Ok(w - phi.scale_jet(w.dot(&phi)))
    }
}

/// Five bumps with centers uniform in the disk of radius `2r`, widths
/// uniform in `[r/10, r]` and amplitudes uniform in `[−1, 1]³`.
pub fn random_bumps(rng: &mut impl Rng, r: f64) -> Vec<Bump> {
    (0..5)
        .map(|_| {
            let rho = 2.0 * r * rng.random::<f64>().sqrt();
            let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            Bump {
                center: [rho * th.cos(), rho * th.sin()],
                width: rng.random_range(r / 10.0..=r),
                amplitude: std::array::from_fn(|_| rng.random_range(-1.0..=1.0)),
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeSample {
    pub trial: usize,
    pub deficit: f64,
    pub deficit_err: f64,
    pub dist_sq: f64,
    pub dist_sq_err: f64,
    pub ratio: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `𝓔(u) − 4π deg u` from the Bogomol'nyi density.
pub fn deficit<U: Field<f64>>(u: &U, s: &QuadScheme<f64>) -> Result<Estimate<f64>> {
    let res = integrate_vec_best_effort(s, 1, |z, out| {
        out[0] = bogomolnyi_density(&u.eval(z)?, 1.0);
        Ok(())
    })?;
    Ok(res.get(0))
}

/// Random tangent perturbations of `𝒮(Ψ[α])` of size `eps`, each projected
/// back onto the family starting from `alpha`.
///
/// The largest `ratio` is an empirical lower bound for the stability
/// constant near `𝒮(Ψ[α])`.
pub fn local_stability_probe(alpha: &ParamVec<f64>, r: f64, n_trials: usize, eps: f64, seed: u64, s: &QuadScheme<f64>) -> Result<Vec<ProbeSample>> {
    alpha.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<Bump>> = (0..n_trials).map(|_| random_bumps(&mut rng, r)).collect();
    fields
        .into_par_iter()
        .enumerate()
        .map(|(trial, bumps)| {
            let v = BumpField { alpha: *alpha, bumps };
            let u = perturb_on_sphere(FamilyField { alpha: *alpha }, v, eps);
            probe_one(&u, alpha, r, s, trial)
        })
        .collect()
}

/// Deficit, projected distance and their ratio for one field.
pub fn probe_one<U: Field<f64>>(u: &U, alpha: &ParamVec<f64>, r: f64, s: &QuadScheme<f64>, trial: usize) -> Result<ProbeSample> {
    let d = deficit(u, s)?;
    let p = project(u, alpha, s, &ProjectOptions::new(r))?;
    Ok(ProbeSample {
        trial,
        deficit: d.value,
        deficit_err: d.err,
        dist_sq: p.dist_sq,
        dist_sq_err: p.dist_sq_err,
        ratio: p.dist_sq / d.value,
        converged: p.converged,
        iterations: p.iterations,
    })
}
