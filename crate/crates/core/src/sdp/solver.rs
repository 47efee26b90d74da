//! Homogeneous self-dual interior-point method with Nesterov–Todd scaling
//! and Mehrotra predictor–corrector steps.
//!
//! The problem is rewritten in Pauli coordinates as a cone program
//! `min cᵀx  s.t.  Gx + s = h,  s ∈ K` with `K` a product of 4-dimensional
//! Lorentz cones, one per PSD block and one per linear matrix inequality.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cone::{self, NtScaling, Vec4, E};
use super::SdpStatus;
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator2;

/// `constant − Σ coef · X_block ⪰ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmiConstraint {
    pub constant: HermitianOperator2,
    pub terms: Vec<(usize, f64)>,
}

/// Maximize `Σ_k tr(C_k X_k)` over PSD blocks `X_k`, subject to the
/// listed LMIs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub objective: Vec<HermitianOperator2>,
    pub constraints: Vec<LmiConstraint>,
}

impl SdpProblem {
    pub fn n_blocks(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<()> {
        if self.objective.is_empty() {
            return Err(Error::InvalidArgument(
                "SDP needs at least one block".into(),
            ));
        }
        for c in &self.objective {
            c.validate()?;
        }
        for (j, lmi) in self.constraints.iter().enumerate() {
            lmi.constant.validate()?;
            for &(k, a) in &lmi.terms {
                if k >= self.n_blocks() {
                    return Err(Error::InvalidArgument(format!(
                        "constraint {j} references block {k}, only {} exist",
                        self.n_blocks()
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::NonFinite("constraint coefficient"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SdpSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl SdpSettings {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [(self.gap_tol, "gap_tol"), (self.feas_tol, "feas_tol")] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective of the returned blocks.
    pub primal_value: f64,
    /// Objective of the dual certificate; an upper bound when optimal.
    pub dual_value: f64,
    pub gap: f64,
    /// Worst of the LMI eigenvalue violation and the dual equality residual.
    pub max_residual: f64,
    pub iterations: usize,
    pub variables: Vec<HermitianOperator2>,
}

/// `min cᵀx  s.t.  h − Gx ∈ K`, with `K` a product of `n_cones` Lorentz
/// cones in R⁴ (rows `4k..4k+4`).
pub(crate) struct ConeProgram {
    pub c: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub n_cones: usize,
}

pub(crate) struct ConeSolution {
    pub status: SdpStatus,
    /// `x/τ`.
    pub x: DVector<f64>,
    /// `cᵀx/τ`.
    pub pcost: f64,
    /// `−hᵀz/τ`.
    pub dcost: f64,
    /// Largest eigenvalue violation of `h − Gx/τ`, as a 2×2 operator.
    pub cone_violation: f64,
    /// `‖Gᵀz/τ + c‖∞`.
    pub dual_residual: f64,
    pub iterations: usize,
}

impl ConeProgram {
    fn build(p: &SdpProblem) -> Self {
        let nb = p.n_blocks();
        let nx = 4 * nb;
        let n_cones = nb + p.constraints.len();
        let mut c = DVector::zeros(nx);
        for (k, ck) in p.objective.iter().enumerate() {
            for (i, v) in ck.pauli_coords().iter().enumerate() {
                c[4 * k + i] = -2.0 * v;
            }
        }
        let mut g = DMatrix::zeros(4 * n_cones, nx);
        let mut h = DVector::zeros(4 * n_cones);
        for k in 0..nb {
            for i in 0..4 {
                g[(4 * k + i, 4 * k + i)] = -1.0;
            }
        }
        for (j, lmi) in p.constraints.iter().enumerate() {
            let row = 4 * (nb + j);
            for (i, v) in lmi.constant.pauli_coords().iter().enumerate() {
                h[row + i] = *v;
            }
            for &(k, a) in &lmi.terms {
                for i in 0..4 {
                    g[(row + i, 4 * k + i)] += a;
                }
            }
        }
        Self { c, g, h, n_cones }
    }
}

fn block(v: &DVector<f64>, k: usize) -> Vec4 {
    [v[4 * k], v[4 * k + 1], v[4 * k + 2], v[4 * k + 3]]
}

fn set_block(v: &mut DVector<f64>, k: usize, b: &Vec4) {
    for i in 0..4 {
        v[4 * k + i] = b[i];
    }
}

fn map_blocks(
    v: &DVector<f64>,
    n_cones: usize,
    mut f: impl FnMut(usize, &Vec4) -> Vec4,
) -> DVector<f64> {
    let mut out = DVector::zeros(4 * n_cones);
    for k in 0..n_cones {
        set_block(&mut out, k, &f(k, &block(v, k)));
    }
    out
}

/// Factorization of `[0 Gᵀ; G −W²]` for the current scaling.
const REFINE_PASSES: usize = 10;

/// Square root of the diagonal shift on the equilibrated normal matrix.
/// Larger shifts stall refinement near degenerate optima.
const KKT_SHIFT_ROOT: f64 = 1e-8;

struct KktSolver<'a> {
    prog: &'a ConeProgram,
    scalings: &'a [NtScaling],
    g_scaled: DMatrix<f64>,
    /// Triangular factor of the equilibrated normal matrix.
    r: DMatrix<f64>,
    jacobi: DVector<f64>,
}

impl<'a> KktSolver<'a> {
    fn new(prog: &'a ConeProgram, scalings: &'a [NtScaling]) -> Option<Self> {
        let mut g_scaled = prog.g.clone();
        for (k, nt) in scalings.iter().enumerate() {
            let rows = prog.g.rows(4 * k, 4).into_owned();
            g_scaled.rows_mut(4 * k, 4).copy_from(&(nt.w_inv * rows));
        }
        // column-equilibrate, then factor [G̃D; εI] by QR, which works at the
        // conditioning of G̃ rather than of G̃ᵀG̃
        let (m, nx) = g_scaled.shape();
        let d = DVector::from_fn(nx, |j, _| {
            1.0 / g_scaled.column(j).norm().max(f64::MIN_POSITIVE)
        });
        let mut stacked = DMatrix::zeros(m + nx, nx);
        for j in 0..nx {
            for i in 0..m {
                stacked[(i, j)] = g_scaled[(i, j)] * d[j];
            }
            stacked[(m + j, j)] = KKT_SHIFT_ROOT;
        }
        let r = stacked.qr().r();
        if r.diagonal().iter().any(|v| !v.is_finite() || *v == 0.0) {
            return None;
        }
        Some(Self {
            prog,
            scalings,
            g_scaled,
            r,
            jacobi: d,
        })
    }

    fn solve_once(&self, bx: &DVector<f64>, bz: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = self.prog.n_cones;
        let winv_bz = map_blocks(bz, n, |k, b| self.scalings[k].apply_inv(b));
        let rhs = bx + self.g_scaled.transpose() * &winv_bz;
        let y = self
            .r
            .tr_solve_upper_triangular(&rhs.component_mul(&self.jacobi))
            .and_then(|y| self.r.solve_upper_triangular(&y))
            .expect("triangular factor has a nonzero diagonal");
        let x = y.component_mul(&self.jacobi);
        let t = &self.g_scaled * &x - winv_bz;
        let z = map_blocks(&t, n, |k, b| self.scalings[k].apply_inv(b));
        (x, z)
    }

    fn residual(
        &self,
        bx: &DVector<f64>,
        bz: &DVector<f64>,
        x: &DVector<f64>,
        z: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let n = self.prog.n_cones;
        let w2z = map_blocks(z, n, |k, b| {
            let nt = &self.scalings[k];
            nt.apply(&nt.apply(b))
        });
        (
            bx - self.prog.g.transpose() * z,
            bz - (&self.prog.g * x - w2z),
        )
    }

    /// Solves `Gᵀz = bx`, `Gx − W²z = bz`. Iterative refinement removes the
    /// shift; it runs while each pass at least halves the residual.
    fn solve(&self, bx: &DVector<f64>, bz: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut x, mut z) = self.solve_once(bx, bz);
        let (mut rx, mut rz) = self.residual(bx, bz, &x, &z);
        let mut norm = rx.norm().hypot(rz.norm());
        for _ in 0..REFINE_PASSES {
            let (dx, dz) = self.solve_once(&rx, &rz);
            let (x1, z1) = (&x + dx, &z + dz);
            let (rx1, rz1) = self.residual(bx, bz, &x1, &z1);
            let norm1 = rx1.norm().hypot(rz1.norm());
            if !(norm1 < norm) {
                break;
            }
            (x, z, rx, rz) = (x1, z1, rx1, rz1);
            let done = norm1 > 0.5 * norm;
            norm = norm1;
            if done {
                break;
            }
        }
        (x, z)
    }
}

fn cone_max_step(lambda: &[Vec4], d: &DVector<f64>) -> f64 {
    lambda
        .iter()
        .enumerate()
        .map(|(k, l)| cone::max_step(l, &block(d, k)))
        .fold(f64::INFINITY, f64::min)
}

fn scalar_max_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

fn push_into_cone(v: &mut DVector<f64>, n_cones: usize) {
    let shift = (0..n_cones)
        .map(|k| cone::shift_to_boundary(&block(v, k)))
        .fold(f64::NEG_INFINITY, f64::max);
    if shift >= 0.0 {
        for k in 0..n_cones {
            v[4 * k] += 1.0 + shift;
        }
    }
}

/// Solves the problem with the homogeneous self-dual embedding.
pub fn solve_sdp(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.validate()?;
    let prog = ConeProgram::build(problem);
    let sol = solve_cone_program(&prog, settings)?;
    let variables = (0..problem.n_blocks())
        .map(|k| HermitianOperator2::from_pauli(block(&sol.x, k)))
        .collect();
    Ok(SdpSolution {
        status: sol.status,
        primal_value: -sol.pcost,
        dual_value: -sol.dcost,
        gap: sol.pcost - sol.dcost,
        max_residual: sol.cone_violation.max(sol.dual_residual),
        iterations: sol.iterations,
        variables,
    })
}

pub(crate) fn solve_cone_program(
    prog: &ConeProgram,
    settings: &SdpSettings,
) -> Result<ConeSolution> {
    settings.validate()?;
    let n = prog.n_cones;
    let (c, g, h) = (&prog.c, &prog.g, &prog.h);

    // least-squares starting points
    let unit: Vec<NtScaling> = (0..n).map(|_| NtScaling::new(&E, &E)).collect();
    let kkt0 = KktSolver::new(prog, &unit).ok_or(Error::Solver(SdpStatus::MaxIterations))?;
    let (mut x, z_p) = kkt0.solve(&DVector::zeros(c.len()), h);
    let mut s = -z_p;
    let (_, mut z) = kkt0.solve(&(-c), &DVector::zeros(h.len()));
    push_into_cone(&mut s, n);
    push_into_cone(&mut z, n);
    let (mut tau, mut kappa) = (1.0f64, 1.0f64);

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    for iter in 0..=settings.max_iter {
        iterations = iter;
        let rx = g.transpose() * &z + c * tau;
        let rz = g * &x + &s - h * tau;
        let cx = c.dot(&x);
        let hz = h.dot(&z);
        let rt = kappa + cx + hz;
        let gap = s.dot(&z) / (tau * tau);
        let pres = rz.norm() / tau;
        let dres = rx.norm() / tau;
        let cost_gap = ((cx + hz) / tau).abs();
        if pres <= settings.feas_tol
            && dres <= settings.feas_tol
            && gap.max(cost_gap) <= settings.gap_tol
        {
            status = SdpStatus::Optimal;
            break;
        }
        if hz < 0.0 && (g.transpose() * &z).norm() / (-hz) <= settings.feas_tol {
            status = SdpStatus::Infeasible;
            break;
        }
        if cx < 0.0 && (g * &x + &s).norm() / (-cx) <= settings.feas_tol {
            status = SdpStatus::Unbounded;
            break;
        }
        if iter == settings.max_iter {
            break;
        }

        let scalings: Vec<NtScaling> = (0..n)
            .map(|k| NtScaling::new(&block(&s, k), &block(&z, k)))
            .collect();
        let lambda: Vec<Vec4> = (0..n).map(|k| scalings[k].apply(&block(&z, k))).collect();
        let mu =
            (lambda.iter().map(|l| cone::dot(l, l)).sum::<f64>() + tau * kappa) / (n as f64 + 1.0);
        let Some(kkt) = KktSolver::new(prog, &scalings) else {
            break;
        };
        let (x1, z1) = kkt.solve(&(-c), h);
        let denom = c.dot(&x1) + h.dot(&z1) - kappa / tau;

        let mut sigma = 0.0;
        let mut affine: Option<(DVector<f64>, DVector<f64>, f64, f64)> = None;
        let mut step = None;
        for corrector in [false, true] {
            let eta = if corrector { sigma } else { 0.0 };
            let rc: Vec<Vec4> = (0..n)
                .map(|k| {
                    let mut r = cone::jordan(&lambda[k], &lambda[k]).map(|v| -v);
                    if let Some((dsa, dza, _, _)) = &affine {
                        let cross = cone::jordan(&block(dsa, k), &block(dza, k));
                        for i in 0..4 {
                            r[i] -= cross[i];
                        }
                        r[0] += sigma * mu;
                    }
                    r
                })
                .collect();
            let mut r_tau = -tau * kappa;
            if let Some((_, _, dta, dka)) = &affine {
                r_tau += -dta * dka + sigma * mu;
            }
            let ldiv: Vec<Vec4> = (0..n)
                .map(|k| cone::jordan_div(&lambda[k], &rc[k]))
                .collect();
            let bx = &rx * (-(1.0 - eta));
            let w_ldiv = map_blocks(&DVector::zeros(4 * n), n, |k, _| {
                scalings[k].apply(&ldiv[k])
            });
            let bz = &rz * (-(1.0 - eta)) - w_ldiv;
            let bt = -(1.0 - eta) * rt - r_tau / tau;
            let (x2, z2) = kkt.solve(&bx, &bz);
            let dtau = (bt - c.dot(&x2) - h.dot(&z2)) / denom;
            let dx = x2 + &x1 * dtau;
            let dz = z2 + &z1 * dtau;
            // ds from the linearized primal equation keeps rz exact along
            // the step; the scaled copies are only used for step lengths
            let ds = -(&rz * (1.0 - eta)) - g * &dx + h * dtau;
            let dz_t = map_blocks(&dz, n, |k, b| scalings[k].apply(b));
            let ds_t = map_blocks(&ds, n, |k, b| scalings[k].apply_inv(b));
            let dkappa = (r_tau - kappa * dtau) / tau;
            let amax = cone_max_step(&lambda, &ds_t)
                .min(cone_max_step(&lambda, &dz_t))
                .min(scalar_max_step(tau, dtau))
                .min(scalar_max_step(kappa, dkappa));
            if corrector {
                step = Some((amax, dx, ds, dz, dtau, dkappa));
            } else {
                let a = amax.min(1.0);
                sigma = (1.0 - a).powi(3);
                affine = Some((ds_t, dz_t, dtau, dkappa));
            }
        }
        let (amax, dx, ds, dz, dtau, dkappa) = step.expect("corrector step computed");
        let alpha = (0.99 * amax).min(1.0);
        x += &dx * alpha;
        s += ds * alpha;
        z += dz * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if !(tau.is_finite() && kappa.is_finite() && x.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("interior-point iterate"));
        }
    }

    let xs = &x / tau;
    let zs = &z / tau;
    let slack = h - g * &xs;
    let cone_violation = (0..n)
        .map(|k| {
            let b = block(&slack, k);
            (cone::tail_norm(&b) - b[0]).max(0.0)
        })
        .fold(0.0, f64::max);
    let dual_residual = (g.transpose() * &zs + c).amax();
    Ok(ConeSolution {
        status,
        pcost: c.dot(&xs),
        dcost: -h.dot(&zs),
        x: xs,
        cone_violation,
        dual_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn op(a: f64, b: f64, re: f64, im: f64) -> HermitianOperator2 {
        HermitianOperator2::new(a, b, Complex64::new(re, im)).unwrap()
    }

    fn nmat(h: &HermitianOperator2) -> nalgebra::Matrix2<Complex64> {
        let m = h.to_matrix();
        nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    fn bounded_problem(c: HermitianOperator2, m: HermitianOperator2) -> SdpProblem {
        SdpProblem {
            objective: vec![c],
            constraints: vec![LmiConstraint {
                constant: m,
                terms: vec![(0, 1.0)],
            }],
        }
    }

    // max tr(Cσ) over 0 ⪯ σ ⪯ M equals the positive part of M^{1/2} C M^{1/2}
    fn closed_form(c: &HermitianOperator2, m: &HermitianOperator2) -> f64 {
        let mm = nmat(m);
        let eig = mm.symmetric_eigen();
        let sqrt_vals = eig
            .eigenvalues
            .map(|v| nalgebra::ComplexField::sqrt(v.max(0.0)));
        let root = &eig.eigenvectors
            * nalgebra::Matrix2::from_diagonal(&sqrt_vals.map(|v| Complex64::new(v, 0.0)))
            * eig.eigenvectors.adjoint();
        let k = &root * nmat(c) * &root;
        k.symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0))
            .sum()
    }

    // crude search over σ = M^{1/2} P M^{1/2}, P ranging over a Bloch grid of
    // operators 0 ⪯ P ⪯ I
    fn grid_value(c: &HermitianOperator2, m: &HermitianOperator2) -> f64 {
        let mut best = 0.0f64;
        let steps = 16;
        for a in 0..=steps {
            let t = a as f64 / steps as f64;
            for th in 0..=steps {
                for ph in 0..(2 * steps) {
                    let theta = std::f64::consts::PI * th as f64 / steps as f64;
                    let phi = std::f64::consts::PI * ph as f64 / steps as f64;
                    let r = t.min(1.0 - t);
                    let p = HermitianOperator2::from_pauli([
                        t,
                        r * theta.sin() * phi.cos(),
                        r * theta.sin() * phi.sin(),
                        r * theta.cos(),
                    ]);
                    let root = sqrtm(m);
                    let sig = p.conjugate_by_hermitian(&root);
                    best = best.max(c.trace_product(&sig));
                }
            }
        }
        best
    }

    fn sqrtm(m: &HermitianOperator2) -> nalgebra::Matrix2<Complex64> {
        let eig = nmat(m).symmetric_eigen();
        let v = eig
            .eigenvalues
            .map(|v| nalgebra::ComplexField::sqrt(v.max(0.0)));
        &eig.eigenvectors
            * nalgebra::Matrix2::from_diagonal(&v.map(|x| Complex64::new(x, 0.0)))
            * eig.eigenvectors.adjoint()
    }

    trait ConjHerm {
        fn conjugate_by_hermitian(&self, r: &nalgebra::Matrix2<Complex64>) -> HermitianOperator2;
    }

    impl ConjHerm for HermitianOperator2 {
        fn conjugate_by_hermitian(&self, r: &nalgebra::Matrix2<Complex64>) -> HermitianOperator2 {
            let k = r * nmat(self) * r;
            HermitianOperator2::new(k[(0, 0)].re, k[(1, 1)].re, k[(0, 1)]).unwrap()
        }
    }

    #[test]
    fn trace_below_half_identity() {
        let p = bounded_problem(
            HermitianOperator2::IDENTITY,
            HermitianOperator2::IDENTITY * 0.5,
        );
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_value - 1.0).abs() < 1e-7, "{sol:?}");
        assert!(sol.gap.abs() < 1e-7);
    }

    #[test]
    fn empty_feasible_set_is_infeasible() {
        // σ ⪰ I and σ ⪯ 0
        let p = SdpProblem {
            objective: vec![HermitianOperator2::IDENTITY],
            constraints: vec![
                LmiConstraint {
                    constant: HermitianOperator2::ZERO,
                    terms: vec![(0, 1.0)],
                },
                LmiConstraint {
                    constant: -HermitianOperator2::IDENTITY,
                    terms: vec![(0, -1.0)],
                },
            ],
        };
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unconstrained_growth_is_unbounded() {
        let p = SdpProblem {
            objective: vec![HermitianOperator2::IDENTITY],
            constraints: vec![],
        };
        let sol = solve_sdp(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Unbounded);
    }

    #[test]
    fn rank_one_bound() {
        let m = op(1.0, 0.0, 0.0, 0.0);
        let c = op(0.3, -0.7, 0.4, 0.2);
        let sol = solve_sdp(&bounded_problem(c, m), &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_value - 0.3).abs() < 1e-6, "{sol:?}");
    }

    #[test]
    fn grid_never_beats_solver() {
        let c = op(0.4, -0.9, 0.6, -0.3);
        let m = op(0.8, 0.5, 0.1, 0.2);
        let sol = solve_sdp(&bounded_problem(c, m), &SdpSettings::default()).unwrap();
        let grid = grid_value(&c, &m);
        assert!(grid <= sol.dual_value + 1e-7);
        assert!(
            sol.primal_value - grid < 0.02,
            "{} vs {grid}",
            sol.primal_value
        );
    }

    #[test]
    fn rejects_bad_block_index() {
        let p = SdpProblem {
            objective: vec![HermitianOperator2::IDENTITY],
            constraints: vec![LmiConstraint {
                constant: HermitianOperator2::IDENTITY,
                terms: vec![(3, 1.0)],
            }],
        };
        assert!(solve_sdp(&p, &SdpSettings::default()).is_err());
    }

    fn herm() -> impl Strategy<Value = HermitianOperator2> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_map(|(a, b, re, im)| op(a, b, re, im))
    }

    fn pd() -> impl Strategy<Value = HermitianOperator2> {
        (
            0.05..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            0.0..0.9f64,
        )
            .prop_map(|(c0, x, y, z, r)| {
                let n = (x * x + y * y + z * z).sqrt().max(1e-9);
                HermitianOperator2::from_pauli([c0, c0 * r * x / n, c0 * r * y / n, c0 * r * z / n])
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_closed_form(c in herm(), m in pd()) {
            let sol = solve_sdp(&bounded_problem(c, m), &SdpSettings::default()).unwrap();
            prop_assert_eq!(sol.status, SdpStatus::Optimal);
            let want = closed_form(&c, &m);
            prop_assert!((sol.primal_value - want).abs() < 1e-6, "{} vs {}", sol.primal_value, want);
            prop_assert!(sol.gap.abs() < 1e-6);
            prop_assert!(sol.max_residual < 1e-7);
        }
    }
}
