//! Independent two-sided bound on the steerable weight, used to check the
//! interior-point solver.
//!
//! The upper bound comes from an explicit unsteerable decomposition found by
//! a primal log-barrier method; the lower bound from a dual-feasible point of
//! `min Σ_j tr(F_j M_j)  s.t.  M_j ⪰ 0, Σ_j D_γ(j) M_j ⪰ I`, found by a dual
//! barrier method. Both end points are checked with exact eigenvalues and
//! rescaled into feasibility before being reported, so the bracket holds
//! regardless of how well the barrier iterations converged.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cone::{jnorm_sq, tail_norm, Vec4};
use super::weight::{
    classify, embed, face_offsets, member_rank, weight_structure, Face, MemberRank, WeightStructure,
};
use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSettings {
    /// Target barrier duality measure `ν/t`.
    pub barrier_tol: f64,
    /// Members with `λ_min ≤ rank_tol · tr` are treated as rank deficient.
    pub rank_tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            barrier_tol: 1e-10,
            rank_tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightBracket {
    pub lower: f64,
    pub upper: f64,
}

impl WeightBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, w: f64, slack: f64) -> bool {
        w >= self.lower - slack && w <= self.upper + slack
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum ConeKind {
    /// `u0 ≥ |u_{1..3}|`, barrier `−log(uᵀJu)`.
    Lorentz,
    /// `u ≥ 0`, barrier `−log u`.
    Ray,
}

struct AffineCone {
    kind: ConeKind,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl AffineCone {
    fn eval(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.a * v + &self.b
    }

    fn interior(&self, u: &DVector<f64>) -> bool {
        match self.kind {
            ConeKind::Lorentz => u[0] > 0.0 && jnorm_sq(&[u[0], u[1], u[2], u[3]]) > 0.0,
            ConeKind::Ray => u[0] > 0.0,
        }
    }

    fn nu(&self) -> f64 {
        match self.kind {
            ConeKind::Lorentz => 2.0,
            ConeKind::Ray => 1.0,
        }
    }

    fn value(&self, u: &DVector<f64>) -> f64 {
        match self.kind {
            ConeKind::Lorentz => -jnorm_sq(&[u[0], u[1], u[2], u[3]]).ln(),
            ConeKind::Ray => -u[0].ln(),
        }
    }

    /// Gradient and Hessian with respect to `u`.
    fn derivatives(&self, u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        match self.kind {
            ConeKind::Lorentz => {
                let q = jnorm_sq(&[u[0], u[1], u[2], u[3]]);
                let ju = DVector::from_vec(vec![u[0], -u[1], -u[2], -u[3]]);
                let mut j = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0, -1.0]));
                j *= -2.0 / q;
                let hess = j + &ju * ju.transpose() * (4.0 / (q * q));
                (ju * (-2.0 / q), hess)
            }
            ConeKind::Ray => (
                DVector::from_element(1, -1.0 / u[0]),
                DMatrix::from_element(1, 1, 1.0 / (u[0] * u[0])),
            ),
        }
    }
}

/// `min cᵀv` over `A_k v + b_k ∈ cone_k`, by a barrier path from an interior
/// start.
fn barrier_minimize(
    c: &DVector<f64>,
    cones: &[AffineCone],
    start: DVector<f64>,
    tol: f64,
) -> DVector<f64> {
    let nu: f64 = cones.iter().map(AffineCone::nu).sum();
    let n = c.len();
    let interior = |v: &DVector<f64>| cones.iter().all(|k| k.interior(&k.eval(v)));
    let objective = |v: &DVector<f64>, t: f64| {
        t * c.dot(v) + cones.iter().map(|k| k.value(&k.eval(v))).sum::<f64>()
    };
    let mut v = start;
    let mut t = 1.0;
    loop {
        for _ in 0..200 {
            let mut grad = c * t;
            let mut hess = DMatrix::zeros(n, n);
            for k in cones {
                let (g, h) = k.derivatives(&k.eval(&v));
                grad += k.a.transpose() * g;
                hess += k.a.transpose() * h * &k.a;
            }
            // Jacobi scaling: null directions of the objective can leave
            // variables many orders of magnitude apart
            let d = hess
                .diagonal()
                .map(|x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt());
            let mut scaled = DMatrix::from_fn(n, n, |i, j| hess[(i, j)] * d[i] * d[j]);
            for i in 0..n {
                scaled[(i, i)] += 1e-14;
            }
            let Some(chol) = Cholesky::new(scaled) else {
                return v;
            };
            let dv = -chol.solve(&grad.component_mul(&d)).component_mul(&d);
            let decrement = -grad.dot(&dv);
            if decrement < 1e-14 {
                break;
            }
            let f0 = objective(&v, t);
            let mut alpha = 1.0;
            loop {
                let trial = &v + &dv * alpha;
                if interior(&trial) && objective(&trial, t) <= f0 - 0.25 * alpha * decrement {
                    v = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-16 {
                    break;
                }
            }
            if alpha < 1e-16 {
                break;
            }
        }
        if nu / t <= tol {
            return v;
        }
        t *= 8.0;
    }
}

fn coords(h: &HermitianOperator2) -> Vec4 {
    h.pauli_coords()
}

/// Smallest eigenvalue of a Pauli-coordinate operator.
fn min_eig(c: &Vec4) -> f64 {
    c[0] - tail_norm(c)
}

fn add4(a: &mut Vec4, b: &Vec4, scale: f64) {
    for i in 0..4 {
        a[i] += scale * b[i];
    }
}

/// Largest feasible unsteerable weight `Σ tr σ_γ`, certified.
fn primal_bound(ws: &WeightStructure, settings: &OracleSettings) -> f64 {
    let faces = classify(ws, settings.rank_tol);
    let (offset, n) = face_offsets(&faces);
    if n == 0 {
        return 0.0;
    }
    let embed = |g: usize| embed(&faces, &offset, n, g);

    let mut c = DVector::zeros(n);
    let mut cones = Vec::new();
    for (g, f) in faces.iter().enumerate() {
        match f {
            Face::Full => {
                c[offset[g]] = -2.0;
                cones.push(AffineCone {
                    kind: ConeKind::Lorentz,
                    a: embed(g),
                    b: DVector::zeros(4),
                });
            }
            Face::Ray(_) => {
                c[offset[g]] = -1.0;
                let mut a = DMatrix::zeros(1, n);
                a[(0, offset[g])] = 1.0;
                cones.push(AffineCone {
                    kind: ConeKind::Ray,
                    a,
                    b: DVector::zeros(1),
                });
            }
            Face::Zero => {}
        }
    }
    let mut start_room = f64::INFINITY;
    for (m, gammas) in ws.members.iter().zip(&ws.incidence) {
        let live: Vec<usize> = gammas
            .iter()
            .copied()
            .filter(|&g| faces[g] != Face::Zero)
            .collect();
        if live.is_empty() {
            continue;
        }
        let tr = m.trace();
        if member_rank(m, settings.rank_tol) == MemberRank::Full {
            let mut a = DMatrix::zeros(4, n);
            for &g in &live {
                a -= embed(g);
            }
            cones.push(AffineCone {
                kind: ConeKind::Lorentz,
                a,
                b: DVector::from_row_slice(&coords(m)),
            });
            start_room = start_room.min(m.min_eigenvalue() / live.len() as f64);
        } else {
            // every live block here is a ray along this member
            let mut a = DMatrix::zeros(1, n);
            for &g in &live {
                a[(0, offset[g])] = -1.0;
            }
            cones.push(AffineCone {
                kind: ConeKind::Ray,
                a,
                b: DVector::from_element(1, tr),
            });
            start_room = start_room.min(tr / live.len() as f64);
        }
    }
    let eps = 0.25 * start_room;
    let mut start = DVector::zeros(n);
    for (g, f) in faces.iter().enumerate() {
        match f {
            Face::Full => start[offset[g]] = eps,
            Face::Ray(_) => start[offset[g]] = eps,
            Face::Zero => {}
        }
    }
    let v = barrier_minimize(&c, &cones, start, settings.barrier_tol);

    // certify: clip blocks into the cone, then shrink until every member
    // constraint holds
    let blocks: Vec<Vec4> = (0..faces.len())
        .map(|g| {
            let e = embed(g) * &v;
            let mut b = [e[0], e[1], e[2], e[3]];
            let neg = (-min_eig(&b)).max(0.0);
            b[0] += neg;
            b
        })
        .collect();
    let mut scale: f64 = 1.0;
    for (m, gammas) in ws.members.iter().zip(&ws.incidence) {
        let mut used = [0.0; 4];
        for &g in gammas {
            add4(&mut used, &blocks[g], 1.0);
        }
        // largest k ≤ 1 with F − k·used ⪰ 0, by bisection on the closed form
        let f = coords(m);
        let rank_one = matches!(member_rank(m, settings.rank_tol), MemberRank::One(_));
        let ok = |k: f64| {
            if rank_one {
                // blocks below are multiples of this member; compare traces
                return f[0] - k * used[0] >= 0.0;
            }
            let mut r = f;
            add4(&mut r, &used, -k);
            min_eig(&r) >= 0.0
        };
        if !ok(scale) {
            let (mut lo, mut hi) = (0.0, scale);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            scale = lo;
        }
    }
    scale * blocks.iter().map(|b| 2.0 * b[0]).sum::<f64>()
}

/// Smallest certified dual objective, an upper bound on `Σ tr σ_γ`.
fn dual_bound(ws: &WeightStructure, settings: &OracleSettings) -> f64 {
    let n_members = ws.members.len();
    let n = 4 * n_members;
    let mut c = DVector::zeros(n);
    for (j, m) in ws.members.iter().enumerate() {
        let f = coords(m);
        // tiny identity shift keeps the barrier bounded along null directions
        let reg = 1e-10 * f[0].max(1e-3);
        c[4 * j] = 2.0 * (f[0] + reg);
        for i in 1..4 {
            c[4 * j + i] = 2.0 * f[i];
        }
    }
    let mut cones = Vec::new();
    for j in 0..n_members {
        let mut a = DMatrix::zeros(4, n);
        for i in 0..4 {
            a[(i, 4 * j + i)] = 1.0;
        }
        cones.push(AffineCone {
            kind: ConeKind::Lorentz,
            a,
            b: DVector::zeros(4),
        });
    }
    let mut per_gamma = vec![Vec::new(); ws.n_strategies];
    for (j, gammas) in ws.incidence.iter().enumerate() {
        for &g in gammas {
            per_gamma[g].push(j);
        }
    }
    for js in &per_gamma {
        let mut a = DMatrix::zeros(4, n);
        for &j in js {
            for i in 0..4 {
                a[(i, 4 * j + i)] = 1.0;
            }
        }
        cones.push(AffineCone {
            kind: ConeKind::Lorentz,
            a,
            b: DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0]),
        });
    }
    let mut start = DVector::zeros(n);
    for j in 0..n_members {
        start[4 * j] = 1.0;
    }
    let v = barrier_minimize(&c, &cones, start, settings.barrier_tol);

    let mut duals: Vec<Vec4> = (0..n_members)
        .map(|j| {
            let mut b = [v[4 * j], v[4 * j + 1], v[4 * j + 2], v[4 * j + 3]];
            let neg = (-min_eig(&b)).max(0.0);
            b[0] += neg;
            b
        })
        .collect();
    let mut worst: f64 = 1.0;
    for js in &per_gamma {
        let mut sum = [0.0; 4];
        for &j in js {
            add4(&mut sum, &duals[j], 1.0);
        }
        worst = worst.min(min_eig(&sum));
    }
    if worst <= 0.0 {
        return f64::INFINITY;
    }
    // grow by a hair more than needed so rounding cannot undercut I
    let grow = (1.0 / worst).max(1.0) * (1.0 + 1e-14);
    for d in &mut duals {
        for x in d.iter_mut() {
            *x *= grow;
        }
    }
    ws.members
        .iter()
        .zip(&duals)
        .map(|(m, d)| {
            let f = coords(m);
            2.0 * (f[0] * d[0] + f[1] * d[1] + f[2] * d[2] + f[3] * d[3])
        })
        .sum()
}

/// Certified bracket `[lower, upper]` on the steerable weight.
pub fn oracle_weight(asm: &Assemblage, settings: &OracleSettings) -> Result<WeightBracket> {
    if !(settings.barrier_tol > 0.0 && settings.rank_tol >= 0.0) {
        return Err(Error::InvalidArgument(
            "oracle tolerances must be positive".into(),
        ));
    }
    for m in asm.members() {
        if m.min_eigenvalue() < -crate::linalg::PSD_TOL {
            return Err(Error::InvalidArgument("oracle needs PSD members".into()));
        }
    }
    let ws = weight_structure(asm)?;
    // rank-deficient members can pin every block to zero; then the feasible
    // set is a point and no barrier is needed
    if classify(&ws, settings.rank_tol)
        .iter()
        .all(|f| *f == Face::Zero)
    {
        return Ok(WeightBracket {
            lower: 1.0,
            upper: 1.0,
        });
    }
    let upper_obj = dual_bound(&ws, settings);
    let lower_obj = primal_bound(&ws, settings);
    Ok(WeightBracket {
        lower: (1.0 - upper_obj).clamp(0.0, 1.0),
        upper: (1.0 - lower_obj).clamp(0.0, 1.0),
    })
}
