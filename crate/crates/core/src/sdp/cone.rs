//! Jordan-algebra helpers for the 2×2 Hermitian PSD cone in Pauli
//! coordinates, where it is the Lorentz cone `{(t, x) : t ≥ |x|}` in R⁴.

use nalgebra::Matrix4;

pub(crate) type Vec4 = [f64; 4];

pub(crate) const E: Vec4 = [1.0, 0.0, 0.0, 0.0];

#[inline]
pub(crate) fn dot(u: &Vec4, v: &Vec4) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3]
}

/// `uᵀ J u` with `J = diag(1, -1, -1, -1)`.
#[inline]
pub(crate) fn jnorm_sq(u: &Vec4) -> f64 {
    let tail = u[1].hypot(u[2]).hypot(u[3]);
    (u[0] - tail) * (u[0] + tail)
}

#[inline]
pub(crate) fn tail_norm(u: &Vec4) -> f64 {
    u[1].hypot(u[2]).hypot(u[3])
}

/// `u ∘ v = (uᵀv, u0·v1 + v0·u1)`.
pub(crate) fn jordan(u: &Vec4, v: &Vec4) -> Vec4 {
    [
        dot(u, v),
        u[0] * v[1] + v[0] * u[1],
        u[0] * v[2] + v[0] * u[2],
        u[0] * v[3] + v[0] * u[3],
    ]
}

/// Solves `lambda ∘ x = r` for `x`.
pub(crate) fn jordan_div(lambda: &Vec4, r: &Vec4) -> Vec4 {
    let det = jnorm_sq(lambda);
    let x0 = (lambda[0] * r[0] - (lambda[1] * r[1] + lambda[2] * r[2] + lambda[3] * r[3])) / det;
    [
        x0,
        (r[1] - x0 * lambda[1]) / lambda[0],
        (r[2] - x0 * lambda[2]) / lambda[0],
        (r[3] - x0 * lambda[3]) / lambda[0],
    ]
}

/// Smallest `a` with `u + a·e` in the cone (negative when `u` is interior).
pub(crate) fn shift_to_boundary(u: &Vec4) -> f64 {
    tail_norm(u) - u[0]
}

/// Largest `a ≥ 0` keeping `lambda + a·d` in the cone; `f64::INFINITY` if
/// unbounded. `lambda` must be interior.
pub(crate) fn max_step(lambda: &Vec4, d: &Vec4) -> f64 {
    // boost lambda to the cone axis, then the bound is linear
    let n = jnorm_sq(lambda).sqrt();
    let l = [lambda[0] / n, lambda[1] / n, lambda[2] / n, lambda[3] / n];
    let l_tail_d = l[1] * d[1] + l[2] * d[2] + l[3] * d[3];
    let d0 = (l[0] * d[0] - l_tail_d) / n;
    let k = (l_tail_d / (1.0 + l[0]) - d[0]) / n;
    let d1 = [
        d[1] / n + k * l[1],
        d[2] / n + k * l[2],
        d[3] / n + k * l[3],
    ];
    let slope = d1[0].hypot(d1[1]).hypot(d1[2]) - d0;
    if slope > 0.0 {
        1.0 / slope
    } else {
        f64::INFINITY
    }
}

/// Nesterov–Todd scaling `W` for an interior pair `(s, z)`: `W z = W⁻¹ s`.
#[derive(Clone, Debug)]
pub(crate) struct NtScaling {
    pub w: Matrix4<f64>,
    pub w_inv: Matrix4<f64>,
}

impl NtScaling {
    pub fn new(s: &Vec4, z: &Vec4) -> Self {
        let sn = jnorm_sq(s).sqrt();
        let zn = jnorm_sq(z).sqrt();
        let sb = s.map(|v| v / sn);
        let zb = z.map(|v| v / zn);
        let gamma = ((1.0 + dot(&sb, &zb)) * 0.5).sqrt();
        let wb = [
            (sb[0] + zb[0]) / (2.0 * gamma),
            (sb[1] - zb[1]) / (2.0 * gamma),
            (sb[2] - zb[2]) / (2.0 * gamma),
            (sb[3] - zb[3]) / (2.0 * gamma),
        ];
        let beta = (sn / zn).sqrt();
        let k = 1.0 / (1.0 + wb[0]);
        let mut w = Matrix4::zeros();
        let mut w_inv = Matrix4::zeros();
        w[(0, 0)] = wb[0];
        w_inv[(0, 0)] = wb[0];
        for i in 1..4 {
            w[(0, i)] = wb[i];
            w[(i, 0)] = wb[i];
            w_inv[(0, i)] = -wb[i];
            w_inv[(i, 0)] = -wb[i];
            for j in 1..4 {
                let v = k * wb[i] * wb[j] + if i == j { 1.0 } else { 0.0 };
                w[(i, j)] = v;
                w_inv[(i, j)] = v;
            }
        }
        Self {
            w: w * beta,
            w_inv: w_inv / beta,
        }
    }

    pub fn apply(&self, v: &Vec4) -> Vec4 {
        mat_vec(&self.w, v)
    }

    pub fn apply_inv(&self, v: &Vec4) -> Vec4 {
        mat_vec(&self.w_inv, v)
    }
}

pub(crate) fn mat_vec(m: &Matrix4<f64>, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[(i, 0)] * v[0] + m[(i, 1)] * v[1] + m[(i, 2)] * v[2] + m[(i, 3)] * v[3];
    }
    out
}
