//! Steerable weight of an assemblage: `w = 1 − max Σ_γ tr σ_γ` over PSD
//! blocks with `σ_{a|i} − Σ_γ D_γ(a|i) σ_γ ⪰ 0`.

use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use super::cone::{self, Vec4};
use super::solver::{solve_cone_program, ConeProgram, SdpSettings};
use super::SdpStatus;
use crate::assemblage::{deterministic_strategies, require_consistent, Assemblage};
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator2;

/// Constraint `j` (canonical member order) and the strategies that assign
/// its outcome.
pub(crate) struct WeightStructure {
    pub members: Vec<HermitianOperator2>,
    pub n_strategies: usize,
    pub incidence: Vec<Vec<usize>>,
}

pub(crate) fn weight_structure(asm: &Assemblage) -> Result<WeightStructure> {
    let strategies = deterministic_strategies(asm.n_measurements())?;
    let mut members = Vec::new();
    let mut incidence = Vec::new();
    for ((axis, a), m) in asm.iter() {
        members.push(*m);
        incidence.push(
            strategies
                .iter()
                .filter(|d| d.response(axis, a) == 1.0)
                .map(|d| d.gamma_id)
                .collect(),
        );
    }
    Ok(WeightStructure {
        members,
        n_strategies: strategies.len(),
        incidence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightSettings {
    pub sdp: SdpSettings,
    /// Values this close to 0 or 1 are snapped and flagged.
    pub clamp_tol: f64,
    /// Consistency tolerance for the input; `None` uses the defaults.
    pub consistency_tol: Option<f64>,
    /// Members with `λ_min ≤ rank_tol · tr` count as rank deficient.
    pub rank_tol: f64,
}

impl Default for WeightSettings {
    fn default() -> Self {
        Self {
            sdp: SdpSettings::default(),
            clamp_tol: 1e-6,
            consistency_tol: None,
            rank_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightResult {
    pub w_t: f64,
    /// `1 − primal optimum` before clamping.
    pub raw_w: f64,
    pub clamped: bool,
    pub certificate_gap: f64,
    pub max_residual: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// `σ_γ`, indexed by strategy id.
    pub unsteerable_part: Vec<HermitianOperator2>,
}

/// Bob's reduced state is whitened when `λ_min > WHITEN_TOL · tr`.
const WHITEN_TOL: f64 = 64.0 * f64::EPSILON;

/// Face of the PSD cone a block is confined to by rank-deficient members.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Face {
    Full,
    /// Nonnegative multiples of the projector with Pauli coordinates
    /// `½·dir`, where `dir = (1, n̂)`.
    Ray(Vec4),
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum MemberRank {
    Full,
    One(Vec4),
    Zero,
}

pub(crate) fn member_rank(m: &HermitianOperator2, rank_tol: f64) -> MemberRank {
    let tr = m.trace();
    let (hi, lo) = m.eigenvalues();
    if hi <= rank_tol || tr <= rank_tol {
        MemberRank::Zero
    } else if lo <= rank_tol * tr {
        let c = m.pauli_coords();
        let r = cone::tail_norm(&c);
        MemberRank::One([1.0, c[1] / r, c[2] / r, c[3] / r])
    } else {
        MemberRank::Full
    }
}

/// Directions of members within `rank_tol` of rank one are compared at
/// `√rank_tol`, the resolution the rank test itself allows.
fn same_direction(a: &Vec4, b: &Vec4, rank_tol: f64) -> bool {
    let tol = rank_tol.sqrt().max(1e-9);
    (1..4).all(|i| (a[i] - b[i]).abs() <= tol)
}

/// A block below a rank-one member must be a multiple of that member; below
/// two non-parallel ones, or below a zero member, it must vanish.
pub(crate) fn classify(ws: &WeightStructure, rank_tol: f64) -> Vec<Face> {
    let mut faces = vec![Face::Full; ws.n_strategies];
    for (m, gammas) in ws.members.iter().zip(&ws.incidence) {
        let face = match member_rank(m, rank_tol) {
            MemberRank::Full => continue,
            MemberRank::One(d) => Face::Ray(d),
            MemberRank::Zero => Face::Zero,
        };
        for &g in gammas {
            faces[g] = match (faces[g], face) {
                (_, Face::Zero) | (Face::Zero, _) => Face::Zero,
                (Face::Full, f) => f,
                (Face::Ray(a), Face::Ray(b)) if same_direction(&a, &b, rank_tol) => Face::Ray(a),
                _ => Face::Zero,
            };
        }
    }
    faces
}

/// Column offsets of each block's variables and the total count.
pub(crate) fn face_offsets(faces: &[Face]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(faces.len());
    let mut n = 0;
    for f in faces {
        offsets.push(n);
        n += match f {
            Face::Full => 4,
            Face::Ray(_) => 1,
            Face::Zero => 0,
        };
    }
    (offsets, n)
}

/// Pauli coordinates of block `g` as a linear map of the variables.
pub(crate) fn embed(faces: &[Face], offsets: &[usize], n: usize, g: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(4, n);
    match faces[g] {
        Face::Full => {
            for i in 0..4 {
                e[(i, offsets[g] + i)] = 1.0;
            }
        }
        Face::Ray(d) => {
            for i in 0..4 {
                e[(i, offsets[g])] = 0.5 * d[i];
            }
        }
        Face::Zero => {}
    }
    e
}

/// Cone program for the weight on the reduced faces. A scalar condition
/// `r ≥ 0` is posed as `diag(r, 1) ⪰ 0`, which keeps every cone
/// four-dimensional.
/// The objective is `Σ_γ tr(cost · σ_γ)`.
fn reduced_program(
    ws: &WeightStructure,
    faces: &[Face],
    cost: &HermitianOperator2,
    rank_tol: f64,
) -> ConeProgram {
    let (offsets, n) = face_offsets(faces);
    let q = cost.pauli_coords();
    let mut c = DVector::zeros(n);
    let mut rows: Vec<(DMatrix<f64>, Vec4)> = Vec::new();
    for (g, f) in faces.iter().enumerate() {
        match f {
            Face::Full => {
                for i in 0..4 {
                    c[offsets[g] + i] = -2.0 * q[i];
                }
                rows.push((-embed(faces, &offsets, n, g), [0.0; 4]));
            }
            Face::Ray(d) => {
                c[offsets[g]] = -(0..4).map(|i| q[i] * d[i]).sum::<f64>();
                let mut a = DMatrix::zeros(4, n);
                a[(0, offsets[g])] = -0.5;
                a[(3, offsets[g])] = -0.5;
                rows.push((a, [0.5, 0.0, 0.0, -0.5]));
            }
            Face::Zero => {}
        }
    }
    for (m, gammas) in ws.members.iter().zip(&ws.incidence) {
        let live: Vec<usize> = gammas
            .iter()
            .copied()
            .filter(|&g| faces[g] != Face::Zero)
            .collect();
        if live.is_empty() {
            continue;
        }
        match member_rank(m, rank_tol) {
            MemberRank::Full => {
                let mut a = DMatrix::zeros(4, n);
                for &g in &live {
                    a += embed(faces, &offsets, n, g);
                }
                rows.push((a, m.pauli_coords()));
            }
            MemberRank::One(_) => {
                // every live block here is a ray along this member
                let p = m.trace();
                let mut a = DMatrix::zeros(4, n);
                for &g in &live {
                    a[(0, offsets[g])] = 0.5;
                    a[(3, offsets[g])] = 0.5;
                }
                rows.push((a, [0.5 * (p + 1.0), 0.0, 0.0, 0.5 * (p - 1.0)]));
            }
            MemberRank::Zero => {}
        }
    }
    let n_cones = rows.len();
    let mut g = DMatrix::zeros(4 * n_cones, n);
    let mut h = DVector::zeros(4 * n_cones);
    for (k, (a, b)) in rows.into_iter().enumerate() {
        g.rows_mut(4 * k, 4).copy_from(&a);
        for i in 0..4 {
            h[4 * k + i] = b[i];
        }
    }
    ConeProgram { c, g, h, n_cones }
}

/// Solves the weight program. Blocks confined to a face by rank-deficient
/// members are parametrized on that face first, so pure members do not
/// leave the program without interior points. Solver statuses other than
/// infeasible or unbounded are reported in the result; those two cannot
/// occur for a consistent assemblage and are returned as errors.
pub fn steerable_weight(asm: &Assemblage, settings: &WeightSettings) -> Result<WeightResult> {
    if !(settings.clamp_tol >= 0.0 && settings.clamp_tol < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "clamp_tol out of range: {}",
            settings.clamp_tol
        )));
    }
    require_consistent(asm, settings.consistency_tol)?;
    let mut ws = weight_structure(asm)?;
    // Whiten by Bob's reduced state: σ ↦ ρ_B^{-1/2} σ ρ_B^{-1/2} keeps the
    // cone and turns the objective into tr(ρ_B σ). Without it the dual
    // optimum grows like 1/λ_min(ρ_B) and the iteration stalls.
    let axes = asm.axes();
    let reduced: HermitianOperator2 = axes
        .iter()
        .map(|&ax| asm.reduced_state(ax))
        .sum::<HermitianOperator2>()
        * (1.0 / axes.len() as f64);
    let (lo, hi) = reduced.eigenvalues();
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let whitening = (lo > WHITEN_TOL * reduced.trace()).then(|| {
        (
            reduced.map_spectrum(|v| 1.0 / v.sqrt()),
            reduced.map_spectrum(f64::sqrt),
        )
    });
    let cost = match &whitening {
        Some((inv_root, root)) => {
            for m in &mut ws.members {
                *m = m.congruence(inv_root);
            }
            HermitianOperator2::diag(1.0, 1.0).congruence(root)
        }
        None => HermitianOperator2::diag(1.0, 1.0),
    };
    let faces = classify(&ws, settings.rank_tol);
    let (offsets, n) = face_offsets(&faces);

    let (unsteerable_part, status, gap, dual_residual, iterations) = if n == 0 {
        (
            vec![HermitianOperator2::ZERO; ws.n_strategies],
            SdpStatus::Optimal,
            0.0,
            0.0,
            0,
        )
    } else {
        let prog = reduced_program(&ws, &faces, &cost, settings.rank_tol);
        let sol = solve_cone_program(&prog, &settings.sdp)?;
        if matches!(sol.status, SdpStatus::Infeasible | SdpStatus::Unbounded) {
            return Err(Error::Solver(sol.status));
        }
        let blocks = (0..faces.len())
            .map(|g| {
                let v = embed(&faces, &offsets, n, g) * &sol.x;
                let b = HermitianOperator2::from_pauli([v[0], v[1], v[2], v[3]]);
                match &whitening {
                    Some((_, root)) => b.congruence(root),
                    None => b,
                }
            })
            .collect();
        (
            blocks,
            sol.status,
            sol.pcost - sol.dcost,
            sol.dual_residual,
            sol.iterations,
        )
    };

    // residuals against the original constraints
    let ws = weight_structure(asm)?;
    let mut violation = unsteerable_part
        .iter()
        .map(|s| (-s.min_eigenvalue()).max(0.0))
        .fold(0.0, f64::max);
    for (m, gammas) in ws.members.iter().zip(&ws.incidence) {
        let used: HermitianOperator2 = gammas.iter().map(|&g| unsteerable_part[g]).sum();
        violation = violation.max((used - *m).eigenvalues().0.max(0.0));
    }
    let optimum: f64 = unsteerable_part.iter().map(HermitianOperator2::trace).sum();

    let max_residual = violation.max(dual_residual);
    // Whitening amplifies rounding in the members by cond(ρ_B); past the gap
    // tolerance the input no longer fixes the weight to that accuracy.
    let amplified = whitening.is_some() && f64::EPSILON * hi / lo > settings.sdp.gap_tol;
    let status = if status == SdpStatus::Optimal
        && (amplified || max_residual > settings.sdp.feas_tol || gap.abs() > settings.sdp.gap_tol)
    {
        SdpStatus::Inaccurate
    } else {
        status
    };

    let raw_w = 1.0 - optimum;
    let (w_t, clamped) = if raw_w <= settings.clamp_tol {
        (0.0, true)
    } else if raw_w >= 1.0 - settings.clamp_tol {
        (1.0, true)
    } else {
        (raw_w, false)
    };
    Ok(WeightResult {
        w_t,
        raw_w,
        clamped,
        certificate_gap: gap,
        max_residual,
        status,
        iterations,
        unsteerable_part,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnsetSettings {
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_tol: f64,
    pub max_bisections: usize,
}

impl Default for OnsetSettings {
    fn default() -> Self {
        Self {
            t_lo: 0.0,
            t_hi: 10.0,
            t_tol: 1e-6,
            max_bisections: 100,
        }
    }
}

/// First time at which the weight leaves the steerable region, i.e. the
/// raw weight drops to the clamp band. `weight_at` returns a solved
/// weight at a dimensionless time. Returns `None` if the weight is still
/// above the band at `t_hi`; an error if it is already inside at `t_lo`.
pub fn unsteerability_onset(
    mut weight_at: impl FnMut(f64) -> Result<WeightResult>,
    clamp_tol: f64,
    settings: &OnsetSettings,
) -> Result<Option<f64>> {
    let OnsetSettings {
        t_lo, t_hi, t_tol, ..
    } = *settings;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi && t_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad bisection interval [{t_lo}, {t_hi}]"
        )));
    }
    let mut steerable = |t: f64| -> Result<bool> {
        let r = weight_at(t)?;
        if r.status != SdpStatus::Optimal {
            return Err(Error::Solver(r.status));
        }
        Ok(r.raw_w > clamp_tol)
    };
    if !steerable(t_lo)? {
        return Err(Error::InvalidArgument(format!(
            "weight already zero at t = {t_lo}"
        )));
    }
    if steerable(t_hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    for _ in 0..settings.max_bisections {
        if hi - lo <= t_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if steerable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{evolve_assemblage, initial_assemblage};
    use crate::channel::{ChannelParams, DimensionlessTime};
    use crate::linalg::{DensityMatrix2, Unitary2};
    use crate::metrics::ts_parameter;
    use crate::states::PreparationConfig;

    fn evolved(n: usize, s: f64, t: f64, rotation: bool) -> Assemblage {
        let prep = PreparationConfig::new(s).unwrap();
        let params = if rotation {
            ChannelParams::default()
        } else {
            ChannelParams::ideal_without_rotation()
        };
        let asm = initial_assemblage(n, &prep).unwrap();
        evolve_assemblage(&asm, DimensionlessTime::new(t).unwrap(), &params, rotation).unwrap()
    }

    fn weight(asm: &Assemblage) -> WeightResult {
        steerable_weight(asm, &WeightSettings::default()).unwrap()
    }

    #[test]
    fn constant_assemblage_has_zero_weight() {
        let rho =
            DensityMatrix2::new(HermitianOperator2::from_pauli([0.5, 0.1, -0.2, 0.3])).unwrap();
        for n in [2, 3] {
            let r = weight(&Assemblage::constant(n, &rho).unwrap());
            assert_eq!(r.status, SdpStatus::Optimal);
            assert!(r.raw_w <= 1e-6, "{r:?}");
            assert_eq!(r.w_t, 0.0);
        }
    }

    #[test]
    fn pure_assemblage_has_unit_weight() {
        for n in [2, 3] {
            let r = weight(&evolved(n, 1.0, 0.0, false));
            assert_eq!(r.status, SdpStatus::Optimal);
            assert!(r.raw_w >= 1.0 - 1e-6, "{r:?}");
            assert_eq!(r.w_t, 1.0);
        }
    }

    #[test]
    fn decomposition_is_feasible() {
        let asm = evolved(3, 0.96, 0.4, true);
        let r = weight(&asm);
        let ws = weight_structure(&asm).unwrap();
        for s in &r.unsteerable_part {
            assert!(s.min_eigenvalue() >= -1e-8);
        }
        for (m, gammas) in ws.members.iter().zip(&ws.incidence) {
            let used: HermitianOperator2 = gammas.iter().map(|&g| r.unsteerable_part[g]).sum();
            assert!((*m - used).min_eigenvalue() >= -1e-8);
        }
    }

    #[test]
    fn unitary_invariance() {
        let asm = evolved(2, 0.96, 0.3, true);
        let base = weight(&asm).w_t;
        let u = Unitary2::from_angles(0.3, 1.1, -0.7);
        let rotated = weight(&asm.conjugated(&u)).w_t;
        assert!((base - rotated).abs() <= 1e-5);
    }

    #[test]
    fn ts_violation_implies_positive_weight() {
        for k in 0..=20 {
            let asm = evolved(2, 0.96, 0.15 * k as f64, false);
            if ts_parameter(&asm).unwrap().s_param > 1.0 {
                assert!(weight(&asm).w_t > 0.0);
            }
        }
    }

    #[test]
    fn onset_rejects_bad_interval() {
        let s = OnsetSettings {
            t_lo: 1.0,
            t_hi: 0.0,
            ..OnsetSettings::default()
        };
        assert!(unsteerability_onset(|_| unreachable!(), 1e-6, &s).is_err());
    }

    // Fixed by the barrier oracle before the solver existed: primal and dual
    // bounds agree on 0.5038048706 to 3e-11.
    const W_S096_T03: f64 = 0.503_804_870_6;

    #[test]
    fn frozen_mixed_value() {
        let r = weight(&evolved(2, 0.96, 0.3, false));
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.w_t - W_S096_T03).abs() <= 1e-7, "{}", r.w_t);
        assert!(r.certificate_gap.abs() <= 1e-7 && r.max_residual <= 1e-8);
    }

    // Four hidden states with Bloch vectors (a·u, b·u, 1 − τ), u = s√τ, one
    // per pair of X and Y outcomes, reproduce the rotation-off assemblage.
    // They are states iff 2u² + (1 − τ)² ≤ 1, i.e. t ≥ −ln(2(1 − s²)).
    fn equatorial_lhs(s: f64, t: f64) -> Option<[[HermitianOperator2; 2]; 2]> {
        let tau = (-t).exp();
        let u = s * tau.sqrt();
        if 2.0 * u * u + (1.0 - tau).powi(2) > 1.0 {
            return None;
        }
        let block = |a: f64, b: f64| {
            HermitianOperator2::from_pauli([
                0.125,
                0.125 * a * u,
                0.125 * b * u,
                0.125 * (1.0 - tau),
            ])
        };
        Some([
            [block(1.0, 1.0), block(1.0, -1.0)],
            [block(-1.0, 1.0), block(-1.0, -1.0)],
        ])
    }

    fn onset_formula(s: f64) -> f64 {
        -(2.0 * (1.0 - s * s)).ln()
    }

    #[test]
    fn equatorial_model_reproduces_assemblage_past_onset() {
        use crate::states::{Outcome, PauliAxis};
        for s in [0.8, 0.9, 0.96] {
            let t_star = onset_formula(s);
            assert!(equatorial_lhs(s, t_star - 1e-3).is_none());
            for t in [t_star + 1e-9, t_star + 0.5, t_star + 3.0] {
                let lhs = equatorial_lhs(s, t).unwrap();
                for blk in lhs.iter().flatten() {
                    assert!(blk.min_eigenvalue() >= -1e-15);
                }
                let asm = evolved(2, s, t, false);
                for (ia, a) in Outcome::ALL.into_iter().enumerate() {
                    let from_x = lhs[ia][0] + lhs[ia][1];
                    let from_y = lhs[0][ia] + lhs[1][ia];
                    assert!((from_x - *asm.member(PauliAxis::X, a)).frobenius_norm() <= 1e-14);
                    assert!((from_y - *asm.member(PauliAxis::Y, a)).frobenius_norm() <= 1e-14);
                }
                assert!(weight(&asm).raw_w <= 1e-7);
            }
        }
    }

    #[test]
    fn onset_matches_equatorial_model() {
        let settings = OnsetSettings {
            t_tol: 1e-8,
            ..OnsetSettings::default()
        };
        for s in [0.8, 0.96] {
            let at =
                |t: f64| steerable_weight(&evolved(2, s, t, false), &WeightSettings::default());
            // a tight band removes the bias of stopping at the clamp edge
            let tight = unsteerability_onset(at, 1e-8, &settings).unwrap().unwrap();
            assert!((tight - onset_formula(s)).abs() <= 1e-5, "{s}: {tight}");
            let banded = unsteerability_onset(at, 1e-6, &settings).unwrap().unwrap();
            assert!(banded <= tight && tight - banded <= 1e-4);
        }
    }

    #[test]
    fn pure_h_member_keeps_weight_positive() {
        let at = |t: f64| steerable_weight(&evolved(2, 1.0, t, false), &WeightSettings::default());
        let settings = OnsetSettings {
            t_hi: 6.0,
            ..OnsetSettings::default()
        };
        assert_eq!(unsteerability_onset(at, 1e-6, &settings).unwrap(), None);
    }

    #[test]
    fn nonincreasing_under_mixing_with_constant() {
        for (n, rotation) in [(2, false), (3, true)] {
            let asm = evolved(n, 0.96, 0.4, rotation);
            let rho = DensityMatrix2::new(asm.reduced_state(crate::states::PauliAxis::X)).unwrap();
            let constant = Assemblage::constant(n, &rho).unwrap();
            let mut last = f64::INFINITY;
            for k in 0..=10 {
                let lambda = 1.0 - 0.1 * k as f64;
                let w = weight(&asm.mix(&constant, lambda).unwrap()).w_t;
                assert!(w <= last + 1e-5, "λ = {lambda}: {w} > {last}");
                last = w;
            }
            assert_eq!(last, 0.0);
        }
    }

    #[test]
    fn near_singular_reduced_state_is_solved() {
        // Bob's V population is e^{-t}; whitening keeps these well posed
        for (n, t) in [(2, 8.0), (3, 10.0), (3, 15.0)] {
            let r = weight(&evolved(n, 0.96, t, false));
            assert_eq!(r.status, SdpStatus::Optimal, "{n} {t}");
        }
        // the three-setting weight settles near its limit instead of decaying
        let far = weight(&evolved(3, 1.0, 15.0, false)).w_t;
        assert!((far - 0.25).abs() <= 1e-5, "{far}");
    }

    #[test]
    fn ill_conditioned_reduced_state_is_flagged() {
        // cond(ρ_B) ≈ e^{30}: rounding in the members alone moves w by ~1e-3
        let r = weight(&evolved(2, 0.96, 30.0, true));
        assert_eq!(r.status, SdpStatus::Inaccurate);
        // past the whitening range the near-pure members are face reduced
        let r = weight(&evolved(2, 0.96, 50.0, false));
        assert_eq!((r.status, r.w_t), (SdpStatus::Optimal, 0.0));
    }

    #[test]
    fn pure_ray_member_is_solved() {
        // s = 1 keeps the H member pure at every t
        let r = weight(&evolved(3, 1.0, 0.7, false));
        assert_eq!(r.status, SdpStatus::Optimal);
        let b =
            crate::sdp::oracle::oracle_weight(&evolved(3, 1.0, 0.7, false), &Default::default())
                .unwrap();
        assert!(b.contains(r.w_t, 1e-6), "{b:?} {}", r.w_t);
    }
}
