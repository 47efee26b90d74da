//! Photon-count emulation of the prepare–delay–measure experiment and
//! tomographic reconstruction of the assemblage from counts.

mod io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

pub use io::{
    read_counts_csv, read_metadata, write_counts_csv, write_metadata, RunMetadata,
    TransmissionEntry, COUNTS_HEADER,
};

use crate::assemblage::{check_setting_count, Assemblage};
use crate::channel::{branch_decomposition, ChannelParams, DimensionlessTime};
use crate::error::{Error, Result};
use crate::linalg::{nearest_density, HermitianOperator2};
use crate::states::{prepare_with_impurity, BlochVector, Outcome, PauliAxis, PreparationConfig};

/// Identifier of the sampling generator, recorded in run metadata.
pub const RNG_ID: &str = "ChaCha8Rng (rand_chacha 0.9)";
/// How per-setting seeds are derived from the run seed.
pub const SEED_DERIVATION: &str = "seed XOR splitmix64(setting_index), setting_index = 3*(2*(prep_axis-1) + prep_outcome_slot) + (analysis_axis-1)";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub shots_per_setting: u64,
    pub rng_seed: u64,
    pub t_tilde: f64,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub prep: PreparationConfig,
    #[serde(default = "default_true")]
    pub imperfections: bool,
    /// Number of preparation axes simulated (2 or 3).
    #[serde(default = "default_n")]
    pub n_measurements: usize,
    #[serde(default)]
    pub include_loss_model: bool,
}

fn default_true() -> bool {
    true
}

fn default_n() -> usize {
    3
}

impl RunConfig {
    pub fn new(shots_per_setting: u64, rng_seed: u64, t_tilde: f64) -> Self {
        Self {
            shots_per_setting,
            rng_seed,
            t_tilde,
            channel: ChannelParams::default(),
            prep: PreparationConfig::default(),
            imperfections: true,
            n_measurements: 3,
            include_loss_model: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::InvalidArgument(
                "shots_per_setting must be positive".into(),
            ));
        }
        DimensionlessTime::new(self.t_tilde)?;
        self.channel.validate()?;
        self.prep.validate()?;
        check_setting_count(self.n_measurements)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub prep_axis: PauliAxis,
    pub prep_outcome: Outcome,
    pub analysis_axis: PauliAxis,
    pub analysis_outcome: Outcome,
    pub counts: u64,
    pub shots: u64,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn setting_index(prep_axis: PauliAxis, prep_outcome: Outcome, analysis_axis: PauliAxis) -> u64 {
    (3 * (2 * prep_axis.slot() + prep_outcome.slot()) + analysis_axis.slot()) as u64
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    // p is a probability computed from a valid density matrix; clamp rounding
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("probability in [0, 1]")
        .sample(rng)
}

/// Probability of `+1` when measuring `axis` on `rho`.
fn prob_plus(rho: &HermitianOperator2, axis: PauliAxis) -> f64 {
    0.5 * (rho.trace() + axis.operator().trace_product(rho))
}

/// Simulates every (preparation, analysis basis) cell. Per shot the photon is
/// either erased by the filter, and then counted as `R(4t̃)|H⟩`, or passes
/// and is measured in its filtered state. The per-cell counts are drawn as
/// nested binomials, which has the same law as shot-by-shot sampling.
pub fn simulate_counts(cfg: &RunConfig) -> Result<Vec<CountRecord>> {
    cfg.validate()?;
    let t = DimensionlessTime::new(cfg.t_tilde)?;
    let n = cfg.shots_per_setting;
    let mut records = Vec::with_capacity(12 * cfg.n_measurements);
    for &prep_axis in PauliAxis::first(cfg.n_measurements) {
        for prep_outcome in Outcome::ALL {
            let rho = prepare_with_impurity(prep_axis, prep_outcome, &cfg.prep)?;
            let branches = branch_decomposition(&rho, t, &cfg.channel, cfg.imperfections)?;
            for analysis_axis in PauliAxis::ALL {
                let seed = cfg.rng_seed
                    ^ splitmix64(setting_index(prep_axis, prep_outcome, analysis_axis));
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let erased = binomial(&mut rng, n, branches.p_erase);
                let plus = binomial(
                    &mut rng,
                    erased,
                    prob_plus(branches.erased.op(), analysis_axis),
                ) + binomial(
                    &mut rng,
                    n - erased,
                    prob_plus(branches.passed.op(), analysis_axis),
                );
                for (analysis_outcome, counts) in
                    [(Outcome::Plus, plus), (Outcome::Minus, n - plus)]
                {
                    records.push(CountRecord {
                        prep_axis,
                        prep_outcome,
                        analysis_axis,
                        analysis_outcome,
                        counts,
                        shots: n,
                    });
                }
            }
        }
    }
    Ok(records)
}

/// Stokes estimates for one prepared state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesEstimate {
    pub prep_axis: PauliAxis,
    pub prep_outcome: Outcome,
    /// Raw linear-inversion estimate `(n₊ − n₋)/shots`.
    pub raw: BlochVector,
    /// After the physicality repair.
    pub physical: BlochVector,
    pub std_error: [f64; 3],
    /// `true` when the raw estimate lay outside the Bloch ball.
    pub repaired: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub assemblage: Assemblage,
    pub stokes: Vec<StokesEstimate>,
    /// Smallest shot count among the cells.
    pub min_shots: u64,
    /// Propagated standard error of `S_N` for the full assemblage.
    pub s_std_error: f64,
}

impl Reconstruction {
    /// Tolerance at which the reconstructed assemblage is expected to be
    /// consistent, `3/√shots`.
    pub fn consistency_tol(&self) -> f64 {
        3.0 / (self.min_shots as f64).sqrt()
    }

    /// Propagated standard error of `S_n` using the first `n` axes.
    pub fn s_std_error_for(&self, n: usize) -> f64 {
        s_std_error(&self.stokes, n)
    }
}

fn s_std_error(stokes: &[StokesEstimate], n: usize) -> f64 {
    // S = Σ_i Σ_a ½ v_{i,a}[i]²
    stokes
        .iter()
        .filter(|e| e.prep_axis.slot() < n)
        .map(|e| {
            let k = e.prep_axis.slot();
            let v = e.physical.as_array()[k];
            (v * e.std_error[k]).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn cell_label(
    prep_axis: PauliAxis,
    prep_outcome: Outcome,
    analysis_axis: PauliAxis,
    analysis_outcome: Outcome,
) -> String {
    format!("prep_axis={prep_axis} prep_outcome={prep_outcome} analysis_axis={analysis_axis} analysis_outcome={analysis_outcome}")
}

/// Linear-inversion tomography of every prepared state, with member weights
/// fixed to `1/2`. The number of settings is the number of preparation axes
/// present, which must be the first 2 or 3.
pub fn reconstruct_assemblage(records: &[CountRecord]) -> Result<Reconstruction> {
    let mut table = [[[[None::<(u64, u64)>; 2]; 3]; 2]; 3];
    for r in records {
        let cell = &mut table[r.prep_axis.slot()][r.prep_outcome.slot()][r.analysis_axis.slot()]
            [r.analysis_outcome.slot()];
        if cell.is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate record for {}",
                cell_label(
                    r.prep_axis,
                    r.prep_outcome,
                    r.analysis_axis,
                    r.analysis_outcome
                )
            )));
        }
        if r.counts > r.shots {
            return Err(Error::InvalidArgument(format!(
                "counts {} exceed shots {} for {}",
                r.counts,
                r.shots,
                cell_label(
                    r.prep_axis,
                    r.prep_outcome,
                    r.analysis_axis,
                    r.analysis_outcome
                )
            )));
        }
        *cell = Some((r.counts, r.shots));
    }
    let present: Vec<bool> = table
        .iter()
        .map(|axis| axis.iter().flatten().flatten().any(Option::is_some))
        .collect();
    let n = present.iter().take_while(|&&p| p).count();
    if present[n..].iter().any(|&p| p) {
        return Err(Error::InvalidArgument(
            "preparation axes must be the first 2 or 3".into(),
        ));
    }
    let n = n.max(2);

    let mut missing = Vec::new();
    for &pa in PauliAxis::first(n) {
        for po in Outcome::ALL {
            for aa in PauliAxis::ALL {
                for ao in Outcome::ALL {
                    if table[pa.slot()][po.slot()][aa.slot()][ao.slot()].is_none() {
                        missing.push(cell_label(pa, po, aa, ao));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteRecords(missing));
    }

    let mut stokes = Vec::with_capacity(2 * n);
    let mut members = Vec::with_capacity(2 * n);
    let mut min_shots = u64::MAX;
    for &pa in PauliAxis::first(n) {
        for po in Outcome::ALL {
            let mut v = [0.0; 3];
            let mut se = [0.0; 3];
            for aa in PauliAxis::ALL {
                let cells = &table[pa.slot()][po.slot()][aa.slot()];
                let (plus, shots) = cells[0].expect("checked above");
                let (minus, shots_m) = cells[1].expect("checked above");
                if shots != shots_m || plus + minus != shots {
                    return Err(Error::InvalidArgument(format!(
                        "counts for prep_axis={pa} prep_outcome={po} analysis_axis={aa} do not add up to shots"
                    )));
                }
                if shots == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "zero shots for prep_axis={pa} prep_outcome={po} analysis_axis={aa}"
                    )));
                }
                min_shots = min_shots.min(shots);
                let nf = shots as f64;
                v[aa.slot()] = (plus as f64 - minus as f64) / nf;
                let p = (plus as f64 + 1.0) / (nf + 2.0);
                se[aa.slot()] = 2.0 * (p * (1.0 - p) / nf).sqrt();
            }
            let raw = BlochVector::new(v[0], v[1], v[2]);
            let rho = nearest_density(&HermitianOperator2::from_pauli([
                0.5,
                0.5 * v[0],
                0.5 * v[1],
                0.5 * v[2],
            ]))?;
            let physical = crate::states::bloch_vector(&rho);
            members.push(*rho.op() * 0.5);
            stokes.push(StokesEstimate {
                prep_axis: pa,
                prep_outcome: po,
                raw,
                physical,
                std_error: se,
                repaired: raw.norm() > 1.0,
            });
        }
    }
    let s_std_error = s_std_error(&stokes, n);
    Ok(Reconstruction {
        assemblage: Assemblage::from_members(n, members)?,
        stokes,
        min_shots,
        s_std_error,
    })
}

/// Expected per-cell frequencies of `+1`, for tests and ingestion checks.
pub fn expected_plus_probability(
    cfg: &RunConfig,
    prep_axis: PauliAxis,
    prep_outcome: Outcome,
    analysis_axis: PauliAxis,
) -> Result<f64> {
    cfg.validate()?;
    let t = DimensionlessTime::new(cfg.t_tilde)?;
    let rho = prepare_with_impurity(prep_axis, prep_outcome, &cfg.prep)?;
    let b = branch_decomposition(&rho, t, &cfg.channel, cfg.imperfections)?;
    Ok(b.p_erase * prob_plus(b.erased.op(), analysis_axis)
        + (1.0 - b.p_erase) * prob_plus(b.passed.op(), analysis_axis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::{evolve_assemblage, initial_assemblage};
    use crate::channel::evolve;
    use crate::states::bloch_vector;

    #[test]
    fn same_seed_same_counts() {
        let cfg = RunConfig::new(5000, 42, 0.5);
        assert_eq!(
            simulate_counts(&cfg).unwrap(),
            simulate_counts(&cfg).unwrap()
        );
        let other = RunConfig {
            rng_seed: 43,
            ..cfg
        };
        assert_ne!(
            simulate_counts(&cfg).unwrap(),
            simulate_counts(&other).unwrap()
        );
    }

    #[test]
    fn rejects_zero_shots() {
        assert!(simulate_counts(&RunConfig::new(0, 1, 0.0)).is_err());
    }

    #[test]
    fn record_sums_match_shots() {
        let recs = simulate_counts(&RunConfig::new(1000, 7, 1.2)).unwrap();
        assert_eq!(recs.len(), 36);
        for pair in recs.chunks(2) {
            assert_eq!(pair[0].counts + pair[1].counts, 1000);
        }
    }

    #[test]
    fn no_erasure_at_time_zero() {
        let cfg = RunConfig::new(1, 0, 0.0);
        for &pa in PauliAxis::first(3) {
            for po in Outcome::ALL {
                let rho = prepare_with_impurity(pa, po, &cfg.prep).unwrap();
                let b = branch_decomposition(&rho, DimensionlessTime::ZERO, &cfg.channel, true)
                    .unwrap();
                assert_eq!(b.p_erase, 0.0);
            }
        }
    }

    #[test]
    fn long_times_deliver_horizontal_photons() {
        // 4t̃ = 40π, so R is the identity and τ ≈ 2e-55
        let mut cfg = RunConfig::new(100_000, 3, 10.0 * std::f64::consts::PI);
        cfg.imperfections = false;
        for r in simulate_counts(&cfg).unwrap() {
            if r.analysis_axis == PauliAxis::Z {
                let want = if r.analysis_outcome == Outcome::Plus {
                    r.shots
                } else {
                    0
                };
                assert_eq!(r.counts, want);
            }
        }
    }

    #[test]
    fn expected_frequency_is_born_rule_of_evolved_state() {
        let cfg = RunConfig::new(1, 0, 0.8);
        let t = DimensionlessTime::new(0.8).unwrap();
        for &pa in PauliAxis::first(3) {
            for po in Outcome::ALL {
                let rho = prepare_with_impurity(pa, po, &cfg.prep).unwrap();
                let out = evolve(&rho, t, &cfg.channel, true).unwrap();
                for aa in PauliAxis::ALL {
                    let p = expected_plus_probability(&cfg, pa, po, aa).unwrap();
                    let want = 0.5 * (1.0 + bloch_vector(&out).component(aa));
                    assert!((p - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn empirical_frequencies_within_three_sigma() {
        let cfg = RunConfig::new(1_000_000, 11, 0.6);
        for r in simulate_counts(&cfg).unwrap() {
            if r.analysis_outcome == Outcome::Minus {
                continue;
            }
            let p = expected_plus_probability(&cfg, r.prep_axis, r.prep_outcome, r.analysis_axis)
                .unwrap();
            let sigma = (r.shots as f64 * p * (1.0 - p)).sqrt().max(1.0);
            let dev = (r.counts as f64 - r.shots as f64 * p).abs();
            // 18 cells at 4.5σ keeps the family-wise false alarm rate tiny
            assert!(dev <= 4.5 * sigma, "{r:?} expected p={p}");
        }
    }

    fn exact_records(cfg: &RunConfig, shots: u64) -> Vec<CountRecord> {
        let mut recs = Vec::new();
        for &pa in PauliAxis::first(cfg.n_measurements) {
            for po in Outcome::ALL {
                for aa in PauliAxis::ALL {
                    let p = expected_plus_probability(cfg, pa, po, aa).unwrap();
                    let plus = (p * shots as f64).round() as u64;
                    for (ao, c) in [(Outcome::Plus, plus), (Outcome::Minus, shots - plus)] {
                        recs.push(CountRecord {
                            prep_axis: pa,
                            prep_outcome: po,
                            analysis_axis: aa,
                            analysis_outcome: ao,
                            counts: c,
                            shots,
                        });
                    }
                }
            }
        }
        recs
    }

    #[test]
    fn exact_counts_recover_the_assemblage() {
        // s = 1 at t̃ = 0 gives probabilities 0, 1/2 and 1, exactly representable
        let mut cfg = RunConfig::new(1, 0, 0.0);
        cfg.prep = PreparationConfig::ideal();
        cfg.imperfections = false;
        cfg.channel = ChannelParams::ideal_without_rotation();
        let rec = reconstruct_assemblage(&exact_records(&cfg, 1 << 20)).unwrap();
        let want = initial_assemblage(3, &cfg.prep).unwrap();
        for (a, b) in rec.assemblage.members().iter().zip(want.members()) {
            assert!((*a - *b).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn near_exact_counts_track_the_channel() {
        let cfg = RunConfig::new(1, 0, 0.5);
        let rec = reconstruct_assemblage(&exact_records(&cfg, 1 << 40)).unwrap();
        let asm = initial_assemblage(3, &cfg.prep).unwrap();
        let want = evolve_assemblage(
            &asm,
            DimensionlessTime::new(0.5).unwrap(),
            &cfg.channel,
            true,
        )
        .unwrap();
        for (a, b) in rec.assemblage.members().iter().zip(want.members()) {
            assert!((*a - *b).frobenius_norm() < 1e-11);
        }
    }

    #[test]
    fn unphysical_estimate_is_repaired() {
        let mut recs = exact_records(&RunConfig::new(1, 0, 0.0), 100);
        // force every Stokes component of the first state to +1
        for r in recs.iter_mut().take(6) {
            r.counts = if r.analysis_outcome == Outcome::Plus {
                100
            } else {
                0
            };
        }
        let rec = reconstruct_assemblage(&recs).unwrap();
        assert!(rec.stokes[0].repaired);
        assert!(rec.assemblage.members()[0].min_eigenvalue() >= -1e-15);
        assert!((rec.stokes[0].physical.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_cells_are_listed() {
        let recs = exact_records(&RunConfig::new(1, 0, 0.0), 100);
        let partial: Vec<_> = recs
            .into_iter()
            .filter(|r| {
                !(r.prep_axis == PauliAxis::Y
                    && r.analysis_axis == PauliAxis::Z
                    && r.prep_outcome == Outcome::Minus)
            })
            .collect();
        match reconstruct_assemblage(&partial) {
            Err(Error::IncompleteRecords(cells)) => {
                assert_eq!(cells.len(), 2);
                assert!(cells[0].contains("prep_axis=2") && cells[0].contains("analysis_axis=3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_axis_records_give_two_setting_assemblage() {
        let cfg = RunConfig {
            n_measurements: 2,
            ..RunConfig::new(10_000, 5, 0.2)
        };
        let rec = reconstruct_assemblage(&simulate_counts(&cfg).unwrap()).unwrap();
        assert_eq!(rec.assemblage.n_measurements(), 2);
        assert!(rec.s_std_error > 0.0);
    }
}
