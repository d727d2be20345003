//! Numerical entanglement certification for bipartite states and
//! measurement back-actions.
//!
//! The module provides the partial-transpose toolbox — [`negativity`],
//! [`is_ppt`], [`is_product`] — plus seeded entangled-state sampling and a
//! Monte Carlo certifier, [`certify_entanglement_breaking`], that probes an
//! instrument acting locally on the right half of a bipartite system and
//! reports whether any outcome ever leaves residual entanglement behind.
//!
//! Instruments whose every Kraus operator has rank one (in particular the
//! complete measurements produced by
//! [`complete_measurement`](crate::measurement::complete_measurement)) map
//! every input to a product state, so the certifier's `max_negativity`
//! stays at roundoff scale; a Lüders instrument of a POVM with a degenerate
//! effect, by contrast, admits inputs whose conditional states remain
//! entangled, and the certifier attaches one such state as a counterexample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_distance, hermitian_eig, partial_trace, partial_transpose, BipartiteState, Side,
};
use crate::measurement::{apply_local_instrument, Instrument};
use crate::random::haar_state;
use crate::DEFAULT_TOL;

/// Negativity above which a conditional post-measurement state counts as a
/// counterexample to entanglement breaking.
///
/// The threshold is deliberately looser than the linear-algebra tolerance so
/// that error accumulated through Kraus composition and renormalization is
/// never mistaken for surviving entanglement.
pub const EB_NEGATIVITY_THRESHOLD: f64 = 1e-7;

/// Rejection floor for [`random_entangled_state`]: sampled pure states are
/// redrawn until their negativity exceeds this value, so every probe used by
/// the certifier carries a detectable amount of entanglement.
const MIN_PROBE_NEGATIVITY: f64 = 0.05;

/// Sum of the absolute values of the negative eigenvalues of the partial
/// transpose of `omega`.
///
/// The value is zero on every separable state and strictly positive on every
/// state whose partial transpose fails to be positive semidefinite; on a
/// maximally entangled pair of qubits it equals `0.5`.
pub fn negativity(omega: &BipartiteState) -> f64 {
    let pt = partial_transpose(omega, Side::Right);
    let eig = hermitian_eig(&pt, omega.state().tol())
        .expect("partial transpose of a valid state is Hermitian");
    eig.eigenvalues().iter().map(|&v| (-v).max(0.0)).sum()
}

/// Whether the partial transpose of `omega` is positive semidefinite within
/// `tol`.
///
/// On 2⊗2 and 2⊗3 systems this decides separability exactly; in higher
/// dimensions a `true` answer certifies only the absence of
/// negative-partial-transpose entanglement.
pub fn is_ppt(omega: &BipartiteState, tol: f64) -> bool {
    let pt = partial_transpose(omega, Side::Right);
    let eig = hermitian_eig(&pt, omega.state().tol())
        .expect("partial transpose of a valid state is Hermitian");
    eig.min_eigenvalue() >= -tol
}

/// Whether `omega` factorizes as the tensor product of its own reduced
/// states, i.e. `‖ω − ρ_left ⊗ ρ_right‖_F < tol`.
///
/// This is strictly stronger than separability: a classically correlated
/// mixture of distinct product states is separable but not product.
pub fn is_product(omega: &BipartiteState, tol: f64) -> bool {
    let left = partial_trace(omega, Side::Left);
    let right = partial_trace(omega, Side::Right);
    let product = left.matrix().tensor(right.matrix());
    frobenius_distance(omega.matrix(), &product)
        .expect("reduced tensor product has the dimensions of the joint state")
        < tol
}

/// Draws a Haar-random pure state on `dim_left ⊗ dim_right`, resampling
/// until its negativity exceeds a fixed floor, so the result is always
/// usefully entangled. Deterministic for a fixed seed.
///
/// # Panics
///
/// Panics if either dimension is less than 2: one-dimensional factors admit
/// no entangled states and the rejection loop could never terminate.
pub fn random_entangled_state(dim_left: usize, dim_right: usize, seed: u64) -> BipartiteState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_entangled_state(dim_left, dim_right, &mut rng)
}

/// Rejection-samples one entangled pure state from an already-seeded
/// generator. Shared by [`random_entangled_state`] and the per-trial
/// streams of [`certify_entanglement_breaking`].
fn sample_entangled_state(
    dim_left: usize,
    dim_right: usize,
    rng: &mut impl Rng,
) -> BipartiteState {
    assert!(
        dim_left >= 2 && dim_right >= 2,
        "entangled states need both factors at least two-dimensional"
    );
    loop {
        let psi = haar_state(dim_left * dim_right, rng);
        let candidate = BipartiteState::from_pure(&psi, dim_left, dim_right, DEFAULT_TOL)
            .expect("Haar samples are normalized");
        if negativity(&candidate) > MIN_PROBE_NEGATIVITY {
            return candidate;
        }
    }
}

/// Outcome of a Monte Carlo entanglement-breaking certification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No probed outcome retained negativity above the threshold.
    EntanglementBreakingConsistent,
    /// Some conditional post-measurement state stayed entangled.
    CounterexampleFound,
}

/// Machine-checkable record of a [`certify_entanglement_breaking`] run.
///
/// `max_negativity` is the largest negativity observed over all conditional
/// post-measurement states across every probe and every outcome with
/// non-negligible probability; the verdict is
/// [`Verdict::CounterexampleFound`] exactly when it exceeds
/// [`EB_NEGATIVITY_THRESHOLD`], in which case the offending conditional
/// state and its outcome label are attached so the claim can be re-checked
/// directly from the certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EbCertificate {
    instrument: String,
    trials: usize,
    max_negativity: f64,
    verdict: Verdict,
    seed: u64,
    #[serde(default)]
    counterexample: Option<BipartiteState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counterexample_outcome: Option<String>,
}

impl EbCertificate {
    /// Name of the certified instrument, or `"unnamed"`.
    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    /// Number of random probe states drawn (the fixed maximally entangled
    /// probe is counted separately and always included).
    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Largest conditional-state negativity observed.
    pub fn max_negativity(&self) -> f64 {
        self.max_negativity
    }

    /// Classification of the run.
    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    /// Seed the probe ensemble was derived from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The entangled conditional post-measurement state realizing
    /// `max_negativity`, present iff the verdict is
    /// [`Verdict::CounterexampleFound`].
    pub fn counterexample(&self) -> Option<&BipartiteState> {
        self.counterexample.as_ref()
    }

    /// Label of the outcome that produced the counterexample state.
    pub fn counterexample_outcome(&self) -> Option<&str> {
        self.counterexample_outcome.as_deref()
    }

    /// Whether the run found no evidence against entanglement breaking.
    pub fn is_consistent(&self) -> bool {
        matches!(self.verdict, Verdict::EntanglementBreakingConsistent)
    }
}

/// Probes whether `inst`, acting locally on the right factor of an
/// `dim_env ⊗ input` system, breaks the entanglement of every input state.
///
/// The certifier first applies `id ⊗ inst` to a maximally entangled pair of
/// `input`-dimensional systems (whose conditional outputs determine the
/// channel branches completely), then to `trials` seeded Haar-random
/// entangled pure states on `dim_env ⊗ input`. For every outcome whose
/// probability exceeds the instrument tolerance it records the negativity of
/// the normalized conditional state and keeps the worst offender. Each trial
/// draws from its own counter-derived stream of the seed, so the ensemble
/// does not depend on evaluation order.
///
/// Returns an error if `dim_env` or the instrument's input dimension is too
/// small to host entangled probes.
pub fn certify_entanglement_breaking(
    inst: &Instrument,
    dim_env: usize,
    trials: usize,
    seed: u64,
) -> Result<EbCertificate> {
    let dim_in = inst.input_dim();
    if dim_env < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim_env,
        });
    }
    if dim_in < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: dim_in,
        });
    }

    let mut max_negativity = 0.0_f64;
    let mut worst: Option<(BipartiteState, String)> = None;
    let mut scan = |probe: &BipartiteState| -> Result<()> {
        for outcome in inst.outcomes() {
            let (_, post) = apply_local_instrument(probe, inst, outcome.label())?;
            if let Some(post) = post {
                let neg = negativity(&post);
                if neg > max_negativity {
                    max_negativity = neg;
                    if neg > EB_NEGATIVITY_THRESHOLD {
                        worst = Some((post, outcome.label().to_owned()));
                    }
                }
            }
        }
        Ok(())
    };

    let choi_probe = BipartiteState::maximally_entangled(dim_in, inst.tol());
    scan(&choi_probe)?;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64 + 1);
        let probe = sample_entangled_state(dim_env, dim_in, &mut rng);
        scan(&probe)?;
    }

    let verdict = if max_negativity > EB_NEGATIVITY_THRESHOLD {
        Verdict::CounterexampleFound
    } else {
        Verdict::EntanglementBreakingConsistent
    };
    let (counterexample, counterexample_outcome) = match (verdict, worst) {
        (Verdict::CounterexampleFound, Some((state, label))) => (Some(state), Some(label)),
        _ => (None, None),
    };
    Ok(EbCertificate {
        instrument: inst.name().unwrap_or("unnamed").to_owned(),
        trials,
        max_negativity,
        verdict,
        seed,
        counterexample,
        counterexample_outcome,
    })
}
