//! Repeated measurement of a degenerate sharp observable: incomplete
//! (Lüders) observation versus complete refined observation.
//!
//! The configuration couples an environment to a system whose measured
//! observable has a degenerate eigenvalue. The joint generator is required
//! to commute with every spectral projection `I ⊗ M_i`, so a Lüders
//! measurement of the coarse observable never disturbs the dynamics — every
//! outcome check passes with probability one while the state keeps rotating
//! (and stays entangled) inside the eigenspace. Conditioning instead on a
//! *refined* rank-1 outcome projects the rotation back onto its starting
//! vector at every step: the survival probability approaches one as the
//! number of steps grows and the joint state is left unentangled after
//! every measurement.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::negativity;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_evolution, partial_trace, BipartiteState, ComplexMatrix, ComplexVector,
    DensityOperator, Side,
};
use crate::measurement::{
    apply_local_instrument, complete_basis, complete_refined_measurement, luders_instrument,
};
use crate::povm::{maximally_refine, RefinedPovm, SharpObservable};
use crate::DEFAULT_TOL;

/// Which measurement conditions each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZenoMode {
    /// Lüders instrument of the coarse observable; conditioning on the
    /// initially occupied eigenvalue.
    Incomplete,
    /// Complete measurement of the refined observable; conditioning on the
    /// initially occupied rank-1 outcome.
    Complete,
}

impl fmt::Display for ZenoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZenoMode::Incomplete => write!(f, "incomplete"),
            ZenoMode::Complete => write!(f, "complete"),
        }
    }
}

/// Full description of a repeated-measurement run.
///
/// The generator acts on environment ⊗ system (environment index slow) and
/// must commute with `I ⊗ M_i` for every spectral projection `M_i` of the
/// measured observable; `validate` checks this along with all dimensional
/// constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZenoConfig {
    system_dim: usize,
    env_dim: usize,
    hamiltonian: SharpObservable,
    generator: ComplexMatrix,
    total_time: f64,
    steps: usize,
    mode: ZenoMode,
    initial: BipartiteState,
}

impl ZenoConfig {
    /// Builds and validates a configuration.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        system_dim: usize,
        env_dim: usize,
        hamiltonian: SharpObservable,
        generator: ComplexMatrix,
        total_time: f64,
        steps: usize,
        mode: ZenoMode,
        initial: BipartiteState,
    ) -> Result<Self> {
        let cfg = Self {
            system_dim,
            env_dim,
            hamiltonian,
            generator,
            total_time,
            steps,
            mode,
            initial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// System dimension.
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// Environment dimension.
    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    /// The measured sharp observable on the system.
    pub fn hamiltonian(&self) -> &SharpObservable {
        &self.hamiltonian
    }

    /// Hermitian generator of the joint evolution.
    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    /// Total evolution time.
    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Number of evolution/measurement steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Measurement mode.
    pub fn mode(&self) -> ZenoMode {
        self.mode
    }

    /// Initial joint state on environment ⊗ system.
    pub fn initial(&self) -> &BipartiteState {
        &self.initial
    }

    /// Returns the configuration with a different step count.
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    /// Returns the configuration with a different mode.
    pub fn with_mode(mut self, mode: ZenoMode) -> Self {
        self.mode = mode;
        self
    }

    /// Returns the configuration with a different generator (not yet
    /// validated; validation runs at simulation time).
    pub fn with_generator(mut self, generator: ComplexMatrix) -> Self {
        self.generator = generator;
        self
    }

    /// Checks every structural invariant: positive step count, finite
    /// non-negative time, dimensional consistency, Hermitian generator, and
    /// the commutation of the generator with every `I ⊗ M_i`.
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("step count must be at least 1".into()));
        }
        if !self.total_time.is_finite() || self.total_time < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "total time must be finite and non-negative, got {}",
                self.total_time
            )));
        }
        if self.hamiltonian.dim() != self.system_dim {
            return Err(Error::DimensionMismatch {
                expected: self.system_dim,
                got: self.hamiltonian.dim(),
            });
        }
        let joint = self.env_dim * self.system_dim;
        if !self.generator.is_square() {
            return Err(Error::NotSquare {
                rows: self.generator.rows(),
                cols: self.generator.cols(),
            });
        }
        if self.generator.dim() != joint {
            return Err(Error::DimensionMismatch {
                expected: joint,
                got: self.generator.dim(),
            });
        }
        if self.initial.dim_left() != self.env_dim {
            return Err(Error::DimensionMismatch {
                expected: self.env_dim,
                got: self.initial.dim_left(),
            });
        }
        if self.initial.dim_right() != self.system_dim {
            return Err(Error::DimensionMismatch {
                expected: self.system_dim,
                got: self.initial.dim_right(),
            });
        }
        let tol = self.hamiltonian.tol();
        let scale = tol * joint as f64;
        let deviation = self.generator.hermiticity_deviation();
        if deviation > scale {
            return Err(Error::NotHermitian {
                deviation,
                tol: scale,
            });
        }
        let env_identity = ComplexMatrix::identity(self.env_dim);
        for (i, projection) in self.hamiltonian.projections().iter().enumerate() {
            let lifted = env_identity.tensor(projection);
            let commutator = &(&self.generator * &lifted) - &(&lifted * &self.generator);
            let residual = commutator.max_abs();
            if residual > scale {
                return Err(Error::CommutantViolation {
                    outcome: i,
                    residual,
                });
            }
        }
        Ok(())
    }
}

/// Per-step record of one repeated-measurement run.
#[derive(Debug, Clone, Serialize)]
pub struct ZenoResult {
    mode: ZenoMode,
    branch: String,
    survival: Vec<f64>,
    negativity: Vec<f64>,
    final_system: DensityOperator,
    final_fidelity: f64,
}

impl ZenoResult {
    /// Mode the run used.
    pub fn mode(&self) -> ZenoMode {
        self.mode
    }

    /// Label of the conditioned outcome (refined label in complete mode,
    /// coarse label in incomplete mode).
    pub fn branch(&self) -> &str {
        &self.branch
    }

    /// Cumulative probability of the conditioned branch after each step.
    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    /// Joint-state negativity after each conditioned measurement.
    pub fn negativity(&self) -> &[f64] {
        &self.negativity
    }

    /// Reduced system state after the final step.
    pub fn final_system(&self) -> &DensityOperator {
        &self.final_system
    }

    /// Overlap of the final reduced system state with the initially
    /// occupied refined vector.
    pub fn final_fidelity(&self) -> f64 {
        self.final_fidelity
    }

    /// Survival probability after the last step.
    pub fn final_survival(&self) -> f64 {
        *self
            .survival
            .last()
            .expect("simulation always runs at least one step")
    }

    /// Largest joint negativity observed over all steps.
    pub fn max_negativity(&self) -> f64 {
        self.negativity.iter().copied().fold(0.0, f64::max)
    }
}

/// Builds the pointer observable for the complete mode: rank-1 projections
/// onto the conditioned parent's refined vectors, extended to the maximal
/// multiplicity by deterministic orthonormal completion, with the residual
/// subspace absorbed into the last projection.
fn pointer_for_parent(refined: &RefinedPovm, parent: usize, tol: f64) -> Result<SharpObservable> {
    let mut vectors: Vec<ComplexVector> = refined
        .outcomes()
        .iter()
        .filter(|o| o.parent() == parent)
        .map(|o| o.vector().normalized())
        .collect();
    let needed = refined.max_multiplicity();
    if vectors.len() < needed {
        vectors = complete_basis(&vectors, refined.dim());
        vectors.truncate(needed);
    }
    SharpObservable::pointer(vectors, tol)
}

/// Runs the repeated evolution-and-measurement loop described by `cfg`.
///
/// The conditioned branch is the refined outcome with the largest initial
/// probability on the reduced system state (ties resolved toward the first
/// outcome). An initial conditioning measurement prepares that branch —
/// it is *not* counted in the survival record, which tracks only the `n`
/// post-evolution measurements. Each step applies `exp(−iG t/n)` to the
/// joint state, measures (completely or incompletely per the mode), and
/// conditions on the branch; the cumulative branch probability and the
/// joint negativity are recorded per step.
pub fn zeno_simulate(cfg: &ZenoConfig) -> Result<ZenoResult> {
    cfg.validate()?;
    let tol = cfg.hamiltonian().tol();
    let coarse = cfg.hamiltonian().as_povm();
    let refined = maximally_refine(&coarse)?;

    // Pick the initially occupied refined outcome.
    let rho_system = partial_trace(cfg.initial(), Side::Right);
    let probabilities = refined.refined_probabilities(&rho_system)?;
    let mut best = 0;
    for (o, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = o;
        }
    }
    let chosen = &refined.outcomes()[best];
    let target = chosen.vector().normalized();

    let (instrument, branch) = match cfg.mode() {
        ZenoMode::Complete => {
            let pointer = pointer_for_parent(&refined, chosen.parent(), tol)?;
            (
                complete_refined_measurement(&refined, &pointer)?,
                refined.outcome_label(chosen),
            )
        }
        ZenoMode::Incomplete => (
            luders_instrument(&coarse)?,
            refined.parent_labels()[chosen.parent()].clone(),
        ),
    };

    // Initial conditioning: prepare the branch, not counted as survival.
    let (p0, prepared) = apply_local_instrument(cfg.initial(), &instrument, &branch)?;
    let mut omega = prepared.ok_or(Error::ZeroProbabilityBranch {
        probability: p0,
        step: 0,
    })?;

    let dt = cfg.total_time() / cfg.steps() as f64;
    let u = hermitian_evolution(cfg.generator(), dt, tol)?;
    let u_adj = u.adjoint();
    let state_tol = cfg.initial().state().tol();

    let mut cumulative = 1.0_f64;
    let mut survival = Vec::with_capacity(cfg.steps());
    let mut negativities = Vec::with_capacity(cfg.steps());
    for step in 1..=cfg.steps() {
        let evolved = &(&u * omega.matrix()) * &u_adj;
        let evolved = BipartiteState::new(
            DensityOperator::new(evolved, state_tol)?,
            cfg.env_dim(),
            cfg.system_dim(),
        )?;
        let (p, post) = apply_local_instrument(&evolved, &instrument, &branch)?;
        let post = post.ok_or(Error::ZeroProbabilityBranch {
            probability: p,
            step,
        })?;
        cumulative = (cumulative * p).clamp(0.0, 1.0);
        survival.push(cumulative);
        negativities.push(negativity(&post));
        omega = post;
    }

    let final_system = partial_trace(&omega, Side::Right);
    let final_fidelity = final_system.expectation(&target);
    Ok(ZenoResult {
        mode: cfg.mode(),
        branch,
        survival,
        negativity: negativities,
        final_system,
        final_fidelity,
    })
}

/// One row of a step-count sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ZenoSweepRow {
    steps: usize,
    mode: ZenoMode,
    final_survival: f64,
    max_negativity: f64,
    final_fidelity: f64,
}

impl ZenoSweepRow {
    /// Step count of this row.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Mode of this row.
    pub fn mode(&self) -> ZenoMode {
        self.mode
    }

    /// Survival probability after the last step.
    pub fn final_survival(&self) -> f64 {
        self.final_survival
    }

    /// Largest joint negativity over all steps.
    pub fn max_negativity(&self) -> f64 {
        self.max_negativity
    }

    /// Final overlap with the initially occupied refined vector.
    pub fn final_fidelity(&self) -> f64 {
        self.final_fidelity
    }
}

/// Simulates the template at every step count in `step_counts`, in both
/// modes (incomplete first), and collects the summary rows.
pub fn zeno_sweep(template: &ZenoConfig, step_counts: &[usize]) -> Result<Vec<ZenoSweepRow>> {
    let mut rows = Vec::with_capacity(step_counts.len() * 2);
    for &steps in step_counts {
        for mode in [ZenoMode::Incomplete, ZenoMode::Complete] {
            let cfg = template.clone().with_steps(steps).with_mode(mode);
            let result = zeno_simulate(&cfg)?;
            rows.push(ZenoSweepRow {
                steps,
                mode,
                final_survival: result.final_survival(),
                max_negativity: result.max_negativity(),
                final_fidelity: result.final_fidelity(),
            });
        }
    }
    Ok(rows)
}

/// The smallest configuration exhibiting the complete/incomplete contrast:
/// a qubit environment, a three-level system whose measured observable has
/// one doubly degenerate eigenvalue (eigenvalue 0 on the span of the first
/// two basis vectors, eigenvalue 1 on the third), and a generator that
/// swaps the environment while rotating inside the degenerate eigenspace.
/// The rotation angle accumulated over `total_time` is π/2, and the initial
/// state is maximally entangled between the environment and the degenerate
/// eigenspace.
///
/// # Panics
///
/// Panics if `total_time` is not strictly positive (the generator strength
/// scales inversely with it).
pub fn canonical_zeno_config(steps: usize, total_time: f64, mode: ZenoMode) -> ZenoConfig {
    assert!(
        total_time.is_finite() && total_time > 0.0,
        "canonical configuration needs a positive total time"
    );
    let tol = DEFAULT_TOL;
    let hamiltonian = SharpObservable::new(
        vec![0.0, 1.0],
        vec![
            ComplexMatrix::diag(&[1.0, 1.0, 0.0]),
            ComplexMatrix::diag(&[0.0, 0.0, 1.0]),
        ],
        tol,
    )
    .expect("canonical projections resolve the identity");

    // Environment bit flip paired with a rotation generator confined to the
    // degenerate eigenspace; total accumulated angle π/2.
    let mut sigma_x = ComplexMatrix::zeros(2, 2);
    sigma_x[(0, 1)] = Complex64::new(1.0, 0.0);
    sigma_x[(1, 0)] = Complex64::new(1.0, 0.0);
    let mut tau = ComplexMatrix::zeros(3, 3);
    tau[(0, 1)] = Complex64::new(0.0, -1.0);
    tau[(1, 0)] = Complex64::new(0.0, 1.0);
    let strength = std::f64::consts::FRAC_PI_2 / total_time;
    let generator = sigma_x.tensor(&tau).scale_re(strength);

    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut psi = ComplexVector::zeros(6);
    psi[0] = amp; // |env 0> ⊗ |e0>
    psi[4] = amp; // |env 1> ⊗ |e1>
    let initial =
        BipartiteState::from_pure(&psi, 2, 3, tol).expect("canonical probe is normalized");

    ZenoConfig::new(3, 2, hamiltonian, generator, total_time, steps, mode, initial)
        .expect("canonical configuration is valid")
}
