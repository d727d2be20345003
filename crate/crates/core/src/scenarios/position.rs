//! Spin-½ particle on a discretized line: position measurement, spin
//! completion, and the Bell-probe experiment.
//!
//! The system Hilbert space is `ℂ² ⊗ ℂ^n` (spin ⊗ position bins, spin index
//! slow). The position POVM has one rank-2 effect `Q_j = I₂ ⊗ |j⟩⟨j|` per
//! bin; its maximal refinement splits every bin by spin. The measurement
//! dynamics prepare the Gaussian vacuum in the position register while the
//! spin passes through untouched — so a probe state whose environment qubit
//! is Bell-correlated with the spin survives any position measurement
//! unchanged. Completing the measurement with the sharp spin observable
//! destroys exactly that correlation, leaving a pure product state.
//!
//! Basis convention: the two spin basis vectors are the eigenstates of the
//! spin component that the sharp completion measures (eigenvalues ±½, ħ = 1).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::negativity;
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius_distance, partial_trace, BipartiteState, ComplexMatrix, ComplexVector, Side,
};
use crate::measurement::{
    apply_local_instrument, luders_instrument, refined_model_instrument, Instrument,
};
use crate::povm::{Povm, RefinedPovm, SharpObservable};
use crate::DEFAULT_TOL;

/// Quadrature grid discretizing the real line: strictly increasing sample
/// points `x_j` with positive weights `w_j`, so that `∫ f(x) dx ≈ Σ_j
/// f(x_j) w_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GridRepr")]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct GridRepr {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(repr: GridRepr) -> Result<Self> {
        Grid::new(repr.points, repr.weights)
    }
}

impl Grid {
    /// Builds a grid from explicit points and weights.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid has no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().chain(weights.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("points and weights must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidGrid("weights must be positive".into()));
        }
        Ok(Self { points, weights })
    }

    /// Uniform grid of `n ≥ 2` points on `[−halfwidth, halfwidth]` with the
    /// spacing as quadrature weight (rectangle rule).
    pub fn uniform(n: usize, halfwidth: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid("uniform grid needs at least two points".into()));
        }
        if !halfwidth.is_finite() || halfwidth <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "halfwidth must be positive, got {halfwidth}"
            )));
        }
        let spacing = 2.0 * halfwidth / (n - 1) as f64;
        let points = (0..n).map(|j| -halfwidth + spacing * j as f64).collect();
        let weights = vec![spacing; n];
        Self::new(points, weights)
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether the grid is empty (never true for a constructed grid).
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sample points in increasing order.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Quadrature weights, aligned with [`points`](Self::points).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices of all bins with non-negative position — the discretized
    /// half line `[0, ∞)`.
    pub fn nonnegative_bins(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.points[j] >= 0.0).collect()
    }
}

/// The assembled example: position POVM, its spin refinement, the sharp
/// spin observable completing it, and the Bell-correlated probe state.
#[derive(Debug, Clone)]
pub struct PositionExample {
    grid: Grid,
    q: Povm,
    q1: RefinedPovm,
    spin: SharpObservable,
    bell: BipartiteState,
    vacuum: ComplexVector,
    posteriors: Vec<ComplexVector>,
}

impl PositionExample {
    /// The grid the example was built on.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Position POVM `Q_j = I₂ ⊗ |j⟩⟨j|`; every effect has rank 2.
    pub fn position_povm(&self) -> &Povm {
        &self.q
    }

    /// Rank-1 refinement of the position POVM, splitting each bin by spin.
    pub fn refined_position(&self) -> &RefinedPovm {
        &self.q1
    }

    /// Sharp spin observable (eigenvalues ±½) whose designated eigenvectors
    /// carry the vacuum in the position register.
    pub fn spin_observable(&self) -> &SharpObservable {
        &self.spin
    }

    /// Probe state on environment ⊗ system: an environment qubit
    /// Bell-correlated with the spin, position register in the vacuum.
    pub fn bell_state(&self) -> &BipartiteState {
        &self.bell
    }

    /// Discretized vacuum amplitudes on the position register (unit norm,
    /// quadrature weights folded in).
    pub fn vacuum(&self) -> &ComplexVector {
        &self.vacuum
    }

    /// Posterior vectors of the measurement dynamics: spin basis vector ⊗
    /// vacuum, one per spin value.
    pub fn posteriors(&self) -> &[ComplexVector] {
        &self.posteriors
    }

    /// Total system dimension `2 · #bins`.
    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Position-measurement instrument with one Kraus operator
    /// `A_j = I₂ ⊗ |vacuum⟩⟨j|` per bin: the spin passes through untouched
    /// while the position register is reset to the vacuum.
    pub fn position_instrument(&self) -> Result<Instrument> {
        Ok(refined_model_instrument(&self.q1, &self.posteriors)?.named("position"))
    }

    /// Two-outcome coarse-graining of the position instrument: outcome
    /// `"selected"` collects the Kraus operators of the requested bins,
    /// `"rest"` (present only when nonempty) the others.
    pub fn binned_instrument(&self, bins: &[usize]) -> Result<Instrument> {
        let n = self.grid.len();
        if bins.is_empty() {
            return Err(Error::InvalidConfig("bin selection is empty".into()));
        }
        let mut selected = vec![false; n];
        for &j in bins {
            if j >= n {
                return Err(Error::OutcomeIndex { index: j, count: n });
            }
            selected[j] = true;
        }
        let position = self.position_instrument()?;
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        for (j, outcome) in position.outcomes().iter().enumerate() {
            let kraus = outcome.kraus()[0].clone();
            if selected[j] {
                inside.push(kraus);
            } else {
                outside.push(kraus);
            }
        }
        let mut outcomes = vec![("selected".to_owned(), inside)];
        if !outside.is_empty() {
            outcomes.push(("rest".to_owned(), outside));
        }
        Ok(Instrument::new(outcomes, DEFAULT_TOL)?.named("position-binned"))
    }
}

/// Builds the discretized example on `grid` with a Gaussian vacuum of the
/// given width (ground-state wave function `(π w²)^{−1/4} e^{−x²/(2w²)}`).
///
/// Fails with a normalization error when the sampled vacuum mass deviates
/// from 1 by more than `1e−6` — the grid is then too coarse or too narrow
/// to represent the state faithfully. After the check the amplitudes are
/// renormalized exactly.
pub fn build_position_spin_example(grid: &Grid, vacuum_width: f64) -> Result<PositionExample> {
    if !vacuum_width.is_finite() || vacuum_width <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "vacuum width must be positive, got {vacuum_width}"
        )));
    }
    let n = grid.len();
    let dim = 2 * n;
    let w2 = vacuum_width * vacuum_width;
    let scale = (PI * w2).powf(-0.25);
    let mut amps: Vec<f64> = grid
        .points()
        .iter()
        .zip(grid.weights())
        .map(|(&x, &wj)| scale * (-x * x / (2.0 * w2)).exp() * wj.sqrt())
        .collect();
    let mass: f64 = amps.iter().map(|a| a * a).sum();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::NormalizationFailure { norm: mass });
    }
    let renorm = mass.sqrt().recip();
    for a in &mut amps {
        *a *= renorm;
    }
    let vacuum = ComplexVector::from_re(&amps);

    // Position effects Q_j = I_spin ⊗ |j><j| (spin index slow).
    let effects: Vec<ComplexMatrix> = (0..n)
        .map(|j| {
            ComplexMatrix::from_fn(dim, dim, |r, c| {
                if r == c && r % n == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let q = Povm::new(effects, DEFAULT_TOL)?;

    // Refinement d_{j,0} = |spin 0> ⊗ |j>, d_{j,1} = |spin 1> ⊗ |j>.
    let mut vectors = Vec::with_capacity(dim);
    for j in 0..n {
        vectors.push((j, ComplexVector::basis(dim, j)));
        vectors.push((j, ComplexVector::basis(dim, n + j)));
    }
    let q1 = RefinedPovm::new(dim, DEFAULT_TOL, q.labels().to_vec(), vectors)?;

    // Posteriors pair each spin value with the vacuum; they designate the
    // eigenvectors of the sharp spin observable.
    let embed_spin = |s: usize| {
        let mut v = ComplexVector::zeros(dim);
        for j in 0..n {
            v[s * n + j] = Complex64::new(amps[j], 0.0);
        }
        v
    };
    let posteriors = vec![embed_spin(0), embed_spin(1)];
    let spin_projection = |s: usize| {
        ComplexMatrix::from_fn(dim, dim, |r, c| {
            if r == c && r / n == s {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    let spin = SharpObservable::with_designated(
        vec![0.5, -0.5],
        vec![spin_projection(0), spin_projection(1)],
        posteriors.clone(),
        DEFAULT_TOL,
    )?;

    // Probe: environment qubit Bell-correlated with the spin, both
    // branches carrying the vacuum in the position register.
    let mut psi = ComplexVector::zeros(2 * dim);
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for j in 0..n {
        psi[j] = amp * Complex64::new(amps[j], 0.0);
        psi[dim + n + j] = amp * Complex64::new(amps[j], 0.0);
    }
    let bell = BipartiteState::from_pure(&psi, 2, dim, DEFAULT_TOL)?;

    Ok(PositionExample {
        grid: grid.clone(),
        q,
        q1,
        spin,
        bell,
        vacuum,
        posteriors,
    })
}

/// Numerical record of one run of the Bell-probe experiment: the position
/// measurement restricted to a bin selection, then the sharp spin
/// completion on the conditioned state.
#[derive(Debug, Clone, Serialize)]
pub struct PositionReport {
    bins: Vec<usize>,
    position_probability: f64,
    expected_probability: f64,
    bell_distance: f64,
    bell_negativity: f64,
    spin_probabilities: Vec<f64>,
    spin_negativities: Vec<f64>,
    product_distance: f64,
    bell_preserved: bool,
    entanglement_broken: bool,
}

impl PositionReport {
    /// Bin indices that made up the `"selected"` outcome.
    pub fn bins(&self) -> &[usize] {
        &self.bins
    }

    /// Probability of the selected position outcome on the probe state.
    pub fn position_probability(&self) -> f64 {
        self.position_probability
    }

    /// Vacuum mass of the selected bins, `Σ_{j∈X} |φ₀(x_j)|² w_j` — the
    /// probability the position outcome must reproduce.
    pub fn expected_probability(&self) -> f64 {
        self.expected_probability
    }

    /// Frobenius distance between the conditioned state and the probe.
    pub fn bell_distance(&self) -> f64 {
        self.bell_distance
    }

    /// Negativity of the conditioned state after the position measurement.
    pub fn bell_negativity(&self) -> f64 {
        self.bell_negativity
    }

    /// Conditional probability of each spin outcome (order: +½, −½).
    pub fn spin_probabilities(&self) -> &[f64] {
        &self.spin_probabilities
    }

    /// Negativity of the state conditioned on each spin outcome.
    pub fn spin_negativities(&self) -> &[f64] {
        &self.spin_negativities
    }

    /// Frobenius distance of the environment ⊗ spin reduced state (spin
    /// outcome +½) from the aligned pure product state.
    pub fn product_distance(&self) -> f64 {
        self.product_distance
    }

    /// Whether the position measurement alone left the probe intact.
    pub fn bell_preserved(&self) -> bool {
        self.bell_preserved
    }

    /// Whether the spin completion produced unentangled product states.
    pub fn entanglement_broken(&self) -> bool {
        self.entanglement_broken
    }

    /// All built-in checks combined.
    pub fn passes(&self) -> bool {
        self.bell_preserved
            && self.entanglement_broken
            && (self.position_probability - self.expected_probability).abs() <= 1e-9
    }
}

/// Runs the Bell-probe experiment on `example`, conditioning the position
/// measurement on the bins in `bins`.
///
/// The position step must leave the probe state unchanged (distance and
/// negativity recorded in the report); the subsequent sharp spin
/// measurement must produce each sign with conditional probability ½ and
/// leave a pure product state, recorded likewise.
pub fn run_position_example(example: &PositionExample, bins: &[usize]) -> Result<PositionReport> {
    let binned = example.binned_instrument(bins)?;
    let bell = example.bell_state();
    let (position_probability, post) = apply_local_instrument(bell, &binned, "selected")?;
    let post = post.ok_or(Error::ZeroProbabilityBranch {
        probability: position_probability,
        step: 0,
    })?;

    let mut chosen = vec![false; example.grid().len()];
    for &j in bins {
        chosen[j] = true;
    }
    let expected_probability = example
        .vacuum()
        .data()
        .iter()
        .enumerate()
        .filter(|(j, _)| chosen[*j])
        .map(|(_, a)| a.norm_sqr())
        .sum();

    let bell_distance = frobenius_distance(post.matrix(), bell.matrix())?;
    let bell_negativity = negativity(&post);

    let spin_instrument = luders_instrument(&example.spin_observable().as_povm())?;
    let mut spin_probabilities = Vec::with_capacity(2);
    let mut spin_negativities = Vec::with_capacity(2);
    let mut product_distance = f64::INFINITY;
    for (s, outcome) in spin_instrument.outcomes().iter().enumerate() {
        let (p, spin_post) = apply_local_instrument(&post, &spin_instrument, outcome.label())?;
        let spin_post = spin_post.ok_or(Error::ZeroProbabilityBranch {
            probability: p,
            step: 1,
        })?;
        spin_probabilities.push(p);
        spin_negativities.push(negativity(&spin_post));
        if s == 0 {
            // Regroup env ⊗ (spin ⊗ position) as (env ⊗ spin) ⊗ position
            // and trace out the position register.
            let regrouped = spin_post.resplit(4, example.grid().len())?;
            let reduced = partial_trace(&regrouped, Side::Left);
            let target = ComplexVector::basis(4, 0).projector();
            product_distance = frobenius_distance(reduced.matrix(), &target)?;
        }
    }

    let bell_preserved = bell_distance < 1e-7 && (bell_negativity - 0.5).abs() <= 1e-7;
    let entanglement_broken = spin_negativities.iter().all(|&v| v < 1e-7)
        && spin_probabilities.iter().all(|&p| (p - 0.5).abs() <= 1e-9)
        && product_distance < 1e-7;

    Ok(PositionReport {
        bins: bins.to_vec(),
        position_probability,
        expected_probability,
        bell_distance,
        bell_negativity,
        spin_probabilities,
        spin_negativities,
        product_distance,
        bell_preserved,
        entanglement_broken,
    })
}
