//! POVMs, their validation and classification, maximal rank-1 refinement,
//! and informational completeness.
//!
//! A POVM is an ordered family of positive effects `M_i` summing to the
//! identity; measuring a state `rho` yields outcome `i` with probability
//! `tr[rho M_i]`. Every POVM refines to a rank-1 POVM by spectrally
//! splitting each effect into `m_i = rank(M_i)` sub-effects
//! `|d_ik><d_ik|` with `d_ik = sqrt(lambda_k) v_k`; the refinement's
//! outcomes are the pairs `(i, k)` and its `k`-marginal reproduces the
//! parent. The refinement is what a *complete* measurement measures.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, ComplexVector, DensityOperator};

/// Ordered family of positive effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    tol: f64,
    labels: Vec<String>,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Builds a POVM with auto-generated labels `"0", "1", ...`.
    ///
    /// Only shapes are checked here; positivity and normalization are the
    /// business of [`validate_povm`], so that invalid candidates can still
    /// be loaded and reported on.
    pub fn new(effects: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let labels = (0..effects.len()).map(|i| i.to_string()).collect();
        Self::with_labels(effects, labels, tol)
    }

    /// Builds a POVM with explicit outcome labels.
    pub fn with_labels(effects: Vec<ComplexMatrix>, labels: Vec<String>, tol: f64) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::CountMismatch {
                what: "labels",
                expected: effects.len(),
                got: labels.len(),
            });
        }
        let dim = effects[0].rows();
        for e in &effects {
            if !e.is_square() {
                return Err(Error::NotSquare {
                    rows: e.rows(),
                    cols: e.cols(),
                });
            }
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.dim(),
                });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::InvalidPovm(format!("duplicate outcome label `{l}`")));
            }
        }
        Ok(Self {
            dim,
            tol,
            labels,
            effects,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &ComplexMatrix {
        &self.effects[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Errors with a descriptive message unless [`validate_povm`] passes.
    pub fn require_valid(&self) -> Result<()> {
        let report = validate_povm(self);
        if report.passes() {
            Ok(())
        } else {
            Err(Error::InvalidPovm(report.failure_summary()))
        }
    }
}

/// Outcome-by-outcome validation report for a candidate POVM.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmValidation {
    /// Tolerance the report was evaluated against.
    pub tol: f64,
    /// Per-effect Hermiticity deviation `max |E - E^dag|`.
    pub hermiticity_deviations: Vec<f64>,
    /// Per-effect positivity violation: `max(0, -min_eigenvalue)` of the
    /// symmetrized effect.
    pub psd_violations: Vec<f64>,
    /// Spectral norm of `sum_i M_i - I`.
    pub normalization_residual: f64,
}

impl PovmValidation {
    pub fn passes(&self) -> bool {
        self.hermiticity_deviations.iter().all(|&d| d <= self.tol)
            && self.psd_violations.iter().all(|&v| v <= self.tol)
            && self.normalization_residual <= self.tol
    }

    fn failure_summary(&self) -> String {
        let mut parts = Vec::new();
        for (i, &d) in self.hermiticity_deviations.iter().enumerate() {
            if d > self.tol {
                parts.push(format!("effect {i} not Hermitian (deviation {d:.3e})"));
            }
        }
        for (i, &v) in self.psd_violations.iter().enumerate() {
            if v > self.tol {
                parts.push(format!("effect {i} not positive (violation {v:.3e})"));
            }
        }
        if self.normalization_residual > self.tol {
            parts.push(format!(
                "effects do not sum to identity (residual {:.3e})",
                self.normalization_residual
            ));
        }
        parts.join("; ")
    }
}

/// Checks each effect for Hermiticity and positivity and the family for
/// normalization, reporting violation magnitudes rather than erroring.
pub fn validate_povm(p: &Povm) -> PovmValidation {
    let mut hermiticity_deviations = Vec::with_capacity(p.len());
    let mut psd_violations = Vec::with_capacity(p.len());
    let mut sum = ComplexMatrix::zeros(p.dim, p.dim);
    for e in &p.effects {
        hermiticity_deviations.push(e.hermiticity_deviation());
        let sym = (e + &e.adjoint()).scale_re(0.5);
        let eig = hermitian_eig(&sym, f64::INFINITY).expect("symmetrized matrix is Hermitian");
        psd_violations.push((-eig.min_eigenvalue()).max(0.0));
        sum = &sum + e;
    }
    let defect = &sum - &ComplexMatrix::identity(p.dim);
    let sym_defect = (&defect + &defect.adjoint()).scale_re(0.5);
    let eig = hermitian_eig(&sym_defect, f64::INFINITY).expect("symmetrized matrix is Hermitian");
    let normalization_residual = eig
        .eigenvalues()
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max)
        .max(defect.hermiticity_deviation());
    PovmValidation {
        tol: p.tol,
        hermiticity_deviations,
        psd_violations,
        normalization_residual,
    }
}

/// Number of eigenvalues of a PSD effect exceeding `tol`.
pub fn effect_rank(effect: &ComplexMatrix, tol: f64) -> Result<usize> {
    let eig = hermitian_eig(effect, tol)?;
    let min = eig.min_eigenvalue();
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig.eigenvalues().iter().filter(|&&l| l > tol).count())
}

/// One rank-1 outcome of a refined POVM: the pair `(parent, k)` and the
/// (generally non-unit) vector `d` with effect `|d><d|`.
#[derive(Debug, Clone)]
pub struct RefinedOutcome {
    parent: usize,
    k: usize,
    vector: ComplexVector,
}

impl RefinedOutcome {
    /// Index of the parent outcome this sub-effect refines.
    pub fn parent(&self) -> usize {
        self.parent
    }

    /// Multiplicity index within the parent outcome.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.vector
    }
}

/// Rank-1 refinement of a POVM: outcomes are pairs `(i, k)` with effects
/// `|d_ik><d_ik|` summing back to the parent effects.
#[derive(Debug, Clone)]
pub struct RefinedPovm {
    dim: usize,
    tol: f64,
    parent_labels: Vec<String>,
    outcomes: Vec<RefinedOutcome>,
    multiplicities: Vec<usize>,
}

impl RefinedPovm {
    /// Assembles a refinement from explicit vectors, listed as
    /// `(parent_index, d)` in outcome order; `k` counts occurrences per
    /// parent. Validates dimensions and per-parent linear independence.
    pub fn new(
        dim: usize,
        tol: f64,
        parent_labels: Vec<String>,
        vectors: Vec<(usize, ComplexVector)>,
    ) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidPovm("refinement has no outcomes".into()));
        }
        let mut multiplicities = vec![0usize; parent_labels.len()];
        let mut outcomes = Vec::with_capacity(vectors.len());
        for (parent, vector) in vectors {
            if parent >= parent_labels.len() {
                return Err(Error::OutcomeIndex {
                    index: parent,
                    count: parent_labels.len(),
                });
            }
            if vector.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: vector.dim(),
                });
            }
            let k = multiplicities[parent];
            multiplicities[parent] += 1;
            outcomes.push(RefinedOutcome { parent, k, vector });
        }
        // Vectors within one parent must be linearly independent: the Gram
        // matrix of an independent family is nonsingular.
        for (i, &m) in multiplicities.iter().enumerate() {
            if m == 0 {
                continue;
            }
            let group: Vec<&ComplexVector> = outcomes
                .iter()
                .filter(|o| o.parent == i)
                .map(|o| &o.vector)
                .collect();
            let gram = ComplexMatrix::from_fn(m, m, |a, b| group[a].inner(group[b]));
            let eig = hermitian_eig(&gram, tol.max(1e-12))?;
            if eig.min_eigenvalue() <= tol {
                return Err(Error::InvalidPovm(format!(
                    "refinement vectors of outcome {i} are linearly dependent \
                     (Gram min eigenvalue {:.3e})",
                    eig.min_eigenvalue()
                )));
            }
        }
        Ok(Self {
            dim,
            tol,
            parent_labels,
            outcomes,
            multiplicities,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Total number of refined outcomes, `sum_i m_i`.
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[RefinedOutcome] {
        &self.outcomes
    }

    pub fn parent_labels(&self) -> &[String] {
        &self.parent_labels
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn max_multiplicity(&self) -> usize {
        self.multiplicities.iter().copied().max().unwrap_or(0)
    }

    /// Label of a refined outcome, `"{parent_label}:{k}"`.
    pub fn outcome_label(&self, outcome: &RefinedOutcome) -> String {
        format!("{}:{}", self.parent_labels[outcome.parent], outcome.k)
    }

    /// Rebuilds the parent effect `M_i = sum_k |d_ik><d_ik|`.
    pub fn parent_effect(&self, parent: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for o in self.outcomes.iter().filter(|o| o.parent == parent) {
            m = &m + &o.vector.projector();
        }
        m
    }

    /// Refined outcome probabilities `<d_ik|rho|d_ik>`, in outcome order.
    pub fn refined_probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rho.dim(),
            });
        }
        Ok(self
            .outcomes
            .iter()
            .map(|o| o.vector.inner(&rho.matrix().mul_vec(&o.vector)).re)
            .collect())
    }

    /// Views the refinement as a flat rank-1 POVM with labels
    /// `"{parent_label}:{k}"`.
    pub fn as_povm(&self) -> Povm {
        let effects = self.outcomes.iter().map(|o| o.vector.projector()).collect();
        let labels = self
            .outcomes
            .iter()
            .map(|o| self.outcome_label(o))
            .collect();
        Povm::with_labels(effects, labels, self.tol)
            .expect("refined outcomes were validated at construction")
    }
}

/// Spectrally splits every effect into rank-1 pieces: for each `M_i` with
/// eigenpairs `(lambda_k, v_k)`, `lambda_k > tol`, emits `d_ik =
/// sqrt(lambda_k) v_k` with `k` ordered by descending eigenvalue.
pub fn maximally_refine(p: &Povm) -> Result<RefinedPovm> {
    p.require_valid()?;
    let mut vectors = Vec::new();
    for (i, effect) in p.effects.iter().enumerate() {
        let eig = hermitian_eig(effect, p.tol)?;
        for (k, &lambda) in eig.eigenvalues().iter().enumerate() {
            if lambda > p.tol {
                vectors.push((i, eig.eigenvector(k).scale(Complex64::new(lambda.sqrt(), 0.0))));
            }
        }
    }
    RefinedPovm::new(p.dim, p.tol, p.labels.clone(), vectors)
}

/// Sums each parent's rank-1 pieces back into the parent POVM; the
/// round trip `maximally_refine` then `coarse_grain` reproduces the input
/// effects within tolerance.
pub fn coarse_grain(r: &RefinedPovm) -> Povm {
    let effects = (0..r.parent_labels.len())
        .map(|i| r.parent_effect(i))
        .collect();
    Povm::with_labels(effects, r.parent_labels.clone(), r.tol)
        .expect("refined outcomes were validated at construction")
}

/// True iff every effect is idempotent within tolerance. Assumes a valid
/// POVM.
pub fn is_pvm(p: &Povm) -> bool {
    let scale = p.dim as f64;
    p.effects
        .iter()
        .all(|e| (&(e * e) - e).max_abs() <= p.tol * scale)
}

/// True iff every effect has rank 1. Assumes a valid POVM.
pub fn is_rank_one(p: &Povm) -> bool {
    p.effects.iter().all(|e| {
        let sym = (e + &e.adjoint()).scale_re(0.5);
        let eig = hermitian_eig(&sym, f64::INFINITY).expect("symmetrized matrix is Hermitian");
        eig.eigenvalues().iter().filter(|&&l| l > p.tol).count() == 1
    })
}

/// Outcome probabilities `tr[rho M_i]` in outcome order.
pub fn outcome_probabilities(rho: &DensityOperator, p: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: rho.dim(),
        });
    }
    Ok(p.effects
        .iter()
        .map(|e| (rho.matrix() * e).trace().re)
        .collect())
}

/// Tests whether the effects span the full `d^2`-dimensional real space of
/// Hermitian operators, so that outcome statistics determine the state.
///
/// Returns `(is_ic, span_dimension)` with the span dimension computed as
/// the rank of the real Gram matrix `G_ij = Re tr[M_i M_j]`.
pub fn is_informationally_complete(p: &Povm) -> (bool, usize) {
    let n = p.len();
    let gram = ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new((&p.effects[i] * &p.effects[j]).trace().re, 0.0)
    });
    let eig = hermitian_eig(&gram, f64::INFINITY).expect("real symmetric Gram matrix");
    let lambda_max = eig.eigenvalues().first().copied().unwrap_or(0.0);
    let cutoff = p.tol * lambda_max.max(1.0);
    let span = eig.eigenvalues().iter().filter(|&&l| l > cutoff).count();
    (span == p.dim * p.dim, span)
}

/// A sharp (projection-valued) observable: distinct eigenvalues `a_k` with
/// mutually orthogonal projections `N_k` resolving the identity, plus one
/// designated unit eigenvector per eigenvalue.
///
/// The designated eigenvectors are what a complete measurement prepares:
/// measuring this observable sharply after a refined measurement collapses
/// the system onto `phi_k`, and the only freedom the construction leaves is
/// which eigenvector of each `N_k` is designated.
#[derive(Debug, Clone)]
pub struct SharpObservable {
    dim: usize,
    tol: f64,
    eigenvalues: Vec<f64>,
    projections: Vec<ComplexMatrix>,
    designated: Vec<ComplexVector>,
}

impl SharpObservable {
    /// Validates the spectral data and designates, for each projection, its
    /// deterministic leading eigenvector (descending-eigenvalue, phase-fixed
    /// spectral convention).
    pub fn new(eigenvalues: Vec<f64>, projections: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let designated = projections
            .iter()
            .map(|p| {
                let eig = hermitian_eig(p, tol)?;
                Ok(eig.eigenvector(0))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_designated(eigenvalues, projections, designated, tol)
    }

    /// Validates the spectral data with caller-chosen designated
    /// eigenvectors `phi_k`, requiring `N_k phi_k = phi_k`.
    pub fn with_designated(
        eigenvalues: Vec<f64>,
        projections: Vec<ComplexMatrix>,
        designated: Vec<ComplexVector>,
        tol: f64,
    ) -> Result<Self> {
        if projections.is_empty() {
            return Err(Error::InvalidObservable("no projections".into()));
        }
        if eigenvalues.len() != projections.len() {
            return Err(Error::CountMismatch {
                what: "eigenvalues",
                expected: projections.len(),
                got: eigenvalues.len(),
            });
        }
        if designated.len() != projections.len() {
            return Err(Error::CountMismatch {
                what: "designated eigenvectors",
                expected: projections.len(),
                got: designated.len(),
            });
        }
        let dim = projections[0].rows();
        for (a, b) in eigenvalues.iter().enumerate().flat_map(|(i, x)| {
            eigenvalues[i + 1..].iter().map(move |y| (*x, *y))
        }) {
            if (a - b).abs() <= tol {
                return Err(Error::InvalidObservable(format!(
                    "eigenvalues {a} and {b} are not distinct"
                )));
            }
        }
        let scale = dim as f64;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (k, p) in projections.iter().enumerate() {
            if !p.is_square() || p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.rows(),
                });
            }
            if p.hermiticity_deviation() > tol {
                return Err(Error::InvalidObservable(format!(
                    "projection {k} is not Hermitian"
                )));
            }
            if (&(p * p) - p).max_abs() > tol * scale {
                return Err(Error::InvalidObservable(format!(
                    "projection {k} is not idempotent"
                )));
            }
            for (l, q) in projections.iter().enumerate().skip(k + 1) {
                if (p * q).max_abs() > tol * scale {
                    return Err(Error::InvalidObservable(format!(
                        "projections {k} and {l} are not orthogonal"
                    )));
                }
            }
            sum = &sum + p;
        }
        if (&sum - &ComplexMatrix::identity(dim)).max_abs() > tol * scale {
            return Err(Error::InvalidObservable(
                "projections do not resolve the identity".into(),
            ));
        }
        for (k, (phi, p)) in designated.iter().zip(&projections).enumerate() {
            if phi.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: phi.dim(),
                });
            }
            if (phi.norm() - 1.0).abs() > tol * scale {
                return Err(Error::InvalidObservable(format!(
                    "designated eigenvector {k} is not a unit vector"
                )));
            }
            if p.mul_vec(phi).sub(phi).norm() > tol * scale {
                return Err(Error::InvalidObservable(format!(
                    "designated vector {k} is not an eigenvector of projection {k}"
                )));
            }
        }
        Ok(Self {
            dim,
            tol,
            eigenvalues,
            projections,
            designated,
        })
    }

    /// Nondegenerate observable from a complete orthonormal basis, with
    /// eigenvalue `values[k]` on `vectors[k]`.
    pub fn from_basis(values: Vec<f64>, vectors: Vec<ComplexVector>, tol: f64) -> Result<Self> {
        let projections = vectors.iter().map(|v| v.projector()).collect();
        Self::with_designated(values, projections, vectors, tol)
    }

    /// Pointer observable for a family of orthonormal vectors `phi_k` in a
    /// possibly larger space: eigenvalue `k` with projection `|phi_k><phi_k|`,
    /// except the last projection absorbs the orthogonal complement so the
    /// family resolves the identity. Designated vectors are the `phi_k`.
    pub fn pointer(vectors: Vec<ComplexVector>, tol: f64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidObservable("no pointer vectors".into()));
        }
        let dim = vectors[0].dim();
        let count = vectors.len();
        let mut projections: Vec<ComplexMatrix> =
            vectors.iter().map(|v| v.projector()).collect();
        let mut rest = ComplexMatrix::identity(dim);
        for p in &projections {
            rest = &rest - p;
        }
        let last = projections.len() - 1;
        projections[last] = &projections[last] + &rest;
        let values = (0..count).map(|k| k as f64).collect();
        Self::with_designated(values, projections, vectors, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Number of distinct eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projections(&self) -> &[ComplexMatrix] {
        &self.projections
    }

    pub fn projection(&self, k: usize) -> &ComplexMatrix {
        &self.projections[k]
    }

    /// The designated unit eigenvector `phi_k` of `N_k`.
    pub fn eigenvector(&self, k: usize) -> &ComplexVector {
        &self.designated[k]
    }

    /// The observable as a PVM with eigenvalue-formatted labels.
    pub fn as_povm(&self) -> Povm {
        let labels = self.eigenvalues.iter().map(|a| format!("{a}")).collect();
        Povm::with_labels(self.projections.clone(), labels, self.tol)
            .expect("projections validated at construction")
    }

    /// The operator `sum_k a_k N_k`.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for (a, p) in self.eigenvalues.iter().zip(&self.projections) {
            m = &m + &p.scale_re(*a);
        }
        m
    }
}

#[derive(Serialize, Deserialize)]
struct SharpObservableRepr {
    dim: usize,
    tol: f64,
    eigenvalues: Vec<f64>,
    projections: Vec<ComplexMatrix>,
    designated: Vec<ComplexVector>,
}

impl Serialize for SharpObservable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SharpObservableRepr {
            dim: self.dim,
            tol: self.tol,
            eigenvalues: self.eigenvalues.clone(),
            projections: self.projections.clone(),
            designated: self.designated.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SharpObservable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SharpObservableRepr::deserialize(deserializer)?;
        let obs =
            SharpObservable::with_designated(repr.eigenvalues, repr.projections, repr.designated, repr.tol)
                .map_err(serde::de::Error::custom)?;
        if obs.dim != repr.dim {
            return Err(serde::de::Error::custom(Error::DimensionMismatch {
                expected: repr.dim,
                got: obs.dim,
            }));
        }
        Ok(obs)
    }
}

// Wire format: {"dim": d, "tol": t, "outcomes": [{"label": ..., "effect":
// <matrix>}]}; the refinement serializes the same shape over its rank-1
// outcomes plus "parent_labels" and "vectors": [{"i", "k", "d"}] with
// 0-based indices.

#[derive(Serialize, Deserialize)]
struct OutcomeRepr {
    label: String,
    effect: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct PovmRepr {
    dim: usize,
    tol: f64,
    outcomes: Vec<OutcomeRepr>,
}

impl Serialize for Povm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = PovmRepr {
            dim: self.dim,
            tol: self.tol,
            outcomes: self
                .labels
                .iter()
                .zip(&self.effects)
                .map(|(label, effect)| OutcomeRepr {
                    label: label.clone(),
                    effect: effect.clone(),
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PovmRepr::deserialize(deserializer)?;
        let (labels, effects): (Vec<_>, Vec<_>) = repr
            .outcomes
            .into_iter()
            .map(|o| (o.label, o.effect))
            .unzip();
        let povm =
            Povm::with_labels(effects, labels, repr.tol).map_err(serde::de::Error::custom)?;
        if povm.dim != repr.dim {
            return Err(serde::de::Error::custom(Error::DimensionMismatch {
                expected: repr.dim,
                got: povm.dim,
            }));
        }
        Ok(povm)
    }
}

#[derive(Serialize, Deserialize)]
struct RefinedVectorRepr {
    i: usize,
    k: usize,
    d: ComplexVector,
}

#[derive(Serialize)]
struct RefinedPovmSer<'a> {
    dim: usize,
    tol: f64,
    outcomes: Vec<OutcomeRepr>,
    parent_labels: &'a [String],
    vectors: Vec<RefinedVectorRepr>,
}

#[derive(Deserialize)]
struct RefinedPovmDe {
    dim: usize,
    tol: f64,
    parent_labels: Vec<String>,
    vectors: Vec<RefinedVectorRepr>,
}

impl Serialize for RefinedPovm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = RefinedPovmSer {
            dim: self.dim,
            tol: self.tol,
            outcomes: self
                .outcomes
                .iter()
                .map(|o| OutcomeRepr {
                    label: self.outcome_label(o),
                    effect: o.vector.projector(),
                })
                .collect(),
            parent_labels: &self.parent_labels,
            vectors: self
                .outcomes
                .iter()
                .map(|o| RefinedVectorRepr {
                    i: o.parent,
                    k: o.k,
                    d: o.vector.clone(),
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RefinedPovm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = RefinedPovmDe::deserialize(deserializer)?;
        let vectors = repr.vectors.into_iter().map(|v| (v.i, v.d)).collect();
        RefinedPovm::new(repr.dim, repr.tol, repr.parent_labels, vectors)
            .map_err(serde::de::Error::custom)
    }
}


#[cfg(test)]
mod tests {
    use super::test_fixtures::*;
    use super::*;
    use crate::DEFAULT_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn computational_pvm_validates() {
        let report = validate_povm(&computational_pvm());
        assert!(report.passes());
        assert!(report.normalization_residual < 1e-15);
    }

    #[test]
    fn unnormalized_family_fails_with_exact_residual() {
        let e = ComplexMatrix::identity(2).scale_re(0.6);
        let p = Povm::new(vec![e.clone(), e], DEFAULT_TOL).unwrap();
        let report = validate_povm(&p);
        assert!(!report.passes());
        assert!(
            (report.normalization_residual - 0.2).abs() < 1e-12,
            "residual {}",
            report.normalization_residual
        );
        assert!(p.require_valid().is_err());
    }

    #[test]
    fn trine_povm_validates_with_tiny_residual() {
        let report = validate_povm(&trine_povm());
        assert!(report.passes());
        assert!(report.normalization_residual < 1e-12);
    }

    #[test]
    fn non_positive_effect_is_reported() {
        let p = Povm::new(
            vec![ComplexMatrix::diag(&[1.5, 0.5]), ComplexMatrix::diag(&[-0.5, 0.5])],
            DEFAULT_TOL,
        )
        .unwrap();
        let report = validate_povm(&p);
        assert!(!report.passes());
        assert!((report.psd_violations[1] - 0.5).abs() < 1e-12);
        assert!(report.normalization_residual < 1e-12, "sum is still identity");
    }

    #[test]
    fn effect_rank_cases() {
        let e0 = ComplexVector::basis(2, 0).projector();
        assert_eq!(effect_rank(&e0, DEFAULT_TOL).unwrap(), 1);
        assert_eq!(effect_rank(&ComplexMatrix::identity(3), DEFAULT_TOL).unwrap(), 3);
        let nearly = ComplexMatrix::diag(&[0.5, 1e-13, 0.0]);
        assert_eq!(effect_rank(&nearly, DEFAULT_TOL).unwrap(), 1);
        assert!(matches!(
            effect_rank(&ComplexMatrix::diag(&[1.0, -0.5]), DEFAULT_TOL),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn refine_computational_pvm_is_identity_refinement() {
        let r = maximally_refine(&computational_pvm()).unwrap();
        assert_eq!(r.multiplicities(), &[1, 1]);
        for (i, o) in r.outcomes().iter().enumerate() {
            assert_eq!(o.parent(), i);
            assert_eq!(o.k(), 0);
            let expected = ComplexVector::basis(2, i);
            assert!(o.vector().sub(&expected).norm() < 1e-12);
        }
        let p = r.as_povm();
        assert!(is_rank_one(&p));
        assert_eq!(p.labels(), &["0:0".to_string(), "1:0".to_string()]);
    }

    #[test]
    fn refine_single_identity_effect() {
        let p = Povm::new(vec![ComplexMatrix::identity(2)], DEFAULT_TOL).unwrap();
        let r = maximally_refine(&p).unwrap();
        assert_eq!(r.multiplicities(), &[2]);
        // Under the descending/stable convention the pieces are the basis
        // vectors in order.
        assert!(r.outcomes()[0].vector().sub(&ComplexVector::basis(2, 0)).norm() < 1e-12);
        assert!(r.outcomes()[1].vector().sub(&ComplexVector::basis(2, 1)).norm() < 1e-12);
    }

    #[test]
    fn refine_c3_example_matches_expected_vectors() {
        let r = maximally_refine(&c3_example_povm()).unwrap();
        assert_eq!(r.multiplicities(), &[2, 2]);
        let root_half = 0.5f64.sqrt();
        let expected: Vec<(usize, usize, ComplexVector)> = vec![
            (0, 0, ComplexVector::basis(3, 1)),
            (0, 1, ComplexVector::basis(3, 0).scale(Complex64::new(root_half, 0.0))),
            (1, 0, ComplexVector::basis(3, 2)),
            (1, 1, ComplexVector::basis(3, 0).scale(Complex64::new(root_half, 0.0))),
        ];
        for (o, (parent, k, d)) in r.outcomes().iter().zip(&expected) {
            assert_eq!(o.parent(), *parent);
            assert_eq!(o.k(), *k);
            assert!(
                o.vector().sub(d).norm() < 1e-12,
                "outcome ({parent},{k}) vector mismatch"
            );
        }
        // Reconstruction residual.
        for i in 0..2 {
            let residual =
                crate::linalg::frobenius_distance(&r.parent_effect(i), c3_example_povm().effect(i))
                    .unwrap();
            assert!(residual < 1e-12);
        }
    }

    #[test]
    fn coarse_grain_round_trip_on_random_povms() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..50 {
            let dim = 2 + trial % 4;
            let outcomes = 2 + trial % 3;
            let p = random_povm(dim, outcomes, &mut rng);
            let r = maximally_refine(&p).unwrap();
            let back = coarse_grain(&r);
            for i in 0..p.len() {
                let residual =
                    crate::linalg::frobenius_distance(back.effect(i), p.effect(i)).unwrap();
                assert!(residual < 1e-9, "round-trip residual {residual} at trial {trial}");
            }
            assert!(is_rank_one(&r.as_povm()));
            // Effects must span at least the diagonal: sum of multiplicities
            // reaches the space dimension.
            let total: usize = r.multiplicities().iter().sum();
            assert!(total >= dim);
        }
    }

    #[test]
    fn refinement_of_pvm_has_orthonormal_vectors() {
        let p = Povm::new(
            vec![
                ComplexMatrix::diag(&[1.0, 1.0, 0.0, 0.0]),
                ComplexMatrix::diag(&[0.0, 0.0, 1.0, 1.0]),
            ],
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(is_pvm(&p));
        let r = maximally_refine(&p).unwrap();
        assert_eq!(r.multiplicities(), &[2, 2]);
        for a in r.outcomes() {
            for b in r.outcomes() {
                let overlap = a.vector().inner(b.vector()).norm();
                if std::ptr::eq(a, b) {
                    assert!((overlap - 1.0).abs() < 1e-12);
                } else {
                    assert!(overlap < 1e-12, "vectors across outcomes not orthogonal");
                }
            }
        }
    }

    #[test]
    fn pvm_and_rank_one_classification() {
        assert!(is_pvm(&computational_pvm()));
        assert!(!is_pvm(&trine_povm()));
        assert!(is_rank_one(&trine_povm()));
        let identity_povm = Povm::new(vec![ComplexMatrix::identity(2)], DEFAULT_TOL).unwrap();
        assert!(!is_rank_one(&identity_povm));
        assert!(is_pvm(&identity_povm));
    }

    #[test]
    fn probabilities_computational_and_trine() {
        let ground = DensityOperator::from_pure(&ComplexVector::basis(2, 0), DEFAULT_TOL).unwrap();
        let probs = outcome_probabilities(&ground, &computational_pvm()).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-12 && probs[1].abs() < 1e-12);

        let mixed = DensityOperator::maximally_mixed(2, DEFAULT_TOL);
        let trine_probs = outcome_probabilities(&mixed, &trine_povm()).unwrap();
        for p in &trine_probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }

        let wrong_dim = DensityOperator::maximally_mixed(3, DEFAULT_TOL);
        assert!(outcome_probabilities(&wrong_dim, &trine_povm()).is_err());
    }

    #[test]
    fn probabilities_match_direct_trace_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = trine_povm();
        for _ in 0..20 {
            let rho = DensityOperator::new(
                crate::random::random_density_matrix(2, 2, &mut rng),
                DEFAULT_TOL,
            )
            .unwrap();
            let probs = outcome_probabilities(&rho, &p).unwrap();
            let mut total = 0.0;
            for (i, prob) in probs.iter().enumerate() {
                // entrywise trace oracle
                let mut tr = Complex64::new(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        tr += rho.matrix()[(a, b)] * p.effect(i)[(b, a)];
                    }
                }
                assert!((prob - tr.re).abs() < 1e-12);
                assert!(*prob > -1e-12);
                total += prob;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn refined_probabilities_marginalize_to_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let p = random_povm(3, 3, &mut rng);
            let r = maximally_refine(&p).unwrap();
            let rho = DensityOperator::new(
                crate::random::random_density_matrix(3, 3, &mut rng),
                DEFAULT_TOL,
            )
            .unwrap();
            let parent = outcome_probabilities(&rho, &p).unwrap();
            let refined = r.refined_probabilities(&rho).unwrap();
            let mut sums = vec![0.0; p.len()];
            for (o, q) in r.outcomes().iter().zip(&refined) {
                sums[o.parent()] += q;
            }
            for (s, q) in sums.iter().zip(&parent) {
                assert!((s - q).abs() < 1e-12, "marginalization violated: {s} vs {q}");
            }
        }
    }

    #[test]
    fn informational_completeness_cases() {
        assert_eq!(is_informationally_complete(&computational_pvm()), (false, 2));
        assert_eq!(is_informationally_complete(&sic_povm()), (true, 4));
        // three trine effects span only a 3-dimensional subspace
        assert_eq!(is_informationally_complete(&trine_povm()), (false, 3));
    }

    #[test]
    fn refinement_preserves_informational_completeness() {
        let (ic, span) = is_informationally_complete(&sic_povm());
        assert!(ic);
        let refined = maximally_refine(&sic_povm()).unwrap().as_povm();
        let (ic_ref, span_ref) = is_informationally_complete(&refined);
        assert!(ic_ref);
        assert!(span_ref >= span);
    }

    #[test]
    fn refinement_span_never_shrinks_on_random_povms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let p = random_povm(3, 4, &mut rng);
            let (_, span) = is_informationally_complete(&p);
            let refined = maximally_refine(&p).unwrap().as_povm();
            let (_, span_ref) = is_informationally_complete(&refined);
            assert!(span_ref >= span);
        }
    }

    #[test]
    fn povm_json_round_trip() {
        let p = trine_povm();
        let text = serde_json::to_string(&p).unwrap();
        let back: Povm = serde_json::from_str(&text).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.labels(), p.labels());
        for (a, b) in back.effects().iter().zip(p.effects()) {
            assert!(a.approx_eq(b, 0.0));
        }
    }

    #[test]
    fn refined_povm_json_round_trip() {
        let r = maximally_refine(&c3_example_povm()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"vectors\""));
        assert!(text.contains("\"parent_labels\""));
        let back: RefinedPovm = serde_json::from_str(&text).unwrap();
        assert_eq!(back.multiplicities(), r.multiplicities());
        for (a, b) in back.outcomes().iter().zip(r.outcomes()) {
            assert_eq!(a.parent(), b.parent());
            assert_eq!(a.k(), b.k());
            assert!(a.vector().sub(b.vector()).norm() < 1e-15);
        }
    }

    #[test]
    fn sharp_observable_validation_and_designation() {
        let obs = SharpObservable::new(
            vec![0.0, 1.0],
            vec![
                ComplexMatrix::diag(&[1.0, 1.0, 0.0]),
                ComplexMatrix::diag(&[0.0, 0.0, 1.0]),
            ],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(obs.len(), 2);
        // Deterministic designation: leading eigenvector of each projection.
        assert!(obs.eigenvector(0).sub(&ComplexVector::basis(3, 0)).norm() < 1e-12);
        assert!(obs.eigenvector(1).sub(&ComplexVector::basis(3, 2)).norm() < 1e-12);
        assert!(is_pvm(&obs.as_povm()));
        assert!(obs
            .matrix()
            .approx_eq(&ComplexMatrix::diag(&[0.0, 0.0, 1.0]), 1e-12));

        // Degenerate eigenvalues are rejected.
        assert!(matches!(
            SharpObservable::new(
                vec![1.0, 1.0],
                vec![
                    ComplexMatrix::diag(&[1.0, 0.0]),
                    ComplexMatrix::diag(&[0.0, 1.0]),
                ],
                DEFAULT_TOL,
            ),
            Err(Error::InvalidObservable(_))
        ));

        // Non-idempotent "projections" are rejected.
        assert!(matches!(
            SharpObservable::new(
                vec![0.0, 1.0],
                vec![
                    ComplexMatrix::diag(&[0.5, 0.0]),
                    ComplexMatrix::diag(&[0.5, 1.0]),
                ],
                DEFAULT_TOL,
            ),
            Err(Error::InvalidObservable(_))
        ));

        // A designated vector outside its projection's range is rejected.
        assert!(matches!(
            SharpObservable::with_designated(
                vec![0.0, 1.0],
                vec![
                    ComplexMatrix::diag(&[1.0, 0.0]),
                    ComplexMatrix::diag(&[0.0, 1.0]),
                ],
                vec![ComplexVector::basis(2, 1), ComplexVector::basis(2, 0)],
                DEFAULT_TOL,
            ),
            Err(Error::InvalidObservable(_))
        ));
    }

    #[test]
    fn pointer_observable_absorbs_complement() {
        let obs = SharpObservable::pointer(
            vec![ComplexVector::basis(3, 0), ComplexVector::basis(3, 1)],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(obs.len(), 2);
        assert!(obs.projection(0).approx_eq(&ComplexMatrix::diag(&[1.0, 0.0, 0.0]), 1e-12));
        assert!(obs.projection(1).approx_eq(&ComplexMatrix::diag(&[0.0, 1.0, 1.0]), 1e-12));
        assert!(obs.eigenvector(1).sub(&ComplexVector::basis(3, 1)).norm() < 1e-15);
    }

    #[test]
    fn sharp_observable_json_round_trip() {
        let obs = SharpObservable::new(
            vec![0.5, -0.5],
            vec![ComplexMatrix::diag(&[1.0, 0.0]), ComplexMatrix::diag(&[0.0, 1.0])],
            DEFAULT_TOL,
        )
        .unwrap();
        let text = serde_json::to_string(&obs).unwrap();
        let back: SharpObservable = serde_json::from_str(&text).unwrap();
        assert_eq!(back.eigenvalues(), obs.eigenvalues());
        assert!(back.eigenvector(0).sub(obs.eigenvector(0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_dependent_refinement_vectors() {
        let v = ComplexVector::basis(2, 0);
        let result = RefinedPovm::new(
            2,
            DEFAULT_TOL,
            vec!["a".into()],
            vec![(0, v.clone()), (0, v)],
        );
        assert!(matches!(result, Err(Error::InvalidPovm(_))));
    }
}
