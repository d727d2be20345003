//! Quantum instruments and measurement models.
//!
//! An instrument assigns to each outcome a completely positive map in Kraus
//! form; the maps sum to a trace-preserving channel. This module builds the
//! instruments the toolkit needs — Lüders, rank-1 measure-and-prepare, the
//! instrument induced by an indirect measurement model, and the *complete*
//! measurement obtained by following a refined measurement with a sharp
//! pointer readout — and applies them to states directly or locally on one
//! half of a bipartite system.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, psd_sqrt, BipartiteState, ComplexMatrix, ComplexVector, DensityOperator,
};
use crate::povm::{maximally_refine, Povm, RefinedPovm, SharpObservable};

/// One instrument outcome: a label and the Kraus operators of its map.
#[derive(Debug, Clone)]
pub struct InstrumentOutcome {
    label: String,
    kraus: Vec<ComplexMatrix>,
}

impl InstrumentOutcome {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }
}

/// Outcome-indexed completely positive maps summing to a trace-preserving
/// channel. Kraus operators may be rectangular (`output_dim x input_dim`).
#[derive(Debug, Clone)]
pub struct Instrument {
    name: Option<String>,
    input_dim: usize,
    output_dim: usize,
    tol: f64,
    outcomes: Vec<InstrumentOutcome>,
}

impl Instrument {
    /// Validates shapes, label uniqueness, and total trace preservation
    /// `sum_{i,j} K_ij^dag K_ij = I` within `tol`.
    pub fn new(outcomes: Vec<(String, Vec<ComplexMatrix>)>, tol: f64) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidConfig("instrument has no outcomes".into()));
        }
        let first = outcomes
            .iter()
            .flat_map(|(_, ks)| ks.iter())
            .next()
            .ok_or_else(|| Error::InvalidConfig("instrument has no Kraus operators".into()))?;
        let (output_dim, input_dim) = (first.rows(), first.cols());
        let mut seen = std::collections::HashSet::new();
        let mut total = ComplexMatrix::zeros(input_dim, input_dim);
        for (label, kraus) in &outcomes {
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate outcome label `{label}`"
                )));
            }
            for k in kraus {
                if (k.rows(), k.cols()) != (output_dim, input_dim) {
                    return Err(Error::DimensionMismatch {
                        expected: output_dim * input_dim,
                        got: k.rows() * k.cols(),
                    });
                }
                total = &total + &(&k.adjoint() * k);
            }
        }
        let residual = (&total - &ComplexMatrix::identity(input_dim)).max_abs();
        if residual > tol * input_dim as f64 {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self {
            name: None,
            input_dim,
            output_dim,
            tol,
            outcomes: outcomes
                .into_iter()
                .map(|(label, kraus)| InstrumentOutcome { label, kraus })
                .collect(),
        })
    }

    /// Attaches an identifier used in certificates and reports.
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[InstrumentOutcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|o| o.label.as_str())
    }

    pub fn outcome(&self, label: &str) -> Result<&InstrumentOutcome> {
        self.outcomes
            .iter()
            .find(|o| o.label == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    /// The unnormalized output `sum_j K_j rho K_j^dag` of one outcome map.
    fn apply_raw(&self, outcome: &InstrumentOutcome, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.output_dim, self.output_dim);
        for k in &outcome.kraus {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        out
    }
}

/// The Lüders instrument of a POVM: one Kraus operator `sqrt(M_i)` per
/// outcome.
pub fn luders_instrument(p: &Povm) -> Result<Instrument> {
    p.require_valid()?;
    let outcomes = p
        .labels()
        .iter()
        .zip(p.effects())
        .map(|(label, effect)| Ok((label.clone(), vec![psd_sqrt(effect, p.tol())?])))
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(outcomes, p.tol())
}

/// The rank-1 measure-and-prepare instrument: outcome `(i,k)` fires with
/// probability `<d_ik|rho|d_ik>` and prepares the fixed state
/// `outputs[flat index]`, regardless of the input.
///
/// Kraus operators are `sqrt(mu_j) |u_j><d_ik|` over the eigenpairs of the
/// output state. A rank-1 `Povm` is handled by refining it first (its
/// refinement is itself).
pub fn rank1_prepare_instrument(
    r: &RefinedPovm,
    outputs: &[DensityOperator],
) -> Result<Instrument> {
    if outputs.len() != r.len() {
        return Err(Error::CountMismatch {
            what: "output states",
            expected: r.len(),
            got: outputs.len(),
        });
    }
    let output_dim = outputs[0].dim();
    let mut outcomes = Vec::with_capacity(r.len());
    for (o, sigma) in r.outcomes().iter().zip(outputs) {
        if sigma.dim() != output_dim {
            return Err(Error::DimensionMismatch {
                expected: output_dim,
                got: sigma.dim(),
            });
        }
        let eig = hermitian_eig(sigma.matrix(), r.tol())?;
        let mut kraus = Vec::new();
        for (j, &mu) in eig.eigenvalues().iter().enumerate() {
            if mu > r.tol() {
                let u = eig.eigenvector(j).scale(Complex64::new(mu.sqrt(), 0.0));
                kraus.push(u.outer(o.vector()));
            }
        }
        outcomes.push((r.outcome_label(o), kraus));
    }
    Instrument::new(outcomes, r.tol())
}

/// Indirect measurement model: probe state `xi`, pointer basis `e_i`,
/// posterior vectors `phi_k`, and an interaction unitary `U` on
/// system (x) ancilla that acts on `psi (x) xi` as
/// `sum_ik <d_ik|psi> phi_k (x) e_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementModel {
    system_dim: usize,
    ancilla_dim: usize,
    tol: f64,
    probe: ComplexVector,
    pointer_basis: Vec<ComplexVector>,
    posteriors: Vec<ComplexVector>,
    parent_labels: Vec<String>,
    interaction: ComplexMatrix,
}

impl MeasurementModel {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn probe(&self) -> &ComplexVector {
        &self.probe
    }

    pub fn posteriors(&self) -> &[ComplexVector] {
        &self.posteriors
    }

    pub fn parent_labels(&self) -> &[String] {
        &self.parent_labels
    }

    /// The interaction unitary on system (x) ancilla (system index slow).
    pub fn interaction(&self) -> &ComplexMatrix {
        &self.interaction
    }

    /// Pointer projection `I (x) |e_i><e_i|` for outcome `i`.
    pub fn pointer_projection(&self, i: usize) -> ComplexMatrix {
        ComplexMatrix::identity(self.system_dim).tensor(&self.pointer_basis[i].projector())
    }

    /// Residual `max |U^dag U - I|`, exposed so tests can re-check unitarity.
    pub fn unitarity_residual(&self) -> f64 {
        let u = &self.interaction;
        (&(&u.adjoint() * u) - &ComplexMatrix::identity(u.dim())).max_abs()
    }
}

fn check_orthonormal(vectors: &[ComplexVector], tol: f64, what: &str) -> Result<()> {
    for (a, va) in vectors.iter().enumerate() {
        for (b, vb) in vectors.iter().enumerate() {
            let overlap = va.inner(vb);
            let target = if a == b { 1.0 } else { 0.0 };
            if (overlap - Complex64::new(target, 0.0)).norm() > tol {
                return Err(Error::InvalidConfig(format!(
                    "{what} vectors {a},{b} are not orthonormal"
                )));
            }
        }
    }
    Ok(())
}

/// Extends a partial orthonormal family to an orthonormal basis of the full
/// space by Gram-Schmidt over the standard basis in index order.
pub(crate) fn complete_basis(partial: &[ComplexVector], dim: usize) -> Vec<ComplexVector> {
    let mut basis: Vec<ComplexVector> = partial.to_vec();
    let mut candidate = 0;
    while basis.len() < dim {
        assert!(candidate < dim, "orthonormal completion exhausted the standard basis");
        let mut v = ComplexVector::basis(dim, candidate);
        candidate += 1;
        for b in &basis {
            let overlap = b.inner(&v);
            v = v.sub(&b.scale(overlap));
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v.scale(Complex64::new(1.0 / norm, 0.0)));
        }
    }
    basis
}

///// Builds the indirect measurement model of a refined POVM: the isometry
/// `V psi = sum_ik <d_ik|psi> phi_k (x) e_i` is checked (`V^dag V = I`) and
/// extended to a unitary on system (x) ancilla by deterministic
/// Gram-Schmidt completion. The ancilla dimension is the number of parent
/// outcomes; `probe = None` defaults to the first ancilla basis vector.
pub fn build_measurement_model(
    r: &RefinedPovm,
    posteriors: &[ComplexVector],
    probe: Option<&ComplexVector>,
) -> Result<MeasurementModel> {
    let ds = r.dim();
    let da = r.parent_labels().len();
    if posteriors.len() < r.max_multiplicity() {
        return Err(Error::CountMismatch {
            what: "posterior vectors",
            expected: r.max_multiplicity(),
            got: posteriors.len(),
        });
    }
    for phi in posteriors {
        if phi.dim() != ds {
            return Err(Error::DimensionMismatch {
                expected: ds,
                got: phi.dim(),
            });
        }
    }
    check_orthonormal(posteriors, r.tol().max(1e-12) * 1e3, "posterior")?;
    let probe = match probe {
        Some(xi) => {
            if xi.dim() != da {
                return Err(Error::DimensionMismatch {
                    expected: da,
                    got: xi.dim(),
                });
            }
            xi.normalized()
        }
        None => ComplexVector::basis(da, 0),
    };
    let pointer_basis: Vec<ComplexVector> = (0..da).map(|i| ComplexVector::basis(da, i)).collect();

    // Columns of the isometry: V e_m = sum_ik conj(d_ik[m]) phi_k (x) e_i.
    let joint = ds * da;
    let mut v_cols: Vec<ComplexVector> = Vec::with_capacity(ds);
    for m in 0..ds {
        let mut col = ComplexVector::zeros(joint);
        for o in r.outcomes() {
            let amp = o.vector()[m].conj();
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let phi = &posteriors[o.k()];
            for s in 0..ds {
                col[s * da + o.parent()] += amp * phi[s];
            }
        }
        v_cols.push(col);
    }
    // V^dag V = I iff the columns are orthonormal; this is exactly the POVM
    // normalization sum_ik |d_ik><d_ik| = I.
    let mut residual: f64 = 0.0;
    for (a, va) in v_cols.iter().enumerate() {
        for (b, vb) in v_cols.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            residual = residual.max((va.inner(vb) - Complex64::new(target, 0.0)).norm());
        }
    }
    if residual > 1e-9 {
        return Err(Error::IsometryCheck { residual });
    }

    // U is fixed on the subspace {psi (x) xi}: U (e_m (x) xi) = V e_m. Both
    // orthonormal families are completed over the standard basis, pairing
    // completion columns in order.
    let domain: Vec<ComplexVector> = (0..ds)
        .map(|m| ComplexVector::basis(ds, m).tensor(&probe))
        .collect();
    let domain_full = complete_basis(&domain, joint);
    let range_full = complete_basis(&v_cols, joint);
    let mut interaction = ComplexMatrix::zeros(joint, joint);
    for (src, dst) in domain_full.iter().zip(&range_full) {
        // interaction += |dst><src|
        for row in 0..joint {
            if dst[row] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for col in 0..joint {
                interaction[(row, col)] += dst[row] * src[col].conj();
            }
        }
    }

    Ok(MeasurementModel {
        system_dim: ds,
        ancilla_dim: da,
        tol: r.tol(),
        probe,
        pointer_basis,
        posteriors: posteriors.to_vec(),
        parent_labels: r.parent_labels().to_vec(),
        interaction,
    })
}

/// Extracts the instrument realized by a measurement model: per parent
/// outcome `i`, the single Kraus operator
/// `A_i = (I (x) <e_i|) U (I (x) |xi>) = sum_k |phi_k><d_ik|`.
pub fn model_induced_instrument(m: &MeasurementModel) -> Result<Instrument> {
    let (ds, da) = (m.system_dim, m.ancilla_dim);
    let outcomes = (0..da)
        .map(|i| {
            let a = ComplexMatrix::from_fn(ds, ds, |s, sp| {
                (0..da)
                    .map(|alpha| m.interaction[(s * da + i, sp * da + alpha)] * m.probe[alpha])
                    .sum()
            });
            (m.parent_labels[i].clone(), vec![a])
        })
        .collect();
    Instrument::new(outcomes, m.tol)
}

/// The instrument of the refined measurement without materializing the
/// dilation unitary: outcome `i` has the single Kraus operator
/// `A_i = sum_k |posteriors[k]><d_ik|`.
///
/// Equal to `model_induced_instrument(build_measurement_model(..))` but
/// linear instead of quadratic in the joint dimension, which matters for
/// many-outcome measurements like the discretized position observable.
pub fn refined_model_instrument(
    r: &RefinedPovm,
    posteriors: &[ComplexVector],
) -> Result<Instrument> {
    if posteriors.len() < r.max_multiplicity() {
        return Err(Error::CountMismatch {
            what: "posterior vectors",
            expected: r.max_multiplicity(),
            got: posteriors.len(),
        });
    }
    for phi in posteriors {
        if phi.dim() != r.dim() {
            return Err(Error::DimensionMismatch {
                expected: r.dim(),
                got: phi.dim(),
            });
        }
    }
    check_orthonormal(posteriors, r.tol().max(1e-12) * 1e3, "posterior")?;
    let mut kraus_per_parent: Vec<ComplexMatrix> =
        vec![ComplexMatrix::zeros(r.dim(), r.dim()); r.parent_labels().len()];
    for o in r.outcomes() {
        let term = posteriors[o.k()].outer(o.vector());
        kraus_per_parent[o.parent()] = &kraus_per_parent[o.parent()] + &term;
    }
    let outcomes = r
        .parent_labels()
        .iter()
        .cloned()
        .zip(kraus_per_parent.into_iter().map(|a| vec![a]))
        .collect();
    Instrument::new(outcomes, r.tol())
}

/// The complete measurement of a POVM: maximally refine, realize the
/// refined measurement through the model instrument with posteriors
/// `phi_k` taken from the sharp observable `n`, then measure `n` sharply.
///
/// Outcomes are the pairs `(i,k)` labeled `"{label_i}:{k}"`; each map is
/// the Kraus composition `N_k A_i`, which collapses to the rank-1
/// measure-and-prepare form `|phi_k><d_ik|`: outcome `(i,k)` fires with
/// probability `<d_ik|rho|d_ik>` and leaves the system in `|phi_k><phi_k|`
/// whatever the input was.
pub fn complete_measurement(p: &Povm, n: &SharpObservable) -> Result<Instrument> {
    let refined = maximally_refine(p)?;
    complete_refined_measurement(&refined, n)
}

/// [`complete_measurement`] for an already-refined POVM.
pub fn complete_refined_measurement(
    r: &RefinedPovm,
    n: &SharpObservable,
) -> Result<Instrument> {
    let needed = r.max_multiplicity();
    if n.len() < needed {
        return Err(Error::InsufficientEigenvalues {
            needed,
            available: n.len(),
        });
    }
    if n.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            got: n.dim(),
        });
    }
    let posteriors: Vec<ComplexVector> =
        (0..needed).map(|k| n.eigenvector(k).clone()).collect();
    let model = refined_model_instrument(r, &posteriors)?;
    let mut outcomes = Vec::with_capacity(r.len());
    for o in r.outcomes() {
        let a_i = &model.outcomes()[o.parent()].kraus()[0];
        let composed = n.projection(o.k()) * a_i;
        outcomes.push((r.outcome_label(o), vec![composed]));
    }
    Instrument::new(outcomes, r.tol())
}

/// Sequentially composes an instrument with the Lüders measurement of a
/// sharp observable: outcome `(i,k)` of the composition is labeled
/// `"{label_i}:{k}"` and carries the Kraus family `{N_k K : K in
/// kraus_i}`.
pub fn sequential_luders(inst: &Instrument, n: &SharpObservable) -> Result<Instrument> {
    if n.dim() != inst.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.output_dim(),
            got: n.dim(),
        });
    }
    let mut outcomes = Vec::with_capacity(inst.len() * n.len());
    for o in inst.outcomes() {
        for k in 0..n.len() {
            let kraus = o
                .kraus()
                .iter()
                .map(|kr| n.projection(k) * kr)
                .collect();
            outcomes.push((format!("{}:{}", o.label(), k), kraus));
        }
    }
    Instrument::new(outcomes, inst.tol())
}

/// Applies one outcome map to a state: returns the outcome probability and
/// the normalized post-measurement state, or `None` for the post-state when
/// the probability is below tolerance (conditioning undefined).
pub fn apply_instrument(
    inst: &Instrument,
    rho: &DensityOperator,
    outcome: &str,
) -> Result<(f64, Option<DensityOperator>)> {
    if rho.dim() != inst.input_dim {
        return Err(Error::DimensionMismatch {
            expected: inst.input_dim,
            got: rho.dim(),
        });
    }
    let o = inst.outcome(outcome)?;
    let raw = inst.apply_raw(o, rho.matrix());
    let probability = raw.trace().re;
    let post = if probability > inst.tol {
        Some(DensityOperator::new_unchecked(
            raw.scale_re(1.0 / probability),
            rho.tol(),
        ))
    } else {
        None
    };
    Ok((probability, post))
}

/// Applies one outcome map to the right factor of a bipartite state
/// (`id (x) I_outcome`), returning the probability and the normalized
/// bipartite post-state (`None` below tolerance).
///
/// Kraus conjugation runs block by block so the `I (x) K` operators are
/// never materialized.
pub fn apply_local_instrument(
    omega: &BipartiteState,
    inst: &Instrument,
    outcome: &str,
) -> Result<(f64, Option<BipartiteState>)> {
    if omega.dim_right() != inst.input_dim {
        return Err(Error::DimensionMismatch {
            expected: inst.input_dim,
            got: omega.dim_right(),
        });
    }
    let o = inst.outcome(outcome)?;
    let (dl, din, dout) = (omega.dim_left(), inst.input_dim, inst.output_dim);
    let rho = omega.matrix();
    let mut out = ComplexMatrix::zeros(dl * dout, dl * dout);
    for k in o.kraus() {
        let k_adj = k.adjoint();
        for a in 0..dl {
            for b in 0..dl {
                let block = ComplexMatrix::from_fn(din, din, |r, c| {
                    rho[(a * din + r, b * din + c)]
                });
                let conjugated = &(k * &block) * &k_adj;
                for r in 0..dout {
                    for c in 0..dout {
                        out[(a * dout + r, b * dout + c)] += conjugated[(r, c)];
                    }
                }
            }
        }
    }
    let probability = out.trace().re;
    let post = if probability > inst.tol {
        let normalized = out.scale_re(1.0 / probability);
        Some(BipartiteState::new(
            DensityOperator::new_unchecked(normalized, omega.state().tol()),
            dl,
            dout,
        )?)
    } else {
        None
    };
    Ok((probability, post))
}

/// Forgets the outcome: the trace-preserving channel `I_Omega = sum_i I_i`
/// as a single-outcome instrument with all Kraus lists concatenated.
pub fn instrument_channel(inst: &Instrument) -> Instrument {
    let kraus = inst
        .outcomes
        .iter()
        .flat_map(|o| o.kraus.iter().cloned())
        .collect();
    Instrument::new(vec![("all".to_string(), kraus)], inst.tol)
        .expect("sum of CP maps of a valid instrument is trace-preserving")
}

// Wire format: {"input_dim", "output_dim", "tol", "outcomes": [{"label",
// "kraus": [<matrix>, ...]}]}, plus "name" when set.

#[derive(Serialize, Deserialize)]
struct InstrumentOutcomeRepr {
    label: String,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct InstrumentRepr {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    name: Option<String>,
    input_dim: usize,
    output_dim: usize,
    #[serde(default = "default_tol")]
    tol: f64,
    outcomes: Vec<InstrumentOutcomeRepr>,
}

fn default_tol() -> f64 {
    crate::DEFAULT_TOL
}

impl Serialize for Instrument {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        InstrumentRepr {
            name: self.name.clone(),
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            tol: self.tol,
            outcomes: self
                .outcomes
                .iter()
                .map(|o| InstrumentOutcomeRepr {
                    label: o.label.clone(),
                    kraus: o.kraus.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Instrument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = InstrumentRepr::deserialize(deserializer)?;
        let outcomes = repr
            .outcomes
            .into_iter()
            .map(|o| (o.label, o.kraus))
            .collect();
        let mut inst = Instrument::new(outcomes, repr.tol).map_err(serde::de::Error::custom)?;
        if (inst.input_dim, inst.output_dim) != (repr.input_dim, repr.output_dim) {
            return Err(serde::de::Error::custom(Error::DimensionMismatch {
                expected: repr.input_dim * repr.output_dim,
                got: inst.input_dim * inst.output_dim,
            }));
        }
        inst.name = repr.name;
        Ok(inst)
    }
}
