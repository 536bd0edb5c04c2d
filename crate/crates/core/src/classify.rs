//! Decision procedures for absolutely minimum (AM) and norm (AN) attaining
//! operators, the `βI − K + F` form, and spectral decompositions of normal
//! AM operators.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact::{snap_f64, Phase, Polar, Q};
use crate::operators::{
    CoordinateSubspace, FiniteMatrix, Layout, NormalDiagonalModel, PositiveDiagonalModel,
    ShiftedDiagonalModel, Slot, StreamSelection, StreamSource, Tail,
};
use crate::oracle::{self, OracleError};
use crate::spectra::{HasSpectrum, Multiplicity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmVerdict {
    Am,
    NotAm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmReason {
    Ok,
    EssentialSpectrumNotSingleton,
    InfinitelyManyEigenvaluesAboveMe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnVerdict {
    An,
    NotAn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnReason {
    Ok,
    EssentialSpectrumNotSingleton,
    InfinitelyManyEigenvaluesBelowMe,
}

impl fmt::Display for AmVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmVerdict::Am => "AM",
            AmVerdict::NotAm => "NotAM",
        })
    }
}

impl fmt::Display for AnVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnVerdict::An => "AN",
            AnVerdict::NotAn => "NotAN",
        })
    }
}

impl fmt::Display for AmReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmReason::Ok => "OK",
            AmReason::EssentialSpectrumNotSingleton => "EssentialSpectrumNotSingleton",
            AmReason::InfinitelyManyEigenvaluesAboveMe => "InfinitelyManyEigenvaluesAboveMe",
        })
    }
}

impl fmt::Display for AnReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnReason::Ok => "OK",
            AnReason::EssentialSpectrumNotSingleton => "EssentialSpectrumNotSingleton",
            AnReason::InfinitelyManyEigenvaluesBelowMe => "InfinitelyManyEigenvaluesBelowMe",
        })
    }
}

/// `P = βI − K + F` with `K` compact, `F` finite rank, disjoint supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmDecomposition {
    pub beta: Q,
    pub compact_part: PositiveDiagonalModel,
    pub finite_part: PositiveDiagonalModel,
}

impl AmDecomposition {
    /// Rebuilds `βI − K + F` on the K-support followed by the F-support.
    pub fn recompose(&self) -> PositiveDiagonalModel {
        let beta = &self.beta;
        let cells = self
            .compact_part
            .cells()
            .iter()
            .map(|(k, m)| (beta - k, *m))
            .chain(self.finite_part.cells().iter().map(|(f, m)| (beta + f, *m)))
            .collect();
        let tails = self
            .compact_part
            .tails()
            .iter()
            .map(|t| t.then_affine(-Q::one(), beta.clone()))
            .collect();
        PositiveDiagonalModel::new(cells, tails).expect("recomposed entries are nonnegative")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AMClassification {
    pub verdict: AmVerdict,
    pub reason: AmReason,
    pub decomposition: Option<AmDecomposition>,
    /// For `InfinitelyManyEigenvaluesAboveMe`: a coordinate subspace on
    /// which the restriction does not attain its minimum.
    pub witness: Option<CoordinateSubspace>,
}

impl AMClassification {
    pub fn is_am(&self) -> bool {
        self.verdict == AmVerdict::Am
    }

    fn not_am(reason: AmReason, witness: Option<CoordinateSubspace>) -> Self {
        Self {
            verdict: AmVerdict::NotAm,
            reason,
            decomposition: None,
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnClassification {
    pub verdict: AnVerdict,
    pub reason: AnReason,
}

impl AnClassification {
    pub fn is_an(&self) -> bool {
        self.verdict == AnVerdict::An
    }
}

/// The single essential point, if the essential spectrum is a singleton.
fn essential_point(model: &PositiveDiagonalModel) -> Option<Q> {
    match model.spectrum().essential() {
        [only] => Some(only.modulus().clone()),
        _ => None,
    }
}

fn stream_witness(layout: &Layout, tail: usize) -> CoordinateSubspace {
    let streams = layout
        .streams()
        .iter()
        .map(|s| match s {
            StreamSource::Tail(t) if *t == tail => StreamSelection::All,
            _ => StreamSelection::Empty,
        })
        .collect();
    CoordinateSubspace {
        finite: Vec::new(),
        streams,
    }
}

pub fn classify_am_positive(model: &PositiveDiagonalModel) -> AMClassification {
    let Some(beta) = essential_point(model) else {
        return AMClassification::not_am(AmReason::EssentialSpectrumNotSingleton, None);
    };
    // Tails accumulate at beta; a decreasing one puts infinitely many
    // eigenvalues above it.
    if let Some(t) = model.tails().iter().position(|t| !t.is_increasing()) {
        let witness = stream_witness(model.layout(), t);
        return AMClassification::not_am(AmReason::InfinitelyManyEigenvaluesAboveMe, Some(witness));
    }
    let mut k_cells = Vec::new();
    let mut f_cells = Vec::new();
    for (v, m) in model.cells() {
        if *v <= beta {
            k_cells.push((&beta - v, *m));
        } else {
            f_cells.push((v - &beta, *m));
        }
    }
    let k_tails = model
        .tails()
        .iter()
        .map(|t| t.then_affine(-Q::one(), beta.clone()))
        .collect();
    let decomposition = AmDecomposition {
        compact_part: PositiveDiagonalModel::new(k_cells, k_tails)
            .expect("β − entry ≥ 0 on K-support"),
        finite_part: PositiveDiagonalModel::new(f_cells, Vec::new())
            .expect("entry − β > 0 on F-support"),
        beta,
    };
    AMClassification {
        verdict: AmVerdict::Am,
        reason: AmReason::Ok,
        decomposition: Some(decomposition),
        witness: None,
    }
}

pub fn classify_an_positive(model: &PositiveDiagonalModel) -> AnClassification {
    if essential_point(model).is_none() {
        return AnClassification {
            verdict: AnVerdict::NotAn,
            reason: AnReason::EssentialSpectrumNotSingleton,
        };
    }
    if model.tails().iter().any(Tail::is_increasing) {
        return AnClassification {
            verdict: AnVerdict::NotAn,
            reason: AnReason::InfinitelyManyEigenvaluesBelowMe,
        };
    }
    AnClassification {
        verdict: AnVerdict::An,
        reason: AnReason::Ok,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualityCheck {
    pub am: AmVerdict,
    pub range_closed: bool,
    /// `None` when the range is not closed and the pseudoinverse is unbounded.
    pub an_of_pinv: Option<AnVerdict>,
    pub consistent: bool,
}

/// `T` is AM iff `R(T)` is closed and `T†` is AN.
pub fn check_duality_am_an(model: &PositiveDiagonalModel) -> DualityCheck {
    let am = classify_am_positive(model).verdict;
    let range_closed = model.has_closed_range();
    let an_of_pinv = model
        .pseudoinverse()
        .ok()
        .map(|p| classify_an_positive(&p).verdict);
    let rhs = range_closed && an_of_pinv == Some(AnVerdict::An);
    DualityCheck {
        am,
        range_closed,
        an_of_pinv,
        consistent: (am == AmVerdict::Am) == rhs,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjointTransfer {
    pub ess_tstar_t: Vec<Q>,
    pub ess_t_tstar: Vec<Q>,
    pub ess_equal: bool,
    pub am_t: AmVerdict,
    pub am_tstar: AmVerdict,
}

impl AdjointTransfer {
    /// Equal essential spectra of the gram pair force equal verdicts.
    pub fn transfer_holds(&self) -> bool {
        !self.ess_equal || self.am_t == self.am_tstar
    }
}

pub fn classify_am_adjoint_transfer(model: &ShiftedDiagonalModel) -> AdjointTransfer {
    let (tstar_t, t_tstar) = model.gram_pair();
    let ess = |m: &PositiveDiagonalModel| -> Vec<Q> {
        m.spectrum()
            .essential()
            .iter()
            .map(|v| v.modulus().clone())
            .collect()
    };
    let (a, b) = (ess(&tstar_t), ess(&t_tstar));
    AdjointTransfer {
        ess_equal: a == b,
        ess_tstar_t: a,
        ess_t_tstar: b,
        am_t: classify_am_positive(&tstar_t).verdict,
        am_tstar: classify_am_positive(&t_tstar).verdict,
    }
}

/// Verdict from `|T|² = T*T`, decomposition of `|T|`.
pub fn classify_am_normal(model: &NormalDiagonalModel) -> AMClassification {
    let abs = model.modulus();
    let gram = classify_am_positive(&abs.squared());
    if !gram.is_am() {
        return gram;
    }
    let mut out = classify_am_positive(&abs);
    debug_assert!(out.is_am());
    out.reason = gram.reason;
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("operator is not absolutely minimum attaining")]
    NotAm,
    #[error("finite block is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Where a block member comes from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    /// Every basis vector of a model cell.
    Cell {
        cell: usize,
        multiplicity: Multiplicity,
    },
    /// One term of a model tail.
    TailTerm { tail: usize, step: u64 },
    /// A single canonical basis index.
    Index(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockMember {
    pub origin: Origin,
    pub phase: Phase,
}

/// `H_β` with the diagonal unitary `U_β`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub beta: Q,
    pub members: Vec<BlockMember>,
}

/// The blocks `β = |tail.term(j)|`, one index each, for every step `j` not
/// in `merged` (those sit in the explicit block at that level).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FamilyBlocks {
    pub tail: usize,
    pub modulus: Tail,
    pub phase: Phase,
    pub merged: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("block levels must be distinct, {0} repeats")]
    DuplicateBeta(Q),
    #[error("block level {0} is negative")]
    NegativeBeta(Q),
    #[error("kernel block must use unit phases")]
    KernelPhase,
    #[error("index sets overlap at {0}")]
    Overlap(String),
    #[error("indices do not cover the basis: {0} is missing")]
    Gap(String),
    #[error("inconsistent block data: {0}")]
    Inconsistent(String),
}

/// `T = ⊕ β U_β` over `β ∈ σ(|T|)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpectralDecomposition {
    blocks: Vec<Block>,
    families: Vec<FamilyBlocks>,
}

pub fn spectral_decomposition_normal(
    model: &NormalDiagonalModel,
) -> Result<SpectralDecomposition, ClassifyError> {
    if !classify_am_normal(model).is_am() {
        return Err(ClassifyError::NotAm);
    }
    let mut levels: BTreeMap<Q, Vec<BlockMember>> = BTreeMap::new();
    for (cell, (v, m)) in model.cells().iter().enumerate() {
        levels
            .entry(v.modulus().clone())
            .or_default()
            .push(BlockMember {
                origin: Origin::Cell {
                    cell,
                    multiplicity: *m,
                },
                phase: v.phase().clone(),
            });
    }
    let explicit: Vec<Q> = levels.keys().cloned().collect();
    let mut families = Vec::new();
    for (t, (tail, phase)) in model.tails().iter().enumerate() {
        let mut merged = Vec::new();
        for beta in &explicit {
            if let Some(step) = tail.position_of(beta) {
                merged.push(step);
                levels
                    .get_mut(beta)
                    .expect("explicit level")
                    .push(BlockMember {
                        origin: Origin::TailTerm { tail: t, step },
                        phase: phase.clone(),
                    });
            }
        }
        merged.sort_unstable();
        families.push(FamilyBlocks {
            tail: t,
            modulus: tail.clone(),
            phase: phase.clone(),
            merged,
        });
    }
    let blocks = levels
        .into_iter()
        .map(|(beta, members)| Block { beta, members })
        .collect();
    Ok(SpectralDecomposition { blocks, families })
}

impl SpectralDecomposition {
    /// Decomposition given by explicit `(β, [(index, phase)])` blocks.
    pub fn from_blocks(blocks: Vec<(Q, Vec<(u64, Phase)>)>) -> Result<Self, DecompositionError> {
        let mut out: Vec<Block> = Vec::new();
        for (beta, members) in blocks {
            if beta < Q::zero() {
                return Err(DecompositionError::NegativeBeta(beta));
            }
            if out.iter().any(|b| b.beta == beta) {
                return Err(DecompositionError::DuplicateBeta(beta));
            }
            if beta.is_zero() && members.iter().any(|(_, p)| !p.is_one()) {
                return Err(DecompositionError::KernelPhase);
            }
            let members = members
                .into_iter()
                .map(|(i, phase)| BlockMember {
                    origin: Origin::Index(i),
                    phase,
                })
                .collect();
            out.push(Block { beta, members });
        }
        out.sort_by(|a, b| a.beta.cmp(&b.beta));
        Ok(Self {
            blocks: out,
            families: Vec::new(),
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn families(&self) -> &[FamilyBlocks] {
        &self.families
    }

    /// All members at level `beta`, including tail terms not merged into an
    /// explicit block.
    pub fn block_at(&self, beta: &Q) -> Vec<BlockMember> {
        let mut members: Vec<BlockMember> = self
            .blocks
            .iter()
            .filter(|b| b.beta == *beta)
            .flat_map(|b| b.members.iter().cloned())
            .collect();
        for f in &self.families {
            if let Some(step) = f.modulus.position_of(beta) {
                if f.merged.binary_search(&step).is_err() {
                    members.push(BlockMember {
                        origin: Origin::TailTerm { tail: f.tail, step },
                        phase: f.phase.clone(),
                    });
                }
            }
        }
        members
    }

    fn is_index_form(&self) -> bool {
        self.blocks
            .iter()
            .flat_map(|b| &b.members)
            .any(|m| matches!(m.origin, Origin::Index(_)))
    }

    /// `(index, β, phase)` for the first `n` canonical basis indices.
    pub fn truncated_entries(&self, n: u64) -> Result<Vec<(u64, Q, Phase)>, DecompositionError> {
        if self.is_index_form() {
            let mut all: Vec<(u64, Q, Phase)> = self
                .blocks
                .iter()
                .flat_map(|b| {
                    b.members.iter().filter_map(move |m| match m.origin {
                        Origin::Index(i) => Some((i, b.beta.clone(), m.phase.clone())),
                        _ => None,
                    })
                })
                .collect();
            all.sort_by_key(|e| e.0);
            all.truncate(n as usize);
            return Ok(all);
        }
        let cells = self.cell_table()?;
        let layout = Layout::from_multiplicities(cells.iter().map(|c| c.2), self.families.len());
        let mut out = Vec::new();
        for i in 0..n {
            let Some(slot) = layout.locate(i) else { break };
            let (beta, phase) = match slot {
                Slot::Cell { cell, .. } => (cells[cell].0.clone(), cells[cell].1.clone()),
                Slot::Stream { stream, step } => match layout.streams()[stream] {
                    StreamSource::Cell(cell) => (cells[cell].0.clone(), cells[cell].1.clone()),
                    StreamSource::Tail(t) => {
                        let f = &self.families[t];
                        (f.modulus.term(step), f.phase.clone())
                    }
                },
            };
            out.push((i, beta, phase));
        }
        Ok(out)
    }

    /// `⊕ β U_β` compressed to the first `n` basis vectors.
    pub fn truncate(&self, n: u64) -> Result<FiniteMatrix, DecompositionError> {
        let diag: Vec<Complex64> = self
            .truncated_entries(n)?
            .into_iter()
            .map(|(_, beta, phase)| Polar::new(beta, phase).to_complex())
            .collect();
        Ok(FiniteMatrix::from_diagonal(&diag))
    }

    /// `(β, phase, multiplicity)` per model cell, in cell order.
    fn cell_table(&self) -> Result<Vec<(Q, Phase, Multiplicity)>, DecompositionError> {
        let mut cells: BTreeMap<usize, (Q, Phase, Multiplicity)> = BTreeMap::new();
        for b in &self.blocks {
            for m in &b.members {
                if let Origin::Cell { cell, multiplicity } = m.origin {
                    if cells
                        .insert(cell, (b.beta.clone(), m.phase.clone(), multiplicity))
                        .is_some()
                    {
                        return Err(DecompositionError::Overlap(format!("cell {cell}")));
                    }
                }
            }
        }
        if let Some(missing) = (0..cells.len()).find(|k| !cells.contains_key(k)) {
            return Err(DecompositionError::Gap(format!("cell {missing}")));
        }
        Ok(cells.into_values().collect())
    }

    /// Inverse of the decomposition: entry `β · phase` at each member index.
    pub fn reconstruct(&self) -> Result<NormalDiagonalModel, DecompositionError> {
        let model = if self.is_index_form() {
            self.reconstruct_indices()?
        } else {
            self.reconstruct_cells()?
        };
        Ok(model)
    }

    fn reconstruct_indices(&self) -> Result<NormalDiagonalModel, DecompositionError> {
        if !self.families.is_empty() {
            return Err(DecompositionError::Inconsistent(
                "index blocks mixed with families".into(),
            ));
        }
        let mut entries: Vec<(u64, Polar)> = Vec::new();
        for b in &self.blocks {
            for m in &b.members {
                match m.origin {
                    Origin::Index(i) => {
                        entries.push((i, Polar::new(b.beta.clone(), m.phase.clone())))
                    }
                    _ => {
                        return Err(DecompositionError::Inconsistent(
                            "index blocks mixed with model cells".into(),
                        ))
                    }
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(DecompositionError::Overlap(format!("index {}", w[0].0)));
        }
        if let Some((k, _)) = entries.iter().enumerate().find(|(k, e)| e.0 != *k as u64) {
            return Err(DecompositionError::Gap(format!("index {k}")));
        }
        let mut cells: Vec<(Polar, Multiplicity)> = Vec::new();
        for (_, v) in entries {
            match cells.last_mut() {
                Some((last, m)) if *last == v => *m = m.add(Multiplicity::Finite(1)),
                _ => cells.push((v, Multiplicity::Finite(1))),
            }
        }
        NormalDiagonalModel::new(cells, Vec::new())
            .map_err(|e| DecompositionError::Inconsistent(e.to_string()))
    }

    fn reconstruct_cells(&self) -> Result<NormalDiagonalModel, DecompositionError> {
        let cells = self.cell_table()?;
        for (k, f) in self.families.iter().enumerate() {
            if f.tail != k {
                return Err(DecompositionError::Inconsistent(format!(
                    "family {k} labelled {}",
                    f.tail
                )));
            }
        }
        let mut seen: Vec<(usize, u64)> = Vec::new();
        for b in &self.blocks {
            for m in &b.members {
                if let Origin::TailTerm { tail, step } = m.origin {
                    let f = self.families.get(tail).ok_or_else(|| {
                        DecompositionError::Inconsistent(format!("no tail {tail}"))
                    })?;
                    if seen.contains(&(tail, step)) {
                        return Err(DecompositionError::Overlap(format!(
                            "tail {tail} step {step}"
                        )));
                    }
                    seen.push((tail, step));
                    if f.modulus.term(step) != b.beta
                        || f.phase != m.phase
                        || f.merged.binary_search(&step).is_err()
                    {
                        return Err(DecompositionError::Inconsistent(format!(
                            "tail {tail} step {step} does not lie at level {}",
                            b.beta
                        )));
                    }
                }
            }
        }
        let cells = cells
            .into_iter()
            .map(|(beta, phase, m)| (Polar::new(beta, phase), m))
            .collect();
        let tails = self
            .families
            .iter()
            .map(|f| (f.modulus.clone(), f.phase.clone()))
            .collect();
        NormalDiagonalModel::new(cells, tails)
            .map_err(|e| DecompositionError::Inconsistent(e.to_string()))
    }
}

/// Result of adjoining a positive finite block `S` to an AM operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectSumAm {
    /// Classification of `S ⊕ T`, with the `S` block first in the basis.
    pub classification: AMClassification,
    /// Eigenvalues of `S`, snapped to nearby simple rationals.
    pub eigenvalues: Vec<Q>,
    /// `s − β` per eigenvalue; negative entries are where `S` dips below `β`.
    pub shifted_block: Vec<Q>,
}

pub fn direct_sum_am(
    finite_part: &FiniteMatrix,
    model: &PositiveDiagonalModel,
) -> Result<DirectSumAm, ClassifyError> {
    let eig = oracle::hermitian_eigen(finite_part)?;
    let norm = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -1e-8 * norm.max(1.0) {
        return Err(ClassifyError::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let beta = match classify_am_positive(model).decomposition {
        Some(d) => d.beta,
        None => return Err(ClassifyError::NotAm),
    };
    let tol = 1e-12 * norm.max(1.0);
    let eigenvalues: Vec<Q> = eig
        .values
        .iter()
        .map(|&v| snap_f64(v.max(0.0), tol))
        .collect();
    let cells = eigenvalues
        .iter()
        .map(|v| (v.clone(), Multiplicity::Finite(1)))
        .chain(model.cells().iter().cloned())
        .collect();
    let combined = PositiveDiagonalModel::new(cells, model.tails().to_vec())
        .expect("snapped eigenvalues are nonnegative");
    let shifted_block = eigenvalues.iter().map(|v| v - &beta).collect();
    Ok(DirectSumAm {
        classification: classify_am_positive(&combined),
        eigenvalues,
        shifted_block,
    })
}
