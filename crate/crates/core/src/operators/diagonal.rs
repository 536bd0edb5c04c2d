use num_traits::{Signed, Zero};

use super::matrix::FiniteMatrix;
use super::tail::Tail;
use super::ModelError;
use crate::exact::{Phase, Polar, Q};
use crate::spectra::{EigenFamily, Multiplicity};

/// Where a stream of the canonical enumeration draws its entries from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamSource {
    /// An infinite-multiplicity cell: the same entry forever.
    Cell(usize),
    Tail(usize),
}

/// Position of a canonical basis index inside the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Cell { cell: usize, within: u64 },
    Stream { stream: usize, step: u64 },
}

/// Canonical basis enumeration: finite-multiplicity cells first, in cell
/// order, then the infinite streams (infinite cells, then tails) round-robin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    finite_runs: Vec<(usize, u64, u64)>,
    finite_total: u64,
    streams: Vec<StreamSource>,
}

impl Layout {
    pub fn from_multiplicities(
        multiplicities: impl Iterator<Item = Multiplicity>,
        tail_count: usize,
    ) -> Self {
        let mut finite_runs = Vec::new();
        let mut finite_total = 0;
        let mut streams = Vec::new();
        for (cell, m) in multiplicities.enumerate() {
            match m {
                Multiplicity::Finite(k) => {
                    finite_runs.push((cell, finite_total, k));
                    finite_total += k;
                }
                Multiplicity::Infinite => streams.push(StreamSource::Cell(cell)),
            }
        }
        streams.extend((0..tail_count).map(StreamSource::Tail));
        Self {
            finite_runs,
            finite_total,
            streams,
        }
    }

    pub fn finite_total(&self) -> u64 {
        self.finite_total
    }

    pub fn streams(&self) -> &[StreamSource] {
        &self.streams
    }

    /// `(cell, first index, length)` for each finite cell.
    pub fn finite_runs(&self) -> &[(usize, u64, u64)] {
        &self.finite_runs
    }

    /// `None` when the model acts on an infinite-dimensional space.
    pub fn dimension(&self) -> Option<u64> {
        self.streams.is_empty().then_some(self.finite_total)
    }

    pub fn stream_index(&self, stream: usize, step: u64) -> u64 {
        self.finite_total + stream as u64 + self.streams.len() as u64 * step
    }

    pub fn stream_of(&self, source: StreamSource) -> Option<usize> {
        self.streams.iter().position(|s| *s == source)
    }

    pub fn locate(&self, index: u64) -> Option<Slot> {
        if index < self.finite_total {
            let run = self
                .finite_runs
                .partition_point(|&(_, start, _)| start <= index)
                - 1;
            let (cell, start, _) = self.finite_runs[run];
            return Some(Slot::Cell {
                cell,
                within: index - start,
            });
        }
        if self.streams.is_empty() {
            return None;
        }
        let rest = index - self.finite_total;
        let count = self.streams.len() as u64;
        Some(Slot::Stream {
            stream: (rest % count) as usize,
            step: rest / count,
        })
    }
}

/// Subset of canonical basis vectors spanning a coordinate subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSubspace {
    /// Selected indices inside the finite-cell block, ascending.
    pub finite: Vec<u64>,
    /// One selection per stream of the layout.
    pub streams: Vec<StreamSelection>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamSelection {
    Empty,
    All,
    /// Steps `offset, offset + step, …` of the stream.
    Progression {
        offset: u64,
        step: u64,
    },
    /// Finitely many steps of the stream, ascending.
    Steps(Vec<u64>),
}

impl CoordinateSubspace {
    pub fn is_empty(&self) -> bool {
        self.finite.is_empty()
            && self.streams.iter().all(|s| match s {
                StreamSelection::Empty => true,
                StreamSelection::Steps(v) => v.is_empty(),
                _ => false,
            })
    }

    /// First `limit` canonical indices in the subspace, ascending.
    pub fn indices(&self, layout: &Layout, limit: usize) -> Vec<u64> {
        let mut out: Vec<u64> = self.finite.iter().copied().take(limit).collect();
        let mut stream_steps: Vec<u64> = Vec::new();
        for (s, sel) in self.streams.iter().enumerate() {
            let steps: Vec<u64> = match sel {
                StreamSelection::Empty => Vec::new(),
                StreamSelection::All => (0..limit as u64).collect(),
                StreamSelection::Progression { offset, step } => {
                    (0..limit as u64).map(|i| offset + step * i).collect()
                }
                StreamSelection::Steps(v) => v.iter().copied().take(limit).collect(),
            };
            stream_steps.extend(steps.into_iter().map(|j| layout.stream_index(s, j)));
        }
        out.extend(stream_steps);
        out.sort_unstable();
        out.dedup();
        out.truncate(limit);
        out
    }
}

/// Outcome of a minimum-attainment test on a diagonal model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinAttainment {
    pub min_modulus: Q,
    pub attained: bool,
    /// Canonical index of the first entry whose modulus equals the minimum.
    pub witness: Option<u64>,
}

/// Diagonal normal operator: cells carry exact complex values, tails carry a
/// unit phase multiplying every term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalDiagonalModel {
    cells: Vec<(Polar, Multiplicity)>,
    tails: Vec<(Tail, Phase)>,
    layout: Layout,
}

fn check_multiplicity(cell: usize, m: Multiplicity) -> Result<(), ModelError> {
    if m == Multiplicity::Finite(0) {
        return Err(ModelError::ZeroMultiplicity { cell });
    }
    Ok(())
}

impl NormalDiagonalModel {
    pub fn new(
        mut cells: Vec<(Polar, Multiplicity)>,
        tails: Vec<(Tail, Phase)>,
    ) -> Result<Self, ModelError> {
        for (k, (_, m)) in cells.iter().enumerate() {
            check_multiplicity(k, *m)?;
        }
        let mut kept = Vec::with_capacity(tails.len());
        for (t, (tail, phase)) in tails.into_iter().enumerate() {
            let inf = tail.inf();
            if inf.is_negative() {
                return Err(ModelError::NegativeTail {
                    tail: t,
                    infimum: inf,
                });
            }
            // A zero leading term is split off as its own cell so every
            // tail term is nonzero.
            if tail.first().is_zero() {
                cells.push((Polar::zero(), Multiplicity::Finite(1)));
                kept.push((tail.skip(1), phase));
            } else {
                kept.push((tail, phase));
            }
        }
        let layout = Layout::from_multiplicities(cells.iter().map(|c| c.1), kept.len());
        Ok(Self {
            cells,
            tails: kept,
            layout,
        })
    }

    pub fn cells(&self) -> &[(Polar, Multiplicity)] {
        &self.cells
    }

    pub fn tails(&self) -> &[(Tail, Phase)] {
        &self.tails
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn entry(&self, index: u64) -> Option<Polar> {
        Some(match self.layout.locate(index)? {
            Slot::Cell { cell, .. } => self.cells[cell].0.clone(),
            Slot::Stream { stream, step } => match self.layout.streams[stream] {
                StreamSource::Cell(cell) => self.cells[cell].0.clone(),
                StreamSource::Tail(t) => {
                    let (tail, phase) = &self.tails[t];
                    Polar::new(tail.term(step), phase.clone())
                }
            },
        })
    }

    /// First `n` diagonal entries in canonical order (fewer if the model is
    /// finite-dimensional).
    pub fn entries(&self, n: u64) -> Vec<Polar> {
        (0..n).map_while(|i| self.entry(i)).collect()
    }

    pub fn truncate(&self, n: u64) -> FiniteMatrix {
        let diag: Vec<_> = self.entries(n).iter().map(Polar::to_complex).collect();
        FiniteMatrix::from_diagonal(&diag)
    }

    pub fn operator_norm(&self) -> Q {
        let cells = self.cells.iter().map(|(v, _)| v.modulus().clone());
        let tails = self.tails.iter().map(|(t, _)| t.sup());
        cells.chain(tails).max().unwrap_or_else(Q::zero)
    }

    pub fn min_modulus(&self) -> Q {
        self.min_attainment().min_modulus
    }

    pub fn min_attainment(&self) -> MinAttainment {
        let cells = self.cells.iter().map(|(v, _)| v.modulus().clone());
        let tails = self.tails.iter().map(|(t, _)| t.inf());
        let Some(min) = cells.chain(tails).min() else {
            return MinAttainment {
                min_modulus: Q::zero(),
                attained: false,
                witness: None,
            };
        };
        let mut witness: Option<u64> = None;
        let mut consider = |idx: u64| witness = Some(witness.map_or(idx, |w| w.min(idx)));
        for &(cell, start, _) in &self.layout.finite_runs {
            if *self.cells[cell].0.modulus() == min {
                consider(start);
            }
        }
        for (s, source) in self.layout.streams.iter().enumerate() {
            let hit = match *source {
                StreamSource::Cell(cell) => *self.cells[cell].0.modulus() == min,
                StreamSource::Tail(t) => {
                    let tail = &self.tails[t].0;
                    tail.attains_inf() && tail.first() == min
                }
            };
            if hit {
                consider(self.layout.stream_index(s, 0));
            }
        }
        MinAttainment {
            min_modulus: min,
            attained: witness.is_some(),
            witness,
        }
    }

    /// `0` is an accumulation point of the moduli iff some tail tends to `0`.
    pub fn has_closed_range(&self) -> bool {
        self.tails.iter().all(|(t, _)| !t.limit().is_zero())
    }

    pub fn is_injective(&self) -> bool {
        self.cells.iter().all(|(v, _)| !v.is_zero())
    }

    /// Entrywise `λ†`; tails are inverted and phases conjugated.
    pub fn pseudoinverse(&self) -> Result<Self, ModelError> {
        if !self.has_closed_range() {
            return Err(ModelError::RangeNotClosed);
        }
        let cells = self.cells.iter().map(|(v, m)| (v.dagger(), *m)).collect();
        let tails = self
            .tails
            .iter()
            .map(|(t, p)| Ok((t.then_reciprocal()?, p.conj())))
            .collect::<Result<_, ModelError>>()?;
        Self::new(cells, tails)
    }

    pub fn adjoint(&self) -> Self {
        let cells = self.cells.iter().map(|(v, m)| (v.conj(), *m)).collect();
        let tails = self
            .tails
            .iter()
            .map(|(t, p)| (t.clone(), p.conj()))
            .collect();
        Self::new(cells, tails).expect("conjugation preserves validity")
    }

    /// `|T| = √(T*T)`, obtained by dropping the phases.
    pub fn modulus(&self) -> PositiveDiagonalModel {
        let cells = self
            .cells
            .iter()
            .map(|(v, m)| (v.modulus().clone(), *m))
            .collect();
        let tails = self.tails.iter().map(|(t, _)| t.clone()).collect();
        PositiveDiagonalModel::new(cells, tails).expect("moduli form a valid positive model")
    }

    pub fn spectral_parts(&self) -> (Vec<(Polar, Multiplicity)>, Vec<EigenFamily>) {
        let families = self
            .tails
            .iter()
            .map(|(t, p)| EigenFamily::new(t.clone(), p.clone()))
            .collect();
        (self.cells.clone(), families)
    }
}

/// Positive diagonal operator with exact nonnegative entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveDiagonalModel {
    cells: Vec<(Q, Multiplicity)>,
    tails: Vec<Tail>,
    layout: Layout,
}

impl PositiveDiagonalModel {
    pub fn new(mut cells: Vec<(Q, Multiplicity)>, tails: Vec<Tail>) -> Result<Self, ModelError> {
        for (k, (v, m)) in cells.iter().enumerate() {
            check_multiplicity(k, *m)?;
            if v.is_negative() {
                return Err(ModelError::NegativeCell {
                    cell: k,
                    value: v.clone(),
                });
            }
        }
        let mut kept = Vec::with_capacity(tails.len());
        for (t, tail) in tails.into_iter().enumerate() {
            let inf = tail.inf();
            if inf.is_negative() {
                return Err(ModelError::NegativeTail {
                    tail: t,
                    infimum: inf,
                });
            }
            if tail.first().is_zero() {
                cells.push((Q::zero(), Multiplicity::Finite(1)));
                kept.push(tail.skip(1));
            } else {
                kept.push(tail);
            }
        }
        let layout = Layout::from_multiplicities(cells.iter().map(|c| c.1), kept.len());
        Ok(Self {
            cells,
            tails: kept,
            layout,
        })
    }

    /// `β·I` on an infinite-dimensional space.
    pub fn scalar(beta: Q) -> Self {
        Self::new(vec![(beta, Multiplicity::Infinite)], Vec::new()).expect("nonnegative scalar")
    }

    pub fn cells(&self) -> &[(Q, Multiplicity)] {
        &self.cells
    }

    pub fn tails(&self) -> &[Tail] {
        &self.tails
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn as_normal(&self) -> NormalDiagonalModel {
        let cells = self
            .cells
            .iter()
            .map(|(v, m)| (Polar::real(v.clone()), *m))
            .collect();
        let tails = self
            .tails
            .iter()
            .map(|t| (t.clone(), Phase::one()))
            .collect();
        NormalDiagonalModel::new(cells, tails).expect("positive model is a valid normal model")
    }

    pub fn entry(&self, index: u64) -> Option<Q> {
        Some(match self.layout.locate(index)? {
            Slot::Cell { cell, .. } => self.cells[cell].0.clone(),
            Slot::Stream { stream, step } => match self.layout.streams[stream] {
                StreamSource::Cell(cell) => self.cells[cell].0.clone(),
                StreamSource::Tail(t) => self.tails[t].term(step),
            },
        })
    }

    pub fn entries(&self, n: u64) -> Vec<Q> {
        (0..n).map_while(|i| self.entry(i)).collect()
    }

    pub fn truncate(&self, n: u64) -> FiniteMatrix {
        self.as_normal().truncate(n)
    }

    pub fn operator_norm(&self) -> Q {
        let cells = self.cells.iter().map(|(v, _)| v.clone());
        let tails = self.tails.iter().map(Tail::sup);
        cells.chain(tails).max().unwrap_or_else(Q::zero)
    }

    pub fn min_modulus(&self) -> Q {
        self.is_min_attaining().min_modulus
    }

    pub fn is_min_attaining(&self) -> MinAttainment {
        self.as_normal().min_attainment()
    }

    pub fn has_closed_range(&self) -> bool {
        self.tails.iter().all(|t| !t.limit().is_zero())
    }

    pub fn is_injective(&self) -> bool {
        self.cells.iter().all(|(v, _)| !v.is_zero())
    }

    pub fn pseudoinverse(&self) -> Result<Self, ModelError> {
        if !self.has_closed_range() {
            return Err(ModelError::RangeNotClosed);
        }
        let cells = self
            .cells
            .iter()
            .map(|(v, m)| (if v.is_zero() { Q::zero() } else { v.recip() }, *m))
            .collect();
        let tails = self
            .tails
            .iter()
            .map(Tail::then_reciprocal)
            .collect::<Result<_, _>>()?;
        Self::new(cells, tails)
    }

    /// Positive operators are self-adjoint.
    pub fn adjoint(&self) -> Self {
        self.clone()
    }

    /// Entrywise square, i.e. `P²`.
    pub fn squared(&self) -> Self {
        let cells = self.cells.iter().map(|(v, m)| (v * v, *m)).collect();
        let tails = self
            .tails
            .iter()
            .map(|t| {
                t.then_square()
                    .expect("tails of a positive model are nonnegative")
            })
            .collect();
        Self::new(cells, tails).expect("squares are nonnegative")
    }

    /// Orthogonal direct sum: cells and tails concatenated.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let cells = self.cells.iter().chain(&other.cells).cloned().collect();
        let tails = self.tails.iter().chain(&other.tails).cloned().collect();
        Self::new(cells, tails).expect("direct sum of valid models is valid")
    }

    /// Prepends `count` zero entries, merging into a leading zero cell.
    pub fn with_zero_padding(&self, count: u64) -> Self {
        if count == 0 {
            return self.clone();
        }
        let mut cells = self.cells.clone();
        match cells.iter_mut().find(|(v, _)| v.is_zero()) {
            Some((_, m)) => *m = m.add(Multiplicity::Finite(count)),
            None => cells.insert(0, (Q::zero(), Multiplicity::Finite(count))),
        }
        Self::new(cells, self.tails.clone()).expect("zero padding keeps validity")
    }

    /// Compression of the model onto a coordinate subspace of the canonical basis.
    pub fn restrict(&self, subspace: &CoordinateSubspace) -> Result<Self, ModelError> {
        if subspace.streams.len() != self.layout.streams.len() {
            return Err(ModelError::SubspaceShape {
                expected: self.layout.streams.len(),
                found: subspace.streams.len(),
            });
        }
        let mut cells: Vec<(Q, Multiplicity)> = Vec::new();
        for &idx in &subspace.finite {
            match self.layout.locate(idx) {
                Some(Slot::Cell { cell, .. }) => {
                    cells.push((self.cells[cell].0.clone(), Multiplicity::Finite(1)))
                }
                _ => return Err(ModelError::IndexOutOfRange(idx)),
            }
        }
        let mut tails = Vec::new();
        for (sel, source) in subspace.streams.iter().zip(&self.layout.streams) {
            match (*source, sel) {
                (_, StreamSelection::Empty) => {}
                (_, StreamSelection::Steps(steps)) if steps.is_empty() => {}
                (StreamSource::Cell(c), StreamSelection::Steps(steps)) => cells.push((
                    self.cells[c].0.clone(),
                    Multiplicity::Finite(steps.len() as u64),
                )),
                (StreamSource::Cell(c), _) => {
                    cells.push((self.cells[c].0.clone(), Multiplicity::Infinite))
                }
                (StreamSource::Tail(t), StreamSelection::All) => tails.push(self.tails[t].clone()),
                (StreamSource::Tail(t), StreamSelection::Progression { offset, step }) => {
                    tails.push(self.tails[t].subsequence(*offset, (*step).max(1)))
                }
                (StreamSource::Tail(t), StreamSelection::Steps(steps)) => cells.extend(
                    steps
                        .iter()
                        .map(|&j| (self.tails[t].term(j), Multiplicity::Finite(1))),
                ),
            }
        }
        Self::new(cells, tails)
    }

    pub fn spectral_parts(&self) -> (Vec<(Polar, Multiplicity)>, Vec<EigenFamily>) {
        self.as_normal().spectral_parts()
    }
}
