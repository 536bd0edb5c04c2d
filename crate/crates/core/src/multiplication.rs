//! Multiplication operators `M_f` on σ-finite measure spaces built from
//! countably many cells on which `|f|` is constant.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::classify::{AmVerdict, AnVerdict};
use crate::exact::{Phase, Polar, Q};
use crate::operators::{ModelError, PositiveDiagonalModel, Tail};
use crate::spectra::Multiplicity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    /// A single atom: one dimension of `L²`.
    Atom,
    /// A non-atomic set: infinitely many dimensions.
    Diffuse,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasureCell {
    pub label: String,
    pub kind: CellKind,
    pub weight: Q,
    pub symbol: Polar,
}

/// Countably many atoms with `|f|` following a tail and a common phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TailFamily {
    pub modulus: Tail,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("cell {cell} has non-positive weight {weight}")]
    NonPositiveWeight { cell: usize, weight: Q },
    #[error("tail family {family} has negative moduli (infimum {infimum})")]
    NegativeTail { family: usize, infimum: Q },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasureSpaceModel {
    cells: Vec<MeasureCell>,
    tail_families: Vec<TailFamily>,
}

/// A piece of the measure space: a cell or one atom of a tail family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Piece {
    Cell(usize),
    TailTerm { family: usize, step: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultAttainment {
    pub min_modulus: Q,
    pub attained: bool,
    pub witness: Option<Piece>,
}

impl MeasureSpaceModel {
    pub fn new(
        cells: Vec<MeasureCell>,
        tail_families: Vec<TailFamily>,
    ) -> Result<Self, MeasureError> {
        for (k, c) in cells.iter().enumerate() {
            if !c.weight.is_positive() {
                return Err(MeasureError::NonPositiveWeight {
                    cell: k,
                    weight: c.weight.clone(),
                });
            }
        }
        for (k, f) in tail_families.iter().enumerate() {
            let inf = f.modulus.inf();
            if inf.is_negative() {
                return Err(MeasureError::NegativeTail {
                    family: k,
                    infimum: inf,
                });
            }
        }
        Ok(Self {
            cells,
            tail_families,
        })
    }

    pub fn cells(&self) -> &[MeasureCell] {
        &self.cells
    }

    pub fn tail_families(&self) -> &[TailFamily] {
        &self.tail_families
    }

    /// `|f|` on a piece.
    pub fn modulus_on(&self, piece: &Piece) -> Q {
        match piece {
            Piece::Cell(k) => self.cells[*k].symbol.modulus().clone(),
            Piece::TailTerm { family, step } => self.tail_families[*family].modulus.term(*step),
        }
    }

    pub fn ess_inf(&self) -> Q {
        let cells = self.cells.iter().map(|c| c.symbol.modulus().clone());
        let tails = self.tail_families.iter().map(|f| f.modulus.inf());
        cells.chain(tails).min().unwrap_or_else(Q::zero)
    }

    pub fn ess_sup(&self) -> Q {
        let cells = self.cells.iter().map(|c| c.symbol.modulus().clone());
        let tails = self.tail_families.iter().map(|f| f.modulus.sup());
        cells.chain(tails).max().unwrap_or_else(Q::zero)
    }

    pub fn min_modulus_mult(&self) -> Q {
        self.ess_inf()
    }

    pub fn is_min_attaining_mult(&self) -> MultAttainment {
        let min = self.ess_inf();
        let cell = self
            .cells
            .iter()
            .position(|c| *c.symbol.modulus() == min)
            .map(Piece::Cell);
        let witness = cell.or_else(|| {
            self.tail_families
                .iter()
                .position(|f| f.modulus.attains_inf() && f.modulus.first() == min)
                .map(|family| Piece::TailTerm { family, step: 0 })
        });
        MultAttainment {
            min_modulus: min,
            attained: witness.is_some(),
            witness,
        }
    }

    /// The diagonal model unitarily equivalent to `M_{|f|}`.
    pub fn to_diagonal(&self) -> Result<PositiveDiagonalModel, ModelError> {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let m = match c.kind {
                    CellKind::Atom => Multiplicity::Finite(1),
                    CellKind::Diffuse => Multiplicity::Infinite,
                };
                (c.symbol.modulus().clone(), m)
            })
            .collect();
        let tails = self
            .tail_families
            .iter()
            .map(|f| f.modulus.clone())
            .collect();
        PositiveDiagonalModel::new(cells, tails)
    }
}

/// Direction in which layers are peeled off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Essential infima, for minimum attainment.
    Below,
    /// Essential suprema, for norm attainment.
    Above,
}

impl Side {
    fn cmp(self, a: &Q, b: &Q) -> Ordering {
        match self {
            Side::Below => a.cmp(b),
            Side::Above => b.cmp(a),
        }
    }

    /// Whether a tail runs towards its limit in the peeling order.
    fn runs_with(self, tail: &Tail) -> bool {
        match self {
            Side::Below => tail.is_increasing(),
            Side::Above => !tail.is_increasing(),
        }
    }
}

/// `A_i`: the pieces on which `|f|` equals the `i`-th attained level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layer {
    pub level: Q,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LayerFailure {
    /// The essential extremum of what remains is not attained.
    NotAttained { level: Q },
    /// More than one level carries infinite weight.
    SeveralInfiniteLevels { levels: Vec<Q> },
    /// No level carries infinite weight (finite-dimensional `L²`).
    NoInfiniteLevel,
}

/// Successful exhaustion: a run of layers towards `pivot`, then finitely
/// many layers from `pivot` onwards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Exhaustion {
    side: Side,
    pivot: Q,
    run_cells: Vec<usize>,
    run_tails: Vec<usize>,
    final_layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerClassification {
    pub attained: bool,
    pub failure: Option<LayerFailure>,
    pub exhaustion: Option<Exhaustion>,
}

fn exhaust(model: &MeasureSpaceModel, side: Side) -> LayerClassification {
    let fail = |failure| LayerClassification {
        attained: false,
        failure: Some(failure),
        exhaustion: None,
    };
    // A tail approaching its limit against the peeling order leaves that
    // limit as an unattained extremum once everything before it is gone.
    let stuck = model
        .tail_families
        .iter()
        .filter(|f| !side.runs_with(&f.modulus))
        .map(|f| f.modulus.limit())
        .min_by(|a, b| side.cmp(a, b));
    if let Some(level) = stuck {
        return fail(LayerFailure::NotAttained { level });
    }
    let mut infinite: Vec<Q> = model
        .tail_families
        .iter()
        .map(|f| f.modulus.limit())
        .chain(
            model
                .cells
                .iter()
                .filter(|c| c.kind == CellKind::Diffuse)
                .map(|c| c.symbol.modulus().clone()),
        )
        .collect();
    infinite.sort_by(|a, b| side.cmp(a, b));
    infinite.dedup();
    let pivot = match infinite.as_slice() {
        [] => return fail(LayerFailure::NoInfiniteLevel),
        [only] => only.clone(),
        _ => return fail(LayerFailure::SeveralInfiniteLevels { levels: infinite }),
    };
    let mut run_cells: Vec<usize> = Vec::new();
    let mut rest: Vec<usize> = Vec::new();
    for (k, c) in model.cells.iter().enumerate() {
        if side.cmp(c.symbol.modulus(), &pivot) == Ordering::Less {
            run_cells.push(k);
        } else {
            rest.push(k);
        }
    }
    let modulus = |k: &usize| model.cells[*k].symbol.modulus().clone();
    run_cells.sort_by(|a, b| side.cmp(&modulus(a), &modulus(b)).then(a.cmp(b)));
    rest.sort_by(|a, b| side.cmp(&modulus(a), &modulus(b)).then(a.cmp(b)));
    let mut final_layers: Vec<Layer> = Vec::new();
    for k in rest {
        let level = modulus(&k);
        match final_layers.last_mut() {
            Some(layer) if layer.level == level => layer.pieces.push(Piece::Cell(k)),
            _ => final_layers.push(Layer {
                level,
                pieces: vec![Piece::Cell(k)],
            }),
        }
    }
    let exhaustion = Exhaustion {
        side,
        pivot,
        run_cells,
        run_tails: (0..model.tail_families.len()).collect(),
        final_layers,
    };
    LayerClassification {
        attained: true,
        failure: None,
        exhaustion: Some(exhaustion),
    }
}

impl Exhaustion {
    pub fn side(&self) -> Side {
        self.side
    }

    /// The single level of infinite weight.
    pub fn pivot(&self) -> &Q {
        &self.pivot
    }

    /// Layers from the pivot onwards; finitely many.
    pub fn final_layers(&self) -> &[Layer] {
        &self.final_layers
    }

    /// Whether the run before the pivot has infinitely many layers.
    pub fn run_is_infinite(&self) -> bool {
        !self.run_tails.is_empty()
    }

    /// First `n` layers of the run towards the pivot, in peeling order.
    pub fn run_layers(&self, model: &MeasureSpaceModel, n: usize) -> Vec<Layer> {
        let mut steps = vec![0u64; model.tail_families.len()];
        let mut next_cell = 0;
        let mut out: Vec<Layer> = Vec::new();
        while out.len() < n {
            let cell_value = self
                .run_cells
                .get(next_cell)
                .map(|k| model.cells[*k].symbol.modulus().clone());
            let tail_values = self
                .run_tails
                .iter()
                .map(|&t| model.tail_families[t].modulus.term(steps[t]));
            let Some(level) = cell_value
                .iter()
                .cloned()
                .chain(tail_values)
                .min_by(|a, b| self.side.cmp(a, b))
            else {
                break;
            };
            let mut pieces = Vec::new();
            while let Some(&k) = self.run_cells.get(next_cell) {
                if *model.cells[k].symbol.modulus() != level {
                    break;
                }
                pieces.push(Piece::Cell(k));
                next_cell += 1;
            }
            for &t in &self.run_tails {
                if model.tail_families[t].modulus.term(steps[t]) == level {
                    pieces.push(Piece::TailTerm {
                        family: t,
                        step: steps[t],
                    });
                    steps[t] += 1;
                }
            }
            out.push(Layer { level, pieces });
        }
        out
    }

    /// Checks the first `n` run layers and all final layers: `|f|` equals
    /// the level on every piece, levels move strictly in peeling order, and
    /// each level is the essential extremum of what remains.
    pub fn verify(&self, model: &MeasureSpaceModel, n: usize) -> bool {
        let run = self.run_layers(model, n);
        let complete_run = run.len() < n;
        let layers: Vec<&Layer> = if complete_run {
            run.iter().chain(&self.final_layers).collect()
        } else {
            run.iter().collect()
        };
        let mut consumed_cells = vec![false; model.cells.len()];
        let mut next_step = vec![0u64; model.tail_families.len()];
        let mut previous: Option<&Q> = None;
        for layer in layers {
            if previous.is_some_and(|p| self.side.cmp(p, &layer.level) != Ordering::Less) {
                return false;
            }
            previous = Some(&layer.level);
            let remaining = model
                .cells
                .iter()
                .zip(&consumed_cells)
                .filter(|(_, used)| !**used)
                .map(|(c, _)| c.symbol.modulus().clone())
                .chain(
                    model
                        .tail_families
                        .iter()
                        .enumerate()
                        .map(|(t, f)| f.modulus.term(next_step[t])),
                )
                .min_by(|a, b| self.side.cmp(a, b));
            if remaining.as_ref() != Some(&layer.level) {
                return false;
            }
            for piece in &layer.pieces {
                if model.modulus_on(piece) != layer.level {
                    return false;
                }
                match piece {
                    Piece::Cell(k) => consumed_cells[*k] = true,
                    Piece::TailTerm { family, step } => {
                        if *step != next_step[*family] {
                            return false;
                        }
                        next_step[*family] += 1;
                    }
                }
            }
        }
        complete_run || self.verify_final_layers(model)
    }

    /// Final layers after an infinite run: they start at the pivot, move in
    /// peeling order, and consume every cell outside the run exactly once.
    fn verify_final_layers(&self, model: &MeasureSpaceModel) -> bool {
        let mut seen = vec![false; model.cells.len()];
        for &k in &self.run_cells {
            seen[k] = true;
        }
        let mut previous: Option<&Q> = None;
        for layer in &self.final_layers {
            if self.side.cmp(&layer.level, &self.pivot) == Ordering::Less {
                return false;
            }
            if previous.is_some_and(|p| self.side.cmp(p, &layer.level) != Ordering::Less) {
                return false;
            }
            previous = Some(&layer.level);
            for piece in &layer.pieces {
                let Piece::Cell(k) = piece else { return false };
                if seen[*k] || model.modulus_on(piece) != layer.level {
                    return false;
                }
                seen[*k] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultClassification<V> {
    pub verdict: V,
    pub layers: LayerClassification,
}

/// AM criterion by peeling off layers where `|f|` attains its essential infimum.
pub fn classify_am_mult(model: &MeasureSpaceModel) -> MultClassification<AmVerdict> {
    let layers = exhaust(model, Side::Below);
    let verdict = if layers.attained {
        AmVerdict::Am
    } else {
        AmVerdict::NotAm
    };
    MultClassification { verdict, layers }
}

/// AN criterion by peeling off layers where `|f|` attains its essential supremum.
pub fn classify_an_mult(model: &MeasureSpaceModel) -> MultClassification<AnVerdict> {
    let layers = exhaust(model, Side::Above);
    let verdict = if layers.attained {
        AnVerdict::An
    } else {
        AnVerdict::NotAn
    };
    MultClassification { verdict, layers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify_am_positive, classify_an_positive};
    use crate::exact::{int, ratio};
    use crate::operators::{Direction, TailRule};

    fn tail(limit: i64, dir: Direction, start: u64) -> Tail {
        TailRule::new(int(limit), dir, int(1), 1, start)
            .unwrap()
            .into()
    }

    fn cell(label: &str, kind: CellKind, v: Q) -> MeasureCell {
        MeasureCell {
            label: label.into(),
            kind,
            weight: int(1),
            symbol: Polar::real(v),
        }
    }

    fn family(t: Tail) -> TailFamily {
        TailFamily {
            modulus: t,
            phase: Phase::one(),
        }
    }

    fn model(cells: Vec<MeasureCell>, tails: Vec<Tail>) -> MeasureSpaceModel {
        MeasureSpaceModel::new(cells, tails.into_iter().map(family).collect()).unwrap()
    }

    #[test]
    fn essential_bounds() {
        let m = model(
            vec![
                cell("a", CellKind::Atom, int(2)),
                cell("b", CellKind::Diffuse, int(3)),
            ],
            vec![],
        );
        assert_eq!((m.ess_inf(), m.ess_sup()), (int(2), int(3)));
        let m = model(vec![], vec![tail(1, Direction::FromAbove, 1)]);
        assert_eq!(m.ess_inf(), int(1));
        assert!(!m.is_min_attaining_mult().attained);
        let m = model(vec![], vec![tail(1, Direction::FromBelow, 2)]);
        assert_eq!(m.min_modulus_mult(), ratio(1, 2));
        assert_eq!(
            m.is_min_attaining_mult().witness,
            Some(Piece::TailTerm { family: 0, step: 0 })
        );
    }

    #[test]
    fn rejects_null_cells() {
        let mut c = cell("a", CellKind::Atom, int(1));
        c.weight = int(0);
        assert!(MeasureSpaceModel::new(vec![c], vec![]).is_err());
    }

    #[test]
    fn tail_with_atom_above_is_am() {
        let m = model(
            vec![cell("top", CellKind::Atom, int(2))],
            vec![tail(1, Direction::FromBelow, 2)],
        );
        let c = classify_am_mult(&m);
        assert_eq!(c.verdict, AmVerdict::Am);
        let ex = c.layers.exhaustion.unwrap();
        let run = ex.run_layers(&m, 3);
        let levels: Vec<Q> = run.iter().map(|l| l.level.clone()).collect();
        assert_eq!(levels, vec![ratio(1, 2), ratio(2, 3), ratio(3, 4)]);
        assert_eq!(ex.final_layers()[0].level, int(2));
        assert!(ex.verify(&m, 50));
        assert!(classify_am_positive(&m.to_diagonal().unwrap()).is_am());
    }

    #[test]
    fn decreasing_tail_gets_stuck() {
        let m = model(vec![], vec![tail(1, Direction::FromAbove, 1)]);
        let c = classify_am_mult(&m);
        assert_eq!(c.verdict, AmVerdict::NotAm);
        assert_eq!(
            c.layers.failure,
            Some(LayerFailure::NotAttained { level: int(1) })
        );
        assert_eq!(classify_an_mult(&m).verdict, AnVerdict::An);
        assert!(classify_an_positive(&m.to_diagonal().unwrap()).is_an());
    }

    #[test]
    fn constant_symbol() {
        let m = model(vec![cell("x", CellKind::Diffuse, int(3))], vec![]);
        assert_eq!(classify_am_mult(&m).verdict, AmVerdict::Am);
        assert_eq!(classify_an_mult(&m).verdict, AnVerdict::An);
    }

    #[test]
    fn diffuse_cells_at_two_levels() {
        let m = model(
            vec![
                cell("x", CellKind::Diffuse, int(1)),
                cell("y", CellKind::Diffuse, int(2)),
            ],
            vec![],
        );
        let c = classify_am_mult(&m);
        assert_eq!(
            c.layers.failure,
            Some(LayerFailure::SeveralInfiniteLevels {
                levels: vec![int(1), int(2)]
            })
        );
        assert!(!classify_am_positive(&m.to_diagonal().unwrap()).is_am());
    }

    #[test]
    fn diagonal_reduction() {
        let m = model(
            vec![
                cell("a", CellKind::Atom, int(1)),
                cell("b", CellKind::Diffuse, int(2)),
            ],
            vec![tail(1, Direction::FromBelow, 2)],
        );
        let d = m.to_diagonal().unwrap();
        assert_eq!(
            d.cells(),
            &[
                (int(1), Multiplicity::Finite(1)),
                (int(2), Multiplicity::Infinite)
            ]
        );
        assert_eq!(d.tails().len(), 1);
        assert_eq!(m.min_modulus_mult(), d.min_modulus());
    }
}
