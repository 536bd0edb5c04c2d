//! Exact spectrum data for diagonal models, direct sums, and the
//! inverse/pseudoinverse spectral maps.

use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{Phase, Polar, Q};
use crate::operators::{NormalDiagonalModel, PositiveDiagonalModel, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Multiplicity {
    Finite(u64),
    Infinite,
}

impl Multiplicity {
    pub fn add(self, other: Self) -> Self {
        match (self, other) {
            (Multiplicity::Finite(a), Multiplicity::Finite(b)) => Multiplicity::Finite(a + b),
            _ => Multiplicity::Infinite,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Multiplicity::Infinite
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(k) => write!(f, "{k}"),
            Multiplicity::Infinite => f.write_str("inf"),
        }
    }
}

/// Countably many simple eigenvalues `phase · tail.term(j)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EigenFamily {
    tail: Tail,
    phase: Phase,
}

impl EigenFamily {
    pub fn new(tail: Tail, phase: Phase) -> Self {
        Self { tail, phase }
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn value(&self, j: u64) -> Polar {
        Polar::new(self.tail.term(j), self.phase.clone())
    }

    pub fn limit(&self) -> Polar {
        Polar::new(self.tail.limit(), self.phase.clone())
    }

    /// Step at which the family takes the value `v`, if any.
    pub fn position_of(&self, v: &Polar) -> Option<u64> {
        if v.is_zero() || *v.phase() != self.phase {
            return None;
        }
        self.tail.position_of(v.modulus())
    }
}

/// A family restricted to its isolated values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscreteFamily {
    pub family: usize,
    /// Steps whose value is essential or already listed as a discrete cell value.
    pub excluded: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("0 lies in the spectrum, so the operator is not invertible")]
    ZeroInSpectrum,
    #[error("0 is an accumulation point of the spectrum, so the range is not closed")]
    ZeroAccumulates,
    #[error("essential spectrum is empty (finite-dimensional operator)")]
    EmptyEssential,
}

/// Spectrum of a diagonal normal operator, partitioned exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpectrumReport {
    point: Vec<(Polar, Multiplicity)>,
    families: Vec<EigenFamily>,
    essential: Vec<Polar>,
    continuous: Vec<Polar>,
    discrete: Vec<(Polar, Multiplicity)>,
    discrete_families: Vec<DiscreteFamily>,
}

impl SpectrumReport {
    /// Builds the partition from eigenvalue cells and families.
    pub fn from_parts(cells: Vec<(Polar, Multiplicity)>, mut families: Vec<EigenFamily>) -> Self {
        let mut point: Vec<(Polar, Multiplicity)> = Vec::new();
        let mut sorted = cells;
        sorted.sort();
        for (v, m) in sorted {
            match point.last_mut() {
                Some((last, acc)) if *last == v => *acc = acc.add(m),
                _ => point.push((v, m)),
            }
        }
        families.sort();

        let mut essential: Vec<Polar> = point
            .iter()
            .filter(|(_, m)| m.is_infinite())
            .map(|(v, _)| v.clone())
            .chain(families.iter().map(EigenFamily::limit))
            .collect();
        essential.sort();
        essential.dedup();

        let is_eigenvalue = |v: &Polar| {
            point.iter().any(|(p, _)| p == v) || families.iter().any(|f| f.position_of(v).is_some())
        };
        let continuous = essential
            .iter()
            .filter(|v| !is_eigenvalue(v))
            .cloned()
            .collect();

        let mut report = Self {
            point,
            families,
            essential,
            continuous,
            discrete: Vec::new(),
            discrete_families: Vec::new(),
        };
        report.discrete = report
            .point
            .iter()
            .filter(|(v, m)| !m.is_infinite() && !report.is_essential(v))
            .map(|(v, _)| {
                (
                    v.clone(),
                    report
                        .multiplicity_of(v)
                        .expect("cell value is an eigenvalue"),
                )
            })
            .collect();
        report.discrete_families = (0..report.families.len())
            .map(|k| {
                let family = &report.families[k];
                let mut excluded: Vec<u64> = report
                    .essential
                    .iter()
                    .chain(report.point.iter().map(|(v, _)| v))
                    .filter_map(|v| family.position_of(v))
                    .collect();
                excluded.sort_unstable();
                excluded.dedup();
                DiscreteFamily {
                    family: k,
                    excluded,
                }
            })
            .collect();
        report
    }

    pub fn point(&self) -> &[(Polar, Multiplicity)] {
        &self.point
    }

    pub fn families(&self) -> &[EigenFamily] {
        &self.families
    }

    pub fn essential(&self) -> &[Polar] {
        &self.essential
    }

    pub fn continuous(&self) -> &[Polar] {
        &self.continuous
    }

    pub fn discrete(&self) -> &[(Polar, Multiplicity)] {
        &self.discrete
    }

    pub fn discrete_families(&self) -> &[DiscreteFamily] {
        &self.discrete_families
    }

    pub fn is_essential(&self, v: &Polar) -> bool {
        self.essential.binary_search(v).is_ok()
    }

    /// Dimension of the eigenspace for `v`, or `None` if `v` is not an eigenvalue.
    pub fn multiplicity_of(&self, v: &Polar) -> Option<Multiplicity> {
        let cells = self.point.iter().filter(|(p, _)| p == v).map(|(_, m)| *m);
        let hits = self
            .families
            .iter()
            .filter(|f| f.position_of(v).is_some())
            .map(|_| Multiplicity::Finite(1));
        cells.chain(hits).reduce(Multiplicity::add)
    }

    /// Membership in the spectrum: eigenvalues plus essential points.
    pub fn contains(&self, v: &Polar) -> bool {
        self.is_essential(v) || self.multiplicity_of(v).is_some()
    }

    fn map_parts(
        &self,
        cell: impl Fn(&Polar) -> Polar,
        family: impl Fn(&EigenFamily) -> EigenFamily,
    ) -> Self {
        let cells = self.point.iter().map(|(v, m)| (cell(v), *m)).collect();
        let families = self.families.iter().map(family).collect();
        Self::from_parts(cells, families)
    }
}

fn reciprocal_family(f: &EigenFamily) -> EigenFamily {
    let tail = f
        .tail
        .then_reciprocal()
        .expect("family terms are positive with a positive limit");
    EigenFamily::new(tail, f.phase.conj())
}

pub trait HasSpectrum {
    fn spectrum(&self) -> SpectrumReport;
}

impl HasSpectrum for PositiveDiagonalModel {
    fn spectrum(&self) -> SpectrumReport {
        let (cells, families) = self.spectral_parts();
        SpectrumReport::from_parts(cells, families)
    }
}

impl HasSpectrum for NormalDiagonalModel {
    fn spectrum(&self) -> SpectrumReport {
        let (cells, families) = self.spectral_parts();
        SpectrumReport::from_parts(cells, families)
    }
}

pub fn spectrum_of_diagonal(model: &impl HasSpectrum) -> SpectrumReport {
    model.spectrum()
}

/// Spectrum of an orthogonal direct sum; shared eigenvalues add multiplicities.
pub fn spectrum_of_direct_sum(left: &SpectrumReport, right: &SpectrumReport) -> SpectrumReport {
    let cells = left.point.iter().chain(&right.point).cloned().collect();
    let families = left
        .families
        .iter()
        .chain(&right.families)
        .cloned()
        .collect();
    SpectrumReport::from_parts(cells, families)
}

/// `λ ↦ 1/λ` on every part.
pub fn map_spectrum_inverse(report: &SpectrumReport) -> Result<SpectrumReport, SpectrumError> {
    if report.contains(&Polar::zero()) {
        return Err(SpectrumError::ZeroInSpectrum);
    }
    Ok(report.map_parts(Polar::dagger, reciprocal_family))
}

/// `λ ↦ λ†` on every part.
pub fn map_spectrum_pseudoinverse(
    report: &SpectrumReport,
) -> Result<SpectrumReport, SpectrumError> {
    if report.families.iter().any(|f| f.tail.limit().is_zero()) {
        return Err(SpectrumError::ZeroAccumulates);
    }
    Ok(report.map_parts(Polar::dagger, reciprocal_family))
}

/// Infimum of `|λ|` over the whole spectrum.
pub fn min_modulus_from_spectrum(report: &SpectrumReport) -> Q {
    let cells = report.point.iter().map(|(v, _)| v.modulus().clone());
    let families = report.families.iter().map(|f| f.tail.inf());
    cells.chain(families).min().unwrap_or_else(Q::zero)
}

/// `m_e(T)`: infimum of `|λ|` over the essential spectrum.
pub fn essential_min_modulus(report: &SpectrumReport) -> Result<Q, SpectrumError> {
    report
        .essential
        .iter()
        .map(|v| v.modulus().clone())
        .min()
        .ok_or(SpectrumError::EmptyEssential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};
    use crate::operators::{Direction, TailRule};

    fn tail(limit: i64, dir: Direction, start: u64) -> Tail {
        TailRule::new(int(limit), dir, int(1), 1, start)
            .unwrap()
            .into()
    }

    fn real(v: Q) -> Polar {
        Polar::real(v)
    }

    #[test]
    fn cell_plus_increasing_tail() {
        let m = PositiveDiagonalModel::new(
            vec![(int(2), Multiplicity::Finite(1))],
            vec![tail(1, Direction::FromBelow, 2)],
        )
        .unwrap();
        let s = m.spectrum();
        assert_eq!(s.essential(), &[real(int(1))]);
        assert_eq!(s.continuous(), &[real(int(1))]);
        assert_eq!(s.discrete(), &[(real(int(2)), Multiplicity::Finite(1))]);
        assert_eq!(s.discrete_families()[0].excluded, Vec::<u64>::new());
        assert_eq!(
            s.multiplicity_of(&real(ratio(2, 3))),
            Some(Multiplicity::Finite(1))
        );
    }

    #[test]
    fn zero_operator() {
        let s = PositiveDiagonalModel::new(vec![(int(0), Multiplicity::Infinite)], vec![])
            .unwrap()
            .spectrum();
        assert_eq!(s.essential(), &[Polar::zero()]);
        assert!(s.continuous().is_empty());
        assert!(s.discrete().is_empty());
    }

    #[test]
    fn shared_eigenvalues_add() {
        let one = PositiveDiagonalModel::new(vec![(int(1), Multiplicity::Finite(1))], vec![])
            .unwrap()
            .spectrum();
        let sum = spectrum_of_direct_sum(&one, &one);
        assert_eq!(sum.point(), &[(real(int(1)), Multiplicity::Finite(2))]);

        let t = PositiveDiagonalModel::new(vec![], vec![tail(1, Direction::FromBelow, 2)])
            .unwrap()
            .spectrum();
        let sum = spectrum_of_direct_sum(&t, &t);
        assert_eq!(sum.essential(), &[real(int(1))]);
        assert_eq!(
            sum.multiplicity_of(&real(ratio(1, 2))),
            Some(Multiplicity::Finite(2))
        );
    }

    #[test]
    fn inverse_map() {
        let s = PositiveDiagonalModel::scalar(int(2)).spectrum();
        assert_eq!(
            map_spectrum_inverse(&s).unwrap().essential(),
            &[real(ratio(1, 2))]
        );

        let t = PositiveDiagonalModel::new(vec![], vec![tail(1, Direction::FromAbove, 1)])
            .unwrap()
            .spectrum();
        let inv = map_spectrum_inverse(&t).unwrap();
        assert_eq!(inv.essential(), &[real(int(1))]);
        assert_eq!(inv.families()[0].value(0), real(ratio(1, 2)));
        assert!(inv.families()[0].tail().is_increasing());

        let z = PositiveDiagonalModel::new(vec![(int(0), Multiplicity::Finite(1))], vec![])
            .unwrap()
            .spectrum();
        assert_eq!(map_spectrum_inverse(&z), Err(SpectrumError::ZeroInSpectrum));
    }

    #[test]
    fn pseudoinverse_map_matches_model() {
        let m = PositiveDiagonalModel::new(vec![], vec![tail(1, Direction::FromBelow, 1)]).unwrap();
        let mapped = map_spectrum_pseudoinverse(&m.spectrum()).unwrap();
        assert_eq!(mapped, m.pseudoinverse().unwrap().spectrum());
        assert_eq!(map_spectrum_pseudoinverse(&mapped).unwrap(), m.spectrum());

        let compact =
            PositiveDiagonalModel::new(vec![], vec![tail(0, Direction::FromAbove, 1)]).unwrap();
        assert_eq!(
            map_spectrum_pseudoinverse(&compact.spectrum()),
            Err(SpectrumError::ZeroAccumulates)
        );
    }

    #[test]
    fn minimum_moduli() {
        let below =
            PositiveDiagonalModel::new(vec![], vec![tail(1, Direction::FromBelow, 1)]).unwrap();
        assert_eq!(min_modulus_from_spectrum(&below.spectrum()), int(0));
        let above =
            PositiveDiagonalModel::new(vec![], vec![tail(1, Direction::FromAbove, 1)]).unwrap();
        assert_eq!(min_modulus_from_spectrum(&above.spectrum()), int(1));
        let two = PositiveDiagonalModel::new(
            vec![],
            vec![
                tail(1, Direction::FromAbove, 1),
                tail(3, Direction::FromBelow, 1),
            ],
        )
        .unwrap();
        assert_eq!(essential_min_modulus(&two.spectrum()), Ok(int(1)));
        let finite =
            PositiveDiagonalModel::new(vec![(int(1), Multiplicity::Finite(2))], vec![]).unwrap();
        assert_eq!(
            essential_min_modulus(&finite.spectrum()),
            Err(SpectrumError::EmptyEssential)
        );
    }

    #[test]
    fn tail_term_hitting_an_essential_point_is_excluded() {
        // 1 + 1/n has 3/2 at n = 2; an infinite cell at 3/2 makes it essential
        let m = PositiveDiagonalModel::new(
            vec![(ratio(3, 2), Multiplicity::Infinite)],
            vec![tail(1, Direction::FromAbove, 1)],
        )
        .unwrap();
        let s = m.spectrum();
        assert_eq!(s.discrete_families()[0].excluded, vec![1]);
        assert_eq!(
            s.multiplicity_of(&real(ratio(3, 2))),
            Some(Multiplicity::Infinite)
        );
        assert_eq!(s.continuous(), &[real(int(1))]);
    }
}
