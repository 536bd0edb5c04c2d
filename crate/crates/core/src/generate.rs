//! Seeded random generators for models, matrices and subspaces.

use nalgebra::{DMatrix, QR};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::classify::AmReason;
use crate::exact::{int, ratio, Phase, Polar, Q};
use crate::multiplication::{CellKind, MeasureCell, MeasureSpaceModel, TailFamily};
use crate::operators::{
    CoordinateSubspace, Direction, FiniteMatrix, Layout, NormalDiagonalModel,
    PositiveDiagonalModel, ShiftedDiagonalModel, StreamSelection, Tail, TailRule,
};
use crate::spectra::Multiplicity;

/// Rational `n/d` with `d ∈ 1..=max_den` and value in `[lo, hi]`.
pub fn rational_in(rng: &mut impl Rng, lo: &Q, hi: &Q, max_den: i64) -> Q {
    let d = rng.random_range(1..=max_den);
    let lo_n = (lo * Q::from_integer(d.into())).ceil().to_integer();
    let hi_n = (hi * Q::from_integer(d.into())).floor().to_integer();
    if lo_n > hi_n {
        return lo.clone();
    }
    let span: i64 = (&hi_n - &lo_n).try_into().unwrap_or(i64::MAX);
    let pick = lo_n + rng.random_range(0..=span);
    Q::new(pick, d.into())
}

/// Unit phase with rational coordinates.
pub fn phase(rng: &mut impl Rng) -> Phase {
    match rng.random_range(0..6) {
        0 => Phase::one(),
        1 => Phase::minus_one(),
        2 => Phase::i(),
        3 => Phase::i().conj(),
        _ => {
            let a: i64 = rng.random_range(1..6);
            let b: i64 = rng.random_range(1..6);
            if a == b {
                return Phase::one();
            }
            let h = a * a + b * b;
            Phase::new(ratio(a * a - b * b, h), ratio(2 * a * b, h)).expect("Pythagorean triple")
        }
    }
}

fn signed_phase(rng: &mut impl Rng) -> Phase {
    let p = phase(rng);
    if rng.random_bool(0.5) {
        p.conj()
    } else {
        p
    }
}

/// Tail towards `limit` from the given side with all terms nonnegative.
pub fn tail_towards(rng: &mut impl Rng, limit: &Q, direction: Direction) -> Tail {
    let exponent = rng.random_range(1..=3);
    let start: u64 = rng.random_range(1..=4);
    let stride: u64 = rng.random_range(1..=2);
    let top = match direction {
        Direction::FromAbove => int(3),
        // first term limit − c·start^(-p) must stay nonnegative
        Direction::FromBelow => limit * crate::exact::pow_u64(start, exponent),
    };
    let coefficient = if top.is_zero() {
        Q::one()
    } else {
        let c = rational_in(rng, &ratio(1, 8), &top, 6);
        if c.is_zero() {
            top
        } else {
            c
        }
    };
    TailRule::with_stride(
        limit.clone(),
        direction,
        coefficient,
        exponent,
        start,
        stride,
    )
    .expect("generated tail is valid")
    .into()
}

/// A valid `βI − K + F` model with its `β`.
#[derive(Debug, Clone)]
pub struct AmTriple {
    pub beta: Q,
    pub model: PositiveDiagonalModel,
}

pub fn am_triple(rng: &mut impl Rng) -> AmTriple {
    let beta = if rng.random_bool(0.15) {
        Q::zero()
    } else {
        rational_in(rng, &ratio(1, 4), &int(4), 8)
    };
    let mut cells = Vec::new();
    let mut tails = Vec::new();
    if beta.is_zero() {
        cells.push((Q::zero(), Multiplicity::Infinite));
    } else {
        // compact part: finitely many entries in [0, β] plus tails decaying to 0
        for _ in 0..rng.random_range(0..4) {
            let k = rational_in(rng, &Q::zero(), &beta, 6);
            cells.push((&beta - k, Multiplicity::Finite(rng.random_range(1..=3))));
        }
        for _ in 0..rng.random_range(0..=2) {
            tails.push(tail_towards(rng, &beta, Direction::FromBelow));
        }
        if tails.is_empty() || rng.random_bool(0.3) {
            cells.push((beta.clone(), Multiplicity::Infinite));
        }
    }
    for _ in 0..rng.random_range(0..4) {
        let f = rational_in(rng, &ratio(1, 8), &int(3), 6);
        cells.push((&beta + f, Multiplicity::Finite(rng.random_range(1..=2))));
    }
    shuffle(rng, &mut cells);
    let model = PositiveDiagonalModel::new(cells, tails).expect("triple entries are nonnegative");
    AmTriple { beta, model }
}

fn shuffle<T>(rng: &mut impl Rng, v: &mut [T]) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// A triple broken on purpose, with the reason the classifier must report.
pub fn violated_triple(rng: &mut impl Rng) -> (PositiveDiagonalModel, AmReason) {
    let AmTriple { beta, model } = am_triple(rng);
    let mut cells = model.cells().to_vec();
    let mut tails = model.tails().to_vec();
    if rng.random_bool(0.5) {
        tails.push(tail_towards(rng, &beta, Direction::FromAbove));
        (
            PositiveDiagonalModel::new(cells, tails).expect("valid"),
            AmReason::InfinitelyManyEigenvaluesAboveMe,
        )
    } else {
        let other = loop {
            let v = rational_in(rng, &Q::zero(), &int(5), 8);
            if v != beta {
                break v;
            }
        };
        if rng.random_bool(0.5) {
            cells.push((other, Multiplicity::Infinite));
        } else {
            let dir = if other.is_zero() {
                Direction::FromAbove
            } else {
                Direction::FromBelow
            };
            tails.push(tail_towards(rng, &other, dir));
        }
        shuffle(rng, &mut cells);
        (
            PositiveDiagonalModel::new(cells, tails).expect("valid"),
            AmReason::EssentialSpectrumNotSingleton,
        )
    }
}

/// Arbitrary positive model; limits include 0 so the range may fail to be closed.
pub fn positive_model(rng: &mut impl Rng) -> PositiveDiagonalModel {
    if rng.random_bool(0.4) {
        return am_triple(rng).model;
    }
    let mut cells = Vec::new();
    for _ in 0..rng.random_range(0..4) {
        let v = if rng.random_bool(0.2) {
            Q::zero()
        } else {
            rational_in(rng, &Q::zero(), &int(4), 6)
        };
        let m = if rng.random_bool(0.25) {
            Multiplicity::Infinite
        } else {
            Multiplicity::Finite(rng.random_range(1..=3))
        };
        cells.push((v, m));
    }
    let mut tails = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let limit = if rng.random_bool(0.25) {
            Q::zero()
        } else {
            rational_in(rng, &ratio(1, 4), &int(4), 6)
        };
        let dir = if limit.is_zero() || rng.random_bool(0.5) {
            Direction::FromAbove
        } else {
            Direction::FromBelow
        };
        tails.push(tail_towards(rng, &limit, dir));
    }
    if tails.is_empty() && cells.iter().all(|(_, m)| !m.is_infinite()) {
        cells.push((
            rational_in(rng, &Q::zero(), &int(3), 4),
            Multiplicity::Infinite,
        ));
    }
    PositiveDiagonalModel::new(cells, tails).expect("generated entries are nonnegative")
}

/// Positive model with closed range (no tail tends to 0).
pub fn closed_range_model(rng: &mut impl Rng) -> PositiveDiagonalModel {
    loop {
        let m = positive_model(rng);
        if m.has_closed_range() {
            return m;
        }
    }
}

/// Normal diagonal model whose modulus is an AM triple.
pub fn normal_am_model(rng: &mut impl Rng) -> NormalDiagonalModel {
    let abs = am_triple(rng).model;
    let cells = abs
        .cells()
        .iter()
        .map(|(v, m)| (Polar::new(v.clone(), signed_phase(rng)), *m))
        .collect();
    let tails = abs
        .tails()
        .iter()
        .map(|t| (t.clone(), signed_phase(rng)))
        .collect();
    NormalDiagonalModel::new(cells, tails).expect("moduli are nonnegative")
}

pub fn shifted_model(rng: &mut impl Rng) -> ShiftedDiagonalModel {
    ShiftedDiagonalModel::new(rng.random_range(0..=3), positive_model(rng))
}

/// Measure-space model; about half are AM by construction.
pub fn measure_model(rng: &mut impl Rng) -> MeasureSpaceModel {
    let diag = if rng.random_bool(0.5) {
        am_triple(rng).model
    } else {
        positive_model(rng)
    };
    let mut cells = Vec::new();
    for (k, (v, m)) in diag.cells().iter().enumerate() {
        let weight = rational_in(rng, &ratio(1, 4), &int(5), 4);
        let symbol = Polar::new(v.clone(), signed_phase(rng));
        match m {
            Multiplicity::Infinite => cells.push(MeasureCell {
                label: format!("d{k}"),
                kind: CellKind::Diffuse,
                weight,
                symbol,
            }),
            Multiplicity::Finite(count) => {
                for a in 0..*count {
                    cells.push(MeasureCell {
                        label: format!("a{k}.{a}"),
                        kind: CellKind::Atom,
                        weight: weight.clone(),
                        symbol: symbol.clone(),
                    });
                }
            }
        }
    }
    shuffle(rng, &mut cells);
    let tails = diag
        .tails()
        .iter()
        .map(|t| TailFamily {
            modulus: t.clone(),
            phase: signed_phase(rng),
        })
        .collect();
    MeasureSpaceModel::new(cells, tails).expect("weights positive, moduli nonnegative")
}

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Matrix with independent standard complex Gaussian entries.
pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> FiniteMatrix {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng)).into()
}

/// Product of Gaussian factors, so the rank is `rank` almost surely.
pub fn low_rank_matrix(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize) -> FiniteMatrix {
    complex_matrix(rng, rows, rank).mul(&complex_matrix(rng, rank, cols))
}

/// Haar-like unitary from the QR factor of a Gaussian matrix.
pub fn unitary(rng: &mut impl Rng, n: usize) -> FiniteMatrix {
    let g = complex_matrix(rng, n, n).into_dmatrix();
    QR::new(g).q().into()
}

/// `U(D + εE)U*` with `D` diagonal (possibly singular), `E` Gaussian and
/// `U` unitary; `ε = 0` for about a third of the samples.
pub fn perturbed_normal(rng: &mut impl Rng, n: usize) -> FiniteMatrix {
    let diag: Vec<Complex64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                Complex64::zero()
            } else {
                gaussian(rng)
            }
        })
        .collect();
    let mut core = FiniteMatrix::from_diagonal(&diag);
    if !rng.random_bool(0.35) {
        let eps = rng.random_range(0.05..0.5);
        core = core.add(&complex_matrix(rng, n, n).scale(eps));
    }
    let u = unitary(rng, n);
    u.mul(&core).mul(&u.adjoint())
}

/// Random coordinate subspace of a model's canonical basis; never empty.
pub fn coordinate_subspace(rng: &mut impl Rng, layout: &Layout) -> CoordinateSubspace {
    let finite: Vec<u64> = (0..layout.finite_total())
        .filter(|_| rng.random_bool(0.5))
        .collect();
    let streams: Vec<StreamSelection> = layout
        .streams()
        .iter()
        .map(|_| match rng.random_range(0..4) {
            0 => StreamSelection::Empty,
            1 => StreamSelection::All,
            2 => StreamSelection::Progression {
                offset: rng.random_range(0..5),
                step: rng.random_range(1..4),
            },
            _ => {
                let mut steps: Vec<u64> = (0..rng.random_range(1..5))
                    .map(|_| rng.random_range(0..20))
                    .collect();
                steps.sort_unstable();
                steps.dedup();
                StreamSelection::Steps(steps)
            }
        })
        .collect();
    let mut sub = CoordinateSubspace { finite, streams };
    if sub.is_empty() {
        if layout.finite_total() > 0 {
            sub.finite.push(0);
        } else if let Some(first) = sub.streams.first_mut() {
            *first = StreamSelection::All;
        }
    }
    sub
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify_am_positive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triples_classify_as_am() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = am_triple(&mut rng);
            let c = classify_am_positive(&t.model);
            assert!(c.is_am(), "{:?}", t.model);
            assert_eq!(c.decomposition.unwrap().beta, t.beta);
        }
    }

    #[test]
    fn violations_are_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let (m, reason) = violated_triple(&mut rng);
            assert_eq!(classify_am_positive(&m).reason, reason, "{m:?}");
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = unitary(&mut rng, 5);
        let id = FiniteMatrix::identity(5);
        assert!(u.adjoint().mul(&u).sub(&id).frobenius_norm() < 1e-12);
    }

    #[test]
    fn rationals_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let q = rational_in(&mut rng, &ratio(1, 3), &int(2), 7);
            assert!(q >= ratio(1, 3) && q <= int(2));
        }
    }
}
