use minmod_core::classify::{
    check_duality_am_an, classify_am_normal, classify_am_positive, classify_an_positive,
    spectral_decomposition_normal, AmReason, AmVerdict,
};
use minmod_core::exact::{to_f64, Polar, Q};
use minmod_core::generate;
use minmod_core::multiplication::{
    classify_am_mult, classify_an_mult, MeasureCell, MeasureSpaceModel,
};
use minmod_core::operators::{
    CoordinateSubspace, NormalDiagonalModel, PositiveDiagonalModel, StreamSelection, StreamSource,
};
use minmod_core::oracle::{
    check_spectral_equalities, is_hyponormal_fd, is_paranormal_fd, min_modulus_fd,
    pseudoinverse_fd, relative_residual, ParanormalConfig,
};
use minmod_core::spectra::{
    map_spectrum_inverse, map_spectrum_pseudoinverse, min_modulus_from_spectrum,
    spectrum_of_direct_sum, HasSpectrum, Multiplicity, SpectrumReport,
};
use num_complex::Complex64;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ENUMERATION_DEPTH: u64 = 10_000;
const FAR_STEP: u64 = 1_000_000_000_000_000;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn near(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

/// Values of the first entries, and the entries far down every stream.
fn brute_values(model: &NormalDiagonalModel) -> (Vec<Polar>, Vec<Complex64>) {
    let layout = model.layout();
    let head = model.entries(ENUMERATION_DEPTH);
    let far = (0..layout.streams().len())
        .map(|s| {
            model
                .entry(layout.stream_index(s, FAR_STEP))
                .expect("stream entry")
                .to_complex()
        })
        .collect();
    (head, far)
}

fn check_against_enumeration(model: &NormalDiagonalModel) -> Result<(), TestCaseError> {
    let report = model.spectrum();
    let (head, far) = brute_values(model);
    let essential: Vec<Complex64> = report.essential().iter().map(Polar::to_complex).collect();
    for e in &essential {
        prop_assert!(
            far.iter().any(|f| near(*e, *f, 1e-12)),
            "essential {e} is not a limit"
        );
    }
    for f in &far {
        prop_assert!(
            essential.iter().any(|e| near(*e, *f, 1e-12)),
            "limit {f} missing from essential set"
        );
    }
    for (v, _) in report.discrete() {
        prop_assert!(head.contains(v), "discrete {v:?} never enumerated");
    }
    for exact in head {
        let h = exact.to_complex();
        prop_assert!(report.contains(&exact));
        let isolated = report.discrete().iter().any(|(v, _)| *v == exact)
            || report.discrete_families().iter().any(|d| {
                let family = &report.families()[d.family];
                family
                    .position_of(&exact)
                    .is_some_and(|j| !d.excluded.contains(&j))
            });
        if report.is_essential(&exact) {
            prop_assert!(!isolated, "essential entry {} listed as isolated", h);
        } else if !essential.iter().any(|e| near(*e, h, 1e-12)) {
            prop_assert!(
                isolated,
                "entry {} away from the essential set is not isolated",
                h
            );
        }
    }
    Ok(())
}

fn closed_range_report(seed: u64) -> SpectrumReport {
    generate::closed_range_model(&mut rng(seed)).spectrum()
}

fn same_multiset(a: &SpectrumReport, b: &SpectrumReport) -> bool {
    a.point() == b.point() && a.families() == b.families() && a.essential() == b.essential()
}

fn nonzero_restriction(model: &PositiveDiagonalModel) -> CoordinateSubspace {
    let layout = model.layout();
    let finite = layout
        .finite_runs()
        .iter()
        .filter(|(cell, _, _)| !model.cells()[*cell].0.is_zero())
        .flat_map(|&(_, start, len)| start..start + len)
        .collect();
    let streams = layout
        .streams()
        .iter()
        .map(|s| match s {
            StreamSource::Cell(c) if model.cells()[*c].0.is_zero() => StreamSelection::Empty,
            _ => StreamSelection::All,
        })
        .collect();
    CoordinateSubspace { finite, streams }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectrum_matches_enumeration_positive(seed in any::<u64>()) {
        check_against_enumeration(&generate::positive_model(&mut rng(seed)).as_normal())?;
    }

    #[test]
    fn spectrum_matches_enumeration_normal(seed in any::<u64>()) {
        check_against_enumeration(&generate::normal_am_model(&mut rng(seed)))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pseudoinverse_map_is_an_involution(seed in any::<u64>()) {
        let report = closed_range_report(seed);
        let once = map_spectrum_pseudoinverse(&report).unwrap();
        prop_assert_eq!(map_spectrum_pseudoinverse(&once).unwrap(), report);
    }

    #[test]
    fn inverse_map_agrees_off_zero(seed in any::<u64>()) {
        let report = closed_range_report(seed);
        if !report.contains(&Polar::zero()) {
            prop_assert_eq!(map_spectrum_inverse(&report).unwrap(), map_spectrum_pseudoinverse(&report).unwrap());
        } else {
            prop_assert!(map_spectrum_inverse(&report).is_err());
        }
    }

    #[test]
    fn direct_sum_is_commutative_and_associative(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (x, y, z) = (
            generate::positive_model(&mut rng(a)).spectrum(),
            generate::positive_model(&mut rng(b)).spectrum(),
            generate::positive_model(&mut rng(c)).spectrum(),
        );
        prop_assert!(same_multiset(&spectrum_of_direct_sum(&x, &y), &spectrum_of_direct_sum(&y, &x)));
        let left = spectrum_of_direct_sum(&spectrum_of_direct_sum(&x, &y), &z);
        let right = spectrum_of_direct_sum(&x, &spectrum_of_direct_sum(&y, &z));
        prop_assert!(same_multiset(&left, &right));
    }

    #[test]
    fn continuous_and_infinite_points_are_essential(seed in any::<u64>()) {
        let report = generate::positive_model(&mut rng(seed)).spectrum();
        prop_assert!(report.continuous().iter().all(|v| report.is_essential(v)));
        prop_assert!(report.point().iter().filter(|(_, m)| m.is_infinite()).all(|(v, _)| report.is_essential(v)));
    }

    #[test]
    fn truncated_pseudoinverse_matches_matrix_pseudoinverse(seed in any::<u64>(), n in 1u64..40) {
        let model = generate::positive_model(&mut rng(seed));
        if let Ok(pinv) = model.pseudoinverse() {
            let exact = pinv.truncate(n);
            let numeric = pseudoinverse_fd(&model.truncate(n), None);
            let scale = exact.max_abs().max(1.0);
            prop_assert!(exact.sub(&numeric).max_abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn min_modulus_is_below_norm(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = generate::positive_model(&mut r);
        prop_assert!(p.min_modulus() <= p.operator_norm());
        let n = generate::normal_am_model(&mut r);
        prop_assert!(n.min_modulus() <= n.operator_norm());
        let s = generate::shifted_model(&mut r);
        prop_assert!(s.min_modulus() <= s.operator_norm());
        prop_assert!(s.adjoint().min_modulus() <= s.adjoint().operator_norm());
    }

    #[test]
    fn min_modulus_is_the_least_spectral_value(seed in any::<u64>()) {
        let model = generate::positive_model(&mut rng(seed));
        prop_assert_eq!(model.min_modulus(), min_modulus_from_spectrum(&model.spectrum()));
    }

    #[test]
    fn gram_pair_differs_by_the_shift_kernel(seed in any::<u64>()) {
        let model = generate::shifted_model(&mut rng(seed));
        let (tt, ttstar) = model.gram_pair();
        let k = model.shift_order();
        let zero = Polar::zero();
        let zero_mult = |m: &PositiveDiagonalModel| m.spectrum().multiplicity_of(&zero);
        let expected = match (zero_mult(&tt), k) {
            (m, 0) => m,
            (None, k) => Some(Multiplicity::Finite(k)),
            (Some(m), k) => Some(m.add(Multiplicity::Finite(k))),
        };
        prop_assert_eq!(zero_mult(&ttstar), expected);
        if k == 0 {
            prop_assert_eq!(&tt, &ttstar);
        }
        let strip = |m: &PositiveDiagonalModel| -> Vec<(Polar, Multiplicity)> {
            m.spectrum().point().iter().filter(|(v, _)| !v.is_zero()).cloned().collect()
        };
        prop_assert_eq!(strip(&tt), strip(&ttstar));
        prop_assert_eq!(tt.spectrum().families().to_vec(), ttstar.spectrum().families().to_vec());
    }

    #[test]
    fn positive_min_modulus_iff_injective_with_closed_range(seed in any::<u64>()) {
        let model = generate::positive_model(&mut rng(seed));
        let zero_entry = model.cells().iter().any(|(v, _)| v.is_zero())
            || model.tails().iter().any(|t| t.position_of(&Q::zero()).is_some());
        let zero_accumulates = model.tails().iter().any(|t| t.limit().is_zero())
            || model.cells().iter().any(|(v, m)| v.is_zero() && m.is_infinite());
        prop_assert_eq!(model.min_modulus() > Q::zero(), !zero_entry && !zero_accumulates);
    }

    #[test]
    fn triples_round_trip(seed in any::<u64>()) {
        let triple = generate::am_triple(&mut rng(seed));
        let c = classify_am_positive(&triple.model);
        prop_assert_eq!(c.verdict, AmVerdict::Am);
        let d = c.decomposition.unwrap();
        prop_assert_eq!(&d.beta, &triple.beta);
        prop_assert_eq!(d.recompose().spectrum(), triple.model.spectrum());
    }

    #[test]
    fn violations_report_their_reason(seed in any::<u64>()) {
        let (model, reason) = generate::violated_triple(&mut rng(seed));
        let c = classify_am_positive(&model);
        prop_assert_eq!(c.verdict, AmVerdict::NotAm);
        prop_assert_eq!(c.reason, reason);
    }

    #[test]
    fn am_models_attain_on_every_coordinate_subspace(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = generate::am_triple(&mut r).model;
        prop_assert!(model.is_min_attaining().attained);
        for _ in 0..8 {
            let sub = generate::coordinate_subspace(&mut r, model.layout());
            let restricted = model.restrict(&sub).unwrap();
            prop_assert!(restricted.is_min_attaining().attained, "{:?}", sub);
        }
    }

    #[test]
    fn witness_subspace_fails_attainment(seed in any::<u64>()) {
        let (model, reason) = generate::violated_triple(&mut rng(seed));
        let c = classify_am_positive(&model);
        if reason == AmReason::InfinitelyManyEigenvaluesAboveMe {
            let restricted = model.restrict(&c.witness.expect("witness emitted")).unwrap();
            prop_assert!(!restricted.is_min_attaining().attained);
        }
    }

    #[test]
    fn duality_is_consistent(seed in any::<u64>()) {
        let model = generate::positive_model(&mut rng(seed));
        prop_assert!(check_duality_am_an(&model).consistent);
    }

    #[test]
    fn am_implies_closed_range(seed in any::<u64>()) {
        let model = generate::positive_model(&mut rng(seed));
        if classify_am_positive(&model).is_am() {
            prop_assert!(model.has_closed_range());
        }
    }

    #[test]
    fn kernel_only_adds_zero_to_essential_spectrum(seed in any::<u64>(), k in 1u64..4) {
        let base = generate::positive_model(&mut rng(seed)).with_zero_padding(k);
        let inner = base.restrict(&nonzero_restriction(&base)).unwrap();
        let full = base.spectrum();
        let part = inner.spectrum();
        prop_assert!(part.essential().iter().all(|v| full.is_essential(v)));
        prop_assert!(full.essential().iter().all(|v| v.is_zero() || part.is_essential(v)));
    }

    #[test]
    fn spectral_decomposition_round_trip(seed in any::<u64>()) {
        let model = generate::normal_am_model(&mut rng(seed));
        let d = spectral_decomposition_normal(&model).unwrap();
        prop_assert_eq!(d.reconstruct().unwrap(), model);
    }

    #[test]
    fn normal_min_modulus_is_adjoint_invariant(seed in any::<u64>()) {
        let model = generate::normal_am_model(&mut rng(seed));
        prop_assert_eq!(model.min_modulus(), model.adjoint().min_modulus());
        prop_assert_eq!(classify_am_normal(&model).verdict, classify_am_normal(&model.adjoint()).verdict);
    }

    #[test]
    fn multiplication_agrees_with_diagonal(seed in any::<u64>()) {
        let model = generate::measure_model(&mut rng(seed));
        let diag = model.to_diagonal().unwrap();
        prop_assert_eq!(classify_am_mult(&model).verdict, classify_am_positive(&diag).verdict);
        prop_assert_eq!(classify_an_mult(&model).verdict, classify_an_positive(&diag).verdict);
        prop_assert_eq!(model.min_modulus_mult(), diag.min_modulus());
        prop_assert_eq!(model.is_min_attaining_mult().attained, diag.is_min_attaining().attained);
    }

    #[test]
    fn exhaustion_layers_verify(seed in any::<u64>()) {
        let model = generate::measure_model(&mut rng(seed));
        for layers in [classify_am_mult(&model).layers, classify_an_mult(&model).layers] {
            if let Some(ex) = layers.exhaustion {
                prop_assert!(ex.verify(&model, 64));
            }
        }
    }

    #[test]
    fn essential_bounds_ignore_phases(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = generate::measure_model(&mut r);
        prop_assert!(model.ess_inf() <= model.ess_sup());
        let cells: Vec<MeasureCell> = model
            .cells()
            .iter()
            .map(|c| MeasureCell { symbol: Polar::new(c.symbol.modulus().clone(), generate::phase(&mut r)), ..c.clone() })
            .collect();
        let rotated = MeasureSpaceModel::new(cells, model.tail_families().to_vec()).unwrap();
        prop_assert_eq!(rotated.ess_inf(), model.ess_inf());
        prop_assert_eq!(rotated.ess_sup(), model.ess_sup());
    }

    #[test]
    fn truncated_minimum_converges(seed in any::<u64>(), n in 1u64..200) {
        let model = generate::positive_model(&mut rng(seed));
        let m = to_f64(&model.min_modulus());
        let sigma = min_modulus_fd(&model.truncate(n));
        let layout = model.layout();
        let deviation = model
            .tails()
            .iter()
            .enumerate()
            .map(|(t, tail)| {
                let s = layout.stream_of(StreamSource::Tail(t)).unwrap();
                let mut included = 0;
                while layout.stream_index(s, included) < n {
                    included += 1;
                }
                to_f64(&(tail.term(included.saturating_sub(1)) - tail.inf()))
            })
            .fold(0.0, f64::max);
        let tol = 1e-12 * to_f64(&model.operator_norm()).max(1.0);
        prop_assert!(sigma >= m - tol);
        if n > layout.finite_total() + layout.streams().len() as u64 {
            prop_assert!(sigma - m <= deviation + tol, "sigma {} m {} dev {}", sigma, m, deviation);
        }
    }

    #[test]
    fn matrix_and_adjoint_share_minimum_modulus(seed in any::<u64>(), n in 1usize..12) {
        let a = generate::complex_matrix(&mut rng(seed), n, n);
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!((min_modulus_fd(&a) - min_modulus_fd(&a.adjoint())).abs() <= 1e-10 * scale);
    }

    #[test]
    fn double_pseudoinverse_is_identity(seed in any::<u64>(), rows in 1usize..10, cols in 1usize..10) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=rows.min(cols));
        let a = generate::low_rank_matrix(&mut r, rows, cols, rank);
        let back = pseudoinverse_fd(&pseudoinverse_fd(&a, None), None);
        prop_assert!(relative_residual(&back, &a) <= 1e-8);
    }

    #[test]
    fn full_gram_spectra_agree_on_square_matrices(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let rank = r.random_range(0..=n);
        let a = if rank == 0 { generate::complex_matrix(&mut r, n, n) } else { generate::low_rank_matrix(&mut r, n, n, rank) };
        let report = check_spectral_equalities(&a, 1e-9).unwrap();
        prop_assert!(report.nonzero_match && report.full_match, "{:?}", report);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyponormal_matrices_are_not_falsified(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let a = if r.random_bool(0.5) {
            generate::perturbed_normal(&mut r, n)
        } else {
            generate::complex_matrix(&mut r, n, n)
        };
        if is_hyponormal_fd(&a, 1e-9).unwrap() {
            let config = ParanormalConfig { trials: 200, seed, ..ParanormalConfig::default() };
            prop_assert!(!is_paranormal_fd(&a, config).unwrap().is_falsified());
        }
    }
}
