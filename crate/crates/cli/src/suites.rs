//! Seeded property suites with replayable counterexamples.

use std::collections::BTreeMap;
use std::thread;

use minmod_core::classify::{
    check_duality_am_an, classify_am_adjoint_transfer, classify_am_positive, classify_an_positive,
    spectral_decomposition_normal, AmReason, AmVerdict, Origin,
};
use minmod_core::exact::{Polar, Q};
use minmod_core::generate;
use minmod_core::multiplication::{classify_am_mult, classify_an_mult};
use minmod_core::operators::{FiniteMatrix, PositiveDiagonalModel};
use minmod_core::oracle::{
    check_hyponormal_from_paranormal_am, check_kernel_lemmas, check_moore_penrose,
    check_spectral_equalities, distance, is_hyponormal_fd, is_paranormal_fd, ParanormalConfig,
    ParanormalVerdict,
};
use minmod_core::spectra::{map_spectrum_pseudoinverse, HasSpectrum, Multiplicity};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::description::{Description, Model};

pub const SUITES: [&str; 9] = [
    "triples",
    "am-duality",
    "pseudoinverse-spectra",
    "moore-penrose",
    "gram-spectra",
    "spectral-decomposition",
    "multiplication",
    "paranormal",
    "restriction",
];

pub const RESTRICTION_SUBSPACES: usize = 50;
pub const MATRIX_MAX_DIM: usize = 12;
pub const MOORE_PENROSE_TOL: f64 = 1e-8;
pub const GRAM_TOL: f64 = 1e-9;
const PARANORMAL_TRIALS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}`; known suites: {known}", known = SUITES.join(", "))]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub message: String,
    pub description: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    /// Counts of the branches the generated inputs exercised.
    pub coverage: BTreeMap<String, u64>,
    pub counterexamples: Vec<Counterexample>,
}

impl SuiteOutcome {
    pub fn success(&self) -> bool {
        self.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("outcome serializes");
        text.push('\n');
        text
    }
}

/// Trial count matching the acceptance workload of each suite.
pub fn default_trials(name: &str) -> Option<usize> {
    Some(match name {
        "triples" | "am-duality" => 1000,
        "pseudoinverse-spectra" | "spectral-decomposition" | "multiplication" | "paranormal" => 500,
        "moore-penrose" | "gram-spectra" | "restriction" => 200,
        _ => return None,
    })
}

#[derive(Debug, Default)]
struct Trial {
    failures: Vec<(String, Value)>,
    coverage: Vec<String>,
}

impl Trial {
    fn check(&mut self, ok: bool, message: impl FnOnce() -> String, model: impl FnOnce() -> Model) {
        if !ok {
            self.failures
                .push((message(), Description::from_model(&model()).to_value()));
        }
    }

    fn tag(&mut self, tag: impl Into<String>) {
        self.coverage.push(tag.into());
    }
}

type TrialFn = fn(&mut ChaCha8Rng, usize) -> Trial;

fn trial_fn(name: &str) -> Option<TrialFn> {
    Some(match name {
        "triples" => triples,
        "am-duality" => am_duality,
        "pseudoinverse-spectra" => pseudoinverse_spectra,
        "moore-penrose" => moore_penrose,
        "gram-spectra" => gram_spectra,
        "spectral-decomposition" => spectral_decomposition,
        "multiplication" => multiplication,
        "paranormal" => paranormal,
        "restriction" => restriction,
        _ => return None,
    })
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `trials` seeded trials of a suite. Trials are spread over worker
/// threads; the outcome is assembled in trial order.
pub fn run_suite(name: &str, seed: u64, trials: usize) -> Result<SuiteOutcome, SuiteError> {
    let f = trial_fn(name).ok_or_else(|| SuiteError::Unknown(name.to_string()))?;
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(trials.max(1));
    let mut results: Vec<(usize, Trial)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..trials)
                        .step_by(workers)
                        .map(|t| (t, f(&mut trial_rng(seed, t), t)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("suite worker panicked"))
            .collect()
    });
    results.sort_by_key(|(t, _)| *t);
    let mut outcome = SuiteOutcome {
        suite: name.to_string(),
        seed,
        trials,
        passed: 0,
        failed: 0,
        coverage: BTreeMap::new(),
        counterexamples: Vec::new(),
    };
    for (t, trial) in results {
        for tag in trial.coverage {
            *outcome.coverage.entry(tag).or_default() += 1;
        }
        if trial.failures.is_empty() {
            outcome.passed += 1;
        } else {
            outcome.failed += 1;
            outcome
                .counterexamples
                .extend(
                    trial
                        .failures
                        .into_iter()
                        .map(|(message, description)| Counterexample {
                            trial: t,
                            message,
                            description,
                        }),
                );
        }
    }
    Ok(outcome)
}

fn triples(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let triple = generate::am_triple(rng);
    let c = classify_am_positive(&triple.model);
    let recovered = c.decomposition.as_ref().map(|d| d.beta.clone());
    out.check(
        c.verdict == AmVerdict::Am && recovered.as_ref() == Some(&triple.beta),
        || {
            format!(
                "expected AM with beta {}, got {} with beta {:?}",
                triple.beta, c.verdict, recovered
            )
        },
        || Model::Positive(triple.model.clone()),
    );
    if let Some(d) = &c.decomposition {
        out.check(
            d.recompose().spectrum() == triple.model.spectrum(),
            || "recomposed spectrum differs".into(),
            || Model::Positive(triple.model.clone()),
        );
    }
    out.tag(if triple.beta.is_zero() {
        "beta_zero"
    } else {
        "beta_positive"
    });
    let (model, reason) = generate::violated_triple(rng);
    let c = classify_am_positive(&model);
    out.check(
        c.verdict == AmVerdict::NotAm && c.reason == reason,
        || {
            format!(
                "expected NotAM ({reason}), got {} ({})",
                c.verdict, c.reason
            )
        },
        || Model::Positive(model.clone()),
    );
    out.tag(format!("violation_{reason}"));
    out
}

fn am_duality(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let mut out = Trial::default();
    // Alternate free models with constructed AM models so both verdicts occur.
    let model = if trial.is_multiple_of(2) {
        generate::positive_model(rng)
    } else {
        generate::am_triple(rng).model
    };
    let d = check_duality_am_an(&model);
    out.check(
        d.consistent,
        || {
            format!(
                "AM = {} but closed range = {} and AN(pinv) = {:?}",
                d.am, d.range_closed, d.an_of_pinv
            )
        },
        || Model::Positive(model.clone()),
    );
    out.tag(if d.range_closed {
        "closed_range"
    } else {
        "non_closed_range"
    });
    out.tag(format!("{}", d.am));
    if let Some(dec) = classify_am_positive(&model).decomposition {
        out.tag(if dec.beta.is_zero() {
            "beta_zero"
        } else {
            "beta_positive"
        });
    }
    out
}

fn pseudoinverse_spectra(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let model = generate::closed_range_model(rng);
    let spectrum = model.spectrum();
    let pinv = model.pseudoinverse().expect("closed range");
    let mapped = map_spectrum_pseudoinverse(&spectrum).expect("closed range");
    out.check(
        mapped == pinv.spectrum(),
        || "mapped spectrum differs from spectrum of pinv".into(),
        || Model::Positive(model.clone()),
    );
    let twice = map_spectrum_pseudoinverse(&mapped).expect("closed range");
    out.check(
        twice == spectrum,
        || "double application is not the identity".into(),
        || Model::Positive(model.clone()),
    );
    out.tag(if model.is_injective() {
        "injective"
    } else {
        "kernel"
    });
    out
}

fn random_matrix(rng: &mut ChaCha8Rng, square: bool) -> FiniteMatrix {
    let rows = rng.random_range(1..=MATRIX_MAX_DIM);
    let cols = if square {
        rows
    } else {
        rng.random_range(1..=MATRIX_MAX_DIM)
    };
    if rng.random_bool(0.5) {
        let rank = rng.random_range(0..=rows.min(cols));
        generate::low_rank_matrix(rng, rows, cols, rank)
    } else {
        generate::complex_matrix(rng, rows, cols)
    }
}

fn moore_penrose(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let a = random_matrix(rng, false);
    let report = check_moore_penrose(&a, MOORE_PENROSE_TOL);
    out.check(
        report.all_hold() && report.items.len() == 8,
        || {
            let bad: Vec<String> = report
                .items
                .iter()
                .filter(|c| !c.holds)
                .map(|c| format!("{} ({:e})", c.name, c.residual))
                .collect();
            format!("violated: {}", bad.join("; "))
        },
        || Model::Matrix(a.clone()),
    );
    out.tag(if a.is_square() {
        "square"
    } else {
        "rectangular"
    });
    out
}

fn gram_spectra(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let a = random_matrix(rng, true);
    match check_spectral_equalities(&a, GRAM_TOL) {
        Ok(r) => out.check(
            r.nonzero_match && r.full_match,
            || format!("gram spectra differ by {:e}", r.max_deviation),
            || Model::Matrix(a.clone()),
        ),
        Err(e) => out.check(false, || e.to_string(), || Model::Matrix(a.clone())),
    }
    let model = generate::shifted_model(rng);
    let transfer = classify_am_adjoint_transfer(&model);
    out.check(
        transfer.ess_equal,
        || "essential spectra of T*T and TT* differ".into(),
        || Model::Shifted(model.clone()),
    );
    let (tt, ttstar) = model.gram_pair();
    let zero = Polar::zero();
    let zero_mult = |m: &PositiveDiagonalModel| m.spectrum().multiplicity_of(&zero);
    let k = model.shift_order();
    let (smaller, larger) = match model.form() {
        minmod_core::operators::ShiftForm::Isometric => (&tt, &ttstar),
        minmod_core::operators::ShiftForm::CoIsometric => (&ttstar, &tt),
    };
    let expected = match (zero_mult(smaller), k) {
        (m, 0) => m,
        (None, k) => Some(Multiplicity::Finite(k)),
        (Some(m), k) => Some(m.add(Multiplicity::Finite(k))),
    };
    out.check(
        zero_mult(larger) == expected,
        || {
            format!(
                "zero multiplicity {:?}, expected {:?}",
                zero_mult(larger),
                expected
            )
        },
        || Model::Shifted(model.clone()),
    );
    out.tag(format!("shift_order_{k}"));
    out
}

fn spectral_decomposition(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let model = generate::normal_am_model(rng);
    let dump = || Model::Normal(model.clone());
    let d = match spectral_decomposition_normal(&model) {
        Ok(d) => d,
        Err(e) => {
            out.check(false, || e.to_string(), dump);
            return out;
        }
    };
    out.check(
        d.reconstruct().as_ref() == Ok(&model),
        || "reconstruction differs".into(),
        dump,
    );
    for block in d.blocks() {
        for member in &block.members {
            let modulus: Q = match &member.origin {
                Origin::Cell { cell, .. } => model.cells()[*cell].0.modulus().clone(),
                Origin::TailTerm { tail, step } => model.tails()[*tail].0.term(*step),
                Origin::Index(i) => model
                    .entry(*i)
                    .map(|v| v.modulus().clone())
                    .unwrap_or_else(Q::zero),
            };
            let unit =
                member.phase.re() * member.phase.re() + member.phase.im() * member.phase.im();
            out.check(
                modulus == block.beta && unit.is_one(),
                || format!("block {} holds a member of modulus {modulus}", block.beta),
                dump,
            );
        }
    }
    match d.truncate(8) {
        Ok(t) => {
            let err = distance(&t, &model.truncate(8));
            out.check(
                err == 0.0,
                || format!("8x8 reconstruction error {err:e}"),
                dump,
            );
        }
        Err(e) => out.check(false, || e.to_string(), dump),
    }
    out.tag(format!("blocks_{}", d.blocks().len().min(5)));
    out
}

fn multiplication(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let model = generate::measure_model(rng);
    let dump = || Model::Multiplication(model.clone());
    let diag = model.to_diagonal().expect("generated model is valid");
    out.check(
        model.min_modulus_mult() == diag.min_modulus(),
        || {
            format!(
                "m(M_f) = {} but m(diag) = {}",
                model.min_modulus_mult(),
                diag.min_modulus()
            )
        },
        dump,
    );
    let am = classify_am_mult(&model);
    let an = classify_an_mult(&model);
    out.check(
        am.verdict == classify_am_positive(&diag).verdict,
        || "AM verdicts disagree".into(),
        dump,
    );
    out.check(
        an.verdict == classify_an_positive(&diag).verdict,
        || "AN verdicts disagree".into(),
        dump,
    );
    out.check(
        model.is_min_attaining_mult().attained == diag.is_min_attaining().attained,
        || "attainment disagrees".into(),
        dump,
    );
    for (side, layers) in [("am", &am.layers), ("an", &an.layers)] {
        if let Some(ex) = &layers.exhaustion {
            out.check(
                ex.verify(&model, 64),
                || format!("{side} layers fail verification"),
                dump,
            );
        }
    }
    out.tag(format!("{}", am.verdict));
    out
}

fn normal_matrix(rng: &mut ChaCha8Rng, n: usize) -> FiniteMatrix {
    let u = generate::unitary(rng, n);
    let diag: Vec<Complex64> = (0..n).map(|_| generate::gaussian(rng)).collect();
    u.mul(&FiniteMatrix::from_diagonal(&diag)).mul(&u.adjoint())
}

fn shift(n: usize) -> FiniteMatrix {
    let mut s = FiniteMatrix::zeros(n, n);
    for i in 1..n {
        s.set(i, i - 1, Complex64::new(1.0, 0.0));
    }
    s
}

fn paranormal(rng: &mut ChaCha8Rng, trial: usize) -> Trial {
    let mut out = Trial::default();
    let config = ParanormalConfig {
        trials: PARANORMAL_TRIALS,
        seed: rng.random(),
        ..ParanormalConfig::default()
    };
    if trial == 0 {
        for n in 2..=6 {
            let s = shift(n);
            let ok = match is_paranormal_fd(&s, config) {
                Ok(ParanormalVerdict::FalsifiedBy(x)) => {
                    let ax = s.apply(&x);
                    let aax = s.apply(&ax);
                    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    norm(&ax).powi(2) > norm(&aax) + config.tol
                }
                _ => false,
            };
            out.check(
                ok,
                || format!("truncated {n}x{n} shift not falsified"),
                || Model::Matrix(s.clone()),
            );
        }
    }
    let n = rng.random_range(2..=6);
    let a = normal_matrix(rng, n);
    if is_hyponormal_fd(&a, 1e-9).unwrap_or(false) {
        let verdict = is_paranormal_fd(&a, config);
        out.check(
            matches!(verdict, Ok(ref v) if !v.is_falsified()),
            || "hyponormal matrix falsified as paranormal".into(),
            || Model::Matrix(a.clone()),
        );
        out.tag("hyponormal_sample");
    }
    let b = generate::perturbed_normal(rng, 4);
    match check_kernel_lemmas(&b, 1e-8, config) {
        Ok(report) => {
            if report.paranormal.holds() {
                out.tag("grid_certified");
                out.check(
                    report.kernel_of_square == Some(true),
                    || "N(T) != N(T^2)".into(),
                    || Model::Matrix(b.clone()),
                );
            }
        }
        Err(e) => out.check(false, || e.to_string(), || Model::Matrix(b.clone())),
    }
    let model = generate::normal_am_model(rng);
    match check_hyponormal_from_paranormal_am(&model, 1, 1e-9, rng.random()) {
        Ok(report) => {
            if report.candidates > 0 {
                out.tag("search_candidate");
            }
            out.check(
                report.passed(),
                || "paranormal kernel-symmetric sample is not hyponormal".into(),
                || {
                    report.failures.first().map_or_else(
                        || Model::Normal(model.clone()),
                        |f| Model::Matrix(f.clone()),
                    )
                },
            );
        }
        Err(e) => out.check(false, || e.to_string(), || Model::Normal(model.clone())),
    }
    out
}

fn restriction(rng: &mut ChaCha8Rng, _: usize) -> Trial {
    let mut out = Trial::default();
    let model = generate::am_triple(rng).model;
    for _ in 0..RESTRICTION_SUBSPACES {
        let sub = generate::coordinate_subspace(rng, model.layout());
        let attained = model.restrict(&sub).map(|r| r.is_min_attaining().attained);
        out.check(
            attained == Ok(true),
            || format!("restriction to {sub:?} does not attain"),
            || Model::Positive(model.clone()),
        );
    }
    let (bad, reason) = generate::violated_triple(rng);
    if reason == AmReason::InfinitelyManyEigenvaluesAboveMe {
        out.tag("witness_checked");
        let c = classify_am_positive(&bad);
        let fails = c
            .witness
            .as_ref()
            .and_then(|w| bad.restrict(w).ok())
            .is_some_and(|r| !r.is_min_attaining().attained);
        out.check(
            fails,
            || "witness subspace attains its minimum".into(),
            || Model::Positive(bad.clone()),
        );
    }
    out
}
