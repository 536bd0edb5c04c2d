//! Classification pipeline: description in, deterministic report out.

use std::time::Instant;

use minmod_core::classify::{
    check_duality_am_an, classify_am_adjoint_transfer, classify_am_normal, classify_am_positive,
    classify_an_positive, spectral_decomposition_normal, AMClassification, AmDecomposition,
    AmVerdict, AnClassification, Origin,
};
use minmod_core::exact::{snap_f64, to_f64, Polar, Q};
use minmod_core::multiplication::{classify_am_mult, classify_an_mult, MeasureSpaceModel, Piece};
use minmod_core::operators::{
    CoordinateSubspace, FiniteMatrix, Layout, NormalDiagonalModel, PositiveDiagonalModel,
    ShiftForm, ShiftedDiagonalModel, StreamSelection,
};
use minmod_core::oracle::{
    check_kernel_lemmas, check_moore_penrose, check_spectral_equalities, hermitian_eigen,
    is_hyponormal_fd, is_normal_fd, is_paranormal_fd, svd, ParanormalConfig, ParanormalVerdict,
};
use minmod_core::spectra::{essential_min_modulus, HasSpectrum, Multiplicity, SpectrumReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::description::{
    spec_from_tail, Description, DescriptionError, Model, Mult, Scalar, TailSpec, SCHEMA_VERSION,
};

pub const DEFAULT_TRUNCATION: u64 = 512;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DISCRETE_LIST_LIMIT: usize = 50;
const WITNESS_INDEX_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub truncation: u64,
    pub tolerance: f64,
    pub emit_witness: bool,
    pub timing: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            truncation: DEFAULT_TRUNCATION,
            tolerance: DEFAULT_TOLERANCE,
            emit_witness: false,
            timing: false,
        }
    }
}

/// Exact value with its nearest float.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Number {
    pub exact: String,
    pub approx: f64,
}

impl Number {
    fn of(q: &Q) -> Self {
        Self {
            exact: q.to_string(),
            approx: to_f64(q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub value: Scalar,
    pub multiplicity: Mult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    /// `operator` for normal inputs, `modulus` when the summary is of `|T|`.
    pub of: &'static str,
    pub essential: Vec<Scalar>,
    pub continuous: Vec<Scalar>,
    pub discrete: Vec<SpectralPoint>,
    pub discrete_truncated: bool,
    pub tails: Vec<TailSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attainment {
    pub attained: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub verdict: String,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub beta: Number,
    pub compact_norm: Number,
    pub compact_cells: Vec<SpectralPoint>,
    pub compact_tails: Vec<TailSpec>,
    pub finite_entries: Vec<SpectralPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualitySummary {
    pub am: String,
    pub range_closed: bool,
    pub an_of_pseudoinverse: Option<String>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoinverseSummary {
    pub bounded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationSummary {
    pub size: u64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_modulus_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub schema_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_modulus: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub essential_min_modulus: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_attaining: Option<Attainment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub am: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub an: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_blocks: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualitySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudoinverse: Option<PseudoinverseSummary>,
    pub truncation: TruncationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjoint_transfer: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct_sum: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplication: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_checks: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<Value>,
}

impl ClassificationReport {
    fn empty(name: Option<String>, kind: &'static str, truncation: TruncationSummary) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name,
            kind,
            min_modulus: None,
            essential_min_modulus: None,
            norm: None,
            spectrum: None,
            min_attaining: None,
            am: None,
            an: None,
            decomposition: None,
            spectral_blocks: None,
            duality: None,
            pseudoinverse: None,
            truncation,
            adjoint_transfer: None,
            direct_sum: None,
            multiplication: None,
            matrix_checks: None,
            timing_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

fn points(cells: &[(Polar, Multiplicity)]) -> Vec<SpectralPoint> {
    cells
        .iter()
        .map(|(v, m)| SpectralPoint {
            value: Scalar::from_polar(v),
            multiplicity: Mult(*m),
        })
        .collect()
}

fn real_points(cells: &[(Q, Multiplicity)]) -> Vec<SpectralPoint> {
    cells
        .iter()
        .map(|(v, m)| SpectralPoint {
            value: Scalar::real(v.clone()),
            multiplicity: Mult(*m),
        })
        .collect()
}

fn summarize_spectrum(report: &SpectrumReport, of: &'static str) -> SpectrumSummary {
    let mut discrete = points(report.discrete());
    // Round-robin over the isolated values of each family.
    let mut cursors: Vec<(usize, u64)> = report
        .discrete_families()
        .iter()
        .map(|d| (d.family, 0))
        .collect();
    let mut truncated = discrete.len() > DISCRETE_LIST_LIMIT;
    discrete.truncate(DISCRETE_LIST_LIMIT);
    'fill: while !cursors.is_empty() {
        for (k, (family, step)) in cursors.iter_mut().enumerate() {
            let excluded = &report.discrete_families()[k].excluded;
            while excluded.binary_search(step).is_ok() {
                *step += 1;
            }
            if discrete.len() == DISCRETE_LIST_LIMIT {
                truncated = true;
                break 'fill;
            }
            let value = report.families()[*family].value(*step);
            discrete.push(SpectralPoint {
                value: Scalar::from_polar(&value),
                multiplicity: Mult(Multiplicity::Finite(1)),
            });
            *step += 1;
        }
    }
    SpectrumSummary {
        of,
        essential: report.essential().iter().map(Scalar::from_polar).collect(),
        continuous: report.continuous().iter().map(Scalar::from_polar).collect(),
        discrete,
        discrete_truncated: truncated,
        tails: report
            .families()
            .iter()
            .map(|f| spec_from_tail(f.tail(), (!f.phase().is_one()).then_some(f.phase())))
            .collect(),
    }
}

fn subspace_value(sub: &CoordinateSubspace, layout: &Layout) -> Value {
    let streams: Vec<Value> = sub
        .streams
        .iter()
        .map(|s| match s {
            StreamSelection::Empty => json!("empty"),
            StreamSelection::All => json!("all"),
            StreamSelection::Progression { offset, step } => {
                json!({"offset": offset, "step": step})
            }
            StreamSelection::Steps(steps) => json!({"steps": steps}),
        })
        .collect();
    json!({
        "finite": sub.finite,
        "streams": streams,
        "first_indices": sub.indices(layout, WITNESS_INDEX_LIMIT),
    })
}

fn am_verdict(c: &AMClassification, layout: &Layout, emit_witness: bool) -> Verdict {
    Verdict {
        verdict: c.verdict.to_string(),
        reason: c.reason.to_string(),
        witness: if emit_witness {
            c.witness.as_ref().map(|w| subspace_value(w, layout))
        } else {
            None
        },
    }
}

fn an_verdict(c: &AnClassification) -> Verdict {
    Verdict {
        verdict: c.verdict.to_string(),
        reason: c.reason.to_string(),
        witness: None,
    }
}

fn decomposition(d: &AmDecomposition) -> DecompositionSummary {
    DecompositionSummary {
        beta: Number::of(&d.beta),
        compact_norm: Number::of(&d.compact_part.operator_norm()),
        compact_cells: real_points(d.compact_part.cells()),
        compact_tails: d
            .compact_part
            .tails()
            .iter()
            .map(|t| spec_from_tail(t, None))
            .collect(),
        finite_entries: real_points(d.finite_part.cells()),
    }
}

fn truncation_of(m: &FiniteMatrix, size: u64, exact_min: Option<&Q>) -> TruncationSummary {
    let s = svd(m);
    let sigma_min = s.singular_values.first().copied().unwrap_or(0.0);
    TruncationSummary {
        size,
        sigma_min,
        sigma_max: s.max(),
        min_modulus_gap: exact_min.map(|q| sigma_min - to_f64(q)),
    }
}

fn pinv_summary<T>(
    result: Result<T, impl std::fmt::Display>,
    norm: impl Fn(&T) -> Q,
) -> PseudoinverseSummary {
    match result {
        Ok(p) => PseudoinverseSummary {
            bounded: true,
            norm: Some(Number::of(&norm(&p))),
            error: None,
        },
        Err(e) => PseudoinverseSummary {
            bounded: false,
            norm: None,
            error: Some(e.to_string()),
        },
    }
}

fn essential_min(report: &SpectrumReport) -> Option<Number> {
    essential_min_modulus(report).ok().map(|q| Number::of(&q))
}

/// Fields shared by every diagonal-type input, computed from `|T|`.
fn fill_positive(
    report: &mut ClassificationReport,
    modulus: &PositiveDiagonalModel,
    opts: &PipelineOptions,
) {
    let am = classify_am_positive(modulus);
    report.am = Some(am_verdict(&am, modulus.layout(), opts.emit_witness));
    report.an = Some(an_verdict(&classify_an_positive(modulus)));
    report.decomposition = am.decomposition.as_ref().map(decomposition);
    let d = check_duality_am_an(modulus);
    report.duality = Some(DualitySummary {
        am: d.am.to_string(),
        range_closed: d.range_closed,
        an_of_pseudoinverse: d.an_of_pinv.map(|v| v.to_string()),
        consistent: d.consistent,
    });
}

fn normal_report(
    model: &NormalDiagonalModel,
    report: &mut ClassificationReport,
    opts: &PipelineOptions,
) {
    let spectrum = model.spectrum();
    let attain = model.min_attainment();
    report.min_modulus = Some(Number::of(&attain.min_modulus));
    report.essential_min_modulus = essential_min(&spectrum);
    report.norm = Some(Number::of(&model.operator_norm()));
    report.spectrum = Some(summarize_spectrum(&spectrum, "operator"));
    report.min_attaining = Some(Attainment {
        attained: attain.attained,
        witness: attain.witness.map(|i| json!(i)),
    });
    let modulus = model.modulus();
    fill_positive(report, &modulus, opts);
    let am = classify_am_normal(model);
    report.am = Some(am_verdict(&am, model.layout(), opts.emit_witness));
    report.pseudoinverse = Some(pinv_summary(model.pseudoinverse(), |p| p.operator_norm()));
}

fn origin_value(origin: &Origin) -> Value {
    match origin {
        Origin::Cell { cell, multiplicity } => {
            json!({"cell": cell, "multiplicity": serde_json::to_value(Mult(*multiplicity)).expect("multiplicity")})
        }
        Origin::TailTerm { tail, step } => json!({"tail": tail, "step": step}),
        Origin::Index(i) => json!({"index": i}),
    }
}

fn spectral_blocks(model: &NormalDiagonalModel) -> Option<Value> {
    let d = spectral_decomposition_normal(model).ok()?;
    let blocks: Vec<Value> = d
        .blocks()
        .iter()
        .map(|b| {
            let members: Vec<Value> = b
                .members
                .iter()
                .map(|m| json!({"origin": origin_value(&m.origin), "phase": Scalar::from_phase(&m.phase)}))
                .collect();
            json!({"beta": b.beta.to_string(), "members": members})
        })
        .collect();
    let families: Vec<Value> = d
        .families()
        .iter()
        .map(|f| {
            json!({
                "tail": f.tail,
                "modulus": spec_from_tail(&f.modulus, None),
                "phase": Scalar::from_phase(&f.phase),
                "merged_steps": f.merged,
            })
        })
        .collect();
    Some(json!({"blocks": blocks, "families": families}))
}

fn positive_report(
    model: &PositiveDiagonalModel,
    report: &mut ClassificationReport,
    opts: &PipelineOptions,
) {
    let spectrum = model.spectrum();
    let attain = model.is_min_attaining();
    report.min_modulus = Some(Number::of(&attain.min_modulus));
    report.essential_min_modulus = essential_min(&spectrum);
    report.norm = Some(Number::of(&model.operator_norm()));
    report.spectrum = Some(summarize_spectrum(&spectrum, "operator"));
    report.min_attaining = Some(Attainment {
        attained: attain.attained,
        witness: attain.witness.map(|i| json!(i)),
    });
    fill_positive(report, model, opts);
    report.pseudoinverse = Some(pinv_summary(model.pseudoinverse(), |p| p.operator_norm()));
}

fn piece_value(piece: &Piece) -> Value {
    match piece {
        Piece::Cell(c) => json!({"cell": c}),
        Piece::TailTerm { family, step } => json!({"tail_family": family, "step": step}),
    }
}

fn multiplication_report(
    model: &MeasureSpaceModel,
    report: &mut ClassificationReport,
    opts: &PipelineOptions,
) {
    let cells = model
        .cells()
        .iter()
        .map(|c| {
            let m = match c.kind {
                minmod_core::multiplication::CellKind::Atom => Multiplicity::Finite(1),
                minmod_core::multiplication::CellKind::Diffuse => Multiplicity::Infinite,
            };
            (c.symbol.clone(), m)
        })
        .collect();
    let tails = model
        .tail_families()
        .iter()
        .map(|f| (f.modulus.clone(), f.phase.clone()))
        .collect();
    let as_normal = NormalDiagonalModel::new(cells, tails).expect("measure model validated");
    let spectrum = as_normal.spectrum();
    let attain = model.is_min_attaining_mult();
    report.min_modulus = Some(Number::of(&model.min_modulus_mult()));
    report.essential_min_modulus = essential_min(&spectrum);
    report.norm = Some(Number::of(&as_normal.operator_norm()));
    report.spectrum = Some(summarize_spectrum(&spectrum, "operator"));
    report.min_attaining = Some(Attainment {
        attained: attain.attained,
        witness: attain.witness.as_ref().map(piece_value),
    });
    let diag = model.to_diagonal().expect("measure model validated");
    fill_positive(report, &diag, opts);
    let am = classify_am_mult(model);
    let an = classify_an_mult(model);
    report.am = Some(Verdict {
        verdict: am.verdict.to_string(),
        reason: layer_reason(&am.layers),
        witness: None,
    });
    report.an = Some(Verdict {
        verdict: an.verdict.to_string(),
        reason: layer_reason(&an.layers),
        witness: None,
    });
    report.pseudoinverse = Some(pinv_summary(as_normal.pseudoinverse(), |p| {
        p.operator_norm()
    }));
    let diag_am = classify_am_positive(&diag).verdict;
    let diag_an = classify_an_positive(&diag).verdict;
    let layers = |l: &minmod_core::multiplication::LayerClassification| -> Value {
        match &l.exhaustion {
            Some(ex) => {
                let finals: Vec<Value> = ex
                    .final_layers()
                    .iter()
                    .map(|layer| {
                        json!({
                            "level": layer.level.to_string(),
                            "pieces": layer.pieces.iter().map(piece_value).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                json!({
                    "pivot": ex.pivot().to_string(),
                    "run_is_infinite": ex.run_is_infinite(),
                    "final_layers": finals,
                    "verified": ex.verify(model, 64),
                })
            }
            None => Value::Null,
        }
    };
    let cross = json!({
        "min_modulus_agrees": model.min_modulus_mult() == diag.min_modulus(),
        "am_agrees": am.verdict == diag_am,
        "an_agrees": an.verdict == diag_an,
        "attainment_agrees": attain.attained == diag.is_min_attaining().attained,
    });
    report.multiplication = Some(json!({
        "ess_inf": model.ess_inf().to_string(),
        "ess_sup": model.ess_sup().to_string(),
        "diagonal_cross_check": cross,
        "am_layers": layers(&am.layers),
        "an_layers": layers(&an.layers),
    }));
}

fn layer_reason(l: &minmod_core::multiplication::LayerClassification) -> String {
    use minmod_core::multiplication::LayerFailure;
    match &l.failure {
        None => "OK".into(),
        Some(LayerFailure::NotAttained { level }) => format!("NotAttained({level})"),
        Some(LayerFailure::SeveralInfiniteLevels { levels }) => {
            let levels: Vec<String> = levels.iter().map(|q| q.to_string()).collect();
            format!("SeveralInfiniteLevels({})", levels.join(", "))
        }
        Some(LayerFailure::NoInfiniteLevel) => "NoInfiniteLevel".into(),
    }
}

fn paranormal_value(v: &ParanormalVerdict) -> Value {
    match v {
        ParanormalVerdict::Holds => json!("holds"),
        ParanormalVerdict::Inconclusive => json!("inconclusive"),
        ParanormalVerdict::FalsifiedBy(x) => {
            json!({"falsified_by": x.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()})
        }
    }
}

fn matrix_report(a: &FiniteMatrix, report: &mut ClassificationReport, opts: &PipelineOptions) {
    let s = svd(a);
    let tol = opts.tolerance;
    let mp = check_moore_penrose(a, tol.max(1e-8));
    let moore_penrose: Vec<Value> = mp
        .items
        .iter()
        .map(|c| json!({"name": c.name, "residual": c.residual, "holds": c.holds}))
        .collect();
    let mut checks = json!({
        "rank": s.rank(),
        "singular_values": s.singular_values,
        "moore_penrose": moore_penrose,
    });
    let map = checks.as_object_mut().expect("object");
    if let Ok(g) = check_spectral_equalities(a, tol.max(1e-9)) {
        map.insert(
            "gram_spectra".into(),
            json!({"nonzero_match": g.nonzero_match, "full_match": g.full_match, "max_deviation": g.max_deviation}),
        );
    }
    if a.is_square() {
        map.insert("normal".into(), json!(is_normal_fd(a, tol.max(1e-9))));
        if let Ok(h) = is_hyponormal_fd(a, tol.max(1e-9)) {
            map.insert("hyponormal".into(), json!(h));
        }
        let config = ParanormalConfig::default();
        if let Ok(v) = is_paranormal_fd(a, config) {
            map.insert("paranormal".into(), paranormal_value(&v));
        }
        if let Ok(k) = check_kernel_lemmas(a, 1e-8, config) {
            map.insert(
                "kernel_lemmas".into(),
                json!({
                    "kernel_of_square": k.kernel_of_square,
                    "pinv_when_kernels_agree": k.pinv_when_kernels_agree,
                    "pinv_when_ranges_agree": k.pinv_when_ranges_agree,
                }),
            );
        }
    }
    report.matrix_checks = Some(checks);
}

/// Runs the full classification on a validated description.
pub fn run_pipeline(
    desc: &Description,
    opts: &PipelineOptions,
) -> Result<ClassificationReport, DescriptionError> {
    let started = Instant::now();
    let model = desc.model()?;
    let parsed = started.elapsed();
    let n = opts.truncation;
    let name = desc.name.clone();
    let kind = desc.payload.kind();
    let truncate_started = Instant::now();
    let (matrix, exact_min) = match &model {
        Model::Positive(m) => (m.truncate(n), Some(m.min_modulus())),
        Model::Normal(m) => (m.truncate(n), Some(m.min_modulus())),
        Model::Shifted(m) => (shifted_truncation(m, n), Some(m.min_modulus())),
        Model::DirectSum { block, model } => {
            let combined = direct_sum_model(block, model);
            (combined.truncate(n), Some(combined.min_modulus()))
        }
        Model::Multiplication(m) => (
            m.to_diagonal().expect("validated").truncate(n),
            Some(m.min_modulus_mult()),
        ),
        Model::Matrix(a) => (a.clone(), None),
    };
    let size = match &model {
        Model::Matrix(a) => a.rows().min(a.cols()) as u64,
        _ => n,
    };
    let truncation = truncation_of(&matrix, size, exact_min.as_ref());
    let truncated = truncate_started.elapsed();
    let mut report = ClassificationReport::empty(name, kind, truncation);
    let classify_started = Instant::now();
    match &model {
        Model::Positive(m) => positive_report(m, &mut report, opts),
        Model::Normal(m) => {
            normal_report(m, &mut report, opts);
            report.spectral_blocks = spectral_blocks(m);
        }
        Model::Shifted(m) => {
            let modulus = m.modulus();
            let spectrum = modulus.spectrum();
            report.min_modulus = Some(Number::of(&m.min_modulus()));
            report.essential_min_modulus = essential_min(&spectrum);
            report.norm = Some(Number::of(&m.operator_norm()));
            report.spectrum = Some(summarize_spectrum(&spectrum, "modulus"));
            let attain = modulus.is_min_attaining();
            report.min_attaining = Some(Attainment {
                attained: attain.attained,
                witness: attain.witness.map(|i| json!(i)),
            });
            fill_positive(&mut report, &modulus, opts);
            report.pseudoinverse = Some(pinv_summary(m.pseudoinverse(), |p| p.operator_norm()));
            let t = classify_am_adjoint_transfer(m);
            let ess = |v: &[Q]| -> Vec<String> { v.iter().map(|q| q.to_string()).collect() };
            report.adjoint_transfer = Some(json!({
                "ess_tstar_t": ess(&t.ess_tstar_t),
                "ess_t_tstar": ess(&t.ess_t_tstar),
                "ess_equal": t.ess_equal,
                "am_t": t.am_t.to_string(),
                "am_tstar": t.am_tstar.to_string(),
                "transfer_holds": t.transfer_holds(),
            }));
        }
        Model::DirectSum { block, model } => {
            let combined = direct_sum_model(block, model);
            positive_report(&combined, &mut report, opts);
            let eigenvalues = block_eigenvalues(block);
            let beta = classify_am_positive(model).decomposition.map(|d| d.beta);
            report.direct_sum = Some(json!({
                "block_eigenvalues": eigenvalues.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
                "summand_am": beta.is_some(),
                "summand_beta": beta.as_ref().map(|b| b.to_string()),
                "shifted_block": beta.as_ref().map(|b| eigenvalues.iter().map(|v| (v - b).to_string()).collect::<Vec<_>>()),
            }));
        }
        Model::Multiplication(m) => multiplication_report(m, &mut report, opts),
        Model::Matrix(a) => matrix_report(a, &mut report, opts),
    }
    if opts.timing {
        report.timing_ms = Some(json!({
            "validate": parsed.as_secs_f64() * 1e3,
            "truncate": truncated.as_secs_f64() * 1e3,
            "classify": classify_started.elapsed().as_secs_f64() * 1e3,
            "total": started.elapsed().as_secs_f64() * 1e3,
        }));
    }
    Ok(report)
}

/// Drops the columns of `SᵏD` that the truncation maps outside the window.
fn shifted_truncation(model: &ShiftedDiagonalModel, n: u64) -> FiniteMatrix {
    let t = model.truncate(n);
    let keep = n.saturating_sub(model.shift_order()) as usize;
    match model.form() {
        ShiftForm::Isometric if keep > 0 => t.as_dmatrix().columns(0, keep).into_owned().into(),
        _ => t,
    }
}

fn block_eigenvalues(block: &FiniteMatrix) -> Vec<Q> {
    let eig = hermitian_eigen(block).expect("block validated as Hermitian");
    let scale = eig.values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    eig.values
        .iter()
        .map(|&v| snap_f64(v.max(0.0), 1e-12 * scale))
        .collect()
}

/// `S ⊕ T` as one positive diagonal model, `S` diagonalized first.
pub fn direct_sum_model(
    block: &FiniteMatrix,
    model: &PositiveDiagonalModel,
) -> PositiveDiagonalModel {
    let cells = block_eigenvalues(block)
        .into_iter()
        .map(|v| (v, Multiplicity::Finite(1)))
        .chain(model.cells().iter().cloned())
        .collect();
    PositiveDiagonalModel::new(cells, model.tails().to_vec())
        .expect("snapped eigenvalues are nonnegative")
}

/// Verdict shorthand for callers that only need AM/AN.
pub fn am_of(report: &ClassificationReport) -> Option<bool> {
    report
        .am
        .as_ref()
        .map(|v| v.verdict == AmVerdict::Am.to_string())
}
