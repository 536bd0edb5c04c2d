//! Operator description documents: parsing, validation against the model
//! invariants, and emission back to JSON.

use std::fmt;

use minmod_core::exact::{parse_rational, Phase, Polar, Q};
use minmod_core::multiplication::{CellKind, MeasureCell, MeasureSpaceModel, TailFamily};
use minmod_core::operators::{
    Direction, FiniteMatrix, NormalDiagonalModel, PositiveDiagonalModel, ShiftForm,
    ShiftedDiagonalModel, Tail, TailRule, TermMap,
};
use minmod_core::oracle::hermitian_eigen;
use minmod_core::spectra::Multiplicity;
use num_complex::Complex64;
use num_traits::Zero;
use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptionError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("model invariant violated at `{path}`: {message}")]
    Invariant { path: String, message: String },
}

impl DescriptionError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DescriptionError::Syntax { .. } | DescriptionError::Schema { .. } => 2,
            DescriptionError::Invariant { .. } => 3,
        }
    }

    fn schema(path: impl Into<String>, message: impl fmt::Display) -> Self {
        DescriptionError::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }

    fn invariant(path: impl Into<String>, message: impl fmt::Display) -> Self {
        DescriptionError::Invariant {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

/// Exact rational; reads strings (`"3/4"`, `"0.75"`), integers and floats,
/// writes strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exact(pub Q);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

struct ExactVisitor;

impl Visitor<'_> for ExactVisitor {
    type Value = Exact;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a rational number as a string or a JSON number")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Exact, E> {
        parse_rational(v).map(Exact).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exact, E> {
        Ok(Exact(Q::from_integer(v.into())))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exact, E> {
        Ok(Exact(Q::from_integer(v.into())))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exact, E> {
        // the shortest round-trip decimal, so 0.1 reads as 1/10
        self.visit_str(&format!("{v}"))
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ExactVisitor)
    }
}

/// Complex scalar with exact parts: a single rational or a `[re, im]` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scalar {
    pub re: Q,
    pub im: Q,
}

impl Scalar {
    pub fn real(re: Q) -> Self {
        Self { re, im: Q::zero() }
    }

    pub fn from_polar(p: &Polar) -> Self {
        Self {
            re: p.re(),
            im: p.im(),
        }
    }

    pub fn from_phase(p: &Phase) -> Self {
        Self {
            re: p.re().clone(),
            im: p.im().clone(),
        }
    }

    fn to_polar(&self, path: &str) -> Result<Polar, DescriptionError> {
        Polar::from_cartesian(&self.re, &self.im).ok_or_else(|| {
            DescriptionError::invariant(path, "complex value must have a rational modulus")
        })
    }

    fn to_phase(&self, path: &str) -> Result<Phase, DescriptionError> {
        Phase::new(self.re.clone(), self.im.clone())
            .map_err(|e| DescriptionError::invariant(path, e))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.im.is_zero() {
            Exact(self.re.clone()).serialize(s)
        } else {
            [Exact(self.re.clone()), Exact(self.im.clone())].serialize(s)
        }
    }
}

struct ScalarVisitor;

impl<'de> Visitor<'de> for ScalarVisitor {
    type Value = Scalar;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a rational number or a [re, im] pair of rationals")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Scalar, E> {
        ExactVisitor.visit_str(v).map(|e| Scalar::real(e.0))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Scalar, E> {
        ExactVisitor.visit_i64(v).map(|e| Scalar::real(e.0))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Scalar, E> {
        ExactVisitor.visit_u64(v).map(|e| Scalar::real(e.0))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Scalar, E> {
        ExactVisitor.visit_f64(v).map(|e| Scalar::real(e.0))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Scalar, A::Error> {
        let re: Exact = seq
            .next_element()?
            .ok_or_else(|| de::Error::invalid_length(0, &self))?;
        let im: Exact = seq
            .next_element()?
            .ok_or_else(|| de::Error::invalid_length(1, &self))?;
        if seq.next_element::<de::IgnoredAny>()?.is_some() {
            return Err(de::Error::invalid_length(3, &self));
        }
        Ok(Scalar { re: re.0, im: im.0 })
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(ScalarVisitor)
    }
}

/// `"inf"` or a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mult(pub Multiplicity);

impl Serialize for Mult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Multiplicity::Finite(k) => s.serialize_u64(k),
            Multiplicity::Infinite => s.serialize_str("inf"),
        }
    }
}

struct MultVisitor;

impl Visitor<'_> for MultVisitor {
    type Value = Mult;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"inf\" or a nonnegative integer")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Mult, E> {
        match v {
            "inf" => Ok(Mult(Multiplicity::Infinite)),
            _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
        }
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Mult, E> {
        Ok(Mult(Multiplicity::Finite(v)))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Mult, E> {
        u64::try_from(v)
            .map(|k| Mult(Multiplicity::Finite(k)))
            .map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self))
    }
}

impl<'de> Deserialize<'de> for Mult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(MultVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub value: Exact,
    pub multiplicity: Mult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalCellSpec {
    pub value: Scalar,
    pub multiplicity: Mult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionSpec {
    Above,
    Below,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MapSpec {
    Affine { scale: Exact, shift: Exact },
    Reciprocal,
    Square,
}

fn one() -> u64 {
    1
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub limit: Exact,
    pub direction: DirectionSpec,
    pub coefficient: Exact,
    pub exponent: u32,
    pub start_index: u64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub stride: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Scalar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormSpec {
    #[default]
    Isometric,
    CoIsometric,
}

fn is_isometric(f: &FormSpec) -> bool {
    *f == FormSpec::Isometric
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKindSpec {
    Atom,
    Diffuse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureCellSpec {
    pub label: String,
    pub kind: CellKindSpec,
    pub weight: Exact,
    pub value: Scalar,
}

/// Dense matrix as row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixSpec {
    fn to_matrix(&self, path: &str) -> Result<FiniteMatrix, DescriptionError> {
        let data: Vec<Complex64> = self
            .entries
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        FiniteMatrix::from_row_major(self.rows, self.cols, &data)
            .map_err(|e| DescriptionError::invariant(path, e))
    }

    fn from_matrix(m: &FiniteMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalFields {
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub tails: Vec<TailSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFields {
    #[serde(default)]
    pub cells: Vec<NormalCellSpec>,
    #[serde(default)]
    pub tails: Vec<TailSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftedFields {
    pub shift_order: u64,
    #[serde(default, skip_serializing_if = "is_isometric")]
    pub form: FormSpec,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub tails: Vec<TailSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSumFields {
    pub finite_block: MatrixSpec,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub tails: Vec<TailSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicationFields {
    #[serde(default)]
    pub cells: Vec<MeasureCellSpec>,
    #[serde(default)]
    pub tail_families: Vec<TailSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    PositiveDiagonal(DiagonalFields),
    NormalDiagonal(NormalFields),
    ShiftedDiagonal(ShiftedFields),
    DirectSum(DirectSumFields),
    Multiplication(MultiplicationFields),
    FiniteMatrix(MatrixSpec),
}

pub const KINDS: [&str; 6] = [
    "positive-diagonal",
    "normal-diagonal",
    "shifted-diagonal",
    "direct-sum",
    "multiplication",
    "finite-matrix",
];

fn fields<T: serde::de::DeserializeOwned>(map: Map<String, Value>) -> Result<T, DescriptionError> {
    serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
        let path = e.path().to_string();
        DescriptionError::schema(if path == "." { String::new() } else { path }, e.inner())
    })
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::PositiveDiagonal(_) => KINDS[0],
            Payload::NormalDiagonal(_) => KINDS[1],
            Payload::ShiftedDiagonal(_) => KINDS[2],
            Payload::DirectSum(_) => KINDS[3],
            Payload::Multiplication(_) => KINDS[4],
            Payload::FiniteMatrix(_) => KINDS[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Description {
    pub name: Option<String>,
    pub notes: Option<String>,
    pub payload: Payload,
}

/// Validated model behind a description.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Positive(PositiveDiagonalModel),
    Normal(NormalDiagonalModel),
    Shifted(ShiftedDiagonalModel),
    DirectSum {
        block: FiniteMatrix,
        model: PositiveDiagonalModel,
    },
    Multiplication(MeasureSpaceModel),
    Matrix(FiniteMatrix),
}

fn tail_from_spec(spec: &TailSpec, path: &str) -> Result<Tail, DescriptionError> {
    let direction = match spec.direction {
        DirectionSpec::Above => Direction::FromAbove,
        DirectionSpec::Below => Direction::FromBelow,
    };
    let rule = TailRule::with_stride(
        spec.limit.0.clone(),
        direction,
        spec.coefficient.0.clone(),
        spec.exponent,
        spec.start_index,
        spec.stride,
    )
    .map_err(|e| DescriptionError::invariant(path, e))?;
    let maps = spec
        .maps
        .iter()
        .map(|m| match m {
            MapSpec::Affine { scale, shift } => TermMap::Affine {
                scale: scale.0.clone(),
                shift: shift.0.clone(),
            },
            MapSpec::Reciprocal => TermMap::Reciprocal,
            MapSpec::Square => TermMap::Square,
        })
        .collect();
    Tail::from_parts(rule, maps).map_err(|e| DescriptionError::invariant(format!("{path}.maps"), e))
}

pub fn spec_from_tail(tail: &Tail, phase: Option<&Phase>) -> TailSpec {
    let rule = tail.rule();
    TailSpec {
        limit: Exact(rule.limit().clone()),
        direction: match rule.direction() {
            Direction::FromAbove => DirectionSpec::Above,
            Direction::FromBelow => DirectionSpec::Below,
        },
        coefficient: Exact(rule.coefficient().clone()),
        exponent: rule.exponent(),
        start_index: rule.start_index(),
        stride: rule.stride(),
        maps: tail
            .maps()
            .iter()
            .map(|m| match m {
                TermMap::Affine { scale, shift } => MapSpec::Affine {
                    scale: Exact(scale.clone()),
                    shift: Exact(shift.clone()),
                },
                TermMap::Reciprocal => MapSpec::Reciprocal,
                TermMap::Square => MapSpec::Square,
            })
            .collect(),
        phase: phase.map(Scalar::from_phase),
    }
}

fn positive_parts(
    cells: &[CellSpec],
    tails: &[TailSpec],
) -> Result<PositiveDiagonalModel, DescriptionError> {
    let mut parsed = Vec::with_capacity(tails.len());
    for (k, t) in tails.iter().enumerate() {
        if t.phase.is_some() {
            return Err(DescriptionError::schema(
                format!("tails[{k}].phase"),
                "phases are only allowed on normal-diagonal tails and multiplication tail families",
            ));
        }
        parsed.push(tail_from_spec(t, &format!("tails[{k}]"))?);
    }
    let cells = cells
        .iter()
        .map(|c| (c.value.0.clone(), c.multiplicity.0))
        .collect();
    PositiveDiagonalModel::new(cells, parsed)
        .map_err(|e| DescriptionError::invariant(model_error_path(&e), e))
}

fn check_positive_block(block: &FiniteMatrix) -> Result<(), DescriptionError> {
    let eig = hermitian_eigen(block).map_err(|e| DescriptionError::invariant("finite_block", e))?;
    let scale = eig.values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    match eig.values.first() {
        Some(&min) if min < -1e-8 * scale => Err(DescriptionError::invariant(
            "finite_block",
            format!("finite block must be positive semidefinite (eigenvalue {min:e})"),
        )),
        _ => Ok(()),
    }
}

fn model_error_path(e: &minmod_core::operators::ModelError) -> String {
    use minmod_core::operators::ModelError;
    match e {
        ModelError::ZeroMultiplicity { cell } | ModelError::NegativeCell { cell, .. } => {
            format!("cells[{cell}]")
        }
        ModelError::NegativeTail { tail, .. } => format!("tails[{tail}]"),
        _ => String::new(),
    }
}

fn positive_cells(model: &PositiveDiagonalModel) -> Vec<CellSpec> {
    model
        .cells()
        .iter()
        .map(|(v, m)| CellSpec {
            value: Exact(v.clone()),
            multiplicity: Mult(*m),
        })
        .collect()
}

fn positive_tails(model: &PositiveDiagonalModel) -> Vec<TailSpec> {
    model
        .tails()
        .iter()
        .map(|t| spec_from_tail(t, None))
        .collect()
}

impl Description {
    pub fn new(payload: Payload) -> Self {
        Self {
            name: None,
            notes: None,
            payload,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn parse(text: &str) -> Result<Self, DescriptionError> {
        let value: Value = serde_json::from_str(text).map_err(|e| DescriptionError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, DescriptionError> {
        let Value::Object(mut map) = value else {
            return Err(DescriptionError::schema("", "expected a JSON object"));
        };
        match map.remove("schema_version") {
            Some(Value::String(v)) if v == SCHEMA_VERSION => {}
            Some(other) => {
                return Err(DescriptionError::schema(
                    "schema_version",
                    format!("unsupported schema version {other}, expected \"{SCHEMA_VERSION}\""),
                ))
            }
            None => return Err(DescriptionError::schema("schema_version", "missing field")),
        }
        let mut text_field = |key: &str| -> Result<Option<String>, DescriptionError> {
            match map.remove(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s)),
                Some(other) => Err(DescriptionError::schema(
                    key,
                    format!("expected a string, found {other}"),
                )),
            }
        };
        let name = text_field("name")?;
        let notes = text_field("notes")?;
        let kind = match map.remove("kind") {
            Some(Value::String(k)) => k,
            Some(other) => {
                return Err(DescriptionError::schema(
                    "kind",
                    format!("expected a string, found {other}"),
                ))
            }
            None => return Err(DescriptionError::schema("kind", "missing field")),
        };
        let payload = match kind.as_str() {
            "positive-diagonal" => Payload::PositiveDiagonal(fields(map)?),
            "normal-diagonal" => Payload::NormalDiagonal(fields(map)?),
            "shifted-diagonal" => Payload::ShiftedDiagonal(fields(map)?),
            "direct-sum" => Payload::DirectSum(fields(map)?),
            "multiplication" => Payload::Multiplication(fields(map)?),
            "finite-matrix" => Payload::FiniteMatrix(fields(map)?),
            other => {
                return Err(DescriptionError::schema(
                    "kind",
                    format!(
                        "unknown kind `{other}`, expected one of {}",
                        KINDS.join(", ")
                    ),
                ))
            }
        };
        let desc = Self {
            name,
            notes,
            payload,
        };
        desc.model()?;
        Ok(desc)
    }

    pub fn to_value(&self) -> Value {
        let mut out = Map::new();
        out.insert(
            "schema_version".into(),
            Value::String(SCHEMA_VERSION.into()),
        );
        let Value::Object(payload) =
            serde_json::to_value(&self.payload).expect("payload serializes")
        else {
            unreachable!("payload is a map");
        };
        let mut payload = payload;
        out.insert(
            "kind".into(),
            payload.remove("kind").expect("tagged payload"),
        );
        if let Some(name) = &self.name {
            out.insert("name".into(), Value::String(name.clone()));
        }
        if let Some(notes) = &self.notes {
            out.insert("notes".into(), Value::String(notes.clone()));
        }
        out.extend(payload);
        Value::Object(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("description serializes")
    }

    pub fn model(&self) -> Result<Model, DescriptionError> {
        match &self.payload {
            Payload::PositiveDiagonal(DiagonalFields { cells, tails }) => {
                Ok(Model::Positive(positive_parts(cells, tails)?))
            }
            Payload::NormalDiagonal(NormalFields { cells, tails }) => {
                let mut parsed_cells = Vec::with_capacity(cells.len());
                for (k, c) in cells.iter().enumerate() {
                    parsed_cells.push((
                        c.value.to_polar(&format!("cells[{k}].value"))?,
                        c.multiplicity.0,
                    ));
                }
                let mut parsed_tails = Vec::with_capacity(tails.len());
                for (k, t) in tails.iter().enumerate() {
                    let path = format!("tails[{k}]");
                    let phase = match &t.phase {
                        Some(p) => p.to_phase(&format!("{path}.phase"))?,
                        None => Phase::one(),
                    };
                    parsed_tails.push((tail_from_spec(t, &path)?, phase));
                }
                NormalDiagonalModel::new(parsed_cells, parsed_tails)
                    .map(Model::Normal)
                    .map_err(|e| DescriptionError::invariant(model_error_path(&e), e))
            }
            Payload::ShiftedDiagonal(ShiftedFields {
                shift_order,
                form,
                cells,
                tails,
            }) => {
                let diag = positive_parts(cells, tails)?;
                let form = match form {
                    FormSpec::Isometric => ShiftForm::Isometric,
                    FormSpec::CoIsometric => ShiftForm::CoIsometric,
                };
                Ok(Model::Shifted(ShiftedDiagonalModel::with_form(
                    *shift_order,
                    diag,
                    form,
                )))
            }
            Payload::DirectSum(DirectSumFields {
                finite_block,
                cells,
                tails,
            }) => {
                let block = finite_block.to_matrix("finite_block")?;
                check_positive_block(&block)?;
                Ok(Model::DirectSum {
                    block,
                    model: positive_parts(cells, tails)?,
                })
            }
            Payload::Multiplication(MultiplicationFields {
                cells,
                tail_families,
            }) => {
                let mut parsed_cells = Vec::with_capacity(cells.len());
                for (k, c) in cells.iter().enumerate() {
                    parsed_cells.push(MeasureCell {
                        label: c.label.clone(),
                        kind: match c.kind {
                            CellKindSpec::Atom => CellKind::Atom,
                            CellKindSpec::Diffuse => CellKind::Diffuse,
                        },
                        weight: c.weight.0.clone(),
                        symbol: c.value.to_polar(&format!("cells[{k}].value"))?,
                    });
                }
                let mut families = Vec::with_capacity(tail_families.len());
                for (k, t) in tail_families.iter().enumerate() {
                    let path = format!("tail_families[{k}]");
                    let phase = match &t.phase {
                        Some(p) => p.to_phase(&format!("{path}.phase"))?,
                        None => Phase::one(),
                    };
                    families.push(TailFamily {
                        modulus: tail_from_spec(t, &path)?,
                        phase,
                    });
                }
                MeasureSpaceModel::new(parsed_cells, families)
                    .map(Model::Multiplication)
                    .map_err(|e| {
                        use minmod_core::multiplication::MeasureError;
                        let path = match &e {
                            MeasureError::NonPositiveWeight { cell, .. } => {
                                format!("cells[{cell}].weight")
                            }
                            MeasureError::NegativeTail { family, .. } => {
                                format!("tail_families[{family}]")
                            }
                        };
                        DescriptionError::invariant(path, e)
                    })
            }
            Payload::FiniteMatrix(spec) => Ok(Model::Matrix(spec.to_matrix("entries")?)),
        }
    }

    pub fn from_model(model: &Model) -> Self {
        let payload = match model {
            Model::Positive(m) => Payload::PositiveDiagonal(DiagonalFields {
                cells: positive_cells(m),
                tails: positive_tails(m),
            }),
            Model::Normal(m) => Payload::NormalDiagonal(NormalFields {
                cells: m
                    .cells()
                    .iter()
                    .map(|(v, k)| NormalCellSpec {
                        value: Scalar::from_polar(v),
                        multiplicity: Mult(*k),
                    })
                    .collect(),
                tails: m
                    .tails()
                    .iter()
                    .map(|(t, p)| spec_from_tail(t, (!p.is_one()).then_some(p)))
                    .collect(),
            }),
            Model::Shifted(m) => Payload::ShiftedDiagonal(ShiftedFields {
                shift_order: m.shift_order(),
                form: match m.form() {
                    ShiftForm::Isometric => FormSpec::Isometric,
                    ShiftForm::CoIsometric => FormSpec::CoIsometric,
                },
                cells: positive_cells(m.diag()),
                tails: positive_tails(m.diag()),
            }),
            Model::DirectSum { block, model } => Payload::DirectSum(DirectSumFields {
                finite_block: MatrixSpec::from_matrix(block),
                cells: positive_cells(model),
                tails: positive_tails(model),
            }),
            Model::Multiplication(m) => Payload::Multiplication(MultiplicationFields {
                cells: m
                    .cells()
                    .iter()
                    .map(|c| MeasureCellSpec {
                        label: c.label.clone(),
                        kind: match c.kind {
                            CellKind::Atom => CellKindSpec::Atom,
                            CellKind::Diffuse => CellKindSpec::Diffuse,
                        },
                        weight: Exact(c.weight.clone()),
                        value: Scalar::from_polar(&c.symbol),
                    })
                    .collect(),
                tail_families: m
                    .tail_families()
                    .iter()
                    .map(|f| spec_from_tail(&f.modulus, (!f.phase.is_one()).then_some(&f.phase)))
                    .collect(),
            }),
            Model::Matrix(m) => Payload::FiniteMatrix(MatrixSpec::from_matrix(m)),
        };
        Self::new(payload)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_MINUS: &str = r#"{
        "schema_version": "1",
        "kind": "positive-diagonal",
        "name": "one-minus",
        "cells": [{"value": "5", "multiplicity": 1}],
        "tails": [{"limit": 1, "direction": "below", "coefficient": "1", "exponent": 1, "start_index": 2}]
    }"#;

    #[test]
    fn parses_a_positive_model() {
        let d = Description::parse(ONE_MINUS).unwrap();
        assert_eq!(d.name.as_deref(), Some("one-minus"));
        let Model::Positive(m) = d.model().unwrap() else {
            panic!("wrong kind")
        };
        assert_eq!(
            m.entries(3),
            vec![
                Q::from_integer(5.into()),
                Q::new(1.into(), 2.into()),
                Q::new(2.into(), 3.into())
            ]
        );
    }

    #[test]
    fn emits_what_it_parses() {
        let d = Description::parse(ONE_MINUS).unwrap();
        assert_eq!(Description::parse(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn negative_first_term_is_an_invariant_error() {
        let text = ONE_MINUS
            .replace(r#""coefficient": "1""#, r#""coefficient": "2""#)
            .replace("\"start_index\": 2", "\"start_index\": 1");
        let err = Description::parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
        assert!(matches!(err, DescriptionError::Invariant { ref path, .. } if path == "tails[0]"));
    }

    #[test]
    fn unknown_kind_is_a_schema_error() {
        let err =
            Description::parse(&ONE_MINUS.replace("positive-diagonal", "hexagonal")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(matches!(err, DescriptionError::Schema { .. }), "{err}");
    }

    #[test]
    fn unknown_field_reports_its_path() {
        let text = ONE_MINUS.replace(r#""exponent": 1"#, r#""exponent": 1, "colour": "red""#);
        let err = Description::parse(&text).unwrap_err();
        let DescriptionError::Schema { path, message } = err else {
            panic!("{err:?}")
        };
        assert_eq!(path, "tails[0].colour");
        assert!(message.contains("colour"), "{message}");
    }

    #[test]
    fn bad_rational_reports_its_path() {
        let err = Description::parse(&ONE_MINUS.replace(r#""value": "5""#, r#""value": "five""#))
            .unwrap_err();
        let DescriptionError::Schema { path, .. } = err else {
            panic!("{err:?}")
        };
        assert_eq!(path, "cells[0].value");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = Description::parse("{\n  \"kind\": }").unwrap_err();
        assert!(
            matches!(err, DescriptionError::Syntax { line: 2, .. }),
            "{err:?}"
        );
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn schema_version_is_required() {
        let err =
            Description::parse(&ONE_MINUS.replace(r#""schema_version": "1","#, "")).unwrap_err();
        assert!(
            matches!(err, DescriptionError::Schema { ref path, .. } if path == "schema_version")
        );
    }

    #[test]
    fn complex_values_need_unit_phase_and_rational_modulus() {
        let base = r#"{"schema_version": "1", "kind": "normal-diagonal", "cells": [{"value": VALUE, "multiplicity": "inf"}]}"#;
        let ok = Description::parse(&base.replace("VALUE", r#"["3", "4"]"#)).unwrap();
        let Model::Normal(m) = ok.model().unwrap() else {
            panic!()
        };
        assert_eq!(m.cells()[0].0.modulus(), &Q::from_integer(5.into()));
        let err = Description::parse(&base.replace("VALUE", "[1, 1]")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn floats_read_as_short_decimals() {
        let e: Exact = serde_json::from_str("0.1").unwrap();
        assert_eq!(e.0, Q::new(1.into(), 10.into()));
    }
}
