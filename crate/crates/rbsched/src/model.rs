//! Instance data model: buses, stages, the routing buffer shape, and the
//! setup model, together with the JSON document format, validation, and the
//! bundled reference instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All durations and clock times are integer minutes.
pub type Minutes = u32;

/// 1-based bus identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl BusId {
    /// Zero-based index into a contiguous bus table.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{}", self.0)
    }
}

/// A bus type is the combination of a model label and a color label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusType {
    pub model: String,
    pub color: String,
}

impl BusType {
    pub fn new(model: impl Into<String>, color: impl Into<String>) -> Self {
        BusType {
            model: model.into(),
            color: color.into(),
        }
    }

    /// Composite `"model|color"` key used by the document format.
    pub fn key(&self) -> String {
        format!("{}|{}", self.model, self.color)
    }

    fn from_key(key: &str) -> Option<Self> {
        let (model, color) = key.split_once('|')?;
        if model.is_empty() || color.is_empty() || color.contains('|') {
            return None;
        }
        Some(BusType::new(model, color))
    }
}

impl fmt::Display for BusType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.model, self.color)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bus {
    pub id: BusId,
    pub bus_type: BusType,
    /// Processing time per stage, one entry per stage.
    pub proc_times: Vec<Minutes>,
}

/// Geometry of the routing buffer: an `rows x cols` grid of parking spaces
/// sitting between `after_stage` and `after_stage + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferShape {
    pub after_stage: u32,
    pub rows: u32,
    pub cols: u32,
}

/// How pairwise setup cost between bus types is defined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetupRule {
    /// Direct type-to-type cost table. Entries are stored exactly as listed
    /// in the document; symmetry is a validation concern, lookups accept
    /// either orientation.
    Matrix(BTreeMap<BusType, BTreeMap<BusType, Minutes>>),
    /// Per-property change costs. Outer key is the property name (`model` or
    /// `color`), inner map is value -> value -> cost.
    Factors(BTreeMap<String, BTreeMap<String, BTreeMap<String, Minutes>>>),
}

/// Property names a setup factor may refer to.
pub const FACTOR_NAMES: [&str; 2] = ["model", "color"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupModel {
    /// 1-based stages on which setup time is actually incurred.
    pub applies_to_stages: BTreeSet<u32>,
    pub rule: SetupRule,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SetupError {
    #[error("no setup cost listed for type pair ({a}, {b})")]
    UnknownTypePair { a: BusType, b: BusType },
    #[error("setup factor {factor}: no cost listed for value pair ({a}, {b})")]
    UnknownPropertyPair { factor: String, a: String, b: String },
    #[error("bus {0} is not part of this instance")]
    UnknownBus(BusId),
}

impl SetupModel {
    /// Pairwise setup cost between two bus types.
    ///
    /// Matrix mode is a direct lookup (either orientation); factors mode sums
    /// the per-property change costs, where an unchanged property costs 0.
    /// Identical types always cost 0.
    pub fn cost_between(&self, a: &BusType, b: &BusType) -> Result<Minutes, SetupError> {
        match &self.rule {
            SetupRule::Matrix(rows) => {
                if let Some(c) = rows.get(a).and_then(|r| r.get(b)) {
                    return Ok(*c);
                }
                if let Some(c) = rows.get(b).and_then(|r| r.get(a)) {
                    return Ok(*c);
                }
                if a == b {
                    return Ok(0);
                }
                Err(SetupError::UnknownTypePair {
                    a: a.clone(),
                    b: b.clone(),
                })
            }
            SetupRule::Factors(factors) => {
                let mut total = 0;
                for (factor, table) in factors {
                    let (va, vb) = (property(a, factor), property(b, factor));
                    if va == vb {
                        continue;
                    }
                    let cost = table
                        .get(va)
                        .and_then(|r| r.get(vb))
                        .or_else(|| table.get(vb).and_then(|r| r.get(va)));
                    match cost {
                        Some(c) => total += *c,
                        None => {
                            return Err(SetupError::UnknownPropertyPair {
                                factor: factor.clone(),
                                a: va.to_string(),
                                b: vb.to_string(),
                            })
                        }
                    }
                }
                Ok(total)
            }
        }
    }

    /// Whether `t` belongs to the label universe this model declares:
    /// matrix keys in matrix mode, per-property value sets in factors mode.
    pub fn knows_type(&self, t: &BusType) -> bool {
        match &self.rule {
            SetupRule::Matrix(rows) => {
                rows.contains_key(t) || rows.values().any(|r| r.contains_key(t))
            }
            SetupRule::Factors(factors) => FACTOR_NAMES.iter().all(|name| {
                let value = property(t, name);
                factors
                    .get(*name)
                    .map(|table| {
                        table.contains_key(value)
                            || table.values().any(|r| r.contains_key(value))
                    })
                    .unwrap_or(false)
            }),
        }
    }
}

fn property<'t>(t: &'t BusType, factor: &str) -> &'t str {
    match factor {
        "model" => &t.model,
        "color" => &t.color,
        _ => unreachable!("factor names are checked at parse time"),
    }
}

/// A complete simulation input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Workstation count per stage.
    pub stages: Vec<u32>,
    pub buffer: BufferShape,
    pub buses: Vec<Bus>,
    pub setup: SetupModel,
}

impl Instance {
    pub fn stage_count(&self) -> u32 {
        self.stages.len() as u32
    }

    pub fn bus_count(&self) -> u32 {
        self.buses.len() as u32
    }

    /// Stage fed by the routing buffer.
    pub fn buffer_next_stage(&self) -> u32 {
        self.buffer.after_stage + 1
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        // Contiguous ids in valid instances; fall back to a scan otherwise.
        match self.buses.get(id.index()) {
            Some(b) if b.id == id => Some(b),
            _ => self.buses.iter().find(|b| b.id == id),
        }
    }
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bus J{id}: missing processing time (expected {expected} per stage, found {found})")]
    ProcTimeArity { id: u32, expected: usize, found: usize },
    #[error("bus J{id}: unknown type/color label {label}")]
    UnknownLabel { id: u32, label: String },
    #[error("setup matrix key {key:?} is not of the form \"model|color\"")]
    BadTypeKey { key: String },
    #[error("setup factor key {key:?} is not of the form \"value|value\"")]
    BadFactorKey { key: String },
    #[error("unknown setup factor {name:?} (expected one of {FACTOR_NAMES:?})")]
    UnknownFactor { name: String },
    #[error("unknown setup mode {mode:?} (expected \"matrix\" or \"factors\")")]
    UnknownMode { mode: String },
    #[error("setup mode {mode:?} requires a {table:?} table")]
    MissingTable { mode: String, table: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    stages: Vec<u32>,
    buffer: BufferDoc,
    buses: Vec<BusDoc>,
    setup: SetupDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct BufferDoc {
    after_stage: u32,
    rows: u32,
    cols: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct BusDoc {
    id: u32,
    model: String,
    color: String,
    proc_times: Vec<Minutes>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SetupDoc {
    mode: String,
    applies_to_stages: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<BTreeMap<String, BTreeMap<String, Minutes>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factors: Option<BTreeMap<String, BTreeMap<String, Minutes>>>,
}

/// Parse an instance document (UTF-8 JSON).
///
/// Structural problems, arity mismatches, and unresolved type/color labels
/// are parse errors; semantic invariants (symmetry, bounds, ...) are left to
/// [`validate_instance`] so they can all be reported together.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;

    let rule = match doc.setup.mode.as_str() {
        "matrix" => {
            let raw = doc.setup.matrix.ok_or_else(|| ParseError::MissingTable {
                mode: "matrix".into(),
                table: "matrix".into(),
            })?;
            let mut rows = BTreeMap::new();
            for (rk, cols) in raw {
                let row_type = BusType::from_key(&rk)
                    .ok_or_else(|| ParseError::BadTypeKey { key: rk.clone() })?;
                let mut row = BTreeMap::new();
                for (ck, cost) in cols {
                    let col_type = BusType::from_key(&ck)
                        .ok_or_else(|| ParseError::BadTypeKey { key: ck.clone() })?;
                    row.insert(col_type, cost);
                }
                rows.insert(row_type, row);
            }
            SetupRule::Matrix(rows)
        }
        "factors" => {
            let raw = doc.setup.factors.ok_or_else(|| ParseError::MissingTable {
                mode: "factors".into(),
                table: "factors".into(),
            })?;
            let mut factors = BTreeMap::new();
            for (name, table) in raw {
                if !FACTOR_NAMES.contains(&name.as_str()) {
                    return Err(ParseError::UnknownFactor { name });
                }
                let mut parsed: BTreeMap<String, BTreeMap<String, Minutes>> = BTreeMap::new();
                for (pk, cost) in table {
                    let (a, b) = pk
                        .split_once('|')
                        .filter(|(a, b)| !a.is_empty() && !b.is_empty() && !b.contains('|'))
                        .ok_or_else(|| ParseError::BadFactorKey { key: pk.clone() })?;
                    parsed
                        .entry(a.to_string())
                        .or_default()
                        .insert(b.to_string(), cost);
                }
                factors.insert(name, parsed);
            }
            SetupRule::Factors(factors)
        }
        other => {
            return Err(ParseError::UnknownMode {
                mode: other.to_string(),
            })
        }
    };

    let setup = SetupModel {
        applies_to_stages: doc.setup.applies_to_stages.into_iter().collect(),
        rule,
    };

    let stage_count = doc.stages.len();
    let mut buses = Vec::with_capacity(doc.buses.len());
    for b in doc.buses {
        if b.proc_times.len() != stage_count {
            return Err(ParseError::ProcTimeArity {
                id: b.id,
                expected: stage_count,
                found: b.proc_times.len(),
            });
        }
        let bus_type = BusType::new(b.model, b.color);
        if !setup.knows_type(&bus_type) {
            return Err(ParseError::UnknownLabel {
                id: b.id,
                label: bus_type.key(),
            });
        }
        buses.push(Bus {
            id: BusId(b.id),
            bus_type,
            proc_times: b.proc_times,
        });
    }

    Ok(Instance {
        stages: doc.stages,
        buffer: BufferShape {
            after_stage: doc.buffer.after_stage,
            rows: doc.buffer.rows,
            cols: doc.buffer.cols,
        },
        buses,
        setup,
    })
}

/// Render an instance back to its document form. Output is canonical
/// (sorted keys, pretty-printed) so equal instances serialize identically.
pub fn serialize_instance(inst: &Instance) -> String {
    let setup = match &inst.setup.rule {
        SetupRule::Matrix(rows) => SetupDoc {
            mode: "matrix".into(),
            applies_to_stages: inst.setup.applies_to_stages.iter().copied().collect(),
            matrix: Some(
                rows.iter()
                    .map(|(rt, row)| {
                        (
                            rt.key(),
                            row.iter().map(|(ct, c)| (ct.key(), *c)).collect(),
                        )
                    })
                    .collect(),
            ),
            factors: None,
        },
        SetupRule::Factors(factors) => SetupDoc {
            mode: "factors".into(),
            applies_to_stages: inst.setup.applies_to_stages.iter().copied().collect(),
            matrix: None,
            factors: Some(
                factors
                    .iter()
                    .map(|(name, table)| {
                        let flat = table
                            .iter()
                            .flat_map(|(a, row)| {
                                row.iter().map(move |(b, c)| (format!("{a}|{b}"), *c))
                            })
                            .collect();
                        (name.clone(), flat)
                    })
                    .collect(),
            ),
        },
    };
    let doc = InstanceDoc {
        stages: inst.stages.clone(),
        buffer: BufferDoc {
            after_stage: inst.buffer.after_stage,
            rows: inst.buffer.rows,
            cols: inst.buffer.cols,
        },
        buses: inst
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id.0,
                model: b.bus_type.model.clone(),
                color: b.bus_type.color.clone(),
                proc_times: b.proc_times.clone(),
            })
            .collect(),
        setup,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance doc serializes");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Bounds,
    BadIds,
    BadProcTime,
    Asymmetry,
    NonzeroDiagonal,
    MissingPair,
    UnknownLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "ok: no violations")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Check every instance invariant and report all violations. An empty report
/// means the instance is usable by the simulator.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let q = inst.stage_count();

    if q < 2 {
        report.push(
            ViolationKind::Bounds,
            format!("need at least 2 stages, found {q}"),
        );
    }
    for (l, m) in inst.stages.iter().enumerate() {
        if *m == 0 {
            report.push(
                ViolationKind::Bounds,
                format!("stage {} has no workstations", l + 1),
            );
        }
    }
    let buf = inst.buffer;
    if q >= 2 && !(1..q).contains(&buf.after_stage) {
        report.push(
            ViolationKind::Bounds,
            format!(
                "buffer.after_stage = {} out of range 1..={}",
                buf.after_stage,
                q - 1
            ),
        );
    }
    if buf.rows == 0 || buf.cols == 0 {
        report.push(
            ViolationKind::Bounds,
            format!("buffer must be at least 1x1, found {}x{}", buf.rows, buf.cols),
        );
    }
    for stage in &inst.setup.applies_to_stages {
        if !(1..=q).contains(stage) {
            report.push(
                ViolationKind::Bounds,
                format!("setup applies_to_stages lists stage {stage} out of range 1..={q}"),
            );
        }
    }

    let mut seen = BTreeSet::new();
    for (i, bus) in inst.buses.iter().enumerate() {
        let expected = (i + 1) as u32;
        if bus.id.0 != expected {
            report.push(
                ViolationKind::BadIds,
                format!("bus ids must be contiguous from 1: position {i} holds {}", bus.id),
            );
        }
        if !seen.insert(bus.id) {
            report.push(ViolationKind::BadIds, format!("duplicate bus id {}", bus.id));
        }
        if bus.proc_times.len() != q as usize {
            report.push(
                ViolationKind::BadProcTime,
                format!(
                    "bus {}: {} processing times for {} stages",
                    bus.id,
                    bus.proc_times.len(),
                    q
                ),
            );
        }
        for (l, t) in bus.proc_times.iter().enumerate() {
            if *t == 0 {
                report.push(
                    ViolationKind::BadProcTime,
                    format!("bus {}: processing time at stage {} must be positive", bus.id, l + 1),
                );
            }
        }
        if !inst.setup.knows_type(&bus.bus_type) {
            report.push(
                ViolationKind::UnknownLabel,
                format!("bus {}: type {} not declared by the setup model", bus.id, bus.bus_type),
            );
        }
    }

    match &inst.setup.rule {
        SetupRule::Matrix(rows) => {
            let mut types: BTreeSet<&BusType> = rows.keys().collect();
            for row in rows.values() {
                types.extend(row.keys());
            }
            for (a, row) in rows {
                for (b, cost) in row {
                    if a == b {
                        if *cost != 0 {
                            report.push(
                                ViolationKind::NonzeroDiagonal,
                                format!("matrix[{a}][{a}] = {cost}, diagonal must be 0"),
                            );
                        }
                        continue;
                    }
                    match rows.get(b).and_then(|r| r.get(a)) {
                        Some(back) if back == cost => {}
                        Some(back) => report.push(
                            ViolationKind::Asymmetry,
                            format!("matrix[{a}][{b}] = {cost} but matrix[{b}][{a}] = {back}"),
                        ),
                        None => {}
                    }
                }
            }
            // Every declared type pair must be resolvable for the simulator.
            let types: Vec<&BusType> = types.into_iter().collect();
            for (i, a) in types.iter().enumerate() {
                for b in &types[i + 1..] {
                    let fwd = rows.get(*a).and_then(|r| r.get(*b));
                    let back = rows.get(*b).and_then(|r| r.get(*a));
                    if fwd.is_none() && back.is_none() {
                        report.push(
                            ViolationKind::MissingPair,
                            format!("no setup cost listed for type pair ({a}, {b})"),
                        );
                    }
                }
            }
        }
        SetupRule::Factors(factors) => {
            for (name, table) in factors {
                let mut values: BTreeSet<&String> = table.keys().collect();
                for row in table.values() {
                    values.extend(row.keys());
                }
                for (a, row) in table {
                    for (b, cost) in row {
                        if a == b {
                            if *cost != 0 {
                                report.push(
                                    ViolationKind::NonzeroDiagonal,
                                    format!("factor {name}: table[{a}][{a}] = {cost}, diagonal must be 0"),
                                );
                            }
                            continue;
                        }
                        match table.get(b).and_then(|r| r.get(a)) {
                            Some(back) if back == cost => {}
                            Some(back) => report.push(
                                ViolationKind::Asymmetry,
                                format!(
                                    "factor {name}: table[{a}][{b}] = {cost} but table[{b}][{a}] = {back}"
                                ),
                            ),
                            None => {}
                        }
                    }
                }
                let values: Vec<&String> = values.into_iter().collect();
                for (i, a) in values.iter().enumerate() {
                    for b in &values[i + 1..] {
                        let fwd = table.get(*a).and_then(|r| r.get(*b));
                        let back = table.get(*b).and_then(|r| r.get(*a));
                        if fwd.is_none() && back.is_none() {
                            report.push(
                                ViolationKind::MissingPair,
                                format!("factor {name}: no cost listed for value pair ({a}, {b})"),
                            );
                        }
                    }
                }
            }
        }
    }

    report
}

// ---------------------------------------------------------------------------
// Built-in reference instance
// ---------------------------------------------------------------------------

/// (model, color) per bus, ids 1..=22.
const BUILTIN_BUS_TYPES: [(&str, &str); 22] = [
    ("Type1", "Color1"),
    ("Type3", "Color2"),
    ("Type2", "Color1"),
    ("Type2", "Color1"),
    ("Type1", "Color1"),
    ("Type2", "Color2"),
    ("Type1", "Color3"),
    ("Type1", "Color1"),
    ("Type2", "Color2"),
    ("Type3", "Color2"),
    ("Type1", "Color3"),
    ("Type1", "Color3"),
    ("Type3", "Color2"),
    ("Type2", "Color2"),
    ("Type2", "Color1"),
    ("Type1", "Color1"),
    ("Type1", "Color3"),
    ("Type3", "Color2"),
    ("Type2", "Color1"),
    ("Type2", "Color2"),
    ("Type3", "Color2"),
    ("Type2", "Color1"),
];

/// Standard processing minutes per bus and stage, ids 1..=22.
const BUILTIN_PROC_TIMES: [[Minutes; 4]; 22] = [
    [8, 30, 34, 42],
    [11, 38, 38, 36],
    [15, 28, 44, 26],
    [19, 25, 42, 24],
    [10, 26, 52, 34],
    [16, 36, 40, 30],
    [12, 20, 46, 28],
    [21, 24, 48, 32],
    [22, 22, 35, 38],
    [13, 32, 36, 40],
    [20, 35, 45, 44],
    [14, 34, 50, 22],
    [8, 30, 34, 42],
    [11, 38, 38, 36],
    [15, 28, 44, 26],
    [19, 25, 42, 24],
    [10, 26, 52, 34],
    [16, 36, 40, 30],
    [12, 20, 46, 28],
    [21, 24, 48, 32],
    [22, 22, 35, 38],
    [13, 32, 36, 40],
];

/// The five bus types that occur in the reference fleet, in table order.
const BUILTIN_MATRIX_TYPES: [(&str, &str); 5] = [
    ("Type1", "Color1"),
    ("Type2", "Color1"),
    ("Type3", "Color2"),
    ("Type2", "Color2"),
    ("Type1", "Color3"),
];

/// Pairwise setup minutes between the five types, row/column order as above.
const BUILTIN_MATRIX: [[Minutes; 5]; 5] = [
    [0, 6, 16, 14, 9],
    [6, 0, 16, 8, 15],
    [16, 16, 0, 8, 16],
    [14, 8, 8, 0, 14],
    [9, 15, 16, 14, 0],
];

fn builtin_buses() -> Vec<Bus> {
    BUILTIN_BUS_TYPES
        .iter()
        .zip(BUILTIN_PROC_TIMES.iter())
        .enumerate()
        .map(|(i, (&(model, color), times))| Bus {
            id: BusId(i as u32 + 1),
            bus_type: BusType::new(model, color),
            proc_times: times.to_vec(),
        })
        .collect()
}

/// The bundled 22-bus reference instance: 4 stages with workstation counts
/// {3, 2, 3, 3}, a 4x3 routing buffer after stage 1, and the type-to-type
/// setup matrix applying to stage 2.
pub fn builtin_instance() -> Instance {
    let mut rows = BTreeMap::new();
    for (i, &(rm, rc)) in BUILTIN_MATRIX_TYPES.iter().enumerate() {
        let mut row = BTreeMap::new();
        for (j, &(cm, cc)) in BUILTIN_MATRIX_TYPES.iter().enumerate() {
            row.insert(BusType::new(cm, cc), BUILTIN_MATRIX[i][j]);
        }
        rows.insert(BusType::new(rm, rc), row);
    }
    Instance {
        stages: vec![3, 2, 3, 3],
        buffer: BufferShape {
            after_stage: 1,
            rows: 4,
            cols: 3,
        },
        buses: builtin_buses(),
        setup: SetupModel {
            applies_to_stages: BTreeSet::from([2]),
            rule: SetupRule::Matrix(rows),
        },
    }
}

/// Variant of the reference instance whose setup model is the per-factor
/// table (model changes and color changes priced separately). Shipped as a
/// separate fixture; the matrix and factor figures are independent data sets
/// and are never combined.
pub fn builtin_factors_instance() -> Instance {
    let model_changes = [("Type1", "Type2", 10), ("Type1", "Type3", 4), ("Type2", "Type3", 14)];
    let color_changes = [
        ("Color1", "Color2", 13),
        ("Color1", "Color3", 17),
        ("Color2", "Color3", 12),
    ];
    let mut factors = BTreeMap::new();
    for (name, changes) in [("model", &model_changes[..]), ("color", &color_changes[..])] {
        let mut table: BTreeMap<String, BTreeMap<String, Minutes>> = BTreeMap::new();
        for &(a, b, cost) in changes {
            table.entry(a.to_string()).or_default().insert(b.to_string(), cost);
        }
        factors.insert(name.to_string(), table);
    }
    Instance {
        setup: SetupModel {
            applies_to_stages: BTreeSet::from([2]),
            rule: SetupRule::Factors(factors),
        },
        ..builtin_instance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let inst = builtin_instance();
        assert_eq!(inst.stage_count(), 4);
        assert_eq!(inst.stages, vec![3, 2, 3, 3]);
        assert_eq!(inst.buffer.after_stage, 1);
        assert_eq!(inst.buffer.rows, 4);
        assert_eq!(inst.buffer.cols, 3);
        assert_eq!(inst.bus_count(), 22);
    }

    #[test]
    fn builtin_bus_data() {
        let inst = builtin_instance();
        let j3 = inst.bus(BusId(3)).unwrap();
        assert_eq!(j3.bus_type, BusType::new("Type2", "Color1"));
        let j1 = inst.bus(BusId(1)).unwrap();
        assert_eq!(j1.proc_times, vec![8, 30, 34, 42]);
    }

    #[test]
    fn builtin_matrix_entries() {
        let inst = builtin_instance();
        let t2c1 = BusType::new("Type2", "Color1");
        let t2c2 = BusType::new("Type2", "Color2");
        assert_eq!(inst.setup.cost_between(&t2c1, &t2c2), Ok(8));
    }

    #[test]
    fn builtin_validates_clean() {
        assert!(validate_instance(&builtin_instance()).is_empty());
        assert!(validate_instance(&builtin_factors_instance()).is_empty());
    }

    #[test]
    fn builtin_fleet_covers_only_matrix_types() {
        let inst = builtin_instance();
        let declared: BTreeSet<BusType> = BUILTIN_MATRIX_TYPES
            .iter()
            .map(|&(m, c)| BusType::new(m, c))
            .collect();
        assert_eq!(declared.len(), 5);
        for bus in &inst.buses {
            assert!(declared.contains(&bus.bus_type), "{} has off-table type", bus.id);
        }
    }

    #[test]
    fn roundtrip_builtin() {
        let inst = builtin_instance();
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);

        let inst = builtin_factors_instance();
        let back = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn parse_empty_fleet_is_valid() {
        let text = r#"{
            "stages": [1, 1],
            "buffer": { "after_stage": 1, "rows": 1, "cols": 1 },
            "buses": [],
            "setup": { "mode": "matrix", "applies_to_stages": [2], "matrix": {} }
        }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.bus_count(), 0);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn parse_rejects_missing_proc_time() {
        let mut inst = builtin_instance();
        inst.buses[0].proc_times.pop();
        let err = parse_instance(&serialize_instance(&inst)).unwrap_err();
        assert!(matches!(err, ParseError::ProcTimeArity { id: 1, expected: 4, found: 3 }));
        assert!(err.to_string().contains("missing processing time"));
    }

    #[test]
    fn parse_rejects_unknown_label() {
        let mut inst = builtin_instance();
        inst.buses[0].bus_type = BusType::new("Type9", "Color1");
        let err = parse_instance(&serialize_instance(&inst)).unwrap_err();
        assert!(matches!(err, ParseError::UnknownLabel { id: 1, .. }));
    }

    #[test]
    fn parse_reports_json_locus() {
        let err = parse_instance("{\n  \"stages\": [1,\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "expected a locus in {msg:?}");
    }

    #[test]
    fn validate_flags_asymmetry() {
        let mut inst = builtin_instance();
        if let SetupRule::Matrix(rows) = &mut inst.setup.rule {
            let a = BusType::new("Type1", "Color1");
            let b = BusType::new("Type2", "Color1");
            *rows.get_mut(&a).unwrap().get_mut(&b).unwrap() = 7;
        }
        let report = validate_instance(&inst);
        let hits: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.kind == ViolationKind::Asymmetry)
            .collect();
        assert_eq!(hits.len(), 2, "both orientations report the mismatch");
        assert!(hits[0].message.contains("Type1|Color1"));
        assert!(hits[0].message.contains("Type2|Color1"));
    }

    #[test]
    fn validate_flags_buffer_after_last_stage() {
        let mut inst = builtin_instance();
        inst.buffer.after_stage = inst.stage_count();
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Bounds));
    }

    #[test]
    fn validate_flags_nonzero_diagonal_and_missing_pair() {
        let mut inst = builtin_instance();
        if let SetupRule::Matrix(rows) = &mut inst.setup.rule {
            let a = BusType::new("Type1", "Color1");
            *rows.get_mut(&a).unwrap().get_mut(&a).unwrap() = 3;
            // Drop both orientations of one off-diagonal pair.
            let b = BusType::new("Type2", "Color1");
            rows.get_mut(&a).unwrap().remove(&b);
            rows.get_mut(&b).unwrap().remove(&a);
        }
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::NonzeroDiagonal));
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::MissingPair));
    }

    #[test]
    fn factors_cost_sums_changed_properties() {
        let inst = builtin_factors_instance();
        let a = BusType::new("Type1", "Color1");
        let b = BusType::new("Type2", "Color2");
        assert_eq!(inst.setup.cost_between(&a, &b), Ok(23));
        // Only the color changes here.
        let c = BusType::new("Type1", "Color3");
        assert_eq!(inst.setup.cost_between(&a, &c), Ok(17));
        assert_eq!(inst.setup.cost_between(&a, &a), Ok(0));
    }
}
