//! File formats and canonical report emission.
//!
//! All scalars travel as exact strings ("3/2", "-1", "2"); matrices are
//! arrays of row arrays. Simplices are keyed by their sorted vertex names
//! joined with commas; structure maps are keyed "face|coface". Reports use
//! ordered maps throughout, so emission is byte-stable across runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisheaf::{Bisheaf, ComponentReport, LocalSystem, MonodromyReport};
use crate::cellsheaf::{CellCosheaf, CellSheaf};
use crate::etale::EtaleOpen;
use crate::exactlin::Matrix;
use crate::field::Field;
use crate::simplicial::{
    ComplexError, Orientation, Simplex, SimplicialComplex, SimplicialMap, SimplicialPair,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    File(#[from] std::io::Error),
    #[error("complex error: {0}")]
    Complex(#[from] ComplexError),
    #[error("scalar parse error: {0}")]
    Scalar(#[from] crate::field::ScalarParseError),
    #[error("format error: {0}")]
    Format(String),
    #[error("field tag mismatch: file says {file}, run uses {run}")]
    FieldMismatch { file: String, run: String },
}

// ---------------------------------------------------------------------------
// file schemas

/// Complex file: the declared vertex universe (its order fixes the vertex
/// order), maximal simplices, and an optional ideal frontier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexFile {
    pub vertices: Vec<String>,
    pub maximal: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub vertex_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientationFile {
    pub signs: BTreeMap<String, i8>,
}

/// Sheaf or cosheaf data: stalk dimensions keyed by simplex, matrices keyed
/// "face|coface". The direction convention is the type's: sheaf matrices map
/// the face value to the coface value, cosheaf matrices the other way.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctorFile {
    pub dims: BTreeMap<String, usize>,
    pub maps: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisheafFile {
    pub field: String,
    pub complex: ComplexFile,
    pub sheaf: FunctorFile,
    pub cosheaf: FunctorFile,
    pub vertical: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaleFile {
    #[serde(rename = "L")]
    pub l: ComplexFile,
    #[serde(rename = "L0")]
    pub l0: Vec<String>,
    pub psi: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementFile {
    pub complex: ComplexFile,
    pub to_target: BTreeMap<String, String>,
    pub to_dilated: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessFile {
    pub assign: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementFile>,
}

// ---------------------------------------------------------------------------
// complexes, pairs, maps

pub fn complex_to_file(pair: &SimplicialPair) -> ComplexFile {
    let k = &pair.complex;
    // list every simplex as maximal; closure reconstruction dedups
    let maximal: Vec<Vec<String>> = k
        .simplices()
        .filter(|s| k.cofacets(s).is_empty())
        .map(|s| {
            s.vertices()
                .iter()
                .map(|&v| k.vertex_name(v).to_owned())
                .collect()
        })
        .collect();
    ComplexFile {
        vertices: k.vertex_names().to_vec(),
        maximal,
        boundary: pair.boundary.iter().map(|s| k.simplex_key(s)).collect(),
    }
}

pub fn pair_from_file(file: &ComplexFile) -> Result<SimplicialPair, IoError> {
    let complex = SimplicialComplex::build(file.vertices.clone(), &file.maximal)?;
    let mut boundary = BTreeSet::new();
    for key in &file.boundary {
        boundary.insert(complex.simplex_from_key(key)?);
    }
    Ok(SimplicialPair::new(complex, boundary)?)
}

pub fn map_from_file(
    file: &MapFile,
    source: &SimplicialPair,
    target: &SimplicialPair,
) -> Result<SimplicialMap, IoError> {
    Ok(SimplicialMap::from_names(
        source.complex.clone(),
        target.complex.clone(),
        &file.vertex_map,
    )?)
}

pub fn map_to_file(map: &SimplicialMap) -> MapFile {
    let vertex_map = map
        .vertex_entries()
        .map(|(v, w)| {
            (
                map.source.vertex_name(v).to_owned(),
                map.target.vertex_name(w).to_owned(),
            )
        })
        .collect();
    MapFile { vertex_map }
}

pub fn orientation_from_file(
    file: &OrientationFile,
    pair: &SimplicialPair,
) -> Result<Orientation, IoError> {
    let mut signs = BTreeMap::new();
    for (key, &sign) in &file.signs {
        signs.insert(pair.complex.simplex_from_key(key)?, sign);
    }
    Ok(Orientation { signs })
}

pub fn orientation_to_file(o: &Orientation, pair: &SimplicialPair) -> OrientationFile {
    OrientationFile {
        signs: o
            .signs
            .iter()
            .map(|(s, &sign)| (pair.complex.simplex_key(s), sign))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// matrices and functors

pub fn matrix_to_rows<S: Field>(m: &Matrix<S>) -> Vec<Vec<String>> {
    m.render_rows()
}

pub fn matrix_from_rows<S: Field>(
    rows: &[Vec<String>],
    expected: (usize, usize),
) -> Result<Matrix<S>, IoError> {
    let (r, c) = expected;
    if rows.len() != r {
        return Err(IoError::Format(format!(
            "matrix has {} rows, expected {r}",
            rows.len()
        )));
    }
    let mut data = Vec::with_capacity(r * c);
    for row in rows {
        if row.len() != c {
            return Err(IoError::Format(format!(
                "matrix row has {} entries, expected {c}",
                row.len()
            )));
        }
        for entry in row {
            data.push(S::parse(entry)?);
        }
    }
    Ok(Matrix::new(r, c, data))
}

fn cover_key(pair: &SimplicialPair, s: &Simplex, t: &Simplex) -> String {
    format!(
        "{}|{}",
        pair.complex.simplex_key(s),
        pair.complex.simplex_key(t)
    )
}

fn parse_cover_key(
    pair: &SimplicialPair,
    key: &str,
) -> Result<(Simplex, Simplex), IoError> {
    let (face, coface) = key
        .split_once('|')
        .ok_or_else(|| IoError::Format(format!("map key {key:?} lacks a '|'")))?;
    Ok((
        pair.complex.simplex_from_key(face)?,
        pair.complex.simplex_from_key(coface)?,
    ))
}

pub fn sheaf_to_file<S: Field>(sheaf: &CellSheaf<S>) -> FunctorFile {
    let pair = &sheaf.base;
    FunctorFile {
        dims: sheaf
            .dims()
            .iter()
            .map(|(s, &d)| (pair.complex.simplex_key(s), d))
            .collect(),
        maps: sheaf
            .restrictions()
            .iter()
            .map(|((s, t), m)| (cover_key(pair, s, t), matrix_to_rows(m)))
            .collect(),
    }
}

pub fn sheaf_from_file<S: Field>(
    file: &FunctorFile,
    pair: &SimplicialPair,
) -> Result<CellSheaf<S>, IoError> {
    let mut dims = BTreeMap::new();
    for (key, &d) in &file.dims {
        dims.insert(pair.complex.simplex_from_key(key)?, d);
    }
    let mut restrict = BTreeMap::new();
    for (key, rows) in &file.maps {
        let (s, t) = parse_cover_key(pair, key)?;
        let expected = (
            *dims
                .get(&t)
                .ok_or_else(|| IoError::Format(format!("no dim for coface in {key:?}")))?,
            *dims
                .get(&s)
                .ok_or_else(|| IoError::Format(format!("no dim for face in {key:?}")))?,
        );
        restrict.insert((s, t), matrix_from_rows(rows, expected)?);
    }
    Ok(CellSheaf::new(pair.clone(), dims, restrict))
}

pub fn cosheaf_to_file<S: Field>(cosheaf: &CellCosheaf<S>) -> FunctorFile {
    let pair = &cosheaf.base;
    FunctorFile {
        dims: cosheaf
            .dims()
            .iter()
            .map(|(s, &d)| (pair.complex.simplex_key(s), d))
            .collect(),
        maps: cosheaf
            .extensions()
            .iter()
            .map(|((s, t), m)| (cover_key(pair, s, t), matrix_to_rows(m)))
            .collect(),
    }
}

pub fn cosheaf_from_file<S: Field>(
    file: &FunctorFile,
    pair: &SimplicialPair,
) -> Result<CellCosheaf<S>, IoError> {
    let mut dims = BTreeMap::new();
    for (key, &d) in &file.dims {
        dims.insert(pair.complex.simplex_from_key(key)?, d);
    }
    let mut extend = BTreeMap::new();
    for (key, rows) in &file.maps {
        let (s, t) = parse_cover_key(pair, key)?;
        let expected = (
            *dims
                .get(&s)
                .ok_or_else(|| IoError::Format(format!("no dim for face in {key:?}")))?,
            *dims
                .get(&t)
                .ok_or_else(|| IoError::Format(format!("no dim for coface in {key:?}")))?,
        );
        extend.insert((s, t), matrix_from_rows(rows, expected)?);
    }
    Ok(CellCosheaf::new(pair.clone(), dims, extend))
}

pub fn bisheaf_to_file<S: Field>(bisheaf: &Bisheaf<S>) -> BisheafFile {
    let pair = bisheaf.base();
    BisheafFile {
        field: S::field_tag(),
        complex: complex_to_file(pair),
        sheaf: sheaf_to_file(&bisheaf.sheaf),
        cosheaf: cosheaf_to_file(&bisheaf.cosheaf),
        vertical: bisheaf
            .vertical
            .iter()
            .map(|(s, m)| (pair.complex.simplex_key(s), matrix_to_rows(m)))
            .collect(),
    }
}

pub fn bisheaf_from_file<S: Field>(file: &BisheafFile) -> Result<Bisheaf<S>, IoError> {
    if file.field != S::field_tag() {
        return Err(IoError::FieldMismatch {
            file: file.field.clone(),
            run: S::field_tag(),
        });
    }
    let pair = pair_from_file(&file.complex)?;
    let sheaf = sheaf_from_file(&file.sheaf, &pair)?;
    let cosheaf = cosheaf_from_file(&file.cosheaf, &pair)?;
    let mut vertical = BTreeMap::new();
    for (key, rows) in &file.vertical {
        let s = pair.complex.simplex_from_key(key)?;
        let expected = (cosheaf.dim(&s), sheaf.dim(&s));
        vertical.insert(s, matrix_from_rows(rows, expected)?);
    }
    Ok(Bisheaf {
        sheaf,
        cosheaf,
        vertical,
    })
}

// ---------------------------------------------------------------------------
// étale opens

pub fn etale_to_file(open: &EtaleOpen) -> EtaleFile {
    let l = &open.pair.complex;
    EtaleFile {
        l: ComplexFile {
            vertices: l.vertex_names().to_vec(),
            maximal: l
                .simplices()
                .filter(|s| l.cofacets(s).is_empty())
                .map(|s| {
                    s.vertices()
                        .iter()
                        .map(|&v| l.vertex_name(v).to_owned())
                        .collect()
                })
                .collect(),
            boundary: Vec::new(),
        },
        l0: open.pair.boundary.iter().map(|s| l.simplex_key(s)).collect(),
        psi: open
            .psi
            .vertex_entries()
            .map(|(v, w)| {
                (
                    l.vertex_name(v).to_owned(),
                    open.base.complex.vertex_name(w).to_owned(),
                )
            })
            .collect(),
    }
}

pub fn etale_from_file(file: &EtaleFile, base: &SimplicialPair) -> Result<EtaleOpen, IoError> {
    let complex = SimplicialComplex::build(file.l.vertices.clone(), &file.l.maximal)?;
    let mut boundary = BTreeSet::new();
    for key in &file.l0 {
        boundary.insert(complex.simplex_from_key(key)?);
    }
    let pair = SimplicialPair::new(complex.clone(), boundary)?;
    let psi = SimplicialMap::from_names(complex, base.complex.clone(), &file.psi)?;
    EtaleOpen::new(pair, psi, base.clone())
        .map_err(|e| IoError::Format(format!("étale open invalid: {e}")))
}

// ---------------------------------------------------------------------------
// reports

/// Local-system report: explicit stalks per component, one matrix per
/// independent loop with its conjugacy invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalSystemReport {
    pub components: Vec<ComponentReportFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentReportFile {
    pub root: String,
    pub simplex_count: usize,
    pub stalk_dim: usize,
    pub loops: Vec<LoopReportFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopReportFile {
    pub edge: (String, String),
    pub matrix: Vec<Vec<String>>,
    pub trace: String,
    pub determinant: String,
    pub rank_minus_identity: usize,
}

pub fn local_system_report<S: Field>(
    ls: &LocalSystem<S>,
    report: &MonodromyReport<S>,
) -> LocalSystemReport {
    let complex = &ls.base.complex;
    let component_file = |c: &ComponentReport<S>| ComponentReportFile {
        root: complex.simplex_key(&c.root),
        simplex_count: c.simplex_count,
        stalk_dim: c.stalk_dim,
        loops: c
            .loops
            .iter()
            .map(|l| LoopReportFile {
                edge: (
                    complex.simplex_key(&l.edge.0),
                    complex.simplex_key(&l.edge.1),
                ),
                matrix: matrix_to_rows(&l.matrix),
                trace: l.trace.render(),
                determinant: l.determinant.render(),
                rank_minus_identity: l.rank_minus_identity,
            })
            .collect(),
    };
    LocalSystemReport {
        components: report.components.iter().map(component_file).collect(),
    }
}

/// Canonical JSON emission: sorted keys (ordered maps throughout), pretty
/// printed, trailing newline; byte-stable across runs.
pub fn emit_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut out = serde_json::to_string_pretty(value)?;
    out.push('\n');
    Ok(out)
}

pub fn read_json<T: for<'a> Deserialize<'a>>(path: &std::path::Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), IoError> {
    std::fs::write(path, emit_json(value)?)?;
    Ok(())
}
