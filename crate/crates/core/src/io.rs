//! File formats: mesh and model JSON, survey and observation CSV, inversion results.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ModelVector;
use crate::inversion::GnReport;
use crate::mesh::{Mesh, MeshFile};
use crate::survey::{ElectrodeConfig, Survey};

pub fn write_mesh<W: Write>(w: W, mesh: &Mesh) -> Result<()> {
    serde_json::to_writer(w, &MeshFile::from(mesh))?;
    Ok(())
}

pub fn read_mesh<R: Read>(r: R) -> Result<Mesh> {
    let f: MeshFile = serde_json::from_reader(r)?;
    Mesh::try_from(f)
}

pub fn write_model<W: Write>(w: W, m: &ModelVector) -> Result<()> {
    serde_json::to_writer(w, m)?;
    Ok(())
}

pub fn read_model<R: Read>(r: R) -> Result<ModelVector> {
    let m: ModelVector = serde_json::from_reader(r)?;
    ModelVector::new(m.m)
}

#[derive(Debug, Serialize, Deserialize)]
struct ObservationRow {
    index: usize,
    g_obs: f64,
}

pub fn write_observations<W: Write>(w: W, g: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (index, &g_obs) in g.iter().enumerate() {
        out.serialize(ObservationRow { index, g_obs })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_observations<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut g = Vec::new();
    for (i, row) in rdr.deserialize::<ObservationRow>().enumerate() {
        let row = row?;
        if row.index != i {
            return Err(Error::Parameter(format!("observation row {i} has index {}", row.index)));
        }
        g.push(row.g_obs);
    }
    Ok(g)
}

#[derive(Debug, Serialize, Deserialize)]
struct SurveyRow {
    index: usize,
    #[serde(rename = "iA")]
    a: usize,
    #[serde(rename = "iB")]
    b: i64,
    #[serde(rename = "iM")]
    m: usize,
    #[serde(rename = "iN")]
    n: usize,
    k: f64,
}

/// Survey CSV; `iB = -1` is the electrode at infinity.
pub fn write_survey<W: Write>(w: W, survey: &Survey) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (index, c) in survey.configs().iter().enumerate() {
        out.serialize(SurveyRow { index, a: c.a, b: c.b.map_or(-1, |b| b as i64), m: c.m, n: c.n, k: c.k })?;
    }
    out.flush()?;
    Ok(())
}

/// Reads configurations; electrode coordinates come from `positions`.
pub fn read_survey<R: Read>(r: R, positions: Vec<[f64; 2]>) -> Result<Survey> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut configs = Vec::new();
    for (i, row) in rdr.deserialize::<SurveyRow>().enumerate() {
        let row = row?;
        if row.index != i {
            return Err(Error::Parameter(format!("survey row {i} has index {}", row.index)));
        }
        let b = match row.b {
            -1 => None,
            b if b >= 0 => Some(b as usize),
            b => return Err(Error::Parameter(format!("survey row {i}: invalid iB {b}"))),
        };
        configs.push(ElectrodeConfig { a: row.a, b, m: row.m, n: row.n, k: row.k });
    }
    Survey::new(positions, configs)
}

/// Inversion result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub m: Vec<f64>,
    pub report: GnReport,
}

pub fn write_result<W: Write>(w: W, m: &ModelVector, report: &GnReport) -> Result<()> {
    serde_json::to_writer_pretty(w, &ResultFile { m: m.m.clone(), report: report.clone() })?;
    Ok(())
}

pub fn read_result<R: Read>(r: R) -> Result<ResultFile> {
    Ok(serde_json::from_reader(r)?)
}

/// One row of the per-step report table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub nele: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub step: usize,
    pub n_iter: Option<usize>,
    #[serde(rename = "t_H")]
    pub t_h: f64,
    #[serde(rename = "t_C")]
    pub t_c: f64,
    pub t_chol: f64,
    pub t_norm: f64,
}

pub fn report_rows(nele: usize, n_cells: usize, n_meas: usize, report: &GnReport) -> Vec<ReportRow> {
    report
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| ReportRow {
            nele,
            n: n_cells,
            m: n_meas,
            step: i + 1,
            n_iter: s.minres_iters,
            t_h: s.t_h,
            t_c: s.t_c,
            t_chol: s.t_chol,
            t_norm: s.t_norm,
        })
        .collect()
}

pub fn write_report_rows<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}
