//! CSV readers and writers for datasets, measures, grid functions, plans,
//! duals and identified potentials.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces the exact values and repeated runs give identical
//! bytes.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::conjugate::GridFunction;
use crate::error::{Error, Result};
use crate::identify::{ForwardMap, IdentifiedPotential};
use crate::measures::{DiscreteMeasure, MarketDataset};
use crate::ot::{DualPair, PlanEntry, TransportPlan};

/// Header names `prefix_1..prefix_d`.
fn numbered(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |k| format!("{prefix}_{k}"))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_rows<W: Write>(out: W, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header and numeric body of a CSV table.
fn read_table<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: cannot parse {f:?} as a number", line + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, header has {}", line + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn columns(rows: &[Vec<f64>], cols: std::ops::Range<usize>) -> Array2<f64> {
    let w = cols.len();
    let flat: Vec<f64> = rows.iter().flat_map(|r| r[cols.clone()].iter().copied()).collect();
    Array2::from_shape_vec((rows.len(), w), flat).expect("rectangular")
}

fn count_prefix(header: &[String], prefix: &str) -> usize {
    header.iter().filter(|h| h.starts_with(prefix)).count()
}

fn expect_header(header: &[String], expected: &[String]) -> Result<()> {
    if header != expected {
        return Err(Error::Parse(format!("unexpected header {header:?}, expected {expected:?}")));
    }
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    Ok(File::create(path)?)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_dataset<W: Write>(out: W, data: &MarketDataset) -> Result<()> {
    let mut header: Vec<String> = numbered("x", data.dx()).collect();
    header.extend(numbered("z", data.dz()));
    header.push("p".into());
    let rows = (0..data.len()).map(|i| {
        data.x().row(i).iter().chain(data.z().row(i).iter()).chain(std::iter::once(&data.prices()[i])).map(|v| fmt(*v)).collect()
    });
    write_rows(out, &header, rows)
}

pub fn read_dataset<R: Read>(input: R) -> Result<MarketDataset> {
    let (header, rows) = read_table(input)?;
    let dx = count_prefix(&header, "x_");
    let dz = count_prefix(&header, "z_");
    let mut expected: Vec<String> = numbered("x", dx).collect();
    expected.extend(numbered("z", dz));
    expected.push("p".into());
    expect_header(&header, &expected)?;
    let x = columns(&rows, 0..dx);
    let z = columns(&rows, dx..dx + dz);
    let p = Array1::from_iter(rows.iter().map(|r| r[dx + dz]));
    MarketDataset::new(x, z, p)
}

pub fn write_measure<W: Write>(out: W, m: &DiscreteMeasure) -> Result<()> {
    let mut header = vec!["w".to_string()];
    header.extend(numbered("c", m.dim()));
    let rows = (0..m.len()).map(|i| std::iter::once(m.weights()[i]).chain(m.point(i).iter().copied()).map(fmt).collect());
    write_rows(out, &header, rows)
}

pub fn read_measure<R: Read>(input: R) -> Result<DiscreteMeasure> {
    let (header, rows) = read_table(input)?;
    let d = count_prefix(&header, "c_");
    let mut expected = vec!["w".to_string()];
    expected.extend(numbered("c", d));
    expect_header(&header, &expected)?;
    let w = Array1::from_iter(rows.iter().map(|r| r[0]));
    DiscreteMeasure::from_samples(columns(&rows, 1..d + 1), Some(w))
}

pub fn write_grid_function<W: Write>(out: W, g: &GridFunction) -> Result<()> {
    let mut header: Vec<String> = numbered("c", g.points.ncols()).collect();
    header.push("value".into());
    let rows = (0..g.len()).map(|i| g.points.row(i).iter().chain(std::iter::once(&g.values[i])).map(|v| fmt(*v)).collect());
    write_rows(out, &header, rows)
}

pub fn read_grid_function<R: Read>(input: R) -> Result<GridFunction> {
    let (header, rows) = read_table(input)?;
    let d = count_prefix(&header, "c_");
    let mut expected: Vec<String> = numbered("c", d).collect();
    expected.push("value".into());
    expect_header(&header, &expected)?;
    GridFunction::new(columns(&rows, 0..d), Array1::from_iter(rows.iter().map(|r| r[d])))
}

pub fn write_plan<W: Write>(out: W, plan: &TransportPlan) -> Result<()> {
    let header = ["i", "j", "mass"].map(String::from);
    let rows = plan.entries().iter().map(|e| vec![e.source.to_string(), e.target.to_string(), fmt(e.mass)]);
    write_rows(out, &header, rows)
}

fn index(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Parse(format!("{what} index {v} is not a non-negative integer")))
    }
}

/// Plan triplets as written by [`write_plan`].
pub fn read_plan<R: Read>(input: R) -> Result<Vec<PlanEntry>> {
    let (header, rows) = read_table(input)?;
    expect_header(&header, &["i", "j", "mass"].map(String::from))?;
    rows.iter()
        .map(|r| Ok(PlanEntry { source: index(r[0], "source")?, target: index(r[1], "target")?, mass: r[2] }))
        .collect()
}

pub fn write_vector<W: Write>(out: W, v: &Array1<f64>) -> Result<()> {
    let header = ["idx", "value"].map(String::from);
    write_rows(out, &header, v.iter().enumerate().map(|(i, x)| vec![i.to_string(), fmt(*x)]))
}

pub fn read_vector<R: Read>(input: R) -> Result<Array1<f64>> {
    let (header, rows) = read_table(input)?;
    expect_header(&header, &["idx", "value"].map(String::from))?;
    let mut out = vec![f64::NAN; rows.len()];
    for r in &rows {
        let i = index(r[0], "vector")?;
        if i >= out.len() {
            return Err(Error::Parse(format!("vector index {i} out of range")));
        }
        out[i] = r[1];
    }
    if out.iter().any(|v| v.is_nan()) {
        return Err(Error::Parse("vector indices are not a permutation of 0..n".into()));
    }
    Ok(Array1::from(out))
}

pub fn write_potential<W: Write>(out: W, p: &IdentifiedPotential) -> Result<()> {
    let d = p.z_points.ncols();
    let mut header: Vec<String> = numbered("z", d).collect();
    header.push("v".into());
    header.extend(numbered("eps", d));
    header.extend(numbered("ubar_grad", d));
    let rows = (0..p.z_points.nrows()).map(|i| {
        p.z_points
            .row(i)
            .iter()
            .chain(std::iter::once(&p.v_values[i]))
            .chain(p.inverse_demand.row(i).iter())
            .chain(p.u_bar_grad.row(i).iter())
            .map(|v| fmt(*v))
            .collect()
    });
    write_rows(out, &header, rows)
}

/// Forward map rows `eps_1..eps_d, h_1..h_d`.
pub fn write_forward_map<W: Write>(out: W, m: &ForwardMap) -> Result<()> {
    let d = m.eps_points.ncols();
    let mut header: Vec<String> = numbered("eps", d).collect();
    header.extend(numbered("h", m.h.ncols()));
    let rows = (0..m.eps_points.nrows()).map(|i| m.eps_points.row(i).iter().chain(m.h.row(i).iter()).map(|v| fmt(*v)).collect());
    write_rows(out, &header, rows)
}

pub fn save_forward_map(path: &Path, m: &ForwardMap) -> Result<()> {
    write_forward_map(create(path)?, m)
}

pub fn save_dataset(path: &Path, data: &MarketDataset) -> Result<()> {
    write_dataset(create(path)?, data)
}

pub fn load_dataset(path: &Path) -> Result<MarketDataset> {
    read_dataset(open(path)?)
}

pub fn save_measure(path: &Path, m: &DiscreteMeasure) -> Result<()> {
    write_measure(create(path)?, m)
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure> {
    read_measure(open(path)?)
}

pub fn save_grid_function(path: &Path, g: &GridFunction) -> Result<()> {
    write_grid_function(create(path)?, g)
}

pub fn load_grid_function(path: &Path) -> Result<GridFunction> {
    read_grid_function(open(path)?)
}

pub fn save_plan(path: &Path, plan: &TransportPlan) -> Result<()> {
    write_plan(create(path)?, plan)
}

pub fn load_plan(path: &Path) -> Result<Vec<PlanEntry>> {
    read_plan(open(path)?)
}

/// Writes `w_source` and `v_target` to `<stem>_w.csv` and `<stem>_v.csv`.
pub fn save_duals(dir: &Path, stem: &str, duals: &DualPair) -> Result<()> {
    write_vector(create(&dir.join(format!("{stem}_w.csv")))?, &duals.w_source)?;
    write_vector(create(&dir.join(format!("{stem}_v.csv")))?, &duals.v_target)
}

pub fn load_vector(path: &Path) -> Result<Array1<f64>> {
    read_vector(open(path)?)
}

pub fn save_potential(path: &Path, p: &IdentifiedPotential) -> Result<()> {
    write_potential(create(path)?, p)
}

/// Pretty JSON with a trailing newline.
pub fn save_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
