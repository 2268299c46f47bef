//! CSV and JSON file formats.
//!
//! Inputs: `supplier_id,customer_id` edge lists, `firm_id,region,sector`
//! firm tables and `region,gdp_usd,population,imports_usd,exports_usd`
//! macro tables. Floating point values are written with 17 significant
//! digits so every write/read round trip is exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::Direction;
use crate::error::{Error, Result};
use crate::matrix::{ExposureMatrix, MatrixKind};

pub const EDGE_HEADER: [&str; 2] = ["supplier_id", "customer_id"];
pub const FIRM_HEADER: [&str; 3] = ["firm_id", "region", "sector"];
pub const MACRO_HEADER: [&str; 5] = [
    "region",
    "gdp_usd",
    "population",
    "imports_usd",
    "exports_usd",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Formats a double with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a headed CSV whose header must start with `required` and may
/// contain the `optional` columns after that. Every row is checked against
/// the header width; all malformed rows are reported together.
fn read_table(
    path: &Path,
    required: &[&str],
    optional: &[&str],
) -> Result<Vec<(u64, Vec<String>)>> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(data.as_slice());
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(parse_error(path, 1, "missing header")),
        Some(r) => r.map_err(|e| parse_error(path, 1, e.to_string()))?,
    };
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    let expected_ok = header.len() >= required.len()
        && header.len() <= required.len() + optional.len()
        && header[..required.len()] == *required
        && header[required.len()..] == optional[..header.len() - required.len()];
    if !expected_ok {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                required
                    .iter()
                    .chain(optional)
                    .copied()
                    .collect::<Vec<_>>()
                    .join(","),
                header.join(",")
            ),
        ));
    }
    let width = header.len();
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if rec.len() != width {
            problems.push((
                line,
                format!("expected {width} columns, found {}", rec.len()),
            ));
            continue;
        }
        rows.push((line, rec.iter().map(|f| f.trim().to_string()).collect()));
    }
    if let Some(&(first, _)) = problems.first() {
        let detail: Vec<String> = problems
            .iter()
            .map(|(l, m)| format!("line {l}: {m}"))
            .collect();
        return Err(parse_error(
            path,
            first,
            format!("{} malformed rows ({})", problems.len(), detail.join("; ")),
        ));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 2, "no data rows"));
    }
    Ok(rows)
}

/// Reads a `supplier_id,customer_id` edge list in file order.
pub fn read_edges(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    read_table(path, &EDGE_HEADER, &[])?
        .into_iter()
        .map(|(line, mut f)| {
            if f[0].is_empty() || f[1].is_empty() {
                return Err(parse_error(path, line, "empty firm id"));
            }
            let customer = f.pop().unwrap();
            let supplier = f.pop().unwrap();
            Ok((supplier, customer))
        })
        .collect()
}

pub fn edges_to_csv(edges: &[(String, String)]) -> String {
    let mut out = String::from("supplier_id,customer_id\n");
    for (s, c) in edges {
        out.push_str(&format!("{s},{c}\n"));
    }
    out
}

pub fn write_edges(path: impl AsRef<Path>, edges: &[(String, String)]) -> Result<()> {
    write_atomic(path, edges_to_csv(edges).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirmRecord {
    pub firm_id: String,
    pub region: String,
    pub sector: Option<String>,
}

/// Firm metadata sorted by firm id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FirmTable {
    pub records: Vec<FirmRecord>,
}

impl FirmTable {
    pub fn new(mut records: Vec<FirmRecord>) -> Result<Self> {
        records.sort_by(|a, b| a.firm_id.cmp(&b.firm_id));
        if let Some(w) = records.windows(2).find(|w| w[0].firm_id == w[1].firm_id) {
            return Err(Error::DuplicateFirm(w[0].firm_id.clone()));
        }
        Ok(FirmTable { records })
    }

    /// Firm id → region label.
    pub fn region_map(&self) -> BTreeMap<String, String> {
        self.records
            .iter()
            .map(|r| (r.firm_id.clone(), r.region.clone()))
            .collect()
    }
}

pub fn read_firms(path: impl AsRef<Path>) -> Result<FirmTable> {
    let path = path.as_ref();
    let mut seen = BTreeMap::new();
    let mut records = Vec::new();
    for (line, f) in read_table(path, &FIRM_HEADER[..2], &FIRM_HEADER[2..])? {
        if f[0].is_empty() {
            return Err(parse_error(path, line, "empty firm id"));
        }
        if f[1].is_empty() {
            return Err(parse_error(
                path,
                line,
                format!("firm `{}` has no region", f[0]),
            ));
        }
        if let Some(prev) = seen.insert(f[0].clone(), line) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate firm id `{}` (first on line {prev})", f[0]),
            ));
        }
        records.push(FirmRecord {
            firm_id: f[0].clone(),
            region: f[1].clone(),
            sector: f.get(2).filter(|s| !s.is_empty()).cloned(),
        });
    }
    FirmTable::new(records)
}

pub fn firms_to_csv(table: &FirmTable) -> String {
    let mut out = String::from("firm_id,region,sector\n");
    for r in &table.records {
        out.push_str(&format!(
            "{},{},{}\n",
            r.firm_id,
            r.region,
            r.sector.as_deref().unwrap_or("")
        ));
    }
    out
}

pub fn write_firms(path: impl AsRef<Path>, table: &FirmTable) -> Result<()> {
    write_atomic(path, firms_to_csv(table).as_bytes())
}

/// Macro variables of one region, in current USD and persons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroRecord {
    pub gdp_usd: f64,
    pub population: f64,
    pub imports_usd: f64,
    pub exports_usd: f64,
}

impl MacroRecord {
    pub fn gdp_per_capita(&self) -> f64 {
        self.gdp_usd / self.population
    }

    pub fn imports_per_capita(&self) -> f64 {
        self.imports_usd / self.population
    }

    pub fn exports_per_capita(&self) -> f64 {
        self.exports_usd / self.population
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MacroTable {
    pub regions: BTreeMap<String, MacroRecord>,
}

impl MacroTable {
    pub fn get(&self, region: &str) -> Option<&MacroRecord> {
        self.regions.get(region)
    }

    /// Records for `regions` in that order, or the list of missing labels.
    pub fn select(&self, regions: &[String]) -> Result<Vec<MacroRecord>> {
        let missing: Vec<String> = regions
            .iter()
            .filter(|r| !self.regions.contains_key(*r))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingMacro(missing));
        }
        Ok(regions.iter().map(|r| self.regions[r]).collect())
    }

    pub fn gdp_per_capita(&self) -> BTreeMap<String, f64> {
        self.regions
            .iter()
            .map(|(k, v)| (k.clone(), v.gdp_per_capita()))
            .collect()
    }
}

pub fn read_macro(path: impl AsRef<Path>) -> Result<MacroTable> {
    let path = path.as_ref();
    let mut table = MacroTable::default();
    for (line, f) in read_table(path, &MACRO_HEADER, &[])? {
        let mut nums = [0.0f64; 4];
        for (k, slot) in nums.iter_mut().enumerate() {
            let raw = &f[k + 1];
            *slot = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_error(
                        path,
                        line,
                        format!("`{}` is not a number: `{raw}`", MACRO_HEADER[k + 1]),
                    )
                })?;
        }
        let [gdp_usd, population, imports_usd, exports_usd] = nums;
        if population <= 0.0 {
            return Err(parse_error(
                path,
                line,
                format!("region `{}` has non-positive population", f[0]),
            ));
        }
        let rec = MacroRecord {
            gdp_usd,
            population,
            imports_usd,
            exports_usd,
        };
        if table.regions.insert(f[0].clone(), rec).is_some() {
            return Err(parse_error(
                path,
                line,
                format!("duplicate region `{}`", f[0]),
            ));
        }
    }
    Ok(table)
}

pub fn macro_to_csv(table: &MacroTable) -> String {
    let mut out = MACRO_HEADER.join(",");
    out.push('\n');
    for (region, r) in &table.regions {
        out.push_str(&format!(
            "{region},{},{},{},{}\n",
            fmt_f64(r.gdp_usd),
            fmt_f64(r.population),
            fmt_f64(r.imports_usd),
            fmt_f64(r.exports_usd)
        ));
    }
    out
}

pub fn write_macro(path: impl AsRef<Path>, table: &MacroTable) -> Result<()> {
    write_atomic(path, macro_to_csv(table).as_bytes())
}

/// CSV grid: header of region labels, one row per origin region.
pub fn matrix_to_csv(m: &ExposureMatrix) -> Result<String> {
    if m.dim() == 0 {
        return Err(Error::InvalidInput("cannot write an empty matrix".into()));
    }
    let mut out = String::from("region");
    for l in m.labels() {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (c, label) in m.labels().iter().enumerate() {
        out.push_str(label);
        for &v in m.row(c) {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn matrix_to_json(m: &ExposureMatrix) -> Result<String> {
    if m.dim() == 0 {
        return Err(Error::InvalidInput("cannot write an empty matrix".into()));
    }
    let mut s = serde_json::to_string_pretty(m)?;
    s.push('\n');
    Ok(s)
}

pub fn render_matrix(m: &ExposureMatrix, format: Format) -> Result<String> {
    match format {
        Format::Csv => matrix_to_csv(m),
        Format::Json => matrix_to_json(m),
    }
}

pub fn write_matrix(m: &ExposureMatrix, path: impl AsRef<Path>, format: Format) -> Result<()> {
    write_atomic(path, render_matrix(m, format)?.as_bytes())
}

/// Reads a CSV matrix; the layout carries no kind or direction, so the
/// caller supplies them.
pub fn read_matrix_csv(
    path: impl AsRef<Path>,
    kind: MatrixKind,
    direction: Option<Direction>,
) -> Result<ExposureMatrix> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = data.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let labels: Vec<String> = header.split(',').skip(1).map(str::to_owned).collect();
    let mut values = Vec::with_capacity(labels.len() * labels.len());
    for (k, line) in lines.enumerate() {
        let lineno = k as u64 + 2;
        let mut cells = line.split(',');
        let label = cells.next().unwrap_or_default();
        if labels.get(k).map(String::as_str) != Some(label) {
            return Err(parse_error(
                path,
                lineno,
                format!("unexpected row label `{label}`"),
            ));
        }
        let row: Vec<f64> = cells
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| parse_error(path, lineno, format!("bad value `{c}`")))
            })
            .collect::<Result<_>>()?;
        if row.len() != labels.len() {
            return Err(parse_error(path, lineno, "wrong number of columns"));
        }
        values.extend(row);
    }
    ExposureMatrix::new(labels, values, kind, direction)
}

pub fn read_matrix_json(path: impl AsRef<Path>) -> Result<ExposureMatrix> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: ExposureMatrix = serde_json::from_str(&data)?;
    ExposureMatrix::new(
        m.labels().to_vec(),
        m.values().to_vec(),
        m.kind(),
        m.direction(),
    )
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Writes several files so that either all of them land or none does: every
/// file is staged next to its target first and renamed only once all staged
/// writes succeeded.
pub fn write_files_atomic(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut staged: Vec<PathBuf> = Vec::with_capacity(files.len());
    let cleanup = |staged: &[PathBuf]| {
        for t in staged {
            let _ = fs::remove_file(t);
        }
    };
    for (path, bytes) in files {
        let tmp = temp_sibling(path);
        let res = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()
        })();
        staged.push(tmp);
        if let Err(e) = res {
            cleanup(&staged);
            return Err(Error::io(path, e));
        }
    }
    for (i, ((path, _), tmp)) in files.iter().zip(&staged).enumerate() {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(&staged[i..]);
            return Err(Error::io(path, e));
        }
    }
    Ok(())
}

pub(crate) fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp"))
}

/// Hex SHA-256 of a file's contents.
pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&data);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
