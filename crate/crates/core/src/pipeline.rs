//! End-to-end runs behind the command line: read inputs, preprocess, run
//! cascades, aggregate, compute statistics and write everything out.
//!
//! Every command computes all of its outputs in memory first and then
//! writes them together with [`write_files_atomic`], so a failing run
//! leaves no partial files behind.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{propagate, Direction};
use crate::error::{Error, Result};
use crate::exposure::{
    exposed_value, group_exposure, income_terciles, region_degrees, region_region_exposure,
    total_exposure, ExposureProfile,
};
use crate::graph::{
    build_network, link_count_matrix, mean_outlinks, preprocess, region_degree_aggregates,
    Partition, PreprocessConfig, SupplyNetwork,
};
use crate::io::{
    edges_to_csv, file_sha256, firms_to_csv, fmt_f64, macro_to_csv, read_edges, read_firms,
    read_macro, render_matrix, write_atomic, write_files_atomic, FirmTable, Format, MacroRecord,
    MacroTable,
};
use crate::matrix::ExposureMatrix;
use crate::report::{
    CascadeReport, CascadeSummary, ConfigEcho, GroupExposure, InputFile, PreprocessingSummary,
    Report,
};
use crate::stats::{gini, loglog_fit, lorenz, ols_multi, pearson};
use crate::synth::{block_model_edges, synthetic_macro, GeneratorConfig};

/// Which cascade directions a run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionSpec {
    Down,
    Up,
    Both,
}

impl DirectionSpec {
    pub fn parse(s: &str) -> Option<DirectionSpec> {
        match s {
            "down" => Some(DirectionSpec::Down),
            "up" => Some(DirectionSpec::Up),
            "both" => Some(DirectionSpec::Both),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DirectionSpec::Down => "down",
            DirectionSpec::Up => "up",
            DirectionSpec::Both => "both",
        }
    }

    pub fn directions(self) -> Vec<Direction> {
        match self {
            DirectionSpec::Down => vec![Direction::Downstream],
            DirectionSpec::Up => vec![Direction::Upstream],
            DirectionSpec::Both => vec![Direction::Downstream, Direction::Upstream],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub edges: PathBuf,
    pub firms: PathBuf,
    pub macro_path: Option<PathBuf>,
    pub direction: DirectionSpec,
    pub min_firms: usize,
    pub exclude: BTreeSet<String>,
    /// Cascade threads; 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn new(
        edges: impl Into<PathBuf>,
        firms: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            edges: edges.into(),
            firms: firms.into(),
            macro_path: None,
            direction: DirectionSpec::Down,
            min_firms: PreprocessConfig::default().min_firms,
            exclude: BTreeSet::new(),
            workers: 0,
            out: out.into(),
            format: Format::Csv,
        }
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            direction: self.direction.label().to_string(),
            min_firms: self.min_firms,
            excluded_regions: self.exclude.iter().cloned().collect(),
            format: self.format.extension().to_string(),
        }
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            min_firms: self.min_firms,
            excluded_regions: self.exclude.clone(),
        }
    }
}

/// Raw inputs of a run together with their provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub edges: Vec<(String, String)>,
    pub firms: FirmTable,
    pub macro_table: Option<MacroTable>,
    pub inputs: BTreeMap<String, InputFile>,
}

fn input_file(path: &Path) -> Result<InputFile> {
    Ok(InputFile {
        path: path.display().to_string(),
        sha256: file_sha256(path)?,
    })
}

/// Hex SHA-256 of in-memory bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Dataset {
    pub fn load(config: &RunConfig) -> Result<Dataset> {
        let edges = read_edges(&config.edges)?;
        let firms = read_firms(&config.firms)?;
        let mut inputs = BTreeMap::new();
        inputs.insert("edges".to_string(), input_file(&config.edges)?);
        inputs.insert("firms".to_string(), input_file(&config.firms)?);
        let macro_table = match &config.macro_path {
            Some(p) => {
                inputs.insert("macro".to_string(), input_file(p)?);
                Some(read_macro(p)?)
            }
            None => None,
        };
        Ok(Dataset {
            edges,
            firms,
            macro_table,
            inputs,
        })
    }
}

/// Network and regions after preprocessing.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub network: SupplyNetwork,
    pub partition: Partition,
    pub summary: PreprocessingSummary,
}

pub fn prepare(data: &Dataset, config: &PreprocessConfig) -> Result<Prepared> {
    let built = build_network(&data.edges, &data.firms.region_map())?;
    let pre = preprocess(&built.network, &built.partition, config)?;
    let summary = PreprocessingSummary {
        build: built.report,
        filter: pre.report,
        firms: pre.network.len(),
        links: pre.network.edge_count(),
        regions: pre.partition.region_count(),
    };
    Ok(Prepared {
        network: pre.network,
        partition: pre.partition,
        summary,
    })
}

/// The four region matrices of one cascade direction.
#[derive(Debug, Clone)]
pub struct DirectionalMatrices {
    pub direction: Direction,
    pub expected: ExposureMatrix,
    pub exposed_value: ExposureMatrix,
    pub link_count: ExposureMatrix,
    pub mean_outlinks: ExposureMatrix,
}

impl DirectionalMatrices {
    pub fn all(&self) -> [&ExposureMatrix; 4] {
        [
            &self.expected,
            &self.exposed_value,
            &self.link_count,
            &self.mean_outlinks,
        ]
    }
}

/// Exposure matrices for one direction. Upstream link counts follow the
/// reversed links, so `A^cd` counts links by which `c` passes a shock to
/// `d` in both directions.
pub fn exposure_matrices(
    prepared: &Prepared,
    direction: Direction,
    workers: usize,
) -> Result<DirectionalMatrices> {
    let (net, part) = (&prepared.network, &prepared.partition);
    let expected = region_region_exposure(net, part, direction, workers)?.with_direction(direction);
    let exposed = exposed_value(&expected, &region_degrees(net, part))?;
    let reversed;
    let links_net = match direction {
        Direction::Downstream => net,
        Direction::Upstream => {
            reversed = net.reverse();
            &reversed
        }
    };
    Ok(DirectionalMatrices {
        direction,
        expected,
        exposed_value: exposed,
        link_count: link_count_matrix(links_net, part).with_direction(direction),
        mean_outlinks: mean_outlinks(links_net, part).with_direction(direction),
    })
}

pub fn exposure_set(
    prepared: &Prepared,
    directions: &[Direction],
    workers: usize,
) -> Result<(Vec<DirectionalMatrices>, ExposureProfile)> {
    let mut sets = Vec::with_capacity(directions.len());
    let mut profile: Option<ExposureProfile> = None;
    for &d in directions {
        let m = exposure_matrices(prepared, d, workers)?;
        let p = total_exposure(&m.expected)?;
        profile = Some(match profile {
            None => p,
            Some(prev) => prev.merge(p)?,
        });
        sets.push(m);
    }
    let profile = profile.ok_or_else(|| Error::InvalidInput("no direction selected".into()))?;
    Ok((sets, profile))
}

/// `region,down,up` table with the directions present in the profile.
pub fn profile_to_csv(profile: &ExposureProfile) -> String {
    let cols: Vec<(&str, &[f64])> = [
        ("down", profile.down.as_deref()),
        ("up", profile.up.as_deref()),
    ]
    .into_iter()
    .filter_map(|(name, v)| v.map(|v| (name, v)))
    .collect();
    let mut out = String::from("region");
    for (name, _) in &cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, region) in profile.regions.iter().enumerate() {
        out.push_str(region);
        for (_, v) in &cols {
            out.push(',');
            out.push_str(&fmt_f64(v[i]));
        }
        out.push('\n');
    }
    out
}

pub fn render_profile(profile: &ExposureProfile, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(profile_to_csv(profile)),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(profile)?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Output files of a command, by file name.
pub type Outputs = Vec<(String, Vec<u8>)>;

fn write_outputs(out: &Path, files: Outputs) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let files: Vec<(PathBuf, Vec<u8>)> = files
        .into_iter()
        .map(|(name, bytes)| (out.join(name), bytes))
        .collect();
    write_files_atomic(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Adds `run.json` describing the other outputs.
fn finish(mut report: Report, mut files: Outputs) -> Result<Outputs> {
    for (name, bytes) in &files {
        report.outputs.insert(name.clone(), sha256_hex(bytes));
    }
    files.push(("run.json".to_string(), report.to_json()?.into_bytes()));
    Ok(files)
}

/// Matrices, profile and run report of the exposure command.
pub fn exposure_outputs(config: &RunConfig, data: &Dataset) -> Result<Outputs> {
    let prepared = prepare(data, &config.preprocess_config())?;
    let (sets, profile) = exposure_set(&prepared, &config.direction.directions(), config.workers)?;
    let ext = config.format.extension();
    let mut files = Vec::new();
    for set in &sets {
        let dir = set.direction.label();
        for m in set.all() {
            let name = match m.kind().name() {
                "expected" => "exposure",
                other => other,
            };
            files.push((
                format!("{name}_{dir}.{ext}"),
                render_matrix(m, config.format)?.into_bytes(),
            ));
        }
    }
    files.push((
        format!("profile.{ext}"),
        render_profile(&profile, config.format)?.into_bytes(),
    ));
    let mut report = Report::new("exposure", config.echo(), data.inputs.clone());
    report.preprocessing = Some(prepared.summary.clone());
    report.exposure_profile = Some(profile);
    finish(report, files)
}

pub fn cmd_exposure(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = Dataset::load(config)?;
    write_outputs(&config.out, exposure_outputs(config, &data)?)
}

/// Records a statistics failure as a note instead of aborting the run.
fn soft<T>(notes: &mut Vec<String>, key: &str, result: Result<T>) -> Result<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(Error::Stats(msg)) => {
            notes.push(format!("{key}: {msg}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn column(records: &[MacroRecord], f: impl Fn(&MacroRecord) -> f64) -> Vec<f64> {
    records.iter().map(f).collect()
}

/// Inequality report: Lorenz curves and Gini coefficients of total exposure
/// and GDP, income group exposure, and the association of exposure with
/// GDP per capita and trade.
pub fn inequality_report(config: &RunConfig, data: &Dataset) -> Result<(Report, Outputs)> {
    let macro_table = data
        .macro_table
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("the inequality report needs a macro table".into()))?;
    let prepared = prepare(data, &config.preprocess_config())?;
    let regions = prepared.partition.regions().to_vec();
    let records = macro_table.select(&regions)?;
    let (sets, profile) = exposure_set(&prepared, &config.direction.directions(), config.workers)?;

    let mut report = Report::new("inequality", config.echo(), data.inputs.clone());
    let mut notes = Vec::new();
    let population = column(&records, |r| r.population);
    let gdp = column(&records, |r| r.gdp_usd);
    let gdp_pc = column(&records, MacroRecord::gdp_per_capita);
    let exports = column(&records, |r| r.exports_usd);
    let imports = column(&records, |r| r.imports_usd);
    let exports_pc = column(&records, MacroRecord::exports_per_capita);
    let imports_pc = column(&records, MacroRecord::imports_per_capita);

    if let Some(curve) = soft(&mut notes, "lorenz_gdp", lorenz(&gdp, &population))? {
        report.gini.insert("gdp".into(), gini(&curve));
        report.lorenz.insert("gdp".into(), curve);
    }

    let gdp_pc_map: BTreeMap<String, f64> = regions
        .iter()
        .cloned()
        .zip(gdp_pc.iter().copied())
        .collect();
    let groups = income_terciles(&regions, &gdp_pc_map)?;
    let mut group_matrices = BTreeMap::new();
    let mut files = Vec::new();
    let ext = config.format.extension();

    for set in &sets {
        let dir = set.direction.label();
        let e_d = profile
            .get(set.direction)
            .expect("profile has every computed direction");

        let key = format!("exposure_{dir}");
        if let Some(curve) = soft(
            &mut notes,
            &format!("lorenz_{key}"),
            lorenz(e_d, &population),
        )? {
            report.gini.insert(key.clone(), gini(&curve));
            report.lorenz.insert(key.clone(), curve);
        }

        let g = group_exposure(
            &prepared.network,
            &prepared.partition,
            &groups,
            set.direction,
            config.workers,
        )?
        .with_direction(set.direction);
        files.push((
            format!("group_exposure_{dir}.{ext}"),
            render_matrix(&g, config.format)?.into_bytes(),
        ));
        group_matrices.insert(dir.to_string(), g);

        let key = format!("gdp_per_capita_vs_exposure_{dir}");
        if let Some(c) = soft(&mut notes, &key, pearson(e_d, &gdp_pc))? {
            report.correlations.insert(key.clone(), c);
        }
        if let Some(f) = soft(&mut notes, &key, loglog_fit(e_d, &gdp_pc))? {
            report.fits.insert(key, f);
        }

        // Exposed value against mean out-links over all region pairs
        // where both are positive, as on a log-log plot.
        let (kbar, v): (Vec<f64>, Vec<f64>) = set
            .mean_outlinks
            .values()
            .iter()
            .zip(set.exposed_value.values())
            .filter(|(k, v)| **k > 0.0 && **v > 0.0)
            .map(|(k, v)| (*k, *v))
            .unzip();
        let key = format!("exposed_value_vs_mean_outlinks_{dir}");
        if let Some(c) = soft(&mut notes, &key, pearson(&kbar, &v))? {
            report.correlations.insert(key.clone(), c);
        }
        if let Some(f) = soft(&mut notes, &key, loglog_fit(&kbar, &v))? {
            report.fits.insert(key, f);
        }

        let model_1: [(&str, &[f64]); 6] = [
            ("total_exposure", e_d),
            ("gdp", &gdp),
            ("exports", &exports),
            ("imports", &imports),
            ("exports_per_capita", &exports_pc),
            ("imports_per_capita", &imports_pc),
        ];
        let model_2: [(&str, &[f64]); 2] =
            [("total_exposure", e_d), ("exports_per_capita", &exports_pc)];
        for (name, covariates) in [("model_1", &model_1[..]), ("model_2", &model_2[..])] {
            let key = format!("{name}_{dir}");
            if let Some(r) = soft(&mut notes, &key, ols_multi(&gdp_pc, covariates))? {
                report.regressions.insert(key, r);
            }
        }
    }

    let degrees = region_degree_aggregates(&prepared.network, &prepared.partition);
    let as_f64 = |f: fn(&crate::graph::RegionDegree) -> u64| -> Vec<f64> {
        degrees.iter().map(|d| f(d) as f64).collect()
    };
    let size_pairs: [(&str, Vec<f64>, &[f64]); 3] = [
        ("gdp_vs_total_degree", as_f64(|d| d.total_degree), &gdp),
        (
            "exports_vs_export_links",
            as_f64(|d| d.export_links),
            &exports,
        ),
        (
            "imports_vs_import_links",
            as_f64(|d| d.import_links),
            &imports,
        ),
    ];
    for (key, x, y) in size_pairs {
        if let Some(c) = soft(&mut notes, key, pearson(&x, y))? {
            report.correlations.insert(key.to_string(), c);
        }
        if let Some(f) = soft(&mut notes, key, loglog_fit(&x, y))? {
            report.fits.insert(key.to_string(), f);
        }
    }

    report.preprocessing = Some(prepared.summary.clone());
    report.exposure_profile = Some(profile);
    report.group_exposure = Some(GroupExposure {
        groups,
        matrices: group_matrices,
    });
    report.notes = notes;
    Ok((report, files))
}

/// Group matrices and `report.json`.
pub fn inequality_outputs(config: &RunConfig, data: &Dataset) -> Result<Outputs> {
    let (report, mut files) = inequality_report(config, data)?;
    files.push(("report.json".to_string(), report.to_json()?.into_bytes()));
    Ok(files)
}

pub fn cmd_inequality(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = Dataset::load(config)?;
    write_outputs(&config.out, inequality_outputs(config, &data)?)
}

/// The three input tables for a generated economy. Macro variables are
/// drawn from the generator seed.
pub fn generate_outputs(config: &GeneratorConfig) -> Result<Outputs> {
    let economy = block_model_edges(config)?;
    let macro_table = synthetic_macro(&config.regions, config.seed);
    Ok(vec![
        (
            "edges.csv".to_string(),
            edges_to_csv(&economy.edges).into_bytes(),
        ),
        (
            "firms.csv".to_string(),
            firms_to_csv(&economy.firms).into_bytes(),
        ),
        (
            "macro.csv".to_string(),
            macro_to_csv(&macro_table).into_bytes(),
        ),
    ])
}

pub fn cmd_generate(config: &GeneratorConfig, out: &Path) -> Result<Vec<PathBuf>> {
    write_outputs(out, generate_outputs(config)?)
}

/// Distress caused by the failure of a single firm of the preprocessed
/// network, in each configured direction.
pub fn cascade_report(config: &RunConfig, data: &Dataset, firm: &str) -> Result<CascadeReport> {
    let prepared = prepare(data, &config.preprocess_config())?;
    let net = &prepared.network;
    let seed = net
        .index_of(firm)
        .ok_or_else(|| Error::FirmNotInNetwork(firm.to_string()))?;
    let sizes = net.degree_sizes();
    let mut cascades = BTreeMap::new();
    for d in config.direction.directions() {
        let row = propagate(net, &[seed], d)?;
        cascades.insert(
            d.label().to_string(),
            CascadeSummary {
                steps: row.steps,
                debt_rank: row.debt_rank(&sizes),
                affected: row.affected(),
                distress: row
                    .distress()
                    .iter()
                    .map(|&(j, h)| (net.firm_id(j as usize).to_string(), h))
                    .collect(),
            },
        );
    }
    Ok(CascadeReport {
        version: crate::VERSION.to_string(),
        config: config.echo(),
        inputs: data.inputs.clone(),
        firm: firm.to_string(),
        cascades,
    })
}

/// Runs [`cascade_report`] and writes it to `cascade.json` in the output
/// directory.
pub fn cmd_cascade(config: &RunConfig, firm: &str) -> Result<PathBuf> {
    let data = Dataset::load(config)?;
    let report = cascade_report(config, &data, firm)?;
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let path = config.out.join("cascade.json");
    write_atomic(&path, report.to_json()?.as_bytes())?;
    Ok(path)
}
