//! Deterministic synthetic supply networks.
//!
//! All randomness comes from a counter-based generator: the `k`-th draw of
//! stream `s` under seed `seed` is
//!
//! ```text
//! bits = mix(mix(mix(seed) ^ s) ^ k)
//! u    = ((bits >> 11) + 1) * 2^-53          // uniform on (0, 1]
//! ```
//!
//! where `mix` is the SplitMix64 step (add `0x9E3779B97F4A7C15`, then the
//! two xor-shift-multiply rounds with `0xBF58476D1CE4E5B9` and
//! `0x94D049BB133111EB`). Logarithms and exponentials go through `libm`, so
//! generated files are identical on every platform.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_network, Built};
use crate::io::{FirmRecord, FirmTable, MacroRecord, MacroTable};

fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform stream on (0, 1].
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: mix(seed) ^ stream,
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let bits = mix(mix(self.key) ^ self.counter);
        self.counter += 1;
        bits
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Region labels with their firm counts.
    pub regions: Vec<(String, usize)>,
    /// Link probability between two firms of the same region.
    pub p_intra: f64,
    /// Link probability between firms of different regions.
    pub p_inter: f64,
    /// Per ordered (origin, destination) region pair overrides.
    #[serde(default)]
    pub pair_p: BTreeMap<(String, String), f64>,
    pub seed: u64,
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        let check = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{what} probability {p} outside [0, 1]"
                )))
            }
        };
        check(self.p_intra, "intra-region")?;
        check(self.p_inter, "inter-region")?;
        for ((a, b), &p) in &self.pair_p {
            check(p, &format!("{a}->{b}"))?;
            for label in [a, b] {
                if !self.regions.iter().any(|(l, _)| l == label) {
                    return Err(Error::InvalidInput(format!(
                        "probability override names unknown region `{label}`"
                    )));
                }
            }
        }
        if self.regions.is_empty() {
            return Err(Error::InvalidInput(
                "generator needs at least one region".into(),
            ));
        }
        let mut labels: Vec<&str> = self.regions.iter().map(|(l, _)| l.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("duplicate region `{}`", w[0])));
        }
        for (label, count) in &self.regions {
            if label.is_empty() || label.contains(',') {
                return Err(Error::InvalidInput(format!(
                    "invalid region label `{label}`"
                )));
            }
            if *count == 0 {
                return Err(Error::InvalidInput(format!(
                    "region `{label}` has no firms"
                )));
            }
        }
        Ok(())
    }

    fn pair_probability(&self, c: usize, d: usize) -> f64 {
        let key = (self.regions[c].0.clone(), self.regions[d].0.clone());
        match self.pair_p.get(&key) {
            Some(&p) => p,
            None if c == d => self.p_intra,
            None => self.p_inter,
        }
    }

    pub fn total_firms(&self) -> usize {
        self.regions.iter().map(|(_, n)| n).sum()
    }

    /// Expected number of generated edges.
    pub fn expected_edges(&self) -> f64 {
        let r = self.regions.len();
        let mut total = 0.0;
        for c in 0..r {
            for d in 0..r {
                total += pair_slots(self.regions[c].1, self.regions[d].1, c == d) as f64
                    * self.pair_probability(c, d);
            }
        }
        total
    }
}

fn pair_slots(n_c: usize, n_d: usize, same: bool) -> u64 {
    if same {
        n_c as u64 * (n_c as u64 - 1)
    } else {
        n_c as u64 * n_d as u64
    }
}

/// Raw generated economy: edges and firm table as they would be ingested.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEconomy {
    pub edges: Vec<(String, String)>,
    pub firms: FirmTable,
}

impl SyntheticEconomy {
    pub fn build(&self) -> Result<Built> {
        build_network(&self.edges, &self.firms.region_map())
    }
}

/// Directed block model. Each ordered pair of distinct firms is linked
/// independently with the probability of its region pair; candidate pairs
/// of a block are visited with geometric skips, so the cost is linear in
/// the number of edges.
pub fn block_model_edges(config: &GeneratorConfig) -> Result<SyntheticEconomy> {
    config.validate()?;
    let width = config.total_firms().to_string().len().max(4);
    let mut offsets = Vec::with_capacity(config.regions.len());
    let mut records = Vec::with_capacity(config.total_firms());
    for (label, count) in &config.regions {
        offsets.push(records.len());
        for _ in 0..*count {
            records.push(FirmRecord {
                firm_id: format!("f{:0width$}", records.len()),
                region: label.clone(),
                sector: None,
            });
        }
    }

    let r = config.regions.len();
    let mut edges = Vec::new();
    for c in 0..r {
        for d in 0..r {
            let (n_c, n_d) = (config.regions[c].1, config.regions[d].1);
            let same = c == d;
            let slots = pair_slots(n_c, n_d, same);
            let p = config.pair_probability(c, d);
            let mut emit = |slot: u64| {
                let (a, b) = if same {
                    let a = slot / (n_c as u64 - 1);
                    let b = slot % (n_c as u64 - 1);
                    (a, if b >= a { b + 1 } else { b })
                } else {
                    (slot / n_d as u64, slot % n_d as u64)
                };
                edges.push((
                    records[offsets[c] + a as usize].firm_id.clone(),
                    records[offsets[d] + b as usize].firm_id.clone(),
                ));
            };
            if p <= 0.0 || slots == 0 {
                continue;
            }
            if p >= 1.0 {
                (0..slots).for_each(&mut emit);
                continue;
            }
            let mut rng = CounterRng::new(config.seed, (c * r + d) as u64);
            let log_q = libm::log1p(-p);
            let mut slot: u64 = 0;
            loop {
                let skip = libm::floor(libm::log(rng.uniform()) / log_q);
                if skip >= (slots - slot) as f64 {
                    break;
                }
                slot += skip as u64;
                emit(slot);
                slot += 1;
                if slot >= slots {
                    break;
                }
            }
        }
    }
    Ok(SyntheticEconomy {
        edges,
        firms: FirmTable::new(records)?,
    })
}

/// Block model network and partition (isolated firms dropped).
pub fn block_model(config: &GeneratorConfig) -> Result<Built> {
    block_model_edges(config)?.build()
}

/// Share of expected links that stay within a region in [`scale_config`].
pub const SCALE_INTRA_SHARE: f64 = 0.8;

/// Firm and link counts of the reference global supply network.
pub const REFERENCE_FIRMS: usize = 230_970;
pub const REFERENCE_LINKS: usize = 660_701;

/// Block model with `n_regions` near-equal regions whose expected mean
/// total degree is `mean_degree`, with [`SCALE_INTRA_SHARE`] of the links
/// inside regions.
pub fn scale_config(
    n_firms: usize,
    n_regions: usize,
    mean_degree: f64,
    seed: u64,
) -> Result<GeneratorConfig> {
    if n_regions == 0 || n_firms < 2 * n_regions {
        return Err(Error::InvalidInput(format!(
            "cannot split {n_firms} firms into {n_regions} regions of at least two"
        )));
    }
    if mean_degree.is_nan() || mean_degree <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "mean degree {mean_degree} must be positive"
        )));
    }
    let base = n_firms / n_regions;
    let extra = n_firms % n_regions;
    let width = n_regions.to_string().len().max(3);
    let regions: Vec<(String, usize)> = (0..n_regions)
        .map(|c| (format!("R{c:0width$}"), base + usize::from(c < extra)))
        .collect();
    let intra_slots: f64 = regions.iter().map(|(_, n)| (n * (n - 1)) as f64).sum();
    let all_slots = (n_firms as f64) * (n_firms as f64 - 1.0);
    let inter_slots = all_slots - intra_slots;
    let links = n_firms as f64 * mean_degree / 2.0;
    let (p_intra, p_inter) = if inter_slots > 0.0 {
        (
            SCALE_INTRA_SHARE * links / intra_slots,
            (1.0 - SCALE_INTRA_SHARE) * links / inter_slots,
        )
    } else {
        (links / intra_slots, 0.0)
    };
    if p_intra > 1.0 || p_inter > 1.0 {
        return Err(Error::InvalidInput(format!(
            "mean degree {mean_degree} too dense for {n_firms} firms in {n_regions} regions"
        )));
    }
    Ok(GeneratorConfig {
        regions,
        p_intra,
        p_inter,
        pair_p: BTreeMap::new(),
        seed,
    })
}

pub fn scale_fixture(
    n_firms: usize,
    n_regions: usize,
    mean_degree: f64,
    seed: u64,
) -> Result<SyntheticEconomy> {
    block_model_edges(&scale_config(n_firms, n_regions, mean_degree, seed)?)
}

/// Plausible macro variables for synthetic regions: population grows with
/// firm count, GDP per capita is log-uniform between 1e3 and 1e5 USD and
/// trade volumes are 10-40% of GDP.
pub fn synthetic_macro(regions: &[(String, usize)], seed: u64) -> MacroTable {
    let mut table = MacroTable::default();
    for (c, (label, firms)) in regions.iter().enumerate() {
        let mut rng = CounterRng::new(seed, u64::MAX - c as u64);
        let population = libm::round(*firms as f64 * 1e5 * (0.5 + rng.uniform()));
        let gdp_per_capita = libm::exp(libm::log(1e3) + rng.uniform() * libm::log(1e2));
        let gdp_usd = population * gdp_per_capita;
        let imports_usd = gdp_usd * (0.1 + 0.3 * rng.uniform());
        let exports_usd = gdp_usd * (0.1 + 0.3 * rng.uniform());
        table.regions.insert(
            label.clone(),
            MacroRecord {
                gdp_usd,
                population,
                imports_usd,
                exports_usd,
            },
        );
    }
    table
}

pub const TOY_EDGES_CSV: &str = include_str!("../fixtures/toy_edges.csv");
pub const TOY_FIRMS_CSV: &str = include_str!("../fixtures/toy_firms.csv");
pub const TOY_MACRO_CSV: &str = include_str!("../fixtures/toy_macro.csv");

fn csv_rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
}

/// Nine firms in three regions: A = {f1, f2}, B = {f3, f4, f5},
/// C = {f6, .., f9}. Built so that the failure of f1 destroys 75% of B
/// (by degree) while f2's failure never reaches B, giving an expected
/// A-to-B exposure of (0.75 + 0) / 2.
pub fn toy_fixture() -> Built {
    let edges: Vec<(String, String)> = csv_rows(TOY_EDGES_CSV)
        .map(|r| (r[0].to_string(), r[1].to_string()))
        .collect();
    build_network(&edges, &toy_firm_table().region_map()).expect("toy fixture is valid")
}

pub fn toy_firm_table() -> FirmTable {
    let records = csv_rows(TOY_FIRMS_CSV)
        .map(|r| FirmRecord {
            firm_id: r[0].to_string(),
            region: r[1].to_string(),
            sector: r.get(2).filter(|s| !s.is_empty()).map(|s| s.to_string()),
        })
        .collect();
    FirmTable::new(records).expect("toy fixture is valid")
}
