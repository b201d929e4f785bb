//! Employment, wage, geography and state-metric tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::taxonomy::is_valid_occupation_code;

pub const GEOGRAPHY_HEADER: [&str; 2] = ["county_fips", "state"];
pub const EMPLOYMENT_HEADER: [&str; 4] = ["occupation_code", "county_fips", "employment", "median_wage"];
pub const STATE_METRICS_HEADER: [&str; 4] = ["state", "gdp", "per_capita_income", "unemployment_rate"];

/// Largest employment count that is exactly representable as f64.
const MAX_EMPLOYMENT: f64 = 9_007_199_254_740_992.0;

fn is_valid_fips(code: &str) -> bool {
    code.len() == 5 && code.bytes().all(|c| c.is_ascii_digit())
}

/// County → state lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Geography {
    counties: BTreeMap<String, String>,
}

impl Geography {
    pub fn new<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut counties = BTreeMap::new();
        for (fips, state) in pairs {
            let (fips, state) = (fips.into(), state.into());
            if !is_valid_fips(&fips) {
                return Err(Error::InvalidValue(format!("county FIPS {fips:?} is not 5 digits")));
            }
            if state.is_empty() {
                return Err(Error::InvalidValue(format!("county {fips} has an empty state")));
            }
            if counties.insert(fips.clone(), state).is_some() {
                return Err(Error::InvalidValue(format!("duplicate county {fips}")));
            }
        }
        Ok(Self { counties })
    }

    pub fn state_of(&self, fips: &str) -> Option<&str> {
        self.counties.get(fips).map(String::as_str)
    }

    /// Counties in FIPS order.
    pub fn counties(&self) -> impl Iterator<Item = (&str, &str)> {
        self.counties.iter().map(|(c, s)| (c.as_str(), s.as_str()))
    }

    pub fn len(&self) -> usize {
        self.counties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counties.is_empty()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        csvio::write_rows(&GEOGRAPHY_HEADER, self.counties.iter().map(|(c, s)| [c, s]))
    }
}

pub fn load_geography(path: impl AsRef<Path>) -> Result<Geography> {
    let path = path.as_ref();
    read_geography(csvio::open(path)?, &csvio::source_name(path))
}

pub fn read_geography<R: Read>(reader: R, source: &str) -> Result<Geography> {
    let mut counties = BTreeMap::new();
    csvio::for_each_row(reader, source, &GEOGRAPHY_HEADER, |row| {
        let fips = row.nonempty(0, "county_fips")?;
        if !is_valid_fips(fips) {
            return Err(row.parse_err(format!("county_fips {fips:?} is not 5 digits")));
        }
        let state = row.nonempty(1, "state")?;
        if counties.insert(fips.to_owned(), state.to_owned()).is_some() {
            return Err(row.duplicate(format!("county {fips}")));
        }
        Ok(())
    })?;
    Ok(Geography { counties })
}

/// A geographic aggregation level plus identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "level", content = "id", rename_all = "lowercase")]
pub enum RegionScope {
    County(String),
    State(String),
    National,
}

impl fmt::Display for RegionScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::County(c) => write!(f, "county {c}"),
            Self::State(s) => write!(f, "state {s}"),
            Self::National => f.write_str("national"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmploymentRecord {
    pub occupation: String,
    pub county: String,
    pub employment: u64,
    pub median_wage: f64,
}

impl EmploymentRecord {
    pub fn wage_value(&self) -> f64 {
        self.employment as f64 * self.median_wage
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    occupation: u32,
    county: u32,
    employment: u64,
    median_wage: f64,
}

/// Borrowed view of one (occupation, county) cell.
#[derive(Debug, Clone, Copy)]
pub struct CellRef<'a> {
    pub occupation: &'a str,
    pub county: &'a str,
    pub state: &'a str,
    pub employment: u64,
    pub median_wage: f64,
}

impl CellRef<'_> {
    /// employment × median wage
    pub fn wage_value(&self) -> f64 {
        self.employment as f64 * self.median_wage
    }
}

/// Validated employment cells resolved against a geography.
///
/// Cells are kept sorted by (occupation code, county FIPS); every total is
/// accumulated in that order. Missing cells mean zero employment.
#[derive(Debug, Clone, PartialEq)]
pub struct EmploymentTable {
    occupations: Vec<String>,
    counties: Vec<String>,
    states: Vec<String>,
    county_state: Vec<u32>,
    cells: Vec<Cell>,
    /// Cell indices grouped by county, in cell order within each county.
    county_order: Vec<u32>,
    county_ranges: Vec<Range<usize>>,
}

impl EmploymentTable {
    pub fn from_records(records: Vec<EmploymentRecord>, geography: &Geography) -> Result<Self> {
        let mut b = TableBuilder::new(geography);
        for (i, r) in records.into_iter().enumerate() {
            let line = i as u64 + 1;
            if !is_valid_occupation_code(&r.occupation) {
                return Err(Error::InvalidValue(format!("occupation code {:?}", r.occupation)));
            }
            if !r.median_wage.is_finite() || r.median_wage < 0.0 {
                return Err(Error::InvalidValue(format!(
                    "median wage {} for ({}, {})",
                    r.median_wage, r.occupation, r.county
                )));
            }
            let county = b.county(&r.county).ok_or_else(|| Error::NotFound {
                kind: "county",
                key: r.county.clone(),
            })?;
            b.push(&r.occupation, county, r.employment, r.median_wage, line);
        }
        b.finish()
            .map_err(|(occ, county, _)| Error::InvalidValue(format!("duplicate employment record ({occ}, {county})")))
    }

    pub fn occupations(&self) -> &[String] {
        &self.occupations
    }

    /// Counties of the geography, FIPS order (including ones without cells).
    pub fn counties(&self) -> &[String] {
        &self.counties
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn state_of_county(&self, fips: &str) -> Option<&str> {
        let i = self.counties.binary_search_by(|c| c.as_str().cmp(fips)).ok()?;
        Some(&self.states[self.county_state[i] as usize])
    }

    fn view(&self, cell: &Cell) -> CellRef<'_> {
        CellRef {
            occupation: &self.occupations[cell.occupation as usize],
            county: &self.counties[cell.county as usize],
            state: &self.states[self.county_state[cell.county as usize] as usize],
            employment: cell.employment,
            median_wage: cell.median_wage,
        }
    }

    /// All cells in (occupation, county) order.
    pub fn cells(&self) -> impl Iterator<Item = CellRef<'_>> + '_ {
        self.cells.iter().map(|c| self.view(c))
    }

    /// Cells of the county at `position` (index into [`Self::counties`]), in
    /// occupation order.
    pub fn county_cells(&self, position: usize) -> impl Iterator<Item = CellRef<'_>> + '_ {
        self.county_order[self.county_ranges[position].clone()]
            .iter()
            .map(|&i| self.view(&self.cells[i as usize]))
    }

    /// Cells within `scope`, in (occupation, county) order.
    pub fn cells_in<'a>(&'a self, scope: &'a RegionScope) -> Box<dyn Iterator<Item = CellRef<'a>> + 'a> {
        match scope {
            RegionScope::National => Box::new(self.cells()),
            RegionScope::State(s) => Box::new(self.cells().filter(move |c| c.state == s)),
            RegionScope::County(f) => match self.counties.binary_search(f) {
                Ok(pos) => Box::new(self.county_cells(pos)),
                Err(_) => Box::new(std::iter::empty()),
            },
        }
    }

    pub fn total_employment(&self) -> u64 {
        self.cells.iter().map(|c| c.employment).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = EmploymentRecord> + '_ {
        self.cells().map(|c| EmploymentRecord {
            occupation: c.occupation.to_owned(),
            county: c.county.to_owned(),
            employment: c.employment,
            median_wage: c.median_wage,
        })
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let rows = self.cells().map(|c| {
            [
                c.occupation.to_owned(),
                c.county.to_owned(),
                c.employment.to_string(),
                c.median_wage.to_string(),
            ]
        });
        csvio::write_rows(&EMPLOYMENT_HEADER, rows)
    }
}

struct TableBuilder<'g> {
    geography: &'g Geography,
    county_ids: HashMap<&'g str, u32>,
    occ_ids: HashMap<String, u32>,
    occ_names: Vec<String>,
    cells: Vec<Cell>,
    lines: Vec<u64>,
}

impl<'g> TableBuilder<'g> {
    fn new(geography: &'g Geography) -> Self {
        let county_ids = geography
            .counties
            .keys()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        Self {
            geography,
            county_ids,
            occ_ids: HashMap::new(),
            occ_names: Vec::new(),
            cells: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn county(&self, fips: &str) -> Option<u32> {
        self.county_ids.get(fips).copied()
    }

    fn push(&mut self, occupation: &str, county: u32, employment: u64, median_wage: f64, line: u64) {
        let occ = match self.occ_ids.get(occupation) {
            Some(&id) => id,
            None => {
                let id = self.occ_names.len() as u32;
                self.occ_names.push(occupation.to_owned());
                self.occ_ids.insert(occupation.to_owned(), id);
                id
            }
        };
        self.cells.push(Cell {
            occupation: occ,
            county,
            employment,
            median_wage,
        });
        self.lines.push(line);
    }

    /// On a duplicate cell, returns (occupation, county, line of the later record).
    fn finish(self) -> std::result::Result<EmploymentTable, (String, String, u64)> {
        let mut order: Vec<u32> = (0..self.occ_names.len() as u32).collect();
        order.sort_by(|&a, &b| self.occ_names[a as usize].cmp(&self.occ_names[b as usize]));
        let mut remap = vec![0u32; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut names = self.occ_names;
        let occupations: Vec<String> = order.iter().map(|&o| std::mem::take(&mut names[o as usize])).collect();

        let mut indexed: Vec<(Cell, u64)> = self
            .cells
            .into_iter()
            .zip(self.lines)
            .map(|(mut c, l)| {
                c.occupation = remap[c.occupation as usize];
                (c, l)
            })
            .collect();
        indexed.sort_by_key(|(c, l)| (c.occupation, c.county, *l));

        let counties: Vec<String> = self.geography.counties.keys().cloned().collect();
        if let Some(w) = indexed
            .windows(2)
            .find(|w| (w[0].0.occupation, w[0].0.county) == (w[1].0.occupation, w[1].0.county))
        {
            return Err((
                occupations[w[1].0.occupation as usize].clone(),
                counties[w[1].0.county as usize].clone(),
                w[1].1,
            ));
        }
        let cells: Vec<Cell> = indexed.into_iter().map(|(c, _)| c).collect();

        let mut states: Vec<String> = self.geography.counties.values().cloned().collect();
        states.sort();
        states.dedup();
        let county_state: Vec<u32> = self
            .geography
            .counties
            .values()
            .map(|s| states.binary_search(s).expect("state collected above") as u32)
            .collect();

        // Counting sort of cell indices by county; stable, so occupation order is kept.
        let mut counts = vec![0usize; counties.len() + 1];
        for c in &cells {
            counts[c.county as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let county_ranges: Vec<Range<usize>> = counts.windows(2).map(|w| w[0]..w[1]).collect();
        let mut next = counts.clone();
        let mut county_order = vec![0u32; cells.len()];
        for (i, c) in cells.iter().enumerate() {
            let slot = &mut next[c.county as usize];
            county_order[*slot] = i as u32;
            *slot += 1;
        }

        Ok(EmploymentTable {
            occupations,
            counties,
            states,
            county_state,
            cells,
            county_order,
            county_ranges,
        })
    }
}

pub fn load_employment(path: impl AsRef<Path>, geography: &Geography) -> Result<EmploymentTable> {
    let path = path.as_ref();
    read_employment(csvio::open(path)?, &csvio::source_name(path), geography)
}

pub fn read_employment<R: Read>(reader: R, source: &str, geography: &Geography) -> Result<EmploymentTable> {
    let mut b = TableBuilder::new(geography);
    csvio::for_each_row(reader, source, &EMPLOYMENT_HEADER, |row| {
        let occ = row.nonempty(0, "occupation_code")?;
        if !is_valid_occupation_code(occ) {
            return Err(row.parse_err(format!("occupation_code {occ:?} does not match NN-NNNN")));
        }
        let fips = row.nonempty(1, "county_fips")?;
        let what = format!("occupation {occ}, county {fips}");
        let employment = row.f64_in(2, "employment", &what, 0.0, MAX_EMPLOYMENT)?;
        if employment.fract() != 0.0 {
            return Err(row.parse_err(format!("employment {employment} is not a whole number")));
        }
        let wage = row.f64_in(3, "median_wage", &what, 0.0, f64::MAX)?;
        let county = b.county(fips).ok_or_else(|| Error::UnresolvedCounty {
            source_name: source.to_owned(),
            line: row.line,
            fips: fips.to_owned(),
        })?;
        b.push(occ, county, employment as u64, wage, row.line);
        Ok(())
    })?;
    b.finish().map_err(|(occ, county, line)| Error::Duplicate {
        source_name: source.to_owned(),
        line,
        what: format!("employment record ({occ}, {county})"),
    })
}

/// Total wage value (Σ employment × median wage) within `scope`.
pub fn wage_base(table: &EmploymentTable, scope: &RegionScope) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    let mut any = false;
    for c in table.cells_in(scope) {
        any = true;
        acc.add(c.wage_value());
    }
    if !any {
        return Err(Error::EmptyRegion(scope.to_string()));
    }
    Ok(acc.total())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub state: String,
    pub gdp: f64,
    pub per_capita_income: f64,
    pub unemployment_rate: f64,
}

/// Traditional economic indicators keyed by state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateMetricsTable {
    pub rows: BTreeMap<String, StateMetrics>,
}

impl StateMetricsTable {
    /// Named metric columns, in report order.
    pub const METRICS: [&'static str; 3] = ["gdp", "per_capita_income", "unemployment_rate"];

    pub fn metric(&self, name: &str) -> Option<BTreeMap<String, f64>> {
        let get: fn(&StateMetrics) -> f64 = match name {
            "gdp" => |m| m.gdp,
            "per_capita_income" => |m| m.per_capita_income,
            "unemployment_rate" => |m| m.unemployment_rate,
            _ => return None,
        };
        Some(self.rows.iter().map(|(s, m)| (s.clone(), get(m))).collect())
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let rows = self.rows.values().map(|m| {
            [
                m.state.clone(),
                m.gdp.to_string(),
                m.per_capita_income.to_string(),
                m.unemployment_rate.to_string(),
            ]
        });
        csvio::write_rows(&STATE_METRICS_HEADER, rows)
    }
}

pub fn load_state_metrics(path: impl AsRef<Path>) -> Result<StateMetricsTable> {
    let path = path.as_ref();
    read_state_metrics(csvio::open(path)?, &csvio::source_name(path))
}

pub fn read_state_metrics<R: Read>(reader: R, source: &str) -> Result<StateMetricsTable> {
    let mut rows = BTreeMap::new();
    csvio::for_each_row(reader, source, &STATE_METRICS_HEADER, |row| {
        let state = row.nonempty(0, "state")?;
        let m = StateMetrics {
            state: state.to_owned(),
            gdp: row.f64(1, "gdp")?,
            per_capita_income: row.f64(2, "per_capita_income")?,
            unemployment_rate: row.f64_in(3, "unemployment_rate", &format!("state {state}"), 0.0, 1.0)?,
        };
        if rows.insert(state.to_owned(), m).is_some() {
            return Err(row.duplicate(format!("state {state}")));
        }
        Ok(())
    })?;
    Ok(StateMetricsTable { rows })
}
