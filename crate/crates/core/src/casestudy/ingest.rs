use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column layout of a panel file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelSchema {
    pub id: String,
    pub year: String,
    pub target: String,
    /// Input columns in model order, each flagged as boolean or numeric.
    pub features: Vec<(String, bool)>,
}

impl Default for PanelSchema {
    /// Earnings extract: `id,year,edu,exp,weeks,occ,union,ind,smsa,south,wage`.
    fn default() -> Self {
        let numeric = ["edu", "exp", "weeks"].map(|n| (n.to_string(), false));
        let flags = ["occ", "union", "ind", "smsa", "south"].map(|n| (n.to_string(), true));
        Self {
            id: "id".into(),
            year: "year".into(),
            target: "wage".into(),
            features: numeric.into_iter().chain(flags).collect(),
        }
    }
}

impl PanelSchema {
    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|(n, _)| n.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub id: String,
    pub year: i64,
    pub features: Vec<f64>,
    pub wage: f64,
}

/// Validated panel: at most one row per `(id, year)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    feature_names: Vec<String>,
    rows: Vec<PanelRow>,
    index: BTreeMap<(i64, String), usize>,
}

impl PanelDataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<PanelRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut index = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != feature_names.len() {
                return Err(Error::mismatch(
                    format!("features of unit {}", row.id),
                    feature_names.len(),
                    row.features.len(),
                ));
            }
            if !row.wage.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite wage for unit {} in {}",
                    row.id, row.year
                )));
            }
            if index.insert((row.year, row.id.clone()), i).is_some() {
                return Err(Error::DuplicateRow {
                    id: row.id.clone(),
                    year: row.year,
                });
            }
        }
        Ok(Self {
            feature_names,
            rows,
            index,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn years(&self) -> BTreeSet<i64> {
        self.rows.iter().map(|r| r.year).collect()
    }

    pub fn row(&self, id: &str, year: i64) -> Option<&PanelRow> {
        self.index.get(&(year, id.to_string())).map(|&i| &self.rows[i])
    }

    pub fn rows_in(&self, year: i64) -> impl Iterator<Item = &PanelRow> {
        self.index
            .range((year, String::new())..)
            .take_while(move |((y, _), _)| *y == year)
            .map(|(_, &i)| &self.rows[i])
    }

    /// Units observed in both years, sorted by id, and the units observed
    /// in only one of them.
    pub fn paired_units(&self, bg_year: i64, fg_year: i64) -> (Vec<(&PanelRow, &PanelRow)>, Vec<String>) {
        let mut pairs = Vec::new();
        let mut unpaired = Vec::new();
        let ids: BTreeSet<&str> = self
            .rows
            .iter()
            .filter(|r| r.year == bg_year || r.year == fg_year)
            .map(|r| r.id.as_str())
            .collect();
        for id in ids {
            match (self.row(id, bg_year), self.row(id, fg_year)) {
                (Some(a), Some(b)) => pairs.push((a, b)),
                _ => unpaired.push(id.to_string()),
            }
        }
        pairs.sort_by(|a, b| id_order(&a.0.id, &b.0.id));
        unpaired.sort_by(|a, b| id_order(a, b));
        (pairs, unpaired)
    }
}

/// Numeric ids compare numerically and sort before non-numeric ones.
pub fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

fn parse_bool(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "yes" | "true" => Some(1.0),
        "0" | "no" | "false" => Some(0.0),
        _ => None,
    }
}

pub fn ingest_panel(path: impl AsRef<Path>, schema: &PanelSchema) -> Result<PanelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, schema)
}

/// Parses comma-separated panel rows with a header line.
pub fn read_panel<R: Read>(reader: R, schema: &PanelSchema) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_col = column(&schema.id)?;
    let year_col = column(&schema.year)?;
    let wage_col = column(&schema.target)?;
    let feature_cols = schema
        .features
        .iter()
        .map(|(n, b)| Ok((column(n)?, n.as_str(), *b)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let cell = |col: usize, name: &str| {
            record.get(col).ok_or_else(|| Error::Cell {
                row: line,
                column: name.to_string(),
                value: String::new(),
            })
        };
        let bad = |col: usize, name: &str| Error::Cell {
            row: line,
            column: name.to_string(),
            value: record.get(col).unwrap_or_default().to_string(),
        };
        let number = |col: usize, name: &str| -> Result<f64> {
            let v: f64 = cell(col, name)?.parse().map_err(|_| bad(col, name))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(col, name))
            }
        };

        let id = cell(id_col, &schema.id)?.to_string();
        if id.is_empty() {
            return Err(bad(id_col, &schema.id));
        }
        let year = cell(year_col, &schema.year)?
            .parse::<i64>()
            .map_err(|_| bad(year_col, &schema.year))?;
        let features = feature_cols
            .iter()
            .map(|&(col, name, boolean)| {
                if boolean {
                    parse_bool(cell(col, name)?).ok_or_else(|| bad(col, name))
                } else {
                    number(col, name)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let wage = number(wage_col, &schema.target)?;
        rows.push(PanelRow {
            id,
            year,
            features,
            wage,
        });
    }
    PanelDataset::new(schema.feature_names(), rows)
}
