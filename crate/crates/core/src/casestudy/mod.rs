//! Panel pipeline: fit one linear mechanism per year, attribute each unit's
//! change in the target, and aggregate per player.
//!
//! Attributions explain the change between the two fitted predictions of a
//! unit. A unit's observed change differs from that by the change in its
//! regression residual; [`ResidualMode::Mechanism`] adds this residual
//! change to the mechanism credit so that credits sum to observed changes.

mod ingest;
mod report;

pub use ingest::{id_order, ingest_panel, read_panel, PanelDataset, PanelRow, PanelSchema};
pub use report::{unit_report, AggregateReport, FeatureChange, PlayerShare, UnitReport};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{fine_attrib_exact, linear_attrib_mechanisms};
use crate::error::{Error, Result};
use crate::instance::{AttributionResult, ChangeInstance, Player};
use crate::mechanism::{LinearMechanism, Mechanism};
use crate::models::{fit_ols, Dataset, OlsFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PanelMethod {
    #[default]
    Linear,
    Fine,
}

impl FromStr for PanelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PanelMethod::Linear),
            "fine" => Ok(PanelMethod::Fine),
            _ => Err(Error::InvalidConfig(format!(
                "unknown panel method `{s}` (expected linear or fine)"
            ))),
        }
    }
}

impl fmt::Display for PanelMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PanelMethod::Linear => "linear",
            PanelMethod::Fine => "fine",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Attribute the change in fitted values.
    #[default]
    Fitted,
    /// Credit each unit's residual change to the mechanism.
    Mechanism,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PanelOptions {
    pub method: PanelMethod,
    pub with_intercept: bool,
    pub residuals: ResidualMode,
}

/// One unit's attribution together with its raw data.
#[derive(Debug, Clone, Serialize)]
pub struct UnitAttribution {
    pub id: String,
    pub x_bg: Vec<f64>,
    pub x_fg: Vec<f64>,
    pub wage_bg: f64,
    pub wage_fg: f64,
    pub result: AttributionResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct PanelAttribution {
    pub bg_year: i64,
    pub fg_year: i64,
    pub feature_names: Vec<String>,
    pub options: PanelOptions,
    pub mechanism_bg: LinearMechanism,
    pub mechanism_fg: LinearMechanism,
    /// Present when the mechanisms were fitted here.
    pub fits: Option<(FitSummary, FitSummary)>,
    pub units: Vec<UnitAttribution>,
    pub excluded_units: Vec<String>,
    pub report: AggregateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub year: i64,
    pub n: usize,
    pub rank: usize,
    pub r_squared: f64,
    pub r_squared_uncentered: f64,
    pub warning: Option<String>,
}

impl FitSummary {
    fn new(year: i64, n: usize, fit: &OlsFit) -> Self {
        Self {
            year,
            n,
            rank: fit.rank,
            r_squared: fit.r_squared,
            r_squared_uncentered: fit.r_squared_uncentered,
            warning: fit.warning.clone(),
        }
    }
}

impl PanelAttribution {
    pub fn unit(&self, id: &str) -> Option<&UnitAttribution> {
        self.units.iter().find(|u| u.id == id)
    }

    /// Name of a player in this panel's vocabulary.
    pub fn player_name(&self, p: Player) -> String {
        player_name(p, &self.feature_names)
    }

    /// Per-unit credits as CSV `id,player,credit`.
    pub fn credits_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "player", "credit"])?;
        for u in &self.units {
            for (p, c) in &u.result.credits {
                w.write_record([u.id.clone(), self.player_name(*p), format!("{c:?}")])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub(crate) fn player_name(p: Player, features: &[String]) -> String {
    match p {
        Player::Input(j) if j < features.len() => features[j].clone(),
        other => other.to_string(),
    }
}

fn year_data(data: &PanelDataset, year: i64) -> Result<Dataset> {
    let (x, y): (Vec<Vec<f64>>, Vec<f64>) = data.rows_in(year).map(|r| (r.features.clone(), r.wage)).unzip();
    if x.is_empty() {
        return Err(Error::Data(format!("year {year} is not present in the panel")));
    }
    Dataset::with_dim(x, y, data.feature_names().len())
}

/// Fits a linear mechanism on each year's rows and attributes every unit
/// observed in both years.
pub fn attribute_panel(
    data: &PanelDataset,
    bg_year: i64,
    fg_year: i64,
    options: PanelOptions,
) -> Result<PanelAttribution> {
    let bg = year_data(data, bg_year)?;
    let fg = year_data(data, fg_year)?;
    let columns = data.feature_names().len() + usize::from(options.with_intercept);
    for (year, d) in [(bg_year, &bg), (fg_year, &fg)] {
        if d.len() < columns + 1 {
            return Err(Error::Fit(format!(
                "year {year} has {} rows; fitting {columns} coefficients needs at least {}",
                d.len(),
                columns + 1
            )));
        }
    }
    let fit_bg = fit_ols(&bg, options.with_intercept)?;
    let fit_fg = fit_ols(&fg, options.with_intercept)?;
    let fits = (
        FitSummary::new(bg_year, bg.len(), &fit_bg),
        FitSummary::new(fg_year, fg.len(), &fit_fg),
    );
    let mut out = attribute_panel_with_models(
        data,
        bg_year,
        fg_year,
        &fit_bg.mechanism.with_label(bg_year.to_string()),
        &fit_fg.mechanism.with_label(fg_year.to_string()),
        options,
    )?;
    out.fits = Some(fits);
    Ok(out)
}

/// [`attribute_panel`] with caller-supplied mechanisms; `with_intercept` in
/// `options` is ignored in favour of the mechanisms' own intercepts.
pub fn attribute_panel_with_models(
    data: &PanelDataset,
    bg_year: i64,
    fg_year: i64,
    mechanism_bg: &LinearMechanism,
    mechanism_fg: &LinearMechanism,
    options: PanelOptions,
) -> Result<PanelAttribution> {
    let d = data.feature_names().len();
    for m in [mechanism_bg, mechanism_fg] {
        if m.arity() != d {
            return Err(Error::mismatch(format!("coefficients of `{}`", m.label), d, m.arity()));
        }
    }
    let years = data.years();
    for y in [bg_year, fg_year] {
        if !years.contains(&y) {
            return Err(Error::Data(format!("year {y} is not present in the panel")));
        }
    }
    let (pairs, excluded_units) = data.paired_units(bg_year, fg_year);
    if pairs.is_empty() {
        return Err(Error::Data(format!(
            "no unit is observed in both {bg_year} and {fg_year}"
        )));
    }

    let f_bg = mechanism_bg.clone().into_ref();
    let f_fg = mechanism_fg.clone().into_ref();
    let units = pairs
        .par_iter()
        .map(|(a, b)| {
            let mut result = match options.method {
                PanelMethod::Linear => linear_attrib_mechanisms(mechanism_bg, mechanism_fg, &a.features, &b.features)?,
                PanelMethod::Fine => fine_attrib_exact(&ChangeInstance::new(
                    a.features.clone(),
                    b.features.clone(),
                    f_bg.clone(),
                    f_fg.clone(),
                )?)?,
            };
            if options.residuals == ResidualMode::Mechanism {
                let resid_bg = a.wage - mechanism_bg.evaluate(&a.features)?;
                let resid_fg = b.wage - mechanism_fg.evaluate(&b.features)?;
                *result.credits.entry(Player::Mechanism).or_insert(0.0) += resid_fg - resid_bg;
                result.delta_y = b.wage - a.wage;
            }
            Ok(UnitAttribution {
                id: a.id.clone(),
                x_bg: a.features.clone(),
                x_fg: b.features.clone(),
                wage_bg: a.wage,
                wage_fg: b.wage,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let report = AggregateReport::build(bg_year, fg_year, data.feature_names(), &units, excluded_units.len());
    Ok(PanelAttribution {
        bg_year,
        fg_year,
        feature_names: data.feature_names().to_vec(),
        options,
        mechanism_bg: mechanism_bg.clone(),
        mechanism_fg: mechanism_fg.clone(),
        fits: None,
        units,
        excluded_units,
        report,
    })
}

/// Coefficient of each feature (and the intercept, if any) in both years.
pub fn coefficient_table(p: &PanelAttribution) -> BTreeMap<String, (f64, f64)> {
    let mut t: BTreeMap<String, (f64, f64)> = p
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, n)| {
            (
                n.clone(),
                (p.mechanism_bg.coefficients[j], p.mechanism_fg.coefficients[j]),
            )
        })
        .collect();
    if p.mechanism_bg.intercept.is_some() || p.mechanism_fg.intercept.is_some() {
        t.insert(
            "intercept".into(),
            (
                p.mechanism_bg.intercept.unwrap_or(0.0),
                p.mechanism_fg.intercept.unwrap_or(0.0),
            ),
        );
    }
    t
}
