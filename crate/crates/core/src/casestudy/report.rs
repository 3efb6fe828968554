use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{player_name, PanelAttribution, UnitAttribution};
use crate::error::{Error, Result};
use crate::format::sig6;
use crate::instance::Player;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerShare {
    pub player: String,
    pub credit: f64,
    /// Percentage of the attributed total; absent when that total is 0.
    pub share_pct: Option<f64>,
}

fn pct(part: f64, total: f64) -> Option<f64> {
    (total != 0.0).then(|| part / total * 100.0 + 0.0)
}

fn players_of(features: &[String]) -> Vec<Player> {
    std::iter::once(Player::Mechanism)
        .chain((0..features.len()).map(Player::Input))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub bg_year: i64,
    pub fg_year: i64,
    /// `Σ (wage_fg − wage_bg) / Σ wage_bg × 100` over observed wages.
    pub delta_wage_pct: f64,
    pub observed_delta_sum: f64,
    /// `Σ Δy` actually split among players.
    pub attributed_delta_sum: f64,
    /// `observed_delta_sum − attributed_delta_sum`: the summed change in
    /// regression residuals left unattributed.
    pub residual_gap: f64,
    /// Mechanism first, then one entry per feature.
    pub players: Vec<PlayerShare>,
    pub input_sum: f64,
    pub input_share_pct: Option<f64>,
    pub units_increased: usize,
    pub total_units: usize,
    pub excluded_units: usize,
}

impl AggregateReport {
    pub(crate) fn build(
        bg_year: i64,
        fg_year: i64,
        features: &[String],
        units: &[UnitAttribution],
        excluded_units: usize,
    ) -> Self {
        let observed_delta_sum: f64 = units.iter().map(|u| u.wage_fg - u.wage_bg).sum();
        let baseline: f64 = units.iter().map(|u| u.wage_bg).sum();
        let attributed: f64 = units.iter().map(|u| u.result.delta_y).sum();
        let players: Vec<PlayerShare> = players_of(features)
            .into_iter()
            .map(|p| {
                let credit = units.iter().map(|u| u.result.credit(p)).sum::<f64>() + 0.0;
                PlayerShare {
                    player: player_name(p, features),
                    credit,
                    share_pct: pct(credit, attributed),
                }
            })
            .collect();
        let input_sum: f64 = players[1..].iter().map(|s| s.credit).sum();
        Self {
            bg_year,
            fg_year,
            delta_wage_pct: observed_delta_sum / baseline * 100.0,
            observed_delta_sum,
            attributed_delta_sum: attributed,
            residual_gap: observed_delta_sum - attributed,
            input_share_pct: pct(input_sum, attributed),
            input_sum,
            players,
            units_increased: units.iter().filter(|u| u.wage_fg > u.wage_bg).count(),
            total_units: units.len(),
            excluded_units,
        }
    }

    pub fn player(&self, name: &str) -> Option<&PlayerShare> {
        self.players.iter().find(|p| p.player == name)
    }

    pub fn mechanism(&self) -> &PlayerShare {
        &self.players[0]
    }

    pub fn render_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), sig6);
        let mut s = String::new();
        let _ = writeln!(s, "change {} -> {}", self.bg_year, self.fg_year);
        let _ = writeln!(
            s,
            "units: {} ({} increased, {} excluded as unpaired)",
            self.total_units, self.units_increased, self.excluded_units
        );
        let _ = writeln!(s, "delta wage %: {}", sig6(self.delta_wage_pct));
        let _ = writeln!(
            s,
            "observed sum of changes: {}  attributed: {}  residual gap: {}",
            sig6(self.observed_delta_sum),
            sig6(self.attributed_delta_sum),
            sig6(self.residual_gap)
        );
        let _ = writeln!(s, "{:<12} {:>14} {:>10}", "player", "sum", "share %");
        let _ = writeln!(
            s,
            "{:<12} {:>14} {:>10}",
            "mechanism",
            sig6(self.mechanism().credit),
            opt(self.mechanism().share_pct)
        );
        let _ = writeln!(
            s,
            "{:<12} {:>14} {:>10}",
            "inputs",
            sig6(self.input_sum),
            opt(self.input_share_pct)
        );
        for p in &self.players[1..] {
            let _ = writeln!(s, "  {:<10} {:>14} {:>10}", p.player, sig6(p.credit), opt(p.share_pct));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureChange {
    pub name: String,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitReport {
    pub id: String,
    pub bg_year: i64,
    pub fg_year: i64,
    pub wage_bg: f64,
    pub wage_fg: f64,
    /// Observed change.
    pub delta_wage: f64,
    /// `delta_wage / wage_bg × 100`.
    pub wage_change_pct: f64,
    /// Change split among the players.
    pub attributed_delta: f64,
    pub credits: Vec<PlayerShare>,
    pub features: Vec<FeatureChange>,
}

impl UnitReport {
    pub fn credit(&self, name: &str) -> Option<f64> {
        self.credits.iter().find(|c| c.player == name).map(|c| c.credit)
    }

    /// Feature names ordered by decreasing absolute credit.
    pub fn leading_inputs(&self) -> Vec<&str> {
        let mut inputs: Vec<&PlayerShare> = self.credits.iter().filter(|c| c.player != "mechanism").collect();
        inputs.sort_by(|a, b| b.credit.abs().total_cmp(&a.credit.abs()));
        inputs.into_iter().map(|c| c.player.as_str()).collect()
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "unit {}: wage {} -> {} (change {}, {}%)",
            self.id,
            sig6(self.wage_bg),
            sig6(self.wage_fg),
            sig6(self.delta_wage),
            sig6(self.wage_change_pct)
        );
        let _ = writeln!(
            s,
            "{:<10} {:>10} {:>10} {:>10}",
            "feature", self.bg_year, self.fg_year, "delta"
        );
        for f in &self.features {
            let _ = writeln!(
                s,
                "{:<10} {:>10} {:>10} {:>10}",
                f.name,
                sig6(f.before),
                sig6(f.after),
                sig6(f.delta)
            );
        }
        let _ = writeln!(s, "{:<10} {:>14} {:>10}", "player", "credit", "share %");
        for c in &self.credits {
            let share = c.share_pct.map_or_else(|| "-".to_string(), sig6);
            let _ = writeln!(s, "{:<10} {:>14} {:>10}", c.player, sig6(c.credit), share);
        }
        s
    }
}

/// Per-player breakdown for one unit with its before/after feature values.
pub fn unit_report(panel: &PanelAttribution, unit_id: &str) -> Result<UnitReport> {
    let u = panel
        .unit(unit_id)
        .ok_or_else(|| Error::UnknownUnit(unit_id.to_string()))?;
    let attributed = u.result.delta_y;
    let credits = players_of(&panel.feature_names)
        .into_iter()
        .map(|p| {
            let credit = u.result.credit(p) + 0.0;
            PlayerShare {
                player: panel.player_name(p),
                credit,
                share_pct: pct(credit, attributed),
            }
        })
        .collect();
    let features = panel
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| FeatureChange {
            name: name.clone(),
            before: u.x_bg[j],
            after: u.x_fg[j],
            delta: u.x_fg[j] - u.x_bg[j],
        })
        .collect();
    Ok(UnitReport {
        id: u.id.clone(),
        bg_year: panel.bg_year,
        fg_year: panel.fg_year,
        wage_bg: u.wage_bg,
        wage_fg: u.wage_fg,
        delta_wage: u.wage_fg - u.wage_bg,
        wage_change_pct: (u.wage_fg - u.wage_bg) / u.wage_bg * 100.0,
        attributed_delta: attributed,
        credits,
        features,
    })
}
