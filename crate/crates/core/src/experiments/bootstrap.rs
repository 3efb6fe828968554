use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cell_rng;
use crate::attribution::linear_attrib_mechanisms;
use crate::error::{Error, Result};
use crate::instance::{AttributionResult, Player};
use crate::mechanism::LinearMechanism;
use crate::models::{fit_ols, Dataset};

pub const MIN_RESAMPLES: usize = 100;

/// Background and foreground samples whose OLS fits define the mechanisms.
#[derive(Debug, Clone)]
pub struct PanelFitTask {
    pub bg: Dataset,
    pub fg: Dataset,
    pub with_intercept: bool,
}

impl PanelFitTask {
    fn fit(&self, bg: &Dataset, fg: &Dataset) -> Result<(LinearMechanism, LinearMechanism)> {
        let columns = bg.dim() + usize::from(self.with_intercept);
        let mut out = Vec::with_capacity(2);
        for data in [bg, fg] {
            let fit = fit_ols(data, self.with_intercept)?;
            if fit.rank < columns {
                return Err(Error::Fit(format!("rank {} < {columns}", fit.rank)));
            }
            out.push(fit.mechanism);
        }
        let fg = out.pop().expect("two fits");
        Ok((out.pop().expect("two fits"), fg))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    /// Attribution from the full-sample fits.
    pub point: AttributionResult,
    /// Percentile interval (2.5%, 97.5%) per player.
    pub intervals: BTreeMap<Player, (f64, f64)>,
    pub resamples_used: usize,
    /// Resamples dropped because a refit was rank deficient or failed.
    pub skipped: usize,
}

/// Percentile bootstrap of the linear attribution for one instance.
///
/// Each replicate resamples the background and foreground rows with
/// replacement, refits both mechanisms and re-attributes.
pub fn bootstrap_attributions(
    task: &PanelFitTask,
    x_bg: &[f64],
    x_fg: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if task.bg.is_empty() || task.fg.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (bg, fg) = task.fit(&task.bg, &task.fg)?;
    let point = linear_attrib_mechanisms(&bg, &fg, x_bg, x_fg)?;

    let replicates: Vec<Option<AttributionResult>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = cell_rng(seed, b as u64);
            let mut draw = |data: &Dataset| {
                let idx: Vec<usize> = (0..data.len()).map(|_| rng.random_range(0..data.len())).collect();
                data.select(&idx)
            };
            let (rb, rf) = (draw(&task.bg), draw(&task.fg));
            let (mb, mf) = task.fit(&rb, &rf).ok()?;
            linear_attrib_mechanisms(&mb, &mf, x_bg, x_fg).ok()
        })
        .collect();

    let kept: Vec<&AttributionResult> = replicates.iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::Fit("every bootstrap resample was degenerate".into()));
    }
    let intervals = point
        .credits
        .keys()
        .map(|&p| {
            let mut v: Vec<f64> = kept.iter().map(|r| r.credit(p)).collect();
            v.sort_by(f64::total_cmp);
            (p, (quantile(&v, 0.025), quantile(&v, 0.975)))
        })
        .collect();
    Ok(BootstrapResult {
        point,
        intervals,
        resamples_used: kept.len(),
        skipped: resamples - kept.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
