use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cell_rng, mean_and_stderr, player_mae, sort_records, ExperimentMethod, FittedKind, MaeRecord};
use crate::attribution::{coarse_attrib, fine_attrib_exact};
use crate::error::{Error, Result};
use crate::instance::{AttributionResult, ChangeInstance};
use crate::mechanism::MechanismRef;
use crate::models::generate::{gen_ground_truth_with, gen_inputs_with};
use crate::models::{fit_ols, fit_stump_ensemble, Dataset, TruthKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityConfig {
    pub num_models: usize,
    /// Sample size per scenario; also the number of attributed instances.
    pub n: usize,
    pub truth_kinds: Vec<TruthKind>,
    pub fitted_kinds: Vec<FittedKind>,
    pub methods: Vec<ExperimentMethod>,
    pub stump_rounds: usize,
    pub stump_rate: f64,
    pub seed: u64,
}

impl Default for ReliabilityConfig {
    fn default() -> Self {
        Self {
            num_models: 100,
            n: 2000,
            truth_kinds: vec![TruthKind::Linear],
            fitted_kinds: vec![FittedKind::OlsLinear, FittedKind::StumpEnsemble],
            methods: vec![ExperimentMethod::Coarse, ExperimentMethod::Fine],
            stump_rounds: 100,
            stump_rate: 0.1,
            seed: 0,
        }
    }
}

impl ReliabilityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.num_models == 0 || self.n == 0 {
            return bad("model and sample counts must be at least 1");
        }
        if self.truth_kinds.is_empty() || self.fitted_kinds.is_empty() || self.methods.is_empty() {
            return bad("need at least one ground-truth kind, fitted kind and method");
        }
        if self.methods.contains(&ExperimentMethod::Sampled) {
            return bad("reliability compares coarse and fine attributions only");
        }
        if self.stump_rounds == 0 || !(self.stump_rate > 0.0 && self.stump_rate <= 1.0) {
            return bad("stump ensembles need at least one round and a rate in (0, 1]");
        }
        Ok(())
    }
}

fn attribute(method: ExperimentMethod, inst: &ChangeInstance) -> Result<AttributionResult> {
    match method {
        ExperimentMethod::Coarse => coarse_attrib(inst),
        _ => fine_attrib_exact(inst),
    }
}

/// For each ground-truth pair: draw background and foreground samples, fit
/// every fitted kind on each scenario, then compare attributions from the
/// fitted pair against those from the generating pair on the sampled
/// instances `(x_bg[i], x_fg[i])`.
pub fn run_reliability(config: &ReliabilityConfig) -> Result<Vec<MaeRecord>> {
    config.validate()?;
    let cells: Vec<(usize, TruthKind, usize)> = config
        .truth_kinds
        .iter()
        .enumerate()
        .flat_map(|(k, &kind)| (0..config.num_models).map(move |m| (k, kind, m)))
        .collect();
    let mut records: Vec<MaeRecord> = cells
        .par_iter()
        .flat_map_iter(|&(k, kind, m)| run_model(config, k, kind, m))
        .collect();
    sort_records(&mut records);
    Ok(records)
}

fn run_model(config: &ReliabilityConfig, kind_idx: usize, kind: TruthKind, model_idx: usize) -> Vec<MaeRecord> {
    let mut rng = cell_rng(config.seed, ((kind_idx as u64) << 32) | model_idx as u64);
    let truth = gen_ground_truth_with(kind, &mut rng);
    let d = truth.d;
    let x_bg = gen_inputs_with(d, config.n, &mut rng);
    let x_fg = gen_inputs_with(d, config.n, &mut rng);

    let record = |fitted, method, result: Result<(f64, Option<f64>)>| {
        let (mae, stderr, error) = match result {
            Ok((mae, se)) => (mae, se, None),
            Err(e) => (f64::NAN, None, Some(e.to_string())),
        };
        MaeRecord {
            kind,
            fitted,
            method,
            model_idx: Some(model_idx),
            d,
            budget: None,
            mae,
            stderr,
            seed: config.seed,
            error,
        }
    };

    let data = Dataset::from_mechanism(x_bg.clone(), truth.bg.as_ref())
        .and_then(|bg| Ok((bg, Dataset::from_mechanism(x_fg.clone(), truth.fg.as_ref())?)));
    let (data_bg, data_fg) = match data {
        Ok(pair) => pair,
        Err(e) => {
            let msg = e.to_string();
            return config
                .fitted_kinds
                .iter()
                .flat_map(|&f| config.methods.iter().map(move |&m| (f, m)))
                .map(|(f, m)| record(f, m, Err(Error::Data(msg.clone()))))
                .collect();
        }
    };

    let instances = |f_bg: &MechanismRef, f_fg: &MechanismRef| -> Result<Vec<ChangeInstance>> {
        x_bg.iter()
            .zip(&x_fg)
            .map(|(a, b)| ChangeInstance::new(a.clone(), b.clone(), f_bg.clone(), f_fg.clone()))
            .collect()
    };
    let true_instances = instances(&truth.bg_ref(), &truth.fg_ref());
    let true_credits: Vec<Result<Vec<AttributionResult>>> = config
        .methods
        .iter()
        .map(|&m| {
            let insts = true_instances.as_ref().map_err(|e| Error::Data(e.to_string()))?;
            insts.iter().map(|i| attribute(m, i)).collect()
        })
        .collect();

    let mut out = Vec::new();
    for &fitted in &config.fitted_kinds {
        let pair = fit_pair(config, fitted, &truth, &data_bg, &data_fg);
        for (&method, truths) in config.methods.iter().zip(&true_credits) {
            let result = (|| {
                let (f_bg, f_fg) = pair.as_ref().map_err(|e| Error::Fit(e.to_string()))?;
                let truths = truths.as_ref().map_err(|e| Error::Data(e.to_string()))?;
                let per_instance = instances(f_bg, f_fg)?
                    .iter()
                    .zip(truths)
                    .map(|(inst, t)| Ok(player_mae(&attribute(method, inst)?, t)))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(mean_and_stderr(&per_instance))
            })();
            out.push(record(fitted, method, result));
        }
    }
    out
}

fn fit_pair(
    config: &ReliabilityConfig,
    fitted: FittedKind,
    truth: &crate::models::GroundTruth,
    bg: &Dataset,
    fg: &Dataset,
) -> Result<(MechanismRef, MechanismRef)> {
    Ok(match fitted {
        FittedKind::Truth => (truth.bg_ref(), truth.fg_ref()),
        FittedKind::OlsLinear => (
            fit_ols(bg, false)?.mechanism.into_ref(),
            fit_ols(fg, false)?.mechanism.into_ref(),
        ),
        FittedKind::StumpEnsemble => (
            fit_stump_ensemble(bg, config.stump_rounds, config.stump_rate)?.into_ref(),
            fit_stump_ensemble(fg, config.stump_rounds, config.stump_rate)?.into_ref(),
        ),
    })
}
