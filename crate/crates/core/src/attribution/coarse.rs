use std::collections::BTreeMap;

use crate::error::Result;
use crate::instance::{AttributionResult, ChangeInstance, Method, Player};

/// Two-player split of `Δy` between the mechanism and the input vector.
///
/// Uses the four evaluations `f⁽¹⁾(x⁽¹⁾)`, `f⁽²⁾(x⁽¹⁾)`, `f⁽¹⁾(x⁽²⁾)`,
/// `f⁽²⁾(x⁽²⁾)`; the two cross terms are the counterfactuals.
pub fn coarse_attrib(instance: &ChangeInstance) -> Result<AttributionResult> {
    let bg = instance.x_bg();
    let fg = instance.x_fg();
    let f1_x1 = instance.eval_hybrid(false, bg)?;
    let f2_x1 = instance.eval_hybrid(true, bg)?;
    let f1_x2 = instance.eval_hybrid(false, fg)?;
    let f2_x2 = instance.eval_hybrid(true, fg)?;

    let mechanism = 0.5 * (f2_x1 - f1_x1) + 0.5 * (f2_x2 - f1_x2);
    let inputs = 0.5 * (f1_x2 - f1_x1) + 0.5 * (f2_x2 - f2_x1);

    let credits = BTreeMap::from([(Player::Mechanism, mechanism), (Player::InputBundle, inputs)]);
    let mut result = AttributionResult::new(f2_x2 - f1_x1, Method::Coarse, credits);
    result.oracle_evaluations = Some(4);
    Ok(result)
}
