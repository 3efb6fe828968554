use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::{AttributionResult, Method, Player};
use crate::mechanism::{LinearMechanism, Mechanism};

/// Closed-form attribution for `f⁽ᵏ⁾(x) = Σ βⱼ⁽ᵏ⁾ xⱼ`.
///
/// Input `j` receives the average coefficient times its change; the
/// mechanism receives the coefficient changes weighted by average inputs.
/// No oracle calls.
pub fn linear_attrib(beta_bg: &[f64], beta_fg: &[f64], x_bg: &[f64], x_fg: &[f64]) -> Result<AttributionResult> {
    let d = beta_bg.len();
    if d == 0 {
        return Err(Error::NoInputs);
    }
    for (name, v) in [
        ("foreground coefficients", beta_fg),
        ("background input", x_bg),
        ("foreground input", x_fg),
    ] {
        if v.len() != d {
            return Err(Error::mismatch(name, d, v.len()));
        }
    }

    let mut credits = BTreeMap::new();
    let mut mechanism = 0.0;
    let mut y_bg = 0.0;
    let mut y_fg = 0.0;
    for j in 0..d {
        let (b1, b2, x1, x2) = (beta_bg[j], beta_fg[j], x_bg[j], x_fg[j]);
        credits.insert(Player::Input(j), (b1 + b2) / 2.0 * (x2 - x1));
        mechanism += (x1 + x2) / 2.0 * (b2 - b1);
        y_bg += b1 * x1;
        y_fg += b2 * x2;
    }
    credits.insert(Player::Mechanism, mechanism);
    Ok(AttributionResult::new(y_fg - y_bg, Method::Linear, credits))
}

/// [`linear_attrib`] for two fitted linear mechanisms, intercepts included.
///
/// The intercept is the coefficient of a constant pseudo-feature that is 1
/// in both scenarios, so its change lands on the mechanism and the
/// pseudo-feature itself never appears as a player.
pub fn linear_attrib_mechanisms(
    bg: &LinearMechanism,
    fg: &LinearMechanism,
    x_bg: &[f64],
    x_fg: &[f64],
) -> Result<AttributionResult> {
    if bg.arity() != fg.arity() {
        return Err(Error::mismatch("foreground coefficients", bg.arity(), fg.arity()));
    }
    let mut result = linear_attrib(&bg.coefficients, &fg.coefficients, x_bg, x_fg)?;
    if bg.intercept.is_some() || fg.intercept.is_some() {
        let b0_bg = bg.intercept.unwrap_or(0.0);
        let b0_fg = fg.intercept.unwrap_or(0.0);
        // average of the constant feature is 1
        *result.credits.get_mut(&Player::Mechanism).expect("mechanism credit") += b0_fg - b0_bg;
        result.delta_y = fg.evaluate(x_fg)? - bg.evaluate(x_bg)?;
    }
    Ok(result)
}
