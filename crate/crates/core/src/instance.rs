//! The object being explained, the players that receive credit, and the
//! shape of an attribution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mechanism::{checked_eval, same_handle, MechanismRef};

/// A unit's background and foreground inputs together with the background
/// and foreground mechanisms.
#[derive(Clone)]
pub struct ChangeInstance {
    x_bg: Vec<f64>,
    x_fg: Vec<f64>,
    f_bg: MechanismRef,
    f_fg: MechanismRef,
}

impl ChangeInstance {
    pub fn new(x_bg: Vec<f64>, x_fg: Vec<f64>, f_bg: MechanismRef, f_fg: MechanismRef) -> Result<Self> {
        let d = x_bg.len();
        if d == 0 {
            return Err(Error::NoInputs);
        }
        if x_fg.len() != d {
            return Err(Error::mismatch("foreground input", d, x_fg.len()));
        }
        if f_bg.arity() != d {
            return Err(Error::mismatch("background mechanism arity", d, f_bg.arity()));
        }
        if f_fg.arity() != d {
            return Err(Error::mismatch("foreground mechanism arity", d, f_fg.arity()));
        }
        Ok(Self { x_bg, x_fg, f_bg, f_fg })
    }

    /// Instance whose mechanism is the same handle in both scenarios.
    pub fn with_fixed_mechanism(x_bg: Vec<f64>, x_fg: Vec<f64>, f: MechanismRef) -> Result<Self> {
        Self::new(x_bg, x_fg, f.clone(), f)
    }

    pub fn dim(&self) -> usize {
        self.x_bg.len()
    }

    pub fn x_bg(&self) -> &[f64] {
        &self.x_bg
    }

    pub fn x_fg(&self) -> &[f64] {
        &self.x_fg
    }

    pub fn f_bg(&self) -> &MechanismRef {
        &self.f_bg
    }

    pub fn f_fg(&self) -> &MechanismRef {
        &self.f_fg
    }

    pub fn mechanism_unchanged(&self) -> bool {
        same_handle(&self.f_bg, &self.f_fg)
    }

    /// `y⁽¹⁾ = f⁽¹⁾(x⁽¹⁾)`.
    pub fn y_bg(&self) -> Result<f64> {
        checked_eval(self.f_bg.as_ref(), &self.x_bg)
    }

    /// `y⁽²⁾ = f⁽²⁾(x⁽²⁾)`.
    pub fn y_fg(&self) -> Result<f64> {
        checked_eval(self.f_fg.as_ref(), &self.x_fg)
    }

    /// `Δy = f⁽²⁾(x⁽²⁾) − f⁽¹⁾(x⁽¹⁾)`.
    pub fn delta_y(&self) -> Result<f64> {
        Ok(self.y_fg()? - self.y_bg()?)
    }

    /// Evaluates the chosen mechanism on the hybrid input that takes
    /// `x_fg[j]` where `fg_mask[j]` is set and `x_bg[j]` elsewhere.
    pub fn counterfactual_eval(&self, use_fg_mechanism: bool, fg_mask: &[bool]) -> Result<f64> {
        if fg_mask.len() != self.dim() {
            return Err(Error::mismatch("foreground mask", self.dim(), fg_mask.len()));
        }
        let mut hybrid = Vec::with_capacity(self.dim());
        self.fill_hybrid(fg_mask.iter().copied(), &mut hybrid);
        self.eval_hybrid(use_fg_mechanism, &hybrid)
    }

    pub(crate) fn fill_hybrid(&self, mask: impl Iterator<Item = bool>, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            mask.zip(self.x_bg.iter().zip(&self.x_fg))
                .map(|(fg, (b, f))| if fg { *f } else { *b }),
        );
    }

    pub(crate) fn eval_hybrid(&self, use_fg_mechanism: bool, x: &[f64]) -> Result<f64> {
        let f = if use_fg_mechanism { &self.f_fg } else { &self.f_bg };
        checked_eval(f.as_ref(), x)
    }
}

impl fmt::Debug for ChangeInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChangeInstance")
            .field("x_bg", &self.x_bg)
            .field("x_fg", &self.x_fg)
            .field("f_bg", &self.f_bg.label())
            .field("f_fg", &self.f_fg.label())
            .field("same_mechanism", &self.mechanism_unchanged())
            .finish()
    }
}

/// A cause that receives credit for `Δy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    Mechanism,
    InputBundle,
    Input(usize),
    NodeNoise(usize),
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Mechanism => f.write_str("mechanism"),
            Player::InputBundle => f.write_str("inputs"),
            Player::Input(j) => write!(f, "x[{j}]"),
            Player::NodeNoise(j) => write!(f, "noise[{j}]"),
        }
    }
}

impl FromStr for Player {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let indexed = |prefix: &str| -> Option<usize> { s.strip_prefix(prefix)?.strip_suffix(']')?.parse().ok() };
        match s {
            "mechanism" | "f" => Ok(Player::Mechanism),
            "inputs" => Ok(Player::InputBundle),
            _ => {
                if let Some(j) = indexed("x[") {
                    Ok(Player::Input(j))
                } else if let Some(j) = indexed("noise[") {
                    Ok(Player::NodeNoise(j))
                } else if let Some(j) = s.strip_prefix('x').and_then(|r| r.parse().ok()) {
                    Ok(Player::Input(j))
                } else {
                    Err(Error::InvalidOrdering(format!("unknown player `{s}`")))
                }
            }
        }
    }
}

impl Serialize for Player {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Player {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Coarse,
    Linear,
    FineExact,
    FineSampled,
    Ordered,
    Fcm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Coarse => "coarse",
            Method::Linear => "linear",
            Method::FineExact => "fine_exact",
            Method::FineSampled => "fine_sampled",
            Method::Ordered => "ordered",
            Method::Fcm => "fcm",
        })
    }
}

/// Credits per player for one change, plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub delta_y: f64,
    pub credits: BTreeMap<Player, f64>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<BTreeMap<Player, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations_used: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_evaluations: Option<u64>,
}

impl AttributionResult {
    pub fn new(delta_y: f64, method: Method, credits: BTreeMap<Player, f64>) -> Self {
        Self {
            delta_y,
            credits,
            method,
            stderr: None,
            permutations_used: None,
            oracle_evaluations: None,
        }
    }

    /// Credit of `player`, 0 when the player is not part of this result.
    pub fn credit(&self, player: Player) -> f64 {
        self.credits.get(&player).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.credits.values().sum()
    }

    /// `|Σ credits − Δy|`.
    pub fn completeness_gap(&self) -> f64 {
        (self.total() - self.delta_y).abs()
    }

    /// Sum of the credits of all per-variable input players.
    pub fn input_total(&self) -> f64 {
        self.credits
            .iter()
            .filter(|(p, _)| matches!(p, Player::Input(_) | Player::InputBundle))
            .map(|(_, c)| c)
            .sum()
    }
}
