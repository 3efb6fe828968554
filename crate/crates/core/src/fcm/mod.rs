//! Attribution through an invertible functional causal model.
//!
//! Each node is `X_j := f_j(PA_j, N_j)` with a known inverse recovering
//! `N_j` from `X_j` and its parents. Observing every node in both scenarios
//! pins down both noise vectors; the players are the per-node noises and a
//! coalition's value is the sink computed with members' noise taken from the
//! foreground.

mod expr;

pub use expr::{BinOp, Bindings, Expr, UnaryOp};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attribution::game::{exact_shapley, sampled_shapley, CoalitionGame, MAX_CACHED_PLAYERS};
use crate::attribution::{SamplingConfig, DEFAULT_EXACT_LIMIT};
use crate::error::{Error, Result};
use crate::instance::{AttributionResult, Method, Player};

/// Largest accepted `|f(pa, f⁻¹(x, pa)) − x|`, scaled by `max(1, |x|)`.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FcmNode {
    pub name: String,
    pub parents: Vec<usize>,
    /// `f_j(pa, noise)`.
    pub structural: Expr,
    /// `f_j⁻¹(x, pa)`, returning the noise.
    pub inverse: Expr,
}

impl FcmNode {
    pub fn new(name: impl Into<String>, parents: Vec<usize>, structural: Expr, inverse: Expr) -> Self {
        Self {
            name: name.into(),
            parents,
            structural,
            inverse,
        }
    }

    /// `X := N`.
    pub fn root(name: impl Into<String>) -> Self {
        Self::new(name, Vec::new(), Expr::Noise, Expr::X)
    }

    /// `X := Σ wᵢ·paᵢ + N` with its exact inverse.
    pub fn additive(name: impl Into<String>, parents: Vec<usize>, weights: &[f64]) -> Self {
        assert_eq!(parents.len(), weights.len(), "one weight per parent");
        let mut mean: Option<Expr> = None;
        for (i, &w) in weights.iter().enumerate() {
            let term = Expr::num(w) * Expr::pa(i);
            mean = Some(match mean {
                Some(m) => m + term,
                None => term,
            });
        }
        match mean {
            Some(m) => Self::new(name, parents, m.clone() + Expr::Noise, Expr::X - m),
            None => Self::root(name),
        }
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }
}

/// Validated DAG of invertible nodes with a designated sink.
#[derive(Debug, Clone)]
pub struct InvertibleFcm {
    nodes: Vec<FcmNode>,
    sink: usize,
    topo_order: Vec<usize>,
}

impl InvertibleFcm {
    pub fn new(nodes: Vec<FcmNode>, sink: usize) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidModel("the model has no nodes".into()));
        }
        if sink >= n {
            return Err(Error::InvalidModel(format!(
                "sink index {sink} out of range for {n} nodes"
            )));
        }
        let mut names = BTreeSet::new();
        for (j, node) in nodes.iter().enumerate() {
            if !names.insert(node.name.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate node name `{}`", node.name)));
            }
            let mut seen = BTreeSet::new();
            for &p in &node.parents {
                if p >= n || p == j {
                    return Err(Error::InvalidModel(format!(
                        "node `{}` has invalid parent {p}",
                        node.name
                    )));
                }
                if !seen.insert(p) {
                    return Err(Error::InvalidModel(format!(
                        "node `{}` lists parent {p} twice",
                        node.name
                    )));
                }
            }
            for (what, e) in [("structural", &node.structural), ("inverse", &node.inverse)] {
                if let Some(i) = e.max_parent() {
                    if i >= node.parents.len() {
                        return Err(Error::InvalidModel(format!(
                            "{what} function of `{}` references pa[{i}] but the node has {} parents",
                            node.name,
                            node.parents.len()
                        )));
                    }
                }
            }
            if node.structural.uses_x() {
                return Err(Error::InvalidModel(format!(
                    "structural function of `{}` uses `x`",
                    node.name
                )));
            }
            if node.inverse.uses_noise() {
                return Err(Error::InvalidModel(format!(
                    "inverse function of `{}` uses `noise`",
                    node.name
                )));
            }
        }
        if nodes.iter().any(|node| node.parents.contains(&sink)) {
            return Err(Error::InvalidModel(format!("sink `{}` has children", nodes[sink].name)));
        }
        let topo_order = topological_order(&nodes)?;
        Ok(Self {
            nodes,
            sink,
            topo_order,
        })
    }

    pub fn nodes(&self) -> &[FcmNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Parses the JSON specification format.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: FcmSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_spec(&self) -> FcmSpec {
        FcmSpec {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    name: n.name.clone(),
                    parents: n.parents.iter().map(|&p| self.nodes[p].name.clone()).collect(),
                    structural: Some(n.structural.clone()),
                    inverse: Some(n.inverse.clone()),
                })
                .collect(),
            sink: Some(self.nodes[self.sink].name.clone()),
        }
    }

    /// Reads observations given either as `{"name": value, ...}` or as an
    /// array in node order.
    pub fn observations_from_json(&self, value: &serde_json::Value) -> Result<Vec<f64>> {
        let number = |name: &str, v: &serde_json::Value| {
            v.as_f64()
                .ok_or_else(|| Error::Data(format!("observation for `{name}` is not a number")))
        };
        match value {
            serde_json::Value::Array(items) => {
                if items.len() != self.len() {
                    return Err(Error::mismatch("observations", self.len(), items.len()));
                }
                items.iter().zip(&self.nodes).map(|(v, n)| number(&n.name, v)).collect()
            }
            serde_json::Value::Object(map) => {
                if let Some(k) = map.keys().find(|k| self.index_of(k).is_none()) {
                    return Err(Error::Data(format!("observation for unknown node `{k}`")));
                }
                self.nodes
                    .iter()
                    .map(|n| match map.get(&n.name) {
                        Some(v) => number(&n.name, v),
                        None => Err(Error::Data(format!("no observation for node `{}`", n.name))),
                    })
                    .collect()
            }
            _ => Err(Error::Data("observations must be a JSON object or array".into())),
        }
    }

    pub fn load_observations(&self, path: impl AsRef<Path>) -> Result<Vec<f64>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.observations_from_json(&serde_json::from_str(&text)?)
    }

    fn parent_values(&self, j: usize, values: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.nodes[j].parents.iter().map(|&p| values[p]));
    }
}

fn topological_order(nodes: &[FcmNode]) -> Result<Vec<usize>> {
    let n = nodes.len();
    let mut indegree: Vec<usize> = nodes.iter().map(|node| node.parents.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (j, node) in nodes.iter().enumerate() {
        for &p in &node.parents {
            children[p].push(j);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(j) = ready.pop_first() {
        order.push(j);
        for &c in &children[j] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&j| indegree[j] > 0).expect("a node on the cycle");
        return Err(Error::InvalidModel(format!(
            "graph has a cycle through `{}`",
            nodes[stuck].name
        )));
    }
    Ok(order)
}

/// Recovers each node's noise from the observed values, in topological
/// order, checking that the inverse round-trips.
pub fn recover_noise(fcm: &InvertibleFcm, observed: &[f64]) -> Result<Vec<f64>> {
    if observed.len() != fcm.len() {
        return Err(Error::mismatch("observations", fcm.len(), observed.len()));
    }
    let mut noise = vec![0.0; fcm.len()];
    let mut pa = Vec::new();
    for &j in &fcm.topo_order {
        let node = &fcm.nodes[j];
        let x = observed[j];
        if !x.is_finite() {
            return Err(Error::Data(format!("observation for `{}` is not finite", node.name)));
        }
        fcm.parent_values(j, observed, &mut pa);
        let n = node.inverse.eval(&Bindings { pa: &pa, noise: 0.0, x });
        let back = node.structural.eval(&Bindings {
            pa: &pa,
            noise: n,
            x: 0.0,
        });
        let residual = (back - x).abs();
        if !n.is_finite() || residual.is_nan() || residual > ROUND_TRIP_TOLERANCE * x.abs().max(1.0) {
            return Err(Error::Invertibility {
                node: node.name.clone(),
                residual: if n.is_finite() { residual } else { f64::INFINITY },
            });
        }
        noise[j] = n;
    }
    Ok(noise)
}

/// Forward pass with node `j`'s noise taken from `fg` when `use_fg[j]` and
/// from `bg` otherwise; returns the sink value.
pub fn forward_eval(fcm: &InvertibleFcm, bg: &[f64], fg: &[f64], use_fg: &[bool]) -> Result<f64> {
    let mut values = vec![0.0; fcm.len()];
    forward_into(fcm, bg, fg, use_fg, &mut values, &mut Vec::new())
}

fn forward_into(
    fcm: &InvertibleFcm,
    bg: &[f64],
    fg: &[f64],
    use_fg: &[bool],
    values: &mut [f64],
    pa: &mut Vec<f64>,
) -> Result<f64> {
    let n = fcm.len();
    for (what, len) in [
        ("background noise", bg.len()),
        ("foreground noise", fg.len()),
        ("noise selection", use_fg.len()),
    ] {
        if len != n {
            return Err(Error::mismatch(what, n, len));
        }
    }
    for &j in &fcm.topo_order {
        fcm.parent_values(j, values, pa);
        let noise = if use_fg[j] { fg[j] } else { bg[j] };
        let v = fcm.nodes[j].structural.eval(&Bindings { pa, noise, x: 0.0 });
        if !v.is_finite() {
            return Err(Error::NonFinite {
                label: fcm.nodes[j].name.clone(),
                value: v,
            });
        }
        values[j] = v;
    }
    Ok(values[fcm.sink])
}

struct NoiseGame<'a> {
    fcm: &'a InvertibleFcm,
    bg: &'a [f64],
    fg: &'a [f64],
    values: Vec<f64>,
    pa: Vec<f64>,
}

impl CoalitionGame for NoiseGame<'_> {
    fn num_players(&self) -> usize {
        self.fcm.len()
    }

    fn value(&mut self, members: &[bool]) -> Result<f64> {
        forward_into(self.fcm, self.bg, self.fg, members, &mut self.values, &mut self.pa)
    }
}

/// Shapley attribution of the sink's change to the per-node noises.
pub fn fcm_attrib(
    fcm: &InvertibleFcm,
    observed_bg: &[f64],
    observed_fg: &[f64],
    sampling: Option<&SamplingConfig>,
) -> Result<AttributionResult> {
    fcm_attrib_with_limit(fcm, observed_bg, observed_fg, DEFAULT_EXACT_LIMIT, sampling)
}

/// As [`fcm_attrib`], exact while the node count is at most `limit`.
pub fn fcm_attrib_with_limit(
    fcm: &InvertibleFcm,
    observed_bg: &[f64],
    observed_fg: &[f64],
    limit: usize,
    sampling: Option<&SamplingConfig>,
) -> Result<AttributionResult> {
    let bg = recover_noise(fcm, observed_bg)?;
    let fg = recover_noise(fcm, observed_fg)?;
    let mut game = NoiseGame {
        fcm,
        bg: &bg,
        fg: &fg,
        values: vec![0.0; fcm.len()],
        pa: Vec::new(),
    };
    let player = |j: usize| Player::NodeNoise(j);
    let n = fcm.len();

    if n <= limit.min(MAX_CACHED_PLAYERS) {
        let out = exact_shapley(&mut game)?;
        let credits = out.values.iter().enumerate().map(|(j, v)| (player(j), *v)).collect();
        let mut result = AttributionResult::new(out.v_full - out.v_empty, Method::Fcm, credits);
        result.oracle_evaluations = Some(out.evaluations);
        return Ok(result);
    }
    let Some(config) = sampling else {
        return Err(Error::OverExactLimit { size: n, limit });
    };
    config.validate()?;
    let v_empty = game.value(&vec![false; n])?;
    let v_full = game.value(&vec![true; n])?;
    let out = sampled_shapley(&mut game, v_empty, v_full, config.num_permutations, config.seed)?;
    let credits = out.means.iter().enumerate().map(|(j, v)| (player(j), *v)).collect();
    let mut result = AttributionResult::new(v_full - v_empty, Method::Fcm, credits);
    result.stderr = out.stderr.map(|se| {
        se.iter()
            .enumerate()
            .map(|(j, s)| (player(j), *s))
            .collect::<BTreeMap<_, _>>()
    });
    result.permutations_used = Some(config.num_permutations);
    result.oracle_evaluations = Some(out.evaluations + 2);
    Ok(result)
}

/// JSON form of an [`InvertibleFcm`]. Parents are referenced by name; root
/// nodes may omit both functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcmSpec {
    pub nodes: Vec<NodeSpec>,
    /// Defaults to the only node without children.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<Expr>,
}

impl FcmSpec {
    pub fn build(self) -> Result<InvertibleFcm> {
        let index: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(j, n)| (n.name.as_str(), j))
            .collect();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for spec in &self.nodes {
            let parents =
                spec.parents
                    .iter()
                    .map(|p| {
                        index.get(p.as_str()).copied().ok_or_else(|| {
                            Error::InvalidModel(format!("node `{}` has unknown parent `{p}`", spec.name))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            let (structural, inverse) = match (&spec.structural, &spec.inverse) {
                (Some(s), Some(i)) => (s.clone(), i.clone()),
                (None, None) if parents.is_empty() => (Expr::Noise, Expr::X),
                _ => {
                    return Err(Error::InvalidModel(format!(
                        "node `{}` needs both a structural and an inverse function",
                        spec.name
                    )))
                }
            };
            nodes.push(FcmNode::new(spec.name.clone(), parents, structural, inverse));
        }
        let sink = match &self.sink {
            Some(name) => *index
                .get(name.as_str())
                .ok_or_else(|| Error::InvalidModel(format!("unknown sink `{name}`")))?,
            None => {
                let mut leaves = (0..nodes.len()).filter(|&j| !nodes.iter().any(|n| n.parents.contains(&j)));
                match (leaves.next(), leaves.next()) {
                    (Some(j), None) => j,
                    _ => {
                        return Err(Error::InvalidModel(
                            "cannot infer the sink: name it with the `sink` field".into(),
                        ))
                    }
                }
            }
        };
        InvertibleFcm::new(nodes, sink)
    }
}
