//! Assembly and rendering of solve reports.
//!
//! A report is the user-facing artifact of a run: every requested allocation,
//! least-core diagnostics when available, pairwise agreement statistics, and
//! the trial budget the run consumed. Rendering is deterministic and carries
//! no timestamps or machine state, so two runs over the same inputs produce
//! identical bytes. Numbers in reports are rounded to six decimal places;
//! game and cache files are the place for full-precision values.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::allocator::{compare, AllocError, Allocation, LeastCoreResult, Method, PairwiseStats};
use crate::game::{render_coalition, Coalition};

/// Report rounding: six decimals, with negative zero normalized away.
/// Magnitudes too large for the scaled product are already integral far
/// beyond six decimals, so they pass through unchanged instead of
/// overflowing to infinity.
pub fn round6(x: f64) -> f64 {
    let scaled = (x * 1e6).round();
    if !scaled.is_finite() {
        return x;
    }
    let r = scaled / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub players: Vec<String>,
    /// Sorted by method, least core first.
    pub allocations: Vec<Allocation>,
    pub pairwise: Vec<PairwiseStats>,
    pub e_star: Option<f64>,
    pub deficits: Option<BTreeMap<Coalition, f64>>,
    pub binding: Option<Vec<Coalition>>,
    pub evaluated_count: Option<usize>,
}

impl SolveReport {
    pub fn assemble(
        players: Vec<String>,
        least_core: Option<&LeastCoreResult>,
        others: &[Allocation],
        evaluated_count: Option<usize>,
    ) -> Result<SolveReport, AllocError> {
        let mut all: Vec<Allocation> = others.to_vec();
        if let Some(lc) = least_core {
            all.push(lc.allocation.clone());
        }
        let cmp = compare(&all)?;
        Ok(SolveReport {
            players,
            allocations: cmp.allocations,
            pairwise: cmp.pairwise,
            e_star: least_core.map(|lc| lc.e_star),
            deficits: least_core.map(|lc| lc.deficits.clone()),
            binding: least_core.map(|lc| lc.binding.clone()),
            evaluated_count,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert(
            "players".into(),
            Value::Array(
                self.players
                    .iter()
                    .map(|p| Value::from(p.clone()))
                    .collect(),
            ),
        );
        let mut methods = Map::new();
        for alloc in &self.allocations {
            let mut phi = Map::new();
            for (name, &v) in self.players.iter().zip(&alloc.phi) {
                phi.insert(name.clone(), Value::from(round6(v)));
            }
            let mut entry = Map::new();
            entry.insert("phi".into(), Value::Object(phi));
            if alloc.method == Method::LeastCore {
                if let Some(e_star) = self.e_star {
                    entry.insert("e_star".into(), Value::from(round6(e_star)));
                }
            }
            methods.insert(alloc.method.tag().into(), Value::Object(entry));
        }
        root.insert("methods".into(), Value::Object(methods));
        if let Some(deficits) = &self.deficits {
            let mut out = Map::new();
            for (&s, &d) in deficits {
                out.insert(render_coalition(&self.players, s), Value::from(round6(d)));
            }
            root.insert("deficits".into(), Value::Object(out));
        }
        if let Some(binding) = &self.binding {
            root.insert(
                "binding".into(),
                Value::Array(
                    binding
                        .iter()
                        .map(|&s| Value::from(render_coalition(&self.players, s)))
                        .collect(),
                ),
            );
        }
        let mut comparison = Map::new();
        for p in &self.pairwise {
            let mut stats = Map::new();
            stats.insert("cosine".into(), Value::from(round6(p.cosine)));
            stats.insert("max_abs_diff".into(), Value::from(round6(p.max_abs_diff)));
            comparison.insert(
                format!("{}_vs_{}", p.a.tag(), p.b.tag()),
                Value::Object(stats),
            );
        }
        root.insert("comparison".into(), Value::Object(comparison));
        if let Some(count) = self.evaluated_count {
            root.insert("evaluated_count".into(), Value::from(count));
        }
        Value::Object(root)
    }

    pub fn render_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_json())
            .expect("report serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn render_table(&self) -> String {
        let name_width = self
            .players
            .iter()
            .map(|p| p.len())
            .chain(std::iter::once(9))
            .max()
            .unwrap()
            .max(3)
            + 2;
        let method_width = self
            .allocations
            .iter()
            .map(|a| a.method.tag().len())
            .max()
            .unwrap_or(6)
            .max(6)
            + 2;
        let mut out = String::new();
        out.push_str(&format!("{:method_width$}", "method"));
        for p in &self.players {
            out.push_str(&format!("{p:>name_width$}"));
        }
        out.push('\n');
        for alloc in &self.allocations {
            out.push_str(&format!("{:method_width$}", alloc.method.tag()));
            for &v in &alloc.phi {
                out.push_str(&format!("{:>name_width$}", format!("{:.6}", round6(v))));
            }
            out.push('\n');
        }
        if let Some(e_star) = self.e_star {
            out.push_str(&format!("\ne_star: {:.6}\n", round6(e_star)));
        }
        if let Some(binding) = &self.binding {
            let keys: Vec<String> = binding
                .iter()
                .map(|&s| render_coalition(&self.players, s))
                .collect();
            out.push_str(&format!("binding: {}\n", keys.join("; ")));
        }
        if let Some(count) = self.evaluated_count {
            out.push_str(&format!("evaluated_count: {count}\n"));
        }
        if !self.pairwise.is_empty() {
            out.push_str("pairwise:\n");
            for p in &self.pairwise {
                out.push_str(&format!(
                    "  {} vs {}: cosine {:.6}, max_abs_diff {:.6}\n",
                    p.a.tag(),
                    p.b.tag(),
                    round6(p.cosine),
                    round6(p.max_abs_diff)
                ));
            }
        }
        if let Some(deficits) = &self.deficits {
            if deficits.len() <= 32 {
                out.push_str("deficits:\n");
                let binding = self.binding.clone().unwrap_or_default();
                for (&s, &d) in deficits {
                    let mark = if binding.contains(&s) {
                        "  (binding)"
                    } else {
                        ""
                    };
                    out.push_str(&format!(
                        "  {}: {:.6}{}\n",
                        render_coalition(&self.players, s),
                        round6(d),
                        mark
                    ));
                }
            } else {
                out.push_str(&format!(
                    "deficits: {} constraints (see the json format for the full list)\n",
                    deficits.len()
                ));
            }
        }
        out
    }
}

/// A report read back from disk, reduced to what comparison needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub players: Vec<String>,
    /// Payoffs in roster order, per method present in the file.
    pub methods: BTreeMap<Method, Vec<f64>>,
    pub e_star: Option<f64>,
    pub evaluated_count: Option<usize>,
}

pub fn parse_report(value: &Value) -> Result<ParsedReport, String> {
    let players: Vec<String> = value
        .get("players")
        .and_then(Value::as_array)
        .ok_or("report has no players array")?
        .iter()
        .map(|p| {
            p.as_str()
                .map(str::to_string)
                .ok_or("player names must be strings")
        })
        .collect::<Result<_, _>>()?;
    let methods_value = value
        .get("methods")
        .and_then(Value::as_object)
        .ok_or("report has no methods object")?;
    let mut methods = BTreeMap::new();
    let mut e_star = None;
    for (tag, entry) in methods_value {
        let method = Method::parse(tag).ok_or_else(|| format!("unknown method tag '{tag}'"))?;
        let phi_map = entry
            .get("phi")
            .and_then(Value::as_object)
            .ok_or_else(|| format!("method '{tag}' has no phi object"))?;
        let mut phi = Vec::with_capacity(players.len());
        for name in &players {
            let v = phi_map
                .get(name)
                .and_then(Value::as_f64)
                .ok_or_else(|| format!("method '{tag}' has no payoff for player '{name}'"))?;
            phi.push(v);
        }
        if method == Method::LeastCore {
            e_star = entry.get("e_star").and_then(Value::as_f64);
        }
        methods.insert(method, phi);
    }
    if methods.is_empty() {
        return Err("report lists no methods".into());
    }
    let evaluated_count = value
        .get("evaluated_count")
        .and_then(Value::as_u64)
        .map(|v| v as usize);
    Ok(ParsedReport {
        players,
        methods,
        e_star,
        evaluated_count,
    })
}
