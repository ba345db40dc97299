//! Area, depth and switching-activity proxies.
//!
//! Area is counted in transistor equivalents per gate kind, depth in unit
//! gate delays, dynamic power as toggles weighted by the driving gate's
//! area and leakage as total area. None of these are synthesis results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{Gate, GateKind, Netlist, Zone};
use crate::recordize::{chip_view, PartitionedDesign};
use crate::sim::SimTrace;

pub const PROXY_LABEL: &str =
    "proxy estimates (transistor-count area, unit-delay depth, toggle-weighted activity), not synthesis results";

#[derive(Debug, Error)]
pub enum CostError {
    #[error("switching needs at least 2 cycles, trace has {0}")]
    TraceTooShort(usize),
    #[error("traces were produced under different stimulus")]
    StimulusMismatch,
    #[error("trace has no value for wire `{0}`")]
    MissingWire(String),
    #[error("negative {what} for `{kind}`")]
    Negative { what: &'static str, kind: GateKind },
    #[error("cost model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Area of a gate with `n` inputs: `base + per_extra_input * (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaWeight {
    pub base: f64,
    pub per_extra_input: f64,
}

impl AreaWeight {
    const fn new(base: f64, per_extra_input: f64) -> Self {
        Self {
            base,
            per_extra_input,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub area: BTreeMap<GateKind, AreaWeight>,
    pub delay: BTreeMap<GateKind, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CostModelPatch {
    #[serde(default)]
    area: BTreeMap<GateKind, AreaWeight>,
    #[serde(default)]
    delay: BTreeMap<GateKind, f64>,
}

impl Default for CostModel {
    /// Static-CMOS transistor counts: NOT 2, BUF 4, NAND/NOR 2n,
    /// AND/OR 2n+2, XOR/XNOR 8(n-1), MUX2 8, constants 0; unit delays
    /// except BUF and constants.
    fn default() -> Self {
        use GateKind::*;
        let area = [
            (Not, AreaWeight::new(2.0, 0.0)),
            (Buf, AreaWeight::new(4.0, 0.0)),
            (Nand, AreaWeight::new(2.0, 2.0)),
            (Nor, AreaWeight::new(2.0, 2.0)),
            (And, AreaWeight::new(4.0, 2.0)),
            (Or, AreaWeight::new(4.0, 2.0)),
            (Xor, AreaWeight::new(0.0, 8.0)),
            (Xnor, AreaWeight::new(0.0, 8.0)),
            (Mux2, AreaWeight::new(8.0, 0.0)),
            (Const0, AreaWeight::new(0.0, 0.0)),
            (Const1, AreaWeight::new(0.0, 0.0)),
        ]
        .into_iter()
        .collect();
        let delay = GateKind::ALL
            .iter()
            .map(|&k| (k, if matches!(k, Buf | Const0 | Const1) { 0.0 } else { 1.0 }))
            .collect();
        Self { area, delay }
    }
}

impl CostModel {
    /// Defaults with any entries present in `text` replaced.
    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let patch: CostModelPatch = serde_json::from_str(text)?;
        let mut m = Self::default();
        m.area.extend(patch.area);
        m.delay.extend(patch.delay);
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    fn validate(&self) -> Result<(), CostError> {
        for (&kind, w) in &self.area {
            if w.base < 0.0 || w.per_extra_input < 0.0 {
                return Err(CostError::Negative { what: "area", kind });
            }
        }
        for (&kind, &d) in &self.delay {
            if d < 0.0 {
                return Err(CostError::Negative { what: "delay", kind });
            }
        }
        Ok(())
    }

    pub fn gate_area(&self, g: &Gate) -> f64 {
        let w = self.area[&g.kind];
        w.base + w.per_extra_input * g.ins.len().saturating_sub(1) as f64
    }

    pub fn gate_delay(&self, kind: GateKind) -> f64 {
        self.delay[&kind]
    }
}

fn in_zone(g: &Gate, zone: Option<Zone>) -> bool {
    zone.is_none_or(|z| g.zone == z)
}

/// Sum of gate areas, optionally restricted to one zone.
pub fn area(n: &Netlist, model: &CostModel, zone: Option<Zone>) -> f64 {
    n.gates()
        .iter()
        .filter(|g| in_zone(g, zone))
        .map(|g| model.gate_area(g))
        .sum()
}

/// Longest input-to-output path under the model's gate delays.
pub fn depth(n: &Netlist, model: &CostModel) -> f64 {
    let prog = n.program();
    let mut arrival = vec![0.0f64; prog.wire_count()];
    for &gi in prog.topo_order() {
        let g = &n.gates()[gi];
        let t = g
            .ins
            .iter()
            .map(|w| arrival[prog.wire_index(w).expect("wire")])
            .fold(0.0, f64::max);
        arrival[prog.wire_index(&g.out).expect("wire")] = t + model.gate_delay(g.kind);
    }
    prog.output_indices()
        .iter()
        .map(|&o| arrival[o])
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Switching {
    /// Transitions on gate outputs between consecutive cycles.
    pub toggles: u64,
    /// Toggles weighted by the area of the driving gate.
    pub weighted_activity: f64,
    /// Leakage proxy, equal to area.
    pub leakage: f64,
}

/// Switching activity of the gates of `n` over the cycles of `t`; `t` may
/// come from a larger netlist as long as it records every gate output.
pub fn switching(
    n: &Netlist,
    t: &SimTrace,
    model: &CostModel,
    zone: Option<Zone>,
) -> Result<Switching, CostError> {
    if t.cycles() < 2 {
        return Err(CostError::TraceTooShort(t.cycles()));
    }
    let mut toggles = 0u64;
    let mut weighted = 0.0;
    for g in n.gates().iter().filter(|g| in_zone(g, zone)) {
        let col = t
            .column(&g.out)
            .ok_or_else(|| CostError::MissingWire(g.out.clone()))?;
        let k = col.toggles() as u64;
        toggles += k;
        weighted += k as f64 * model.gate_area(g);
    }
    Ok(Switching {
        toggles,
        weighted_activity: weighted,
        leakage: area(n, model, zone),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pair {
    pub original: f64,
    pub transformed: f64,
}

impl Pair {
    pub fn ratio(&self) -> f64 {
        if self.original == 0.0 {
            f64::NAN
        } else {
            self.transformed / self.original
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proxy {
    pub area: Pair,
    pub depth: Pair,
    pub activity: Pair,
    pub leakage: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ratios {
    pub area: f64,
    pub depth: f64,
    pub activity: f64,
    pub leakage: f64,
    /// `(depth_transformed - depth_original) / depth_original`.
    pub delay_increase: f64,
}

/// Published figures, carried for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceFigures {
    pub area: f64,
    pub dyn_power: f64,
    pub leak_power: f64,
    pub delay_increase_max: f64,
}

impl Default for ReferenceFigures {
    fn default() -> Self {
        Self {
            area: 2.4,
            dyn_power: 3.4,
            leak_power: 2.19,
            delay_increase_max: 0.11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub label: String,
    pub groups: usize,
    pub randomized_inputs: usize,
    /// More than two random bits goes past the published constructions.
    pub extended: bool,
    pub proxy: Proxy,
    pub ratios: Ratios,
    pub untrusted_area: f64,
    #[serde(rename = "paper_reference")]
    pub reference: ReferenceFigures,
}

impl CostReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Compares `orig` with the chip side of `d` (encoded outputs; the
/// consumer-side decoders are left out). Both traces must come from the
/// same stimulus.
pub fn cost_report(
    orig: &Netlist,
    d: &PartitionedDesign,
    orig_trace: &SimTrace,
    design_trace: &SimTrace,
    model: &CostModel,
) -> Result<CostReport, CostError> {
    if orig_trace.cycles() != design_trace.cycles() {
        return Err(CostError::StimulusMismatch);
    }
    for x in d.source_inputs() {
        if orig_trace.column(x) != design_trace.column(x) || orig_trace.column(x).is_none() {
            return Err(CostError::StimulusMismatch);
        }
    }
    let chip = chip_view(d);
    let so = switching(orig, orig_trace, model, None)?;
    let st = switching(&chip, design_trace, model, None)?;
    let proxy = Proxy {
        area: Pair {
            original: area(orig, model, None),
            transformed: area(&chip, model, None),
        },
        depth: Pair {
            original: depth(orig, model),
            transformed: depth(&chip, model),
        },
        activity: Pair {
            original: so.weighted_activity,
            transformed: st.weighted_activity,
        },
        leakage: Pair {
            original: so.leakage,
            transformed: st.leakage,
        },
    };
    let ratios = Ratios {
        area: proxy.area.ratio(),
        depth: proxy.depth.ratio(),
        activity: proxy.activity.ratio(),
        leakage: proxy.leakage.ratio(),
        delay_increase: proxy.depth.ratio() - 1.0,
    };
    Ok(CostReport {
        label: PROXY_LABEL.to_string(),
        groups: d.groups(),
        randomized_inputs: d.config().subset().len(),
        extended: d.config().is_extended(),
        proxy,
        ratios,
        untrusted_area: area(d.netlist(), model, Some(Zone::Untrusted)),
        reference: ReferenceFigures::default(),
    })
}
