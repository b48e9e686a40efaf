use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::widgets::{Screen, SizeClass, ValueType, WidgetKind, MAX_LABEL_CELLS};

pub const DEFAULT_COST_MODEL_TOML: &str = include_str!("../../fixtures/cost_model.toml");

/// Widget kinds the model must price: interaction widgets and adders.
pub const PRICED_KINDS: [WidgetKind; 10] = [
    WidgetKind::Label,
    WidgetKind::Textbox,
    WidgetKind::Dropdown,
    WidgetKind::Slider,
    WidgetKind::RangeSlider,
    WidgetKind::Checkboxes,
    WidgetKind::RadioButtons,
    WidgetKind::Buttons,
    WidgetKind::Toggle,
    WidgetKind::Adder,
];

/// Appropriateness scores of one widget kind per value type, indexed by
/// cardinality bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MRow {
    pub numeric: [f64; 4],
    pub string: [f64; 4],
    pub subtree: [f64; 4],
}

impl MRow {
    pub fn get(&self, vtype: ValueType, bucket: usize) -> f64 {
        match vtype {
            ValueType::Numeric => self.numeric[bucket],
            ValueType::String => self.string[bucket],
            ValueType::Subtree => self.subtree[bucket],
        }
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.numeric.iter().chain(&self.string).chain(&self.subtree).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePenalty {
    pub small: f64,
    pub medium: f64,
    pub large: f64,
}

impl SizePenalty {
    pub fn get(&self, s: SizeClass) -> f64 {
        match s {
            SizeClass::Small => self.small,
            SizeClass::Medium => self.medium,
            SizeClass::Large => self.large,
        }
    }
}

/// Step function over the longest display string of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthPenalty {
    pub thresholds: Vec<usize>,
    pub penalties: Vec<f64>,
    /// Cost per display character cut off at `MAX_LABEL_CELLS`, summed over
    /// the domain.
    #[serde(default)]
    pub per_hidden_char: f64,
}

impl LengthPenalty {
    pub fn get(&self, max_len: usize) -> f64 {
        let i = self
            .thresholds
            .iter()
            .position(|&t| max_len <= t)
            .unwrap_or(self.thresholds.len());
        self.penalties[i]
    }

    /// Bucket penalty of the longest string plus the hidden-character term.
    pub fn of_domain(&self, domain: &[String]) -> f64 {
        let lens = domain.iter().map(|s| s.chars().count());
        let hidden: usize = lens.clone().map(|l| l.saturating_sub(MAX_LABEL_CELLS)).sum();
        self.get(lens.max().unwrap_or(0)) + self.per_hidden_char * hidden as f64
    }
}

/// Appropriateness table, interaction costs and screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Cost per edge of the subtree connecting the widgets one step changes.
    pub edge_cost: f64,
    /// Weight of the usefulness sum.
    pub lambda: f64,
    /// Witness assignments enumerated per query; beyond it the first ones
    /// found are used.
    pub witness_cap: usize,
    pub screen: Screen,
    pub size_penalty: SizePenalty,
    pub length_penalty: LengthPenalty,
    pub interact_cost: BTreeMap<WidgetKind, f64>,
    pub m_table: BTreeMap<WidgetKind, MRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("cost model does not parse: {0}")]
    Parse(String),
    #[error("cost model has no {table} entry for {kind}")]
    Missing { table: &'static str, kind: WidgetKind },
    #[error("cost model value {what} must be finite and non-negative")]
    Negative { what: String },
    #[error("cost model is inconsistent: {0}")]
    Inconsistent(String),
}

/// Cardinality bucket of a domain: `<=3`, `4-7`, `8-15`, `>15`.
pub fn bucket(n: usize) -> usize {
    match n {
        0..=3 => 0,
        4..=7 => 1,
        8..=15 => 2,
        _ => 3,
    }
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::from_toml_str(DEFAULT_COST_MODEL_TOML).expect("shipped cost model is valid")
    }
}

impl CostModel {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let m: CostModel = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("cost model serializes")
    }

    pub fn with_screen(mut self, screen: Screen) -> Self {
        self.screen = screen;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |what: String, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Negative { what })
            }
        };
        check("edge_cost".into(), self.edge_cost)?;
        check("lambda".into(), self.lambda)?;
        check("size_penalty.small".into(), self.size_penalty.small)?;
        check("size_penalty.medium".into(), self.size_penalty.medium)?;
        check("size_penalty.large".into(), self.size_penalty.large)?;
        check("length_penalty.per_hidden_char".into(), self.length_penalty.per_hidden_char)?;
        for (i, &v) in self.length_penalty.penalties.iter().enumerate() {
            check(format!("length_penalty.penalties[{i}]"), v)?;
        }
        if self.length_penalty.penalties.len() != self.length_penalty.thresholds.len() + 1 {
            return Err(ConfigError::Inconsistent(
                "length_penalty needs one more penalty than thresholds".into(),
            ));
        }
        if self.witness_cap == 0 {
            return Err(ConfigError::Inconsistent("witness_cap must be at least 1".into()));
        }
        for kind in PRICED_KINDS {
            let row = self.m_table.get(&kind).ok_or(ConfigError::Missing {
                table: "m_table",
                kind,
            })?;
            for v in row.values() {
                check(format!("m_table.{kind}"), v)?;
            }
            let c = self.interact_cost.get(&kind).ok_or(ConfigError::Missing {
                table: "interact_cost",
                kind,
            })?;
            check(format!("interact_cost.{kind}"), *c)?;
        }
        Ok(())
    }

    /// Appropriateness of `kind` at `size` over a domain. Labels carry no
    /// penalties.
    pub fn m_score(
        &self,
        kind: WidgetKind,
        size: Option<SizeClass>,
        vtype: ValueType,
        domain: &[String],
    ) -> Result<f64, super::CostError> {
        let row = self
            .m_table
            .get(&kind)
            .ok_or(super::CostError::MissingEntry(kind))?;
        let base = row.get(vtype, bucket(domain.len()));
        if kind == WidgetKind::Label {
            return Ok(base);
        }
        Ok(base + self.length_penalty.of_domain(domain) + size.map_or(0.0, |s| self.size_penalty.get(s)))
    }

    pub fn interact(&self, kind: WidgetKind) -> f64 {
        self.interact_cost.get(&kind).copied().unwrap_or(0.0)
    }
}
