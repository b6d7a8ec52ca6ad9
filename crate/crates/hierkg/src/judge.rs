//! LLM-as-judge semantic evaluation: accuracy, comprehensiveness, and
//! relevance, each an integer from 0 to 5, per evaluated unit and stage.
//!
//! Two aggregations mirror the two ways the numbers are read: all-sample
//! means cover every unit of a stage (no-action units included, scored on
//! whether declining was correct), positive-sample means cover only units
//! the filter marked for action. Units the judge failed to score twice are
//! excluded from means and surface in an explicit unscored rate; a missing
//! population is reported as absent, never as zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::llm::{CallTag, ChatRequest, LlmClient};
use crate::model::{JudgeScore, Stage};
use crate::parser;
use crate::prompts::{fill, PromptStage, TemplateSet, NO_ACTION_MARKER};

/// Rubric criteria injected verbatim into judge prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeCriteria {
    pub accuracy: String,
    pub comprehensiveness: String,
    pub relevance: String,
}

impl Default for JudgeCriteria {
    fn default() -> Self {
        JudgeCriteria {
            accuracy: "do the produced texts and properties faithfully reflect the source \
                       material, with correct meaning, correct boundaries, and precisely \
                       labeled relations"
                .to_string(),
            comprehensiveness: "does the output collectively cover all distinct factual and \
                                relational information present in the source material, with no \
                                important fact missing"
                .to_string(),
            relevance: "is the output free of information not grounded in the source material, \
                        with no invented entities, properties, or relations"
                .to_string(),
        }
    }
}

/// One unit under evaluation: what the model saw and what it produced.
/// `output` is `None` for negative units, where the filter declined to act.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeUnit {
    pub unit_id: String,
    pub stage: Stage,
    pub source_context: String,
    pub output: Option<String>,
}

impl JudgeUnit {
    pub fn action_taken(&self) -> bool {
        self.output.is_some()
    }
}

/// Judge prompt: the three criteria, the source material, and the output
/// under evaluation (or the explicit no-action marker), demanding integer
/// scores 0–5 plus a one-sentence rationale in a fixed JSON shape.
pub fn build_judge_prompt(
    unit: &JudgeUnit,
    criteria: &JudgeCriteria,
    templates: &TemplateSet,
) -> ChatRequest {
    let template = templates.get(PromptStage::Judge);
    let output = match &unit.output {
        Some(output) => output.clone(),
        None => NO_ACTION_MARKER.to_string(),
    };
    ChatRequest {
        system_prompt: template.system.clone(),
        user_prompt: fill(
            &template.user,
            &[
                ("stage", unit.stage.as_str()),
                ("source", &unit.source_context),
                ("output", &output),
                ("accuracy", &criteria.accuracy),
                ("comprehensiveness", &criteria.comprehensiveness),
                ("relevance", &criteria.relevance),
            ],
        ),
    }
}

/// Score one unit. Out-of-range or non-integer scores trigger one re-ask;
/// a second failure marks the unit unscored (`None`), which excludes it from
/// means and counts it in the unscored rate. Transport errors propagate.
pub fn score_unit(
    unit: &JudgeUnit,
    client: &LlmClient,
    criteria: &JudgeCriteria,
    templates: &TemplateSet,
) -> Result<Option<JudgeScore>> {
    let request = build_judge_prompt(unit, criteria, templates);
    let tag = CallTag::new("judge", unit.unit_id.clone());
    let mut outcome = parser::parse_judge_scores(&client.complete(&request, &tag)?.text);
    if outcome.is_failed() {
        log::warn!(
            "judge output for {} invalid ({}), re-asking once",
            unit.unit_id,
            outcome.diagnostics.join("; ")
        );
        let strict = ChatRequest {
            system_prompt: request.system_prompt.clone(),
            user_prompt: format!(
                "{}\n\nThe previous answer was not valid. Scores must be whole numbers from 0 \
                 to 5 in the exact JSON shape requested.",
                request.user_prompt
            ),
        };
        outcome = parser::parse_judge_scores(&client.complete(&strict, &tag)?.text);
    }
    match outcome.value {
        Some(payload) => Ok(Some(JudgeScore::new(
            payload.accuracy as u8,
            payload.comprehensiveness as u8,
            payload.relevance as u8,
            payload.rationale,
            unit.stage,
        )?)),
        None => {
            log::warn!("unit {} left unscored", unit.unit_id);
            Ok(None)
        }
    }
}

/// Action counts per stage, taken from the extraction decision logs:
/// how many entities the filter consulted and how many it marked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionStats {
    pub split_marked: usize,
    pub split_total: usize,
    pub abstract_marked: usize,
    pub abstract_total: usize,
}

/// Mean scores over one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeans {
    pub accuracy: f64,
    pub comprehensiveness: f64,
    pub relevance: f64,
    pub unit_count: usize,
}

/// Per-stage unscored bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnscoredStats {
    pub unscored: usize,
    pub total: usize,
}

impl UnscoredStats {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.unscored as f64 / self.total as f64
        }
    }
}

/// Aggregated judge results: all-sample and positive-sample means per stage,
/// action ratios, and unscored rates. Missing populations are absent cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub all_samples: BTreeMap<Stage, StageMeans>,
    pub positive_samples: BTreeMap<Stage, StageMeans>,
    pub split_ratio: Option<ActionRatio>,
    pub abstract_ratio: Option<ActionRatio>,
    pub unscored: BTreeMap<Stage, UnscoredStats>,
}

/// marked / total, kept as counts so reports can print "276/12956" style
/// cells alongside the 3-decimal ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRatio {
    pub marked: usize,
    pub total: usize,
}

impl ActionRatio {
    pub fn value(&self) -> f64 {
        self.marked as f64 / self.total as f64
    }
}

/// Fold scored units and the action log into the report. Unscored units
/// (score `None`) are excluded from means; empty populations yield absent
/// cells rather than zeros.
pub fn aggregate(scored: &[(JudgeUnit, Option<JudgeScore>)], actions: &ActionStats) -> JudgeReport {
    let mut all: BTreeMap<Stage, Vec<&JudgeScore>> = BTreeMap::new();
    let mut positive: BTreeMap<Stage, Vec<&JudgeScore>> = BTreeMap::new();
    let mut unscored: BTreeMap<Stage, UnscoredStats> = BTreeMap::new();

    for (unit, score) in scored {
        let stats = unscored.entry(unit.stage).or_insert(UnscoredStats {
            unscored: 0,
            total: 0,
        });
        stats.total += 1;
        match score {
            Some(score) => {
                all.entry(unit.stage).or_default().push(score);
                if unit.action_taken() {
                    positive.entry(unit.stage).or_default().push(score);
                }
            }
            None => stats.unscored += 1,
        }
    }

    let means = |population: BTreeMap<Stage, Vec<&JudgeScore>>| {
        population
            .into_iter()
            .map(|(stage, scores)| {
                let n = scores.len() as f64;
                (
                    stage,
                    StageMeans {
                        accuracy: scores.iter().map(|s| s.accuracy as f64).sum::<f64>() / n,
                        comprehensiveness: scores
                            .iter()
                            .map(|s| s.comprehensiveness as f64)
                            .sum::<f64>()
                            / n,
                        relevance: scores.iter().map(|s| s.relevance as f64).sum::<f64>() / n,
                        unit_count: scores.len(),
                    },
                )
            })
            .collect()
    };

    JudgeReport {
        all_samples: means(all),
        positive_samples: means(positive),
        split_ratio: (actions.split_total > 0).then_some(ActionRatio {
            marked: actions.split_marked,
            total: actions.split_total,
        }),
        abstract_ratio: (actions.abstract_total > 0).then_some(ActionRatio {
            marked: actions.abstract_marked,
            total: actions.abstract_total,
        }),
        unscored: unscored.into_iter().filter(|(_, s)| s.total > 0).collect(),
    }
}

impl JudgeReport {
    /// Plain-text tables mirroring the all-sample and positive-sample
    /// layouts, with action ratios at three decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "All samples").expect("string write");
        writeln!(
            out,
            "{:<10} {:>5} {:>5} {:>5} {:>6} {:>9}",
            "stage", "A", "C", "R", "units", "unscored"
        )
        .expect("string write");
        for stage in Stage::ALL {
            let unscored_rate = self
                .unscored
                .get(&stage)
                .map(|s| format!("{:.3}", s.rate()))
                .unwrap_or_else(|| "-".to_string());
            match self.all_samples.get(&stage) {
                Some(m) => writeln!(
                    out,
                    "{:<10} {:>5.2} {:>5.2} {:>5.2} {:>6} {:>9}",
                    stage, m.accuracy, m.comprehensiveness, m.relevance, m.unit_count, unscored_rate
                )
                .expect("string write"),
                None => writeln!(
                    out,
                    "{:<10} {:>5} {:>5} {:>5} {:>6} {:>9}",
                    stage, "-", "-", "-", 0, unscored_rate
                )
                .expect("string write"),
            }
        }

        writeln!(out, "\nPositive samples").expect("string write");
        writeln!(
            out,
            "{:<10} {:>5} {:>5} {:>5} {:>6} {:>18}",
            "stage", "A", "C", "R", "units", "action/all"
        )
        .expect("string write");
        for stage in [Stage::Split, Stage::Abstract] {
            let ratio = match stage {
                Stage::Split => &self.split_ratio,
                _ => &self.abstract_ratio,
            };
            let ratio_cell = match ratio {
                Some(r) => format!("{}/{} ({:.3})", r.marked, r.total, r.value()),
                None => "-".to_string(),
            };
            match self.positive_samples.get(&stage) {
                Some(m) => writeln!(
                    out,
                    "{:<10} {:>5.2} {:>5.2} {:>5.2} {:>6} {:>18}",
                    stage, m.accuracy, m.comprehensiveness, m.relevance, m.unit_count, ratio_cell
                )
                .expect("string write"),
                None => writeln!(
                    out,
                    "{:<10} {:>5} {:>5} {:>5} {:>6} {:>18}",
                    stage, "-", "-", "-", 0, ratio_cell
                )
                .expect("string write"),
            }
        }
        out
    }
}
