//! Score stage outputs with the (mock) judge and aggregate into the
//! all-sample / positive-sample report with action ratios.
//!
//! ```bash
//! cargo run -p hierkg --example judge_report
//! ```

use hierkg::judge::{aggregate, build_judge_prompt, score_unit, ActionStats, JudgeCriteria, JudgeUnit};
use hierkg::llm::{LlmClient, ProviderConfig};
use hierkg::model::Stage;
use hierkg::prompts::TemplateSet;

fn main() -> hierkg::Result<()> {
    let client = LlmClient::mock(ProviderConfig::default());
    let templates = TemplateSet::builtin();
    let criteria = JudgeCriteria::default();

    let units = vec![
        JudgeUnit {
            unit_id: "p1/results/0-0".to_string(),
            stage: Stage::Initial,
            source_context: "Exam stress reduces test scores.".to_string(),
            output: Some(
                r#"[{"head":{"text":"exam stress"},"relation":{"text":"reduces"},"tail":{"text":"test scores"}}]"#
                    .to_string(),
            ),
        },
        JudgeUnit {
            unit_id: "split/exam stress and sleep loss".to_string(),
            stage: Stage::Split,
            source_context: "exam stress and sleep loss".to_string(),
            output: Some(r#"["exam stress","sleep loss"]"#.to_string()),
        },
        // A negative unit: the filter declined to act, and the judge is
        // asked whether declining was correct.
        JudgeUnit {
            unit_id: "split/test scores".to_string(),
            stage: Stage::Split,
            source_context: "test scores".to_string(),
            output: None,
        },
    ];

    println!("one judge prompt, for reference:\n---");
    println!("{}", build_judge_prompt(&units[2], &criteria, &templates).user_prompt);
    println!("---\n");

    let mut scored = Vec::new();
    for unit in units {
        let score = score_unit(&unit, &client, &criteria, &templates)?;
        scored.push((unit, score));
    }
    let actions = ActionStats {
        split_marked: 1,
        split_total: 2,
        ..Default::default()
    };
    let report = aggregate(&scored, &actions);
    println!("{}", report.to_table());
    Ok(())
}
