//! Prompt construction: base, zero-shot (base plus rules) and few-shot
//! (exemplar block plus base).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spec::BenchChartType;
use crate::table::DataTable;

mod exemplars;

pub use exemplars::{ExemplarError, ExemplarSet, FewShotExemplar};

pub const SYSTEM_PROMPT: &str = "You are a data analysis assistant that uses Vega-Lite to create data visualizations, and you should only output the json format specification of Vega-Lite.";

pub const DATA_URL_DIRECTIVE: &str =
    r#"The "data" attribute of the Vega-Lite output must be: {"url": "data.csv"}"#;

pub const OUTPUT_FORMAT_DIRECTIVE: &str = "Just output the json format, with no more other words.";

pub const RULES: [&str; 5] = [
    r#"Rule 1: The "$schema" property should be: "https://vega.github.io/schema/vega-lite/v5.json"."#,
    r#"Rule 2: The "transform" property should be put ahead of the "encoding" property."#,
    r#"Rule 3: Pay attention to the query description to determine whether you should use "filter" transformation in the "transform" property."#,
    r#"Rule 4: If you use "aggregate" operation in the "transform" property, the "groupby" property of "aggregate" should be correctly specified."#,
    r#"Rule 5: Make sure no "sort" operations exist in the "transform" property, you should define the order of axes only in the "encoding" property."#,
];

pub const FEW_SHOT_HEADER: &str =
    "Here are some examples that show the high-quality.\nVega-Lite specifications for different queries";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Base,
    ZeroShot,
    FewShot,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Base, Strategy::ZeroShot, Strategy::FewShot];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Base => "base",
            Strategy::ZeroShot => "zero_shot",
            Strategy::FewShot => "few_shot",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s.replace('-', "_").as_str() {
            "base" => Some(Strategy::Base),
            "zero_shot" | "zeroshot" => Some(Strategy::ZeroShot),
            "few_shot" | "fewshot" => Some(Strategy::FewShot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub messages: Vec<Message>,
    pub strategy: Strategy,
    pub token_estimate: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("few-shot exemplar set lacks {}", .0.iter().map(|t| t.label()).collect::<Vec<_>>().join(", "))]
    ExemplarSetIncomplete(Vec<BenchChartType>),
    #[error("prompt needs ~{estimate} tokens, limit is {limit}")]
    TokenBudgetExceeded { estimate: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub max_rows: usize,
    /// Token cap for the sampled CSV text; `None` leaves only the row cap.
    pub max_tokens: Option<usize>,
}

impl Default for SampleBudget {
    fn default() -> Self {
        Self {
            max_rows: 30,
            max_tokens: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub sample: SampleBudget,
    /// Whole-prompt guard, checked against `token_estimate`.
    pub token_limit: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            sample: SampleBudget::default(),
            token_limit: 16_384,
        }
    }
}

/// Characters / 4, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

/// Header plus the first K rows as CSV, K = min(max_rows, rows that fit the
/// token cap). At least one row is kept when the table has any.
pub fn sample_table(table: &DataTable, budget: SampleBudget) -> String {
    let mut k = budget.max_rows.min(table.num_rows());
    if let Some(cap) = budget.max_tokens {
        while k > 1 && estimate_tokens(&table.to_csv_head(k)) > cap {
            k -= 1;
        }
    }
    table.to_csv_head(k)
}

/// The user message of the base prompt.
pub fn base_user_content(table_name: &str, query: &str, sampled: &str) -> String {
    [
        format!("Create the optimal visualization for the {table_name} data table using Vega-Lite to complete this task:"),
        format!("```{query}```"),
        format!("The {table_name} data table is as follows:"),
        format!("```{sampled}```"),
        DATA_URL_DIRECTIVE.to_string(),
        OUTPUT_FORMAT_DIRECTIVE.to_string(),
    ]
    .join("\n")
}

pub fn build_prompt(
    strategy: Strategy,
    table: &DataTable,
    query: &str,
    exemplars: Option<&ExemplarSet>,
) -> Result<PromptBundle, PromptError> {
    build_prompt_with(strategy, table, query, exemplars, &PromptConfig::default())
}

pub fn build_prompt_with(
    strategy: Strategy,
    table: &DataTable,
    query: &str,
    exemplars: Option<&ExemplarSet>,
    config: &PromptConfig,
) -> Result<PromptBundle, PromptError> {
    let sampled = sample_table(table, config.sample);
    let base = base_user_content(table.name(), query, &sampled);
    let user = match strategy {
        Strategy::Base => base,
        Strategy::ZeroShot => format!("{base}\n{}", RULES.join("\n")),
        Strategy::FewShot => {
            let set = exemplars
                .ok_or_else(|| PromptError::ExemplarSetIncomplete(BenchChartType::ALL.to_vec()))?;
            let missing = set.missing();
            if !missing.is_empty() {
                return Err(PromptError::ExemplarSetIncomplete(missing));
            }
            format!("{}\n{base}", set.block())
        }
    };
    let messages = vec![
        Message {
            role: Role::System,
            content: SYSTEM_PROMPT.to_string(),
        },
        Message {
            role: Role::User,
            content: user,
        },
    ];
    let token_estimate = messages.iter().map(|m| estimate_tokens(&m.content)).sum();
    if token_estimate > config.token_limit {
        return Err(PromptError::TokenBudgetExceeded {
            estimate: token_estimate,
            limit: config.token_limit,
        });
    }
    Ok(PromptBundle {
        messages,
        strategy,
        token_estimate,
    })
}
