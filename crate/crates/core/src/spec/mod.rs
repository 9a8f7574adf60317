//! Typed AST for the Vega-Lite subset used by the benchmark, plus parsing,
//! canonical serialization and the benchmark chart-type mapping.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

mod parse;
pub mod pointer;
pub mod predicate;
mod serialize;

pub use parse::{
    parse_document, parse_spec, ParseOutcome, ValidityReport, Violation, ViolationKind,
};
pub use predicate::{CompareOp, Literal, Operand, Predicate};
pub use serialize::{serialize_spec, spec_to_document};

/// The schema URL the zero-shot rules ask for.
pub const VEGA_LITE_V5_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub schema_url: Option<String>,
    pub data: Option<DataRef>,
    pub transforms: Vec<Transform>,
    pub mark: MarkType,
    pub encoding: BTreeMap<Channel, FieldDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataRef {
    Url(String),
    Inline(Vec<serde_json::Map<String, serde_json::Value>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkType {
    Bar,
    Arc,
    Line,
    Point,
}

impl MarkType {
    pub const ALL: [MarkType; 4] = [
        MarkType::Bar,
        MarkType::Arc,
        MarkType::Line,
        MarkType::Point,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MarkType::Bar => "bar",
            MarkType::Arc => "arc",
            MarkType::Line => "line",
            MarkType::Point => "point",
        }
    }
}

impl FromStr for MarkType {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        MarkType::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or(())
    }
}

/// Encoding channels, ordered alphabetically so canonical output sorts naturally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Color,
    Theta,
    X,
    Y,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Color, Channel::Theta, Channel::X, Channel::Y];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Color => "color",
            Channel::Theta => "theta",
            Channel::X => "x",
            Channel::Y => "y",
        }
    }
}

impl FromStr for Channel {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Channel::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Nominal,
    Quantitative,
    Temporal,
    Ordinal,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::Nominal => "nominal",
            FieldType::Quantitative => "quantitative",
            FieldType::Temporal => "temporal",
            FieldType::Ordinal => "ordinal",
        }
    }
}

impl FromStr for FieldType {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "nominal" => Ok(FieldType::Nominal),
            "quantitative" => Ok(FieldType::Quantitative),
            "temporal" => Ok(FieldType::Temporal),
            "ordinal" => Ok(FieldType::Ordinal),
            _ => Err(()),
        }
    }
}

/// Aggregate operations. `average` is accepted on input and normalized to `Mean`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggOp {
    Count,
    Sum,
    Mean,
    Min,
    Max,
}

impl AggOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AggOp::Count => "count",
            AggOp::Sum => "sum",
            AggOp::Mean => "mean",
            AggOp::Min => "min",
            AggOp::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<AggOp> {
        Some(match s {
            "count" => AggOp::Count,
            "sum" => AggOp::Sum,
            "mean" | "average" => AggOp::Mean,
            "min" => AggOp::Min,
            "max" => AggOp::Max,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Year,
    Month,
    Week,
    Day,
    Date,
    Hours,
    YearMonth,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 7] = [
        TimeUnit::Year,
        TimeUnit::Month,
        TimeUnit::Week,
        TimeUnit::Day,
        TimeUnit::Date,
        TimeUnit::Hours,
        TimeUnit::YearMonth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Year => "year",
            TimeUnit::Month => "month",
            TimeUnit::Week => "week",
            TimeUnit::Day => "day",
            TimeUnit::Date => "date",
            TimeUnit::Hours => "hours",
            TimeUnit::YearMonth => "yearmonth",
        }
    }

    pub fn parse(s: &str) -> Option<TimeUnit> {
        TimeUnit::ALL.into_iter().find(|u| u.as_str() == s)
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateOp {
    pub op: AggOp,
    pub field: Option<String>,
    pub alias: String,
}

/// `maxbins` defaults to 10 when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinParams {
    pub maxbins: Option<u32>,
}

impl BinParams {
    pub const DEFAULT_MAXBINS: u32 = 10;

    pub fn effective_maxbins(&self) -> u32 {
        self.maxbins.unwrap_or(Self::DEFAULT_MAXBINS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Filter(Predicate),
    /// `groupby: None` means the property was absent, which is distinct from an
    /// explicit empty list.
    Aggregate {
        ops: Vec<AggregateOp>,
        groupby: Option<Vec<String>>,
    },
    Bin {
        field: String,
        alias: String,
        params: BinParams,
    },
    TimeUnit {
        unit: TimeUnit,
        field: String,
        alias: String,
    },
}

impl Transform {
    /// Field names this transform introduces.
    pub fn outputs(&self) -> Vec<&str> {
        match self {
            Transform::Filter(_) => vec![],
            Transform::Aggregate { ops, .. } => ops.iter().map(|o| o.alias.as_str()).collect(),
            Transform::Bin { alias, .. } | Transform::TimeUnit { alias, .. } => {
                vec![alias.as_str()]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Ascending,
    Descending,
}

impl SortOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            SortOrder::Ascending => "ascending",
            SortOrder::Descending => "descending",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SortBy {
    Field(String),
    Channel(Channel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortSpec {
    pub order: SortOrder,
    pub by: Option<SortBy>,
}

/// A channel definition. `field` may be absent only for `count`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub field: Option<String>,
    pub type_tag: FieldType,
    pub aggregate: Option<AggOp>,
    pub bin: Option<BinParams>,
    pub time_unit: Option<TimeUnit>,
    pub sort: Option<SortSpec>,
}

impl FieldDef {
    pub fn new(field: impl Into<String>, type_tag: FieldType) -> Self {
        Self {
            field: Some(field.into()),
            type_tag,
            aggregate: None,
            bin: None,
            time_unit: None,
            sort: None,
        }
    }

    pub fn with_aggregate(mut self, op: AggOp) -> Self {
        self.aggregate = Some(op);
        self
    }

    pub fn with_time_unit(mut self, unit: TimeUnit) -> Self {
        self.time_unit = Some(unit);
        self
    }

    pub fn with_bin(mut self, params: BinParams) -> Self {
        self.bin = Some(params);
        self
    }

    pub fn with_sort(mut self, sort: SortSpec) -> Self {
        self.sort = Some(sort);
        self
    }
}

/// The seven benchmark chart types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchChartType {
    Bar,
    Pie,
    Line,
    Scatter,
    StackedBar,
    GroupingLine,
    GroupingScatter,
}

impl BenchChartType {
    pub const ALL: [BenchChartType; 7] = [
        BenchChartType::Bar,
        BenchChartType::Pie,
        BenchChartType::Line,
        BenchChartType::Scatter,
        BenchChartType::StackedBar,
        BenchChartType::GroupingLine,
        BenchChartType::GroupingScatter,
    ];

    /// Human label as used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            BenchChartType::Bar => "Bar",
            BenchChartType::Pie => "Pie",
            BenchChartType::Line => "Line",
            BenchChartType::Scatter => "Scatter",
            BenchChartType::StackedBar => "Stacked bar",
            BenchChartType::GroupingLine => "Grouping line",
            BenchChartType::GroupingScatter => "Grouping scatter",
        }
    }

    /// File-name friendly identifier (`stacked_bar`, ...).
    pub fn slug(self) -> &'static str {
        match self {
            BenchChartType::Bar => "bar",
            BenchChartType::Pie => "pie",
            BenchChartType::Line => "line",
            BenchChartType::Scatter => "scatter",
            BenchChartType::StackedBar => "stacked_bar",
            BenchChartType::GroupingLine => "grouping_line",
            BenchChartType::GroupingScatter => "grouping_scatter",
        }
    }

    /// Lenient parse: case, spaces, dashes and underscores are ignored.
    pub fn parse_lenient(s: &str) -> Option<BenchChartType> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let norm = norm.strip_suffix("chart").unwrap_or(&norm).to_string();
        let norm = norm.strip_suffix("plot").unwrap_or(&norm);
        Some(match norm {
            "bar" => BenchChartType::Bar,
            "pie" => BenchChartType::Pie,
            "line" => BenchChartType::Line,
            "scatter" => BenchChartType::Scatter,
            "stackedbar" => BenchChartType::StackedBar,
            "groupingline" => BenchChartType::GroupingLine,
            "groupingscatter" => BenchChartType::GroupingScatter,
            _ => return None,
        })
    }
}

impl fmt::Display for BenchChartType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Benchmark chart type from (mark, color channel present).
pub fn chart_type_of(spec: &ChartSpec) -> BenchChartType {
    chart_type_for(spec.mark, spec.encoding.contains_key(&Channel::Color))
}

pub fn chart_type_for(mark: MarkType, has_color: bool) -> BenchChartType {
    match (mark, has_color) {
        (MarkType::Bar, false) => BenchChartType::Bar,
        (MarkType::Bar, true) => BenchChartType::StackedBar,
        (MarkType::Arc, _) => BenchChartType::Pie,
        (MarkType::Line, false) => BenchChartType::Line,
        (MarkType::Line, true) => BenchChartType::GroupingLine,
        (MarkType::Point, false) => BenchChartType::Scatter,
        (MarkType::Point, true) => BenchChartType::GroupingScatter,
    }
}

impl ChartSpec {
    /// Field names available to the encoding: table columns are not known here,
    /// so this returns only aliases introduced by transforms.
    pub fn transform_aliases(&self) -> Vec<&str> {
        self.transforms.iter().flat_map(|t| t.outputs()).collect()
    }

    /// The spec with x and y channels exchanged.
    pub fn swap_xy(&self) -> ChartSpec {
        let mut out = self.clone();
        let x = out.encoding.remove(&Channel::X);
        let y = out.encoding.remove(&Channel::Y);
        if let Some(x) = x {
            out.encoding.insert(Channel::Y, x);
        }
        if let Some(y) = y {
            out.encoding.insert(Channel::X, y);
        }
        for def in out.encoding.values_mut() {
            if let Some(SortSpec {
                by: Some(SortBy::Channel(c)),
                ..
            }) = def.sort.as_mut()
            {
                *c = match *c {
                    Channel::X => Channel::Y,
                    Channel::Y => Channel::X,
                    other => other,
                };
            }
        }
        out
    }
}
