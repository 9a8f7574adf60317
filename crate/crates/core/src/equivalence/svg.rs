//! Recover displayed values from an annotated SVG.
//!
//! The renderer tags every mark element with `data-datum`, a JSON object of the
//! channel-bound fields. Line marks draw one path per series, so their
//! annotation is an array of such objects.

use thiserror::Error;

use crate::engine::TupleSet;
use crate::spec::BenchChartType;
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvgError {
    #[error("svg: {0}")]
    Xml(String),
    #[error("mark elements carry no data annotations; the renderer must embed datums")]
    MissingDataAnnotations,
    #[error("malformed data annotation: {0}")]
    MalformedAnnotation(String),
}

/// Class of the mark group each chart type draws.
pub fn expected_mark_class(chart_type: BenchChartType) -> &'static str {
    match chart_type {
        BenchChartType::Bar | BenchChartType::StackedBar => "mark-rect",
        BenchChartType::Pie => "mark-arc",
        BenchChartType::Line | BenchChartType::GroupingLine => "mark-line",
        BenchChartType::Scatter | BenchChartType::GroupingScatter => "mark-symbol",
    }
}

fn has_class(node: &roxmltree::Node<'_, '_>, class: &str) -> bool {
    node.attribute("class")
        .map(|c| c.split_whitespace().any(|x| x == class))
        .unwrap_or(false)
}

pub fn extract_values_from_svg(
    svg_text: &str,
    chart_type: BenchChartType,
) -> Result<TupleSet, SvgError> {
    let doc = roxmltree::Document::parse(svg_text).map_err(|e| SvgError::Xml(e.to_string()))?;
    let class = expected_mark_class(chart_type);
    let mut fields: Option<Vec<String>> = None;
    let mut tuples: Vec<Vec<Value>> = Vec::new();
    let mut unannotated = 0usize;

    let mut push = |obj: &serde_json::Map<String, serde_json::Value>| -> Result<(), SvgError> {
        let mut keys: Vec<String> = obj.keys().cloned().collect();
        keys.sort();
        match &fields {
            None => fields = Some(keys.clone()),
            Some(f) if *f != keys => {
                return Err(SvgError::MalformedAnnotation(format!(
                    "field sets differ: {f:?} vs {keys:?}"
                )))
            }
            Some(_) => {}
        }
        tuples.push(keys.iter().map(|k| Value::from_json(&obj[k])).collect());
        Ok(())
    };

    let groups = doc
        .descendants()
        .filter(|n| n.is_element() && has_class(n, class) && has_class(n, "role-mark"));
    for group in groups {
        for item in group.children().filter(|n| n.is_element()) {
            let Some(raw) = item.attribute("data-datum") else {
                unannotated += 1;
                continue;
            };
            let parsed: serde_json::Value = serde_json::from_str(raw)
                .map_err(|e| SvgError::MalformedAnnotation(e.to_string()))?;
            match parsed {
                serde_json::Value::Object(obj) => push(&obj)?,
                serde_json::Value::Array(items) => {
                    for it in items {
                        match it {
                            serde_json::Value::Object(obj) => push(&obj)?,
                            other => {
                                return Err(SvgError::MalformedAnnotation(format!(
                                    "expected object, got {other}"
                                )))
                            }
                        }
                    }
                }
                other => {
                    return Err(SvgError::MalformedAnnotation(format!(
                        "expected object, got {other}"
                    )))
                }
            }
        }
    }
    if unannotated > 0 && tuples.is_empty() {
        return Err(SvgError::MissingDataAnnotations);
    }
    Ok(TupleSet::new(fields.unwrap_or_default(), tuples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_point_annotations() {
        let svg = r#"<svg xmlns="http://www.w3.org/2000/svg"><g class="mark-symbol role-mark marks">
            <path d="M0,0" data-datum='{"Major": "CS", "Number of Students": 2}'/>
            <path d="M1,1" data-datum='{"Major": "Math", "Number of Students": 1}'/>
        </g><g class="mark-rule role-axis-tick"><line/></g></svg>"#;
        let t = extract_values_from_svg(svg, BenchChartType::Scatter).unwrap();
        assert_eq!(t.fields(), ["Major", "Number of Students"]);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn zero_marks_is_empty() {
        let svg = r#"<svg xmlns="http://www.w3.org/2000/svg"><g class="mark-rect role-mark marks"></g></svg>"#;
        assert!(extract_values_from_svg(svg, BenchChartType::Bar)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn missing_annotations_are_reported() {
        let svg = r#"<svg xmlns="http://www.w3.org/2000/svg"><g class="mark-rect role-mark marks"><path d="M0,0"/></g></svg>"#;
        assert_eq!(
            extract_values_from_svg(svg, BenchChartType::Bar),
            Err(SvgError::MissingDataAnnotations)
        );
    }

    #[test]
    fn line_paths_carry_arrays() {
        let svg = r#"<svg xmlns="http://www.w3.org/2000/svg"><g class="mark-line role-mark marks">
            <path data-datum='[{"m": "2020-01-01", "v": 1}, {"m": "2020-02-01", "v": 3}]'/></g></svg>"#;
        assert_eq!(
            extract_values_from_svg(svg, BenchChartType::Line)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn inconsistent_field_sets_are_malformed() {
        let svg = r#"<svg xmlns="http://www.w3.org/2000/svg"><g class="mark-rect role-mark marks">
            <path data-datum='{"a": 1}'/><path data-datum='{"b": 1}'/></g></svg>"#;
        assert!(matches!(
            extract_values_from_svg(svg, BenchChartType::Bar),
            Err(SvgError::MalformedAnnotation(_))
        ));
    }
}
