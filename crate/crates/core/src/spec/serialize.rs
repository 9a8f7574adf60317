//! Canonical JSON form of a [`ChartSpec`].

use serde_json::{json, Map, Value as Json};

use super::*;

/// `$schema`, `data`, `transform`, `mark`, `encoding`; keys inside objects sorted.
pub fn spec_to_document(spec: &ChartSpec) -> Json {
    let mut root = Map::new();
    if let Some(url) = &spec.schema_url {
        root.insert("$schema".into(), Json::String(url.clone()));
    }
    if let Some(data) = &spec.data {
        root.insert("data".into(), data_json(data));
    }
    if !spec.transforms.is_empty() {
        root.insert(
            "transform".into(),
            Json::Array(spec.transforms.iter().map(transform_json).collect()),
        );
    }
    root.insert("mark".into(), Json::String(spec.mark.as_str().into()));
    let mut enc = Map::new();
    for (channel, def) in &spec.encoding {
        enc.insert(channel.as_str().into(), field_def_json(def));
    }
    root.insert("encoding".into(), Json::Object(enc));
    Json::Object(root)
}

/// Pretty-printed canonical text. Equal ASTs give byte-identical output.
pub fn serialize_spec(spec: &ChartSpec) -> String {
    serde_json::to_string_pretty(&spec_to_document(spec)).expect("JSON values always serialize")
}

fn sorted(v: &Json) -> Json {
    match v {
        Json::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            Json::Object(
                keys.into_iter()
                    .map(|k| (k.clone(), sorted(&m[k])))
                    .collect(),
            )
        }
        Json::Array(a) => Json::Array(a.iter().map(sorted).collect()),
        other => other.clone(),
    }
}

fn data_json(data: &DataRef) -> Json {
    match data {
        DataRef::Url(u) => json!({ "url": u }),
        DataRef::Inline(rows) => {
            let rows: Vec<Json> = rows
                .iter()
                .map(|r| sorted(&Json::Object(r.clone())))
                .collect();
            json!({ "values": rows })
        }
    }
}

fn bin_json(params: &BinParams) -> Json {
    match params.maxbins {
        None => Json::Bool(true),
        Some(n) => json!({ "maxbins": n }),
    }
}

fn transform_json(t: &Transform) -> Json {
    let mut m = Map::new();
    match t {
        Transform::Filter(p) => {
            m.insert("filter".into(), Json::String(p.to_expression()));
        }
        Transform::Aggregate { ops, groupby } => {
            let ops: Vec<Json> = ops
                .iter()
                .map(|o| {
                    let mut om = Map::new();
                    om.insert("as".into(), Json::String(o.alias.clone()));
                    if let Some(f) = &o.field {
                        om.insert("field".into(), Json::String(f.clone()));
                    }
                    om.insert("op".into(), Json::String(o.op.as_str().into()));
                    Json::Object(om)
                })
                .collect();
            m.insert("aggregate".into(), Json::Array(ops));
            if let Some(g) = groupby {
                m.insert("groupby".into(), json!(g));
            }
        }
        Transform::Bin {
            field,
            alias,
            params,
        } => {
            m.insert("as".into(), Json::String(alias.clone()));
            m.insert("bin".into(), bin_json(params));
            m.insert("field".into(), Json::String(field.clone()));
        }
        Transform::TimeUnit { unit, field, alias } => {
            m.insert("as".into(), Json::String(alias.clone()));
            m.insert("field".into(), Json::String(field.clone()));
            m.insert("timeUnit".into(), Json::String(unit.as_str().into()));
        }
    }
    Json::Object(m)
}

fn sort_json(s: &SortSpec) -> Json {
    match &s.by {
        None => Json::String(s.order.as_str().into()),
        Some(SortBy::Channel(c)) => {
            let prefix = if s.order == SortOrder::Descending {
                "-"
            } else {
                ""
            };
            Json::String(format!("{prefix}{}", c.as_str()))
        }
        Some(SortBy::Field(f)) => json!({ "field": f, "order": s.order.as_str() }),
    }
}

fn field_def_json(d: &FieldDef) -> Json {
    let mut m = Map::new();
    if let Some(a) = d.aggregate {
        m.insert("aggregate".into(), Json::String(a.as_str().into()));
    }
    if let Some(b) = &d.bin {
        m.insert("bin".into(), bin_json(b));
    }
    if let Some(f) = &d.field {
        m.insert("field".into(), Json::String(f.clone()));
    }
    if let Some(s) = &d.sort {
        m.insert("sort".into(), sort_json(s));
    }
    if let Some(u) = d.time_unit {
        m.insert("timeUnit".into(), Json::String(u.as_str().into()));
    }
    m.insert("type".into(), Json::String(d.type_tag.as_str().into()));
    Json::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::predicate::{CompareOp, Literal};
    use proptest::prelude::*;

    #[test]
    fn transform_moves_ahead_of_encoding() {
        let raw = r#"{"mark": "bar", "encoding": {"y": {"type": "quantitative", "field": "n"}, "x": {"field": "a", "type": "nominal"}},
            "transform": [{"groupby": ["a"], "aggregate": [{"op": "count", "as": "n"}]}],
            "$schema": "https://vega.github.io/schema/vega-lite/v5.json"}"#;
        let text = serialize_spec(&parse_spec(raw).spec.unwrap());
        let pos = |k: &str| text.find(k).unwrap();
        assert!(pos("\"$schema\"") < pos("\"transform\""));
        assert!(pos("\"transform\"") < pos("\"mark\""));
        assert!(pos("\"mark\"") < pos("\"encoding\""));
        assert!(pos("\"x\"") < pos("\"y\""));
        assert!(pos("\"aggregate\"") < pos("\"groupby\""));
    }

    #[test]
    fn serialization_is_stable() {
        let spec = parse_spec(include_str!("../../exemplars/line.spec.json"))
            .spec
            .unwrap();
        let a = serialize_spec(&spec);
        let b = serialize_spec(&spec);
        assert_eq!(a, b);
        assert_eq!(parse_spec(&a).spec.unwrap(), spec);
    }

    fn arb_name() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("a".to_string()),
            Just("Major".to_string()),
            Just("room count".to_string()),
            "[a-z][a-z_]{0,6}",
        ]
    }

    fn arb_agg_op() -> impl Strategy<Value = AggOp> {
        prop_oneof![
            Just(AggOp::Count),
            Just(AggOp::Sum),
            Just(AggOp::Mean),
            Just(AggOp::Min),
            Just(AggOp::Max)
        ]
    }

    fn arb_transform() -> impl Strategy<Value = Transform> {
        prop_oneof![
            (arb_name(), -50i32..50).prop_map(|(f, n)| Transform::Filter(Predicate::compare(
                f,
                CompareOp::Ge,
                Literal::Number(n as f64)
            ))),
            (
                proptest::collection::vec((arb_agg_op(), arb_name(), arb_name()), 1..3),
                proptest::option::of(proptest::collection::vec(arb_name(), 0..3))
            )
                .prop_map(|(ops, groupby)| Transform::Aggregate {
                    ops: ops
                        .into_iter()
                        .map(|(op, f, alias)| AggregateOp {
                            op,
                            field: if op == AggOp::Count { None } else { Some(f) },
                            alias,
                        })
                        .collect(),
                    groupby,
                }),
            (arb_name(), arb_name(), proptest::option::of(1u32..50)).prop_map(
                |(field, alias, maxbins)| {
                    Transform::Bin {
                        field,
                        alias,
                        params: BinParams { maxbins },
                    }
                }
            ),
            (0usize..TimeUnit::ALL.len(), arb_name(), arb_name()).prop_map(|(u, field, alias)| {
                Transform::TimeUnit {
                    unit: TimeUnit::ALL[u],
                    field,
                    alias,
                }
            }),
        ]
    }

    fn arb_sort() -> impl Strategy<Value = SortSpec> {
        let order = prop_oneof![Just(SortOrder::Ascending), Just(SortOrder::Descending)];
        let by = prop_oneof![
            Just(None),
            arb_name().prop_map(|f| Some(SortBy::Field(f))),
            (0usize..4).prop_map(|i| Some(SortBy::Channel(Channel::ALL[i]))),
        ];
        (order, by).prop_map(|(order, by)| SortSpec { order, by })
    }

    fn arb_field_def() -> impl Strategy<Value = FieldDef> {
        let ty = prop_oneof![
            Just(FieldType::Nominal),
            Just(FieldType::Quantitative),
            Just(FieldType::Temporal),
            Just(FieldType::Ordinal)
        ];
        (
            arb_name(),
            ty,
            proptest::option::of(arb_agg_op()),
            proptest::option::of(proptest::option::of(1u32..30)),
            proptest::option::of(0usize..TimeUnit::ALL.len()),
            proptest::option::of(arb_sort()),
            any::<bool>(),
        )
            .prop_map(
                |(f, type_tag, aggregate, bin, tu, sort, drop_field)| FieldDef {
                    field: if drop_field && aggregate == Some(AggOp::Count) {
                        None
                    } else {
                        Some(f)
                    },
                    type_tag,
                    aggregate,
                    bin: bin.map(|maxbins| BinParams { maxbins }),
                    time_unit: tu.map(|i| TimeUnit::ALL[i]),
                    sort,
                },
            )
    }

    pub(crate) fn arb_spec() -> impl Strategy<Value = ChartSpec> {
        let mark = (0usize..4).prop_map(|i| MarkType::ALL[i]);
        let data = prop_oneof![
            Just(None),
            Just(Some(DataRef::Url("data.csv".into()))),
            Just(Some(DataRef::Inline(vec![
                serde_json::from_str(r#"{"b": 1, "a": "x"}"#).unwrap(),
                serde_json::from_str(r#"{"a": "y", "b": 2.5}"#).unwrap()
            ]))),
        ];
        (
            proptest::option::of(Just(VEGA_LITE_V5_SCHEMA.to_string())),
            data,
            proptest::collection::vec(arb_transform(), 0..4),
            mark,
            proptest::collection::btree_map(
                (0usize..4).prop_map(|i| Channel::ALL[i]),
                arb_field_def(),
                0..4,
            ),
        )
            .prop_map(|(schema_url, data, transforms, mark, encoding)| ChartSpec {
                schema_url,
                data,
                transforms,
                mark,
                encoding,
            })
    }

    proptest! {
        #[test]
        fn parse_serialize_round_trip(spec in arb_spec()) {
            let text = serialize_spec(&spec);
            let out = parse_spec(&text);
            prop_assert!(out.report.is_ok(), "{:?}\n{}", out.report, text);
            prop_assert_eq!(out.spec.unwrap(), spec.clone());
            prop_assert_eq!(serialize_spec(&spec), text);
        }

        #[test]
        fn parse_is_total(text in ".{0,200}") {
            let out = parse_spec(&text);
            prop_assert_eq!(out.spec.is_some(), out.report.is_ok());
            if let ValidityReport::GrammarError { violations } = &out.report {
                prop_assert!(!violations.is_empty());
                let doc = out.document.as_ref().unwrap();
                for v in violations {
                    prop_assert!(doc.pointer(&v.path).is_some());
                }
            }
        }

        #[test]
        fn mutated_specs_keep_paths_resolvable(spec in arb_spec(), key in "[a-zA-Z]{1,8}", slot in 0usize..4) {
            let mut doc = spec_to_document(&spec);
            let target = match slot {
                0 => doc.as_object_mut(),
                1 => doc.pointer_mut("/encoding").and_then(Json::as_object_mut),
                2 => doc.pointer_mut("/transform/0").and_then(Json::as_object_mut),
                _ => doc.pointer_mut("/encoding/x").and_then(Json::as_object_mut),
            };
            if let Some(obj) = target {
                obj.insert(key, json!("weekday"));
            }
            let text = serde_json::to_string(&doc).unwrap();
            let out = parse_spec(&text);
            if let ValidityReport::GrammarError { violations } = &out.report {
                let doc = out.document.as_ref().unwrap();
                for v in violations {
                    prop_assert!(doc.pointer(&v.path).is_some(), "{} in {}", v.path, text);
                }
            }
        }
    }
}
