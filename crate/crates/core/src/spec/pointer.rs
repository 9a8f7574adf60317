//! RFC 6901 JSON pointer helpers.

use std::collections::HashMap;

use serde_json::Value;

pub fn escape(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

/// Append a segment to a pointer.
pub fn push(base: &str, segment: &str) -> String {
    format!("{base}/{}", escape(segment))
}

pub fn push_index(base: &str, idx: usize) -> String {
    format!("{base}/{idx}")
}

pub fn resolves(doc: &Value, pointer: &str) -> bool {
    doc.pointer(pointer).is_some()
}

/// Pre-order position of every pointer in the document, in key order as written.
pub fn document_order(doc: &Value) -> HashMap<String, usize> {
    fn walk(v: &Value, path: String, out: &mut HashMap<String, usize>) {
        let n = out.len();
        out.insert(path.clone(), n);
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    walk(child, push(&path, k), out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(child, push_index(&path, i), out);
                }
            }
            _ => {}
        }
    }
    let mut out = HashMap::new();
    walk(doc, String::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_reserved_characters() {
        let doc: Value = serde_json::from_str(r#"{"a/b": {"c~d": 1}}"#).unwrap();
        let p = push(&push("", "a/b"), "c~d");
        assert_eq!(p, "/a~1b/c~0d");
        assert!(resolves(&doc, &p));
    }

    #[test]
    fn order_follows_document() {
        let doc: Value = serde_json::from_str(r#"{"z": [1, 2], "a": {"b": 0}}"#).unwrap();
        let order = document_order(&doc);
        assert!(order["/z/1"] < order["/a"]);
        assert!(order["/a"] < order["/a/b"]);
        assert_eq!(order[""], 0);
    }
}
