use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn grid(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.len());
        }
    }
    let line = |cells: &[String]| {
        cells.iter().zip(&w).map(|(c, &n)| format!("{c:>n$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    let mut out = vec![line(header)];
    out.extend(rows.iter().map(|r| line(r)));
    out.join("\n")
}

/// Khovanov table: `q` down the side (descending), `i` across.
fn kh_grid(rows: &[Value]) -> String {
    let mut cells: BTreeMap<(i64, i64), String> = BTreeMap::new();
    let (mut is, mut qs) = (BTreeSet::new(), BTreeSet::new());
    for r in rows {
        let (i, q) = (r["i"].as_i64().unwrap_or(0), r["q"].as_i64().unwrap_or(0));
        let cell = r.get("group").map(scalar).unwrap_or_else(|| scalar(&r["dim"]));
        is.insert(i);
        qs.insert(q);
        cells.insert((i, q), cell);
    }
    if is.is_empty() {
        return "(zero)".into();
    }
    let (lo, hi) = (*is.first().unwrap(), *is.last().unwrap());
    let mut header = vec!["q\\i".to_string()];
    header.extend((lo..=hi).map(|i| i.to_string()));
    let body: Vec<Vec<String>> = qs
        .iter()
        .rev()
        .map(|&q| {
            let mut r = vec![q.to_string()];
            r.extend((lo..=hi).map(|i| cells.get(&(i, q)).cloned().unwrap_or_else(|| ".".into())));
            r
        })
        .collect();
    grid(&header, &body)
}

fn object_rows(items: &[Value]) -> Option<String> {
    let first = items.first()?.as_object()?;
    let mut keys: Vec<String> = first.keys().filter(|k| !items.iter().any(|it| it[k.as_str()].is_array() || it[k.as_str()].is_object())).cloned().collect();
    let rank = |k: &str| ["name", "index", "j", "i", "q"].iter().position(|x| *x == k).unwrap_or(usize::MAX);
    keys.sort_by_key(|k| rank(k));
    let rows: Vec<Vec<String>> = items.iter().map(|it| keys.iter().map(|k| scalar(&it[k.as_str()])).collect()).collect();
    Some(grid(&keys, &rows))
}

pub fn render(v: &Value) -> String {
    let mut out = Vec::new();
    match v {
        Value::Array(items) => out.push(object_rows(items).unwrap_or_else(|| scalar(v))),
        Value::Object(map) => {
            let mut blocks = Vec::new();
            for (k, x) in map {
                match x {
                    Value::Array(items) if k == "homology" => blocks.push(format!("{k}:\n{}", kh_grid(items))),
                    Value::Array(items) if items.iter().all(|i| i.is_object()) && !items.is_empty() => {
                        blocks.push(format!("{k}:\n{}", object_rows(items).unwrap_or_default()))
                    }
                    Value::Array(_) | Value::Object(_) => out.push(format!("{k}: {x}")),
                    _ => out.push(format!("{k}: {}", scalar(x))),
                }
            }
            out.extend(blocks);
        }
        _ => out.push(scalar(v)),
    }
    out.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn kh_grid_layout() {
        let v = json!({"homology": [{"i": 0, "q": 1, "group": "Z"}, {"i": 2, "q": 5, "group": "Z/2"}], "input": "x"});
        let s = render(&v);
        assert!(s.starts_with("input: x\nhomology:\nq\\i  0  1    2\n"));
        assert!(s.ends_with("  1  Z  .    ."));
    }

    #[test]
    fn rows_put_gradings_first() {
        let v = json!([{"q": 3, "dim": 1, "j": 0}]);
        assert_eq!(render(&v), "j  q  dim\n0  3    1");
    }
}
