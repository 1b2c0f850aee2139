//! Read-only client for elliptic curves over `ℚ(√−3)` in the LMFDB.

use std::sync::Mutex;
use std::time::Duration;

use gl3eis::classify::{parse_ainvs, ClassifyError, CurveFixture, FixtureKind, FixtureSource, Fetcher};
use gl3eis::eisenstein::HnfLabel;
use serde_json::Value;

pub const DEFAULT_BASE: &str = "https://www.lmfdb.org";

/// LMFDB label prefix of the field `ℚ(√−3)`.
const FIELD: &str = "2.0.3.1";

pub struct Lmfdb {
    base: String,
    client: reqwest::blocking::Client,
    // one request at a time
    lock: Mutex<()>,
}

impl Lmfdb {
    pub fn new(base: &str) -> Result<Self, String> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("gl3eis/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| e.to_string())?;
        Ok(Lmfdb { base: base.trim_end_matches('/').to_string(), client, lock: Mutex::new(()) })
    }
}

impl Fetcher for Lmfdb {
    fn fetch(&self, kind: FixtureKind, label: &str) -> Result<String, ClassifyError> {
        let fail = |reason: String| ClassifyError::Fetch { label: label.to_string(), reason };
        if kind != FixtureKind::Curve {
            return Err(fail("only curves can be fetched; add Bianchi records to the cache by hand".into()));
        }
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let url = format!("{}/api/ec_nfcurves/?label={FIELD}-{label}&_format=json", self.base);
        let resp = self.client.get(&url).send().map_err(|e| fail(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(fail(format!("HTTP {}", resp.status())));
        }
        let body: Value = resp.json().map_err(|e| fail(e.to_string()))?;
        curve_record(label, &body).map_err(fail)
    }
}

fn text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// `ainvs` arrives either as `"a,b;a,b;..."` or as a list of coefficient
/// pairs, themselves strings or lists.
fn ainvs_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Array(xs) => {
            let parts: Vec<String> = xs
                .iter()
                .map(|x| match x {
                    Value::Array(ys) => Some(ys.iter().map(text).collect::<Option<Vec<_>>>()?.join(",")),
                    _ => text(x),
                })
                .collect::<Option<_>>()?;
            Some(parts.join(";"))
        }
        _ => None,
    }
}

/// Builds a fixture record from an API response.
pub fn curve_record(label: &str, body: &Value) -> Result<String, String> {
    let row = match body.get("data") {
        Some(Value::Array(rows)) => rows.first().ok_or("no such curve")?,
        Some(_) => return Err("unexpected response shape".into()),
        None => body,
    };
    let ainvs = row.get("ainvs").and_then(ainvs_string).ok_or("missing ainvs")?;
    let ainv = parse_ainvs(&ainvs).ok_or_else(|| format!("cannot parse ainvs {ainvs:?}"))?;
    let conductor: HnfLabel = row
        .get("conductor_ideal")
        .and_then(text)
        .ok_or("missing conductor_ideal")?
        .parse()
        .map_err(|e| format!("conductor: {e}"))?;
    let cm = match row.get("cm") {
        Some(Value::Number(n)) => n.as_i64().unwrap_or(0) != 0,
        Some(Value::Bool(b)) => *b,
        Some(Value::String(s)) => !matches!(s.trim(), "" | "0" | "?"),
        _ => false,
    };
    let curve = CurveFixture::new(label, ainv, conductor, FixtureSource::Lmfdb, cm).map_err(|e| e.to_string())?;
    Ok(curve.to_record())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn both_ainvs_shapes_parse() {
        let a = json!({"data": [{"ainvs": "0,0;0,0;1,0;0,0;0,0", "conductor_ideal": "[27,3,3]", "cm": -3}]});
        let b = json!({"data": [{"ainvs": [["0","0"],["0","0"],["1","0"],["0","0"],["0","0"]], "conductor_ideal": "[27,3,3]", "cm": -3}]});
        let ra = curve_record("27.1-CMa1", &a).unwrap();
        assert_eq!(ra, curve_record("27.1-CMa1", &b).unwrap());
        assert!(ra.contains("cm=1"));
        assert!(ra.contains("[27,3,3]"));
    }

    #[test]
    fn bad_responses_are_errors() {
        assert!(curve_record("x", &json!({"data": []})).is_err());
        assert!(curve_record("x", &json!({"data": [{"ainvs": "0,0;0,0", "conductor_ideal": "[1,0,1]"}]})).is_err());
        // singular: y² = x³
        let singular = json!({"data": [{"ainvs": "0,0;0,0;0,0;0,0;0,0", "conductor_ideal": "[1,0,1]"}]});
        assert!(curve_record("x", &singular).is_err());
    }
}
