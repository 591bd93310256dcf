#![allow(dead_code)]

use std::path::PathBuf;

use ionchain::chain::NormalModeSet;
use serde_json::Value;

pub fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line in-process; `args` excludes the program name.
pub fn iontrap(args: &[&str]) -> CliRun {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["iontrap"];
    full.extend_from_slice(args);
    let code = ionchain::cli::run(full, &mut out, &mut err);
    CliRun {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Validates `value` against the keyword subset the shipped schemas use:
/// type (string or list), required, properties, items, enum.
pub fn validate(value: &Value, schema: &Value, path: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: bad type keyword")),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: expected {types:?}, got {value}"));
        }
    }
    if let Some(Value::Array(allowed)) = schema.get("enum") {
        if !allowed.contains(value) {
            return Err(format!("{path}: {value} not in {allowed:?}"));
        }
    }
    if let (Some(obj), Some(Value::Array(req))) = (value.as_object(), schema.get("required")) {
        for r in req.iter().filter_map(Value::as_str) {
            if !obj.contains_key(r) {
                return Err(format!("{path}: missing '{r}'"));
            }
        }
    }
    if let (Some(obj), Some(Value::Object(props))) = (value.as_object(), schema.get("properties")) {
        for (k, v) in obj {
            if let Some(s) = props.get(k) {
                validate(v, s, &format!("{path}.{k}"))?;
            }
        }
    }
    if let (Some(arr), Some(items)) = (value.as_array(), schema.get("items")) {
        for (i, v) in arr.iter().enumerate() {
            validate(v, items, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

/// Published Be–Mg mode table without field: frequency (MHz) then
/// [x1, y1, z1, x2, y2, z2].
pub const PAIR_TABLE: [(f64, [f64; 6]); 6] = [
    (12.11, [1.000, 0.0, 0.0, 0.018, 0.0, 0.0]),
    (11.03, [0.0, 1.000, 0.0, 0.0, 0.020, 0.0]),
    (4.68, [0.018, 0.0, 0.0, -1.000, 0.0, 0.0]),
    (4.04, [0.0, 0.0, -0.926, 0.0, 0.0, 0.378]),
    (3.53, [0.0, 0.020, 0.0, 0.0, -1.000, 0.0]),
    (1.90, [0.0, 0.0, 0.378, 0.0, 0.0, 0.926]),
];

/// The same pair with 200 V/m along y.
pub const PAIR_TABLE_200V: [(f64, [f64; 6]); 6] = [
    (12.11, [1.000, 0.0, 0.0, 0.018, 0.0, 0.0]),
    (11.06, [0.0, -0.999, 0.024, 0.0, -0.016, -0.014]),
    (4.67, [0.018, 0.0, 0.0, -1.000, 0.0, 0.0]),
    (4.04, [0.0, -0.017, -0.817, 0.0, -0.470, 0.334]),
    (3.42, [0.0, -0.027, -0.450, 0.0, 0.882, 0.137]),
    (1.89, [0.0, -0.005, 0.360, 0.0, 0.038, 0.932]),
];

/// Largest |f − f_table| (MHz) and largest eigenvector entry difference
/// after choosing, per mode, the overall sign that fits best. With
/// `mirror_y` the y components are negated first (a symmetry of the trap
/// that flips the sign convention of the applied field).
pub fn table_deviation(modes: &NormalModeSet, table: &[(f64, [f64; 6])], mirror_y: bool) -> (f64, f64) {
    let n = modes.n_modes();
    assert_eq!(n, table.len());
    let mut df: f64 = 0.0;
    let mut dv: f64 = 0.0;
    for (row, (f_tab, v_tab)) in table.iter().enumerate() {
        // table rows are in descending frequency
        let mode = n - 1 - row;
        let f = modes.frequencies[mode] / std::f64::consts::TAU * 1e-6;
        df = df.max((f - f_tab).abs());
        let mut v = modes.mode_column(mode);
        if mirror_y {
            v[1] = -v[1];
            v[4] = -v[4];
        }
        let dev = |s: f64| v.iter().zip(v_tab).map(|(a, b)| (s * a - b).abs()).fold(0.0, f64::max);
        dv = dv.max(dev(1.0).min(dev(-1.0)));
    }
    (df, dv)
}
