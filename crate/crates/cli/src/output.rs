//! Locale-free, byte-stable formatting of numbers for CSV and JSON.

use serde_json::{Map, Value};
use whasym::asymptotics::AsymptoticDecomposition;
use whasym::models::{Fit, SweepResult};
use whasym::C64;

/// 17 significant digits in scientific notation; `-0` prints as `0`.
pub fn float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// JSON numbers carry the same 17-digit text as the CSV.
fn number(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(serde_json::Number::from_string_unchecked(float(x)))
    } else {
        Value::Null
    }
}

/// Builds an object without `json!`, which would re-serialize the numbers.
fn object<const N: usize>(fields: [(&str, Value); N]) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

pub fn complex(z: C64) -> Value {
    object([("re", number(z.re)), ("im", number(z.im))])
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("T,N,logdet2_re,logdet2_im,pred_re,pred_im,resid_re,resid_im\n");
    for r in &result.rows {
        let fields = [
            float(r.t),
            r.n_used.to_string(),
            float(r.log_det2.re),
            float(r.log_det2.im),
            float(r.predicted.re),
            float(r.predicted.im),
            float(r.residual.re),
            float(r.residual.im),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn fit_json(fit: &Fit) -> Value {
    let stderr = object([
        ("rate", complex(fit.stderr_rate)),
        ("exponent", complex(fit.stderr_exponent)),
        ("constant", complex(fit.stderr_constant)),
    ]);
    object([
        ("rate", complex(fit.rate)),
        ("exponent", complex(fit.exponent)),
        ("constant", complex(fit.constant)),
        ("stderr", stderr),
    ])
}

pub fn prediction_json(d: &AsymptoticDecomposition) -> Value {
    let mut m = Map::new();
    m.insert("log_g2".into(), complex(d.log_g2_rate));
    m.insert("exponent".into(), complex(d.exponent));
    m.insert("log_e1".into(), complex(d.log_e1));
    m.insert("log_e2".into(), complex(d.log_e2));
    m.insert("log_e3".into(), complex(d.log_e3));
    if !d.warnings.is_empty() {
        m.insert("warnings".into(), d.warnings.iter().cloned().map(Value::String).collect());
    }
    Value::Object(m)
}

pub fn sweep_json(result: &SweepResult) -> Value {
    object([
        ("fit", fit_json(&result.fit)),
        ("prediction", prediction_json(&result.prediction)),
    ])
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
