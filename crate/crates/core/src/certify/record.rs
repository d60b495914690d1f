//! JSON result records shared by the CLI and the FFI layer.

use serde::Serialize;
use serde_json::{json, Value};

use super::{Decomposition, GramCertificate, HullOutcome, MemberOutcome, NormUpper, UcpOutcome};
use crate::freealg::{FreePoly, Signature};
use crate::linalg::CMat;

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub query: String,
    pub d: Option<usize>,
    pub status: String,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub residuals: Value,
}

pub fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

fn poly_json(p: &FreePoly) -> Value {
    Value::String(p.to_string())
}

impl GramCertificate {
    pub fn to_json(&self, sig: &Signature) -> Value {
        json!({
            "reduction": self.reduction.name(),
            "residual": self.residual,
            "blocks": self.blocks.iter().map(|b| json!({
                "generator": b.generator,
                "size": b.size,
                "words": b.words.iter().map(|w| sig.word_to_string(w)).collect::<Vec<_>>(),
                "gram": matrix_json(&b.gram),
            })).collect::<Vec<_>>(),
            "ideal": self.ideal.iter().map(|m| json!({
                "generator": m.generator,
                "u": sig.word_to_string(&m.u),
                "v": sig.word_to_string(&m.v),
                "y": [m.y.re, m.y.im],
            })).collect::<Vec<_>>(),
        })
    }
}

impl Decomposition {
    pub fn to_json(&self) -> Value {
        json!({
            "terms": self.terms.iter().map(|t| json!({
                "generator": t.generator,
                "q": t.q.iter().map(poly_json).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "ideal": poly_json(&self.ideal),
            "residual": self.residual,
            "text": self.text,
        })
    }
}

impl Record {
    pub fn member(query: &str, d: usize, eps: f64, out: &MemberOutcome, sig: &Signature, dec: Option<&Decomposition>) -> Self {
        let certificate = out.certificate.as_ref().map(|c| {
            let mut v = c.to_json(sig);
            if let Some(dec) = dec {
                v["decomposition"] = dec.to_json();
            }
            v
        });
        Record {
            query: query.into(),
            d: Some(d),
            status: if out.found() { "certificate" } else { "not_found" }.into(),
            value: Some(eps),
            certificate,
            witness: None,
            residuals: json!(out.sdp),
        }
    }

    pub fn norm(query: &str, out: &NormUpper) -> Self {
        Record {
            query: query.into(),
            d: Some(out.d),
            status: "upper_bound".into(),
            value: Some(out.value),
            certificate: Some(json!({ "mode": out.mode, "square": out.square, "hermitian": out.hermitian })),
            witness: None,
            residuals: json!(out.sdp),
        }
    }

    pub fn ucp(query: &str, d: usize, out: &UcpOutcome) -> Self {
        Record {
            query: query.into(),
            d: Some(d),
            status: if out.consistent { "ucp_consistent" } else { "violated" }.into(),
            value: out.value.is_finite().then_some(out.value),
            certificate: None,
            witness: out.witness.as_ref().map(|w| {
                json!({ "n": w.n, "entries": w.entries.iter().map(poly_json).collect::<Vec<_>>(), "value": w.value })
            }),
            residuals: json!(out.sdp),
        }
    }

    pub fn hull(query: &str, d: usize, out: &HullOutcome) -> Self {
        Record {
            query: query.into(),
            d: Some(d),
            status: if out.inside { "inside_d" } else { "outside" }.into(),
            value: out.value.is_finite().then_some(out.value),
            certificate: None,
            witness: out.witness.as_ref().map(|p| json!({ "element": poly_json(p) })),
            residuals: json!(out.sdp),
        }
    }
}
