//! TOML configuration documents.
//!
//! ```toml
//! alpha = 0.5
//! rho = 0.5
//! tau = 0.2
//! horizon = 4.0
//! A = [[0.0, 0.2], [-0.15, 0.0]]
//! B = [[-0.1, 0.0], [0.0, -0.09]]
//!
//! [nonlinearity]
//! kind = "linear_combo"      # or "none"
//! c_state = 0.03
//! shape_state = "identity"   # or "sin_elementwise"
//! c_delayed = 0.03
//! shape_delayed = "sin_elementwise"
//! lf = 0.03
//!
//! [history]
//! kind = "coswave_plus_constant"
//! amplitude = [0.01, 0.0]
//! frequency = [3.141592653589793, 0.0]
//! offset = [0.0, 0.01]
//!
//! [query]
//! xi = 0.02
//! epsilon = 0.2
//! ```
//!
//! Other history kinds: `constant_vector` with `values = [...]`, and
//! `sampled` with `times = [...]` and `samples = [[...], ...]`.
//! An optional `[printed_constants]` table carries published rounded
//! values `psi` and `phi` of the delay-dependent constants.

use serde::{Deserialize, Serialize};

use super::{
    Diagnostic, HistoryFunction, ModelError, Nonlinearity, NonlinearityKind, PrintedConstants, Shape, StabilityQuery,
    SystemSpec,
};
use crate::special_functions::MatrixNxN;
use crate::tempered_operators::TemperedOrder;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDocument {
    pub spec: SystemSpec,
    pub query: StabilityQuery,
    pub printed: Option<PrintedConstants>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    alpha: f64,
    rho: f64,
    tau: f64,
    horizon: f64,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    nonlinearity: RawNonlinearity,
    history: RawHistory,
    query: RawQuery,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    printed_constants: Option<RawPrinted>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinearity {
    kind: NonlinearityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_state: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape_state: Option<Shape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c_delayed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape_delayed: Option<Shape>,
    #[serde(default)]
    lf: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum HistoryKind {
    ConstantVector,
    CoswavePlusConstant,
    Sampled,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistory {
    kind: HistoryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frequency: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    xi: f64,
    epsilon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrinted {
    psi: f64,
    phi: f64,
}

fn matrix(field: &str, rows: &[Vec<f64>], diags: &mut Vec<Diagnostic>) -> Option<MatrixNxN> {
    match MatrixNxN::from_rows(rows) {
        Ok(m) => Some(m),
        Err(e) => {
            diags.push(Diagnostic::new(field, e.to_string()));
            None
        }
    }
}

fn collect<T>(r: Result<T, ModelError>, diags: &mut Vec<Diagnostic>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            diags.extend(e.into_diagnostics());
            None
        }
    }
}

fn required<T>(v: Option<T>, field: &str, kind: &str, diags: &mut Vec<Diagnostic>) -> Option<T> {
    if v.is_none() {
        diags.push(Diagnostic::new(field, format!("required for kind {kind}")));
    }
    v
}

fn build_nonlinearity(raw: RawNonlinearity, diags: &mut Vec<Diagnostic>) -> Option<Nonlinearity> {
    match raw.kind {
        NonlinearityKind::None => {
            let before = diags.len();
            if raw.lf != 0.0 {
                diags.push(Diagnostic::new("nonlinearity.lf", "must be 0 when kind is none"));
            }
            for (field, c) in [
                ("nonlinearity.c_state", raw.c_state),
                ("nonlinearity.c_delayed", raw.c_delayed),
            ] {
                if c.is_some_and(|c| c != 0.0) {
                    diags.push(Diagnostic::new(field, "must be 0 or absent when kind is none"));
                }
            }
            (diags.len() == before).then(Nonlinearity::none)
        }
        NonlinearityKind::LinearCombo => {
            let c_state = required(raw.c_state, "nonlinearity.c_state", "linear_combo", diags);
            let c_delayed = required(raw.c_delayed, "nonlinearity.c_delayed", "linear_combo", diags);
            let (c_state, c_delayed) = (c_state?, c_delayed?);
            collect(
                Nonlinearity::linear_combo(
                    c_state,
                    raw.shape_state.unwrap_or(Shape::Identity),
                    c_delayed,
                    raw.shape_delayed.unwrap_or(Shape::Identity),
                    raw.lf,
                ),
                diags,
            )
        }
    }
}

fn build_history(raw: RawHistory, diags: &mut Vec<Diagnostic>) -> Option<HistoryFunction> {
    match raw.kind {
        HistoryKind::ConstantVector => {
            let v = required(raw.values, "history.values", "constant_vector", diags)?;
            collect(HistoryFunction::constant(v), diags)
        }
        HistoryKind::CoswavePlusConstant => {
            let k = "coswave_plus_constant";
            let a = required(raw.amplitude, "history.amplitude", k, diags);
            let f = required(raw.frequency, "history.frequency", k, diags);
            let o = required(raw.offset, "history.offset", k, diags);
            collect(HistoryFunction::cos_wave(a?, f?, o?), diags)
        }
        HistoryKind::Sampled => {
            let t = required(raw.times, "history.times", "sampled", diags);
            let s = required(raw.samples, "history.samples", "sampled", diags);
            collect(HistoryFunction::sampled(t?, s?), diags)
        }
    }
}

/// Parses and validates a configuration document. Every problem found is
/// reported, each naming its field.
pub fn parse_system(text: &str) -> Result<SystemDocument, ModelError> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string().trim().to_owned()))?;
    let mut diags = Vec::new();

    let order = match TemperedOrder::new(raw.alpha, raw.rho) {
        Ok(o) => Some(o),
        Err(e) => {
            let field = if raw.alpha > 0.0 && raw.alpha < 1.0 {
                "rho"
            } else {
                "alpha"
            };
            diags.push(Diagnostic::new(field, e.to_string()));
            None
        }
    };
    let a = matrix("A", &raw.a, &mut diags);
    let b = matrix("B", &raw.b, &mut diags);
    let f = build_nonlinearity(raw.nonlinearity, &mut diags);
    let history = build_history(raw.history, &mut diags);
    let query = collect(
        StabilityQuery::new(raw.query.xi, raw.query.epsilon, raw.horizon),
        &mut diags,
    );
    let printed = raw
        .printed_constants
        .map(|p| PrintedConstants { psi: p.psi, phi: p.phi });
    if let Some(p) = printed {
        for (field, v) in [("printed_constants.psi", p.psi), ("printed_constants.phi", p.phi)] {
            if !(v >= 0.0) || !v.is_finite() {
                diags.push(Diagnostic::new(
                    field,
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
    }

    let spec = match (order, a, b, f, history) {
        (Some(order), Some(a), Some(b), Some(f), Some(history)) => collect(
            SystemSpec::new(order, raw.tau, raw.horizon, a, b, f, history),
            &mut diags,
        ),
        _ => {
            // still report scalar problems the constructor would have caught
            for (field, v) in [("tau", raw.tau), ("horizon", raw.horizon)] {
                if !(v > 0.0) || !v.is_finite() {
                    diags.push(Diagnostic::new(field, format!("must be positive and finite, got {v}")));
                }
            }
            None
        }
    };
    ModelError::check(diags)?;
    Ok(SystemDocument {
        spec: spec.expect("validated"),
        query: query.expect("validated"),
        printed,
    })
}

/// Writes a document that [`parse_system`] reads back bit-exactly. Floats are
/// emitted in shortest round-trip form, which is at most 17 significant
/// digits.
pub fn serialize_system(doc: &SystemDocument) -> String {
    let spec = &doc.spec;
    let f = spec.nonlinearity();
    let nonlinearity = match f.kind() {
        NonlinearityKind::None => RawNonlinearity {
            kind: NonlinearityKind::None,
            c_state: None,
            shape_state: None,
            c_delayed: None,
            shape_delayed: None,
            lf: 0.0,
        },
        NonlinearityKind::LinearCombo => RawNonlinearity {
            kind: NonlinearityKind::LinearCombo,
            c_state: Some(f.c_state()),
            shape_state: Some(f.shape_state()),
            c_delayed: Some(f.c_delayed()),
            shape_delayed: Some(f.shape_delayed()),
            lf: f.lipschitz(),
        },
    };
    let h = spec.history();
    let mut history = RawHistory {
        kind: HistoryKind::ConstantVector,
        values: None,
        amplitude: None,
        frequency: None,
        offset: None,
        times: None,
        samples: None,
    };
    if let Some(v) = h.as_constant() {
        history.values = Some(v.to_vec());
    } else if let Some((a, fr, o)) = h.as_cos_wave() {
        history.kind = HistoryKind::CoswavePlusConstant;
        history.amplitude = Some(a.to_vec());
        history.frequency = Some(fr.to_vec());
        history.offset = Some(o.to_vec());
    } else if let Some((t, s)) = h.as_sampled() {
        history.kind = HistoryKind::Sampled;
        history.times = Some(t.to_vec());
        history.samples = Some(s.to_vec());
    }
    let raw = RawDocument {
        alpha: spec.alpha(),
        rho: spec.rho(),
        tau: spec.tau(),
        horizon: spec.horizon(),
        a: spec.a().rows(),
        b: spec.b().rows(),
        nonlinearity,
        history,
        query: RawQuery {
            xi: doc.query.xi(),
            epsilon: doc.query.epsilon(),
        },
        printed_constants: doc.printed.map(|p| RawPrinted { psi: p.psi, phi: p.phi }),
    };
    toml::to_string(&raw).expect("document types always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIRST: &str = r#"
alpha = 0.3
rho = 0.8
tau = 0.2
horizon = 3
A = [[-2, 0], [0, -2]]
B = [[3, -4], [0, 0]]

[nonlinearity]
kind = "linear_combo"
c_state = 2
shape_state = "sin_elementwise"
c_delayed = -3
shape_delayed = "sin_elementwise"
lf = 3

[history]
kind = "constant_vector"
values = [0, 0]

[query]
xi = 0.01
epsilon = 0.6
"#;

    #[test]
    fn parses_first_example() {
        let doc = parse_system(FIRST).unwrap();
        assert_eq!(doc.spec.alpha(), 0.3);
        assert_eq!(doc.spec.rho(), 0.8);
        assert_eq!(doc.spec.horizon(), 3.0);
        assert_eq!(doc.spec.nonlinearity().lipschitz(), 3.0);
        assert_eq!(doc.spec.b().get(0, 1), -4.0);
        assert_eq!(doc.query.threshold(), 60.0);
        assert_eq!(doc.spec.history_sup_norm(), 0.0);
        assert!(doc.printed.is_none());
    }

    #[test]
    fn xi_above_epsilon_is_a_validation_error() {
        let text = FIRST.replace("xi = 0.01", "xi = 0.7");
        let err = parse_system(&text).unwrap_err();
        assert!(matches!(err, ModelError::Validation(_)));
        assert_eq!(err.diagnostics()[0].field, "query.xi");
    }

    #[test]
    fn several_problems_reported_together() {
        let text = FIRST
            .replace("alpha = 0.3", "alpha = 1.3")
            .replace("lf = 3", "lf = 1")
            .replace("values = [0, 0]", "values = [0, 0, 0]");
        let err = parse_system(&text).unwrap_err();
        let fields: Vec<_> = err.diagnostics().iter().map(|d| d.field.clone()).collect();
        assert!(fields.contains(&"alpha".to_owned()), "{fields:?}");
        assert!(fields.contains(&"nonlinearity.lf".to_owned()), "{fields:?}");
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        assert!(matches!(parse_system("alpha = ["), Err(ModelError::Parse(_))));
        let unknown = FIRST.replace("[query]", "[query]\nzeta = 1");
        let err = parse_system(&unknown).unwrap_err();
        assert!(err.to_string().contains("zeta"), "{err}");
        let missing = FIRST.replace("values = [0, 0]", "");
        let err = parse_system(&missing).unwrap_err();
        assert_eq!(err.diagnostics()[0].field, "history.values");
    }

    #[test]
    fn none_kind_rejects_nonzero_constant() {
        let text = FIRST.replace("kind = \"linear_combo\"", "kind = \"none\"");
        let err = parse_system(&text).unwrap_err();
        assert!(err.diagnostics().iter().any(|d| d.field == "nonlinearity.lf"));
    }

    #[test]
    fn zero_rho_rejected_in_documents() {
        let err = parse_system(&FIRST.replace("rho = 0.8", "rho = 0.0")).unwrap_err();
        assert_eq!(err.diagnostics()[0].field, "rho");
    }

    #[test]
    fn printed_constants_round_trip() {
        let text = format!("{FIRST}\n[printed_constants]\npsi = 0.4945\nphi = 0.1201\n");
        let doc = parse_system(&text).unwrap();
        assert_eq!(
            doc.printed,
            Some(PrintedConstants {
                psi: 0.4945,
                phi: 0.1201
            })
        );
        assert_eq!(parse_system(&serialize_system(&doc)).unwrap(), doc);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6f64..1e6,
            -1.0f64..1.0,
            (-300i32..300, -1.0f64..1.0).prop_map(|(e, m)| m * 10f64.powi(e)),
        ]
    }

    fn shape() -> impl Strategy<Value = Shape> {
        prop_oneof![Just(Shape::Identity), Just(Shape::SinElementwise)]
    }

    fn history(n: usize, tau: f64) -> impl Strategy<Value = HistoryFunction> {
        let fv = move || proptest::collection::vec(finite(), n);
        prop_oneof![
            fv().prop_map(|v| HistoryFunction::constant(v).unwrap()),
            (fv(), fv(), fv()).prop_map(|(a, f, o)| HistoryFunction::cos_wave(a, f, o).unwrap()),
            (1usize..5).prop_flat_map(move |k| {
                proptest::collection::vec(proptest::collection::vec(finite(), n), k).prop_map(move |rows| {
                    let k = rows.len();
                    let times = (0..k).map(|i| -tau * (k - 1 - i) as f64 / k as f64).collect();
                    HistoryFunction::sampled(times, rows).unwrap()
                })
            }),
        ]
    }

    fn document() -> impl Strategy<Value = SystemDocument> {
        (1usize..4, 0.01f64..0.99, 0.01f64..=1.0, 0.01f64..5.0, 0.1f64..10.0).prop_flat_map(
            |(n, alpha, rho, tau, horizon)| {
                let m =
                    move || proptest::collection::vec(finite(), n * n).prop_map(move |e| MatrixNxN::new(n, e).unwrap());
                let f = prop_oneof![
                    Just(Nonlinearity::none()),
                    (finite(), shape(), finite(), shape(), 0.0f64..10.0).prop_map(|(cs, ss, cd, sd, extra)| {
                        let lf = cs.abs().max(cd.abs()) + extra;
                        Nonlinearity::linear_combo(cs, ss, cd, sd, lf).unwrap()
                    }),
                ];
                let printed = proptest::option::of(
                    (0.0f64..1e3, 0.0f64..1e3).prop_map(|(psi, phi)| PrintedConstants { psi, phi }),
                );
                (m(), m(), f, history(n, tau), 1e-3f64..1.0, 1.0f64..100.0, printed).prop_map(
                    move |(a, b, f, h, xi, ratio, printed)| SystemDocument {
                        spec: SystemSpec::new(TemperedOrder::new(alpha, rho).unwrap(), tau, horizon, a, b, f, h)
                            .unwrap(),
                        query: StabilityQuery::new(xi, xi * ratio, horizon).unwrap(),
                        printed,
                    },
                )
            },
        )
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(doc in document()) {
            let text = serialize_system(&doc);
            let back = parse_system(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, doc);
        }
    }
}
