use serde_json::{json, Value};

use genderalt_web::{augment_json, derive_json, group_json, records_json};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn records_carry_spans_and_entities() {
    let records = parse(&records_json().unwrap());
    assert_eq!(records.as_array().unwrap().len(), 50);
    let first = &records[0];
    assert_eq!(first["entities"], json!([{"head": "secretary", "label": "A"}, {"head": "boss", "label": "A"}]));
    assert_eq!(
        first["target"][0],
        json!({"kind": "structure", "masculine": "El secretario", "feminine": "La secretaria", "entity": 0})
    );
    assert_eq!(first["target"][1], json!({"kind": "token", "text": "estaba"}));
    assert!(first["serialized"].as_str().unwrap().starts_with("<BEG> El secretario <MID> La secretaria <END>"));
}

#[test]
fn derive_toggles() {
    let out = parse(&derive_json(0, r#"["M", "F"]"#).unwrap());
    assert_eq!(out["text"], "El secretario estaba enojado con la jefa.");
    // the lawyer's slot is ignored
    let out = parse(&derive_json(2, r#"[null, "F", "F"]"#).unwrap());
    assert!(out["text"].as_str().unwrap().starts_with("El abogado luchó para mantener a su hija"));
    assert!(derive_json(0, r#"["M"]"#).unwrap_err().contains("entity 1"));
    assert!(derive_json(99, "[]").is_err());
    assert!(derive_json(0, "not json").is_err());
}

#[test]
fn group_pair_marks_differences() {
    let out = group_json("El doctor estaba enojado", "La doctora estaba enojada").unwrap();
    assert_eq!(parse(&out), "<BEG> El doctor <MID> La doctora <END> estaba <BEG> enojado <MID> enojada <END>");
    assert!(group_json("El doctor estaba enojado", "El doctor estaba feliz").is_err());
}

#[test]
fn augment_round_trip() {
    let out = parse(&augment_json(r#"{"source": "The doctor was angry with the patient", "translation": "El doctor estaba enojado con el paciente"}"#).unwrap());
    assert_eq!(out["outcome"], "record");
    assert_eq!(out["record"]["serialized"], "<BEG> El doctor <MID> La doctora <END> estaba <BEG> enojado <MID> enojada <END> con <BEG> el <MID> la <END> paciente");
    let out = parse(&augment_json(r#"{"source": "She is a boss", "translation": "Ella es una jefa"}"#).unwrap());
    assert_eq!(out["outcome"], "passthrough");
}
