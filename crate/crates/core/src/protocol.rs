//! WebSocket message schema. Every message is a JSON object whose `type` field selects the variant.

use serde::{Deserialize, Serialize};

use crate::event_buffer::PointerEvent;
use crate::page_model::ManifestEntry;
use crate::responder::PatchEntry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Register {
        url: String,
        html: String,
    },
    Mutation {
        html: String,
    },
    Pointer(PointerEvent),
    Utterance {
        text: String,
        /// Client clock in epoch milliseconds; the server clock is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ts: Option<i64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Manifest {
        snapshot_id: String,
        entries: Vec<ManifestEntry>,
        seq: u64,
    },
    ManifestDiff {
        snapshot_id: String,
        add: Vec<ManifestEntry>,
        remove: Vec<ManifestEntry>,
        seq: u64,
    },
    Response {
        speech: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        page_html: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        patch: Option<Vec<PatchEntry>>,
        /// Canonical form of the executed command, when one was built.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        command: Option<serde_json::Value>,
        seq: u64,
    },
    Clarification {
        prompt_id: String,
        prompt: String,
        seq: u64,
    },
}

impl ServerMessage {
    pub fn seq(&self) -> u64 {
        match self {
            ServerMessage::Manifest { seq, .. }
            | ServerMessage::ManifestDiff { seq, .. }
            | ServerMessage::Response { seq, .. }
            | ServerMessage::Clarification { seq, .. } => *seq,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_buffer::PointerKind;
    use crate::page_model::ElementRole;
    use serde_json::json;

    #[test]
    fn pointer_fields_are_flat() {
        let raw = json!({
            "type": "pointer", "ts": 5, "uuid": "u", "role": "cell", "table_id": "t0",
            "row_index": 3, "col_index": 2, "value_text": "35", "kind": "hover"
        });
        let msg: ClientMessage = serde_json::from_value(raw.clone()).unwrap();
        let ClientMessage::Pointer(ev) = &msg else { panic!() };
        assert_eq!(ev.role, ElementRole::Cell);
        assert_eq!(ev.kind, PointerKind::Hover);
        assert_eq!(serde_json::to_value(&msg).unwrap(), raw);
    }

    #[test]
    fn utterance_ts_optional() {
        let m: ClientMessage = serde_json::from_str(r#"{"type":"utterance","text":"hi"}"#).unwrap();
        assert_eq!(m, ClientMessage::Utterance { text: "hi".into(), ts: None });
    }

    #[test]
    fn response_omits_absent_fields() {
        let m = ServerMessage::Response {
            speech: "ok".into(),
            page_html: None,
            patch: None,
            command: None,
            seq: 4,
        };
        assert_eq!(m.to_json_string(), r#"{"type":"response","speech":"ok","seq":4}"#);
    }

    #[test]
    fn unknown_type_rejected() {
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"launch"}"#).is_err());
    }
}
