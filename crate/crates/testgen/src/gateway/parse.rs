//! Strict structured-response parsing, tolerant of surrounding prose and
//! code fences.

use serde_json::{json, Value};

use super::{Role, RoleResponse, Verdict};

/// Extract the first balanced JSON object from raw text.
pub fn extract_first_json_object(raw: &str) -> Option<Value> {
    let bytes = raw.as_bytes();
    let mut start = 0;
    while let Some(offset) = raw[start..].find('{') {
        let open = start + offset;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (i, &b) in bytes[open..].iter().enumerate() {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        let candidate = &raw[open..open + i + 1];
                        if let Ok(value) = serde_json::from_str::<Value>(candidate) {
                            return Some(value);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
        start = open + 1;
    }
    None
}

fn require_str(obj: &Value, field: &str) -> Result<String, String> {
    obj.get(field)
        .ok_or_else(|| format!("missing field {field:?}"))?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| format!("field {field:?} must be a string"))
}

fn require_str_list(obj: &Value, field: &str) -> Result<Vec<String>, String> {
    let arr = obj
        .get(field)
        .ok_or_else(|| format!("missing field {field:?}"))?
        .as_array()
        .ok_or_else(|| format!("field {field:?} must be a list"))?;
    arr.iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| format!("field {field:?} must contain only strings"))
        })
        .collect()
}

/// Validate the role's required fields and types. task_done and
/// chosen_action are strict: "true"/"maybe"/floats are rejected.
pub fn parse_response(role: Role, raw: &str) -> Result<RoleResponse, String> {
    let obj = extract_first_json_object(raw).ok_or_else(|| "no JSON object found".to_string())?;
    match role {
        Role::Selector => {
            let chosen = obj
                .get("chosen_action")
                .ok_or("missing field \"chosen_action\"")?
                .as_u64()
                .ok_or("field \"chosen_action\" must be a non-negative integer")?;
            Ok(RoleResponse::Selector {
                chosen_action: chosen as usize,
                action_description: require_str(&obj, "action_description")?,
                reason: require_str(&obj, "reason")?,
            })
        }
        Role::Observer => Ok(RoleResponse::Observer {
            observation: require_str(&obj, "observation")?,
        }),
        Role::Verifier => {
            let done = obj
                .get("task_done")
                .ok_or("missing field \"task_done\"")?
                .as_bool()
                .ok_or("field \"task_done\" must be a strict boolean")?;
            Ok(RoleResponse::Verifier {
                screen_description: require_str(&obj, "screen_description")?,
                task_done: done,
            })
        }
        Role::Reflector => {
            let verdict = match require_str(&obj, "verdict")?.as_str() {
                "success" => Verdict::Success,
                "failed" => Verdict::Failed,
                other => return Err(format!("verdict must be \"success\" or \"failed\", got {other:?}")),
            };
            let optimized_steps = if obj.get("optimized_steps").is_some() {
                require_str_list(&obj, "optimized_steps")?
            } else {
                Vec::new()
            };
            Ok(RoleResponse::Reflector {
                verdict,
                rules: require_str_list(&obj, "rules")?,
                optimized_steps,
            })
        }
    }
}

/// Canonical serialization of a RoleResponse; parse_response round-trips it.
pub fn serialize_response(response: &RoleResponse) -> String {
    let value = match response {
        RoleResponse::Selector {
            chosen_action,
            action_description,
            reason,
        } => json!({
            "chosen_action": chosen_action,
            "action_description": action_description,
            "reason": reason,
        }),
        RoleResponse::Observer { observation } => json!({ "observation": observation }),
        RoleResponse::Verifier {
            screen_description,
            task_done,
        } => json!({
            "screen_description": screen_description,
            "task_done": task_done,
        }),
        RoleResponse::Reflector {
            verdict,
            rules,
            optimized_steps,
        } => json!({
            "verdict": match verdict { Verdict::Success => "success", Verdict::Failed => "failed" },
            "rules": rules,
            "optimized_steps": optimized_steps,
        }),
    };
    value.to_string()
}

impl RoleResponse {
    pub fn role(&self) -> Role {
        match self {
            RoleResponse::Selector { .. } => Role::Selector,
            RoleResponse::Observer { .. } => Role::Observer,
            RoleResponse::Verifier { .. } => Role::Verifier,
            RoleResponse::Reflector { .. } => Role::Reflector,
        }
    }
}
