use super::{GenerationRequest, TaskgenError};
use crate::scene::{
    from_json_text, goals_from_doc, graph_from_doc, validate_scenario, ReplyDoc, ScenarioError, SemanticError,
    TaskScenario,
};

/// Byte range of the balanced `{...}` starting at `start`, skipping braces
/// inside string literals.
fn balanced_object(text: &str, start: usize) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn first_object(text: &str) -> Option<&str> {
    let mut from = 0;
    while let Some(off) = text[from..].find('{') {
        let start = from + off;
        if let Some(obj) = balanced_object(text, start) {
            return Some(obj);
        }
        from = start + 1;
    }
    None
}

/// The structured block of a reply: the first object inside a code fence
/// if there is one, otherwise the first balanced object in the text.
pub fn extract_block(text: &str) -> Option<&str> {
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |n| n + 1);
        let body = &after[body_start..];
        let (inner, tail) = match body.find("```") {
            Some(close) => (&body[..close], &body[close + 3..]),
            None => (body, ""),
        };
        if let Some(obj) = first_object(inner) {
            return Some(obj);
        }
        rest = tail;
    }
    first_object(text)
}

/// Drops `//` line comments and trailing commas outside string literals.
pub fn sanitize(block: &str) -> String {
    let chars: Vec<char> = block.chars().collect();
    let mut out = String::with_capacity(block.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_string {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            i += 1;
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !matches!(next, Some('}') | Some(']')) {
                    out.push(c);
                }
            }
            _ => out.push(c),
        }
        i += 1;
    }
    out
}

/// Turns a generation reply into a validated scenario over the request's
/// asset pool.
pub fn parse_reply(text: &str, req: &GenerationRequest) -> Result<TaskScenario, TaskgenError> {
    let block = extract_block(text).ok_or(TaskgenError::NoStructuredBlock)?;
    let doc: ReplyDoc = from_json_text(&sanitize(block))?;
    let instruction = doc.instruction.trim().to_string();
    if instruction.is_empty() {
        return Err(ScenarioError::schema("instruction", "instruction is empty").into());
    }
    let scenario = TaskScenario {
        id: req.scenario_id(),
        task_type: req.task_type,
        instruction,
        scene_graph: graph_from_doc(&doc.scene_graph)?,
        goals: goals_from_doc(&doc.goal_conditions)?,
        asset_pool: req.pool.clone(),
        seed: req.seed,
    };
    validate_scenario(&scenario)?;
    let n = scenario.scene_graph.nodes.len();
    if n < req.num_objects_min {
        return Err(ScenarioError::semantic(
            "scene_graph.nodes",
            SemanticError::Invalid(format!("{n} objects, at least {} required", req.num_objects_min)),
        )
        .into());
    }
    Ok(scenario)
}
