//! Stable text rendering for states and triples, used by golden tests and
//! reports: `x|->X`, `X.f|->V`, `X!` for invalidated locations, `*` for
//! separating conjunction, `/\` and `!=` for pure parts, `E:err` for
//! erroneous exits.

use super::pure::PureTerm;
use super::state::SymbolicState;

pub fn render_state(state: &SymbolicState) -> String {
    let mut parts = Vec::new();
    if !state.existentials.is_empty() {
        let vars: Vec<String> = state.existentials.iter().map(|v| v.to_string()).collect();
        parts.push(format!("E {}.", vars.join(",")));
    }
    let heap = if state.heap.is_empty() {
        "emp".to_string()
    } else {
        state
            .heap
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" * ")
    };
    parts.push(heap);
    if !state.pure.is_true() {
        parts.push(format!("/\\ {}", state.pure));
    }
    if !state.path.is_true() {
        parts.push(format!("; path: {}", state.path));
    }
    parts.join(" ")
}

pub fn render_pure(pure: &PureTerm) -> String {
    pure.to_string()
}
