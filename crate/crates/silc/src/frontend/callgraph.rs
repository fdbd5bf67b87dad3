//! Call graph construction and strongly-connected-component ordering.
//!
//! Summaries are inferred bottom-up, so the analysis driver wants callees
//! summarized before their callers. `CallGraph::sccs` lists components in
//! reverse topological order: every callee's component appears before any
//! component that calls into it. Builtins are excluded from the graph.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{is_builtin, Program, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallGraph {
    pub nodes: Vec<String>,
    pub edges: BTreeSet<(String, String)>,
    /// Strongly connected components, callees first.
    pub sccs: Vec<Vec<String>>,
}

impl CallGraph {
    pub fn same_scc(&self, a: &str, b: &str) -> bool {
        self.sccs
            .iter()
            .any(|scc| scc.iter().any(|n| n == a) && scc.iter().any(|n| n == b))
    }
}

pub fn build_call_graph(program: &Program) -> CallGraph {
    let nodes: Vec<String> = program.functions.iter().map(|f| f.name.clone()).collect();
    let defined: BTreeSet<&str> = nodes.iter().map(String::as_str).collect();

    let mut edges = BTreeSet::new();
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for node in &nodes {
        adj.entry(node.as_str()).or_default();
    }
    for func in &program.functions {
        let mut stack: Vec<&Stmt> = func.body.iter().collect();
        while let Some(stmt) = stack.pop() {
            match &stmt.kind {
                StmtKind::Call(_, callee, _) => {
                    if defined.contains(callee.as_str()) && !is_builtin(callee) {
                        edges.insert((func.name.clone(), callee.clone()));
                    }
                }
                StmtKind::If(_, t, e) => {
                    stack.extend(t.iter());
                    if let Some(e) = e {
                        stack.extend(e.iter());
                    }
                }
                StmtKind::While(_, b) => stack.extend(b.iter()),
                _ => {}
            }
        }
    }
    for (caller, callee) in &edges {
        adj.get_mut(caller.as_str()).unwrap().push(callee.as_str());
    }
    for succs in adj.values_mut() {
        succs.sort();
        succs.dedup();
    }

    let sccs = tarjan(&nodes, &adj);
    CallGraph { nodes, edges, sccs }
}

/// Iterative Tarjan. Components come out with callees before callers,
/// which is exactly the summarization order.
fn tarjan(nodes: &[String], adj: &BTreeMap<&str, Vec<&str>>) -> Vec<Vec<String>> {
    #[derive(Default, Clone)]
    struct NodeState {
        index: Option<usize>,
        lowlink: usize,
        on_stack: bool,
    }

    let ids: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let succs: Vec<Vec<usize>> = nodes
        .iter()
        .map(|n| adj[n.as_str()].iter().map(|s| ids[s]).collect())
        .collect();

    let mut state = vec![NodeState::default(); nodes.len()];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut sccs: Vec<Vec<String>> = Vec::new();

    // Explicit work stack: (node, next successor position).
    for start in 0..nodes.len() {
        if state[start].index.is_some() {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if *pos == 0 {
                state[v].index = Some(next_index);
                state[v].lowlink = next_index;
                next_index += 1;
                stack.push(v);
                state[v].on_stack = true;
            }
            if *pos < succs[v].len() {
                let w = succs[v][*pos];
                *pos += 1;
                if state[w].index.is_none() {
                    work.push((w, 0));
                } else if state[w].on_stack {
                    state[v].lowlink = state[v].lowlink.min(state[w].index.unwrap());
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    let low = state[v].lowlink;
                    state[parent].lowlink = state[parent].lowlink.min(low);
                }
                if state[v].lowlink == state[v].index.unwrap() {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        state[w].on_stack = false;
                        component.push(nodes[w].clone());
                        if w == v {
                            break;
                        }
                    }
                    component.sort();
                    sccs.push(component);
                }
            }
        }
    }
    sccs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    /// Independent SCC oracle: two nodes share a component iff each
    /// reaches the other.
    fn scc_oracle(nodes: &[String], edges: &BTreeSet<(String, String)>) -> BTreeSet<BTreeSet<String>> {
        let reaches = |from: &str, to: &str| -> bool {
            let mut seen = BTreeSet::new();
            let mut stack = vec![from.to_string()];
            while let Some(n) = stack.pop() {
                if n == to {
                    return true;
                }
                if !seen.insert(n.clone()) {
                    continue;
                }
                for (a, b) in edges {
                    if *a == n {
                        stack.push(b.clone());
                    }
                }
            }
            false
        };
        let mut out: BTreeSet<BTreeSet<String>> = BTreeSet::new();
        for n in nodes {
            let comp: BTreeSet<String> = nodes
                .iter()
                .filter(|m| (n == *m) || (reaches(n, m) && reaches(m, n)))
                .cloned()
                .collect();
            out.insert(comp);
        }
        out
    }

    #[test]
    fn single_edge_orders_callee_first() {
        let src = "void set(ptr x, int v) { [x] = v; }\nvoid main() { p = NULL; w = 1; set(p, w); }";
        let program = parse(src, "t.mc").unwrap();
        let graph = build_call_graph(&program);
        assert_eq!(graph.sccs, vec![vec!["set".to_string()], vec!["main".to_string()]]);
    }

    #[test]
    fn no_calls_each_own_scc() {
        let src = "void a() { return; }\nvoid b() { return; }";
        let program = parse(src, "t.mc").unwrap();
        let graph = build_call_graph(&program);
        assert_eq!(graph.sccs.len(), 2);
        assert!(graph.edges.is_empty());
    }

    #[test]
    fn mutual_recursion_single_scc_matches_oracle() {
        let src = "void f(ptr p) { g(p); }\nvoid g(ptr p) { f(p); }";
        let program = parse(src, "t.mc").unwrap();
        let graph = build_call_graph(&program);
        let got: BTreeSet<BTreeSet<String>> = graph
            .sccs
            .iter()
            .map(|c| c.iter().cloned().collect())
            .collect();
        assert_eq!(got, scc_oracle(&graph.nodes, &graph.edges));
        assert_eq!(graph.sccs.len(), 1);
        assert_eq!(graph.sccs[0], vec!["f".to_string(), "g".to_string()]);
    }

    #[test]
    fn callees_listed_before_callers() {
        let src = "void leaf() { return; }\nvoid mid() { leaf(); }\nvoid top() { mid(); leaf(); }";
        let program = parse(src, "t.mc").unwrap();
        let graph = build_call_graph(&program);
        let position = |name: &str| {
            graph
                .sccs
                .iter()
                .position(|c| c.iter().any(|n| n == name))
                .unwrap()
        };
        assert!(position("leaf") < position("mid"));
        assert!(position("mid") < position("top"));
    }

    #[test]
    fn deterministic_for_fixed_program() {
        let src = "void a() { b(); }\nvoid b() { return; }\nvoid c() { a(); b(); }";
        let program = parse(src, "t.mc").unwrap();
        assert_eq!(build_call_graph(&program), build_call_graph(&program));
    }
}
