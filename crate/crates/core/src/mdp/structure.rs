//! Graph-structural checks on kernels and policy chains.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::model::{DeterministicPolicy, Kernel};

fn graph_from(num_states: usize, mut edge: impl FnMut(usize, usize) -> bool) -> DiGraph<(), ()> {
    let mut g = DiGraph::with_capacity(num_states, num_states * num_states);
    let nodes: Vec<NodeIndex> = (0..num_states).map(|_| g.add_node(())).collect();
    for s in 0..num_states {
        for t in 0..num_states {
            if edge(s, t) {
                g.add_edge(nodes[s], nodes[t], ());
            }
        }
    }
    g
}

/// Strongly connected components with no outgoing edge, each sorted.
fn closed_components(g: &DiGraph<(), ()>) -> Vec<Vec<usize>> {
    let mut closed = Vec::new();
    for comp in tarjan_scc(g) {
        let members: Vec<usize> = comp.iter().map(|n| n.index()).collect();
        let leaks = comp
            .iter()
            .any(|&n| g.neighbors(n).any(|m| !members.contains(&m.index())));
        if !leaks {
            let mut members = members;
            members.sort_unstable();
            closed.push(members);
        }
    }
    closed.sort();
    closed
}

fn union_graph(kernel: &Kernel) -> DiGraph<(), ()> {
    let n_a = kernel.num_actions();
    graph_from(kernel.num_states(), |s, t| (0..n_a).any(|a| kernel.prob(s, a, t) > 0.0))
}

/// Recurrent classes of the chain induced by `policy`.
pub fn recurrent_classes(kernel: &Kernel, policy: &DeterministicPolicy) -> Vec<Vec<usize>> {
    let g = graph_from(kernel.num_states(), |s, t| kernel.prob(s, policy.action(s), t) > 0.0);
    closed_components(&g)
}

/// True when the policy's chain has a single recurrent class.
pub fn policy_is_unichain(kernel: &Kernel, policy: &DeterministicPolicy) -> bool {
    recurrent_classes(kernel, policy).len() == 1
}

/// Every state reaches every other under some policy.
pub fn is_communicating(kernel: &Kernel) -> bool {
    tarjan_scc(&union_graph(kernel)).len() == 1
}

/// One communicating closed class plus states that are transient under every policy.
pub fn is_weakly_communicating(kernel: &Kernel) -> bool {
    let closed = closed_components(&union_graph(kernel));
    if closed.len() != 1 {
        return false;
    }
    let n = kernel.num_states();
    let mut alive: Vec<bool> = (0..n).map(|s| !closed[0].contains(&s)).collect();
    // Shrink to the largest set that some policy can keep itself inside.
    loop {
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            let can_stay = (0..kernel.num_actions()).any(|a| {
                kernel.row(s, a).iter().enumerate().all(|(t, &p)| p == 0.0 || alive[t])
            });
            if !can_stay {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    !alive.iter().any(|&x| x)
}
