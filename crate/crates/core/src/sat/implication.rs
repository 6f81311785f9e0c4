//! Polynomial-time satisfiability through the implication graph.
//!
//! Each clause `(a ∨ b)` contributes the edges `¬a → b` and `¬b → a`. The
//! instance is satisfiable iff no variable shares a strongly connected
//! component with its negation.

use super::{Literal, Problem, SpinConfig};

fn node(lit: Literal) -> usize {
    2 * lit.var() + usize::from(!lit.is_positive())
}

/// Iterative Tarjan. Components are numbered in reverse topological order,
/// so a sink component gets id 0.
fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge == 0 && index[v] == UNSEEN {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adj[v].get(*edge) {
                *edge += 1;
                if index[w] == UNSEEN {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Returns a satisfying configuration when one exists.
pub fn implication_satisfiable(problem: &Problem) -> (bool, Option<SpinConfig>) {
    let n = problem.n_vars();
    let mut adj = vec![Vec::new(); 2 * n];
    for c in problem.clauses() {
        adj[node(c.a.negate())].push(node(c.b));
        adj[node(c.b.negate())].push(node(c.a));
    }
    let comp = tarjan_scc(&adj);
    let mut spins = Vec::with_capacity(n);
    for v in 0..n {
        let pos = comp[2 * v];
        let neg = comp[2 * v + 1];
        if pos == neg {
            return (false, None);
        }
        // The literal whose component comes later in topological order is set true.
        spins.push(if pos < neg { 1 } else { -1 });
    }
    (true, Some(SpinConfig::new(spins).expect("spins are ±1")))
}
