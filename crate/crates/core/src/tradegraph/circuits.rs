//! Johnson's enumeration of elementary circuits, with an optional length
//! bound and a cap on the number of circuits returned.
//!
//! Under a length bound a vertex whose search was cut short is treated as
//! if it had closed a circuit, so it is unblocked on exit. Only searches
//! that exhausted every path leave a vertex blocked, which keeps the
//! blocking invariant of the unbounded algorithm intact.

use serde::{Deserialize, Serialize};

use super::TradeGraph;
use crate::error::{Error, Result};

/// Closed wallet walk `w1 .. wk w1` with every `wi` distinct, starting at
/// the lexicographically smallest wallet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub wallets: Vec<String>,
    /// For each hop, the ids of all graph edges realizing it.
    #[serde(skip)]
    pub edges: Vec<Vec<usize>>,
}

impl Circuit {
    /// Number of hops (equal to the number of distinct wallets).
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Every elementary circuit of `graph` with at most `max_length` hops,
/// once per distinct node sequence. Self-transfers are ignored.
pub fn find_elementary_circuits(
    graph: &TradeGraph,
    max_length: Option<usize>,
    budget: usize,
) -> Result<Vec<Circuit>> {
    let adjacency = graph.simple_adjacency();
    let cycles = elementary_circuits_indexed(&adjacency, max_length, budget)?;
    Ok(cycles
        .into_iter()
        .map(|cycle| {
            let edges = (0..cycle.len())
                .map(|i| {
                    let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
                    graph
                        .outgoing(a)
                        .iter()
                        .copied()
                        .filter(|&e| graph.edges()[e].to == b)
                        .collect()
                })
                .collect();
            let mut wallets: Vec<String> =
                cycle.iter().map(|&v| graph.nodes()[v].clone()).collect();
            wallets.push(wallets[0].clone());
            Circuit { wallets, edges }
        })
        .collect())
}

/// Index-level enumeration over a simple digraph (`adjacency[v]` lists the
/// successors of `v`; self-loops are skipped). Each cycle is returned open,
/// starting at its smallest vertex; the list is sorted.
pub fn elementary_circuits_indexed(
    adjacency: &[Vec<usize>],
    max_length: Option<usize>,
    budget: usize,
) -> Result<Vec<Vec<usize>>> {
    let n = adjacency.len();
    let mut reverse = vec![Vec::new(); n];
    for (v, succ) in adjacency.iter().enumerate() {
        for &w in succ {
            if w != v {
                reverse[w].push(v);
            }
        }
    }
    let component = strongly_connected_components(adjacency);

    let mut search = Search {
        adjacency,
        in_sub: vec![false; n],
        blocked: vec![false; n],
        blocked_by: vec![Vec::new(); n],
        max_length,
        budget,
        found: Vec::new(),
    };

    for s in 0..n {
        // Strong component of s within the subgraph induced by {s, s+1, ..}.
        let allowed = |v: usize| v >= s && component[v] == component[s];
        let forward = reach(s, adjacency, &allowed);
        let backward = reach(s, &reverse, &allowed);
        let members: Vec<usize> = (s..n).filter(|&v| forward[v] && backward[v]).collect();
        if members.len() < 2 {
            continue;
        }
        for &v in &members {
            search.in_sub[v] = true;
            search.blocked[v] = false;
            search.blocked_by[v].clear();
        }
        search.run(s)?;
        for &v in &members {
            search.in_sub[v] = false;
        }
    }

    let mut found = search.found;
    found.sort();
    Ok(found)
}

struct Search<'a> {
    adjacency: &'a [Vec<usize>],
    in_sub: Vec<bool>,
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<usize>>,
    max_length: Option<usize>,
    budget: usize,
    found: Vec<Vec<usize>>,
}

struct Frame {
    node: usize,
    next: usize,
    closed: bool,
}

impl Search<'_> {
    fn run(&mut self, start: usize) -> Result<()> {
        let mut path = vec![start];
        self.blocked[start] = true;
        let mut frames = vec![Frame {
            node: start,
            next: 0,
            closed: false,
        }];

        while let Some(frame) = frames.last_mut() {
            let v = frame.node;
            if let Some(&w) = self.adjacency[v].get(frame.next) {
                frame.next += 1;
                if w == v || !self.in_sub[w] {
                    continue;
                }
                if w == start {
                    if self.found.len() >= self.budget {
                        return Err(Error::CircuitBudgetExceeded(self.budget));
                    }
                    self.found.push(path.clone());
                    frame.closed = true;
                } else if !self.blocked[w] {
                    if self.max_length.is_some_and(|m| path.len() >= m) {
                        frame.closed = true;
                        continue;
                    }
                    path.push(w);
                    self.blocked[w] = true;
                    frames.push(Frame {
                        node: w,
                        next: 0,
                        closed: false,
                    });
                }
            } else {
                let closed = frame.closed;
                frames.pop();
                if closed {
                    self.unblock(v);
                } else {
                    for &w in &self.adjacency[v] {
                        if self.in_sub[w] && !self.blocked_by[w].contains(&v) {
                            self.blocked_by[w].push(v);
                        }
                    }
                }
                path.pop();
                if let Some(parent) = frames.last_mut() {
                    parent.closed |= closed;
                }
            }
        }
        Ok(())
    }

    fn unblock(&mut self, v: usize) {
        let mut pending = vec![v];
        while let Some(u) = pending.pop() {
            if self.blocked[u] {
                self.blocked[u] = false;
                pending.append(&mut self.blocked_by[u]);
            }
        }
    }
}

fn reach(start: usize, adjacency: &[Vec<usize>], allowed: &impl Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; adjacency.len()];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in &adjacency[v] {
            if !seen[w] && allowed(w) {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Tarjan's algorithm, iterative. Returns a component id per vertex.
fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<usize> {
    const UNVISITED: usize = usize::MAX;
    let n = adjacency.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut component = vec![UNVISITED; n];
    let mut next_index = 0;
    let mut next_component = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        let mut calls: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(top) = calls.last_mut() {
            let v = top.0;
            if let Some(&w) = adjacency[v].get(top.1) {
                top.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                calls.pop();
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        component[w] = next_component;
                        if w == v {
                            break;
                        }
                    }
                    next_component += 1;
                }
                if let Some(&(parent, _)) = calls.last() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    component
}
