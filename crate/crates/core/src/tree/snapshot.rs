use std::fmt::{Debug, Write};

use serde::{Deserialize, Serialize};

use super::{ActionId, HistoryId, SearchTree};

/// Serialized history node. `lambda` is the dual vector that guided
/// selection at this node (the global one for baseline trees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub obs: Option<String>,
    pub n: u64,
    pub lambda: Vec<f64>,
    pub crem: Vec<f64>,
    pub children: Vec<ActionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action: String,
    pub n: u64,
    pub qr: f64,
    pub qc: Vec<f64>,
    pub cbar: Vec<f64>,
    pub children: Vec<HistoryRecord>,
}

impl HistoryRecord {
    pub fn count_histories(&self) -> usize {
        1 + self
            .children
            .iter()
            .flat_map(|a| &a.children)
            .map(HistoryRecord::count_histories)
            .sum::<usize>()
    }

    pub fn count_actions(&self) -> usize {
        self.children.len()
            + self
                .children
                .iter()
                .flat_map(|a| &a.children)
                .map(HistoryRecord::count_actions)
                .sum::<usize>()
    }
}

/// Snapshot of the tree down to `depth_limit` history levels below the root.
/// A limit of zero yields the root record alone.
pub fn dump_tree<S, O: Debug>(
    tree: &SearchTree<S, O>,
    depth_limit: usize,
    action_label: impl Fn(usize) -> String,
) -> HistoryRecord {
    history_record(tree, SearchTree::<S, O>::ROOT, depth_limit, &action_label)
}

fn history_record<S, O: Debug>(
    tree: &SearchTree<S, O>,
    id: HistoryId,
    remaining: usize,
    action_label: &dyn Fn(usize) -> String,
) -> HistoryRecord {
    let node = tree.history(id);
    let children = if remaining == 0 {
        Vec::new()
    } else {
        node.children
            .iter()
            .map(|&a| action_record(tree, a, remaining - 1, action_label))
            .collect()
    };
    HistoryRecord {
        obs: node.obs.as_ref().map(|o| format!("{o:?}")),
        n: node.visits,
        lambda: tree.lambda_at(id).values().to_vec(),
        crem: node.remaining_budget.clone(),
        children,
    }
}

fn action_record<S, O: Debug>(
    tree: &SearchTree<S, O>,
    id: ActionId,
    remaining: usize,
    action_label: &dyn Fn(usize) -> String,
) -> ActionRecord {
    let node = tree.action(id);
    ActionRecord {
        action: action_label(node.action),
        n: node.visits,
        qr: node.q_reward,
        qc: node.q_cost.clone(),
        cbar: node.step_cost.clone(),
        children: node
            .children
            .iter()
            .map(|&h| history_record(tree, h, remaining, action_label))
            .collect(),
    }
}

/// Renders a snapshot as a DOT digraph. Every node is labelled `N=<count>`;
/// edges carry the action or observation label.
pub fn to_dot(root: &HistoryRecord) -> String {
    let mut out = String::from("digraph search_tree {\n  node [fontname=\"Helvetica\"];\n");
    let mut next_id = 0usize;
    dot_history(root, &mut out, &mut next_id);
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot_history(h: &HistoryRecord, out: &mut String, next_id: &mut usize) -> String {
    let id = format!("h{}", *next_id);
    *next_id += 1;
    let _ = writeln!(out, "  {id} [shape=ellipse, label=\"N={}\"];", h.n);
    for a in &h.children {
        let aid = format!("a{}", *next_id);
        *next_id += 1;
        let _ = writeln!(out, "  {aid} [shape=box, label=\"N={}\"];", a.n);
        let _ = writeln!(out, "  {id} -> {aid} [label=\"{}\"];", escape(&a.action));
        for child in &a.children {
            let cid = dot_history(child, out, next_id);
            let label = child.obs.as_deref().unwrap_or("");
            let _ = writeln!(out, "  {aid} -> {cid} [label=\"{}\"];", escape(label));
        }
    }
    id
}
