//! Bottom-up clustering of tetrahedra by how much bounding-box volume the
//! merged cluster would waste.
//!
//! Every tetrahedron starts as a singleton cluster. Facet-adjacent clusters
//! are candidate merges, keyed by the absolute aboxiness of their union
//! (`Vol(MBB) - Vol`). The cheapest candidate is merged repeatedly; each merge
//! becomes an internal node of a binary tree whose leaves are the tetrahedra.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{approximate_mbb, convex_hull, OrientedBox, Point3};
use crate::tetmesh::{DualGraph, PartRef, TetMesh};

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("bounding box has zero volume")]
    DegenerateBox,
    #[error("node {0} is a leaf and cannot be split")]
    LeafSplit(NodeId),
    #[error("node {0} is not in the active set")]
    NotActive(NodeId),
}

/// Edge cost used while clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `Vol(MBB(C1 ∪ C2)) - Vol(C1 ∪ C2)`.
    #[default]
    AbsoluteAboxiness,
    /// `1 - Vol / Vol(MBB)`; tends to produce very unbalanced trees.
    RelativeBoxiness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    pub epsilon: f64,
    pub cost: CostKind,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            epsilon: 0.05,
            cost: CostKind::AbsoluteAboxiness,
        }
    }
}

/// `Vol(P) / Vol(MBB(P))`.
pub fn boxiness(part: &PartRef) -> Result<f64, SegmentationError> {
    let mbb = part.mbb().volume();
    if mbb <= 0.0 {
        return Err(SegmentationError::DegenerateBox);
    }
    Ok(part.volume() / mbb)
}

/// `Vol(MBB(P)) - Vol(P)`.
pub fn aboxiness(part: &PartRef) -> f64 {
    part.mbb().volume() - part.volume()
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    pub tet_count: usize,
    pub volume: f64,
    pub hull_points: Vec<Point3>,
    pub mbb: OrientedBox,
    pub aboxiness: f64,
    /// Smallest tet index in the cluster; used for deterministic ordering.
    pub min_tet: usize,
    /// Contraction cost that created this node (zero for leaves).
    pub cost: f64,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary tree of tetrahedra clusters. Nodes `0..n` are the leaves (node `i`
/// is tet `i`); internal nodes follow in merge order.
#[derive(Debug, Clone)]
pub struct SegmentationTree {
    nodes: Vec<TreeNode>,
    root: NodeId,
    num_leaves: usize,
}

impl SegmentationTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len() - self.num_leaves
    }

    /// Tets under a node, sorted.
    pub fn tets_of(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].tet_count);
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match self.nodes[n].children {
                Some([a, b]) => {
                    stack.push(a);
                    stack.push(b);
                }
                None => out.push(n),
            }
        }
        out.sort_unstable();
        out
    }

    /// Part with the node's cached hull and box.
    pub fn part(&self, id: NodeId) -> PartRef {
        let n = &self.nodes[id];
        PartRef::from_cached(
            self.tets_of(id),
            n.volume,
            n.hull_points.clone(),
            n.mbb.clone(),
        )
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((n, d)) = stack.pop() {
            best = best.max(d);
            if let Some([a, b]) = self.nodes[n].children {
                stack.push((a, d + 1));
                stack.push((b, d + 1));
            }
        }
        best
    }

    pub fn node_depth(&self, mut id: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[id].parent {
            id = p;
            d += 1;
        }
        d
    }

    /// Splits the active internal node of largest aboxiness until `k` parts
    /// are active (or no internal node remains).
    pub fn cut_with_parts(&self, k: usize) -> Vec<NodeId> {
        let mut active = vec![self.root];
        while active.len() < k {
            let Some(next) = most_aboxy(self, &active) else {
                break;
            };
            active = cut_tree(self, &active, next).expect("selected node is active and internal");
        }
        active
    }

    pub fn to_json(&self) -> TreeDump {
        TreeDump {
            root: self.root,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDump {
                    id: n.id,
                    parent: n.parent,
                    children: n.children.map(|c| c.to_vec()).unwrap_or_default(),
                    tet_count: n.tet_count,
                    volume: n.volume,
                    mbb: MbbDump {
                        center: [n.mbb.center.x, n.mbb.center.y, n.mbb.center.z],
                        axes: n.mbb.axes.map(|a| [a.x, a.y, a.z]),
                        half_extents: n.mbb.half_extents,
                    },
                    aboxiness: n.aboxiness,
                })
                .collect(),
        }
    }
}

/// Active internal node with maximal aboxiness; ties by larger volume, then
/// smaller id.
pub(crate) fn most_aboxy(tree: &SegmentationTree, active: &[NodeId]) -> Option<NodeId> {
    active
        .iter()
        .copied()
        .filter(|&n| !tree.node(n).is_leaf())
        .max_by(|&a, &b| {
            let (na, nb) = (tree.node(a), tree.node(b));
            na.aboxiness
                .total_cmp(&nb.aboxiness)
                .then(na.volume.total_cmp(&nb.volume))
                .then(b.cmp(&a))
        })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MbbDump {
    pub center: [f64; 3],
    pub axes: [[f64; 3]; 3],
    pub half_extents: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeDump {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub tet_count: usize,
    pub volume: f64,
    pub mbb: MbbDump,
    pub aboxiness: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeDump {
    pub root: NodeId,
    pub nodes: Vec<NodeDump>,
}

/// Replaces `node` in the active set with its two children.
pub fn cut_tree(
    tree: &SegmentationTree,
    active: &[NodeId],
    node: NodeId,
) -> Result<Vec<NodeId>, SegmentationError> {
    let pos = active
        .iter()
        .position(|&n| n == node)
        .ok_or(SegmentationError::NotActive(node))?;
    let [a, b] = tree
        .node(node)
        .children
        .ok_or(SegmentationError::LeafSplit(node))?;
    let mut out = active.to_vec();
    out[pos] = a;
    out.insert(pos + 1, b);
    Ok(out)
}

/// Hull vertices and box of a point cloud; degenerate clouds keep all points.
pub(crate) fn hull_and_box(points: Vec<Point3>, epsilon: f64) -> (Vec<Point3>, OrientedBox) {
    let hull_points = match convex_hull(&points) {
        Ok(h) => h.vertices,
        Err(_) => dedup_points(points),
    };
    let mbb = approximate_mbb(&hull_points, epsilon);
    (hull_points, mbb)
}

fn dedup_points(mut pts: Vec<Point3>) -> Vec<Point3> {
    pts.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    pts.dedup();
    pts
}

/// A candidate merge with its union already evaluated.
#[derive(Debug, Clone)]
struct Merge {
    hull_points: Vec<Point3>,
    mbb: OrientedBox,
    volume: f64,
    cost: f64,
}

fn evaluate(nodes: &[TreeNode], a: NodeId, b: NodeId, cfg: &SegmentationConfig) -> Merge {
    let mut pts = nodes[a].hull_points.clone();
    pts.extend_from_slice(&nodes[b].hull_points);
    let (hull_points, mbb) = hull_and_box(pts, cfg.epsilon);
    let volume = nodes[a].volume + nodes[b].volume;
    let mbb_vol = mbb.volume();
    let cost = match cfg.cost {
        CostKind::AbsoluteAboxiness => mbb_vol - volume,
        CostKind::RelativeBoxiness if mbb_vol > 0.0 => 1.0 - volume / mbb_vol,
        CostKind::RelativeBoxiness => 0.0,
    };
    Merge {
        hull_points,
        mbb,
        volume,
        cost,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapKey {
    cost: f64,
    tie: (usize, usize),
    a: NodeId,
    b: NodeId,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.tie.cmp(&other.tie))
            .then((self.a, self.b).cmp(&(other.a, other.b)))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Builder<'a> {
    cfg: &'a SegmentationConfig,
    nodes: Vec<TreeNode>,
    alive: Vec<bool>,
    adjacency: HashMap<NodeId, BTreeSet<NodeId>>,
    heap: BinaryHeap<Reverse<HeapKey>>,
    pending: HashMap<(NodeId, NodeId), Merge>,
}

impl Builder<'_> {
    fn ordered(&self, a: NodeId, b: NodeId) -> (NodeId, NodeId) {
        if self.nodes[a].min_tet <= self.nodes[b].min_tet {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn push_edge(&mut self, a: NodeId, b: NodeId) {
        let (a, b) = self.ordered(a, b);
        let m = evaluate(&self.nodes, a, b, self.cfg);
        self.heap.push(Reverse(HeapKey {
            cost: m.cost,
            tie: (self.nodes[a].min_tet, self.nodes[b].min_tet),
            a,
            b,
        }));
        self.pending.insert((a, b), m);
    }

    fn contract(&mut self, a: NodeId, b: NodeId, m: Merge) -> NodeId {
        let id = self.nodes.len();
        let tet_count = self.nodes[a].tet_count + self.nodes[b].tet_count;
        let min_tet = self.nodes[a].min_tet.min(self.nodes[b].min_tet);
        let aboxiness = m.mbb.volume() - m.volume;
        self.nodes.push(TreeNode {
            id,
            parent: None,
            children: Some([a, b]),
            tet_count,
            volume: m.volume,
            hull_points: m.hull_points,
            mbb: m.mbb,
            aboxiness,
            min_tet,
            cost: m.cost,
        });
        self.alive.push(true);
        self.alive[a] = false;
        self.alive[b] = false;
        self.nodes[a].parent = Some(id);
        self.nodes[b].parent = Some(id);
        let mut neighbors: BTreeSet<NodeId> = BTreeSet::new();
        for x in [a, b] {
            if let Some(adj) = self.adjacency.remove(&x) {
                neighbors.extend(adj);
            }
        }
        neighbors.remove(&a);
        neighbors.remove(&b);
        for &n in &neighbors {
            let adj = self.adjacency.get_mut(&n).expect("live neighbor");
            adj.remove(&a);
            adj.remove(&b);
            adj.insert(id);
        }
        self.adjacency.insert(id, neighbors.clone());
        for n in neighbors {
            self.push_edge(id, n);
        }
        id
    }
}

/// Builds the clustering tree of a mesh.
///
/// Stale heap entries (an endpoint already merged) are skipped on pop. If the
/// dual graph is disconnected, the remaining components are joined pairwise,
/// cheapest union first, so the result is always a single tree.
pub fn build_hierarchy(mesh: &TetMesh, cfg: &SegmentationConfig) -> SegmentationTree {
    let n = mesh.num_tets();
    assert!(n > 0, "mesh has no tetrahedra");
    let dual = DualGraph::build(mesh);
    let mut b = Builder {
        cfg,
        nodes: Vec::with_capacity(2 * n),
        alive: vec![true; n],
        adjacency: HashMap::new(),
        heap: BinaryHeap::new(),
        pending: HashMap::new(),
    };
    for t in 0..n {
        let pts = mesh.tet_points(t).to_vec();
        let mbb = approximate_mbb(&pts, cfg.epsilon);
        let volume = mesh.tet_volume(t);
        b.nodes.push(TreeNode {
            id: t,
            parent: None,
            children: None,
            tet_count: 1,
            volume,
            aboxiness: mbb.volume() - volume,
            hull_points: pts,
            mbb,
            min_tet: t,
            cost: 0.0,
        });
        b.adjacency
            .insert(t, dual.neighbors(t).iter().copied().collect());
    }
    for &(x, y) in dual.arcs() {
        b.push_edge(x, y);
    }

    while let Some(Reverse(key)) = b.heap.pop() {
        let m = b.pending.remove(&(key.a, key.b));
        if !b.alive[key.a] || !b.alive[key.b] {
            continue;
        }
        let m = m.expect("live edge has a pending evaluation");
        b.contract(key.a, key.b, m);
    }
    b.pending.clear();

    // join components that share no facet
    loop {
        let live: Vec<NodeId> = (0..b.nodes.len()).filter(|&i| b.alive[i]).collect();
        if live.len() < 2 {
            break;
        }
        let mut best: Option<(HeapKey, Merge)> = None;
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                let (x, y) = b.ordered(live[i], live[j]);
                let m = evaluate(&b.nodes, x, y, cfg);
                let key = HeapKey {
                    cost: m.cost,
                    tie: (b.nodes[x].min_tet, b.nodes[y].min_tet),
                    a: x,
                    b: y,
                };
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, m));
                }
            }
        }
        let (key, m) = best.expect("at least one pair");
        b.contract(key.a, key.b, m);
    }

    let root = b.nodes.len() - 1;
    SegmentationTree {
        nodes: b.nodes,
        root,
        num_leaves: n,
    }
}
