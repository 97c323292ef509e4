//! The outer split-and-pack loop.
//!
//! Starting from the whole object, the packing is recomputed after every
//! split until the box is small enough for the target efficiency or the part
//! budget runs out. Each split replaces the active part of largest
//! aboxiness by its two children in the hierarchy and flattens the cut
//! between them onto its best-fit plane.

mod assembly;
mod surface;

pub use assembly::{assembly_plan, AssemblyPlan, MergeStep};
pub use surface::{heightfield_check, plane_refine, split_surface, SplitSurface};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packer::{
    init_container, pack, Container, PackError, PackPart, PackerConfig, PackingResult,
};
use crate::segmentation::{most_aboxy, NodeId, SegmentationTree};
use crate::tetmesh::TetMesh;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid split-and-pack configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("every active part is a single tetrahedron")]
    NoSplittableNode,
    #[error("refining the split of node {0} would leave a part empty")]
    DegenerateSplit(NodeId),
    #[error("target efficiency {target} not reached; best is {:.4} with {} parts", .outcome.result.efficiency, .outcome.parts.len())]
    TargetUnreachable {
        target: f64,
        outcome: Box<SplitPackOutcome>,
    },
    #[error(transparent)]
    Pack(#[from] PackError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPackConfig {
    pub n_max: usize,
    pub e_target: f64,
    pub packer: PackerConfig,
    /// Ask for a larger part budget instead of giving up when it runs out.
    pub interactive: bool,
}

impl Default for SplitPackConfig {
    fn default() -> Self {
        SplitPackConfig {
            n_max: 8,
            e_target: 0.5,
            packer: PackerConfig::default(),
            interactive: false,
        }
    }
}

impl SplitPackConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n_max == 0 {
            return Err(PipelineError::InvalidConfig("n_max must be at least 1"));
        }
        if !(self.e_target > 0.0 && self.e_target <= 1.0) {
            return Err(PipelineError::InvalidConfig("e_target must be in (0, 1]"));
        }
        Ok(())
    }
}

/// A part of the current split: the hierarchy node it came from and the
/// tets it holds after refinement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivePart {
    pub node: NodeId,
    pub tets: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SplitPackState {
    pub active: Vec<ActivePart>,
    pub n_max: usize,
    pub vol_max: f64,
    pub best: Option<PackingResult>,
}

impl SplitPackState {
    pub fn n_s(&self) -> usize {
        self.active.len()
    }

    pub fn active_nodes(&self) -> Vec<NodeId> {
        self.active.iter().map(|p| p.node).collect()
    }
}

/// One line of the history log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub n_parts: usize,
    pub efficiency: f64,
    #[serde(rename = "box")]
    pub box_extents: [f64; 3],
    pub elapsed_ms: f64,
}

pub fn history_jsonl(history: &[HistoryEntry]) -> String {
    history
        .iter()
        .map(|h| serde_json::to_string(h).expect("history entries serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPackOutcome {
    /// Best packing over all iterations.
    pub result: PackingResult,
    /// Parts of `result`; placement `part_id` indexes this list.
    pub parts: Vec<ActivePart>,
    pub history: Vec<HistoryEntry>,
    pub target_reached: bool,
    /// Efficiency of the unsplit object.
    pub initial_efficiency: f64,
    pub assembly: AssemblyPlan,
    pub container: Container,
    pub warnings: Vec<String>,
}

/// Active internal node with the largest aboxiness; ties go to the larger
/// volume, then the smaller id.
pub fn select_split_node(
    state: &SplitPackState,
    tree: &SegmentationTree,
) -> Result<NodeId, PipelineError> {
    most_aboxy(tree, &state.active_nodes()).ok_or(PipelineError::NoSplittableNode)
}

pub fn pack_parts(
    mesh: &TetMesh,
    parts: &[ActivePart],
    container: &Container,
    config: &PackerConfig,
) -> Result<PackingResult, PackError> {
    let pack_parts: Vec<PackPart> = parts
        .iter()
        .enumerate()
        .map(|(i, p)| PackPart::from_tets(i, mesh, &p.tets))
        .collect();
    pack(&pack_parts, container, config)
}

/// Replaces `state.active[idx]` by its children in the hierarchy. Returns
/// false (after descending one level) if one child has no tets left because
/// an earlier refinement moved them all away.
fn split_at(
    mesh: &TetMesh,
    tree: &SegmentationTree,
    state: &mut SplitPackState,
    idx: usize,
    warnings: &mut Vec<String>,
) -> bool {
    let parent = state.active[idx].clone();
    let [a, b] = tree
        .node(parent.node)
        .children
        .expect("selected node is internal");
    let mut in_a = vec![false; mesh.num_tets()];
    for t in tree.tets_of(a) {
        in_a[t] = true;
    }
    let (ta, tb): (Vec<usize>, Vec<usize>) = parent.tets.iter().partition(|&&t| in_a[t]);
    if ta.is_empty() || tb.is_empty() {
        let (node, side) = if ta.is_empty() { (b, a) } else { (a, b) };
        warnings.push(format!(
            "node {} has no tets left after earlier refinement; node {} stands in for node {}",
            side, node, parent.node
        ));
        state.active[idx] = ActivePart {
            node,
            tets: parent.tets,
        };
        return false;
    }
    let (ta, tb) = match split_surface(mesh, parent.node, &ta, &tb) {
        Some(s) => match plane_refine(mesh, &s, &ta, &tb) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("{e}; keeping the unrefined split"));
                (ta, tb)
            }
        },
        None => (ta, tb),
    };
    state.active[idx] = ActivePart { node: a, tets: ta };
    state
        .active
        .insert(idx + 1, ActivePart { node: b, tets: tb });
    true
}

pub fn split_and_pack(
    mesh: &TetMesh,
    tree: &SegmentationTree,
    config: &SplitPackConfig,
) -> Result<SplitPackOutcome, PipelineError> {
    split_and_pack_with(mesh, tree, config, &mut |_| None)
}

/// As [`split_and_pack`]; when `config.interactive` is set and the part
/// budget is exhausted, `ask` may return a larger budget to continue.
pub fn split_and_pack_with(
    mesh: &TetMesh,
    tree: &SegmentationTree,
    config: &SplitPackConfig,
    ask: &mut dyn FnMut(&SplitPackState) -> Option<usize>,
) -> Result<SplitPackOutcome, PipelineError> {
    config.validate()?;
    let start = crate::Instant::now();
    let root = tree.root();
    let whole = PackPart::from_mesh(0, mesh);
    let container = init_container(std::slice::from_ref(&whole));
    let mut state = SplitPackState {
        active: vec![ActivePart {
            node: root,
            tets: tree.tets_of(root),
        }],
        n_max: config.n_max,
        vol_max: mesh.volume() / config.e_target,
        best: None,
    };
    let mut best_parts = state.active.clone();
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut warnings = Vec::new();

    let target_reached = loop {
        let result = pack_parts(mesh, &state.active, &container, &config.packer)?;
        history.push(HistoryEntry {
            n_parts: state.n_s(),
            efficiency: result.efficiency,
            box_extents: result.box_extents,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        log::info!("{} parts: efficiency {:.4}", state.n_s(), result.efficiency);
        let reached = result.box_volume() <= state.vol_max;
        if state
            .best
            .as_ref()
            .is_none_or(|b| result.efficiency > b.efficiency)
        {
            state.best = Some(result);
            best_parts = state.active.clone();
        }
        if reached {
            break true;
        }
        if state.n_s() >= state.n_max {
            match config.interactive.then(|| ask(&state)).flatten() {
                Some(n) if n > state.n_s() => state.n_max = n,
                _ => break false,
            }
        }
        let split = loop {
            let Ok(node) = select_split_node(&state, tree) else {
                break false;
            };
            let idx = state
                .active
                .iter()
                .position(|p| p.node == node)
                .expect("selected node is active");
            if split_at(mesh, tree, &mut state, idx, &mut warnings) {
                break true;
            }
        };
        if !split {
            warnings.push("no active part can be split further".into());
            break false;
        }
    };

    let nodes: Vec<NodeId> = best_parts.iter().map(|p| p.node).collect();
    let outcome = SplitPackOutcome {
        result: state.best.expect("at least one packing was computed"),
        assembly: assembly_plan(tree, &nodes),
        parts: best_parts,
        initial_efficiency: history[0].efficiency,
        history,
        target_reached,
        container,
        warnings,
    };
    if target_reached {
        Ok(outcome)
    } else {
        Err(PipelineError::TargetUnreachable {
            target: config.e_target,
            outcome: Box::new(outcome),
        })
    }
}
