use serde::{Deserialize, Serialize};

use crate::segmentation::{NodeId, SegmentationTree};

/// Two groups joined into their parent group. Groups are named by tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStep {
    pub a: NodeId,
    pub b: NodeId,
    pub into: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct AssemblyPlan {
    pub steps: Vec<MergeStep>,
}

/// Bottom-up merge order for a tree cut: at each step, the deepest parent
/// whose two children are both available is assembled (ties to the smaller
/// node id).
pub fn assembly_plan(tree: &SegmentationTree, active: &[NodeId]) -> AssemblyPlan {
    let mut groups: Vec<NodeId> = active.to_vec();
    let mut steps = Vec::with_capacity(active.len().saturating_sub(1));
    while groups.len() > 1 {
        let mut best: Option<(usize, NodeId)> = None;
        for &g in &groups {
            let Some(p) = tree.node(g).parent else {
                continue;
            };
            let [a, b] = tree.node(p).children.expect("parent is internal");
            if g != a || !groups.contains(&b) {
                continue;
            }
            let d = tree.node_depth(p);
            if best.is_none_or(|(bd, bp)| d > bd || (d == bd && p < bp)) {
                best = Some((d, p));
            }
        }
        let Some((_, p)) = best else {
            // not a valid cut; nothing more can be merged
            break;
        };
        let [a, b] = tree.node(p).children.expect("parent is internal");
        groups.retain(|&g| g != a && g != b);
        groups.push(p);
        steps.push(MergeStep { a, b, into: p });
    }
    AssemblyPlan { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{build_hierarchy, SegmentationConfig};
    use crate::tetmesh::synth::{cube5, l_shape};

    #[test]
    fn cuts_merge_back_to_the_root() {
        let tree = build_hierarchy(&l_shape(3, 1, 1.0), &SegmentationConfig::default());
        for k in 1..=8 {
            let cut = tree.cut_with_parts(k);
            let plan = assembly_plan(&tree, &cut);
            assert_eq!(plan.steps.len(), cut.len() - 1);
            if k > 1 {
                assert_eq!(plan.steps.last().unwrap().into, tree.root());
            }
            let depths: Vec<usize> = plan.steps.iter().map(|s| tree.node_depth(s.into)).collect();
            let mut sorted = depths.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(depths, sorted, "deepest merges come first");
        }
    }

    #[test]
    fn two_parts_one_step() {
        let tree = build_hierarchy(&cube5(1.0), &SegmentationConfig::default());
        let [a, b] = tree.node(tree.root()).children.unwrap();
        let plan = assembly_plan(&tree, &[a, b]);
        assert_eq!(
            plan.steps,
            vec![MergeStep {
                a,
                b,
                into: tree.root()
            }]
        );
    }
}
