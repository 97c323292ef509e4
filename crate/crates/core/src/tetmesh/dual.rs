use std::collections::HashMap;

use super::{facet_key, TetMesh};

/// One node per tetrahedron, one arc per pair of tetrahedra sharing a facet.
#[derive(Debug, Clone)]
pub struct DualGraph {
    adjacency: Vec<Vec<usize>>,
    arcs: Vec<(usize, usize)>,
}

impl DualGraph {
    pub fn build(mesh: &TetMesh) -> DualGraph {
        let mut owners: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
        for (t, tet) in mesh.tets().iter().enumerate() {
            let [a, b, c, d] = *tet;
            for f in [[b, c, d], [a, c, d], [a, b, d], [a, b, c]] {
                owners.entry(facet_key(&f)).or_default().push(t);
            }
        }
        let mut arcs: Vec<(usize, usize)> = owners
            .values()
            .filter(|o| o.len() == 2)
            .map(|o| (o[0].min(o[1]), o[0].max(o[1])))
            .collect();
        arcs.sort_unstable();
        arcs.dedup();
        let mut adjacency = vec![Vec::new(); mesh.num_tets()];
        for &(a, b) in &arcs {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        DualGraph { adjacency, arcs }
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// Arcs as `(lo, hi)` tet pairs, sorted.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn neighbors(&self, t: usize) -> &[usize] {
        &self.adjacency[t]
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Builds the facet-adjacency dual graph of a mesh.
pub fn build_dual_graph(mesh: &TetMesh) -> DualGraph {
    DualGraph::build(mesh)
}
