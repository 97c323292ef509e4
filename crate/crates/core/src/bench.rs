//! Random-box packing benchmark.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packer::{pack, Container, PackError, PackPart, PackerConfig, PackingResult};
use crate::tetmesh::synth::box5;
use crate::tetmesh::TetMesh;

/// RNG stream for box dimensions.
pub const BOX_STREAM: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("invalid box spec: {0}")]
    InvalidSpec(&'static str),
    #[error(transparent)]
    Pack(#[from] PackError),
}

/// Axis-aligned boxes with edges drawn uniformly from
/// `[min_edge, max_edge]`, as fractions of a unit container.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomBoxSpec {
    pub count: usize,
    pub min_edge: f64,
    pub max_edge: f64,
    pub seed: u64,
}

impl Default for RandomBoxSpec {
    fn default() -> Self {
        RandomBoxSpec {
            count: 50,
            min_edge: 0.1,
            max_edge: 0.3,
            seed: 0,
        }
    }
}

impl RandomBoxSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.count == 0 {
            return Err(BenchError::InvalidSpec("count must be at least 1"));
        }
        if !(self.min_edge > 0.0 && self.min_edge <= self.max_edge && self.max_edge.is_finite()) {
            return Err(BenchError::InvalidSpec("need 0 < min_edge <= max_edge"));
        }
        Ok(())
    }
}

/// The boxes of a spec, each meshed as five tetrahedra.
pub fn random_boxes(spec: &RandomBoxSpec) -> Result<Vec<TetMesh>, BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(BOX_STREAM);
    Ok((0..spec.count)
        .map(|_| {
            let e = [(); 3].map(|_| rng.random_range(spec.min_edge..=spec.max_edge));
            box5(e)
        })
        .collect())
}

/// Unit cube the random boxes are measured against.
pub fn bench_container() -> Container {
    Container::new([1.0; 3])
}

/// Packs one set of random boxes. The packer seed is taken from the spec so
/// one number drives boxes, rotations and insertion order.
pub fn run_bench(spec: &RandomBoxSpec, config: &PackerConfig) -> Result<PackingResult, BenchError> {
    let parts: Vec<PackPart> = random_boxes(spec)?
        .iter()
        .enumerate()
        .map(|(i, m)| PackPart::from_mesh(i, m))
        .collect();
    let config = PackerConfig {
        seed: spec.seed,
        ..config.clone()
    };
    Ok(pack(&parts, &bench_container(), &config)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub seed: u64,
    pub efficiency: f64,
    pub box_extents: [f64; 3],
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub spec: RandomBoxSpec,
    pub config: PackerConfig,
    pub runs: Vec<BenchRun>,
    pub mean_efficiency: f64,
    pub min_efficiency: f64,
    pub max_efficiency: f64,
}

/// Runs the benchmark for `seeds` consecutive seeds starting at `spec.seed`.
pub fn bench_stats(
    spec: &RandomBoxSpec,
    config: &PackerConfig,
    seeds: u64,
) -> Result<BenchStats, BenchError> {
    let mut runs = Vec::new();
    for k in 0..seeds.max(1) {
        let s = RandomBoxSpec {
            seed: spec.seed + k,
            ..*spec
        };
        let r = run_bench(&s, config)?;
        runs.push(BenchRun {
            seed: s.seed,
            efficiency: r.efficiency,
            box_extents: r.box_extents,
            elapsed_ms: r.elapsed_ms,
        });
    }
    let effs: Vec<f64> = runs.iter().map(|r| r.efficiency).collect();
    Ok(BenchStats {
        spec: *spec,
        config: config.clone(),
        mean_efficiency: effs.iter().sum::<f64>() / effs.len() as f64,
        min_efficiency: effs.iter().copied().fold(f64::INFINITY, f64::min),
        max_efficiency: effs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes_respect_spec() {
        let spec = RandomBoxSpec {
            count: 20,
            seed: 4,
            ..Default::default()
        };
        let boxes = random_boxes(&spec).unwrap();
        assert_eq!(boxes.len(), 20);
        for b in &boxes {
            assert_eq!(b.num_tets(), 5);
            let (lo, hi) = crate::geometry::aabb(b.vertices()).unwrap();
            for a in 0..3 {
                let e = hi[a] - lo[a];
                assert!((0.1..=0.3).contains(&e));
            }
        }
        let again = random_boxes(&spec).unwrap();
        assert_eq!(boxes[3].vertices(), again[3].vertices());
    }

    #[test]
    fn invalid_specs() {
        let bad = RandomBoxSpec {
            count: 0,
            ..Default::default()
        };
        assert!(random_boxes(&bad).is_err());
        let bad = RandomBoxSpec {
            min_edge: 0.4,
            ..Default::default()
        };
        assert!(random_boxes(&bad).is_err());
    }

    #[test]
    fn one_box_is_an_identity_packing() {
        let spec = RandomBoxSpec {
            count: 1,
            ..Default::default()
        };
        let cfg = PackerConfig {
            grid_budget: 64,
            ..Default::default()
        };
        let r = run_bench(&spec, &cfg).unwrap();
        assert!(r.efficiency >= 0.95);
    }
}
