//! Splitting solid tetrahedral meshes into box-like parts and packing the
//! parts into a small axis-aligned container.
//!
//! [`segmentation::build_hierarchy`] merges tetrahedra bottom-up into a binary
//! tree whose nodes are as close to their minimum bounding boxes as possible.
//! [`packer::pack`] places rigid parts one by one on a voxel grid.
//! [`pipeline::split_and_pack`] walks down the tree, splitting the least
//! box-like part and repacking until the packing reaches a target efficiency.

pub mod bench;
pub mod geometry;
pub mod packer;
pub mod pipeline;
pub mod report;
pub mod segmentation;
pub mod tetmesh;

// `std::time::Instant` panics in the browser.
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
pub(crate) use std::time::Instant;
#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
pub(crate) use web_time::Instant;
