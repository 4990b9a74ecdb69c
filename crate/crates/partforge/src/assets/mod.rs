//! Procedural chair assets with ground-truth assemblies plus the annotation
//! pipeline: connection detection, 9-dim connection descriptors, grasp
//! regions, geometric equivalence classes and dataset persistence.

pub mod annotate;
pub mod dataset;
pub mod generator;

pub use annotate::{
    annotate_chair, compute_equivalence_classes, detect_connections, generate_grasp_regions,
};
pub use dataset::{load_chair, load_dataset, save_dataset, DatasetManifest};
pub use generator::{generate_chair, Difficulty};

use nalgebra::Vector3;
use thiserror::Error;

use crate::geom::{ConvexHull, GeomError, Pose6D, TriMesh};

/// Hard cap on parts per chair (padding constant for state encodings).
pub const MAX_PARTS: usize = 20;
/// Hard cap on connection points per part.
pub const MAX_CONNECTIONS: usize = 10;
/// Two parts closer than this in the assembled pose are connected (meters).
pub const CONNECT_THRESHOLD: f64 = 0.005;
/// The generator keeps non-mated parts at least this far apart (meters).
pub const NON_MATE_CLEARANCE: f64 = 0.020;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("generation failed after {0} retries")]
    GenerationFailed(usize),
    #[error("part {part} has {count} connections, max {MAX_CONNECTIONS}")]
    TooManyConnections { part: usize, count: usize },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersionMismatch { expected: String, found: String },
    #[error("parse error: {0}")]
    Parse(String),
}

/// One annotated mating location: position, normal and tangent in the part's
/// COM-local frame (the 9-dim descriptor) plus its mate reference.
#[derive(Debug, Clone)]
pub struct ConnectionPoint {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub tangent: Vector3<f64>,
    pub mate_part: usize,
    pub mate_connection: usize,
}

impl ConnectionPoint {
    /// Flatten to the 9 annotation floats.
    pub fn descriptor(&self) -> [f64; 9] {
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.normal.x,
            self.normal.y,
            self.normal.z,
            self.tangent.x,
            self.tangent.y,
            self.tangent.z,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct GraspRegion {
    pub center: Vector3<f64>,
    pub half_extents: Vector3<f64>,
    pub approach_dirs: [Vector3<f64>; 4],
}

#[derive(Debug, Clone)]
pub struct Part {
    pub id: usize,
    /// Mesh in the part's COM-local frame.
    pub mesh: TriMesh,
    /// Convex collision proxy, rebuilt from the mesh on load.
    pub hull: ConvexHull,
    pub connections: Vec<ConnectionPoint>,
    pub grasp_regions: [GraspRegion; 2],
    pub equivalence_class: usize,
}

#[derive(Debug, Clone)]
pub struct ChairAsset {
    pub id: u64,
    pub parts: Vec<Part>,
    /// Assembled configuration, one pose per part.
    pub gt_poses: Vec<Pose6D>,
    /// Mated connection pairs `((u, k), (v, l))` with `u < v`.
    pub gt_adjacency: Vec<((usize, usize), (usize, usize))>,
}

impl ChairAsset {
    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// Part-level adjacency (deduplicated, `u < v`).
    pub fn adjacent_parts(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self
            .gt_adjacency
            .iter()
            .map(|&((u, _), (v, _))| (u.min(v), u.max(v)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}
