//! Dataset persistence: `manifest.json`, one JSON record per chair and one
//! OBJ file per part mesh. Floats are rounded to 9 significant digits before
//! serialization so save -> load -> save is byte identical.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geom::{obj, ConvexHull, Pose6D};

use super::{AssetError, ChairAsset, ConnectionPoint, GraspRegion, Part};

pub const SCHEMA_VERSION: &str = "partforge-dataset-1";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DatasetManifest {
    pub schema_version: String,
    pub easy_train: Vec<u64>,
    pub hard_train: Vec<u64>,
    pub test: Vec<u64>,
    pub n_train: usize,
    pub n_test: usize,
}

impl DatasetManifest {
    pub fn new(easy_train: Vec<u64>, hard_train: Vec<u64>, test: Vec<u64>) -> Self {
        let n_train = easy_train.len() + hard_train.len();
        let n_test = test.len();
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            easy_train,
            hard_train,
            test,
            n_train,
            n_test,
        }
    }

    pub fn all_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self
            .easy_train
            .iter()
            .chain(&self.hard_train)
            .chain(&self.test)
            .copied()
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn split_ids(&self, split: &str) -> Option<&[u64]> {
        match split {
            "easy_train" => Some(&self.easy_train),
            "hard_train" => Some(&self.hard_train),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// Round to 9 significant decimal digits; idempotent.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().unwrap()
}

fn round_vec(v: &Vector3<f64>) -> [f64; 3] {
    [round_sig(v.x), round_sig(v.y), round_sig(v.z)]
}

fn round_pose(p: &Pose6D) -> [f64; 6] {
    [
        round_sig(p.tx),
        round_sig(p.ty),
        round_sig(p.tz),
        round_sig(p.rx),
        round_sig(p.ry),
        round_sig(p.rz),
    ]
}

#[derive(Serialize, Deserialize)]
struct ConnectionDto {
    position: [f64; 3],
    normal: [f64; 3],
    tangent: [f64; 3],
    mate_part: usize,
    mate_connection: usize,
}

#[derive(Serialize, Deserialize)]
struct GraspDto {
    center: [f64; 3],
    half_extents: [f64; 3],
    approach_dirs: [[f64; 3]; 4],
}

#[derive(Serialize, Deserialize)]
struct PartDto {
    id: usize,
    equivalence_class: usize,
    connections: Vec<ConnectionDto>,
    grasp_regions: [GraspDto; 2],
}

#[derive(Serialize, Deserialize)]
struct ChairDto {
    schema_version: String,
    id: u64,
    gt_poses: Vec<[f64; 6]>,
    gt_adjacency: Vec<[usize; 4]>,
    parts: Vec<PartDto>,
}

fn io_err(e: impl std::fmt::Display) -> AssetError {
    AssetError::Io(e.to_string())
}

pub fn save_dataset(
    manifest: &DatasetManifest,
    chairs: &[ChairAsset],
    dir: &Path,
) -> Result<(), AssetError> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let manifest_json = serde_json::to_string_pretty(manifest).map_err(io_err)?;
    std::fs::write(dir.join("manifest.json"), manifest_json).map_err(io_err)?;
    for chair in chairs {
        save_chair(chair, dir)?;
    }
    Ok(())
}

fn save_chair(chair: &ChairAsset, dir: &Path) -> Result<(), AssetError> {
    let dto = ChairDto {
        schema_version: SCHEMA_VERSION.to_string(),
        id: chair.id,
        gt_poses: chair.gt_poses.iter().map(round_pose).collect(),
        gt_adjacency: chair
            .gt_adjacency
            .iter()
            .map(|&((u, k), (v, l))| [u, k, v, l])
            .collect(),
        parts: chair
            .parts
            .iter()
            .map(|p| PartDto {
                id: p.id,
                equivalence_class: p.equivalence_class,
                connections: p
                    .connections
                    .iter()
                    .map(|c| ConnectionDto {
                        position: round_vec(&c.position),
                        normal: round_vec(&c.normal),
                        tangent: round_vec(&c.tangent),
                        mate_part: c.mate_part,
                        mate_connection: c.mate_connection,
                    })
                    .collect(),
                grasp_regions: [grasp_dto(&p.grasp_regions[0]), grasp_dto(&p.grasp_regions[1])],
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&dto).map_err(io_err)?;
    std::fs::write(dir.join(format!("chair_{}.json", chair.id)), json).map_err(io_err)?;
    for part in &chair.parts {
        obj::save_obj(
            &part.mesh,
            &dir.join(format!("part_{}_{}.obj", chair.id, part.id)),
        )?;
    }
    Ok(())
}

fn grasp_dto(g: &GraspRegion) -> GraspDto {
    GraspDto {
        center: round_vec(&g.center),
        half_extents: round_vec(&g.half_extents),
        approach_dirs: [
            round_vec(&g.approach_dirs[0]),
            round_vec(&g.approach_dirs[1]),
            round_vec(&g.approach_dirs[2]),
            round_vec(&g.approach_dirs[3]),
        ],
    }
}

pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<ChairAsset>), AssetError> {
    let manifest_raw = std::fs::read_to_string(dir.join("manifest.json")).map_err(io_err)?;
    let manifest: DatasetManifest =
        serde_json::from_str(&manifest_raw).map_err(|e| AssetError::Parse(e.to_string()))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(AssetError::SchemaVersionMismatch {
            expected: SCHEMA_VERSION.to_string(),
            found: manifest.schema_version,
        });
    }
    let chairs = manifest
        .all_ids()
        .into_iter()
        .map(|id| load_chair(dir, id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, chairs))
}

pub fn load_chair(dir: &Path, id: u64) -> Result<ChairAsset, AssetError> {
    let raw = std::fs::read_to_string(dir.join(format!("chair_{id}.json"))).map_err(io_err)?;
    let dto: ChairDto = serde_json::from_str(&raw).map_err(|e| AssetError::Parse(e.to_string()))?;
    if dto.schema_version != SCHEMA_VERSION {
        return Err(AssetError::SchemaVersionMismatch {
            expected: SCHEMA_VERSION.to_string(),
            found: dto.schema_version,
        });
    }
    let parts = dto
        .parts
        .into_iter()
        .map(|p| -> Result<Part, AssetError> {
            let mesh = obj::load_obj(&dir.join(format!("part_{}_{}.obj", id, p.id)))?;
            let hull = ConvexHull::from_mesh(&mesh)?;
            Ok(Part {
                id: p.id,
                mesh,
                hull,
                connections: p
                    .connections
                    .into_iter()
                    .map(|c| ConnectionPoint {
                        position: Vector3::from(c.position),
                        normal: Vector3::from(c.normal),
                        tangent: Vector3::from(c.tangent),
                        mate_part: c.mate_part,
                        mate_connection: c.mate_connection,
                    })
                    .collect(),
                grasp_regions: [
                    grasp_from(&p.grasp_regions[0]),
                    grasp_from(&p.grasp_regions[1]),
                ],
                equivalence_class: p.equivalence_class,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ChairAsset {
        id: dto.id,
        parts,
        gt_poses: dto
            .gt_poses
            .iter()
            .map(|p| Pose6D {
                tx: p[0],
                ty: p[1],
                tz: p[2],
                rx: p[3],
                ry: p[4],
                rz: p[5],
            })
            .collect(),
        gt_adjacency: dto
            .gt_adjacency
            .iter()
            .map(|&[u, k, v, l]| ((u, k), (v, l)))
            .collect(),
    })
}

fn grasp_from(g: &GraspDto) -> GraspRegion {
    GraspRegion {
        center: Vector3::from(g.center),
        half_extents: Vector3::from(g.half_extents),
        approach_dirs: [
            Vector3::from(g.approach_dirs[0]),
            Vector3::from(g.approach_dirs[1]),
            Vector3::from(g.approach_dirs[2]),
            Vector3::from(g.approach_dirs[3]),
        ],
    }
}
