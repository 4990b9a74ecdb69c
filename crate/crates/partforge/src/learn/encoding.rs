//! Padded state encoding: per-part feature/grasp/pose slots followed by the
//! flattened connection tensor.

use ndarray::Array1;

use crate::env::AssemblyState;

use super::ae::FEATURE_DIM;
use super::LearnError;

/// Padding caps for the encoding layout. The defaults match the published
/// maxima: 20 parts and 10 connection points per part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingCaps {
    pub parts: usize,
    pub connections: usize,
}

impl Default for EncodingCaps {
    fn default() -> Self {
        Self { parts: 20, connections: 10 }
    }
}

/// Floats per part slot: 128 feature + 12 grasp summary + 6 pose.
pub const SLOT_DIM: usize = FEATURE_DIM + 12 + 6;

pub fn encoding_len(caps: &EncodingCaps) -> usize {
    caps.parts * SLOT_DIM + caps.parts * caps.parts * 6
}

/// Concatenate per-part slots `[feature | grasp summary | pose]` padded to
/// `caps.parts`, then the flattened connection tensor padded to
/// `caps.parts x caps.parts x 6`. Absent slots are exactly zero.
pub fn build_state_encoding(
    state: &AssemblyState,
    features: &[Array1<f32>],
    caps: &EncodingCaps,
) -> Result<Array1<f32>, LearnError> {
    let m = state.part_count();
    if m > caps.parts {
        return Err(LearnError::CapExceeded(format!(
            "{m} parts exceeds cap {}",
            caps.parts
        )));
    }
    for p in &state.chair.parts {
        if p.connections.len() > caps.connections {
            return Err(LearnError::CapExceeded(format!(
                "part {} has {} connections, cap {}",
                p.id,
                p.connections.len(),
                caps.connections
            )));
        }
    }
    assert_eq!(features.len(), m);
    let mut out = Array1::zeros(encoding_len(caps));
    for x in 0..m {
        let base = x * SLOT_DIM;
        let f = &features[x];
        assert_eq!(f.len(), FEATURE_DIM);
        for j in 0..FEATURE_DIM {
            out[base + j] = f[j];
        }
        // grasp summary: per region, center then first approach direction
        let part = &state.chair.parts[x];
        for (r, region) in part.grasp_regions.iter().enumerate() {
            let g = base + FEATURE_DIM + r * 6;
            for j in 0..3 {
                out[g + j] = region.center[j] as f32;
                out[g + 3 + j] = region.approach_dirs[0][j] as f32;
            }
        }
        let p = &state.current_poses[x];
        let pose = [p.tx, p.ty, p.tz, p.rx, p.ry, p.rz];
        for j in 0..6 {
            out[base + FEATURE_DIM + 12 + j] = pose[j] as f32;
        }
    }
    let tensor_base = caps.parts * SLOT_DIM;
    for u in 0..m {
        for v in 0..m {
            let entry = state.tensor.entry(u, v);
            let at = tensor_base + (u * caps.parts + v) * 6;
            for j in 0..6 {
                out[at + j] = entry[j] as f32;
            }
        }
    }
    Ok(out)
}
