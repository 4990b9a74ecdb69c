//! Checkpoint format: 8-byte magic "PFCKPT01", a length-prefixed JSON
//! header declaring named float arrays, then the arrays as little-endian
//! 32-bit floats in header order.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::ActionCaps;

use super::ae::AEModel;
use super::encoding::EncodingCaps;
use super::nn::Mlp;
use super::qnet::QNet;
use super::LearnError;

pub const MAGIC: &[u8; 8] = b"PFCKPT01";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayDecl {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    /// "ae" or "qnet".
    pub kind: String,
    /// Layer sizes per named network.
    pub layer_sizes: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub action_caps: Option<[usize; 3]>,
    #[serde(default)]
    pub encoding_caps: Option<[usize; 2]>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub arrays: Vec<ArrayDecl>,
}

#[derive(Debug)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub arrays: Vec<Vec<f32>>,
}

pub fn save_checkpoint(
    path: &Path,
    header: &CheckpointHeader,
    arrays: &[Vec<f32>],
) -> Result<(), LearnError> {
    assert_eq!(header.arrays.len(), arrays.len());
    for (d, a) in header.arrays.iter().zip(arrays) {
        assert_eq!(d.len, a.len(), "array {} length mismatch", d.name);
    }
    let mut f = File::create(path).map_err(|e| LearnError::Io(e.to_string()))?;
    let json = serde_json::to_vec(header).map_err(|e| LearnError::Io(e.to_string()))?;
    f.write_all(MAGIC).map_err(|e| LearnError::Io(e.to_string()))?;
    f.write_all(&(json.len() as u32).to_le_bytes())
        .map_err(|e| LearnError::Io(e.to_string()))?;
    f.write_all(&json).map_err(|e| LearnError::Io(e.to_string()))?;
    for a in arrays {
        let mut bytes = Vec::with_capacity(a.len() * 4);
        for v in a {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&bytes).map_err(|e| LearnError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, LearnError> {
    let mut f = File::open(path).map_err(|e| LearnError::Io(e.to_string()))?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic).map_err(|e| LearnError::Io(e.to_string()))?;
    if &magic != MAGIC {
        return Err(LearnError::BadCheckpoint("wrong magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    f.read_exact(&mut len_bytes).map_err(|e| LearnError::Io(e.to_string()))?;
    let mut json = vec![0u8; u32::from_le_bytes(len_bytes) as usize];
    f.read_exact(&mut json).map_err(|e| LearnError::Io(e.to_string()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| LearnError::BadCheckpoint(e.to_string()))?;
    let mut arrays = Vec::with_capacity(header.arrays.len());
    for decl in &header.arrays {
        let mut bytes = vec![0u8; decl.len * 4];
        f.read_exact(&mut bytes).map_err(|e| {
            LearnError::BadCheckpoint(format!("truncated array {}: {e}", decl.name))
        })?;
        let vals = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        arrays.push(vals);
    }
    Ok(Checkpoint { header, arrays })
}

pub fn save_qnet(path: &Path, net: &QNet, seed: u64, meta: BTreeMap<String, String>) -> Result<(), LearnError> {
    let flat = net.mlp.flatten();
    let header = CheckpointHeader {
        kind: "qnet".into(),
        layer_sizes: BTreeMap::from([("q".into(), net.mlp.sizes())]),
        action_caps: Some([net.action_caps.p, net.action_caps.k, net.action_caps.w]),
        encoding_caps: Some([net.encoding_caps.parts, net.encoding_caps.connections]),
        seed: Some(seed),
        meta,
        arrays: vec![ArrayDecl { name: "q".into(), len: flat.len() }],
    };
    save_checkpoint(path, &header, &[flat])
}

pub fn load_qnet(path: &Path) -> Result<QNet, LearnError> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.header.kind != "qnet" {
        return Err(LearnError::BadCheckpoint(format!("kind {}", ckpt.header.kind)));
    }
    let sizes = ckpt.header.layer_sizes.get("q").cloned().ok_or_else(|| {
        LearnError::BadCheckpoint("missing q layer sizes".into())
    })?;
    let [p, k, w] = ckpt
        .header
        .action_caps
        .ok_or_else(|| LearnError::BadCheckpoint("missing action caps".into()))?;
    let [parts, connections] = ckpt
        .header
        .encoding_caps
        .ok_or_else(|| LearnError::BadCheckpoint("missing encoding caps".into()))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    use rand::SeedableRng;
    let mut mlp = Mlp::new(&sizes, &mut rng);
    mlp.unflatten(&ckpt.arrays[0]);
    Ok(QNet {
        mlp,
        action_caps: ActionCaps { p, k, w },
        encoding_caps: EncodingCaps { parts, connections },
    })
}

pub fn save_ae(path: &Path, ae: &AEModel, seed: u64) -> Result<(), LearnError> {
    let enc = ae.encoder.flatten();
    let dec = ae.decoder.flatten();
    let header = CheckpointHeader {
        kind: "ae".into(),
        layer_sizes: BTreeMap::from([
            ("encoder".into(), ae.encoder.sizes()),
            ("decoder".into(), ae.decoder.sizes()),
        ]),
        action_caps: None,
        encoding_caps: None,
        seed: Some(seed),
        meta: BTreeMap::from([("points".to_string(), ae.m.to_string())]),
        arrays: vec![
            ArrayDecl { name: "encoder".into(), len: enc.len() },
            ArrayDecl { name: "decoder".into(), len: dec.len() },
        ],
    };
    save_checkpoint(path, &header, &[enc, dec])
}

pub fn load_ae(path: &Path) -> Result<AEModel, LearnError> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.header.kind != "ae" {
        return Err(LearnError::BadCheckpoint(format!("kind {}", ckpt.header.kind)));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let enc_sizes = ckpt.header.layer_sizes["encoder"].clone();
    let dec_sizes = ckpt.header.layer_sizes["decoder"].clone();
    let m: usize = ckpt
        .header
        .meta
        .get("points")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| LearnError::BadCheckpoint("missing points meta".into()))?;
    let mut encoder = Mlp::new(&enc_sizes, &mut rng);
    let mut decoder = Mlp::new(&dec_sizes, &mut rng);
    encoder.unflatten(&ckpt.arrays[0]);
    decoder.unflatten(&ckpt.arrays[1]);
    Ok(AEModel { encoder, decoder, m })
}
