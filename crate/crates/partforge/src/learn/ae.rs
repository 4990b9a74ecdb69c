//! PointNet-style point-cloud autoencoder trained with a Chamfer objective:
//! a shared per-point encoder max-pooled into a 128-dim feature, and a
//! dense decoder reconstructing a fixed-size cloud.

use nalgebra::Point3;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assets::Part;
use crate::geom::{sample_point_cloud, transform_points, Pose6D};

use super::nn::{Adam, Grads, Mlp};
use super::LearnError;

/// Latent feature width.
pub const FEATURE_DIM: usize = 128;

/// Points per sampled part cloud.
pub const CLOUD_POINTS: usize = 256;

/// Fixed seed for deterministic part-cloud sampling at encode time.
pub const ENCODE_SAMPLE_SEED: u64 = 0x5EED;

#[derive(Debug, Clone)]
pub struct AEModel {
    /// Shared per-point MLP 3 -> 64 -> 128 -> 128; features max-pool over points.
    pub encoder: Mlp,
    /// Dense decoder 128 -> 256 -> 3m, reshaped to m points.
    pub decoder: Mlp,
    pub m: usize,
}

impl AEModel {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            encoder: Mlp::new(&[3, 64, FEATURE_DIM, FEATURE_DIM], &mut rng),
            decoder: Mlp::new(&[FEATURE_DIM, 256, CLOUD_POINTS * 3], &mut rng),
            m: CLOUD_POINTS,
        }
    }

    /// Encode an (n, 3) cloud to the 128-dim max-pooled feature.
    pub fn encode(&self, cloud: &Array2<f32>) -> Array1<f32> {
        let per_point = self.encoder.forward(cloud);
        per_point.map_axis(Axis(0), |col| col.fold(f32::NEG_INFINITY, |a, &b| a.max(b)))
    }

    /// Decode a feature back to an (m, 3) cloud.
    pub fn decode(&self, feature: &Array1<f32>) -> Array2<f32> {
        let out = self
            .decoder
            .forward(&feature.clone().insert_axis(Axis(0)));
        out.into_shape_with_order((self.m, 3)).unwrap()
    }

    pub fn reconstruct(&self, cloud: &Array2<f32>) -> Array2<f32> {
        self.decode(&self.encode(cloud))
    }
}

/// Symmetric Chamfer distance between two clouds (mean of per-point min
/// squared distances, both directions). f32, brute force.
pub fn chamfer_f32(a: &Array2<f32>, b: &Array2<f32>) -> f32 {
    chamfer_with_matches(a, b).0
}

/// Chamfer plus the argmin indices: for each a-point its nearest b index,
/// and for each b-point its nearest a index.
fn chamfer_with_matches(a: &Array2<f32>, b: &Array2<f32>) -> (f32, Vec<usize>, Vec<usize>) {
    let (na, nb) = (a.nrows(), b.nrows());
    assert!(na > 0 && nb > 0);
    let mut a_to_b = vec![0usize; na];
    let mut b_min = vec![f32::INFINITY; nb];
    let mut b_to_a = vec![0usize; nb];
    let mut total_a = 0.0f32;
    for i in 0..na {
        let mut best = f32::INFINITY;
        for j in 0..nb {
            let dx = a[[i, 0]] - b[[j, 0]];
            let dy = a[[i, 1]] - b[[j, 1]];
            let dz = a[[i, 2]] - b[[j, 2]];
            let d = dx * dx + dy * dy + dz * dz;
            if d < best {
                best = d;
                a_to_b[i] = j;
            }
            if d < b_min[j] {
                b_min[j] = d;
                b_to_a[j] = i;
            }
        }
        total_a += best;
    }
    let total_b: f32 = b_min.iter().sum();
    (total_a / na as f32 + total_b / nb as f32, a_to_b, b_to_a)
}

/// Symmetric Chamfer distance over f64 point sets (units m^2).
pub fn chamfer(a: &[Point3<f64>], b: &[Point3<f64>]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let dir = |xs: &[Point3<f64>], ys: &[Point3<f64>]| -> f64 {
        xs.iter()
            .map(|p| {
                ys.iter()
                    .map(|q| (p - q).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / xs.len() as f64
    };
    dir(a, b) + dir(b, a)
}

/// Center a cloud on its centroid and scale by the largest half-extent so
/// it fits the unit box. Returns the normalized cloud.
pub fn normalize_cloud(points: &[Point3<f64>]) -> Array2<f32> {
    let n = points.len();
    let mut c = nalgebra::Vector3::zeros();
    for p in points {
        c += p.coords;
    }
    c /= n as f64;
    let mut extent = 0.0f64;
    for p in points {
        let d = p.coords - c;
        extent = extent.max(d.x.abs()).max(d.y.abs()).max(d.z.abs());
    }
    let s = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    Array2::from_shape_fn((n, 3), |(i, j)| ((points[i].coords[j] - c[j]) * s) as f32)
}

/// Deterministic normalized cloud for a part at the given pose. Centering
/// removes the translation; orientation is kept.
pub fn part_cloud(part: &Part, pose: &Pose6D) -> Array2<f32> {
    let cloud = sample_point_cloud(&part.mesh, CLOUD_POINTS, ENCODE_SAMPLE_SEED);
    let posed = transform_points(pose, &cloud);
    normalize_cloud(&posed.points)
}

/// Frozen-AE feature for a part at its initial pose.
pub fn encode_part(ae: &AEModel, part: &Part, pose: &Pose6D) -> Array1<f32> {
    ae.encode(&part_cloud(part, pose))
}

/// Chamfer loss and its gradients with respect to both the reconstruction
/// and (through max-pooling) the encoder, for one cloud.
fn ae_loss_and_grads(ae: &AEModel, cloud: &Array2<f32>) -> (f32, Grads, Grads) {
    let (per_point, enc_cache) = ae.encoder.forward_cached(cloud);
    let n = per_point.nrows();
    let feat_dim = per_point.ncols();
    // max-pool with winner indices per feature column
    let mut feature = Array1::zeros(feat_dim);
    let mut winner = vec![0usize; feat_dim];
    for j in 0..feat_dim {
        let mut best = f32::NEG_INFINITY;
        for i in 0..n {
            if per_point[[i, j]] > best {
                best = per_point[[i, j]];
                winner[j] = i;
            }
        }
        feature[j] = best;
    }
    let (flat, dec_cache) = ae
        .decoder
        .forward_cached(&feature.clone().insert_axis(Axis(0)));
    let recon = flat.clone().into_shape_with_order((ae.m, 3)).unwrap();
    let (loss, a_to_b, b_to_a) = chamfer_with_matches(cloud, &recon);
    // gradient wrt reconstruction points (cloud side is input, not learned)
    let mut grad_recon: Array2<f32> = Array2::zeros((ae.m, 3));
    let (na, nb) = (cloud.nrows() as f32, recon.nrows() as f32);
    for (i, &j) in a_to_b.iter().enumerate() {
        for c in 0..3 {
            grad_recon[[j, c]] += 2.0 * (recon[[j, c]] - cloud[[i, c]]) / na;
        }
    }
    for (j, &i) in b_to_a.iter().enumerate() {
        for c in 0..3 {
            grad_recon[[j, c]] += 2.0 * (recon[[j, c]] - cloud[[i, c]]) / nb;
        }
    }
    let grad_flat = grad_recon.into_shape_with_order((1, ae.m * 3)).unwrap();
    let (dec_grads, grad_feature) = ae.decoder.backward(&dec_cache, &grad_flat);
    // route the feature gradient to each column's winning point
    let mut grad_per_point: Array2<f32> = Array2::zeros((n, feat_dim));
    for j in 0..feat_dim {
        grad_per_point[[winner[j], j]] = grad_feature[[0, j]];
    }
    let (enc_grads, _) = ae.encoder.backward(&enc_cache, &grad_per_point);
    (loss, enc_grads, dec_grads)
}

/// Discrete structure of the loss at the current weights: max-pool winner
/// rows and Chamfer match indices. The loss is differentiable only where
/// this signature is locally constant.
#[cfg(test)]
fn discrete_signature(ae: &AEModel, cloud: &Array2<f32>) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let per_point = ae.encoder.forward(cloud);
    let (n, feat_dim) = (per_point.nrows(), per_point.ncols());
    let mut feature = Array1::zeros(feat_dim);
    let mut winner = vec![0usize; feat_dim];
    for j in 0..feat_dim {
        let mut best = f32::NEG_INFINITY;
        for i in 0..n {
            if per_point[[i, j]] > best {
                best = per_point[[i, j]];
                winner[j] = i;
            }
        }
        feature[j] = best;
    }
    let recon = ae.decode(&feature);
    let (_, a_to_b, b_to_a) = chamfer_with_matches(cloud, &recon);
    (winner, a_to_b, b_to_a)
}

#[derive(Debug, Clone)]
pub struct AETrainReport {
    pub initial_loss: f32,
    pub final_loss: f32,
    pub epochs: usize,
}

/// Train the autoencoder on normalized part clouds (Adam, lr 1e-3, batch 32).
pub fn ae_train(
    clouds: &[Array2<f32>],
    epochs: usize,
    seed: u64,
) -> Result<(AEModel, AETrainReport), LearnError> {
    assert!(!clouds.is_empty());
    let mut ae = AEModel::new(seed);
    let mut enc_opt = Adam::new(&ae.encoder, 1e-3);
    let mut dec_opt = Adam::new(&ae.decoder, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA0A0);
    let mean_loss = |ae: &AEModel| -> f32 {
        clouds
            .iter()
            .map(|c| chamfer_f32(c, &ae.reconstruct(c)))
            .sum::<f32>()
            / clouds.len() as f32
    };
    let initial_loss = mean_loss(&ae);
    let mut order: Vec<usize> = (0..clouds.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(32) {
            let mut enc_acc = Grads::zeros_like(&ae.encoder);
            let mut dec_acc = Grads::zeros_like(&ae.decoder);
            let mut batch_loss = 0.0f32;
            for &idx in batch {
                let (loss, eg, dg) = ae_loss_and_grads(&ae, &clouds[idx]);
                batch_loss += loss;
                enc_acc.add(&eg);
                dec_acc.add(&dg);
            }
            if !batch_loss.is_finite() {
                return Err(LearnError::Diverged);
            }
            let inv = 1.0 / batch.len() as f32;
            enc_acc.scale(inv);
            dec_acc.scale(inv);
            enc_opt.step(&mut ae.encoder, &enc_acc);
            dec_opt.step(&mut ae.decoder, &dec_acc);
        }
    }
    let final_loss = mean_loss(&ae);
    if !final_loss.is_finite() {
        return Err(LearnError::Diverged);
    }
    Ok((ae, AETrainReport { initial_loss, final_loss, epochs }))
}
