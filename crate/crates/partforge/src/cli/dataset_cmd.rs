//! Dataset generation and re-annotation commands.

use std::path::Path;

use crate::assets::{
    annotate_chair, compute_equivalence_classes, generate_chair, load_dataset, save_dataset,
    ChairAsset, DatasetManifest, Difficulty,
};
use crate::par::par_map;

use super::config::{write_resolved, CliError, RunConfig};

/// Seed-space offsets keeping ids unique per split.
const HARD_BASE: u64 = 10_000;
const TEST_EASY_BASE: u64 = 20_000;
const TEST_HARD_BASE: u64 = 30_000;

/// Generate `count` chairs of one difficulty by scanning seeds from `base`,
/// skipping seeds where generation fails. Chair ids equal their seeds.
fn generate_split(base: u64, count: usize, difficulty: Difficulty) -> Vec<ChairAsset> {
    let candidates: Vec<u64> = (base..base + 4 * count as u64).collect();
    let mut chairs: Vec<ChairAsset> = par_map(candidates, |seed| {
        generate_chair(seed, difficulty).ok().map(|mut c| {
            c.id = seed;
            c
        })
    })
    .into_iter()
    .flatten()
    .collect();
    chairs.truncate(count);
    chairs
}

pub fn gen_dataset(
    out: &Path,
    seed: Option<u64>,
    n_chairs: Option<usize>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let seed = cfg.get("seed", seed, 0u64)?;
    let n = cfg.get("n_chairs", n_chairs, 40usize)?;
    let resolved = cfg.finish()?;
    if n < 5 {
        return Err(CliError::Config(format!("n_chairs {n} too small, need >= 5")));
    }
    // 3:1:1 easy-train / hard-train / test; the test split mixes difficulties
    let n_easy = n * 3 / 5;
    let n_hard = n / 5;
    let n_test = n - n_easy - n_hard;
    let easy = generate_split(seed, n_easy, Difficulty::Easy);
    let hard = generate_split(seed + HARD_BASE, n_hard, Difficulty::Hard);
    let mut test = generate_split(seed + TEST_EASY_BASE, n_test / 2, Difficulty::Easy);
    test.extend(generate_split(seed + TEST_HARD_BASE, n_test - n_test / 2, Difficulty::Hard));
    if easy.len() < n_easy || hard.len() < n_hard || test.len() < n_test {
        return Err(CliError::Io(format!(
            "generation exhausted seed budget: {}/{} easy, {}/{} hard, {}/{} test",
            easy.len(),
            n_easy,
            hard.len(),
            n_hard,
            test.len(),
            n_test
        )));
    }
    let manifest = DatasetManifest::new(
        easy.iter().map(|c| c.id).collect(),
        hard.iter().map(|c| c.id).collect(),
        test.iter().map(|c| c.id).collect(),
    );
    let chairs: Vec<ChairAsset> = easy.into_iter().chain(hard).chain(test).collect();
    save_dataset(&manifest, &chairs, out).map_err(CliError::io)?;
    write_resolved(out, &resolved)?;
    println!(
        "wrote {} chairs ({} easy_train, {} hard_train, {} test) to {}",
        chairs.len(),
        manifest.easy_train.len(),
        manifest.hard_train.len(),
        manifest.test.len(),
        out.display()
    );
    Ok(())
}

/// Verify the 9-dim descriptors of every connection: unit normal and
/// tangent, orthogonal frame, and mated positions that coincide in the
/// assembled configuration up to the connection threshold.
fn check_descriptors(chair: &ChairAsset) -> Result<(), String> {
    use crate::assets::CONNECT_THRESHOLD;
    for part in &chair.parts {
        for (k, c) in part.connections.iter().enumerate() {
            if (c.normal.norm() - 1.0).abs() > 1e-6
                || (c.tangent.norm() - 1.0).abs() > 1e-6
                || c.normal.dot(&c.tangent).abs() > 1e-6
            {
                return Err(format!(
                    "chair {} part {} conn {k}: descriptor frame not orthonormal",
                    chair.id, part.id
                ));
            }
            let mate = &chair.parts[c.mate_part].connections[c.mate_connection];
            let world = |p: usize, pos: &nalgebra::Vector3<f64>| {
                let pose = &chair.gt_poses[p];
                pose.rotation_matrix() * pos + pose.translation()
            };
            let gap = (world(part.id, &c.position) - world(c.mate_part, &mate.position)).norm();
            if gap > CONNECT_THRESHOLD {
                return Err(format!(
                    "chair {} part {} conn {k}: mated points {gap} m apart",
                    chair.id, part.id
                ));
            }
        }
    }
    Ok(())
}

/// Re-run the annotation pipeline from meshes + ground-truth poses and verify
/// it reproduces the stored connections, adjacency and equivalence classes.
pub fn annotate(dataset: &Path, config: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let resolved = cfg.finish()?;
    let _ = resolved;
    let (_, chairs) = load_dataset(dataset).map_err(CliError::io)?;
    let reports: Vec<Result<u64, String>> = par_map(chairs, |chair| {
        let meshes = chair.parts.iter().map(|p| p.mesh.clone()).collect();
        let fresh = annotate_chair(chair.id, meshes, chair.gt_poses.clone())
            .map_err(|e| format!("chair {}: {e}", chair.id))?;
        if fresh.gt_adjacency != chair.gt_adjacency {
            return Err(format!(
                "chair {}: adjacency mismatch ({} vs {} pairs)",
                chair.id,
                fresh.gt_adjacency.len(),
                chair.gt_adjacency.len()
            ));
        }
        for (a, b) in fresh.parts.iter().zip(&chair.parts) {
            if a.connections.len() != b.connections.len() {
                return Err(format!(
                    "chair {} part {}: connection count mismatch",
                    chair.id, a.id
                ));
            }
            for (k, (ca, cb)) in a.connections.iter().zip(&b.connections).enumerate() {
                if (ca.mate_part, ca.mate_connection) != (cb.mate_part, cb.mate_connection) {
                    return Err(format!(
                        "chair {} part {} conn {k}: mate reference changed",
                        chair.id, a.id
                    ));
                }
            }
        }
        // descriptor geometry: unit frames and mated points that coincide in
        // the assembled pose up to the mating gap (witness points on flat
        // faces are not unique, so positions are checked geometrically, not
        // bitwise against the stored values)
        for source in [&fresh, &chair] {
            if let Err(msg) = check_descriptors(source) {
                return Err(msg);
            }
        }
        let classes = compute_equivalence_classes(&chair);
        let stored: Vec<usize> = chair.parts.iter().map(|p| p.equivalence_class).collect();
        if classes != stored {
            return Err(format!("chair {}: equivalence classes changed", chair.id));
        }
        Ok(chair.id)
    });
    let mut ok = 0usize;
    let mut failures = Vec::new();
    for r in reports {
        match r {
            Ok(_) => ok += 1,
            Err(msg) => failures.push(msg),
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Io(format!(
            "{} of {} chairs failed re-annotation: {}",
            failures.len(),
            ok + failures.len(),
            failures.join("; ")
        )));
    }
    println!("re-annotation verified on {ok} chairs");
    Ok(())
}
