//! Evaluation commands: greedy policy rollouts, the whole-assembly planning
//! baseline, trajectory export and report merging.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::assets::{load_chair, load_dataset, ChairAsset};
use crate::env::{
    pose_row, read_trajectory, reset, write_trajectory, Setting, TrajectoryRecord,
};
use crate::geom::{Pose6D, TriMesh};
use crate::learn::{load_ae, load_checkpoint, load_qnet, q_forward, select_action, AEModel, QNet};
use crate::learn::{build_state_encoding, encode_part};
use crate::par::par_map;
use crate::planner::{plan_full_assembly, RRTParams};

use super::config::{write_resolved, CliError, RunConfig};
use super::metrics::{parse_metrics, render_metrics, write_metrics, MetricsRow};
use super::train_cmd::{learn_err, parse_setting, setting_name};

struct ChairEval {
    chair_id: u64,
    episodes: usize,
    successes: usize,
    /// Total planner states attempted across all episodes.
    states: usize,
    records: Vec<TrajectoryRecord>,
}

fn action_row(idx: usize, net: &QNet, setting: Setting) -> Vec<usize> {
    let a = net.action_caps.unflatten(idx);
    match setting {
        Setting::ObjectCentric => vec![a.u, a.v, a.k, a.l, a.w],
        Setting::Full => vec![a.u, a.v, a.k, a.l, a.w / 8, a.w % 8],
    }
}

/// One greedy episode with trajectory logging; the log starts with a t = 0
/// snapshot of the reset poses so exports include the initial scene.
fn greedy_episode(
    chair: &ChairAsset,
    ae: &AEModel,
    net: &QNet,
    setting: Setting,
    planner: &RRTParams,
    enc_caps: &crate::learn::EncodingCaps,
    episode: usize,
    seed: u64,
) -> (bool, usize, Vec<TrajectoryRecord>) {
    use rand::SeedableRng;
    let Ok(mut state) = reset(chair, seed) else {
        return (false, 0, Vec::new());
    };
    let features: Vec<_> = (0..state.part_count())
        .map(|i| encode_part(ae, &state.chair.parts[i], &state.current_poses[i]))
        .collect();
    let mut records = vec![TrajectoryRecord {
        episode,
        t: 0,
        action: Vec::new(),
        reward: 0.0,
        done: false,
        failure: "none".into(),
        poses: state.current_poses.iter().map(pose_row).collect(),
    }];
    let mut states_attempted = 0usize;
    let mut t = 0usize;
    loop {
        let mask = state.valid_action_mask(&net.action_caps);
        let Ok(enc) = build_state_encoding(&state, &features, enc_caps) else { break };
        let q = q_forward(net, &enc);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let Ok(idx) = select_action(&q, &mask, 0.0, &mut rng) else { break };
        let result = state.step_flat(idx, &net.action_caps, planner, setting);
        states_attempted += result.states_attempted;
        t += 1;
        records.push(TrajectoryRecord {
            episode,
            t,
            action: action_row(idx, net, setting),
            reward: result.reward,
            done: result.done,
            failure: result.failure.as_str().into(),
            poses: result.next_state.current_poses.iter().map(pose_row).collect(),
        });
        let done = result.done;
        state = result.next_state;
        if done {
            break;
        }
    }
    (state.is_fully_assembled(), states_attempted, records)
}

#[allow(clippy::too_many_arguments)]
pub fn eval_cmd(
    dataset: &Path,
    policy: &Path,
    ae_path: &Path,
    split: &str,
    out: &Path,
    seed: Option<u64>,
    episodes: Option<usize>,
    max_states: Option<usize>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let seed = cfg.get("seed", seed, 0u64)?;
    let episodes = cfg.get("episodes", episodes, 5usize)?;
    let max_states = cfg.get("max_states", max_states, 5000usize)?;
    let resolved = cfg.finish()?;
    let (manifest, chairs) = load_dataset(dataset).map_err(CliError::io)?;
    let ids = manifest
        .split_ids(split)
        .ok_or_else(|| CliError::Config(format!("unknown split '{split}'")))?;
    let net = load_qnet(policy).map_err(learn_err)?;
    let header = load_checkpoint(policy).map_err(learn_err)?.header;
    let setting = match header.meta.get("setting") {
        Some(s) => parse_setting(s)?,
        None => Setting::ObjectCentric,
    };
    let ae = load_ae(ae_path).map_err(learn_err)?;
    let enc_caps = net.encoding_caps;
    let planner = RRTParams { max_states, seed, ..Default::default() };

    let jobs: Vec<&ChairAsset> = ids
        .iter()
        .filter_map(|id| chairs.iter().find(|c| c.id == *id))
        .collect();
    if jobs.len() != ids.len() {
        return Err(CliError::Io(format!("split '{split}' references missing chairs")));
    }
    let evals: Vec<ChairEval> = par_map(jobs, |chair| {
        let mut successes = 0usize;
        let mut states = 0usize;
        let mut records = Vec::new();
        for e in 0..episodes {
            let ep_seed = seed ^ chair.id.wrapping_mul(0x9E37_79B9) ^ e as u64;
            let (ok, s, recs) =
                greedy_episode(chair, &ae, &net, setting, &planner, &enc_caps, e, ep_seed);
            successes += ok as usize;
            states += s;
            records.extend(recs);
        }
        ChairEval { chair_id: chair.id, episodes, successes, states, records }
    });

    std::fs::create_dir_all(out).map_err(CliError::io)?;
    let mut total_eps = 0usize;
    let mut total_ok = 0usize;
    let mut total_states = 0usize;
    for ev in &evals {
        total_eps += ev.episodes;
        total_ok += ev.successes;
        total_states += ev.states;
        let f = std::fs::File::create(out.join(format!("traj_{}.jsonl", ev.chair_id)))
            .map_err(CliError::io)?;
        write_trajectory(std::io::BufWriter::new(f), &ev.records).map_err(CliError::io)?;
    }
    let row = MetricsRow {
        method: format!("ours_{}", setting_name(setting)),
        split: split.to_string(),
        success_rate: 100.0 * total_ok as f64 / total_eps.max(1) as f64,
        plan_steps: Some(total_states as f64 / total_eps.max(1) as f64),
    };
    write_metrics(out, &[row.clone()], &resolved)?;
    write_resolved(out, &resolved)?;
    println!(
        "{} on {}: {}/{} assembled ({:.1}%), mean planner states {:.1}",
        row.method,
        split,
        total_ok,
        total_eps,
        row.success_rate,
        row.plan_steps.unwrap()
    );
    Ok(())
}

pub fn baseline_cmd(
    dataset: &Path,
    split: &str,
    out: &Path,
    seed: Option<u64>,
    max_states: Option<usize>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let seed = cfg.get("seed", seed, 0u64)?;
    let episodes = cfg.get("episodes", None::<usize>, 5usize)?;
    let max_states = cfg.get("max_states", max_states, 100_000usize)?;
    let resolved = cfg.finish()?;
    let (manifest, chairs) = load_dataset(dataset).map_err(CliError::io)?;
    let ids = manifest
        .split_ids(split)
        .ok_or_else(|| CliError::Config(format!("unknown split '{split}'")))?;
    let jobs: Vec<&ChairAsset> = ids
        .iter()
        .filter_map(|id| chairs.iter().find(|c| c.id == *id))
        .collect();
    if jobs.len() != ids.len() {
        return Err(CliError::Io(format!("split '{split}' references missing chairs")));
    }
    let results: Vec<(u64, usize, usize)> = par_map(jobs, |chair| {
        let mut ok = 0usize;
        let mut states = 0usize;
        for e in 0..episodes {
            let ep_seed = seed ^ chair.id.wrapping_mul(0x9E37_79B9) ^ e as u64;
            let Ok(state) = reset(chair, ep_seed) else { continue };
            let params = RRTParams { max_states, seed: ep_seed, ..Default::default() };
            let (outcome, _) = plan_full_assembly(chair, &state.current_poses, &params);
            ok += outcome.path().is_some() as usize;
            states += outcome.states_attempted;
        }
        (chair.id, ok, states)
    });
    let total_eps = results.len() * episodes;
    let total_ok: usize = results.iter().map(|r| r.1).sum();
    let total_states: usize = results.iter().map(|r| r.2).sum();
    let row = MetricsRow {
        method: "baseline_rrt".to_string(),
        split: split.to_string(),
        success_rate: 100.0 * total_ok as f64 / total_eps.max(1) as f64,
        plan_steps: Some(total_states as f64 / total_eps.max(1) as f64),
    };
    write_metrics(out, &[row.clone()], &resolved)?;
    write_resolved(out, &resolved)?;
    println!(
        "baseline_rrt on {}: {}/{} assembled ({:.1}%), mean planner states {:.1}",
        split,
        total_ok,
        total_eps,
        row.success_rate,
        row.plan_steps.unwrap()
    );
    Ok(())
}

/// Merge all part meshes at the given poses into a single scene mesh.
fn scene_mesh(chair: &ChairAsset, poses: &[[f64; 6]]) -> TriMesh {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for (part, row) in chair.parts.iter().zip(poses) {
        let pose = Pose6D {
            tx: row[0],
            ty: row[1],
            tz: row[2],
            rx: row[3],
            ry: row[4],
            rz: row[5],
        };
        let rot = pose.rotation_matrix();
        let t = pose.translation();
        let base = verts.len();
        for v in &part.mesh.vertices {
            verts.push(nalgebra::Point3::from(rot * v.coords + t));
        }
        for tri in &part.mesh.triangles {
            tris.push([tri[0] + base, tri[1] + base, tri[2] + base]);
        }
    }
    TriMesh::new(verts, tris)
}

pub fn export_traj_cmd(
    log: &Path,
    dataset: &Path,
    chair_id: u64,
    out: &Path,
) -> Result<(), CliError> {
    let chair = load_chair(dataset, chair_id).map_err(CliError::io)?;
    let f = std::fs::File::open(log).map_err(CliError::io)?;
    let records = read_trajectory(std::io::BufReader::new(f)).map_err(CliError::io)?;
    if records.is_empty() {
        return Err(CliError::Io(format!("{}: empty trajectory log", log.display())));
    }
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    for rec in &records {
        if rec.poses.len() != chair.part_count() {
            return Err(CliError::Io(format!(
                "episode {} t {}: {} poses for {} parts",
                rec.episode,
                rec.t,
                rec.poses.len(),
                chair.part_count()
            )));
        }
        let mesh = scene_mesh(&chair, &rec.poses);
        let path = out.join(format!("scene_e{}_t{:03}.obj", rec.episode, rec.t));
        crate::geom::obj::save_obj(&mesh, &path).map_err(CliError::io)?;
    }
    println!("exported {} scenes to {}", records.len(), out.display());
    Ok(())
}

pub fn report_cmd(runs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    if runs.is_empty() {
        return Err(CliError::Config("no run directories given".into()));
    }
    let mut rows = Vec::new();
    let mut sources = String::new();
    for dir in runs {
        let text = std::fs::read_to_string(dir.join("metrics.csv"))
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        rows.extend(parse_metrics(&text)?);
        writeln!(sources, "run={}", dir.display()).unwrap();
    }
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    std::fs::write(out.join("metrics.csv"), render_metrics(&rows, &sources))
        .map_err(CliError::io)?;
    let mut rows_sorted = rows.clone();
    rows_sorted.sort_by(|a, b| {
        (a.method.as_str(), a.split.as_str()).cmp(&(b.method.as_str(), b.split.as_str()))
    });
    let mut summary = String::new();
    for r in &rows_sorted {
        match r.plan_steps {
            Some(s) => writeln!(
                summary,
                "{} on {}: {:.1}% success, {:.1} mean planner states",
                r.method, r.split, r.success_rate, s
            )
            .unwrap(),
            None => writeln!(summary, "{} on {}: {:.1}% success", r.method, r.split, r.success_rate)
                .unwrap(),
        }
    }
    std::fs::write(out.join("summary.txt"), &summary).map_err(CliError::io)?;
    print!("{summary}");
    Ok(())
}
