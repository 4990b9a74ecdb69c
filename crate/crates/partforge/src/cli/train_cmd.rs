//! Training commands: autoencoder pretraining, single-task experts, and
//! multi-task distillation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use ndarray::Array2;

use crate::assets::{load_dataset, ChairAsset};
use crate::env::Setting;
use crate::geom::Pose6D;
use crate::learn::{
    ae_train, build_expert_dataset, distill_train, load_ae, load_checkpoint, load_qnet,
    part_cloud, save_ae, save_qnet, DistillConfig, LearnError, TrainConfig,
};
use crate::par::par_map;
use crate::planner::RRTParams;

use super::config::{parse_caps, write_resolved, CliError, RunConfig};

pub fn learn_err(e: LearnError) -> CliError {
    match e {
        LearnError::Diverged => CliError::Diverged("loss became non-finite".into()),
        other => CliError::Io(other.to_string()),
    }
}

pub fn parse_setting(s: &str) -> Result<Setting, CliError> {
    match s {
        "oc" => Ok(Setting::ObjectCentric),
        "full" => Ok(Setting::Full),
        other => Err(CliError::Config(format!("setting '{other}': expected oc or full"))),
    }
}

pub fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::ObjectCentric => "oc",
        Setting::Full => "full",
    }
}

/// Train chairs only (easy + hard splits).
fn train_chairs(manifest_ids: &[u64], chairs: &[ChairAsset]) -> Vec<ChairAsset> {
    chairs
        .iter()
        .filter(|c| manifest_ids.contains(&c.id))
        .cloned()
        .collect()
}

pub fn train_ae_cmd(
    dataset: &Path,
    out: &Path,
    seed: Option<u64>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let seed = cfg.get("seed", seed, 0u64)?;
    let epochs = cfg.get("epochs", None::<usize>, 30usize)?;
    let resolved = cfg.finish()?;
    let (manifest, chairs) = load_dataset(dataset).map_err(CliError::io)?;
    let train_ids: Vec<u64> = manifest
        .easy_train
        .iter()
        .chain(&manifest.hard_train)
        .copied()
        .collect();
    let train = train_chairs(&train_ids, &chairs);
    if train.is_empty() {
        return Err(CliError::Config("dataset has no train chairs".into()));
    }
    // one cloud per part per orientation: identity plus three quarter turns
    let half = std::f64::consts::FRAC_PI_2;
    let orientations = [
        Vector3::zeros(),
        Vector3::new(half, 0.0, 0.0),
        Vector3::new(0.0, half, 0.0),
        Vector3::new(0.0, 0.0, half),
    ];
    let clouds: Vec<Array2<f32>> = par_map(train, |chair| {
        let mut out = Vec::new();
        for part in &chair.parts {
            for euler in &orientations {
                out.push(part_cloud(part, &Pose6D::new(Vector3::zeros(), *euler)));
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();
    let (ae, report) = ae_train(&clouds, epochs, seed).map_err(learn_err)?;
    if report.final_loss >= 0.1 * report.initial_loss {
        return Err(CliError::Diverged(format!(
            "autoencoder failed to converge: initial {} final {}",
            report.initial_loss, report.final_loss
        )));
    }
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    save_ae(&out.join("ae.ckpt"), &ae, seed).map_err(learn_err)?;
    std::fs::write(
        out.join("ae_report.txt"),
        format!(
            "clouds={}\nepochs={}\ninitial_loss={}\nfinal_loss={}\n",
            clouds.len(),
            report.epochs,
            report.initial_loss,
            report.final_loss
        ),
    )
    .map_err(CliError::io)?;
    write_resolved(out, &resolved)?;
    println!(
        "trained autoencoder on {} clouds: loss {} -> {}",
        clouds.len(),
        report.initial_loss,
        report.final_loss
    );
    Ok(())
}

/// Assemble a TrainConfig from config keys shared by train-single and
/// distill data collection.
fn train_config_from(
    cfg: &RunConfig,
    budget: Option<usize>,
    caps_flag: Option<&str>,
    max_states: Option<usize>,
) -> Result<TrainConfig, CliError> {
    let mut tc = TrainConfig::default();
    tc.budget = cfg.get("budget", budget, tc.budget)?;
    let caps_str = cfg.get(
        "caps",
        caps_flag.map(|s| s.to_string()),
        format!("{},{},{}", tc.action_caps.p, tc.action_caps.k, tc.action_caps.w),
    )?;
    tc.action_caps = parse_caps(&caps_str)?;
    tc.planner.max_states = cfg.get("max_states", max_states, tc.planner.max_states)?;
    tc.eval_every = cfg.get("eval_every", None, tc.eval_every)?;
    tc.eval_episodes = cfg.get("eval_episodes", None, tc.eval_episodes)?;
    tc.warmup = cfg.get("warmup", None, tc.warmup)?;
    let hidden = cfg.get("hidden", None::<String>, "1024,512".to_string())?;
    tc.hidden = hidden
        .split(',')
        .map(|h| h.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("hidden '{hidden}': not integers")))?;
    let setting = cfg.get("setting", None::<String>, "oc".to_string())?;
    tc.setting = parse_setting(&setting)?;
    if tc.setting == Setting::Full && tc.action_caps.w < 64 {
        tc.action_caps.w = Setting::Full.w_cap();
    }
    Ok(tc)
}

fn find_chair<'a>(chairs: &'a [ChairAsset], id: u64) -> Result<&'a ChairAsset, CliError> {
    chairs
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| CliError::Config(format!("chair {id} not in dataset")))
}

#[allow(clippy::too_many_arguments)]
pub fn train_single_cmd(
    dataset: &Path,
    chair_id: u64,
    ae_path: &Path,
    out: &Path,
    seed: Option<u64>,
    budget: Option<usize>,
    caps: Option<&str>,
    max_states: Option<usize>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let seed = cfg.get("seed", seed, 0u64)?;
    let tc = train_config_from(&cfg, budget, caps, max_states)?;
    let resolved = cfg.finish()?;
    let (_, chairs) = load_dataset(dataset).map_err(CliError::io)?;
    let chair = find_chair(&chairs, chair_id)?;
    if chair.part_count() > tc.action_caps.p {
        return Err(CliError::Config(format!(
            "chair {} has {} parts, caps allow {}",
            chair_id,
            chair.part_count(),
            tc.action_caps.p
        )));
    }
    let ae = load_ae(ae_path).map_err(learn_err)?;
    let outcome = crate::learn::train_single(chair, &ae, &tc, seed).map_err(learn_err)?;
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    let meta = BTreeMap::from([
        ("chair".to_string(), chair_id.to_string()),
        ("setting".to_string(), setting_name(tc.setting).to_string()),
        ("best_success".to_string(), format!("{}", outcome.best_success)),
    ]);
    save_qnet(&out.join(format!("expert_{chair_id}.ckpt")), &outcome.net, seed, meta)
        .map_err(learn_err)?;
    let mut log = String::from("step,loss,epsilon,eval_success\n");
    for row in &outcome.log {
        writeln!(log, "{},{},{},{}", row.step, row.loss, row.epsilon, row.eval_success).unwrap();
    }
    std::fs::write(out.join("train_log.csv"), log).map_err(CliError::io)?;
    write_resolved(out, &resolved)?;
    println!(
        "trained expert for chair {}: best success {:.2} after {} env steps",
        chair_id, outcome.best_success, outcome.steps_used
    );
    Ok(())
}

pub fn distill_cmd(
    dataset: &Path,
    ae_path: &Path,
    experts: &[std::path::PathBuf],
    out: &Path,
    seed: Option<u64>,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let seed = cfg.get("seed", seed, 0u64)?;
    let episodes = cfg.get("episodes", None::<usize>, 20usize)?;
    let epochs = cfg.get("epochs", None::<usize>, 30usize)?;
    let max_states = cfg.get("max_states", None::<usize>, 5000usize)?;
    let resolved = cfg.finish()?;
    if experts.is_empty() {
        return Err(CliError::Config("no expert checkpoints given".into()));
    }
    let (_, chairs) = load_dataset(dataset).map_err(CliError::io)?;
    let ae = load_ae(ae_path).map_err(learn_err)?;

    // load experts and the chairs they were trained on
    let mut loaded = Vec::new();
    let mut setting = Setting::ObjectCentric;
    for path in experts {
        let header = load_checkpoint(path).map_err(learn_err)?.header;
        let chair_id: u64 = header
            .meta
            .get("chair")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                CliError::Config(format!("{}: missing chair meta", path.display()))
            })?;
        if let Some(s) = header.meta.get("setting") {
            setting = parse_setting(s)?;
        }
        let net = load_qnet(path).map_err(learn_err)?;
        loaded.push((chair_id, net));
    }
    let caps = loaded[0].1.action_caps;
    let enc_caps = loaded[0].1.encoding_caps;
    for (id, net) in &loaded {
        if (net.action_caps.p, net.action_caps.k, net.action_caps.w) != (caps.p, caps.k, caps.w)
        {
            return Err(CliError::Config(format!("expert for chair {id}: action caps differ")));
        }
    }

    let tc = TrainConfig {
        action_caps: caps,
        encoding_caps: enc_caps,
        planner: RRTParams { max_states, ..TrainConfig::default().planner },
        setting,
        ..TrainConfig::default()
    };
    let jobs: Vec<(u64, crate::learn::QNet)> = loaded;
    let datasets: Vec<_> = par_map(jobs, |(chair_id, net)| {
        let chair = chairs.iter().find(|c| c.id == chair_id)?;
        Some(build_expert_dataset(chair, &ae, &net, &tc, episodes, seed ^ chair_id))
    })
    .into_iter()
    .collect::<Option<Vec<_>>>()
    .ok_or_else(|| CliError::Config("expert chair missing from dataset".into()))?;
    let records: usize = datasets.iter().map(|d| d.records.len()).sum();
    if records == 0 {
        return Err(CliError::Io("no expert rollouts assembled; nothing to distill".into()));
    }
    let dc = DistillConfig { epochs, ..Default::default() };
    let (net, report) = distill_train(&datasets, caps, enc_caps, &dc, seed).map_err(learn_err)?;
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    let meta = BTreeMap::from([
        ("setting".to_string(), setting_name(setting).to_string()),
        ("experts".to_string(), experts.len().to_string()),
        ("held_in_agreement".to_string(), format!("{}", report.held_in_agreement)),
        ("held_out_agreement".to_string(), format!("{}", report.held_out_agreement)),
    ]);
    save_qnet(&out.join("policy.ckpt"), &net, seed, meta).map_err(learn_err)?;
    std::fs::write(
        out.join("distill_report.txt"),
        format!(
            "experts={}\ntrain_records={}\nholdout_records={}\nfinal_loss={}\nheld_in_agreement={}\nheld_out_agreement={}\n",
            experts.len(),
            report.train_records,
            report.holdout_records,
            report.final_loss,
            report.held_in_agreement,
            report.held_out_agreement
        ),
    )
    .map_err(CliError::io)?;
    write_resolved(out, &resolved)?;
    println!(
        "distilled {} experts into one policy: agreement {:.2} held-in, {:.2} held-out",
        experts.len(),
        report.held_in_agreement,
        report.held_out_agreement
    );
    Ok(())
}
