//! Experiment harness behind the `bench-cli` binary.
//!
//! Every verb is a pure function of its arguments and the master seed, so
//! two runs with the same flags write byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chair_core::experiment::{
    derive_seed, evaluate_subject, run_calibration, run_cohort, run_test_session, train_subject, CohortConfig,
    SubjectResult,
};
use chair_core::features::feature_names;
use chair_core::metrics::{itr_or_zero, COMMAND_TIME_S, ITR_CLASSES};
use chair_core::report::ExperimentReport;
use chair_core::sim::{run_episode, sense, EpisodeConfig, EpisodeSummary, Motion, SimConfig, WorldMap, EPISODE_DT};
use chair_core::svm::TrainedModel;
use chair_core::synth::{ProfileSet, SubjectProfile};
use chair_core::Execution;
use serde::Serialize;

/// Parse `LO:HI` in dB.
pub fn parse_sweep(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI in dB, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("need finite LO <= HI, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Subjects to run: from a profile file if given, otherwise the SNR sweep.
/// Each subject is run with its own profile seed.
pub fn subjects(cohort: &CohortConfig, profiles: Option<&Path>) -> Result<Vec<SubjectProfile>> {
    match profiles {
        Some(p) => {
            let set = ProfileSet::load(p).with_context(|| format!("loading profiles from {}", p.display()))?;
            if set.profiles.is_empty() {
                bail!("{} defines no profiles", p.display());
            }
            Ok(set.profiles.into_values().collect())
        }
        None => Ok(cohort.profiles()),
    }
}

/// A built-in map id (`home`, `open`) or a map file.
pub fn resolve_map(spec: &str) -> Result<WorldMap> {
    match WorldMap::builtin(spec) {
        Some(m) => Ok(m),
        None => WorldMap::load(spec).with_context(|| format!("`{spec}` is neither a built-in map nor a map file")),
    }
}

fn write(path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    write(path, w.into_inner()?)
}

fn model_path(out: &Path, id: &str) -> PathBuf {
    out.join("models").join(format!("{id}.json"))
}

/// Calibration and held-out feature sets per subject, plus the profiles.
pub fn synth(profiles: &[SubjectProfile], out: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let mut set = ProfileSet::default();
    let mut written = Vec::new();
    let names = feature_names();
    for p in profiles {
        set.insert(p.clone());
        for (kind, data) in
            [("calibration", run_calibration(p, p.seed, exec)?), ("test", run_test_session(p, p.seed, exec)?)]
        {
            let mut buf = Vec::new();
            data.write_csv(&mut buf, &names)?;
            let path = out.join("data").join(format!("{}_{kind}.csv", p.id));
            write(&path, buf)?;
            written.push(path);
        }
    }
    let path = out.join("profiles.toml");
    write(&path, set.to_toml_string())?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct TrainRow {
    pub subject: String,
    pub c: f64,
    pub gamma: f64,
    /// Percent.
    pub cv_accuracy: f64,
    pub evaluations: usize,
}

/// Fit every subject and save the models.
pub fn train(profiles: &[SubjectProfile], cohort: &CohortConfig, out: &Path, exec: Execution) -> Result<Vec<TrainRow>> {
    let fits = exec.map(profiles, |p| train_subject(p, p.seed, &cohort.bayes, exec));
    let mut rows = Vec::new();
    for (p, fit) in profiles.iter().zip(fits) {
        let (model, report) = fit?;
        fs::create_dir_all(out.join("models"))?;
        model.save(model_path(out, &p.id)).with_context(|| format!("saving model for {}", p.id))?;
        rows.push(TrainRow {
            subject: p.id.clone(),
            c: report.hyper.c,
            gamma: report.hyper.gamma,
            cv_accuracy: 100.0 * report.cv_accuracy,
            evaluations: report.evaluations.len(),
        });
    }
    write_rows(&out.join("train.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Serialize)]
pub struct EvalRow {
    pub subject: String,
    /// Percent.
    pub test_accuracy: f64,
    pub intended_l: usize,
    pub actual_l: usize,
    pub intended_r: usize,
    pub actual_r: usize,
    pub intended_gs: usize,
    pub actual_gs: usize,
    /// Percent.
    pub success_rate: f64,
    /// Bits per minute.
    pub itr: f64,
}

#[derive(Debug, Serialize)]
struct TrialRow {
    subject: String,
    trial: usize,
    kind: String,
    intended: String,
    actual: String,
    latency_s: Option<f64>,
}

/// Held-out accuracy and online protocol with models saved by [`train`].
pub fn eval(profiles: &[SubjectProfile], out: &Path, exec: Execution) -> Result<Vec<EvalRow>> {
    let models = profiles
        .iter()
        .map(|p| {
            let path = model_path(out, &p.id);
            TrainedModel::load(&path).with_context(|| format!("no model at {} (run `train` first)", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(&SubjectProfile, &TrainedModel)> = profiles.iter().zip(&models).collect();
    let evals = exec.map(&pairs, |(p, m)| evaluate_subject(m, p, p.seed, exec));
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for (p, e) in profiles.iter().zip(evals) {
        let e = e?;
        let c = e.online.counts();
        let sr = c.success_rate();
        for (i, t) in e.online.trials.iter().enumerate() {
            trials.push(TrialRow {
                subject: p.id.clone(),
                trial: i,
                kind: format!("{:?}", t.kind),
                intended: t.intended.to_string(),
                actual: t.actual.map_or_else(|| "NONE".to_string(), |k| k.to_string()),
                latency_s: t.latency,
            });
        }
        rows.push(EvalRow {
            subject: p.id.clone(),
            test_accuracy: 100.0 * e.test_accuracy,
            intended_l: c.intended_l,
            actual_l: c.actual_l,
            intended_r: c.intended_r,
            actual_r: c.actual_r,
            intended_gs: c.intended_gs,
            actual_gs: c.actual_gs,
            success_rate: sr,
            itr: itr_or_zero(ITR_CLASSES, sr / 100.0, COMMAND_TIME_S),
        });
    }
    write_rows(&out.join("eval.csv"), &rows)?;
    write_rows(&out.join("online_trials.csv"), &trials)?;
    Ok(rows)
}

/// Safety bookkeeping for one episode, checked against noise-free ranges.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EpisodeCheck {
    pub seed: u64,
    pub ticks: usize,
    pub commands: usize,
    pub rejected: usize,
    pub force_stops: usize,
    pub turns_completed: usize,
    pub distance: f64,
    /// Ticks ending with the chair inside an obstacle or outside the map.
    pub collisions: usize,
    /// Ticks ending in FORWARD or TURNING with a noise-free range under the
    /// stop distance.
    pub unsafe_ticks: usize,
    /// Ticks on which a latched chair changed motion other than by GO.
    pub latch_violations: usize,
}

impl EpisodeCheck {
    pub fn is_safe(&self) -> bool {
        self.collisions == 0 && self.unsafe_ticks == 0 && self.latch_violations == 0
    }
}

pub fn checked_episode(map: &WorldMap, sim: &SimConfig, cfg: &EpisodeConfig, seed: u64) -> Result<EpisodeCheck> {
    let mut check = EpisodeCheck { seed, ..Default::default() };
    let mut was_latched = false;
    let summary: EpisodeSummary = run_episode(map, sim, cfg, seed, |state, _| {
        if !map.is_free(state.pose.position()) {
            check.collisions += 1;
        }
        let truth = sense(&state.pose, map, sim, None);
        if state.motion.is_moving() && truth.min() < sim.stop_distance {
            check.unsafe_ticks += 1;
        }
        // GO is the only way out of the latch and always yields FORWARD,
        // possibly force-stopped again within the same tick.
        if was_latched && !matches!(state.motion, Motion::ForceStopped | Motion::Forward) {
            check.latch_violations += 1;
        }
        was_latched = state.force_latched;
    })?;
    check.ticks = summary.ticks;
    check.commands = summary.commands;
    check.rejected = summary.rejected;
    check.force_stops = summary.force_stops;
    check.turns_completed = summary.turns_completed;
    check.distance = summary.distance;
    Ok(check)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub episodes: usize,
    pub ticks: usize,
    pub dt_s: f64,
    pub noise_free_sensors: bool,
    pub force_stops: usize,
    pub collisions: usize,
    pub unsafe_ticks: usize,
    pub latch_violations: usize,
    pub unsafe_episodes: usize,
}

/// Randomized headless episodes; writes per-episode rows and a summary.
pub fn simulate(
    map: &WorldMap,
    episodes: usize,
    episode: &EpisodeConfig,
    noise_free: bool,
    seed: u64,
    out: &Path,
    exec: Execution,
) -> Result<SimulateSummary> {
    let sim = SimConfig { noise_free, ..SimConfig::default() };
    let checks = exec
        .map_range(episodes, |i| checked_episode(map, &sim, episode, derive_seed(seed, &[i as u64])))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let sum = |f: fn(&EpisodeCheck) -> usize| checks.iter().map(f).sum::<usize>();
    let summary = SimulateSummary {
        episodes,
        ticks: sum(|c| c.ticks),
        dt_s: EPISODE_DT,
        noise_free_sensors: noise_free,
        force_stops: sum(|c| c.force_stops),
        collisions: sum(|c| c.collisions),
        unsafe_ticks: sum(|c| c.unsafe_ticks),
        latch_violations: sum(|c| c.latch_violations),
        unsafe_episodes: checks.iter().filter(|c| !c.is_safe()).count(),
    };
    write_rows(&out.join("episodes.csv"), &checks)?;
    write(out.join("simulate.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

/// Full protocol for every subject; writes table, CSV and JSON.
pub fn report(
    profiles: &[SubjectProfile],
    cohort: &CohortConfig,
    out: &Path,
    exec: Execution,
) -> Result<ExperimentReport> {
    let rows: Vec<SubjectResult> = if profiles == cohort.profiles().as_slice() {
        run_cohort(cohort, exec)?
    } else {
        exec.map(profiles, |p| chair_core::experiment::run_subject(p, p.seed, &cohort.bayes, exec).map(|r| r.0))
            .into_iter()
            .collect::<chair_core::Result<Vec<_>>>()?
    };
    let report = ExperimentReport::new(cohort.seed, rows);
    write(out.join("report.txt"), report.to_table())?;
    write(out.join("report.csv"), report.to_csv())?;
    write(out.join("report.json"), report.to_json() + "\n")?;
    Ok(report)
}
