//! The off-policy training loop: roll out, select a replay batch, estimate,
//! solve the subproblem, step.

use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{self, Constants, SafetyCertificate, StepInputs};
use crate::error::{Error, Result};
use crate::estimate::{
    self, Baseline, BinnedBaseline, ClipRange, EstimateBundle, StatInputs, ZeroBaseline,
};
use crate::flow::csv_err;
use crate::linalg::{all_finite, norm, norm_sq};
use crate::mdp::{rollout, BehaviorTag, Cmdp, Episode};
use crate::policy::Policy;
use crate::qcqp::{self, Beta, SolveStatus, SolverOptions};
use crate::rng::episode_rng;

pub const METRICS_SCHEMA: &str = "# rsgf metrics, schema v1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Which stored episodes form the batch at iteration `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReplayRule {
    Current,
    /// Current and immediately preceding iteration.
    LastTwo,
    /// The last `w` iterations, current included.
    Window(usize),
    All,
}

impl ReplayRule {
    /// Iterations the buffer must retain; `None` means unbounded.
    pub fn capacity(&self) -> Option<usize> {
        match *self {
            ReplayRule::Current => Some(1),
            ReplayRule::LastTwo => Some(2),
            ReplayRule::Window(w) => Some(w.max(1)),
            ReplayRule::All => None,
        }
    }
}

/// Episodes grouped by generating iteration, FIFO-evicted.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    groups: VecDeque<(usize, Vec<Episode>)>,
    capacity: Option<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            groups: VecDeque::new(),
            capacity,
        }
    }

    pub fn push(&mut self, iteration: usize, episodes: Vec<Episode>) {
        self.groups.push_back((iteration, episodes));
        if let Some(c) = self.capacity {
            while self.groups.len() > c {
                self.groups.pop_front();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.1.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Oldest iteration first, episode index order within an iteration.
    pub fn select(&self, iteration: usize, rule: ReplayRule) -> Result<Vec<&Episode>> {
        if !self.groups.iter().any(|g| g.0 == iteration) {
            return Err(Error::EmptyBatch);
        }
        let keep = |it: usize| match rule {
            ReplayRule::Current => it == iteration,
            ReplayRule::LastTwo => it + 1 >= iteration && it <= iteration,
            ReplayRule::Window(w) => it + w.max(1) > iteration && it <= iteration,
            ReplayRule::All => it <= iteration,
        };
        let out: Vec<&Episode> = self
            .groups
            .iter()
            .filter(|g| keep(g.0))
            .flat_map(|g| g.1.iter())
            .collect();
        if out.is_empty() {
            return Err(Error::EmptyBatch);
        }
        Ok(out)
    }
}

/// Stepsize rule; `i` counts iterations from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    Constant {
        h: f64,
    },
    /// `1/(α√i)`
    InvSqrt {
        alpha: f64,
    },
    /// `c/i`
    Harmonic {
        c: f64,
    },
    /// `min{h_max, radius/‖ξ‖}`
    Capped {
        h_max: f64,
        radius: f64,
    },
}

impl StepRule {
    pub fn step(&self, i: usize, xi_norm: f64) -> f64 {
        let fi = i.max(1) as f64;
        match *self {
            StepRule::Constant { h } => h,
            StepRule::InvSqrt { alpha } => 1.0 / (alpha * fi.sqrt()),
            StepRule::Harmonic { c } => c / fi,
            StepRule::Capped { h_max, radius } => {
                if xi_norm > 0.0 {
                    h_max.min(radius / xi_norm)
                } else {
                    h_max
                }
            }
        }
    }

    pub fn vanishing(&self) -> bool {
        matches!(self, StepRule::InvSqrt { .. } | StepRule::Harmonic { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineSpec {
    Zero,
    /// Binned running mean of reward-to-go over the state box.
    Binned {
        low: Vec<f64>,
        high: Vec<f64>,
        bins: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub episodes_per_iter: usize,
    pub replay: ReplayRule,
    pub alpha: f64,
    pub beta: Beta,
    pub step: StepRule,
    pub bound_c: f64,
    pub clip: Option<ClipRange>,
    pub baseline: BaselineSpec,
    pub delta: f64,
    pub seed: u64,
    /// Minibatch updates per iteration.
    pub updates_per_iter: usize,
    /// Write a checkpoint every this many iterations (0 disables).
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        if !(self.bound_c > 0.0) {
            return Err(Error::InvalidArgument("bound_c must be positive".into()));
        }
        if self.episodes_per_iter == 0 || self.updates_per_iter == 0 {
            return Err(Error::InvalidArgument(
                "episodes_per_iter and updates_per_iter must be at least 1".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument("delta must lie in (0, 1)".into()));
        }
        if let ReplayRule::Window(0) = self.replay {
            return Err(Error::InvalidArgument(
                "replay window must be at least 1".into(),
            ));
        }
        self.beta.validate()
    }
}

/// One update of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iter: usize,
    pub update: usize,
    pub h: f64,
    /// `V̂₀..V̂_q` at the iterate before the update.
    pub values: Vec<f64>,
    pub xi_norm: f64,
    /// Multipliers, the bounding constraint last.
    pub multipliers: Vec<f64>,
    pub status: SolveStatus,
    pub kkt_residual: f64,
    pub theta_norm_sq: f64,
    pub n_bar: usize,
    pub n_tilde: usize,
    pub margins: Vec<f64>,
    /// Joint per-step confidence; `None` for clipped runs.
    pub confidence: Option<f64>,
    pub frozen: bool,
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub rows: Vec<MetricsRow>,
    pub final_theta: Vec<f64>,
    pub events: Vec<String>,
    /// Episodes generated at each iteration.
    pub batch_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<P> {
    pub version: u32,
    pub iteration: usize,
    pub policy: P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest<C> {
    pub package: String,
    pub version: String,
    pub metrics_schema: String,
    pub parallel: bool,
    pub seed: u64,
    pub config: C,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(seed: u64, config: C) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            metrics_schema: METRICS_SCHEMA.trim_start_matches("# ").into(),
            parallel: crate::par::is_parallel(),
            seed,
            config,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Streams rows to `metrics.csv`; wall-clock times go to `timings.csv` so the
/// metrics file is reproducible byte for byte.
struct MetricsWriter {
    metrics: csv::Writer<fs::File>,
    timings: csv::Writer<fs::File>,
}

impl MetricsWriter {
    fn create(dir: &Path, q: usize) -> Result<Self> {
        let mut f = fs::File::create(dir.join("metrics.csv"))?;
        writeln!(f, "{METRICS_SCHEMA}")?;
        let mut metrics = csv::Writer::from_writer(f);
        let mut header: Vec<String> = ["iter", "update", "h"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..=q).map(|j| format!("v_{j}")));
        header.push("xi_norm".into());
        header.extend((1..=q + 1).map(|j| format!("u_{j}")));
        header.extend(
            [
                "status",
                "kkt_residual",
                "theta_norm_sq",
                "n_bar",
                "n_tilde",
            ]
            .map(String::from),
        );
        header.extend((1..=q).map(|j| format!("margin_{j}")));
        header.extend(["confidence", "frozen", "projected"].map(String::from));
        metrics.write_record(&header).map_err(csv_err)?;
        metrics.flush()?;
        let mut timings = csv::Writer::from_writer(fs::File::create(dir.join("timings.csv"))?);
        timings.write_record(["iter", "wall_ms"]).map_err(csv_err)?;
        Ok(Self { metrics, timings })
    }

    fn row(&mut self, r: &MetricsRow) -> Result<()> {
        let mut rec = vec![r.iter.to_string(), r.update.to_string(), r.h.to_string()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        rec.push(r.xi_norm.to_string());
        rec.extend(r.multipliers.iter().map(|v| v.to_string()));
        rec.push(r.status.to_string());
        rec.push(r.kkt_residual.to_string());
        rec.push(r.theta_norm_sq.to_string());
        rec.push(r.n_bar.to_string());
        rec.push(r.n_tilde.to_string());
        rec.extend(r.margins.iter().map(|v| v.to_string()));
        rec.push(fmt_opt(r.confidence));
        rec.push((r.frozen as u8).to_string());
        rec.push((r.projected as u8).to_string());
        self.metrics.write_record(&rec).map_err(csv_err)?;
        self.metrics.flush()?;
        Ok(())
    }

    fn timing(&mut self, iter: usize, ms: f64) -> Result<()> {
        self.timings
            .write_record([iter.to_string(), format!("{ms:.3}")])
            .map_err(csv_err)?;
        self.timings.flush()?;
        Ok(())
    }
}

/// Quantities fixed for a run that certificates need.
struct CertContext {
    l_j: Vec<f64>,
    b_j: Vec<f64>,
    log_nu: f64,
    b_tilde: f64,
    gamma: f64,
    horizon: usize,
}

fn make_baseline(spec: &BaselineSpec, num_rewards: usize) -> Option<BinnedBaseline> {
    match spec {
        BaselineSpec::Zero => None,
        BaselineSpec::Binned { low, high, bins } => Some(BinnedBaseline::new(
            low.clone(),
            high.clone(),
            bins.clone(),
            num_rewards,
        )),
    }
}

/// Contiguous, nearly equal chunks in batch order.
fn minibatches<'a>(batch: &[&'a Episode], m: usize) -> Vec<Vec<&'a Episode>> {
    let m = m.min(batch.len()).max(1);
    let base = batch.len() / m;
    let extra = batch.len() % m;
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    for k in 0..m {
        let len = base + usize::from(k < extra);
        out.push(batch[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Runs the loop. With `out` set, writes `manifest.json` (first), streams
/// `metrics.csv`, and writes checkpoints under `checkpoints/`.
pub fn train<E, P, C>(
    config: &TrainConfig,
    env: &E,
    initial: &P,
    out: Option<(&Path, &C)>,
) -> Result<TrainRun>
where
    E: Cmdp + ?Sized,
    P: Policy + Serialize,
    C: Serialize,
{
    config.validate()?;
    let theta0 = initial.params();
    if norm_sq(theta0) > config.bound_c {
        return Err(Error::InvalidArgument(format!(
            "initial parameters violate the bound: ‖θ‖² = {} > C = {}",
            norm_sq(theta0),
            config.bound_c
        )));
    }
    let nr = env.num_rewards();
    let q = nr - 1;
    let gamma = env.gamma();
    let horizon = env.horizon();
    let mut writer = match out {
        Some((dir, echo)) => {
            fs::create_dir_all(dir.join("checkpoints"))?;
            write_json(
                &dir.join("manifest.json"),
                &Manifest::new(config.seed, echo),
            )?;
            Some((dir.to_path_buf(), MetricsWriter::create(dir, q)?))
        }
        None => None,
    };
    let lb = initial.lipschitz_bounds();
    let bounds = env.reward_bounds();
    let ctx = CertContext {
        l_j: (1..nr)
            .map(|j| certify::lipschitz_l_j(bounds[j], lb.l, lb.b_tilde, gamma, horizon))
            .collect(),
        b_j: bounds.clone(),
        log_nu: initial.log_nu(),
        b_tilde: lb.b_tilde,
        gamma,
        horizon,
    };
    let mut policy = initial.clone();
    let mut baseline = make_baseline(&config.baseline, nr);
    let mut buffer = ReplayBuffer::new(config.replay.capacity());
    let mut run = TrainRun {
        rows: Vec::new(),
        final_theta: policy.params().to_vec(),
        events: Vec::new(),
        batch_sizes: Vec::new(),
    };
    let solver = SolverOptions::default();

    for it in 1..=config.iterations {
        let started = Instant::now();
        let tag = BehaviorTag {
            iteration: it,
            theta: Arc::new(policy.params().to_vec()),
        };
        let fresh = crate::par::map_indexed(config.episodes_per_iter, |n| {
            rollout(
                env,
                &policy,
                tag.clone(),
                n,
                &mut episode_rng(config.seed, it as u64, n as u64),
            )
        });
        let fresh: Vec<Episode> = match fresh.into_iter().collect::<Result<Vec<_>>>() {
            Ok(v) => v,
            Err(e) => return abort(&mut writer, &policy, it, &mut run, e),
        };
        run.batch_sizes.push(fresh.len());
        buffer.push(it, fresh);
        let batch = buffer.select(it, config.replay)?;
        for (u, mini) in minibatches(&batch, config.updates_per_iter)
            .iter()
            .enumerate()
        {
            let bl: &dyn Baseline = match &baseline {
                Some(b) => b,
                None => &ZeroBaseline,
            };
            let est = match estimate::estimate_all(mini, &policy, nr, gamma, bl, config.clip) {
                Ok(e)
                    if e.values.iter().all(|v| v.is_finite())
                        && e.gradients.iter().all(|g| all_finite(g)) =>
                {
                    e
                }
                Ok(_) => {
                    let e = Error::NonFiniteAt {
                        iteration: it,
                        what: "estimates".into(),
                    };
                    return abort(&mut writer, &policy, it, &mut run, e);
                }
                Err(e) => return abort(&mut writer, &policy, it, &mut run, e),
            };
            let b_hat = bl.bound();
            let row = update(
                config,
                &ctx,
                &mut policy,
                &est,
                b_hat,
                it,
                u + 1,
                solver,
                &mut run.events,
            )?;
            if let Some((_, w)) = writer.as_mut() {
                w.row(&row)?;
            }
            run.rows.push(row);
        }
        if let Some(b) = baseline.as_mut() {
            let fresh: Vec<&Episode> = buffer.select(it, ReplayRule::Current)?;
            b.refit(&fresh, gamma);
        }
        if let Some((dir, w)) = writer.as_mut() {
            w.timing(it, started.elapsed().as_secs_f64() * 1e3)?;
            if config.checkpoint_every > 0 && it % config.checkpoint_every == 0 {
                write_checkpoint(dir, &policy, it)?;
            }
        }
    }
    if let Some((dir, _)) = writer.as_ref() {
        write_checkpoint(dir, &policy, config.iterations)?;
        fs::write(
            dir.join("events.log"),
            run.events.join("\n") + if run.events.is_empty() { "" } else { "\n" },
        )?;
    }
    run.final_theta = policy.params().to_vec();
    Ok(run)
}

#[allow(clippy::too_many_arguments)]
fn update<P: Policy>(
    config: &TrainConfig,
    ctx: &CertContext,
    policy: &mut P,
    est: &EstimateBundle,
    b_hat: f64,
    it: usize,
    u: usize,
    solver: SolverOptions,
    events: &mut Vec<String>,
) -> Result<MetricsRow> {
    let theta = policy.params().to_vec();
    let beta = config.beta.eval(&theta);
    let problem = qcqp::build_subproblem(&theta, est, config.alpha, &config.beta, config.bound_c)?;
    let sol = qcqp::solve(&problem, solver);
    let q = est.num_constraints();
    let xi_norm = norm(&sol.xi);
    let mut row = MetricsRow {
        iter: it,
        update: u,
        h: 0.0,
        values: est.values.clone(),
        xi_norm,
        multipliers: sol.multipliers.clone(),
        status: sol.status,
        kkt_residual: sol.kkt_residual,
        theta_norm_sq: norm_sq(&theta),
        n_bar: est.on_policy_count,
        n_tilde: est.off_policy_count,
        margins: vec![f64::NAN; q],
        confidence: None,
        frozen: false,
        projected: false,
    };
    if sol.status == SolveStatus::Infeasible {
        row.frozen = true;
        row.xi_norm = 0.0;
        events.push(format!(
            "iteration {it} update {u}: subproblem infeasible, parameters frozen"
        ));
        return Ok(row);
    }
    if !all_finite(&sol.xi) {
        return Err(Error::NonFiniteAt {
            iteration: it,
            what: "direction".into(),
        });
    }
    let h = config.step.step(it, xi_norm);
    row.h = h;
    let cert = certificate(config, ctx, est, b_hat, h, beta, xi_norm, theta.len())?;
    row.margins = cert.constraints.iter().map(|c| c.margin).collect();
    if config.clip.is_none() {
        row.confidence = Some(cert.joint_confidence());
    }
    let mut next: Vec<f64> = theta.iter().zip(&sol.xi).map(|(t, x)| t + h * x).collect();
    let ns = norm_sq(&next);
    if ns > config.bound_c {
        // Only solver tolerance can push the step past the ball; pull it back.
        let s = (config.bound_c / ns).sqrt();
        next.iter_mut().for_each(|v| *v *= s);
        row.projected = true;
        events.push(format!(
            "iteration {it} update {u}: step overshot the bound by {:.3e}, projected",
            ns - config.bound_c
        ));
    }
    if !all_finite(&next) {
        return Err(Error::NonFiniteAt {
            iteration: it,
            what: "parameters".into(),
        });
    }
    policy.set_params(&next)?;
    Ok(row)
}

#[allow(clippy::too_many_arguments)]
fn certificate(
    config: &TrainConfig,
    ctx: &CertContext,
    est: &EstimateBundle,
    b_hat: f64,
    h: f64,
    beta: f64,
    xi_norm: f64,
    dim: usize,
) -> Result<SafetyCertificate> {
    let q = est.num_constraints();
    let mut constants = Vec::with_capacity(q);
    for j in 1..=q {
        let c = estimate::stat_constants(
            &StatInputs {
                b_j: ctx.b_j[j],
                b_hat,
                gamma: ctx.gamma,
                horizon: ctx.horizon,
                log_nu: ctx.log_nu,
                b_tilde: ctx.b_tilde,
            },
            None,
        )?;
        constants.push(Constants {
            phi: c.phi,
            phi_bar: c.phi_bar,
            psi: c.psi,
            psi_bar: c.psi_bar,
        });
    }
    SafetyCertificate::new(
        StepInputs {
            h,
            alpha: config.alpha,
            beta,
            r_norm: xi_norm,
            delta: config.delta,
            dim,
            n_bar: est.on_policy_count,
            n_tilde: est.off_policy_count,
        },
        &est.values[1..],
        &ctx.l_j,
        &constants,
    )
}

fn write_checkpoint<P: Serialize>(dir: &Path, policy: &P, iteration: usize) -> Result<PathBuf> {
    let path = dir
        .join("checkpoints")
        .join(format!("iter_{iteration:06}.json"));
    write_json(
        &path,
        &Checkpoint {
            version: CHECKPOINT_VERSION,
            iteration,
            policy,
        },
    )?;
    Ok(path)
}

pub fn read_checkpoint<P: for<'de> Deserialize<'de>>(path: &Path) -> Result<Checkpoint<P>> {
    let text = fs::read_to_string(path)?;
    let c: Checkpoint<P> = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if c.version != CHECKPOINT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported checkpoint version {}",
            c.version
        )));
    }
    Ok(c)
}

fn abort<P: Policy + Serialize>(
    writer: &mut Option<(PathBuf, MetricsWriter)>,
    policy: &P,
    it: usize,
    run: &mut TrainRun,
    err: Error,
) -> Result<TrainRun> {
    run.events.push(format!("iteration {it}: aborted: {err}"));
    if let Some((dir, _)) = writer.as_ref() {
        write_checkpoint(dir, policy, it.saturating_sub(1))?;
        fs::write(dir.join("events.log"), run.events.join("\n") + "\n")?;
    }
    Err(match err {
        Error::NonFiniteAt { .. } => err,
        Error::NonFinite(what) => Error::NonFiniteAt {
            iteration: it,
            what,
        },
        other => other,
    })
}

/// Optional inputs for the iteration-count bound in the diagnostics report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationBoundInputs {
    pub kappa: f64,
    pub epsilon: f64,
    pub ell_hat: f64,
    pub sigma_bar: f64,
    pub epsilon_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `minₗ≤ᵢ ‖ξₗ‖²` over the logged updates.
    pub running_min_xi_sq: Vec<f64>,
    pub step_vanishes: bool,
    pub step_nonsummable: bool,
    /// Batch sizes never shrink and grow at least once.
    pub batch_grows: bool,
    pub iteration_bound: Option<f64>,
    pub flags: Vec<String>,
}

/// Checks a finished run against the hypotheses of the convergence result:
/// vanishing but nonsummable steps, and growing batches.
pub fn convergence_diagnostics(
    run: &TrainRun,
    config: &TrainConfig,
    num_constraints: usize,
    bound: Option<IterationBoundInputs>,
) -> ConvergenceReport {
    let mut running_min_xi_sq = Vec::with_capacity(run.rows.len());
    let mut best = f64::INFINITY;
    for r in &run.rows {
        best = best.min(r.xi_norm * r.xi_norm);
        running_min_xi_sq.push(best);
    }
    let step_vanishes = config.step.vanishing();
    // Every supported rule decays no faster than c/i.
    let step_nonsummable = true;
    let sizes = &run.batch_sizes;
    let batch_grows = sizes.windows(2).all(|w| w[1] >= w[0]) && sizes.first() < sizes.last();
    let mut flags = Vec::new();
    if !step_vanishes {
        flags.push("step-size hypothesis violated: h_i does not tend to 0".to_string());
    }
    if !batch_grows {
        flags.push("batch size does not grow: estimator error is not driven to 0".to_string());
    }
    let iteration_bound = bound.and_then(|b| {
        match certify::iteration_bound(
            b.kappa,
            b.epsilon,
            b.ell_hat,
            b.sigma_bar,
            num_constraints,
            b.epsilon_star,
        ) {
            Ok(v) => Some(v),
            Err(e) => {
                flags.push(format!("iteration bound unavailable: {e}"));
                None
            }
        }
    });
    ConvergenceReport {
        running_min_xi_sq,
        step_vanishes,
        step_nonsummable,
        batch_grows,
        iteration_bound,
        flags,
    }
}
