//! Multi-seed experiment runner, summaries and CSV/SVG artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{
    run_episode_dql, run_episode_erl, run_episode_pg, run_episode_tql, AgentConfig, EpisodeLog,
    QTable, ReplayBuffer,
};
use crate::checkpoint::{self, Checkpoint};
use crate::env::{ActionId, ControlSequence, EnvConfig, SpinEnv};
use crate::error::{Error, Result};
use crate::valuenet::{argmax, features, forward, init_network, NetworkParameters};

pub const CSV_HEADER: &str =
    "agent,seed,episode,steps,final_fidelity,best_fidelity,cumulative_reward,success";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Tql,
    Erl,
    Dql,
    Pg,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Tql, AgentKind::Erl, AgentKind::Dql, AgentKind::Pg];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Tql => "tql",
            AgentKind::Erl => "erl",
            AgentKind::Dql => "dql",
            AgentKind::Pg => "pg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn uses_table(self) -> bool {
        matches!(self, AgentKind::Tql | AgentKind::Erl)
    }

    fn uses_network(self) -> bool {
        !matches!(self, AgentKind::Tql)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub agent_kind: AgentKind,
    pub agent: AgentConfig,
    pub seeds: Vec<u64>,
    pub max_episodes: usize,
    /// Where per-seed checkpoints go. `None` keeps everything in memory.
    pub output_dir: Option<PathBuf>,
    pub save_checkpoints: bool,
    /// Fan seeds out across threads (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            agent_kind: AgentKind::Erl,
            agent: AgentConfig::default(),
            seeds: (1..=20).collect(),
            max_episodes: 500,
            output_dir: None,
            save_checkpoints: false,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if self.max_episodes == 0 {
            return Err(Error::invalid("max_episodes must be at least 1"));
        }
        if self.save_checkpoints && self.output_dir.is_none() {
            return Err(Error::invalid("checkpoints need an output directory"));
        }
        self.env.validate()?;
        self.agent.validate()
    }

    /// The agent configuration with its annealing span tied to `max_episodes`.
    fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            episodes: self.max_episodes,
            ..self.agent.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub logs: Vec<EpisodeLog>,
    pub episodes_to_success: Option<usize>,
    pub best_fidelity: f64,
    pub q_table: Option<QTable>,
    pub network: Option<NetworkParameters>,
}

impl RunResult {
    fn from_logs(seed: u64, logs: Vec<EpisodeLog>) -> Self {
        let episodes_to_success = logs.iter().find(|l| l.success).map(|l| l.episode);
        let best_fidelity = logs.iter().map(|l| l.best_fidelity).fold(0.0, f64::max);
        Self {
            seed,
            logs,
            episodes_to_success,
            best_fidelity,
            q_table: None,
            network: None,
        }
    }

    pub fn checkpoint(&self) -> Option<Checkpoint> {
        self.network.clone().map(|network| Checkpoint {
            network,
            q_table: self.q_table.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResults {
    pub kind: AgentKind,
    pub max_episodes: usize,
    pub runs: Vec<RunResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub agent_kind: AgentKind,
    pub runs: usize,
    pub mean_episodes_to_success: f64,
    pub success_rate: f64,
    pub mean_best_fidelity: f64,
}

/// Network seed derived from the run seed without consuming the run's RNG,
/// so the action-selection stream is the same for every agent kind.
fn network_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Mutable state of one learner, advanced one episode at a time.
pub struct Learner {
    kind: AgentKind,
    cfg: AgentConfig,
    env: SpinEnv,
    rng: ChaCha8Rng,
    q: QTable,
    net: NetworkParameters,
    trace: crate::valuenet::EligibilityTrace,
    replay: ReplayBuffer,
    episode: usize,
}

impl Learner {
    pub fn new(kind: AgentKind, env_cfg: &EnvConfig, cfg: &AgentConfig, seed: u64) -> Result<Self> {
        let env = SpinEnv::new(env_cfg.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = if kind.uses_table() && cfg.random_q_init {
            QTable::random(env_cfg.num_states(), &mut rng)
        } else {
            QTable::zeros(if kind.uses_table() { env_cfg.num_states() } else { 0 })
        };
        let net = init_network(&cfg.network, network_seed(seed))?;
        let trace = net.zero_trace();
        let replay = ReplayBuffer::new(if kind == AgentKind::Dql { cfg.replay_capacity } else { 1 });
        Ok(Self {
            kind,
            cfg: cfg.clone(),
            env,
            rng,
            q,
            net,
            trace,
            replay,
            episode: 0,
        })
    }

    pub fn next_episode(&mut self) -> Result<EpisodeLog> {
        self.episode += 1;
        let k = self.episode;
        let (env, rng, cfg) = (&mut self.env, &mut self.rng, &self.cfg);
        match self.kind {
            AgentKind::Tql => run_episode_tql(env, &mut self.q, cfg, k, rng),
            AgentKind::Erl => {
                run_episode_erl(env, &mut self.q, &mut self.net, &mut self.trace, cfg, k, rng)
            }
            AgentKind::Dql => run_episode_dql(env, &mut self.replay, &mut self.net, cfg, k, rng),
            AgentKind::Pg => run_episode_pg(env, &mut self.net, cfg, k, rng),
        }
    }

    pub fn episodes(&self) -> usize {
        self.episode
    }

    pub fn q_table(&self) -> Option<&QTable> {
        self.kind.uses_table().then_some(&self.q)
    }

    pub fn network(&self) -> Option<&NetworkParameters> {
        self.kind.uses_network().then_some(&self.net)
    }

    /// Greedy rollout of the current policy from the configured initial state.
    pub fn greedy_rollout(&self) -> Result<(ControlSequence, f64)> {
        match self.kind {
            AgentKind::Tql | AgentKind::Erl => greedy_rollout_table(self.env.config(), &self.q),
            AgentKind::Dql | AgentKind::Pg => greedy_rollout_network(self.env.config(), &self.net),
        }
    }

    fn into_result(self, seed: u64, logs: Vec<EpisodeLog>) -> RunResult {
        let mut r = RunResult::from_logs(seed, logs);
        if self.kind.uses_table() {
            r.q_table = Some(self.q);
        }
        if self.kind.uses_network() {
            r.network = Some(self.net);
        }
        r
    }
}

fn rollout(cfg: &EnvConfig, mut policy: impl FnMut(&SpinEnv) -> ActionId) -> Result<(ControlSequence, f64)> {
    let mut env = SpinEnv::new(cfg.clone())?;
    env.reset();
    let mut seq = Vec::new();
    let mut fidelity = env.fidelity();
    while !env.is_done() {
        let a = policy(&env);
        seq.push(a);
        fidelity = env.step(a)?.fidelity;
    }
    Ok((seq, fidelity))
}

/// Greedy rollout on a Q-table. Returns the sequence and its final fidelity.
pub fn greedy_rollout_table(cfg: &EnvConfig, q: &QTable) -> Result<(ControlSequence, f64)> {
    if q.num_states() != cfg.num_states() {
        return Err(Error::invalid(format!(
            "Q-table has {} states, grid has {}",
            q.num_states(),
            cfg.num_states()
        )));
    }
    rollout(cfg, |env| q.greedy(env.index()))
}

/// Greedy rollout on the argmax of the network outputs.
pub fn greedy_rollout_network(cfg: &EnvConfig, net: &NetworkParameters) -> Result<(ControlSequence, f64)> {
    rollout(cfg, |env| ActionId::ALL[argmax(&forward(net, &features(env.state())))])
}

fn train_seed(cfg: &ExperimentConfig, agent: &AgentConfig, seed: u64) -> Result<RunResult> {
    let mut learner = Learner::new(cfg.agent_kind, &cfg.env, agent, seed)?;
    let logs = (0..cfg.max_episodes)
        .map(|_| learner.next_episode())
        .collect::<Result<Vec<_>>>()?;
    Ok(learner.into_result(seed, logs))
}

fn check_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

pub fn checkpoint_path(dir: &Path, kind: AgentKind, seed: u64) -> PathBuf {
    dir.join(format!("{}-seed{seed}.erlw", kind.name()))
}

/// Trains every seed for `max_episodes` episodes. Results come back in seed
/// order whether or not the seeds ran concurrently.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output_dir {
        check_writable(dir)?;
    }
    let agent = cfg.agent_config();
    let results = map_seeds(cfg, |seed| train_seed(cfg, &agent, seed))?;
    if cfg.save_checkpoints {
        let dir = cfg.output_dir.as_deref().expect("validated");
        for r in &results {
            if let Some(ck) = r.checkpoint() {
                checkpoint::save(&ck, &checkpoint_path(dir, cfg.agent_kind, r.seed))?;
            }
        }
    }
    Ok(results)
}

#[cfg(feature = "parallel")]
fn map_seeds<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<RunResult>>
where
    F: Fn(u64) -> Result<RunResult> + Sync,
{
    use rayon::prelude::*;
    if cfg.parallel {
        cfg.seeds.par_iter().map(|&s| f(s)).collect()
    } else {
        cfg.seeds.iter().map(|&s| f(s)).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn map_seeds<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<RunResult>>
where
    F: Fn(u64) -> Result<RunResult>,
{
    cfg.seeds.iter().map(|&s| f(s)).collect()
}

/// Runs every agent kind on the same environment, seeds and episode budget.
pub fn run_comparison(cfg: &ExperimentConfig, kinds: &[AgentKind]) -> Result<Vec<AgentResults>> {
    kinds
        .iter()
        .map(|&kind| {
            let sub = ExperimentConfig {
                agent_kind: kind,
                ..cfg.clone()
            };
            Ok(AgentResults {
                kind,
                max_episodes: cfg.max_episodes,
                runs: run_experiment(&sub)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvergenceRule {
    pub check_every: usize,
    pub patience: usize,
    pub max_episodes: usize,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        Self {
            check_every: 10,
            patience: 10,
            max_episodes: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    pub episodes: usize,
    pub converged: bool,
    pub sequence: ControlSequence,
    pub fidelity: f64,
    pub q_table: Option<QTable>,
    pub network: Option<NetworkParameters>,
}

/// Trains `min_episodes` episodes, then keeps training until the greedy
/// rollout's action sequence has not changed over `patience` consecutive
/// checks, or the episode cap is hit.
pub fn train_until_converged(
    kind: AgentKind,
    env: &EnvConfig,
    agent: &AgentConfig,
    seed: u64,
    min_episodes: usize,
    rule: ConvergenceRule,
) -> Result<Converged> {
    if rule.check_every == 0 {
        return Err(Error::invalid("check_every must be positive"));
    }
    let mut learner = Learner::new(kind, env, agent, seed)?;
    let mut last: Option<ControlSequence> = None;
    let mut stable = 0;
    let mut converged = false;
    while learner.episodes() < rule.max_episodes.max(min_episodes) {
        learner.next_episode()?;
        let k = learner.episodes();
        if k < min_episodes || k % rule.check_every != 0 {
            continue;
        }
        let (seq, _) = learner.greedy_rollout()?;
        if last.as_ref() == Some(&seq) {
            stable += 1;
        } else {
            stable = 0;
            last = Some(seq);
        }
        if stable >= rule.patience {
            converged = true;
            break;
        }
    }
    let (sequence, fidelity) = learner.greedy_rollout()?;
    Ok(Converged {
        episodes: learner.episodes(),
        converged,
        sequence,
        fidelity,
        q_table: learner.q_table().cloned(),
        network: learner.network().cloned(),
    })
}

/// Round-trips a value through the CSV's fixed-point text so summaries
/// recomputed from the file agree bit-for-bit.
fn quantize(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

pub fn summarize(results: &[AgentResults]) -> Result<Vec<SummaryRow>> {
    if results.is_empty() {
        return Err(Error::invalid("nothing to summarize"));
    }
    results
        .iter()
        .map(|group| {
            if group.runs.is_empty() {
                return Err(Error::invalid(format!("no runs for {}", group.kind.name())));
            }
            let n = group.runs.len() as f64;
            let mut episodes = 0.0;
            let mut successes = 0usize;
            let mut best = 0.0;
            for r in &group.runs {
                match r.episodes_to_success {
                    Some(k) => {
                        episodes += k as f64;
                        successes += 1;
                    }
                    None => episodes += group.max_episodes as f64,
                }
                best += quantize(r.best_fidelity);
            }
            Ok(SummaryRow {
                agent_kind: group.kind,
                runs: group.runs.len(),
                mean_episodes_to_success: episodes / n,
                success_rate: successes as f64 / n,
                mean_best_fidelity: best / n,
            })
        })
        .collect()
}

pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::from("agent  runs  mean_episodes  success_rate  mean_best_fidelity\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<5}  {:>4}  {:>13.2}  {:>12.3}  {:>18.6}",
            r.agent_kind.name(),
            r.runs,
            r.mean_episodes_to_success,
            r.success_rate,
            r.mean_best_fidelity
        );
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("agent,runs,mean_episodes_to_success,success_rate,mean_best_fidelity\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            r.agent_kind.name(),
            r.runs,
            r.mean_episodes_to_success,
            r.success_rate,
            r.mean_best_fidelity
        );
    }
    out
}

pub fn csv_string(results: &[AgentResults]) -> String {
    let mut out = String::with_capacity(64 * (1 + results.iter().map(|g| g.runs.len() * g.max_episodes).sum::<usize>()));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for group in results {
        for run in &group.runs {
            for l in &run.logs {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.6},{:.6},{:.6},{}",
                    group.kind.name(),
                    run.seed,
                    l.episode,
                    l.steps,
                    l.final_fidelity,
                    l.best_fidelity,
                    l.cumulative_reward,
                    u8::from(l.success)
                );
            }
        }
    }
    out
}

pub fn emit_csv(results: &[AgentResults], path: &Path) -> Result<()> {
    fs::write(path, csv_string(results)).map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`emit_csv`] back into per-agent results. Rows
/// must be grouped by agent, then seed, in episode order.
pub fn parse_csv(text: &str, max_episodes: usize) -> Result<Vec<AgentResults>> {
    let bad = |line: usize, why: &str| Error::Config(format!("csv line {line}: {why}"));
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    let mut groups: Vec<AgentResults> = Vec::new();
    let mut pending: Vec<EpisodeLog> = Vec::new();
    let mut current: Option<(AgentKind, u64)> = None;
    let flush = |groups: &mut Vec<AgentResults>, key: Option<(AgentKind, u64)>, logs: &mut Vec<EpisodeLog>| {
        if let Some((kind, seed)) = key {
            let run = RunResult::from_logs(seed, std::mem::take(logs));
            match groups.last_mut() {
                Some(g) if g.kind == kind => g.runs.push(run),
                _ => groups.push(AgentResults {
                    kind,
                    max_episodes,
                    runs: vec![run],
                }),
            }
        }
    };
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(n, "expected 8 fields"));
        }
        let kind = AgentKind::parse(f[0]).ok_or_else(|| bad(n, "unknown agent"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(n, "bad integer"));
        let seed = f[1].parse::<u64>().map_err(|_| bad(n, "bad seed"))?;
        let log = EpisodeLog {
            episode: int(f[2])?,
            steps: int(f[3])?,
            final_fidelity: num(f[4])?,
            best_fidelity: num(f[5])?,
            cumulative_reward: num(f[6])?,
            success: match f[7] {
                "1" => true,
                "0" => false,
                _ => return Err(bad(n, "success must be 0 or 1")),
            },
        };
        if current != Some((kind, seed)) {
            flush(&mut groups, current, &mut pending);
            current = Some((kind, seed));
        }
        pending.push(log);
    }
    flush(&mut groups, current, &mut pending);
    Ok(groups)
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 440.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 120.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

fn agent_color(kind: AgentKind) -> &'static str {
    match kind {
        AgentKind::Tql => "#1f77b4",
        AgentKind::Erl => "#d62728",
        AgentKind::Dql => "#2ca02c",
        AgentKind::Pg => "#9467bd",
    }
}

/// Mean best fidelity per episode over the group's seeds.
pub fn mean_curve(group: &AgentResults) -> Vec<f64> {
    let len = group.runs.iter().map(|r| r.logs.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = group
                .runs
                .iter()
                .filter_map(|r| r.logs.get(i).map(|l| l.best_fidelity))
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

pub fn svg_string(results: &[AgentResults]) -> String {
    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let curves: Vec<(AgentKind, Vec<f64>)> = results.iter().map(|g| (g.kind, mean_curve(g))).collect();
    let episodes = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0).max(1);
    let x_of = |ep: usize| {
        if episodes == 1 {
            MARGIN_L + plot_w / 2.0
        } else {
            MARGIN_L + plot_w * (ep - 1) as f64 / (episodes - 1) as f64
        }
    };
    let y_of = |f: f64| MARGIN_T + plot_h * (1.0 - f.clamp(0.0, 1.0));
    let seeds = results.iter().map(|g| g.runs.len()).max().unwrap_or(0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r##"<rect width="{SVG_W}" height="{SVG_H}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">Best fidelity per episode (mean over {seeds} seeds)</text>"#,
        MARGIN_L + plot_w / 2.0
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let y = y_of(f);
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_L:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{f:.1}</text>"#,
            MARGIN_L - 6.0,
            y + 4.0
        );
    }
    let ticks = 5.min(episodes.saturating_sub(1)).max(1);
    for i in 0..=ticks {
        let ep = if episodes == 1 { 1 } else { 1 + (episodes - 1) * i / ticks };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{ep}</text>"#,
            x_of(ep),
            MARGIN_T + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN_L:.2}" y="{MARGIN_T:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Episode</text>"#,
        MARGIN_L + plot_w / 2.0,
        SVG_H - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Fidelity</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );
    for (i, (kind, curve)) in curves.iter().enumerate() {
        let points: Vec<String> = curve
            .iter()
            .enumerate()
            .map(|(j, &f)| format!("{:.2},{:.2}", x_of(j + 1), y_of(f)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-agent="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            kind.name(),
            agent_color(*kind),
            points.join(" ")
        );
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_L + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#,
            lx + 20.0,
            agent_color(*kind)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            kind.name().to_uppercase()
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(results: &[AgentResults], path: &Path) -> Result<()> {
    fs::write(path, svg_string(results)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(episode: usize, best: f64, success: bool) -> EpisodeLog {
        EpisodeLog {
            episode,
            steps: 3,
            final_fidelity: best,
            best_fidelity: best,
            cumulative_reward: 30.0,
            success,
        }
    }

    fn run(seed: u64, bests: &[f64], threshold: f64) -> RunResult {
        RunResult::from_logs(
            seed,
            bests
                .iter()
                .enumerate()
                .map(|(i, &b)| log(i + 1, b, b >= threshold))
                .collect(),
        )
    }

    fn group(kind: AgentKind, max_episodes: usize, runs: Vec<RunResult>) -> AgentResults {
        AgentResults { kind, max_episodes, runs }
    }

    fn small(kind: AgentKind) -> ExperimentConfig {
        ExperimentConfig {
            agent_kind: kind,
            seeds: vec![3, 1, 2],
            max_episodes: 4,
            env: EnvConfig {
                max_steps: 20,
                ..EnvConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn episodes_to_success_is_first_success() {
        let r = run(1, &[0.2, 0.995, 0.4, 0.999], 0.99);
        assert_eq!(r.episodes_to_success, Some(2));
        assert_eq!(r.best_fidelity, 0.999);
    }

    #[test]
    fn summary_examples() {
        let mut bests = vec![0.5; 41];
        bests.push(0.99);
        let rows = summarize(&[group(AgentKind::Erl, 500, vec![run(1, &bests, 0.99)])]).unwrap();
        assert_eq!(rows[0].mean_episodes_to_success, 42.0);
        assert_eq!(rows[0].success_rate, 1.0);
        assert_eq!(rows[0].mean_best_fidelity, 0.99);

        let rows = summarize(&[group(AgentKind::Tql, 500, vec![run(1, &[0.3; 5], 0.99)])]).unwrap();
        assert_eq!(rows[0].success_rate, 0.0);
        assert_eq!(rows[0].mean_episodes_to_success, 500.0);

        let mut a = vec![0.0; 39];
        a.push(1.0);
        let mut b = vec![0.0; 43];
        b.push(1.0);
        let rows = summarize(&[group(AgentKind::Erl, 500, vec![run(1, &a, 0.99), run(2, &b, 0.99)])]).unwrap();
        assert_eq!(rows[0].mean_episodes_to_success, 42.0);

        assert!(summarize(&[]).is_err());
        assert!(summarize(&[group(AgentKind::Pg, 5, vec![])]).is_err());
    }

    #[test]
    fn csv_shape() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        let g = group(AgentKind::Tql, 500, vec![run(1, &[0.25; 500], 0.99), run(2, &[0.25; 500], 0.99)]);
        let text = csv_string(&[g]);
        assert_eq!(text.lines().count(), 1001);
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().nth(1).unwrap(), "tql,1,1,3,0.250000,0.250000,30.000000,0");
    }

    #[test]
    fn svg_flat_run_is_horizontal() {
        let g = group(AgentKind::Erl, 10, vec![run(1, &[0.5; 10], 0.99)]);
        let svg = svg_string(&[g]);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let line = doc
            .descendants()
            .find(|n| n.has_tag_name("polyline"))
            .unwrap();
        let ys: Vec<&str> = line
            .attribute("points")
            .unwrap()
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        let expected = format!("{:.2}", MARGIN_T + (SVG_H - MARGIN_T - MARGIN_B) * 0.5);
        assert_eq!(ys.len(), 10);
        assert!(ys.iter().all(|y| *y == expected));
        let texts: Vec<&str> = doc.descendants().filter_map(|n| n.text()).collect();
        assert!(texts.contains(&"Episode") && texts.contains(&"Fidelity"));
    }

    #[test]
    fn svg_single_episode_and_empty() {
        for groups in [vec![], vec![group(AgentKind::Pg, 1, vec![run(4, &[0.7], 0.99)])]] {
            roxmltree::Document::parse(&svg_string(&groups)).unwrap();
        }
    }

    #[test]
    fn results_in_seed_order_and_deterministic() {
        for kind in AgentKind::ALL {
            let cfg = small(kind);
            let a = run_experiment(&cfg).unwrap();
            assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![3, 1, 2]);
            let serial = run_experiment(&ExperimentConfig { parallel: false, ..cfg.clone() }).unwrap();
            assert_eq!(a, serial);
            assert!(a.iter().all(|r| r.logs.len() == 4));
        }
    }

    #[test]
    fn csv_round_trip_reproduces_summary() {
        let cfg = small(AgentKind::Erl);
        let groups = run_comparison(&cfg, &AgentKind::ALL).unwrap();
        let text = csv_string(&groups);
        let parsed = parse_csv(&text, cfg.max_episodes).unwrap();
        assert_eq!(summarize(&parsed).unwrap(), summarize(&groups).unwrap());
        assert_eq!(csv_string(&parsed), text);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(AgentKind::Tql);
        cfg.seeds.clear();
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small(AgentKind::Tql);
        cfg.max_episodes = 0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn unwritable_output_dir_fails_before_training() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain-file");
        fs::write(&file, b"x").unwrap();
        let cfg = ExperimentConfig {
            output_dir: Some(file.join("sub")),
            max_episodes: 1_000_000,
            ..small(AgentKind::Erl)
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::Io { .. })));
    }

    #[test]
    fn checkpoints_written_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            output_dir: Some(dir.path().to_path_buf()),
            save_checkpoints: true,
            ..small(AgentKind::Erl)
        };
        let results = run_experiment(&cfg).unwrap();
        for r in &results {
            let ck = checkpoint::load(&checkpoint_path(dir.path(), AgentKind::Erl, r.seed)).unwrap();
            assert_eq!(Some(ck), r.checkpoint());
        }
    }

    #[test]
    fn tql_runs_have_no_checkpoint() {
        let r = run_experiment(&small(AgentKind::Tql)).unwrap();
        assert!(r[0].checkpoint().is_none() && r[0].q_table.is_some());
    }

    #[test]
    fn convergence_stops_on_stable_sequence() {
        let env = EnvConfig {
            max_steps: 5,
            ..EnvConfig::default()
        };
        let agent = AgentConfig {
            epsilon0: 0.0,
            ..AgentConfig::default()
        };
        let rule = ConvergenceRule {
            check_every: 1,
            patience: 3,
            max_episodes: 200,
        };
        let c = train_until_converged(AgentKind::Tql, &env, &agent, 1, 2, rule).unwrap();
        assert!(c.converged);
        assert!(c.episodes <= 200);
        assert_eq!(c.sequence.len(), 5);
        let (seq, f) = greedy_rollout_table(&env, c.q_table.as_ref().unwrap()).unwrap();
        assert_eq!((seq, f), (c.sequence, c.fidelity));
    }
}
