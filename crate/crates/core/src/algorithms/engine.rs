use rand::Rng;

use super::{
    eliminate, fed_sel, quban, Algorithm, ArmRound, RoundRecord, RunOptions, StopReason,
    TrialConfig, TrialMetrics, TrialOutput, Trajectory, BOOTSTRAP_EPSILON,
};
use crate::bandit::BanditInstance;
use crate::confidence::{quant_interval, u_prime, ArmBelief, ConfidenceState, RoundWidths};
use crate::error::{param, Error, Result};
use crate::protocol::{Schedule, UplinkMessage};
use crate::quantizer::{dec, enc, BitString, Interval};
use crate::rng::{self, TrialRng};

/// What an agent knows about its own arm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentState {
    pub pulls_total: u64,
    pub running_sum: f64,
    pub last_batch_sum: f64,
    pub last_batch_len: u64,
}

impl AgentState {
    pub fn pull<R: Rng + ?Sized>(
        &mut self,
        instance: &BanditInstance,
        arm: usize,
        n: u64,
        rng: &mut R,
    ) -> Result<()> {
        let s = instance.sample_batch_sum(arm, n, rng)?;
        self.running_sum += s;
        self.pulls_total += n;
        self.last_batch_sum = s;
        self.last_batch_len = n;
        Ok(())
    }

    pub fn mu_hat(&self) -> f64 {
        self.running_sum / self.pulls_total as f64
    }

    pub fn batch_mean(&self) -> f64 {
        self.last_batch_sum / self.last_batch_len as f64
    }
}

struct Report {
    mu_tilde: f64,
    payload: Option<BitString>,
    agent_interval: Option<Interval>,
    learner_interval: Option<Interval>,
}

impl Report {
    fn raw(mu: f64) -> Self {
        Self { mu_tilde: mu, payload: None, agent_interval: None, learner_interval: None }
    }
}

/// Shared constants of the widths `U'`.
#[derive(Clone, Copy)]
struct WidthParams {
    delta: f64,
    k: usize,
    sigma: f64,
}

impl WidthParams {
    fn u_prime(&self, t: u64) -> Result<f64> {
        u_prime(t, self.delta, self.k, self.sigma)
    }
}

/// How one algorithm moves a mean across the uplink.
trait Channel {
    /// Called once per round before any agent reports.
    fn widths(&mut self, round: u32, t: u64) -> Result<RoundWidths>;

    /// Agent `arm` encodes; the learner decodes against `belief` (its state
    /// after the previous round).
    fn report(
        &mut self,
        round: u32,
        t: u64,
        arm: usize,
        agent: &AgentState,
        belief: &ArmBelief,
        widths: RoundWidths,
    ) -> Result<Report>;
}

struct Unquantized {
    params: WidthParams,
}

impl Channel for Unquantized {
    fn widths(&mut self, _round: u32, t: u64) -> Result<RoundWidths> {
        let u = self.params.u_prime(t)?;
        Ok(RoundWidths { u_prime: u, u })
    }

    fn report(&mut self, _: u32, _: u64, _: usize, agent: &AgentState, _: &ArmBelief, _: RoundWidths) -> Result<Report> {
        Ok(Report::raw(agent.mu_hat()))
    }
}

struct FedSel {
    params: WidthParams,
    support: Interval,
}

impl Channel for FedSel {
    fn widths(&mut self, _round: u32, t: u64) -> Result<RoundWidths> {
        let u = self.params.u_prime(t)?;
        Ok(RoundWidths { u_prime: u, u: 1.5 * u })
    }

    fn report(&mut self, _: u32, _: u64, _: usize, agent: &AgentState, _: &ArmBelief, w: RoundWidths) -> Result<Report> {
        let bins = fed_sel::bin_count(&self.support, w.u_prime)?;
        let s = fed_sel::encode(agent.mu_hat(), &self.support, bins)?;
        let mu = fed_sel::decode(&s, &self.support, bins)?;
        Ok(Report {
            mu_tilde: mu,
            payload: Some(s),
            agent_interval: Some(self.support),
            learner_interval: Some(self.support),
        })
    }
}

/// Per-arm state of the QuBan-style grid; agent and learner each keep a copy.
#[derive(Clone, Copy)]
struct GridMirror {
    estimate: f64,
    weighted_sum: f64,
}

struct Quban {
    params: WidthParams,
    epsilon: f64,
    learner: Vec<GridMirror>,
    agents: Vec<GridMirror>,
    dither: Vec<TrialRng>,
}

impl GridMirror {
    fn apply(&mut self, q: f64, batch: u64, t: u64) {
        self.weighted_sum += batch as f64 * q;
        self.estimate = self.weighted_sum / t as f64;
    }
}

impl Channel for Quban {
    fn widths(&mut self, _round: u32, t: u64) -> Result<RoundWidths> {
        let u = self.params.u_prime(t)?;
        Ok(RoundWidths { u_prime: u, u: u * quban::width_factor(self.params.sigma, self.epsilon) })
    }

    fn report(&mut self, _: u32, t: u64, arm: usize, agent: &AgentState, _: &ArmBelief, _: RoundWidths) -> Result<Report> {
        let b = agent.last_batch_len;
        let step = self.epsilon / (b as f64).sqrt();
        let mirror = &mut self.agents[arm];
        let z = (agent.batch_mean() - mirror.estimate) / step;
        let k = quban::stochastic_index(z, &mut self.dither[arm])?;
        let s = quban::encode_index(k);
        mirror.apply(mirror.estimate + k as f64 * step, b, t);

        let learner = &mut self.learner[arm];
        let k = quban::decode_payload(&s)?;
        learner.apply(learner.estimate + k as f64 * step, b, t);
        Ok(Report { mu_tilde: learner.estimate, payload: Some(s), agent_interval: None, learner_interval: None })
    }
}

struct IcqAgent {
    conf: ConfidenceState,
    mirror: ArmBelief,
}

struct Icq {
    params: WidthParams,
    bits: u32,
    learner: ConfidenceState,
    agents: Vec<IcqAgent>,
    /// Unbounded rewards: round 1 goes over a fixed grid instead.
    bootstrap: bool,
}

impl Icq {
    fn bootstrap_width(&self, t: u64) -> Result<f64> {
        let u = self.params.u_prime(t)?;
        let e1 = BOOTSTRAP_EPSILON / 2.0 + u;
        Ok(u + e1)
    }
}

impl Channel for Icq {
    fn widths(&mut self, round: u32, t: u64) -> Result<RoundWidths> {
        if self.bootstrap && round == 1 {
            let u = self.bootstrap_width(t)?;
            self.learner.advance_to(u);
            return Ok(RoundWidths { u_prime: self.params.u_prime(t)?, u });
        }
        self.learner.advance(t)
    }

    fn report(
        &mut self,
        round: u32,
        t: u64,
        arm: usize,
        agent: &AgentState,
        belief: &ArmBelief,
        w: RoundWidths,
    ) -> Result<Report> {
        if self.bootstrap && round == 1 {
            let u = self.bootstrap_width(t)?;
            let k = quban::nearest_index(agent.mu_hat() / BOOTSTRAP_EPSILON)?;
            let s = quban::encode_index(k);
            let a = &mut self.agents[arm];
            a.conf.advance_to(u);
            a.mirror.update(k as f64 * BOOTSTRAP_EPSILON, u);
            let mu = quban::decode_payload(&s)? as f64 * BOOTSTRAP_EPSILON;
            return Ok(Report { mu_tilde: mu, payload: Some(s), agent_interval: None, learner_interval: None });
        }

        let a = &mut self.agents[arm];
        let aw = a.conf.advance(t)?;
        let agent_iv = quant_interval(a.mirror.lcb, a.mirror.ucb, aw.u_prime)?;
        let s = enc(agent.mu_hat(), self.bits, &agent_iv)?;
        a.mirror.update(dec(&s, self.bits, &agent_iv)?, aw.u);

        let learner_iv = quant_interval(belief.lcb, belief.ucb, w.u_prime)?;
        if learner_iv != agent_iv || aw != w {
            return Err(Error::Protocol(format!(
                "arm {arm} round {round}: agent interval {agent_iv} differs from learner interval {learner_iv}"
            )));
        }
        let mu = dec(&s, self.bits, &learner_iv)?;
        Ok(Report {
            mu_tilde: mu,
            payload: Some(s),
            agent_interval: Some(agent_iv),
            learner_interval: Some(learner_iv),
        })
    }
}

fn build_channel(
    instance: &BanditInstance,
    config: &TrialConfig,
    params: WidthParams,
    initial: &[ArmBelief],
    u0: f64,
) -> Result<Box<dyn Channel>> {
    let k = instance.k();
    Ok(match config.algorithm {
        Algorithm::UnquantizedSe => Box::new(Unquantized { params }),
        Algorithm::FedSel => {
            let support = instance
                .support()
                .ok_or_else(|| param("Fed-SEL needs bounded rewards"))?;
            Box::new(FedSel { params, support })
        }
        Algorithm::QubanSe { epsilon } => {
            let start = GridMirror { estimate: initial[0].mu_tilde, weighted_sum: 0.0 };
            Box::new(Quban {
                params,
                epsilon,
                learner: vec![start; k],
                agents: vec![start; k],
                dither: (0..k).map(|j| rng::dither_stream(config.seed, j)).collect(),
            })
        }
        Algorithm::IcqSe => {
            let conf = || ConfidenceState::new(params.delta, k, params.sigma, config.bits, u0);
            Box::new(Icq {
                params,
                bits: config.bits,
                learner: conf()?,
                agents: initial
                    .iter()
                    .map(|&mirror| Ok(IcqAgent { conf: conf()?, mirror }))
                    .collect::<Result<_>>()?,
                bootstrap: !instance.is_bounded(),
            })
        }
    })
}

/// Beliefs before round 1 and the matching `U(0)`.
fn initial_beliefs(instance: &BanditInstance, config: &TrialConfig) -> (Vec<ArmBelief>, f64) {
    let k = instance.k();
    match (config.algorithm, instance.support()) {
        (Algorithm::IcqSe, Some(iv)) => {
            let mut rng = rng::stream(config.seed, rng::LEARNER_STREAM);
            let w = iv.width();
            let beliefs = (0..k)
                .map(|_| ArmBelief::new(rng.random_range(iv.lo()..=iv.hi()), w))
                .collect();
            (beliefs, w)
        }
        (_, Some(iv)) => (vec![ArmBelief::new((iv.lo() + iv.hi()) / 2.0, iv.width()); k], iv.width()),
        (_, None) => (vec![ArmBelief::new(0.0, f64::INFINITY); k], f64::INFINITY),
    }
}

pub(super) fn run(instance: &BanditInstance, config: &TrialConfig, options: RunOptions) -> Result<TrialOutput> {
    config.validate()?;
    let k = instance.k();
    if k > u16::MAX as usize + 1 {
        return Err(param(format!("{k} arms exceed the 16-bit arm field")));
    }
    let params = WidthParams { delta: config.delta, k, sigma: instance.sigma_cb() };
    let schedule = Schedule::new(config.alpha)?;
    let (mut beliefs, u0) = initial_beliefs(instance, config);
    let mut channel = build_channel(instance, config, params, &beliefs, u0)?;

    let mut agents = vec![AgentState::default(); k];
    let mut rewards: Vec<TrialRng> = (0..k).map(|j| rng::agent_stream(config.seed, j)).collect();
    let mut active: Vec<usize> = (0..k).collect();
    let best = instance.best_arm();

    let mut trajectory = options.trajectory.then(|| Trajectory {
        means: instance.means().to_vec(),
        initial: beliefs.iter().map(|b| b.mu_tilde).collect(),
        rounds: Vec::new(),
    });
    let mut log = options.wire_log.then(Vec::new);

    let mut samples = 0u64;
    let mut bits = 0u64;
    let mut messages = 0u64;
    let mut rounds = 0u32;
    let mut best_eliminated = false;
    let mut stop = StopReason::RoundCap;

    for round in 1..=config.max_rounds {
        let Ok(t) = schedule.t(round) else {
            stop = StopReason::ScheduleOverflow;
            break;
        };
        let b = t - schedule.t(round - 1)?;
        let Some(total) = (active.len() as u64).checked_mul(b).and_then(|n| samples.checked_add(n)) else {
            stop = StopReason::ScheduleOverflow;
            break;
        };
        samples = total;
        rounds = round;

        let widths = channel.widths(round, t)?;
        let mut arm_records = Vec::new();
        for &j in &active {
            agents[j].pull(instance, j, b, &mut rewards[j])?;
            let rep = channel.report(round, t, j, &agents[j], &beliefs[j], widths)?;
            beliefs[j].update(rep.mu_tilde, widths.u);
            let payload_bits = rep.payload.as_ref().map_or(0, |p| p.len());
            if let Some(payload) = rep.payload {
                bits += payload_bits as u64;
                messages += 1;
                if let Some(log) = log.as_mut() {
                    log.push(UplinkMessage { round, arm: j as u16, payload });
                }
            }
            if trajectory.is_some() {
                arm_records.push(ArmRound {
                    arm: j,
                    mu_hat: agents[j].mu_hat(),
                    mu_tilde: rep.mu_tilde,
                    agent_interval: rep.agent_interval,
                    learner_interval: rep.learner_interval,
                    payload_bits,
                });
            }
        }

        let kept = eliminate(&active, &beliefs);
        for &j in &active {
            if !kept.contains(&j) {
                beliefs[j].active = false;
                best_eliminated |= Some(j) == best;
            }
        }
        active = kept;
        if let Some(tr) = trajectory.as_mut() {
            tr.rounds.push(RoundRecord {
                round,
                t,
                pulls: b,
                u_prime: widths.u_prime,
                u: widths.u,
                arms: arm_records,
                active_after: active.clone(),
            });
        }
        if active.len() == 1 {
            stop = StopReason::Identified;
            break;
        }
    }

    let recommended = (stop == StopReason::Identified).then(|| active[0]);
    let metrics = TrialMetrics {
        samples,
        rounds,
        uplink_bits: (config.algorithm != Algorithm::UnquantizedSe).then_some(bits),
        messages,
        recommended,
        correct: recommended.is_some_and(|j| instance.is_optimal(j)),
        best_eliminated,
        stop,
    };
    Ok(TrialOutput { metrics, trajectory, wire_log: log })
}
