use std::path::Path;

use rand::Rng;

use super::annealer::{AnnealerConfig, EntropyAnnealer};
use super::network::EncodedNet;
use super::transition::{Observation, TransitionBatch};
use crate::error::{ensure_dim, Error, Result};
use crate::nn::checkpoint::{read_params, write_params, Manifest, FORMAT_VERSION};
use crate::nn::{argmax, log_softmax, softmax, AdamConfig, AdamState, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct SacdConfig {
    pub own_dim: usize,
    pub intruder_dim: usize,
    pub k_dim: usize,
    pub hidden: Vec<usize>,
    pub n_actions: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub initial_alpha: f64,
    /// When false α stays at `initial_alpha` and the annealer is inert.
    pub learn_alpha: bool,
    pub annealer: AnnealerConfig,
}

impl Default for SacdConfig {
    fn default() -> Self {
        Self {
            own_dim: crate::mdp::OWNSHIP_DIM,
            intruder_dim: crate::mdp::INTRUDER_DIM,
            k_dim: crate::mdp::INTRUDER_DIM,
            hidden: vec![256, 256],
            n_actions: crate::mdp::N_ACTIONS,
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 5e-5,
            critic_lr: 5e-5,
            alpha_lr: 5e-5,
            initial_alpha: 1.0,
            learn_alpha: true,
            annealer: AnnealerConfig::default(),
        }
    }
}

impl SacdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if self.n_actions < 2 {
            return Err(Error::Config("at least two actions are required".into()));
        }
        if self.initial_alpha <= 0.0 {
            return Err(Error::Config("initial alpha must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Greedy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LearnStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub target_entropy: f64,
    pub entropy: f64,
    pub annealed: bool,
}

/// `Σ_a π(a) [min Q̄(a) − α log π(a)]`, the soft value of a discrete policy.
pub fn soft_state_value<T: Real>(probs: &[T], log_probs: &[T], min_q: &[T], alpha: T) -> T {
    probs
        .iter()
        .zip(log_probs)
        .zip(min_q)
        .map(|((&p, &lp), &q)| p * (q - alpha * lp))
        .sum()
}

/// `r + γ (1 − done) V_soft(s′)`.
pub fn soft_q_target<T: Real>(
    reward: T,
    done: bool,
    gamma: T,
    probs: &[T],
    log_probs: &[T],
    min_q: &[T],
    alpha: T,
) -> T {
    if done {
        reward
    } else {
        reward + gamma * soft_state_value(probs, log_probs, min_q, alpha)
    }
}

pub fn entropy<T: Real>(probs: &[T], log_probs: &[T]) -> T {
    -probs
        .iter()
        .zip(log_probs)
        .map(|(&p, &lp)| if p > T::zero() { p * lp } else { T::zero() })
        .sum::<T>()
}

/// Inverse-CDF draw from a discrete distribution.
pub fn sample_categorical<T: Real, R: Rng + ?Sized>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.f64();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Discrete soft actor-critic with twin critics, Polyak-averaged targets,
/// learned temperature and target-entropy annealing.
#[derive(Clone, Debug)]
pub struct SacdAgent<T> {
    pub config: SacdConfig,
    pub actor: EncodedNet<T>,
    pub critic1: EncodedNet<T>,
    pub critic2: EncodedNet<T>,
    pub target1: EncodedNet<T>,
    pub target2: EncodedNet<T>,
    log_alpha: T,
    actor_opt: AdamState<T>,
    critic1_opt: AdamState<T>,
    critic2_opt: AdamState<T>,
    alpha_opt: AdamState<T>,
    pub annealer: EntropyAnnealer,
    updates: u64,
}

struct PolicyEval<T> {
    probs: Vec<T>,
    log_probs: Vec<T>,
}

fn policy_rows<T: Real>(logits: &[T], n: usize) -> PolicyEval<T> {
    let mut probs = Vec::with_capacity(logits.len());
    let mut log_probs = Vec::with_capacity(logits.len());
    for row in logits.chunks_exact(n) {
        probs.extend(softmax(row));
        log_probs.extend(log_softmax(row));
    }
    PolicyEval { probs, log_probs }
}

fn adam(lr: f64) -> AdamConfig {
    AdamConfig {
        learning_rate: lr,
        ..AdamConfig::default()
    }
}

impl<T: Real> SacdAgent<T> {
    pub fn new<R: Rng + ?Sized>(config: SacdConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let net = |rng: &mut R| {
            EncodedNet::new(
                config.own_dim,
                config.intruder_dim,
                config.k_dim,
                &config.hidden,
                config.n_actions,
                rng,
            )
        };
        let actor = net(rng)?;
        let critic1 = net(rng)?;
        let critic2 = net(rng)?;
        let target1 = critic1.clone();
        let target2 = critic2.clone();
        Ok(Self {
            actor_opt: AdamState::new(actor.param_count(), adam(config.actor_lr)),
            critic1_opt: AdamState::new(critic1.param_count(), adam(config.critic_lr)),
            critic2_opt: AdamState::new(critic2.param_count(), adam(config.critic_lr)),
            alpha_opt: AdamState::new(1, adam(config.alpha_lr)),
            log_alpha: T::of(config.initial_alpha.ln()),
            annealer: EntropyAnnealer::new(config.annealer, config.n_actions),
            updates: 0,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            config,
        })
    }

    pub fn alpha(&self) -> T {
        self.log_alpha.exp()
    }

    pub fn log_alpha(&self) -> T {
        self.log_alpha
    }

    pub fn set_log_alpha(&mut self, value: T) {
        self.log_alpha = value;
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn n_actions(&self) -> usize {
        self.config.n_actions
    }

    pub fn target_entropy(&self) -> f64 {
        self.annealer.target_entropy()
    }

    /// Action probabilities for each observation, row-major.
    pub fn policy(&self, batch: &[&Observation]) -> Result<Vec<T>> {
        let logits = self.actor.predict(batch)?;
        Ok(policy_rows(&logits, self.config.n_actions).probs)
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &Observation, mode: ActionMode, rng: &mut R) -> Result<usize> {
        let logits = self.actor.predict(&[obs])?;
        Ok(match mode {
            ActionMode::Greedy => argmax(&logits),
            ActionMode::Sample => sample_categorical(&softmax(&logits), rng),
        })
    }

    fn check_batch(&self, batch: &TransitionBatch) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Config("empty transition batch".into()));
        }
        for t in &batch.items {
            if t.action as usize >= self.config.n_actions {
                return Err(Error::InvalidAction(t.action as usize));
            }
        }
        Ok(())
    }

    /// Soft Bellman targets from the target critics and the current policy.
    pub fn q_targets(&self, batch: &TransitionBatch) -> Result<Vec<T>> {
        let n = self.config.n_actions;
        let next = batch.next_states();
        let q1 = self.target1.predict(&next)?;
        let q2 = self.target2.predict(&next)?;
        let pol = policy_rows(&self.actor.predict(&next)?, n);
        let alpha = self.alpha();
        let gamma = T::of(self.config.gamma);
        let targets = batch
            .items
            .iter()
            .enumerate()
            .map(|(b, t)| {
                let range = b * n..(b + 1) * n;
                let min_q: Vec<T> = q1[range.clone()]
                    .iter()
                    .zip(&q2[range.clone()])
                    .map(|(&a, &b)| a.min(b))
                    .collect();
                soft_q_target(
                    T::of(t.reward as f64),
                    t.done,
                    gamma,
                    &pol.probs[range.clone()],
                    &pol.log_probs[range],
                    &min_q,
                    alpha,
                )
            })
            .collect();
        Ok(targets)
    }

    /// Mean squared error of both critics against the soft targets, one Adam
    /// step each.
    pub fn critic_update(&mut self, batch: &TransitionBatch) -> Result<(f64, f64)> {
        self.check_batch(batch)?;
        let targets = self.q_targets(batch)?;
        let l1 = critic_step(
            &mut self.critic1,
            &mut self.critic1_opt,
            batch,
            &targets,
            self.config.n_actions,
        )?;
        let l2 = critic_step(
            &mut self.critic2,
            &mut self.critic2_opt,
            batch,
            &targets,
            self.config.n_actions,
        )?;
        Ok((l1, l2))
    }

    /// Elementwise minimum of the two critics on the batch states, row-major
    /// `[batch × n_actions]`.
    pub fn min_q(&self, batch: &TransitionBatch) -> Result<Vec<T>> {
        self.check_batch(batch)?;
        let states = batch.states();
        let q1 = self.critic1.predict(&states)?;
        let q2 = self.critic2.predict(&states)?;
        Ok(q1.iter().zip(&q2).map(|(&a, &b)| a.min(b)).collect())
    }

    /// Actor loss `E_s Σ_a π(a|s) (α log π(a|s) − min Q(s, a))`, the
    /// batch-mean policy entropy, and the flat actor gradient.
    pub fn actor_loss_grad(&self, batch: &TransitionBatch) -> Result<(f64, f64, Vec<T>)> {
        let n = self.config.n_actions;
        let min_q = self.min_q(batch)?;
        let (logits, cache) = self.actor.forward(&batch.states())?;
        let pol = policy_rows(&logits, n);
        let alpha = self.alpha();
        let scale = T::one() / T::of(batch.len() as f64);

        let mut loss = T::zero();
        let mut mean_entropy = T::zero();
        let mut d_logits = vec![T::zero(); logits.len()];
        for b in 0..batch.len() {
            let r = b * n..(b + 1) * n;
            let (p, lp, q) = (&pol.probs[r.clone()], &pol.log_probs[r.clone()], &min_q[r.clone()]);
            // g_a = dJ/dπ_a up to a constant that cancels under the softmax Jacobian
            let g: Vec<T> = lp.iter().zip(q).map(|(&l, &qa)| alpha * l - qa).collect();
            let row_loss: T = p.iter().zip(&g).map(|(&pa, &ga)| pa * ga).sum();
            loss += row_loss;
            mean_entropy += entropy(p, lp);
            for (j, d) in d_logits[r].iter_mut().enumerate() {
                *d = scale * p[j] * (g[j] - row_loss);
            }
        }
        let loss = (loss * scale).f64();
        let mean_entropy = (mean_entropy * scale).f64();
        if !loss.is_finite() {
            return Err(Error::NonFinite("actor loss"));
        }
        let grads = self.actor.backward(&cache, &d_logits)?;
        Ok((loss, mean_entropy, grads))
    }

    /// One Adam step on the actor. Returns the loss and the batch-mean
    /// policy entropy before the step.
    pub fn actor_update(&mut self, batch: &TransitionBatch) -> Result<(f64, f64)> {
        let (loss, mean_entropy, grads) = self.actor_loss_grad(batch)?;
        apply_adam(&mut self.actor, &mut self.actor_opt, &grads)?;
        Ok((loss, mean_entropy))
    }

    /// Batch-mean entropy of the current policy.
    pub fn batch_entropy(&self, batch: &TransitionBatch) -> Result<f64> {
        let n = self.config.n_actions;
        let pol = policy_rows(&self.actor.predict(&batch.states())?, n);
        let total: f64 = pol
            .probs
            .chunks_exact(n)
            .zip(pol.log_probs.chunks_exact(n))
            .map(|(p, lp)| entropy(p, lp).f64())
            .sum();
        Ok(total / batch.len().max(1) as f64)
    }

    /// Temperature step on `log α` for the loss `α (H(π) − H̄)`, averaged
    /// over the batch. No-op when α is fixed.
    pub fn alpha_update(&mut self, batch: &TransitionBatch) -> Result<f64> {
        let h = self.batch_entropy(batch)?;
        self.alpha_update_with_entropy(h)
    }

    pub fn alpha_update_with_entropy(&mut self, mean_entropy: f64) -> Result<f64> {
        let gap = T::of(mean_entropy - self.annealer.target_entropy());
        let alpha = self.alpha();
        let loss = (alpha * gap).f64();
        if !loss.is_finite() {
            return Err(Error::NonFinite("alpha loss"));
        }
        if self.config.learn_alpha {
            // d(α·gap)/d(log α) = α·gap
            let mut p = [self.log_alpha];
            self.alpha_opt.step(&mut p, &[alpha * gap])?;
            self.log_alpha = p[0];
        }
        Ok(loss)
    }

    pub fn anneal_target_entropy(&mut self, batch_entropy: f64) -> bool {
        if self.config.learn_alpha {
            self.annealer.observe(batch_entropy)
        } else {
            false
        }
    }

    /// `Q̄ᵢ ← τ Qᵢ + (1 − τ) Q̄ᵢ`.
    pub fn target_sync(&mut self, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1], got {tau}")));
        }
        let tau = T::of(tau);
        self.target1.blend_from(&self.critic1, tau)?;
        self.target2.blend_from(&self.critic2, tau)
    }

    /// One learner step: critics, actor, temperature, annealer, targets.
    pub fn learn_step(&mut self, batch: &TransitionBatch) -> Result<LearnStats> {
        let (critic1_loss, critic2_loss) = self.critic_update(batch)?;
        let (actor_loss, _) = self.actor_update(batch)?;
        let entropy = self.batch_entropy(batch)?;
        let alpha_loss = self.alpha_update_with_entropy(entropy)?;
        let annealed = self.anneal_target_entropy(entropy);
        self.target_sync(self.config.tau)?;
        self.updates += 1;
        if !self.actor.all_finite() || !self.critic1.all_finite() || !self.critic2.all_finite() {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(LearnStats {
            critic1_loss,
            critic2_loss,
            actor_loss,
            alpha_loss,
            alpha: self.alpha().f64(),
            target_entropy: self.annealer.target_entropy(),
            entropy,
            annealed,
        })
    }

    fn networks(&self) -> [(&'static str, &EncodedNet<T>); 5] {
        [
            ("actor", &self.actor),
            ("critic1", &self.critic1),
            ("critic2", &self.critic2),
            ("target1", &self.target1),
            ("target2", &self.target2),
        ]
    }

    fn optimizers(&self) -> [(&'static str, &AdamState<T>); 4] {
        [
            ("actor", &self.actor_opt),
            ("critic1", &self.critic1_opt),
            ("critic2", &self.critic2_opt),
            ("alpha", &self.alpha_opt),
        ]
    }

    /// Manifest plus flat parameter vector. Order: actor, critic1, critic2,
    /// target1, target2, then `m` and `v` of each Adam state (actor,
    /// critic1, critic2, alpha).
    pub fn to_checkpoint(&self) -> (Manifest, Vec<T>) {
        let c = &self.config;
        let mut m = Manifest::new();
        m.set("format_version", FORMAT_VERSION);
        m.set("kind", "sacd-agent");
        m.set("precision", T::PRECISION.as_str());
        m.set("own_dim", c.own_dim);
        m.set("intruder_dim", c.intruder_dim);
        m.set("k_dim", c.k_dim);
        m.set(
            "hidden",
            c.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","),
        );
        m.set("n_actions", c.n_actions);
        m.set("gamma", c.gamma);
        m.set("tau", c.tau);
        m.set("actor_lr", c.actor_lr);
        m.set("critic_lr", c.critic_lr);
        m.set("alpha_lr", c.alpha_lr);
        m.set("initial_alpha", c.initial_alpha);
        m.set("learn_alpha", c.learn_alpha);
        let a = &c.annealer;
        m.set("annealer.window", a.window);
        m.set("annealer.interval", a.interval);
        m.set("annealer.std_threshold", a.std_threshold);
        m.set("annealer.start", a.start);
        m.set("annealer.decay", a.decay);
        m.set("annealer.floor", a.floor);

        let mut params = Vec::new();
        for (name, net) in self.networks() {
            m.set(format!("net.{name}.topology"), net.topology());
            m.set(format!("net.{name}.params"), net.param_count());
            net.flatten_into(&mut params);
        }
        for (name, opt) in self.optimizers() {
            m.set(format!("adam.{name}.step"), opt.step);
            m.set(format!("adam.{name}.len"), opt.len());
            params.extend_from_slice(&opt.m);
            params.extend_from_slice(&opt.v);
        }
        m.set("param_count", params.len());
        m.set("log_alpha", self.log_alpha);
        m.set("annealer.coefficient", self.annealer.coefficient());
        m.set("annealer.since_check", self.annealer.since_check());
        m.set(
            "annealer.history",
            self.annealer
                .history()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m.set("updates", self.updates);
        (m, params)
    }

    pub fn from_checkpoint(m: &Manifest, params: &[T]) -> Result<Self>
    where
        T: std::str::FromStr,
    {
        m.check_header(T::PRECISION)?;
        if m.require("kind")? != "sacd-agent" {
            return Err(Error::ManifestMismatch(format!(
                "kind: {} != sacd-agent",
                m.require("kind")?
            )));
        }
        let hidden = m
            .require("hidden")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Checkpoint(format!("bad hidden width '{s}'")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let config = SacdConfig {
            own_dim: m.parse_value("own_dim")?,
            intruder_dim: m.parse_value("intruder_dim")?,
            k_dim: m.parse_value("k_dim")?,
            hidden,
            n_actions: m.parse_value("n_actions")?,
            gamma: m.parse_value("gamma")?,
            tau: m.parse_value("tau")?,
            actor_lr: m.parse_value("actor_lr")?,
            critic_lr: m.parse_value("critic_lr")?,
            alpha_lr: m.parse_value("alpha_lr")?,
            initial_alpha: m.parse_value("initial_alpha")?,
            learn_alpha: m.parse_value("learn_alpha")?,
            annealer: AnnealerConfig {
                window: m.parse_value("annealer.window")?,
                interval: m.parse_value("annealer.interval")?,
                std_threshold: m.parse_value("annealer.std_threshold")?,
                start: m.parse_value("annealer.start")?,
                decay: m.parse_value("annealer.decay")?,
                floor: m.parse_value("annealer.floor")?,
            },
        };
        config.validate()?;
        let expected: usize = m.parse_value("param_count")?;
        ensure_dim("checkpoint parameters", expected, params.len())?;

        let mut offset = 0;
        let mut take = |len: usize| -> Result<&[T]> {
            let end = offset + len;
            if end > params.len() {
                return Err(Error::Checkpoint("parameter file too short".into()));
            }
            let slice = &params[offset..end];
            offset = end;
            Ok(slice)
        };
        let mut nets = Vec::with_capacity(5);
        for name in ["actor", "critic1", "critic2", "target1", "target2"] {
            let mut net = EncodedNet::<T>::from_topology(m.require(&format!("net.{name}.topology"))?)?;
            let count: usize = m.parse_value(&format!("net.{name}.params"))?;
            ensure_dim("network parameter count", net.param_count(), count)?;
            net.load_flat(take(count)?)?;
            nets.push(net);
        }
        let lrs = [config.actor_lr, config.critic_lr, config.critic_lr, config.alpha_lr];
        let mut opts = Vec::with_capacity(4);
        for (name, lr) in ["actor", "critic1", "critic2", "alpha"].into_iter().zip(lrs) {
            let len: usize = m.parse_value(&format!("adam.{name}.len"))?;
            let mut opt = AdamState::new(len, adam(lr));
            opt.step = m.parse_value(&format!("adam.{name}.step"))?;
            opt.m.copy_from_slice(take(len)?);
            opt.v.copy_from_slice(take(len)?);
            opts.push(opt);
        }
        let history = m
            .require("annealer.history")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Checkpoint(format!("bad entropy history '{s}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut annealer = EntropyAnnealer::new(config.annealer, config.n_actions);
        annealer.restore(
            m.parse_value("annealer.coefficient")?,
            m.parse_value("annealer.since_check")?,
            history,
        );
        let mut nets = nets.into_iter();
        let mut opts = opts.into_iter();
        Ok(Self {
            actor: nets.next().expect("five networks"),
            critic1: nets.next().expect("five networks"),
            critic2: nets.next().expect("five networks"),
            target1: nets.next().expect("five networks"),
            target2: nets.next().expect("five networks"),
            actor_opt: opts.next().expect("four optimizers"),
            critic1_opt: opts.next().expect("four optimizers"),
            critic2_opt: opts.next().expect("four optimizers"),
            alpha_opt: opts.next().expect("four optimizers"),
            log_alpha: m.parse_value("log_alpha")?,
            annealer,
            updates: m.parse_value("updates")?,
            config,
        })
    }

    /// Writes `manifest.txt` and `params.bin` into `dir`, merging any extra
    /// manifest entries supplied by the caller.
    pub fn save(&self, dir: &Path, extra: &Manifest) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (mut manifest, params) = self.to_checkpoint();
        for (k, v) in extra.entries() {
            manifest.set(k.clone(), v);
        }
        write_params(&dir.join("params.bin"), &params)?;
        manifest.write(&dir.join("manifest.txt"))
    }

    pub fn load(dir: &Path) -> Result<(Self, Manifest)>
    where
        T: std::str::FromStr,
    {
        let manifest = Manifest::read(&dir.join("manifest.txt"))?;
        manifest.check_header(T::PRECISION)?;
        let count: usize = manifest.parse_value("param_count")?;
        let params = read_params::<T>(&dir.join("params.bin"), count)?;
        let agent = Self::from_checkpoint(&manifest, &params)?;
        Ok((agent, manifest))
    }
}

fn apply_adam<T: Real>(net: &mut EncodedNet<T>, opt: &mut AdamState<T>, grads: &[T]) -> Result<()> {
    let mut params = net.flatten();
    opt.step(&mut params, grads)?;
    net.load_flat(&params)
}

/// Critic mean squared error against `targets` on the taken actions, and
/// the flat critic gradient.
pub fn critic_loss_grad<T: Real>(
    critic: &EncodedNet<T>,
    batch: &TransitionBatch,
    targets: &[T],
    n: usize,
) -> Result<(f64, Vec<T>)> {
    ensure_dim("critic targets", batch.len(), targets.len())?;
    let (q, cache) = critic.forward(&batch.states())?;
    let scale = T::one() / T::of(batch.len() as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let mut d_q = vec![T::zero(); q.len()];
    for (b, (t, &y)) in batch.items.iter().zip(targets).enumerate() {
        let idx = b * n + t.action as usize;
        let err = q[idx] - y;
        loss += err * err;
        d_q[idx] = two * err * scale;
    }
    let loss = (loss * scale).f64();
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    let grads = critic.backward(&cache, &d_q)?;
    Ok((loss, grads))
}

/// Actor loss of `actor` against fixed `min_q` (see [`SacdAgent::min_q`]),
/// forward pass only.
pub fn actor_loss<T: Real>(
    actor: &EncodedNet<T>,
    batch: &TransitionBatch,
    min_q: &[T],
    alpha: T,
    n: usize,
) -> Result<f64> {
    ensure_dim("min q", batch.len() * n, min_q.len())?;
    let pol = policy_rows(&actor.predict(&batch.states())?, n);
    let total: T = (0..batch.len() * n)
        .map(|i| pol.probs[i] * (alpha * pol.log_probs[i] - min_q[i]))
        .sum();
    let loss = (total / T::of(batch.len() as f64)).f64();
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite("actor loss"))
    }
}

/// Critic mean squared error against `targets`, forward pass only.
pub fn critic_loss<T: Real>(critic: &EncodedNet<T>, batch: &TransitionBatch, targets: &[T], n: usize) -> Result<f64> {
    ensure_dim("critic targets", batch.len(), targets.len())?;
    let q = critic.predict(&batch.states())?;
    let total: T = batch
        .items
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(b, (t, &y))| {
            let err = q[b * n + t.action as usize] - y;
            err * err
        })
        .sum();
    let loss = (total / T::of(batch.len() as f64)).f64();
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite("critic loss"))
    }
}

fn critic_step<T: Real>(
    critic: &mut EncodedNet<T>,
    opt: &mut AdamState<T>,
    batch: &TransitionBatch,
    targets: &[T],
    n: usize,
) -> Result<f64> {
    let (loss, grads) = critic_loss_grad(critic, batch, targets, n)?;
    apply_adam(critic, opt, &grads)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sacd::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(n_actions: usize) -> SacdConfig {
        SacdConfig {
            own_dim: 2,
            intruder_dim: 2,
            k_dim: 2,
            hidden: vec![8],
            n_actions,
            ..SacdConfig::default()
        }
    }

    fn agent(n_actions: usize) -> SacdAgent<f64> {
        SacdAgent::new(tiny(n_actions), &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
    }

    /// Zeroes `net` and sets its output bias, so every input maps to `out`.
    fn constant(net: &mut EncodedNet<f64>, out: &[f64]) {
        net.load_flat(&vec![0.0; net.param_count()]).unwrap();
        let last = net.trunk.layers().len() - 1;
        net.trunk.layer_mut(last).bias.copy_from_slice(out);
    }

    fn obs() -> Observation {
        Observation::new(vec![0.3, -0.2], vec![vec![0.1, 0.4]])
    }

    fn transition(action: u8, reward: f32, done: bool) -> Transition {
        Transition {
            state: obs(),
            action,
            reward,
            next_state: obs(),
            done,
            worker: 0,
            seq: 0,
        }
    }

    #[test]
    fn zero_logits_sample_uniformly() {
        let mut a = agent(6);
        constant(&mut a.actor, &[0.0; 6]);
        let p = a.policy(&[&obs()]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 6];
        let o = obs();
        for _ in 0..60_000 {
            counts[a.act(&o, ActionMode::Sample, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 60_000.0 - 1.0 / 6.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn greedy_takes_the_largest_logit() {
        let mut a = agent(6);
        constant(&mut a.actor, &[10.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(a.act(&obs(), ActionMode::Greedy, &mut rng).unwrap(), 0);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = agent(6);
        let o = obs();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| a.act(&o, ActionMode::Sample, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    fn toy_targets(alpha: f64, done: bool) -> f64 {
        let mut a = agent(2);
        a.config.gamma = 0.99;
        constant(&mut a.actor, &[0.0, 0.0]);
        constant(&mut a.target1, &[1.0, 1.0]);
        constant(&mut a.target2, &[1.0, 1.0]);
        a.set_log_alpha(alpha.ln());
        let batch = TransitionBatch::from_transitions([transition(0, 0.0, done)]);
        a.q_targets(&batch).unwrap()[0]
    }

    #[test]
    fn soft_target_examples() {
        assert_eq!(toy_targets(0.5, true), 0.0);
        assert!((toy_targets(0.0, false) - 0.99).abs() < 1e-12);
        assert!((toy_targets(0.5, false) - 0.99 * (1.0 + 0.5 * 2f64.ln())).abs() < 1e-12);
        assert!((toy_targets(0.5, false) - 1.3331).abs() < 1e-4);
    }

    #[test]
    fn zero_temperature_target_is_double_q() {
        let mut a = agent(2);
        constant(&mut a.actor, &[30.0, 0.0]);
        constant(&mut a.target1, &[2.0, 5.0]);
        constant(&mut a.target2, &[1.5, 7.0]);
        a.set_log_alpha(f64::NEG_INFINITY);
        let batch = TransitionBatch::from_transitions([transition(1, 0.25, false)]);
        let y = a.q_targets(&batch).unwrap()[0];
        assert!((y - (0.25 + a.config.gamma * 1.5)).abs() < 1e-9);
    }

    #[test]
    fn polyak_blend() {
        let mut a = agent(2);
        let bumped: Vec<f64> = a.critic1.flatten().iter().map(|v| v + 0.1).collect();
        a.critic1.load_flat(&bumped).unwrap();
        let before = a.target1.flatten();
        a.target_sync(0.0).unwrap();
        assert_eq!(a.target1.flatten(), before);
        assert_ne!(a.target1.flatten(), a.critic1.flatten());
        a.target_sync(1.0).unwrap();
        assert_eq!(a.target1.flatten(), a.critic1.flatten());
        assert_eq!(a.target2.flatten(), a.critic2.flatten());

        a.target1.load_flat(&vec![0.0; a.target1.param_count()]).unwrap();
        a.critic1.load_flat(&vec![1.0; a.critic1.param_count()]).unwrap();
        a.target_sync(0.005).unwrap();
        assert!(a.target1.flatten().iter().all(|&v| (v - 0.005).abs() < 1e-15));
        assert!(a.target_sync(1.5).is_err());
    }

    #[test]
    fn temperature_moves_against_the_entropy_gap() {
        let mut a = agent(6);
        a.config.alpha_lr = 1e-2;
        let target = a.target_entropy();
        let before = a.alpha();
        a.alpha_update_with_entropy(target + 0.3).unwrap();
        assert!(a.alpha() < before);

        let mut b = agent(6);
        let before = b.alpha();
        b.alpha_update_with_entropy(target - 0.3).unwrap();
        assert!(b.alpha() > before);

        let mut c = agent(6);
        let before = c.alpha();
        c.alpha_update_with_entropy(target).unwrap();
        assert_eq!(c.alpha(), before);
    }

    fn converge_actor(q: &[f64], alpha: f64, steps: usize) -> Vec<f64> {
        let n = q.len();
        let mut cfg = tiny(n);
        cfg.actor_lr = 1e-2;
        let mut a = SacdAgent::<f64>::new(cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        constant(&mut a.critic1, q);
        constant(&mut a.critic2, q);
        a.set_log_alpha(alpha.ln());
        let batch = TransitionBatch::from_transitions([transition(0, 0.0, true)]);
        for _ in 0..steps {
            a.actor_update(&batch).unwrap();
        }
        a.policy(&[&obs()]).unwrap()
    }

    #[test]
    fn flat_critic_gives_uniform_policy() {
        let p = converge_actor(&[0.5; 6], 1.0, 2000);
        assert!(p.iter().all(|&v| (v - 1.0 / 6.0).abs() < 0.01), "{p:?}");
    }

    #[test]
    fn fixed_critic_gives_boltzmann_policy() {
        let p = converge_actor(&[1.0, 0.0], 0.5, 3000);
        let expected = [1.0 / (1.0 + (-2f64).exp()), 1.0 / (1.0 + 2f64.exp())];
        let tv = 0.5 * p.iter().zip(expected).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.01, "{p:?}");
    }

    #[test]
    fn vanishing_temperature_concentrates_mass() {
        let p = converge_actor(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-3, 3000);
        assert!(p[0] > 0.99, "{p:?}");
    }

    #[test]
    fn critic_loss_falls_on_a_fixed_batch() {
        let mut cfg = tiny(6);
        cfg.critic_lr = 1e-3;
        let mut a = SacdAgent::<f64>::new(cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let batch = TransitionBatch::from_transitions((0..6).map(|i| transition(i, i as f32 * 0.2 - 0.5, true)));
        let (first, _) = a.critic_update(&batch).unwrap();
        let mut last = first;
        for _ in 0..100 {
            last = a.critic_update(&batch).unwrap().0;
        }
        assert!(last < 0.5 * first, "{first} -> {last}");
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let mut a = agent(2);
        let batch = TransitionBatch::from_transitions([transition(4, 0.0, true)]);
        assert!(matches!(a.critic_update(&batch), Err(Error::InvalidAction(4))));
    }
}
