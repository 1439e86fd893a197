use ndarray::{s, Array2, Axis};
use rand::Rng;

use super::{EpisodeBatch, LossReport, TrainConfig};
use crate::agents::{gumbel_noise, relaxed_backward, straight_through, AgentBundle, StackNet, Variant};
use crate::env::{ACTION_DIM, OBS_DIM, PHYSICAL_ACTIONS};
use crate::nnet::{adam_update, soft_update, AdamState, BatchState, Matrix, ParameterSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticReport {
    pub loss: f64,
    pub grad_norm: f64,
    pub divergent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorReport {
    /// Mean critic value of the relaxed policy actions.
    pub objective: f64,
    pub grad_norm: f64,
    pub divergent: bool,
}

/// Owns every agent's networks and applies the update rules.
#[derive(Debug, Clone)]
pub struct Learner {
    pub variant: Variant,
    pub bundles: Vec<AgentBundle>,
    pub lr: f64,
    pub tau: f64,
    pub gamma: f64,
    pub grad_clip: Option<f64>,
    pub updates: u64,
}

/// One-hot argmax per action head, row by row.
fn greedy_one_hot(logits: &Matrix) -> Matrix {
    let mut out = Array2::zeros(logits.raw_dim());
    for (r, row) in logits.outer_iter().enumerate() {
        for h in [0..PHYSICAL_ACTIONS, PHYSICAL_ACTIONS..ACTION_DIM] {
            let mut best = h.start;
            for k in h.clone() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            out[[r, best]] = 1.0;
        }
    }
    out
}

fn state_or_zero(net: &StackNet, stored: Option<&Vec<BatchState>>, agent: usize, rows: usize) -> BatchState {
    match stored {
        Some(states) if net.is_recurrent() => states[agent].clone(),
        _ => net.zero_state(rows),
    }
}

/// Applies clipping and one Adam step unless the gradient is non-finite.
/// Returns `(pre-clip norm, divergent)`.
fn apply_step(
    params: &mut ParameterSet,
    grads: &mut ParameterSet,
    adam: &mut AdamState,
    lr: f64,
    clip: Option<f64>,
    loss: f64,
) -> Result<(f64, bool)> {
    let norm = grads.l2_norm();
    if !loss.is_finite() || !norm.is_finite() {
        return Ok((norm, true));
    }
    if let Some(c) = clip {
        if norm > c {
            grads.scale(c / norm);
        }
    }
    adam_update(params, grads, adam, lr)?;
    if !params.all_finite() {
        return Err(Error::NonFinite("parameters after update".into()));
    }
    Ok((norm, false))
}

impl Learner {
    pub fn new(variant: Variant, bundles: Vec<AgentBundle>, cfg: &TrainConfig) -> Self {
        Self {
            variant,
            bundles,
            lr: cfg.lr,
            tau: cfg.tau,
            gamma: cfg.gamma,
            grad_clip: cfg.grad_clip,
            updates: 0,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.bundles.len()
    }

    fn check_batch(&self, batch: &EpisodeBatch) -> Result<()> {
        let spec = self.variant.spec();
        if batch.n_agents != self.n_agents()
            || batch.next_actor_states.is_some() != spec.actor_recurrent
            || batch.next_critic_states.is_some() != spec.critic_recurrent
        {
            return Err(Error::InvalidEpisode(format!("batch does not match variant {}", self.variant)));
        }
        Ok(())
    }

    /// `a'_j = μ'_j(o_{j,t+1}, c^p_{j,t+1})` as greedy one-hots, stacked `(T·B, 7)`.
    pub fn target_actions(&self, batch: &EpisodeBatch) -> Result<Vec<Matrix>> {
        self.bundles
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let net = &b.target_actor.net;
                let st = state_or_zero(net, batch.next_actor_states.as_ref(), j, batch.rows());
                let (logits, _, _) = net.step(&batch.next_obs_stacked[j], &st)?;
                Ok(greedy_one_hot(&logits))
            })
            .collect()
    }

    /// TD targets `y = r + γ·(1 − terminal)·Q'_i(x', a', c^q_{t+1})`, as `[t]` of `(B)`.
    pub fn td_targets(&self, agent: usize, batch: &EpisodeBatch, target_actions: &[Matrix]) -> Result<Vec<ndarray::Array1<f64>>> {
        let net = &self.bundles[agent].target_critic.net;
        let st = state_or_zero(net, batch.next_critic_states.as_ref(), agent, batch.rows());
        let (q_next, _, _) = net.step(&batch.next_critic_input(target_actions), &st)?;
        Ok((0..batch.steps)
            .map(|t| {
                let q = q_next.slice(s![t * batch.batch..(t + 1) * batch.batch, 0]);
                let mut y = batch.rewards[t].clone();
                ndarray::Zip::from(&mut y)
                    .and(&q)
                    .and(&batch.terminal[t])
                    .for_each(|y, &q, &done| *y += self.gamma * (1.0 - done) * q);
                y
            })
            .collect())
    }

    /// Mean squared TD error of agent `agent`'s critic and its gradient,
    /// unrolling the critic from a zero state over each sampled episode.
    pub fn critic_loss_and_grad(
        &self,
        agent: usize,
        batch: &EpisodeBatch,
        target_actions: &[Matrix],
    ) -> Result<(f64, ParameterSet)> {
        self.check_batch(batch)?;
        let targets = self.td_targets(agent, batch, target_actions)?;
        let net = &self.bundles[agent].critic.net;
        let inputs: Vec<Matrix> = (0..batch.steps).map(|t| batch.critic_input(t, None)).collect();
        let un = net.unroll(&inputs, net.zero_state(batch.batch))?;
        let count = batch.rows() as f64;
        let mut loss = 0.0;
        let d_out: Vec<Matrix> = un
            .outputs
            .iter()
            .zip(&targets)
            .map(|(q, y)| {
                let err = &q.column(0) - y;
                loss += err.mapv(|e| e * e).sum();
                (err * (2.0 / count)).insert_axis(Axis(1))
            })
            .collect();
        let mut grads = net.params().zeros_like();
        net.backward_through_time(&un.caches, &d_out, Some(&mut grads));
        Ok((loss / count, grads))
    }

    pub fn critic_update(&mut self, agent: usize, batch: &EpisodeBatch) -> Result<CriticReport> {
        let targets = self.target_actions(batch)?;
        self.critic_update_with_targets(agent, batch, &targets)
    }

    pub fn critic_update_with_targets(
        &mut self,
        agent: usize,
        batch: &EpisodeBatch,
        target_actions: &[Matrix],
    ) -> Result<CriticReport> {
        let (loss, mut grads) = self.critic_loss_and_grad(agent, batch, target_actions)?;
        let (lr, clip) = (self.lr, self.grad_clip);
        let b = &mut self.bundles[agent];
        let (grad_norm, divergent) = apply_step(b.critic.net.params_mut(), &mut grads, &mut b.critic_adam, lr, clip, loss)?;
        Ok(CriticReport { loss, grad_norm, divergent })
    }

    /// Mean critic value with agent `agent`'s batch actions replaced by its
    /// relaxed policy output, and the gradient of the negated value with
    /// respect to the actor parameters. Other agents' actions are constants.
    pub fn actor_objective_and_grad(
        &self,
        agent: usize,
        batch: &EpisodeBatch,
        noise: &[Matrix],
        temperature: f64,
    ) -> Result<(f64, ParameterSet)> {
        self.check_batch(batch)?;
        let bundle = &self.bundles[agent];
        let actor = &bundle.actor.net;
        let critic = &bundle.critic.net;
        let actor_un = actor.unroll(&batch.obs[agent], actor.zero_state(batch.batch))?;
        let relaxed: Vec<_> = actor_un
            .outputs
            .iter()
            .zip(noise)
            .map(|(l, g)| straight_through(l, g, temperature))
            .collect();
        let inputs: Vec<Matrix> = (0..batch.steps)
            .map(|t| batch.critic_input(t, Some((agent, &relaxed[t].hard))))
            .collect();
        let critic_un = critic.unroll(&inputs, critic.zero_state(batch.batch))?;
        let count = batch.rows() as f64;
        let objective = critic_un.outputs.iter().map(|q| q.sum()).sum::<f64>() / count;

        let d_q: Vec<Matrix> = (0..batch.steps)
            .map(|_| Array2::from_elem((batch.batch, 1), -1.0 / count))
            .collect();
        let d_inputs = critic.backward_through_time(&critic_un.caches, &d_q, None);
        let off = batch.n_agents * OBS_DIM + agent * ACTION_DIM;
        let d_logits: Vec<Matrix> = d_inputs
            .iter()
            .zip(&relaxed)
            .map(|(dx, r)| relaxed_backward(r, &dx.slice(s![.., off..off + ACTION_DIM]).to_owned()))
            .collect();
        let mut grads = actor.params().zeros_like();
        actor.backward_through_time(&actor_un.caches, &d_logits, Some(&mut grads));
        Ok((objective, grads))
    }

    pub fn actor_update<R: Rng + ?Sized>(
        &mut self,
        agent: usize,
        batch: &EpisodeBatch,
        temperature: f64,
        rng: &mut R,
    ) -> Result<ActorReport> {
        let noise: Vec<Matrix> = (0..batch.steps).map(|_| gumbel_noise(batch.batch, rng)).collect();
        let (objective, mut grads) = self.actor_objective_and_grad(agent, batch, &noise, temperature)?;
        let (lr, clip) = (self.lr, self.grad_clip);
        let b = &mut self.bundles[agent];
        let (grad_norm, divergent) =
            apply_step(b.actor.net.params_mut(), &mut grads, &mut b.actor_adam, lr, clip, -objective)?;
        Ok(ActorReport {
            objective,
            grad_norm,
            divergent,
        })
    }

    /// Critic then actor update for every agent, followed by target tracking.
    pub fn update_round<R: Rng + ?Sized>(
        &mut self,
        batch: &EpisodeBatch,
        temperature: f64,
        rng: &mut R,
    ) -> Result<LossReport> {
        let targets = self.target_actions(batch)?;
        let mut report = LossReport {
            update_index: self.updates,
            ..Default::default()
        };
        for i in 0..self.n_agents() {
            let c = self.critic_update_with_targets(i, batch, &targets)?;
            let a = self.actor_update(i, batch, temperature, rng)?;
            report.critic_loss.push(c.loss);
            report.critic_grad_norm.push(c.grad_norm);
            report.actor_objective.push(a.objective);
            report.actor_grad_norm.push(a.grad_norm);
            report.divergent.push(c.divergent || a.divergent);
        }
        target_update(&mut self.bundles, self.tau)?;
        self.updates += 1;
        Ok(report)
    }
}

/// Soft-updates every agent's target actor and target critic.
pub fn target_update(bundles: &mut [AgentBundle], tau: f64) -> Result<()> {
    for b in bundles {
        soft_update(b.target_actor.net.params_mut(), b.actor.net.params(), tau)?;
        soft_update(b.target_critic.net.params_mut(), b.critic.net.params(), tau)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use ndarray::Array1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::env::EnvConfig;
    use crate::nnet::gradcheck::{central_differences, gather, max_gradient_error};
    use crate::nnet::{DenseParams, Layer};
    use crate::trainer::{init_bundles, rollout, RolloutOptions};
    use crate::agents::SelectMode;

    fn setup(variant: Variant, hidden: usize, len: usize, episodes: usize, seed: u64) -> (Learner, EpisodeBatch) {
        let env = EnvConfig {
            episode_length: len,
            ..EnvConfig::default()
        };
        let cfg = TrainConfig {
            hidden,
            ..TrainConfig::default()
        };
        let learner = Learner::new(variant, init_bundles(&env, variant, &cfg, seed), &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let opts = RolloutOptions {
            mode: SelectMode::Explore { temperature: 1.0 },
            record_transitions: true,
            record_trajectory: false,
        };
        let eps: Vec<_> = (0..episodes)
            .map(|k| rollout(&learner.bundles, &env, k as u64, opts, &mut rng).unwrap().episode.unwrap())
            .collect();
        let refs: Vec<_> = eps.iter().collect();
        let batch = EpisodeBatch::from_episodes(&refs, variant.spec()).unwrap();
        (learner, batch)
    }

    fn dense_layer(p: &ParameterSet, i: usize) -> &DenseParams {
        match p.layer(i) {
            Layer::Dense(d) => d,
            Layer::Lstm(_) => panic!("expected dense"),
        }
    }

    /// Independent forward of a feed-forward stack for one input row.
    fn manual_ff(p: &ParameterSet, x: &[f64]) -> Vec<f64> {
        let lin = |d: &DenseParams, v: &[f64], relu: bool| -> Vec<f64> {
            (0..d.weight.nrows())
                .map(|r| {
                    let mut s = d.bias[r];
                    for c in 0..v.len() {
                        s += d.weight[[r, c]] * v[c];
                    }
                    if relu { s.max(0.0) } else { s }
                })
                .collect()
        };
        let h1 = lin(dense_layer(p, 0), x, true);
        let h2 = lin(dense_layer(p, 1), &h1, true);
        lin(dense_layer(p, 2), &h2, false)
    }

    fn silence_head(net: &mut StackNet, bias: &[f64]) {
        let head = net.head_layer_mut();
        head.weight.fill(0.0);
        head.bias.assign(&ndarray::aview1(bias));
    }

    #[test]
    fn zero_discount_and_zero_targets_give_rewards() {
        let (mut l, batch) = setup(Variant::Rmaddpg, 8, 5, 3, 1);
        l.gamma = 0.0;
        let ta = l.target_actions(&batch).unwrap();
        for (y, r) in l.td_targets(0, &batch, &ta).unwrap().iter().zip(&batch.rewards) {
            assert_eq!(y, r);
        }
        l.gamma = 0.95;
        silence_head(&mut l.bundles[1].target_critic.net, &[0.0]);
        for (y, r) in l.td_targets(1, &batch, &ta).unwrap().iter().zip(&batch.rewards) {
            assert_eq!(y, r);
        }
    }

    #[test]
    fn terminal_transitions_do_not_bootstrap() {
        let (mut l, batch) = setup(Variant::Rc, 8, 4, 2, 2);
        silence_head(&mut l.bundles[0].target_critic.net, &[5.0]);
        let ta = l.target_actions(&batch).unwrap();
        let ys = l.td_targets(0, &batch, &ta).unwrap();
        for t in 0..3 {
            assert_eq!(ys[t], &batch.rewards[t] + 0.95 * 5.0);
        }
        assert_eq!(ys[3], batch.rewards[3]);
    }

    #[test]
    fn critic_loss_matches_hand_computed_td_errors() {
        let (mut l, batch) = setup(Variant::Maddpg, 3, 2, 2, 3);
        // Target actors pick (east, silent) for every input.
        for b in &mut l.bundles {
            silence_head(&mut b.target_actor.net, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        }
        let fixed = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let ta = l.target_actions(&batch).unwrap();
        let (loss, _) = l.critic_loss_and_grad(0, &batch, &ta).unwrap();

        let critic = l.bundles[0].critic.net.params();
        let target = l.bundles[0].target_critic.net.params();
        let mut expected = 0.0;
        for t in 0..2 {
            for b in 0..2 {
                let mut x = Vec::new();
                let mut x_next = Vec::new();
                for i in 0..2 {
                    x.extend(batch.obs[i][t].row(b).iter());
                    x_next.extend(batch.next_obs_stacked[i].row(t * 2 + b).iter());
                }
                for i in 0..2 {
                    x.extend(batch.actions[i][t].row(b).iter());
                    x_next.extend(fixed);
                }
                let q = manual_ff(critic, &x)[0];
                let not_done = 1.0 - batch.terminal[t][b];
                let y = batch.rewards[t][b] + 0.95 * not_done * manual_ff(target, &x_next)[0];
                expected += (q - y).powi(2);
            }
        }
        expected /= 4.0;
        assert!((loss - expected).abs() < 1e-12, "{loss} vs {expected}");
    }

    fn critic_grad_check(variant: Variant) {
        let (l, batch) = setup(variant, 4, 3, 2, 4);
        let ta = l.target_actions(&batch).unwrap();
        let (_, grads) = l.critic_loss_and_grad(1, &batch, &ta).unwrap();
        let numeric = central_differences(l.bundles[1].critic.net.params(), 1e-5, None, |p| {
            let mut probe = l.clone();
            *probe.bundles[1].critic.net.params_mut() = p.clone();
            probe.critic_loss_and_grad(1, &batch, &ta).unwrap().0
        });
        let err = max_gradient_error(&gather(&grads, None), &numeric);
        assert!(err < 1e-4, "{variant}: {err}");
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        critic_grad_check(Variant::Maddpg);
        critic_grad_check(Variant::Rmaddpg);
    }

    fn softmax_heads(z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for h in [0..5, 5..7] {
            let m = z[h.clone()].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = z[h.clone()].iter().map(|v| (v - m).exp()).sum();
            for k in h {
                out[k] = (z[k] - m).exp() / s;
            }
        }
        out
    }

    /// `-mean Q` with agent `i`'s action set to `hard₀ + soft(θ) − soft₀`,
    /// whose derivative at θ₀ is the straight-through gradient.
    fn surrogate(l: &Learner, i: usize, batch: &EpisodeBatch, noise: &[Matrix], temp: f64, hard0: &[Matrix], soft0: &[Matrix]) -> f64 {
        let actor = &l.bundles[i].actor.net;
        let critic = &l.bundles[i].critic.net;
        let un = actor.unroll(&batch.obs[i], actor.zero_state(batch.batch)).unwrap();
        let inputs: Vec<Matrix> = (0..batch.steps)
            .map(|t| {
                let mut a = hard0[t].clone() - &soft0[t];
                for b in 0..batch.batch {
                    let z: Vec<f64> = (0..7).map(|k| (un.outputs[t][[b, k]] + noise[t][[b, k]]) / temp).collect();
                    for (k, p) in softmax_heads(&z).into_iter().enumerate() {
                        a[[b, k]] += p;
                    }
                }
                batch.critic_input(t, Some((i, &a)))
            })
            .collect();
        let q = critic.unroll(&inputs, critic.zero_state(batch.batch)).unwrap();
        -q.outputs.iter().map(|o| o.sum()).sum::<f64>() / batch.rows() as f64
    }

    fn actor_grad_check(variant: Variant, temp: f64) {
        let (l, batch) = setup(variant, 4, 3, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise: Vec<Matrix> = (0..batch.steps).map(|_| gumbel_noise(batch.batch, &mut rng)).collect();
        let (_, grads) = l.actor_objective_and_grad(0, &batch, &noise, temp).unwrap();
        let actor = &l.bundles[0].actor.net;
        let un = actor.unroll(&batch.obs[0], actor.zero_state(batch.batch)).unwrap();
        let relaxed: Vec<_> = un.outputs.iter().zip(&noise).map(|(o, g)| straight_through(o, g, temp)).collect();
        let hard0: Vec<Matrix> = relaxed.iter().map(|r| r.hard.clone()).collect();
        let soft0: Vec<Matrix> = relaxed.iter().map(|r| r.soft.clone()).collect();
        let numeric = central_differences(actor.params(), 1e-5, None, |p| {
            let mut probe = l.clone();
            *probe.bundles[0].actor.net.params_mut() = p.clone();
            surrogate(&probe, 0, &batch, &noise, temp, &hard0, &soft0)
        });
        let err = max_gradient_error(&gather(&grads, None), &numeric);
        assert!(err < 1e-4, "{variant}: {err}");
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        actor_grad_check(Variant::Maddpg, 1.0);
        actor_grad_check(Variant::Rmaddpg, 1.0);
        actor_grad_check(Variant::Ra, 0.5);
    }

    fn cut_action_path(l: &mut Learner, i: usize) {
        let off = l.n_agents() * OBS_DIM + i * ACTION_DIM;
        l.bundles[i]
            .critic
            .net
            .input_layer_mut()
            .weight
            .slice_mut(s![.., off..off + ACTION_DIM])
            .fill(0.0);
    }

    #[test]
    fn critic_blind_to_own_action_gives_zero_actor_gradient() {
        let (mut l, batch) = setup(Variant::Rmaddpg, 6, 4, 2, 6);
        cut_action_path(&mut l, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<Matrix> = (0..batch.steps).map(|_| gumbel_noise(batch.batch, &mut rng)).collect();
        let (_, grads) = l.actor_objective_and_grad(1, &batch, &noise, 1.0).unwrap();
        assert_eq!(grads.l2_norm(), 0.0);
        let before = l.bundles[1].actor.net.params().clone();
        l.actor_update(1, &batch, 1.0, &mut rng).unwrap();
        assert_eq!(l.bundles[1].actor.net.params(), &before);
    }

    #[test]
    fn other_agents_actors_do_not_affect_the_gradient() {
        let (l, batch) = setup(Variant::Maddpg, 6, 3, 2, 7);
        let noise: Vec<Matrix> = (0..batch.steps)
            .map(|_| gumbel_noise(batch.batch, &mut ChaCha8Rng::seed_from_u64(2)))
            .collect();
        let (_, g0) = l.actor_objective_and_grad(0, &batch, &noise, 1.0).unwrap();
        let mut other = l.clone();
        other.bundles[1].actor.net.params_mut().scale(-3.0);
        let (_, g1) = other.actor_objective_and_grad(0, &batch, &noise, 1.0).unwrap();
        assert_eq!(g0, g1);
    }

    #[test]
    fn update_round_moves_targets_by_at_most_tau_times_the_gap() {
        let (mut l, batch) = setup(Variant::Rmaddpg, 8, 5, 3, 8);
        // Separate targets from sources first so the gap is non-trivial.
        for b in &mut l.bundles {
            b.target_actor.net.params_mut().scale(0.5);
            b.target_critic.net.params_mut().scale(0.5);
        }
        let before: Vec<AgentBundle> = l.bundles.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = l.update_round(&batch, 1.0, &mut rng).unwrap();
        assert!(!report.any_divergent());
        assert_eq!(l.updates, 1);
        for (old, new) in before.iter().zip(&l.bundles) {
            for (t_old, t_new, src) in [
                (old.target_actor.net.params(), new.target_actor.net.params(), new.actor.net.params()),
                (old.target_critic.net.params(), new.target_critic.net.params(), new.critic.net.params()),
            ] {
                let gap = t_old.max_abs_diff(src).unwrap();
                let moved = t_old.max_abs_diff(t_new).unwrap();
                assert!(moved <= l.tau * gap * (1.0 + 1e-12), "{moved} > tau * {gap}");
                assert!(moved > 0.0);
            }
        }
    }

    #[test]
    fn non_finite_gradient_skips_the_step() {
        let (mut l, batch) = setup(Variant::Maddpg, 6, 3, 2, 9);
        let before = l.bundles[0].critic.net.params().clone();
        let mut poisoned = batch.clone();
        poisoned.rewards[1] = Array1::from_elem(poisoned.batch, f64::NAN);
        let r = l.critic_update(0, &poisoned).unwrap();
        assert!(r.divergent);
        assert_eq!(l.bundles[0].critic.net.params(), &before);
        assert!(!l.critic_update(0, &batch).unwrap().divergent);
        assert_ne!(l.bundles[0].critic.net.params(), &before);
    }

    #[test]
    fn mismatched_batch_is_rejected() {
        let (l, batch) = setup(Variant::Maddpg, 4, 3, 1, 10);
        let (rl, _) = setup(Variant::Rmaddpg, 4, 3, 1, 10);
        let ta = l.target_actions(&batch).unwrap();
        assert!(rl.critic_loss_and_grad(0, &batch, &ta).is_err());
    }
}
