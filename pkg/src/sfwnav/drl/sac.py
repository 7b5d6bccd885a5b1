"""Soft Actor-Critic over the five planner weights.

The policy is a tanh-squashed diagonal Gaussian; squashed actions in
``[-1, 1]^5`` are mapped affinely onto the weight intervals. The critics
see the normalized observation together with the squashed action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nets import MLP, Adam, polyak
from .observation import ACTION_DIM, OBS_DIM, OBS_SCALE, ActionSpec

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


@dataclass
class SACConfig:
    gamma: float = 0.99
    tau_polyak: float = 0.005
    lr: float = 3e-4
    batch_size: int = 256
    hidden: tuple = (256, 256)
    target_entropy: float = -float(ACTION_DIM)
    init_alpha: float = 0.2


@dataclass
class Batch:
    obs: np.ndarray  # (B, obs_dim)
    act: np.ndarray  # (B, 5) squashed actions in [-1, 1]
    rew: np.ndarray  # (B,)
    next_obs: np.ndarray
    done: np.ndarray  # (B,) 1.0 for terminal

    def __len__(self):
        return len(self.rew)


def log1m_tanh2(u):
    """Stable ``log(1 - tanh(u)^2)``."""
    return 2.0 * (_LOG2 - u - np.logaddexp(0.0, -2.0 * u))


def squash(mean, log_std_raw, eps):
    """Reparameterized sample. Returns the squashed action, log-probability of
    the pre-affine action and the intermediates used for gradients."""
    log_std = np.clip(log_std_raw, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    u = mean + std * eps
    a = np.tanh(u)
    logp = (-0.5 * eps ** 2 - log_std - _HALF_LOG_2PI - log1m_tanh2(u)).sum(axis=-1)
    return a, logp, (u, a, std, log_std, log_std_raw)


class SACAgent:
    def __init__(self, seed: int = 0, config: SACConfig | None = None, spec: ActionSpec | None = None,
                 obs_dim: int = OBS_DIM, obs_scale=None, zero_init: bool = False):
        self.config = config or SACConfig()
        self.spec = spec or ActionSpec()
        self.obs_dim = obs_dim
        self.obs_scale = np.asarray(OBS_SCALE if obs_scale is None else obs_scale, dtype=float)
        self.rng = np.random.default_rng(seed)
        h = tuple(self.config.hidden)
        self.actor = MLP((obs_dim,) + h + (2 * ACTION_DIM,), self.rng, zero=zero_init)
        self.q1 = MLP((obs_dim + ACTION_DIM,) + h + (1,), self.rng, zero=zero_init)
        self.q2 = MLP((obs_dim + ACTION_DIM,) + h + (1,), self.rng, zero=zero_init)
        self.q1_targ = self.q1.copy()
        self.q2_targ = self.q2.copy()
        self.log_alpha = np.array(math.log(self.config.init_alpha))
        lr = self.config.lr
        self.actor_opt = Adam(self.actor.params, lr)
        self.q1_opt = Adam(self.q1.params, lr)
        self.q2_opt = Adam(self.q2.params, lr)
        self.alpha_opt = Adam([self.log_alpha], lr)
        self.updates = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    def set_lr(self, lr: float):
        for opt in (self.actor_opt, self.q1_opt, self.q2_opt, self.alpha_opt):
            opt.lr = lr

    # -- policy --------------------------------------------------------------

    def normalize(self, obs):
        return np.asarray(obs, dtype=float) / self.obs_scale

    def policy_heads(self, obs_n):
        out, acts = self.actor.forward(obs_n)
        return out[..., :ACTION_DIM], out[..., ACTION_DIM:], acts

    def policy_forward(self, obs, deterministic: bool = False, eps=None):
        """Weights action in ``ActionSpec`` units and its log-density.

        The density is that of the final weights: Gaussian, tanh correction
        and the constant Jacobian of the affine map.
        """
        obs_n = self.normalize(obs)
        single = obs_n.ndim == 1
        obs_n = np.atleast_2d(obs_n)
        mean, log_std_raw, _ = self.policy_heads(obs_n)
        if deterministic:
            eps = np.zeros_like(mean)
        elif eps is None:
            eps = self.rng.standard_normal(mean.shape)
        a, logp, _ = squash(mean, log_std_raw, eps)
        logp = logp - np.log(self.spec.half_width).sum()
        weights = self.spec.from_unit(a)
        if single:
            return weights[0], float(logp[0])
        return weights, logp

    def act(self, obs, deterministic: bool = False) -> np.ndarray:
        """Squashed action in ``[-1, 1]^5`` for one observation."""
        mean, log_std_raw, _ = self.policy_heads(self.normalize(obs)[None, :])
        eps = np.zeros_like(mean) if deterministic else self.rng.standard_normal(mean.shape)
        return squash(mean, log_std_raw, eps)[0][0]

    def q_min(self, q1: MLP, q2: MLP, obs_n, a):
        x = np.concatenate([obs_n, a], axis=-1)
        return np.minimum(q1(x)[:, 0], q2(x)[:, 0])

    # -- losses --------------------------------------------------------------

    def critic_target(self, batch: Batch, eps) -> np.ndarray:
        next_n = self.normalize(batch.next_obs)
        mean, log_std_raw, _ = self.policy_heads(next_n)
        a2, logp2, _ = squash(mean, log_std_raw, eps)
        q_next = self.q_min(self.q1_targ, self.q2_targ, next_n, a2)
        soft = q_next - self.alpha * logp2
        return batch.rew + self.config.gamma * (1.0 - batch.done) * soft

    def critic_loss(self, q: MLP, obs_n, act, y):
        """``0.5 * mean((Q - y)^2)`` and its parameter gradients."""
        x = np.concatenate([obs_n, act], axis=-1)
        out, acts = q.forward(x)
        err = out[:, 0] - y
        loss = 0.5 * float(np.mean(err ** 2))
        grads, _ = q.backward(acts, (err / len(y))[:, None])
        return loss, grads

    def actor_loss(self, obs_n, eps):
        """``mean(alpha * logp - min Q)`` over reparameterized samples.

        Returns the loss, actor gradients and the per-sample log-probability.
        """
        n = len(obs_n)
        alpha = self.alpha
        mean, log_std_raw, acts = self.policy_heads(obs_n)
        a, logp, (u, _, std, log_std, _) = squash(mean, log_std_raw, eps)

        x = np.concatenate([obs_n, a], axis=-1)
        o1, c1 = self.q1.forward(x)
        o2, c2 = self.q2.forward(x)
        use1 = o1[:, 0] <= o2[:, 0]
        qmin = np.where(use1, o1[:, 0], o2[:, 0])
        loss = float(np.mean(alpha * logp - qmin))

        # dQmin/da through whichever critic is the minimum for each sample
        _, dx1 = self.q1.backward(c1, use1[:, None].astype(float))
        _, dx2 = self.q2.backward(c2, (~use1)[:, None].astype(float))
        dq_da = (dx1 + dx2)[:, self.obs_dim:]

        dtanh = 1.0 - a ** 2
        d_mean = (alpha * 2.0 * a - dq_da * dtanh) / n
        se = std * eps
        d_logstd = (alpha * (-1.0 + 2.0 * a * se) - dq_da * dtanh * se) / n
        d_logstd = d_logstd * ((log_std_raw > LOG_STD_MIN) & (log_std_raw < LOG_STD_MAX))
        grads, _ = self.actor.backward(acts, np.concatenate([d_mean, d_logstd], axis=-1))
        return loss, grads, logp

    def alpha_loss(self, logp):
        """``-mean(log_alpha * (logp + H))`` and its derivative in ``log_alpha``."""
        k = float(np.mean(logp + self.config.target_entropy))
        return -float(self.log_alpha) * k, -k

    # -- update --------------------------------------------------------------

    def update(self, batch: Batch) -> dict:
        if len(batch) == 0:
            raise ValueError("empty batch")
        obs_n = self.normalize(batch.obs)
        eps_next = self.rng.standard_normal((len(batch), ACTION_DIM))
        eps_pi = self.rng.standard_normal((len(batch), ACTION_DIM))

        y = self.critic_target(batch, eps_next)
        l1, g1 = self.critic_loss(self.q1, obs_n, batch.act, y)
        l2, g2 = self.critic_loss(self.q2, obs_n, batch.act, y)
        self.q1_opt.step(self.q1.params, g1)
        self.q2_opt.step(self.q2.params, g2)

        la, ga, logp = self.actor_loss(obs_n, eps_pi)
        self.actor_opt.step(self.actor.params, ga)

        lt, gt = self.alpha_loss(logp)
        self.alpha_opt.step([self.log_alpha], [np.array(gt)])

        polyak(self.q1_targ, self.q1, self.config.tau_polyak)
        polyak(self.q2_targ, self.q2, self.config.tau_polyak)
        self.updates += 1
        return {"critic_loss": 0.5 * (l1 + l2), "actor_loss": la, "alpha_loss": lt, "alpha": self.alpha}

    # -- parameter views ---------------------------------------------------

    def networks(self) -> dict:
        return {"actor": self.actor, "q1": self.q1, "q2": self.q2, "q1_targ": self.q1_targ, "q2_targ": self.q2_targ}

    def optimizers(self) -> dict:
        return {"actor": self.actor_opt, "q1": self.q1_opt, "q2": self.q2_opt, "alpha": self.alpha_opt}


def sac_update(agent: SACAgent, batch: Batch) -> dict:
    return agent.update(batch)
