"""Single-threaded SAC training loop with checkpoints and exact resume."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .env import WeightEnv
from .observation import ACTION_DIM, OBS_DIM, ActionSpec
from .replay import ReplayBuffer
from .sac import Batch, SACAgent, SACConfig

LOG_HEADER = ("episode", "steps", "return", "outcome", "mean_alpha", "actor_loss", "critic_loss")


@dataclass
class TrainConfig:
    seed: int = 0
    scenarios: list = field(default_factory=lambda: ["crossing"])
    episodes: int = 300
    warmup_steps: int = 1000
    p0: float = 0.3
    lambda_e: float = 50.0
    replay_capacity: int = 100_000
    checkpoint_every: int = 50
    action_range: str = "table"  # "table" per-weight intervals, "wide" [0.1, 5] everywhere
    sac: SACConfig = field(default_factory=SACConfig)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        sac = d.pop("sac", {})
        unknown = set(sac) - set(SACConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown sac config keys: {sorted(unknown)}")
        if "hidden" in sac:
            sac["hidden"] = tuple(sac["hidden"])
        cfg = cls(**d, sac=SACConfig(**sac))
        if cfg.action_range not in ("table", "wide"):
            raise ValueError("action_range must be 'table' or 'wide'")
        if not cfg.scenarios:
            raise ValueError("at least one scenario is required")
        return cfg

    @classmethod
    def load(cls, path) -> TrainConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sac"]["hidden"] = list(d["sac"]["hidden"])
        return d

    def action_spec(self) -> ActionSpec:
        return ActionSpec() if self.action_range == "table" else ActionSpec.uniform()


def episode_seed(seed: int, episode: int) -> int:
    return seed * 1_000_003 + episode


def random_action_probability(cfg: TrainConfig, episode: int) -> float:
    return cfg.p0 * math.exp(-episode / cfg.lambda_e)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _ckpt_name(episode: int) -> str:
    return f"ckpt_{episode:05d}.ckpt"


def latest_checkpoint(out_dir) -> Path | None:
    found = sorted(Path(out_dir).glob("ckpt_*.ckpt"))
    return found[-1] if found else None


class Trainer:
    def __init__(self, cfg: TrainConfig, out_dir):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.spec = cfg.action_spec()
        self.agent = SACAgent(cfg.seed, cfg.sac, self.spec)
        self.replay = ReplayBuffer(cfg.replay_capacity, OBS_DIM, ACTION_DIM)
        self.rng = np.random.default_rng(cfg.seed + 7919)  # exploration decisions
        self.envs = {name: WeightEnv(name, spec=self.spec) for name in cfg.scenarios}
        self.episode = 0
        self.total_steps = 0
        self.log_rows: list = []

    # -- persistence ---------------------------------------------------------

    def save(self):
        path = self.out / _ckpt_name(self.episode)
        save_checkpoint(self.agent, path, {
            "episode": self.episode,
            "total_steps": self.total_steps,
            "train_rng_state": self.rng.bit_generator.state,
            "train_config": self.cfg.to_dict(),
        })
        self.replay.save(str(path) + ".replay.npz")
        return path

    def resume(self, path):
        self.agent, man = load_checkpoint(path)
        self.replay = ReplayBuffer.load(str(path) + ".replay.npz")
        self.rng.bit_generator.state = man["train_rng_state"]
        self.episode = int(man["episode"])
        self.total_steps = int(man["total_steps"])
        log = self.out / "train_log.csv"
        rows = []
        if log.exists():
            with log.open(newline="") as f:
                rows = [r for r in csv.reader(f)][1:]
        self.log_rows = [r for r in rows if int(r[0]) < self.episode]
        self._write_log()

    def _write_log(self):
        with (self.out / "train_log.csv").open("w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(LOG_HEADER)
            w.writerows(self.log_rows)

    # -- loop ----------------------------------------------------------------

    def choose(self, obs, p_random: float) -> np.ndarray:
        explore = self.total_steps < self.cfg.warmup_steps or self.rng.random() < p_random
        if explore:
            return self.rng.uniform(-1.0, 1.0, ACTION_DIM)
        return self.agent.act(obs)

    def run_episode(self) -> list:
        cfg = self.cfg
        name = cfg.scenarios[self.episode % len(cfg.scenarios)]
        env = self.envs[name]
        obs = env.reset(episode_seed(cfg.seed, self.episode))
        p_random = random_action_probability(cfg, self.episode)
        ret = 0.0
        steps = 0
        alphas, actor_losses, critic_losses = [], [], []
        done = False
        status = "running"
        while not done:
            a_unit = self.choose(obs, p_random)
            res = env.step(self.spec.from_unit(a_unit))
            done = res.done
            status = res.status
            self.replay.add(obs, a_unit, res.reward.total, res.obs, done)
            obs = res.obs
            ret += res.reward.total
            steps += 1
            self.total_steps += 1
            if self.total_steps > cfg.warmup_steps and len(self.replay) >= 1:
                batch: Batch = self.replay.sample(self.agent.rng, cfg.sac.batch_size)
                stats = self.agent.update(batch)
                alphas.append(stats["alpha"])
                actor_losses.append(stats["actor_loss"])
                critic_losses.append(stats["critic_loss"])
        mean = (lambda xs: float(np.mean(xs)) if xs else None)
        row = [str(self.episode), str(steps), _fmt(ret), status,
               _fmt(mean(alphas) if alphas else self.agent.alpha), _fmt(mean(actor_losses)),
               _fmt(mean(critic_losses))]
        self.log_rows.append(row)
        self.episode += 1
        return row

    def train(self, progress=None) -> list:
        self._write_log()
        while self.episode < self.cfg.episodes:
            row = self.run_episode()
            with (self.out / "train_log.csv").open("a", newline="") as f:
                csv.writer(f, lineterminator="\n").writerow(row)
            if progress is not None:
                progress(row)
            if self.cfg.checkpoint_every and self.episode % self.cfg.checkpoint_every == 0:
                self.save()
        if not self.cfg.checkpoint_every or self.episode % self.cfg.checkpoint_every:
            self.save()
        return self.log_rows


def train(config: TrainConfig | dict, out_dir, resume=None, progress=None) -> list:
    """Run (or continue) training; returns the per-episode log rows.

    ``resume`` is a checkpoint path, or ``True`` for the latest one in
    ``out_dir``.
    """
    cfg = config if isinstance(config, TrainConfig) else TrainConfig.from_dict(config)
    trainer = Trainer(cfg, out_dir)
    if resume:
        path = latest_checkpoint(out_dir) if resume is True else Path(resume)
        if path is None:
            raise FileNotFoundError(f"no checkpoint found in {out_dir}")
        trainer.resume(path)
    trainer.train(progress)
    return trainer.log_rows


def read_log(path) -> list:
    with Path(path).open(newline="") as f:
        return list(csv.DictReader(f))
