"""Binary checkpoint container plus a JSON manifest.

Layout of the ``.ckpt`` file::

    magic   8 bytes  b"SFWSAC\\x00\\x01"
    version uint32   little-endian
    count   uint32   number of arrays
    table   per array: uint32 ndim, then ndim x uint32 dims
    data    all arrays as little-endian float64, in table order

Array order: actor, q1, q2, q1_targ, q2_targ parameters; then Adam first
and second moments for actor, q1, q2, alpha; then log_alpha. Adam step
counters go in a final float64 array. Anything else (hyperparameters,
episode counter, RNG state) lives in the manifest beside it.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .observation import ActionSpec, weights_from_action
from .sac import SACAgent, SACConfig

MAGIC = b"SFWSAC\x00\x01"
VERSION = 1
_NETS = ("actor", "q1", "q2", "q1_targ", "q2_targ")
_OPTS = ("actor", "q1", "q2", "alpha")


class CheckpointError(Exception):
    pass


def _arrays(agent: SACAgent) -> list:
    nets = agent.networks()
    opts = agent.optimizers()
    out = []
    for name in _NETS:
        out += nets[name].params
    for name in _OPTS:
        out += opts[name].m + opts[name].v
    out.append(agent.log_alpha)
    out.append(np.array([float(opts[name].t) for name in _OPTS]))
    return out


def write_arrays(path, arrays):
    parts = [MAGIC, struct.pack("<II", VERSION, len(arrays))]
    for a in arrays:
        parts.append(struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
    for a in arrays:
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_arrays(path) -> list:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if raw[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    try:
        off = len(MAGIC)
        version, count = struct.unpack_from("<II", raw, off)
        off += 8
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        shapes = []
        for _ in range(count):
            (ndim,) = struct.unpack_from("<I", raw, off)
            off += 4
            shapes.append(struct.unpack_from(f"<{ndim}I", raw, off))
            off += 4 * ndim
        arrays = []
        for shape in shapes:
            n = int(np.prod(shape, dtype=np.int64))
            if off + 8 * n > len(raw):
                raise CheckpointError(f"{path}: truncated data")
            arrays.append(np.frombuffer(raw, dtype="<f8", count=n, offset=off).astype(float).reshape(shape))
            off += 8 * n
    except struct.error as e:
        raise CheckpointError(f"{path}: truncated header") from e
    if off != len(raw):
        raise CheckpointError(f"{path}: trailing bytes")
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise CheckpointError(f"{path}: non-finite values")
    return arrays


def manifest_path(path) -> Path:
    return Path(str(path) + ".json")


def save_checkpoint(agent: SACAgent, path, extra: dict | None = None):
    write_arrays(path, _arrays(agent))
    cfg = agent.config
    manifest = {
        "format": "sfwsac",
        "version": VERSION,
        "obs_dim": agent.obs_dim,
        "obs_scale": agent.obs_scale.tolist(),
        "hidden": list(cfg.hidden),
        "gamma": cfg.gamma,
        "tau_polyak": cfg.tau_polyak,
        "lr": cfg.lr,
        "batch_size": cfg.batch_size,
        "target_entropy": cfg.target_entropy,
        "init_alpha": cfg.init_alpha,
        "action_low": list(agent.spec.low),
        "action_high": list(agent.spec.high),
        "updates": agent.updates,
        "rng_state": agent.rng.bit_generator.state,
    }
    manifest.update(extra or {})
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    try:
        return json.loads(manifest_path(path).read_text())
    except (OSError, ValueError) as e:
        raise CheckpointError(f"cannot read manifest for {path}: {e}") from e


def load_checkpoint(path) -> tuple[SACAgent, dict]:
    """Rebuild the agent exactly as saved; also returns the manifest."""
    man = read_manifest(path)
    cfg = SACConfig(gamma=man["gamma"], tau_polyak=man["tau_polyak"], lr=man["lr"],
                    batch_size=man["batch_size"], hidden=tuple(man["hidden"]),
                    target_entropy=man["target_entropy"], init_alpha=man["init_alpha"])
    spec = ActionSpec(tuple(man["action_low"]), tuple(man["action_high"]))
    agent = SACAgent(0, cfg, spec, obs_dim=man["obs_dim"], obs_scale=man["obs_scale"], zero_init=True)
    arrays = read_arrays(path)
    slots = _arrays(agent)
    if len(arrays) != len(slots):
        raise CheckpointError(f"{path}: expected {len(slots)} arrays, found {len(arrays)}")
    for dst, src in zip(slots[:-1], arrays[:-1]):
        if dst.shape != src.shape:
            raise CheckpointError(f"{path}: shape mismatch {src.shape} vs {dst.shape}")
        dst[...] = src
    for name, t in zip(_OPTS, arrays[-1]):
        agent.optimizers()[name].t = int(t)
    agent.updates = int(man.get("updates", 0))
    if "rng_state" in man:
        agent.rng.bit_generator.state = man["rng_state"]
    return agent, man


def infer_weights(checkpoint, obs):
    """Deterministic (mean) policy weights for one observation.

    ``checkpoint`` is either a path or an already loaded agent.
    """
    agent = checkpoint if isinstance(checkpoint, SACAgent) else load_checkpoint(checkpoint)[0]
    action, _ = agent.policy_forward(obs, deterministic=True)
    return weights_from_action(action)
