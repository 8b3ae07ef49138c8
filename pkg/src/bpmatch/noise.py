"""Depolarizing code-capacity noise and per-trial random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PauliSample:
    """X and Z components of a sampled Pauli error (Y sets both)."""

    x_part: np.ndarray
    z_part: np.ndarray


def _check_probability(p: float) -> None:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"error probability must lie in [0, 1), got {p!r}")


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for one trial, derived from the master seed and a counter key.

    The stream depends only on ``(master_seed, key)``, never on which worker
    or in which order trials execute.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def sample_depolarizing(n: int, p: float, rng: np.random.Generator) -> PauliSample:
    """Apply X, Y or Z to each of ``n`` qubits with probability ``p/3`` each."""
    _check_probability(p)
    if n < 0:
        raise ValueError("qubit count must be non-negative")
    u = rng.random(n)
    third = p / 3.0
    x_or_y = u < 2.0 * third
    y_or_z = (u >= third) & (u < p)
    return PauliSample(x_part=x_or_y.astype(np.uint8), z_part=y_or_z.astype(np.uint8))


def marginal_flip_rate(p: float, mode: str = "marginal") -> float:
    """Per-type flip probability used as the prior parameter.

    ``marginal`` gives ``2p/3``, the chance a qubit carries a Z (or X)
    component under depolarizing noise; ``literal`` passes ``p`` through.
    """
    _check_probability(p)
    if mode == "marginal":
        return 2.0 * p / 3.0
    if mode == "literal":
        return float(p)
    raise ValueError(f"unknown prior mode {mode!r}")
