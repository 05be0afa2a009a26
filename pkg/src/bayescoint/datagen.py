"""Synthetic cointegration experiments.

An instance is y_t = beta2 x_t + alpha + R_t with x a unit-variance random
walk and R an AR(k) residual. Stationary residual coefficients are drawn
uniformly from the positive coefficients whose largest root lies in
(root_floor, 1); unit-root residuals integrate such a process of order
k - 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .arp import ar_roots
from .core import Dataset, Verdict
from ._io import atomic_write, write_csv
from .errors import DomainError, GenerationStalled

__all__ = [
    "GenConfig",
    "GenInstance",
    "embed_unit_root",
    "generate_instance",
    "instance_rng",
    "sample_stationary_constrained",
    "simulate_ar",
    "write_instance",
]

# at an acceptance rate of 1e-4 the chance of no acceptance in 1e6 proposals is e^-100
MAX_ATTEMPTS = 1_000_000


@dataclass(frozen=True)
class GenConfig:
    """Experiment constants.

    ``k`` is a fixed order, or ``None`` to draw it uniformly from
    ``k_choices`` per instance.
    """

    T: int = 200
    k: int | None = 1
    k_choices: tuple[int, ...] = (1, 2, 3)
    p_unit_root: float = 0.5
    root_floor: float = 0.8
    coef_range: tuple[float, float] = (0.0, 5.0)
    sigma2: float = 1.0
    burn_in: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.root_floor < 1.0:
            raise DomainError("root_floor must lie in (0, 1)")
        if not 0.0 <= self.p_unit_root <= 1.0:
            raise DomainError("p_unit_root must lie in [0, 1]")
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")
        if self.T < 5:
            raise DomainError("T must be at least 5")
        if self.k is not None and self.k < 1:
            raise DomainError("k must be at least 1")
        if self.burn_in < 0:
            raise DomainError("burn_in must be non-negative")


@dataclass(frozen=True)
class GenInstance:
    data: Dataset
    label: Verdict
    true_phi: np.ndarray
    true_beta2: np.ndarray
    true_intercept: float
    seed: int = 0
    index: int = 0

    @property
    def k(self) -> int:
        return int(self.true_phi.size)

    def truth(self) -> dict:
        return {
            "label": self.label.value,
            "k": self.k,
            "phi": [float(v) for v in self.true_phi],
            "beta2": [float(v) for v in self.true_beta2],
            "intercept": float(self.true_intercept),
            "seed": int(self.seed),
            "index": int(self.index),
        }


def sample_stationary_constrained(k: int, root_floor: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw over phi in (0, 1]^k with all roots inside the unit circle and one beyond ``root_floor``.

    Raises
    ------
    GenerationStalled
        If none of 1e6 proposals is accepted, i.e. the acceptance rate is
        far below 1e-4.
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    batch = 64
    tried = 0
    while tried < MAX_ATTEMPTS:
        # 1 - U[0, 1) lies in (0, 1]
        cand = 1.0 - rng.random((batch, k))
        comp = np.zeros((batch, k, k))
        comp[:, np.arange(1, k), np.arange(k - 1)] = 1.0
        comp[:, 0, :] = cand
        top = np.abs(np.linalg.eigvals(comp)).max(axis=1)
        ok = np.flatnonzero((top < 1.0) & (top > root_floor))
        if ok.size:
            return cand[ok[0]]
        tried += batch
        batch = min(2 * batch, 4096)
    raise GenerationStalled(f"no acceptance in {tried} proposals (k={k}, root_floor={root_floor})")


def embed_unit_root(psi) -> np.ndarray:
    """Coefficients of (1 - L)(1 - psi_1 L - ... - psi_{k-1} L^{k-1}) as an order-k autoregression."""
    psi = np.atleast_1d(np.asarray(psi, dtype=np.float64))
    if psi.size == 0:
        return np.array([1.0])
    return np.concatenate([[1.0 + psi[0]], np.diff(psi), [-psi[-1]]])


def simulate_ar(phi, noise: np.ndarray) -> np.ndarray:
    """R_t = sum_i phi_i R_{t-i} + noise_t with R_t = 0 before the sample."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    return lfilter([1.0], np.concatenate([[1.0], -phi]), np.asarray(noise, dtype=np.float64))


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for instance ``index`` of a study seeded with ``seed``; independent of worker layout."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def generate_instance(config: GenConfig, rng: np.random.Generator | None = None, index: int = 0) -> GenInstance:
    """One labelled instance; ``rng`` defaults to :func:`instance_rng` (config.seed, index)."""
    rng = rng if rng is not None else instance_rng(config.seed, index)
    k = config.k if config.k is not None else int(rng.choice(config.k_choices))
    unit_root = bool(rng.random() < config.p_unit_root)
    if unit_root:
        psi = sample_stationary_constrained(k - 1, config.root_floor, rng) if k > 1 else np.zeros(0)
        phi = embed_unit_root(psi)
    else:
        phi = sample_stationary_constrained(k, config.root_floor, rng)
    burn = config.burn_in
    # the first k residuals are zero; the burn-in lets stationary draws forget that start
    e = np.sqrt(config.sigma2) * rng.standard_normal(config.T + burn)
    r = simulate_ar(phi, e)[burn:]
    x = np.cumsum(rng.standard_normal(config.T))
    lo, hi = config.coef_range
    beta2 = rng.uniform(lo, hi, size=1)
    alpha = float(rng.uniform(lo, hi))
    y = beta2[0] * x + alpha + r
    data = Dataset(np.column_stack([y, x]), 0, ("y", "x"))
    label = Verdict.NOT_COINTEGRATED if unit_root else Verdict.COINTEGRATED
    return GenInstance(data, label, phi, beta2, alpha, config.seed, index)


def write_instance(instance: GenInstance, csv_path: Path | str, truth_path: Path | str | None = None) -> Path:
    """CSV of the series plus a JSON truth sidecar; returns the sidecar path."""
    csv_path = Path(csv_path)
    write_csv(csv_path, instance.data.labels, instance.data.values)
    truth_path = Path(truth_path) if truth_path is not None else csv_path.with_suffix(".truth.json")
    atomic_write(truth_path, json.dumps(instance.truth(), indent=2, sort_keys=True) + "\n")
    return truth_path
