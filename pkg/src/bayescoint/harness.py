"""Monte Carlo studies: ROC classification and residual-order accuracy.

Every trial derives its own seeds from (study seed, instance index), so a
study's per-instance results do not depend on how trials are spread over
workers. Reports are written in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import ar1
from ._io import csv_text, atomic_write
from .arp import McmcConfig, PosteriorDraws, gibbs_test
from .classical import engle_granger_test
from .core import Dataset, Method, RegressionSpec, Verdict
from .datagen import GenConfig, GenInstance, generate_instance
from .errors import CointegrationError, DomainError
from .order import rjmcmc_run, rjmcmc_test

__all__ = [
    "BicRow",
    "OrderStudy",
    "OrderStudyRow",
    "ResidualBand",
    "RocCurve",
    "RocStudy",
    "TrialScore",
    "method_score",
    "residual_posterior_summary",
    "roc_curve",
    "run_order_study",
    "run_roc_study",
    "write_order_report",
    "write_roc_report",
]

STUDY_MCMC = McmcConfig()


@dataclass(frozen=True)
class RocCurve:
    """Detection of cointegration when the score is at most the threshold.

    Points run from (0, 0) at threshold -inf to (1, 1) at the largest score.
    """

    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float


def roc_curve(scores, cointegrated) -> RocCurve:
    """Sweep the threshold over every observed score.

    ``scores`` are oriented so that larger means more unit-root-like;
    ``cointegrated`` holds the true labels. Tied scores move both rates in
    one step, so the trapezoid area counts ties as half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(cointegrated, dtype=bool)
    if scores.shape != pos.shape or scores.ndim != 1:
        raise DomainError("scores and labels must be matching vectors")
    if not pos.any() or pos.all():
        raise DomainError("ROC needs both cointegrated and non-cointegrated instances")
    if not np.all(np.isfinite(scores)):
        raise DomainError("scores must be finite")
    thr = np.unique(scores)
    s_pos = np.sort(scores[pos])
    s_neg = np.sort(scores[~pos])
    tpr = np.searchsorted(s_pos, thr, side="right") / s_pos.size
    fpr = np.searchsorted(s_neg, thr, side="right") / s_neg.size
    thr = np.concatenate([[-np.inf], thr])
    tpr = np.concatenate([[0.0], tpr])
    fpr = np.concatenate([[0.0], fpr])
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thr, tpr, fpr, auc)


def _mcmc_seed(seed: int, index: int, tag: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index, tag)).generate_state(1)[0])


def method_score(data: Dataset, method: Method, *, order: int = 1, k_max: int = 5,
                 mcmc: McmcConfig | None = None, intercept: bool = True) -> float:
    """Score for ROC sweeps; larger means more unit-root-like.

    Bayes factor: log K. Credible tests: posterior mass on rho >= 1.
    Engle-Granger: the ADF t-ratio itself (less negative is less evidence
    against a unit root).
    """
    method = Method(method)
    if method in (Method.AR1_BAYES_FACTOR, Method.AR1_CREDIBLE):
        return ar1.statistic_for_roc(data, method, intercept)
    mcmc = mcmc or STUDY_MCMC
    if method is Method.GIBBS:
        return gibbs_test(data, RegressionSpec(intercept, method, order=order), mcmc).statistic
    if method is Method.RJMCMC:
        return rjmcmc_test(data, RegressionSpec(intercept, method, k_max=k_max), mcmc).statistic
    return engle_granger_test(data, RegressionSpec(intercept, method, k_max=k_max)).statistic


@dataclass(frozen=True)
class TrialScore:
    index: int
    label: Verdict
    method: Method
    score: float
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


@dataclass(frozen=True)
class _RocTask:
    gen: GenConfig
    index: int
    methods: tuple[Method, ...]
    k_max: int
    mcmc: McmcConfig


def _roc_trial(task: _RocTask) -> list[TrialScore]:
    inst = generate_instance(task.gen, index=task.index)
    order = task.gen.k if task.gen.k is not None else inst.k
    out = []
    for tag, method in enumerate(task.methods):
        mcmc = replace(task.mcmc, seed=_mcmc_seed(task.gen.seed, task.index, tag))
        try:
            s = method_score(inst.data, method, order=order, k_max=task.k_max, mcmc=mcmc)
            out.append(TrialScore(task.index, inst.label, method, float(s)))
        except CointegrationError as exc:
            out.append(TrialScore(task.index, inst.label, method, math.nan, f"{type(exc).__name__}: {exc}"))
    return out


def _map(fn: Callable, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


@dataclass(frozen=True)
class RocStudy:
    curves: dict
    failures: dict
    scores: list = field(default_factory=list)


def run_roc_study(gen: GenConfig, methods: Sequence[Method | str], trials: int, seed: int, *,
                  k_max: int = 5, mcmc: McmcConfig | None = None, workers: int = 1) -> RocStudy:
    """Score ``trials`` generated instances with every method and build one ROC curve per method.

    A method that raises on an instance loses only that instance; the
    failure count is reported per method.
    """
    if trials < 2:
        raise DomainError("need at least two trials")
    gen = replace(gen, seed=seed)
    methods = tuple(Method(m) for m in methods)
    tasks = [_RocTask(gen, i, methods, k_max, mcmc or STUDY_MCMC) for i in range(trials)]
    scores = [s for batch in _map(_roc_trial, tasks, workers) for s in batch]
    curves, failures = {}, {}
    for method in methods:
        rows = [s for s in scores if s.method is method]
        ok = [s for s in rows if not s.failed]
        failures[method] = len(rows) - len(ok)
        curves[method] = roc_curve([s.score for s in ok], [s.label is Verdict.COINTEGRATED for s in ok])
    return RocStudy(curves, failures, scores)


@dataclass(frozen=True)
class OrderStudyRow:
    """Reversible-jump order classification at one series length."""

    T: int
    accuracy_mode: float
    mean_variance: float
    trials: int
    failures: int = 0


@dataclass(frozen=True)
class BicRow:
    """Engle-Granger BIC lag choice (as a residual order) at one series length."""

    T: int
    accuracy: float
    trials: int
    failures: int = 0


@dataclass(frozen=True)
class OrderTrial:
    T: int
    index: int
    true_k: int
    rj_mode: int = -1
    rj_variance: float = math.nan
    bic_order: int = -1
    rj_error: str = ""
    bic_error: str = ""


@dataclass(frozen=True)
class OrderStudy:
    rows: list
    bic_rows: list
    trials: list = field(default_factory=list)


@dataclass(frozen=True)
class _OrderTask:
    gen: GenConfig
    index: int
    k_max: int
    mcmc: McmcConfig


def _order_trial(task: _OrderTask) -> OrderTrial:
    inst = generate_instance(task.gen, index=task.index)
    out = {"T": task.gen.T, "index": task.index, "true_k": inst.k}
    spec = RegressionSpec(True, Method.RJMCMC, k_max=task.k_max)
    try:
        mcmc = replace(task.mcmc, seed=_mcmc_seed(task.gen.seed, task.index, task.gen.T))
        _, post = rjmcmc_run(inst.data, spec, mcmc)
        out.update(rj_mode=post.mode, rj_variance=post.variance)
    except CointegrationError as exc:
        out["rj_error"] = f"{type(exc).__name__}: {exc}"
    try:
        eg = engle_granger_test(inst.data, replace(spec, method=Method.ENGLE_GRANGER))
        out["bic_order"] = int(eg.diagnostics["bic_order"])
    except CointegrationError as exc:
        out["bic_error"] = f"{type(exc).__name__}: {exc}"
    return OrderTrial(**out)


def run_order_study(gen: GenConfig, T_list: Sequence[int], trials: int, seed: int, *, k_max: int = 5,
                    mcmc: McmcConfig | None = None, workers: int = 1) -> OrderStudy:
    """Posterior-mode order accuracy against BIC for each length in ``T_list``.

    Instance ``i`` uses the same generator stream at every length, so the
    lengths are compared on matched parameter draws.
    """
    if trials < 2:
        raise DomainError("need at least two trials")
    tasks = [_OrderTask(replace(gen, T=int(T), seed=seed), i, k_max, mcmc or STUDY_MCMC)
             for T in T_list for i in range(trials)]
    results = _map(_order_trial, tasks, workers)
    rows, bic_rows = [], []
    for T in T_list:
        res = [r for r in results if r.T == T]
        rj = [r for r in res if not r.rj_error]
        bic = [r for r in res if not r.bic_error]
        rows.append(OrderStudyRow(
            int(T),
            float(np.mean([r.rj_mode == r.true_k for r in rj])) if rj else math.nan,
            float(np.mean([r.rj_variance for r in rj])) if rj else math.nan,
            len(rj), len(res) - len(rj)))
        bic_rows.append(BicRow(int(T), float(np.mean([r.bic_order == r.true_k for r in bic])) if bic else math.nan,
                               len(bic), len(res) - len(bic)))
    return OrderStudy(rows, bic_rows, results)


@dataclass(frozen=True)
class ResidualBand:
    mean: np.ndarray
    std: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return self.mean - 3.0 * self.std

    @property
    def upper(self) -> np.ndarray:
        return self.mean + 3.0 * self.std


def residual_posterior_summary(data: Dataset, draws: PosteriorDraws) -> ResidualBand:
    """Pointwise posterior mean and standard deviation of y_t - beta2'x_t - alpha."""
    if len(draws) == 0:
        raise DomainError("no draws")
    r = data.y[None, :] - draws.beta2 @ data.x.T - draws.alpha[:, None]
    return ResidualBand(r.mean(axis=0), r.std(axis=0))


def write_roc_report(study: RocStudy, out_dir: Path | str, prefix: str = "roc") -> list[Path]:
    """Per-instance results CSV, summary CSV of curve points and AUCs, and one plot-data file per method."""
    out_dir = Path(out_dir)
    paths = [out_dir / f"{prefix}_results.csv", out_dir / f"{prefix}_summary.csv"]
    atomic_write(paths[0], csv_text(
        ["index", "method", "label", "score", "failed", "error"],
        [[s.index, s.method.value, s.label.value, s.score, int(s.failed), s.error.replace(",", ";")]
         for s in study.scores]))
    rows = []
    for method, curve in study.curves.items():
        rows.append([method.value, "auc", "", "", "", curve.auc, study.failures[method]])
        for t, tp, fp in zip(curve.thresholds, curve.tpr, curve.fpr):
            rows.append([method.value, "point", t, tp, fp, "", ""])
        dat = out_dir / f"{prefix}_{method.value}.dat"
        atomic_write(dat, "# fpr tpr\n" + "".join(f"{fp:.17g} {tp:.17g}\n" for fp, tp in zip(curve.fpr, curve.tpr)))
        paths.append(dat)
    atomic_write(paths[1], csv_text(["method", "kind", "threshold", "tpr", "fpr", "auc", "failures"], rows))
    return paths


def write_order_report(study: OrderStudy, out_dir: Path | str, prefix: str = "order") -> list[Path]:
    out_dir = Path(out_dir)
    paths = [out_dir / f"{prefix}_results.csv", out_dir / f"{prefix}_summary.csv"]
    atomic_write(paths[0], csv_text(
        ["T", "index", "true_k", "rj_mode", "rj_variance", "bic_order", "rj_error", "bic_error"],
        [[t.T, t.index, t.true_k, t.rj_mode, t.rj_variance, t.bic_order, t.rj_error.replace(",", ";"),
          t.bic_error.replace(",", ";")] for t in study.trials]))
    rows = [["rjmcmc", r.T, r.accuracy_mode, r.mean_variance, r.trials, r.failures] for r in study.rows]
    rows += [["bic", r.T, r.accuracy, "", r.trials, r.failures] for r in study.bic_rows]
    atomic_write(paths[1], csv_text(["method", "T", "accuracy", "variance", "trials", "failures"], rows))
    return paths
