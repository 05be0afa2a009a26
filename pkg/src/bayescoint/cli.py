"""Command-line interface.

Commands: ``test`` runs one cointegration test on a CSV, ``simulate`` writes
a synthetic instance, ``bench-roc`` and ``bench-order`` run the Monte Carlo
studies, and ``summarize`` recomputes a study summary from its results CSV.

Machine-readable output is one ``key=value`` per line. Exit codes: 0 on
success, 2 for bad input, 3 when a computation breaks down. The default
seed is 0 unless the ``BAYESCOINT_SEED`` environment variable is set.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ._io import atomic_write, csv_text, write_csv
from .ar1 import ar1_test
from .arp import McmcConfig, gibbs_test
from .classical import engle_granger_test
from .core import Dataset, Method, RegressionSpec, TestResult, Verdict
from .datagen import GenConfig, generate_instance, write_instance
from .errors import DataError, MissingDataError, NumericalError, ParseError
from .harness import (
    OrderStudy,
    RocStudy,
    TrialScore,
    roc_curve,
    run_order_study,
    run_roc_study,
    write_order_report,
    write_roc_report,
)
from .order import rjmcmc_test

__all__ = ["CliConfig", "load_csv", "main", "run"]

SEED_ENV = "BAYESCOINT_SEED"
MISSING_TOKENS = {"", "na", "nan", "n/a", "null", "none", "."}
COMMANDS = ("test", "simulate", "bench-roc", "bench-order", "summarize")
DESK_TRIALS = {"bench-roc": 200, "bench-order": 50}
FULL_TRIALS = {"bench-roc": 2500, "bench-order": 250}


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise DataError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _parse_cell(text: str, line: int, column: int) -> float:
    if text.strip().lower() in MISSING_TOKENS:
        raise MissingDataError(f"missing value {text!r}", line, column)
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"non-numeric cell {text!r}", line, column) from None
    if not math.isfinite(v):
        raise MissingDataError(f"non-finite value {text!r}", line, column)
    return v


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path: Path | str, regressand: str | None = None) -> Dataset:
    """Read a headed CSV into a :class:`Dataset`.

    A first column whose cells are not numbers (dates, times) is treated as
    a timestamp and dropped. Line and column numbers in errors are 1-based
    positions in the file. The regressand defaults to the first data column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError("empty file", 1)
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise ParseError("no data rows", 2)
    skip = 1 if (len(header) > 1 and body[0] and body[0][0].strip()
                 and not _is_number(body[0][0]) and body[0][0].strip().lower() not in MISSING_TOKENS) else 0
    labels = tuple(header[skip:])
    if not labels:
        raise ParseError("no data columns", 1)
    values = np.empty((len(body), len(labels)))
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", line)
        for j in range(len(labels)):
            values[i, j] = _parse_cell(row[j + skip], line, j + skip + 1)
    data = Dataset(values, 0, labels)
    return data.with_regressand(regressand) if regressand is not None else data


@dataclass
class CliConfig:
    command: str
    input_path: Path | None = None
    regressand: str | None = None
    method: Method = Method.RJMCMC
    intercept: bool = True
    order: int | None = None
    k_max: int = 5
    alpha_level: float | None = None
    iterations: int = 25_000
    burn_in: int = 5_000
    thin: int = 1
    seed: int = 0
    output_dir: Path | None = None
    full_scale: bool = False
    T: list = field(default_factory=lambda: [200])
    trials: int | None = None
    p_unit_root: float = 0.5
    methods: list = field(default_factory=list)
    workers: int = 1

    def spec(self) -> RegressionSpec:
        alpha = self.alpha_level
        if alpha is None:
            alpha = 1.0 if self.method is Method.AR1_BAYES_FACTOR else 0.05
        order = self.order
        if self.method is Method.GIBBS and order is None:
            order = 1
        return RegressionSpec(self.intercept, self.method, order, self.k_max, alpha)

    def mcmc(self) -> McmcConfig:
        return McmcConfig(self.iterations, self.burn_in, self.thin, self.seed)


def _emit(pairs: Sequence[tuple[str, object]], out) -> None:
    for key, value in pairs:
        print(f"{key}={value}", file=out)


def _run_test(cfg: CliConfig, out) -> list[Path]:
    if cfg.input_path is None:
        raise DataError("test needs --input")
    data = load_csv(cfg.input_path, cfg.regressand)
    spec = cfg.spec()
    if spec.method in (Method.AR1_BAYES_FACTOR, Method.AR1_CREDIBLE):
        result = ar1_test(data, spec)
    elif spec.method is Method.GIBBS:
        result = gibbs_test(data, spec, cfg.mcmc())
    elif spec.method is Method.RJMCMC:
        result = rjmcmc_test(data, spec, cfg.mcmc())
    else:
        result = engle_granger_test(data, spec)
    print(f"{result.method.value}: {result.verdict.value} (statistic {result.statistic:.6g}, "
          f"threshold {result.threshold:.6g}, T={data.T}, regressand {data.labels[data.regressand_index]})", file=out)
    _emit(result.key_values(), out)
    return _write_test_artifacts(cfg, data, result)


def _write_test_artifacts(cfg: CliConfig, data: Dataset, result: TestResult) -> list[Path]:
    if cfg.output_dir is None:
        return []
    out_dir = Path(cfg.output_dir)
    paths = [out_dir / "result.txt"]
    atomic_write(paths[0], "".join(f"{k}={v}\n" for k, v in result.key_values()))
    if result.method is Method.AR1_CREDIBLE:
        p = out_dir / "posterior.csv"
        write_csv(p, ["phi", "density"], zip(result.posterior.grid, result.posterior.density))
        paths.append(p)
    if result.draws is not None:
        d = result.draws
        header = (["k", "rho"] + [f"xi_{i}" for i in range(1, d.theta.shape[1])] + ["alpha"]
                  + [f"beta2_{name}" for name in data.regressor_labels] + ["sigma2"])
        rows = ([int(k)] + list(th) + [a] + list(b) + [s]
                for k, th, a, b, s in zip(d.k, d.theta, d.alpha, d.beta2, d.sigma2))
        p = out_dir / "draws.csv"
        write_csv(p, header, rows)
        paths.append(p)
    if result.order_posterior is not None:
        p = out_dir / "order_posterior.csv"
        write_csv(p, ["k", "mass"], ([k, m] for k, m in enumerate(result.order_posterior.mass)))
        paths.append(p)
    return paths


def _run_simulate(cfg: CliConfig, out) -> list[Path]:
    gen = GenConfig(T=cfg.T[0], k=cfg.order if cfg.order is not None else 1, p_unit_root=cfg.p_unit_root,
                    seed=cfg.seed)
    inst = generate_instance(gen)
    out_dir = Path(cfg.output_dir) if cfg.output_dir is not None else Path(".")
    csv_path = out_dir / f"instance_T{gen.T}_k{gen.k}_seed{gen.seed}.csv"
    truth = write_instance(inst, csv_path)
    _emit([("csv", csv_path), ("truth", truth), ("label", inst.label.value), ("k", inst.k)], out)
    return [csv_path, truth]


def _trials(cfg: CliConfig) -> int:
    if cfg.trials is not None:
        return cfg.trials
    return (FULL_TRIALS if cfg.full_scale else DESK_TRIALS)[cfg.command]


def _run_bench_roc(cfg: CliConfig, out) -> list[Path]:
    methods = cfg.methods or ([Method.AR1_BAYES_FACTOR, Method.AR1_CREDIBLE, Method.ENGLE_GRANGER]
                              if (cfg.order or 1) == 1 else [Method.GIBBS, Method.ENGLE_GRANGER])
    gen = GenConfig(T=cfg.T[0], k=cfg.order or 1, p_unit_root=cfg.p_unit_root)
    study = run_roc_study(gen, methods, _trials(cfg), cfg.seed, k_max=cfg.k_max, mcmc=cfg.mcmc(),
                          workers=cfg.workers)
    _emit_roc(study, out)
    return write_roc_report(study, cfg.output_dir or Path("."))


def _emit_roc(study: RocStudy, out) -> None:
    for method, curve in study.curves.items():
        _emit([(f"auc_{method.value}", repr(curve.auc)), (f"failures_{method.value}", study.failures[method])], out)


def _run_bench_order(cfg: CliConfig, out) -> list[Path]:
    gen = GenConfig(k=None, p_unit_root=cfg.p_unit_root)
    study = run_order_study(gen, cfg.T, _trials(cfg), cfg.seed, k_max=cfg.k_max, mcmc=cfg.mcmc(),
                            workers=cfg.workers)
    _emit_order(study, out)
    return write_order_report(study, cfg.output_dir or Path("."))


def _emit_order(study: OrderStudy, out) -> None:
    for r, b in zip(study.rows, study.bic_rows):
        _emit([(f"accuracy_rjmcmc_T{r.T}", repr(r.accuracy_mode)), (f"variance_rjmcmc_T{r.T}", repr(r.mean_variance)),
               (f"accuracy_bic_T{b.T}", repr(b.accuracy)), (f"failures_rjmcmc_T{r.T}", r.failures),
               (f"failures_bic_T{b.T}", b.failures)], out)


def _run_summarize(cfg: CliConfig, out) -> list[Path]:
    """Recompute AUCs or order accuracies from a results CSV written by a bench command."""
    if cfg.input_path is None:
        raise DataError("summarize needs --input")
    with Path(cfg.input_path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ParseError("results file has no rows", 2)
    if "score" in rows[0]:
        scores = [TrialScore(int(r["index"]), Verdict(r["label"]), Method(r["method"]),
                             float(r["score"]), r["error"]) for r in rows]
        methods = list(dict.fromkeys(s.method for s in scores))
        curves, failures = {}, {}
        for m in methods:
            ok = [s for s in scores if s.method is m and not s.failed]
            failures[m] = sum(1 for s in scores if s.method is m and s.failed)
            curves[m] = roc_curve([s.score for s in ok], [s.label is Verdict.COINTEGRATED for s in ok])
        _emit_roc(RocStudy(curves, failures, scores), out)
        return []
    if "rj_mode" in rows[0]:
        for T in dict.fromkeys(int(r["T"]) for r in rows):
            sub = [r for r in rows if int(r["T"]) == T]
            rj = [r for r in sub if not r["rj_error"]]
            bic = [r for r in sub if not r["bic_error"]]
            _emit([(f"accuracy_rjmcmc_T{T}", repr(float(np.mean([r["rj_mode"] == r["true_k"] for r in rj])))),
                   (f"variance_rjmcmc_T{T}", repr(float(np.mean([float(r["rj_variance"]) for r in rj])))),
                   (f"accuracy_bic_T{T}", repr(float(np.mean([r["bic_order"] == r["true_k"] for r in bic]))))], out)
        return []
    raise ParseError("unrecognised results file: needs a score or rj_mode column", 1)


HANDLERS = {
    "test": _run_test,
    "simulate": _run_simulate,
    "bench-roc": _run_bench_roc,
    "bench-order": _run_bench_order,
    "summarize": _run_summarize,
}


def run(cfg: CliConfig, out=None, err=None) -> int:
    """Execute one command; returns the process exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        paths = HANDLERS[cfg.command](cfg, out)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=err)
        return 3
    for p in paths:
        print(f"wrote={p}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayescoint", description="Bayesian residual-based cointegration tests.",
                                     epilog=f"The default seed is 0, or ${SEED_ENV} when set.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help=f"random seed (default ${SEED_ENV} or 0)")
        p.add_argument("--output-dir", type=Path, default=None)
        p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--k-max", type=int, default=5)
        p.add_argument("--iterations", type=int, default=25_000)
        p.add_argument("--burn-in", type=int, default=5_000)
        p.add_argument("--thin", type=int, default=1)

    p = sub.add_parser("test", help="test one CSV for cointegration")
    common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--regressand", default=None, help="column regressed on the others (default: first)")
    p.add_argument("--method", type=Method, default=Method.RJMCMC, choices=list(Method),
                   metavar="{" + ",".join(m.value for m in Method) + "}")
    p.add_argument("--order", type=int, default=None, help="residual order for the gibbs method")
    p.add_argument("--alpha", type=float, default=None,
                   help="decision threshold (default 0.05, or 1.0 for the Bayes factor)")

    p = sub.add_parser("simulate", help="write one synthetic instance and its truth file")
    common(p)
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--p-unit-root", type=float, default=0.5)

    for name, helptext in (("bench-roc", "ROC classification study"), ("bench-order", "order accuracy study")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--T", type=int, nargs="+", default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--full-scale", action="store_true", help="2500 ROC / 250 order trials")
        p.add_argument("--p-unit-root", type=float, default=0.5)
        p.add_argument("--workers", type=int, default=1)
        if name == "bench-roc":
            p.add_argument("--order", type=int, default=1)
            p.add_argument("--methods", nargs="+", type=Method, default=None,
                           metavar="METHOD", help="methods to compare")

    p = sub.add_parser("summarize", help="recompute a study summary from its results CSV")
    p.add_argument("--input", type=Path, required=True)
    return parser


def config_from_args(ns: argparse.Namespace) -> CliConfig:
    get = lambda name, default=None: getattr(ns, name, default)  # noqa: E731
    T = get("T")
    if T is None:
        T = [100, 500, 1000] if ns.command == "bench-order" else [200]
    elif isinstance(T, int):
        T = [T]
    seed = get("seed")
    return CliConfig(
        command=ns.command,
        input_path=get("input"),
        regressand=get("regressand"),
        method=get("method", Method.RJMCMC),
        intercept=get("intercept", True),
        order=get("order"),
        k_max=get("k_max", 5),
        alpha_level=get("alpha"),
        iterations=get("iterations", 25_000),
        burn_in=get("burn_in", 5_000),
        thin=get("thin", 1),
        seed=default_seed() if seed is None else seed,
        output_dir=get("output_dir"),
        full_scale=get("full_scale", False),
        T=list(T),
        trials=get("trials"),
        p_unit_root=get("p_unit_root", 0.5),
        methods=list(get("methods") or []),
        workers=get("workers", 1),
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
