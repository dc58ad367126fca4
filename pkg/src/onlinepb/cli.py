"""Config-driven experiment runner.

Verbs: ``run`` (single traces), ``error-bars`` (multi-seed checkpoint
tables), ``bounds`` (bound reports for an executed run), ``coverage``
(Monte-Carlo certification on synthetic streams).  One JSON config
drives everything; every field has a documented default (see README).

Exit codes: 0 success, 1 config error, 2 runtime error, 3 a
precondition or certification flag was raised.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import certify, plotting
from .core import CLASSIFICATION, HINGE, SQUARED, Dataset, LossSpec, RunTrace
from .data import DataError, DatasetSpec, load_dataset
from .core import eval_loss_from_pred, raw_loss_from_pred
from .distributions import ensemble_kl, normalized_weights, run_rng
from .learners import (
    PSI_POINTWISE,
    PSI_RENYI,
    gibbs_run,
    noisy_prox_run,
    ogd_run,
)
from .pac_bounds import (
    CSV_HEADER,
    disintegrated_rhs,
    lambda_grid_select,
    naive_bound_rhs,
    opb_test_rhs,
    opb_train_rhs,
    optimal_lambda_test,
)
from .streams import SyntheticStream, generate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_FLAG = 3


class ConfigError(ValueError):
    pass


class PreconditionFlag(RuntimeError):
    """The run completed but a precondition / certification check tripped."""


# ---------------------------------------------------------------------------
# config handling

DEFAULTS = {
    "seed": 0,
    "out": "results",
    "delta": 0.05,
    "repetitions": 50,
}


def load_config(path: str, overrides=(), seed=None, out=None) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    merged = {**DEFAULTS, **cfg}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_path(merged, key.split("."), value)
    if seed is not None:
        merged["seed"] = seed
    if out is not None:
        merged["out"] = out
    return merged


def _set_path(obj, keys, value):
    for key in keys[:-1]:
        if isinstance(obj, list):
            obj = obj[int(key)]
        else:
            obj = obj.setdefault(key, {})
    last = keys[-1]
    if isinstance(obj, list):
        obj[int(last)] = value
    else:
        obj[last] = value


def _loss_from_config(cfg: dict, task: str) -> LossSpec:
    spec = cfg.get("loss", {})
    family = spec.get("family", HINGE if task == CLASSIFICATION else SQUARED)
    return LossSpec(family, spec.get("threshold"))


def _dataset_from_config(cfg: dict):
    if "synthetic" in cfg:
        s = dict(cfg["synthetic"])
        try:
            stream = SyntheticStream(
                family=s["family"],
                d=int(s.get("d", 3)),
                m=int(s["m"]),
                noise=float(s.get("noise", 0.5)),
                seed=int(s.get("seed", cfg["seed"])),
                rho=float(s.get("rho", 0.8)),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad synthetic spec: {exc}") from exc
        return generate(stream), stream
    if "dataset" in cfg:
        d = dict(cfg["dataset"])
        try:
            spec = DatasetSpec(
                path=d["path"],
                task=d.get("task", "regression"),
                label_column=d.get("label_column", -1),
                label_map=d.get("label_map"),
                standardize=bool(d.get("standardize", True)),
                shuffle_seed=d.get("shuffle_seed"),
            )
        except KeyError as exc:
            raise ConfigError(f"dataset spec missing {exc}") from exc
        return load_dataset(spec), None
    raise ConfigError("config needs a 'dataset' or 'synthetic' section")


def _algorithms_from_config(cfg: dict):
    entries = cfg.get("algorithms")
    if not entries:
        raise ConfigError("config needs a non-empty 'algorithms' list")
    return entries


def _algorithm_label(entry: dict) -> str:
    if "label" in entry:
        return entry["label"]
    name = entry.get("name", "")
    if name == "noisy_prox":
        return f"noisy_prox_{entry.get('variant', PSI_POINTWISE)}"
    if name == "gibbs":
        return f"gibbs_{entry.get('prior', 'gaussian')}"
    return name


def run_algorithm(entry: dict, data: Dataset, loss: LossSpec, seed: int) -> RunTrace:
    """Dispatch one algorithm entry, filling in the documented defaults."""
    name = entry.get("name")
    m = len(data)
    rng = run_rng(seed, 21)
    if name == "ogd":
        radius = entry.get("radius")
        return ogd_run(data, loss, eta=entry.get("eta"),
                       radius=np.inf if radius is None else float(radius))
    if name == "gibbs":
        return gibbs_run(
            data, loss,
            lam=entry.get("lam"),
            prior=entry.get("prior", "gaussian"),
            sigma=float(entry.get("sigma", 1.5)),
            n_particles=int(entry.get("particles", 2000)),
            rng=rng,
            record_weights=bool(entry.get("record_weights", False)),
        )
    if name == "noisy_prox":
        variant = entry.get("variant", PSI_POINTWISE)
        if variant not in (PSI_POINTWISE, PSI_RENYI):
            raise ConfigError(f"unknown noisy_prox variant {variant!r}")
        if variant == PSI_POINTWISE:
            lam = entry.get("lam", 1e-4 / m)
            sigma = entry.get("sigma", 3e-3)
        else:
            lam = entry.get("lam", 2e-3 / m)
            sigma = entry.get("sigma", 1e-2)
        return noisy_prox_run(data, loss, float(lam), float(sigma), variant, rng=rng)
    raise ConfigError(f"unknown algorithm {name!r}")


# ---------------------------------------------------------------------------
# output helpers: everything is assembled in memory and written at the end,
# so a failing run leaves no partial files behind.


class OutputSink:
    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.texts = {}
        self.figures = []  # (render_fn, filename)

    def add_text(self, name: str, content: str):
        self.texts[name] = content

    def add_figure(self, name: str, render_fn):
        self.figures.append((name, render_fn))

    def flush(self):
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            probe = os.path.join(self.out_dir, ".write_probe")
            with open(probe, "w") as fh:
                fh.write("")
            os.remove(probe)
        except OSError as exc:
            raise RuntimeError(f"output directory not writable: {exc}") from exc
        for name, content in sorted(self.texts.items()):
            with open(os.path.join(self.out_dir, name), "w") as fh:
                fh.write(content)
        for name, render in self.figures:
            render(os.path.join(self.out_dir, name))


def _fmt(x) -> str:
    return repr(float(x))


def _trace_csv(trace: RunTrace) -> str:
    lines = ["step,instant_loss,avg_cum_loss,predictor_norm"]
    avg = trace.avg_cum_losses
    norms = np.linalg.norm(trace.predictors, axis=1)
    for i in range(len(trace)):
        lines.append(f"{i + 1},{_fmt(trace.losses[i])},{_fmt(avg[i])},{_fmt(norms[i])}")
    return "\n".join(lines) + "\n"


def _plot_data(trace: RunTrace) -> str:
    lines = ["# step avg_cum_loss"]
    for i, v in enumerate(trace.avg_cum_losses, start=1):
        lines.append(f"{i} {_fmt(v)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# verbs


def run_single(cfg: dict) -> int:
    data, _ = _dataset_from_config(cfg)
    loss = _loss_from_config(cfg, data.task)
    sink = OutputSink(cfg["out"])
    curves = {}
    for entry in _algorithms_from_config(cfg):
        label = _algorithm_label(entry)
        trace = run_algorithm(entry, data, loss, int(cfg["seed"]))
        sink.add_text(f"trace_{label}.csv", _trace_csv(trace))
        sink.add_text(f"plotdata_{label}.dat", _plot_data(trace))
        curves[label] = trace.avg_cum_losses
    sink.add_figure("traces.png", lambda p, c=curves: plotting.plot_traces(c, p))
    sink.flush()
    return EXIT_OK


def run_error_bars(cfg: dict) -> int:
    n = int(cfg["repetitions"])
    checkpoints = cfg.get("checkpoints")
    if n < 2:
        raise ConfigError("error-bars needs repetitions >= 2")
    if not checkpoints:
        raise ConfigError("error-bars needs a 'checkpoints' list")
    data, _ = _dataset_from_config(cfg)
    if any(int(t) < 1 or int(t) > len(data) for t in checkpoints):
        raise ConfigError("checkpoints must lie in [1, m]")
    loss = _loss_from_config(cfg, data.task)
    sink = OutputSink(cfg["out"])
    seed0 = int(cfg["seed"])
    idx = np.asarray([int(t) - 1 for t in checkpoints])

    tables = {}
    for entry in _algorithms_from_config(cfg):
        label = _algorithm_label(entry)
        values = np.empty((n, len(idx)))
        for k in range(n):
            trace = run_algorithm(entry, data, loss, seed0 + k)
            values[k] = trace.avg_cum_losses[idx]
        means = values.mean(axis=0)
        stds = values.std(axis=0, ddof=1)
        # identical runs (deterministic algorithms) report an exact zero
        stds = np.where(np.ptp(values, axis=0) == 0.0, 0.0, stds)
        lines = ["checkpoint,mean,std"]
        for t, mu, sd in zip(checkpoints, means, stds):
            lines.append(f"{int(t)},{_fmt(mu)},{_fmt(sd)}")
        sink.add_text(f"errorbars_{label}.csv", "\n".join(lines) + "\n")
        tables[label] = (np.asarray(checkpoints, dtype=float), means, stds)
    sink.add_figure(
        "errorbars.png", lambda p, t=tables: plotting.plot_error_bars(t, p))
    sink.flush()
    return EXIT_OK


def _bound_reports_for_trace(entry, trace, loss, m, lam_bound, delta, requested):
    name = entry.get("name")
    K = loss.threshold
    reports = []
    if name == "gibbs":
        lw_hist = trace.extras.get("log_weight_history")
        empirical_pre = float(trace.extras["expected_losses"].sum())
        for bound in requested:
            if bound == "opb_test":
                reports.append(opb_test_rhs(empirical_pre, lam_bound, m, K, delta))
            elif bound in ("opb_train", "naive"):
                if lw_hist is None:
                    raise ConfigError(
                        f"bound {bound!r} needs record_weights on the gibbs entry")
                ens = trace.extras["ensemble"]
                kl_terms = [ensemble_kl(lw_hist[i + 1], lw_hist[i]) for i in range(m)]
                post = np.vstack([normalized_weights(lw) for lw in lw_hist[1:]])
                # empirical term of the training bound: the *updated* measure
                # scores the point it was fit on
                empirical_post = float(np.einsum(
                    "ij,ji->",
                    post,
                    eval_loss_from_pred(
                        loss,
                        ens.particles @ np.transpose(trace.extras["X"]),
                        trace.extras["y"][np.newaxis, :],
                    ),
                ))
                fn = opb_train_rhs if bound == "opb_train" else naive_bound_rhs
                reports.append(fn(empirical_post, kl_terms, lam_bound, m, K, delta))
            else:
                raise ConfigError(f"bound {bound!r} does not apply to gibbs runs")
    elif name == "noisy_prox":
        variant = trace.extras["variant"]
        sigma2 = trace.extras["sigma"] ** 2
        means = trace.extras["means"]
        noises = trace.extras["noises"]
        for bound in requested:
            if bound == "prox_train":
                div = certify.prox_divergence(means, noises, sigma2, variant, lam_bound)
                kind = f"train_{variant}"
                reports.append(disintegrated_rhs(
                    float(trace.losses.sum()), div, kind, lam_bound, m, K, delta))
            elif bound == "prox_test":
                kind = f"test_{variant}"
                reports.append(disintegrated_rhs(
                    float(trace.extras["test_losses"].sum()), 0.0, kind,
                    lam_bound, m, K, delta))
            else:
                raise ConfigError(f"bound {bound!r} does not apply to noisy_prox runs")
    else:
        raise ConfigError(f"no bounds are defined for algorithm {name!r}")
    return reports


def run_bounds_report(cfg: dict) -> int:
    data, _ = _dataset_from_config(cfg)
    loss = _loss_from_config(cfg, data.task)
    m, K = len(data), loss.threshold
    delta = float(cfg["delta"])
    bounds_cfg = cfg.get("bounds", {})
    lam_bound = bounds_cfg.get("lam") or optimal_lambda_test(m, K, delta)
    sink = OutputSink(cfg["out"])

    rows = [CSV_HEADER]
    flagged = False
    summary = []
    all_reports = []
    for entry in _algorithms_from_config(cfg):
        if entry.get("name") not in ("gibbs", "noisy_prox"):
            summary.append(
                f"{_algorithm_label(entry)}: skipped, no randomized-measure bound")
            continue
        if entry.get("name") == "gibbs":
            entry = {**entry, "record_weights": True}
        label = _algorithm_label(entry)
        trace = run_algorithm(entry, data, loss, int(cfg["seed"]))
        trace.extras["X"], trace.extras["y"] = data.X, data.y
        requested = bounds_cfg.get("ids") or _default_bounds(entry)
        reports = _bound_reports_for_trace(
            entry, trace, loss, m, lam_bound, delta, requested)
        for rep in reports:
            rep.bound = f"{label}:{rep.bound}"
            rows.append(rep.csv_row())
        all_reports.extend(reports)
        by_name = {r.bound.split(":", 1)[1]: r for r in reports}
        if "opb_train" in by_name and "naive" in by_name:
            gap = by_name["naive"].total - by_name["opb_train"].total
            summary.append(f"{label}: naive - opb_train gap = {_fmt(gap)}")
        # boundedness check: was the reported loss actually clipped?
        preds = np.einsum("id,id->i", trace.predictors, data.X)
        if np.any(raw_loss_from_pred(loss, preds, data.y) > K):
            summary.append(
                f"{label}: FLAG threshold {K} is below an observed raw loss; "
                "reported losses were clipped")
            flagged = True

    if bounds_cfg.get("lambda_grid"):
        grid = [float(g) for g in bounds_cfg["lambda_grid"]]
        gibbs_entries = [e for e in _algorithms_from_config(cfg)
                         if e.get("name") == "gibbs"]
        if gibbs_entries:
            entry = gibbs_entries[0]

            def empirical_fn(lam):
                tr = run_algorithm({**entry, "lam": lam}, data, loss, int(cfg["seed"]))
                return float(tr.extras["expected_losses"].sum())

            lam_best, rep = lambda_grid_select(grid, m, K, delta, empirical_fn)
            rep.bound = f"{_algorithm_label(entry)}:opb_test_grid"
            rows.append(rep.csv_row())
            summary.append(f"lambda grid selected {_fmt(lam_best)}")

    sink.add_text("bounds.csv", "\n".join(rows) + "\n")
    sink.add_text("bounds_summary.txt", "\n".join(summary) + "\n" if summary else "")
    if all_reports:
        sink.add_figure(
            "bounds.png", lambda p, r=all_reports: plotting.plot_bounds(r, p))
    sink.flush()
    if flagged:
        raise PreconditionFlag("loss threshold below observed raw losses")
    return EXIT_OK


def _default_bounds(entry):
    if entry.get("name") == "gibbs":
        return ["opb_test", "opb_train", "naive"]
    return ["prox_train", "prox_test"]


def run_coverage(cfg: dict) -> int:
    if "synthetic" not in cfg:
        raise ConfigError("coverage requires a synthetic stream (known data law)")
    data, stream = _dataset_from_config(cfg)
    loss = _loss_from_config(cfg, data.task)
    cov = cfg.get("coverage", {})
    bound = cov.get("bound", "opb_test")
    algorithm = cov.get("algorithm", certify.BOUND_ALGORITHMS.get(bound))
    if bound not in certify.BOUND_ALGORITHMS:
        raise ConfigError(f"unknown bound id {bound!r}")
    if certify.BOUND_ALGORITHMS[bound] != algorithm:
        raise ConfigError(
            f"bound {bound!r} applies to {certify.BOUND_ALGORITHMS[bound]!r} runs, "
            f"not {algorithm!r}")
    R = int(cov.get("R", 200))
    result = certify.coverage_experiment(
        algorithm,
        bound,
        stream,
        R=R,
        delta=float(cfg["delta"]),
        n_mc=int(cov.get("n_mc", 10_000)),
        loss=loss,
        lam_bound=cov.get("lam"),
        lam_alg=cov.get("lam_alg"),
        sigma=float(cov.get("sigma", 0.1)),
        n_particles=int(cov.get("particles", 800)),
        prior_sigma=float(cov.get("prior_sigma", 1.5)),
        seed=int(cfg["seed"]),
    )
    sink = OutputSink(cfg["out"])
    lines = ["rep,lhs,rhs,mc_se,violation"]
    for r in range(result.repetitions):
        viol = int(result.lhs[r] > result.rhs[r] + 3.0 * result.se[r])
        lines.append(
            f"{r},{_fmt(result.lhs[r])},{_fmt(result.rhs[r])},"
            f"{_fmt(result.se[r])},{viol}")
    lines.append(
        f"summary,{result.violations},{result.repetitions},"
        f"{_fmt(result.coverage)},{_fmt(result.delta)}")
    sink.add_text("coverage.csv", "\n".join(lines) + "\n")

    envelope = certify.binomial_envelope(result.repetitions, result.delta)
    status = "PASS" if result.passes_envelope() else "FAIL"
    verdict = (f"{status}: bound={bound} coverage={result.coverage:.4f} "
               f"violations={result.violations}/{result.repetitions} "
               f"envelope<={envelope:.2f} delta={result.delta}")
    if R == 1:
        verdict += " WARNING: single repetition, envelope degenerate"
    sink.add_text("coverage_verdict.txt", verdict + "\n")
    sink.add_figure("coverage.png", lambda p: plotting.plot_coverage(result, p))
    sink.flush()
    print(verdict)
    if status == "FAIL":
        raise PreconditionFlag("coverage fell below the binomial envelope")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="onlinepb", description="Online PAC-Bayes experiment runner")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "error-bars", "bounds", "coverage"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")
    return parser


VERBS = {
    "run": run_single,
    "error-bars": run_error_bars,
    "bounds": run_bounds_report,
    "coverage": run_coverage,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override, args.seed, args.out)
        return VERBS[args.verb](cfg)
    except (ConfigError, DataError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionFlag as exc:
        print(f"flag: {exc}", file=sys.stderr)
        return EXIT_FLAG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
