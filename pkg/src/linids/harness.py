"""Experiment orchestration: seeded runs, traces, CSV persistence, sweeps.

A :class:`ExperimentConfig` names an instance family, a list of algorithm
specs, a horizon, a repetition count and a base seed.  Every (algorithm,
repetition) unit derives its randomness from stable hashes of its own
labels, so results are independent of execution order and worker count,
and reruns are byte-identical.

Per-run traces are stored one CSV per run with the fixed schema

    algo,instance,seed,t,cum_regret,gamma,s_t,exploit_rounds,concentration_ok

(one row per checkpoint, LF endings, 12 significant digits), plus a JSON
manifest listing runs, the config hash and the library version.  Regret is
accounted with the true gaps; the algorithms never see the true parameter.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import os
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .baselines import bayes_ids_step, init_baseline, thompson_step, ucb_index
from .core import Instance, RngStream, gap_profile, make_eoo_instance, make_random_instance
from .estimator import BetaSpec, absorb, whitened_beta
from .ids import InfoGainVariant, compute_round, ids_step, init_ids, verify_round

__all__ = [
    "AlgorithmSpec",
    "CheckpointSpec",
    "ExperimentConfig",
    "RegretTrace",
    "AggregateSummary",
    "TRACE_HEADER",
    "build_instance",
    "simulate_run",
    "run_experiment",
    "aggregate",
    "sweep",
    "read_trace_csv",
]

TRACE_HEADER = "algo,instance,seed,t,cum_regret,gamma,s_t,exploit_rounds,concentration_ok"

AGGREGATE_HEADER = "algo,instance,t,mean_regret,stderr,reps"


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm configuration; ``name`` doubles as the seed key."""

    name: str
    kind: str  # ids | linucb | thompson | bayes_ids
    variant: str = "H_UCB"
    beta_mode: str = "logdet"
    beta_fixed: float | None = None
    eta_mode: str = "auto"
    fixed_eta: float | None = None
    fast_pairing: bool = True
    threshold_gaps: bool = False
    mc_samples: int = 10_000

    def __post_init__(self) -> None:
        if self.kind not in ("ids", "linucb", "thompson", "bayes_ids"):
            raise ValueError(f"unknown algorithm kind {self.kind!r}")
        if not re.fullmatch(r"[A-Za-z0-9_.\[\]=;+-]+", self.name):
            raise ValueError(f"algorithm name {self.name!r} has unsafe characters (no commas)")
        self.beta_spec()  # validates
        if self.kind == "ids":
            self.info_variant()

    def beta_spec(self) -> BetaSpec:
        return BetaSpec(mode=self.beta_mode, fixed_value=self.beta_fixed)

    def info_variant(self) -> InfoGainVariant:
        return InfoGainVariant(
            kind=self.variant,
            learning_rate_mode=self.eta_mode,
            fixed_eta=self.fixed_eta,
        )


@dataclass(frozen=True)
class CheckpointSpec:
    """Geometric checkpoint grid, densifiable with explicit extra times."""

    ratio: float = 2.0
    include: tuple[int, ...] = ()

    def grid(self, horizon: int) -> list[int]:
        if self.ratio <= 1.0:
            raise ValueError("checkpoint ratio must exceed 1")
        points = {horizon}
        t = 1.0
        while t <= horizon:
            points.add(int(t))
            t = max(t * self.ratio, int(t) + 1)
        points.update(int(v) for v in self.include if 1 <= v <= horizon)
        return sorted(points)


@dataclass(frozen=True)
class ExperimentConfig:
    instance: dict
    algorithms: tuple[AlgorithmSpec, ...]
    horizon: int
    repetitions: int
    base_seed: int
    checkpoints: CheckpointSpec = field(default_factory=CheckpointSpec)
    output_dir: str = "out"
    assert_invariants: bool = False

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ValueError("algorithm names must be unique")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = [asdict(a) for a in self.algorithms]
        d["checkpoints"] = {
            "ratio": self.checkpoints.ratio,
            "include": list(self.checkpoints.include),
        }
        return d

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        algos = tuple(AlgorithmSpec(**a) for a in d["algorithms"])
        cp = d.get("checkpoints", {})
        spec = CheckpointSpec(
            ratio=float(cp.get("ratio", 2.0)), include=tuple(cp.get("include", ()))
        )
        return ExperimentConfig(
            instance=dict(d["instance"]),
            algorithms=algos,
            horizon=int(d["horizon"]),
            repetitions=int(d["repetitions"]),
            base_seed=int(d["base_seed"]),
            checkpoints=spec,
            output_dir=str(d.get("output_dir", "out")),
            assert_invariants=bool(d.get("assert_invariants", False)),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


@dataclass
class RegretTrace:
    """Checkpointed time series of one run."""

    algo: str
    instance_label: str
    seed: int
    ts: list[int]
    cum_regret: list[float]
    gamma: list[float]
    s_t: list[int]
    exploit_rounds: list[int]
    concentration_ok: list[bool]
    failed: bool = False


@dataclass(frozen=True)
class AggregateSummary:
    """Mean regret curve with standard errors, per algorithm and time."""

    rows: tuple[tuple[str, str, int, float, float, int], ...]  # algo, instance, t, mean, stderr, reps


def build_instance(spec: dict, rep: int, base_seed: int) -> Instance:
    """Materialize the instance for one repetition.

    Random families redraw per repetition from a repetition-keyed stream
    (shared by all algorithms, so comparisons are paired); fixed families
    ignore the repetition index.
    """
    kind = spec["kind"]
    if kind == "random":
        stream = RngStream(base_seed).derive(f"instance/{rep}")
        return make_random_instance(
            d=int(spec["d"]),
            k=int(spec["k"]),
            noise_std=float(spec["noise_std"]),
            rng=stream,
            label=spec.get("label", f"random(d={spec['d']};k={spec['k']})"),
        )
    if kind == "eoo":
        return make_eoo_instance(float(spec["epsilon"]), float(spec["noise_std"]))
    if kind == "explicit":
        return Instance(
            actions=np.asarray(spec["actions"], dtype=np.float64),
            theta_star=np.asarray(spec["theta_star"], dtype=np.float64),
            noise_std=float(spec["noise_std"]),
            label=spec.get("label", "explicit"),
        )
    if kind == "file":
        with open(spec["path"], "r", encoding="utf-8") as fh:
            inner = json.load(fh)
        inner.setdefault("kind", "explicit")
        return build_instance(inner, rep, base_seed)
    raise ValueError(f"unknown instance kind {kind!r}")


def _concentration_holds(est, theta_star: np.ndarray, bound: float) -> bool:
    diff = est.theta_hat - theta_star
    return float(diff @ (est.precision @ diff)) <= bound


def simulate_run(
    instance: Instance,
    algo: AlgorithmSpec,
    horizon: int,
    run_stream: RngStream,
    checkpoints: list[int],
    assert_invariants: bool = False,
    seed: int = 0,
) -> RegretTrace:
    """Simulate one seeded run and collect the checkpointed diagnostics."""
    gen = run_stream.generator()
    prof = gap_profile(instance)
    gaps = prof.gaps.tolist()
    theta_star = instance.theta_star
    whitened_gaps = prof.gaps / instance.whitening_scale

    ts: list[int] = []
    regret_col: list[float] = []
    gamma_col: list[float] = []
    s_col: list[int] = []
    exploit_col: list[int] = []
    conc_col: list[bool] = []

    cum_regret = 0.0
    gamma = 0.0
    exploit_rounds = 0
    conc_ok = True
    cp_iter = iter(checkpoints)
    next_cp = next(cp_iter, None)

    if algo.kind == "ids":
        state = init_ids(
            instance,
            variant=algo.info_variant(),
            beta_spec=algo.beta_spec(),
            fast_pairing=algo.fast_pairing,
            threshold_gaps=algo.threshold_gaps,
        )
        checked_s = 0
        for t in range(1, horizon + 1):
            rnd = state.last_round
            fresh = (
                rnd is None
                or rnd.local_s != state.local_s
                or (algo.beta_mode == "simplified" and rnd.computed_at_t != t)
            )
            if fresh:
                rnd = compute_round(state, instance)
                state.last_round = rnd
                if state.local_s != checked_s:
                    checked_s = state.local_s
                    conc_ok = conc_ok and _concentration_holds(
                        state.estimator, theta_star, rnd.beta_gap
                    )
                    if assert_invariants:
                        verify_round(
                            rnd,
                            state.estimator,
                            instance,
                            true_whitened_gaps=whitened_gaps,
                            theta_star=theta_star,
                            thresholded=algo.threshold_gaps,
                            cell_based=state.variant.cell_based,
                        )
            arm, rnd, state = ids_step(state, instance, gen)
            if rnd.exploit:
                exploit_rounds += 1
            else:
                gamma += float(rnd.info[arm])
            cum_regret += gaps[arm]
            if t == next_cp:
                ts.append(t)
                regret_col.append(cum_regret)
                gamma_col.append(gamma)
                s_col.append(state.local_s - 1)
                exploit_col.append(exploit_rounds)
                conc_col.append(conc_ok)
                next_cp = next(cp_iter, None)
    elif algo.kind == "linucb":
        # Tight loop: same choice rule and update as linucb_step, with the
        # per-round wrappers inlined (identical draws from the stream).
        state = init_baseline(instance, "linucb", beta_spec=algo.beta_spec())
        est = state.estimator
        beta_spec = algo.beta_spec()
        actions_w = state.actions_w
        means = instance.mean_rewards().tolist()
        sigma = instance.noise_std
        scale = instance.whitening_scale
        for t in range(1, horizon + 1):
            bound = whitened_beta(est, beta_spec, float(t) * t, t)
            conc_ok = conc_ok and _concentration_holds(est, theta_star, bound)
            arm = ucb_index(est, actions_w, bound)
            y = means[arm] + sigma * float(gen.standard_normal())
            absorb(est, actions_w[arm], y / scale)
            cum_regret += gaps[arm]
            if t == next_cp:
                ts.append(t)
                regret_col.append(cum_regret)
                gamma_col.append(0.0)
                s_col.append(t)
                exploit_col.append(0)
                conc_col.append(conc_ok)
                next_cp = next(cp_iter, None)
    else:
        state = init_baseline(
            instance,
            algo.kind,
            beta_spec=algo.beta_spec(),
            mc_samples=algo.mc_samples,
            fast_pairing=algo.fast_pairing,
        )
        beta_spec = algo.beta_spec()
        for t in range(1, horizon + 1):
            bound = whitened_beta(state.estimator, beta_spec, float(t) * t, t)
            conc_ok = conc_ok and _concentration_holds(state.estimator, theta_star, bound)
            if algo.kind == "bayes_ids":
                arm, state, _ = bayes_ids_step(state, instance, gen)
            else:
                arm, state = thompson_step(state, instance, gen)
            cum_regret += gaps[arm]
            if t == next_cp:
                ts.append(t)
                regret_col.append(cum_regret)
                gamma_col.append(0.0)
                s_col.append(t)
                exploit_col.append(0)
                conc_col.append(conc_ok)
                next_cp = next(cp_iter, None)

    return RegretTrace(
        algo=algo.name,
        instance_label=instance.label,
        seed=seed,
        ts=ts,
        cum_regret=regret_col,
        gamma=gamma_col,
        s_t=s_col,
        exploit_rounds=exploit_col,
        concentration_ok=conc_col,
    )


def _format_row(
    algo: str, label: str, seed: int, t: int, reg: float, gam: float, s: int, ex: int, ok: bool
) -> str:
    return (
        f"{algo},{label},{seed},{t},{reg:.12g},{gam:.12g},{s},{ex},{1 if ok else 0}"
    )


def trace_to_csv(trace: RegretTrace) -> str:
    lines = [TRACE_HEADER]
    for i, t in enumerate(trace.ts):
        lines.append(
            _format_row(
                trace.algo.replace(",", ";"),
                trace.instance_label.replace(",", ";"),
                trace.seed,
                t,
                trace.cum_regret[i],
                trace.gamma[i],
                trace.s_t[i],
                trace.exploit_rounds[i],
                trace.concentration_ok[i],
            )
        )
    return "\n".join(lines) + "\n"


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=+-]", "-", name)


def _run_unit(config_dict: dict, algo_index: int, rep: int) -> tuple[str, str, str]:
    """Worker entry: simulate one (algorithm, repetition) unit and write its CSV.

    Returns (filename, status, message).  Pure function of its arguments, so
    scheduling order and worker count cannot affect outputs.
    """
    config = ExperimentConfig.from_dict(config_dict)
    algo = config.algorithms[algo_index]
    fname = f"{_sanitize(algo.name)}__{_sanitize(config.instance.get('label', config.instance['kind']))}__{rep:04d}.csv"
    path = os.path.join(config.output_dir, fname)
    try:
        instance = build_instance(config.instance, rep, config.base_seed)
        stream = RngStream(config.base_seed).derive(f"run/{algo.name}/{rep}")
        trace = simulate_run(
            instance,
            algo,
            config.horizon,
            stream,
            config.checkpoints.grid(config.horizon),
            assert_invariants=config.assert_invariants,
            seed=rep,
        )
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(trace_to_csv(trace))
        return fname, "ok", ""
    except Exception as exc:  # noqa: BLE001 - one failed run must not kill the rest
        return fname, "failed", f"{type(exc).__name__}: {exc}"


def run_experiment(
    config: ExperimentConfig, threads: int | None = None
) -> tuple[list[str], dict]:
    """Run every (algorithm, repetition) unit, write CSVs and the manifest.

    Units execute in a process pool capped at ``threads`` (default: CPU
    count); outputs are byte-identical for any thread count.
    """
    os.makedirs(config.output_dir, exist_ok=True)
    units = [
        (i, rep) for i in range(len(config.algorithms)) for rep in range(config.repetitions)
    ]
    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    config_dict = config.to_dict()
    results: list[tuple[str, str, str]] = []
    if workers == 1 or len(units) == 1:
        for i, rep in units:
            results.append(_run_unit(config_dict, i, rep))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_unit, config_dict, i, rep) for i, rep in units]
            results = [f.result() for f in futs]

    manifest = {
        "version": __version__,
        "config": config_dict,
        "config_sha256": config.config_hash(),
        "runs": [
            {
                "algo": config.algorithms[i].name,
                "seed": rep,
                "file": res[0],
                "status": res[1],
                **({"error": res[2]} if res[2] else {}),
            }
            for (i, rep), res in zip(units, results)
        ],
    }
    with open(
        os.path.join(config.output_dir, "manifest.json"), "w", encoding="utf-8", newline=""
    ) as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files = [r[0] for r in results if r[1] == "ok"]
    return files, manifest


def read_trace_csv(path: str) -> list[dict]:
    """Parse one trace CSV, validating the schema."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: missing or wrong header")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 9:
            raise ValueError(f"{path}:{ln}: expected 9 fields, got {len(parts)}")
        rows.append(
            {
                "algo": parts[0],
                "instance": parts[1],
                "seed": int(parts[2]),
                "t": int(parts[3]),
                "cum_regret": float(parts[4]),
                "gamma": float(parts[5]),
                "s_t": int(parts[6]),
                "exploit_rounds": int(parts[7]),
                "concentration_ok": parts[8] == "1",
            }
        )
    return rows


def aggregate(paths: list[str], out_path: str | None = None) -> AggregateSummary:
    """Mean and standard error of cumulative regret per (algo, t).

    All runs of one algorithm must share the same checkpoint grid.
    ``stderr`` is the sample standard deviation over repetitions divided by
    sqrt(reps); zero when all traces agree or reps == 1.
    """
    if not paths:
        raise ValueError("need at least one trace file")
    groups: dict[tuple[str, str], dict[int, list[float]]] = {}
    grids: dict[tuple[str, str], set[tuple[int, ...]]] = {}
    for path in sorted(paths):
        rows = read_trace_csv(path)
        if not rows:
            continue
        key = (rows[0]["algo"], rows[0]["instance"])
        grid = tuple(r["t"] for r in rows)
        grids.setdefault(key, set()).add(grid)
        bucket = groups.setdefault(key, {})
        for r in rows:
            bucket.setdefault(r["t"], []).append(r["cum_regret"])
    for key, gset in grids.items():
        if len(gset) != 1:
            raise ValueError(f"misaligned checkpoint grids for {key[0]}")
    out_rows = []
    for (algo, label), bucket in sorted(groups.items()):
        for t in sorted(bucket):
            vals = np.asarray(bucket[t])
            n = vals.size
            mean = float(vals.mean())
            stderr = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            out_rows.append((algo, label, t, mean, stderr, n))
    summary = AggregateSummary(rows=tuple(out_rows))
    if out_path:
        lines = [AGGREGATE_HEADER]
        for algo, label, t, mean, stderr, n in out_rows:
            lines.append(f"{algo},{label},{t},{mean:.12g},{stderr:.12g},{n}")
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return summary


def sweep(
    config: ExperimentConfig,
    beta_grid: list[float],
    eta_grid: list,
    threads: int | None = None,
    out_path: str | None = None,
) -> dict:
    """Final mean regret per (beta, eta) cell, written as a matrix CSV.

    The first configured algorithm is the template; each cell fixes the
    confidence coefficient to ``beta`` and the soft-min rate to ``eta``
    (``"auto"`` keeps the default rule).  Cell seeds derive from the cell
    key, so grid order is irrelevant.
    """
    if not beta_grid or not list(eta_grid):
        raise ValueError("sweep grids must be nonempty")
    template = config.algorithms[0]
    specs = []
    for b in beta_grid:
        for e in eta_grid:
            auto = isinstance(e, str) and e == "auto"
            specs.append(
                replace(
                    template,
                    name=f"{template.name}[beta={b:g};eta={e if auto else format(float(e), 'g')}]",
                    beta_mode="fixed",
                    beta_fixed=float(b),
                    eta_mode="auto" if auto else "fixed",
                    fixed_eta=None if auto else float(e),
                )
            )
    cfg = replace(config, algorithms=tuple(specs))
    files, _ = run_experiment(cfg, threads=threads)
    summary = aggregate([os.path.join(cfg.output_dir, f) for f in files])
    finals: dict[str, float] = {}
    for algo, _label, t, mean, _se, _n in summary.rows:
        if t == config.horizon:
            finals[algo] = mean
    matrix: dict = {"betas": list(beta_grid), "etas": list(eta_grid), "cells": {}}
    for b in beta_grid:
        for e in eta_grid:
            auto = isinstance(e, str) and e == "auto"
            name = f"{template.name}[beta={b:g};eta={e if auto else format(float(e), 'g')}]"
            matrix["cells"][(b, str(e))] = finals[name]
    if out_path:
        header = "beta," + ",".join(str(e) for e in eta_grid)
        lines = [header]
        for b in beta_grid:
            cells = [f"{matrix['cells'][(b, str(e))]:.12g}" for e in eta_grid]
            lines.append(f"{b:g}," + ",".join(cells))
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return matrix
