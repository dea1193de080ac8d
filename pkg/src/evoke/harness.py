"""Experiment orchestration: configs, seeded campaigns, reports."""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
import statistics
import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import tasks
from .errors import EvokeError, RunTimeout
from .lstm import decode_genome
from .neuroevolution import EvolutionConfig, FitnessRecord, evolve
from .readout import KernelSpec, LinearReadout, SvmModel, fit_pseudoinverse, fit_svc, fit_svr

log = logging.getLogger(__name__)

READOUT_ALIASES = {"svm": "svm", "pi": "pseudoinverse", "pseudoinverse": "pseudoinverse"}

# hyperparameters the source experiments leave unstated; echoed in every summary
UNSTATED_DEFAULTS = ("subpop_size", "trials_per_neuron", "stagnation_window", "epsilon",
                     "smo_tol", "input_bias", "replace_ties")


@dataclass
class ExperimentConfig:
    task: str = "csl"
    readout: str = "svm"
    csl_n: int = 10
    series_length: int = 1000
    n_cells: int = 5
    subpop_size: int = 20
    trials_per_neuron: int = 3
    cauchy_alpha: float = 0.1
    weight_min: float = -5.0
    weight_max: float = 5.0
    stagnation_window: int = 10
    max_generations: int = 50
    replace_ties: bool = True
    input_bias: float = 0.0
    forget_bias: float = 1.5
    output_bias: float = -1.5
    sigma: float = 2.0
    capacity: float = 100.0
    epsilon: float = 0.01
    smo_tol: float = 1e-3
    generalization_cap: int = 1000
    run_timeout: float = 1800.0
    n_runs: int = 20
    base_seed: int = 0
    out_dir: str = ""

    def __post_init__(self):
        self.readout = READOUT_ALIASES.get(self.readout, self.readout)
        if self.task not in ("csl", "sine"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.readout not in ("svm", "pseudoinverse"):
            raise ValueError(f"unknown readout {self.readout!r}")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.task == "csl" and self.csl_n < 2:
            raise ValueError("csl_n must be >= 2")
        if self.task == "sine" and self.series_length < tasks.TEST[1]:
            raise ValueError(f"series_length must be >= {tasks.TEST[1]}")
        KernelSpec(self.sigma)
        self.evolution_config(0)

    @classmethod
    def for_task(cls, task: str, **overrides) -> "ExperimentConfig":
        """Standard settings of the ``task`` benchmark."""
        if task == "sine":
            base = dict(task="sine", n_cells=10, weight_min=-1.0, weight_max=1.0, capacity=10.0,
                        forget_bias=0.0, output_bias=0.0)
        elif task == "csl":
            # no reference evaluation budget for this task; 40 x 5 = 200 evaluations per generation
            base = dict(task="csl", subpop_size=40, trials_per_neuron=5)
        else:
            raise ValueError(f"unknown task {task!r}")
        base.update(overrides)
        return cls(**base)

    @property
    def n_inputs(self) -> int:
        return 4 if self.task == "csl" else 1

    @property
    def gate_biases(self) -> tuple:
        return (self.input_bias, self.forget_bias, self.output_bias)

    def evolution_config(self, seed: int) -> EvolutionConfig:
        return EvolutionConfig(
            n_cells=self.n_cells, n_inputs=self.n_inputs, subpop_size=self.subpop_size,
            trials_per_neuron=self.trials_per_neuron, cauchy_alpha=self.cauchy_alpha,
            weight_init_range=(self.weight_min, self.weight_max),
            stagnation_window=self.stagnation_window, max_generations=self.max_generations,
            rng_seed=seed, replace_ties=self.replace_ties)

    def to_text(self) -> str:
        """``key = value`` lines for every field except ``out_dir``, which only
        says where the report goes and would break byte-identical reports."""
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" if f.type in ("float", float)
                       else f"{f.name} = {getattr(self, f.name)}\n"
                       for f in dataclasses.fields(self) if f.name != "out_dir")

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(values) - set(types)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in values.items():
            kind = types[key]
            if kind in ("bool", bool):
                kwargs[key] = _parse_bool(value)
            elif kind in ("int", int):
                kwargs[key] = int(value)
            elif kind in ("float", float):
                kwargs[key] = float(value)
            else:
                kwargs[key] = str(value)
        return cls.for_task(kwargs.pop("task", "csl"), **kwargs)


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def load_config(path, **overrides) -> ExperimentConfig:
    return ExperimentConfig.from_text(Path(path).read_text(), **overrides)


# --------------------------------------------------------------------------- fitness


def readout_fitter(config: ExperimentConfig) -> Callable:
    if config.readout == "pseudoinverse":
        return fit_pseudoinverse
    kernel = KernelSpec(config.sigma)
    if config.task == "csl":
        return partial(fit_svc, kernel=kernel, capacity=config.capacity, tol=config.smo_tol)
    return partial(fit_svr, kernel=kernel, capacity=config.capacity, epsilon=config.epsilon,
                   tol=config.smo_tol)


def make_dataset(config: ExperimentConfig):
    if config.task == "csl":
        return tasks.generate_csl_set(config.csl_n)
    return tasks.generate_sine_series(config.series_length)


def decode(config: ExperimentConfig, genome):
    return decode_genome(genome, config.n_inputs, config.gate_biases)


def fit_readouts(config: ExperimentConfig, net, dataset):
    """Phase 1: the readout(s) fitted on the training data only."""
    fit = readout_fitter(config)
    if config.task == "csl":
        return tasks.fit_csl_models(net, dataset, fit)
    rows = tasks.sine_clamped_rows(net, dataset)
    return fit(tasks.sine_table(rows, dataset, tasks.TRAIN))


def make_fitness_fn(config: ExperimentConfig, dataset) -> Callable:
    """Genome -> training + validation error; failures map to +inf."""
    fit = readout_fitter(config)

    def fitness(genome) -> float:
        try:
            net = decode(config, genome)
            if config.task == "csl":
                models = tasks.fit_csl_models(net, dataset, fit)
                value = tasks.csl_fitness(net, models, dataset)
            else:
                value = tasks.sine_fit(net, dataset, fit)[1]
        except (EvokeError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            log.debug("genome failed: %s", exc)
            return math.inf
        return value if math.isfinite(value) else math.inf

    return fitness


# --------------------------------------------------------------------------- runs


@dataclass
class RunResult:
    run: int
    seed: int
    history: list = field(default_factory=list)
    best_genome: Optional[list] = None
    best_fitness: float = math.inf
    test_metric: float = math.nan
    wall_clock: float = 0.0
    failed: bool = False
    error: str = ""
    predictions: Optional[np.ndarray] = None
    readouts: object = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    runs: list

    @property
    def metric_name(self) -> str:
        return "generalization" if self.config.task == "csl" else "test_sse"

    def metrics(self) -> list:
        return [r.test_metric for r in self.runs if not r.failed]

    def aggregate(self) -> dict:
        m = self.metrics()
        if not m:
            return dict(n=0, mean=math.nan, median=math.nan, min=math.nan, max=math.nan)
        return dict(n=len(m), mean=statistics.fmean(m), median=statistics.median(m),
                    min=min(m), max=max(m))


def evaluate_best(config: ExperimentConfig, genome, dataset):
    """Refit the readout(s) of ``genome`` and measure the test metric.

    Returns (metric, readouts, predictions-or-None).
    """
    net = decode(config, genome)
    readouts = fit_readouts(config, net, dataset)
    if config.task == "csl":
        return float(tasks.csl_generalization(net, readouts, config.generalization_cap)), readouts, None
    preds = tasks.sine_generate(net, readouts, dataset, tasks.TEST)
    return tasks.sse(preds, dataset.segment(tasks.TEST)), readouts, preds


def run_single(config: ExperimentConfig, run: int, dataset=None) -> RunResult:
    seed = config.base_seed + run
    dataset = make_dataset(config) if dataset is None else dataset
    result = RunResult(run, seed)
    start = time.monotonic()
    try:
        genome, history = evolve(config.evolution_config(seed), make_fitness_fn(config, dataset),
                                 deadline=start + config.run_timeout)
        result.history, result.best_genome = history, genome
        result.best_fitness = history[-1].best_fitness
        result.test_metric, result.readouts, result.predictions = evaluate_best(config, genome, dataset)
    except (RunTimeout, EvokeError) as exc:
        result.failed, result.error = True, f"{type(exc).__name__}: {exc}"
        log.warning("run %d failed: %s", run, result.error)
    result.wall_clock = time.monotonic() - start
    log.info("run %d (seed %d): fitness %.6g, test %s, %.1fs", run, seed, result.best_fitness,
             result.test_metric, result.wall_clock)
    return result


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """``n_runs`` independent evolutions seeded ``base_seed + r``."""
    dataset = make_dataset(config)
    return ExperimentReport(config, [run_single(config, r, dataset) for r in range(config.n_runs)])


# --------------------------------------------------------------------------- reports


def _fmt(v) -> str:
    return repr(float(v))


def _readout_text(readouts) -> str:
    if isinstance(readouts, (list, tuple)):
        return "".join(f"# readout {s}\n" + _readout_text(m) for s, m in zip(tasks.TARGET_SYMBOLS, readouts))
    if isinstance(readouts, SvmModel):
        return readouts.to_text()
    if isinstance(readouts, LinearReadout):
        return " ".join(_fmt(v) for v in (readouts.bias, *readouts.weights)) + "\n"
    return ""


def emit_report(report: ExperimentReport, out_dir) -> list:
    """Write the report files; returns their paths.

    Files: ``config.txt``, ``fitness.csv``, ``runs.csv``, ``summary.txt``,
    ``dataset.txt`` and per run ``genome_runR.txt``, ``readout_runR.txt``
    and, for the sine task, ``predictions_runR.csv``. Wall-clock times are
    logged, never written, so identical configs give identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = report.config
    written = []

    def write(name, text):
        path = out / name
        path.write_text(text)
        written.append(path)

    write("config.txt", cfg.to_text())

    with open(out / "fitness.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "generation", "best_fitness", "evaluations"])
        for r in report.runs:
            for rec in r.history:
                w.writerow([r.run, rec.generation, _fmt(rec.best_fitness), rec.evaluations_so_far])
    written.append(out / "fitness.csv")

    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "seed", "status", "best_fitness", report.metric_name])
        for r in report.runs:
            w.writerow([r.run, r.seed, "failed" if r.failed else "ok", _fmt(r.best_fitness),
                        _fmt(r.test_metric)])
    written.append(out / "runs.csv")

    agg = report.aggregate()
    lines = [f"task: {cfg.task}", f"readout: {cfg.readout}", f"runs: {len(report.runs)}",
             f"successful runs: {agg['n']}", f"metric: {report.metric_name}"]
    lines += [f"{k}: {_fmt(agg[k])}" for k in ("mean", "median", "min", "max")]
    lines += [f"failed run {r.run}: {r.error}" for r in report.runs if r.failed]
    lines.append("defaults chosen without an external reference: "
                 + ", ".join(f"{k}={getattr(cfg, k)}" for k in UNSTATED_DEFAULTS))
    write("summary.txt", "\n".join(lines) + "\n")

    dataset = make_dataset(cfg)
    write("dataset.txt", dataset.to_text())

    for r in report.runs:
        if r.best_genome is not None:
            write(f"genome_run{r.run}.txt",
                  "".join(" ".join(_fmt(v) for v in c) + "\n" for c in r.best_genome))
        if r.readouts is not None:
            write(f"readout_run{r.run}.txt", _readout_text(r.readouts))
        if r.predictions is not None:
            xs = range(tasks.TEST[0], tasks.TEST[1] + 1)
            with open(out / f"predictions_run{r.run}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "target", "prediction"])
                for x, p in zip(xs, r.predictions):
                    w.writerow([x, _fmt(dataset.values[x]), _fmt(p)])
            written.append(out / f"predictions_run{r.run}.csv")
    return written
