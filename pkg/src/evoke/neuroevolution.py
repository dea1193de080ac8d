"""Enforced SubPopulations (ESP) over LSTM memory-cell chromosomes.

One subpopulation is kept per memory-cell slot. Networks are assembled from
one member of every subpopulation, and each member is scored by the mean
fitness of the networks it took part in. Reproduction is mutation only: the
top quarter of every subpopulation is copied over the worst quarter and the
copies receive Cauchy noise. When the best-so-far fitness stalls, burst
mutation re-seeds every subpopulation around the best network found.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EvokeError, RunTimeout

log = logging.getLogger(__name__)

Genome = list  # list of 1-D chromosome arrays, one per memory cell
FitnessFn = Callable[[Sequence[np.ndarray]], float]

FAILURE_FITNESS = math.inf


@dataclass
class EvolutionConfig:
    n_cells: int
    n_inputs: int
    subpop_size: int = 20
    trials_per_neuron: int = 3
    cauchy_alpha: float = 0.1
    weight_init_range: tuple = (-5.0, 5.0)
    stagnation_window: int = 10
    max_generations: int = 50
    rng_seed: int = 0
    target_fitness: float = -math.inf
    replace_ties: bool = False

    def __post_init__(self):
        if self.n_cells < 1 or self.n_inputs < 0:
            raise ValueError("need at least one cell and a non-negative input count")
        if self.subpop_size < 4 or self.subpop_size % 4:
            raise ValueError("subpop_size must be a positive multiple of 4")
        if self.trials_per_neuron < 1:
            raise ValueError("trials_per_neuron must be >= 1")
        if not self.cauchy_alpha > 0:
            raise ValueError("cauchy_alpha must be positive")
        lo, hi = self.weight_init_range
        if lo > hi:
            raise ValueError("empty weight_init_range")
        if self.stagnation_window < 1 or self.max_generations < 1:
            raise ValueError("stagnation_window and max_generations must be >= 1")

    @property
    def chromosome_length(self) -> int:
        return 4 * (self.n_inputs + self.n_cells)

    @property
    def evaluations_per_generation(self) -> int:
        return self.subpop_size * self.trials_per_neuron


@dataclass
class Subpopulation:
    slot_index: int
    members: np.ndarray  # (subpop_size, chromosome_length)
    fitness_sum: np.ndarray = None
    trials: np.ndarray = None

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=float)
        if self.fitness_sum is None:
            self.fitness_sum = np.zeros(len(self.members))
        if self.trials is None:
            self.trials = np.zeros(len(self.members), dtype=int)

    def __len__(self):
        return self.members.shape[0]

    @property
    def fitness(self) -> np.ndarray:
        """Mean fitness per member; unevaluated members rank worst."""
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = self.fitness_sum / self.trials
        return np.where((self.trials > 0) & ~np.isnan(mean), mean, math.inf)


@dataclass
class FitnessRecord:
    generation: int
    best_fitness: float
    best_genome: Genome
    evaluations_so_far: int
    generation_best: float = math.inf
    burst: bool = False


def init_subpopulations(config: EvolutionConfig, rng: np.random.Generator) -> list[Subpopulation]:
    lo, hi = config.weight_init_range
    shape = (config.subpop_size, config.chromosome_length)
    return [Subpopulation(s, rng.uniform(lo, hi, size=shape)) for s in range(config.n_cells)]


def assemble_network(subpops: Sequence[Subpopulation], indices: Sequence[int]) -> Genome:
    if len(indices) != len(subpops):
        raise IndexError("need exactly one member index per subpopulation")
    genome = []
    for sp, k in zip(subpops, indices):
        if not 0 <= k < len(sp):
            raise IndexError(f"member index {k} out of range for slot {sp.slot_index}")
        genome.append(sp.members[k].copy())
    return genome


def safe_fitness(fitness_fn: FitnessFn, genome: Genome) -> float:
    """Evaluate ``fitness_fn`` mapping failures and non-finite values to +inf."""
    try:
        value = float(fitness_fn(genome))
    except (EvokeError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.debug("fitness evaluation failed: %s", exc)
        return FAILURE_FITNESS
    return value if math.isfinite(value) else FAILURE_FITNESS


def evaluate_generation(subpops: Sequence[Subpopulation], fitness_fn: FitnessFn,
                        trials_per_neuron: int, rng: np.random.Generator,
                        generation: int = 0, evaluations_before: int = 0) -> FitnessRecord:
    """Score every member through random assemblies.

    Each trial draws an independent permutation per slot, so member ``k`` of
    every subpopulation takes part in exactly ``trials_per_neuron`` networks.
    """
    size = len(subpops[0])
    for sp in subpops:
        if len(sp) != size:
            raise ValueError("subpopulations differ in size")
        sp.fitness_sum[:] = 0.0
        sp.trials[:] = 0

    best, best_genome, n_eval = math.inf, None, 0
    for _ in range(trials_per_neuron):
        perms = [rng.permutation(size) for _ in subpops]
        for k in range(size):
            indices = [int(p[k]) for p in perms]
            genome = assemble_network(subpops, indices)
            value = safe_fitness(fitness_fn, genome)
            n_eval += 1
            for sp, m in zip(subpops, indices):
                sp.fitness_sum[m] += value
                sp.trials[m] += 1
            if value < best or best_genome is None:
                best, best_genome = value, genome
    return FitnessRecord(generation, best, best_genome, evaluations_before + n_eval, generation_best=best)


def select_and_mutate(subpop: Subpopulation, alpha: float, rng: np.random.Generator) -> Subpopulation:
    """Sort by fitness and overwrite the worst quarter with Cauchy-mutated
    copies of the top quarter."""
    size = len(subpop)
    if size % 4:
        raise ValueError("subpopulation size must be divisible by 4")
    order = np.argsort(subpop.fitness, kind="stable")
    members = subpop.members[order].copy()
    q = size // 4
    noise = alpha * rng.standard_cauchy(size=(q, members.shape[1]))
    members[size - q:] = members[:q] + noise
    return Subpopulation(subpop.slot_index, members)


def burst_mutate(subpops: Sequence[Subpopulation], best_genome: Genome, alpha: float,
                 rng: np.random.Generator) -> list[Subpopulation]:
    """Re-seed each slot around the best chromosome, keeping one exact copy."""
    if len(best_genome) != len(subpops):
        raise ValueError("best_genome needs one chromosome per slot")
    out = []
    for sp, centre in zip(subpops, best_genome):
        centre = np.asarray(centre, dtype=float)
        members = centre + alpha * rng.standard_cauchy(size=sp.members.shape)
        members[0] = centre
        out.append(Subpopulation(sp.slot_index, members))
    return out


def evolve(config: EvolutionConfig, fitness_fn: FitnessFn, deadline: Optional[float] = None,
           callback: Optional[Callable[[FitnessRecord], None]] = None):
    """Run ESP and return ``(best_genome, history)``.

    ``history`` holds one record per generation; its ``best_fitness`` is the
    best-so-far value. ``deadline`` is a ``time.monotonic()`` timestamp after
    which :class:`RunTimeout` is raised between generations.
    """
    rng = np.random.default_rng(config.rng_seed)
    subpops = init_subpopulations(config, rng)
    history: list[FitnessRecord] = []
    best, best_genome = math.inf, None
    evaluations, stalled = 0, 0

    for gen in range(config.max_generations):
        if deadline is not None and time.monotonic() > deadline:
            raise RunTimeout(f"wall-clock budget exhausted at generation {gen}")
        rec = evaluate_generation(subpops, fitness_fn, config.trials_per_neuron, rng, gen, evaluations)
        evaluations = rec.evaluations_so_far
        improved = rec.best_fitness < best
        if improved or best_genome is None or (config.replace_ties and rec.best_fitness == best):
            best, best_genome = rec.best_fitness, [c.copy() for c in rec.best_genome]
        stalled = 0 if improved else stalled + 1

        burst = stalled >= config.stagnation_window
        record = FitnessRecord(gen, best, best_genome, evaluations, rec.generation_best, burst)
        history.append(record)
        log.info("generation %d: best %.6g (this generation %.6g)%s", gen, best,
                 rec.generation_best, " burst" if burst else "")
        if callback is not None:
            callback(record)
        if best <= config.target_fitness:
            break
        if burst:
            subpops = burst_mutate(subpops, best_genome, config.cauchy_alpha, rng)
            stalled = 0
        else:
            subpops = [select_and_mutate(sp, config.cauchy_alpha, rng) for sp in subpops]
    return best_genome, history
