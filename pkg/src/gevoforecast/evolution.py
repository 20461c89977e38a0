"""The evolutionary loop: selection, variation, and diversity maintenance.

One generation: evaluate everyone, apply the configured social-disaster
operator, pick parents by binary tournament (lower fitness wins, ties go to
the earlier index), screen pairs through random-offspring generation, apply
single-point crossover and per-codon mutation, then replace the population
generationally while keeping the single best individual.

Everything is driven by one seeded generator, so a fixed seed reproduces the
run exactly.  Fitness values are memoized by phenotype text: populations
carry many duplicate expressions and re-scoring them would dominate runtime.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import expr as xp
from .dataset import SeriesEvaluator, StandardizationParams, TimeSeriesDataset, WindowSpec
from .errors import ComputeError, ConfigError
from .fitness import INVALID_FITNESS, BiasPolicy, rmse, residuals_in_original_units
from .genotype import map_genotype, random_chromosome
from .grammar import Grammar


@dataclass
class EvolutionConfig:
    population_size: int = 200
    chromosome_length: int = 100
    crossover_prob: float = 0.9
    mutation_prob: Optional[float] = None  # None -> 1 / number of grammar rules
    max_wraps: int = 3
    tournament_size: int = 2
    generations: int = 2000
    rng_seed: int = 0
    rog_mode: str = "2-RO"  # off | 1-RO | 2-RO
    sdt_mode: str = "packing"  # off | packing | judgment-day
    packing_keep_fraction: float = 0.05
    stagnation_window: int = 500
    target_fitness: Optional[float] = None  # early stop when best <= this

    def validate(self) -> None:
        if self.population_size < 2:
            raise ConfigError("population size must be >= 2")
        if self.chromosome_length < 2:
            raise ConfigError("chromosome length must be >= 2")
        if not (0.0 <= self.crossover_prob <= 1.0):
            raise ConfigError("crossover probability must be in [0, 1]")
        if self.mutation_prob is not None and not (0.0 <= self.mutation_prob <= 1.0):
            raise ConfigError("mutation probability must be in [0, 1]")
        if not (0.0 < self.packing_keep_fraction <= 1.0):
            raise ConfigError("packing keep fraction must be in (0, 1]")
        if self.rog_mode not in ("off", "1-RO", "2-RO"):
            raise ConfigError(f"unknown ROG mode {self.rog_mode!r}")
        if self.sdt_mode not in ("off", "packing", "judgment-day"):
            raise ConfigError(f"unknown SDT mode {self.sdt_mode!r}")
        if self.max_wraps < 0 or self.tournament_size < 1 or self.generations < 0:
            raise ConfigError("max_wraps, tournament_size and generations must be non-negative")
        if self.stagnation_window < 1:
            raise ConfigError("stagnation window must be >= 1")


@dataclass
class Individual:
    chromosome: np.ndarray
    fitness: Optional[float] = None  # None until evaluated
    phenotype: Optional[str] = None

    def copy(self) -> "Individual":
        return Individual(self.chromosome.copy(), self.fitness, self.phenotype)


@dataclass
class GenerationRecord:
    generation: int
    best: float
    mean: float  # mean of finite fitnesses
    duplicates: float  # duplicate-phenotype fraction
    sdt_events: int
    rog_events: int


@dataclass
class RunLog:
    records: List[GenerationRecord] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["generation", "best", "mean", "duplicates", "sdt_events", "rog_events"])
            for r in self.records:
                writer.writerow(
                    [r.generation, repr(r.best), repr(r.mean), repr(r.duplicates), r.sdt_events, r.rog_events]
                )

    def best_values(self) -> List[float]:
        return [r.best for r in self.records]


def crossover(p1: np.ndarray, p2: np.ndarray, rng: np.random.Generator):
    """Single-point crossover; cut point uniform in [1, L-1]."""
    if len(p1) != len(p2):
        raise ValueError("parents differ in length")
    if len(p1) < 2:
        raise ValueError("chromosomes too short to cross")
    cut = int(rng.integers(1, len(p1)))
    c1 = np.concatenate([p1[:cut], p2[cut:]])
    c2 = np.concatenate([p2[:cut], p1[cut:]])
    return c1, c2


def rog_filter(p1: np.ndarray, p2: np.ndarray, mode: str):
    """Which offspring slots must be randomized for this pair of parents."""
    if mode not in ("off", "1-RO", "2-RO"):
        raise ValueError(f"unknown ROG mode {mode!r}")
    if mode == "off" or not np.array_equal(p1, p2):
        return (False, False)
    return (True, False) if mode == "1-RO" else (True, True)


def mutate(chromosome: np.ndarray, prob: float, rng: np.random.Generator) -> np.ndarray:
    out = chromosome.copy()
    mask = rng.random(len(out)) < prob
    n = int(mask.sum())
    if n:
        out[mask] = rng.integers(0, 256, size=n, dtype=np.uint8)
    return out


def sdt_packing(
    population: List[Individual],
    keep_fraction: float,
    rng: np.random.Generator,
    chromosome_length: int,
) -> int:
    """Cull duplicate phenotypes down to the keep bound; returns count randomized.

    Individuals are grouped by phenotype text (invalid mappings form one
    group); each group keeps at most max(1, ceil(fraction * population))
    members in index order, the rest get fresh random chromosomes.
    """
    keep = max(1, math.ceil(keep_fraction * len(population)))
    counts: dict = {}
    randomized = 0
    for ind in population:
        key = ind.phenotype
        counts[key] = counts.get(key, 0) + 1
        if counts[key] > keep:
            ind.chromosome = random_chromosome(rng, chromosome_length)
            ind.fitness = None
            ind.phenotype = None
            randomized += 1
    return randomized


def sdt_judgment_day(
    population: List[Individual],
    rng: np.random.Generator,
    chromosome_length: int,
) -> int:
    """Keep only the fittest individual; everyone else is randomized."""
    if len(population) <= 1:
        return 0
    best_idx = _best_index(population)
    randomized = 0
    for i, ind in enumerate(population):
        if i == best_idx:
            continue
        ind.chromosome = random_chromosome(rng, chromosome_length)
        ind.fitness = None
        ind.phenotype = None
        randomized += 1
    return randomized


def _best_index(population: List[Individual]) -> int:
    best = 0
    for i in range(1, len(population)):
        if population[i].fitness < population[best].fitness:
            best = i
    return best


def _worst_index(population: List[Individual]) -> int:
    worst = 0
    for i in range(1, len(population)):
        if population[i].fitness >= population[worst].fitness:
            worst = i
    return worst


class _Scorer:
    """Genotype -> fitness with phenotype- and genotype-level memoization."""

    def __init__(self, grammar, evaluator, spec, bias, target_params, max_wraps):
        self.grammar = grammar
        self.evaluator = evaluator
        self.spec = spec
        self.bias = bias
        self.target_params = target_params
        self.max_wraps = max_wraps
        self.pheno_memo: dict = {}
        self.fit_memo: dict = {}

    def decode(self, chromosome: np.ndarray) -> Optional[str]:
        key = chromosome.tobytes()
        if key in self.pheno_memo:
            return self.pheno_memo[key]
        result = map_genotype(chromosome, self.grammar, self.max_wraps)
        self.pheno_memo[key] = result.phenotype
        return result.phenotype

    def fitness(self, phenotype: Optional[str]) -> float:
        if phenotype is None:
            return INVALID_FITNESS
        if phenotype in self.fit_memo:
            return self.fit_memo[phenotype]
        try:
            e = xp.parse(phenotype, prediction_var=self.spec.prediction_var)
            preds = self.evaluator.predictions(e)
        except ComputeError:
            value = INVALID_FITNESS
        else:
            if preds is None:
                value = INVALID_FITNESS
            else:
                res = residuals_in_original_units(
                    preds,
                    self.evaluator.target[self.evaluator.times],
                    self.spec.target,
                    self.target_params,
                )
                value = rmse(res)
                if self.bias is not None:
                    value *= self.bias.penalty(xp.variable_names(e))
        self.fit_memo[phenotype] = value
        return value

    def evaluate(self, ind: Individual) -> None:
        if ind.fitness is not None:
            return
        ind.phenotype = self.decode(ind.chromosome)
        ind.fitness = self.fitness(ind.phenotype)


def evolve(
    config: EvolutionConfig,
    grammar: Grammar,
    ds: TimeSeriesDataset,
    spec: WindowSpec,
    bias: Optional[BiasPolicy] = None,
    target_params: Optional[StandardizationParams] = None,
):
    """Run the configured number of generations; returns (population, log)."""
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    evaluator = SeriesEvaluator(ds, spec)
    scorer = _Scorer(grammar, evaluator, spec, bias, target_params, config.max_wraps)
    mutation_prob = (
        config.mutation_prob if config.mutation_prob is not None else 1.0 / len(grammar.rules)
    )
    pop_size = config.population_size
    length = config.chromosome_length

    population = [Individual(random_chromosome(rng, length)) for _ in range(pop_size)]
    for ind in population:
        scorer.evaluate(ind)

    log = RunLog()
    best_so_far = population[_best_index(population)].fitness
    stagnation = 0

    for gen in range(1, config.generations + 1):
        sdt_events = 0
        if config.sdt_mode == "packing":
            sdt_events = sdt_packing(population, config.packing_keep_fraction, rng, length)
        elif config.sdt_mode == "judgment-day" and stagnation >= config.stagnation_window:
            sdt_events = sdt_judgment_day(population, rng, length)
            stagnation = 0
        for ind in population:
            scorer.evaluate(ind)

        elite = population[_best_index(population)].copy()

        offspring: List[Individual] = []
        rog_events = 0
        while len(offspring) < pop_size:
            p1 = population[_tournament(population, config.tournament_size, rng)]
            p2 = population[_tournament(population, config.tournament_size, rng)]
            rand1, rand2 = rog_filter(p1.chromosome, p2.chromosome, config.rog_mode)
            if rand1 and rand2:
                c1 = random_chromosome(rng, length)
                c2 = random_chromosome(rng, length)
                rog_events += 2
            else:
                if rng.random() < config.crossover_prob:
                    c1, c2 = crossover(p1.chromosome, p2.chromosome, rng)
                else:
                    c1, c2 = p1.chromosome.copy(), p2.chromosome.copy()
                if rand1:
                    c1 = random_chromosome(rng, length)
                    rog_events += 1
            offspring.append(Individual(mutate(c1, mutation_prob, rng)))
            if len(offspring) < pop_size:
                offspring.append(Individual(mutate(c2, mutation_prob, rng)))
        for ind in offspring:
            scorer.evaluate(ind)

        if elite.fitness < offspring[_best_index(offspring)].fitness:
            offspring[_worst_index(offspring)] = elite
        population = offspring

        best = population[_best_index(population)].fitness
        log.records.append(
            GenerationRecord(
                generation=gen,
                best=best,
                mean=_mean_finite(population),
                duplicates=_duplicate_fraction(population),
                sdt_events=sdt_events,
                rog_events=rog_events,
            )
        )
        if best < best_so_far:
            best_so_far = best
            stagnation = 0
        else:
            stagnation += 1
        if config.target_fitness is not None and best <= config.target_fitness:
            break

    return population, log


def _tournament(population: List[Individual], size: int, rng: np.random.Generator) -> int:
    idx = rng.integers(0, len(population), size=size)
    best = int(idx[0])
    for i in idx[1:]:
        i = int(i)
        f, fb = population[i].fitness, population[best].fitness
        if f < fb or (f == fb and i < best):
            best = i
    return best


def _mean_finite(population: List[Individual]) -> float:
    vals = [ind.fitness for ind in population if math.isfinite(ind.fitness)]
    return float(np.mean(vals)) if vals else math.nan


def _duplicate_fraction(population: List[Individual]) -> float:
    unique = len({ind.phenotype for ind in population})
    return 1.0 - unique / len(population)
