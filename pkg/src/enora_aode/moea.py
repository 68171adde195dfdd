"""Multi-objective wrapper feature selection (ENORA and NSGA-II).

Objectives are ``(merit, cardinality)``: merit is maximized, the number of
selected attributes minimized. ENORA ranks each individual by its
non-domination level inside its slot (a band of subset sizes); NSGA-II
ranks against the whole population. Everything else is shared: mu+lambda
survival, binary tournaments, self-adaptive uniform crossover and
self-adaptive single-bit-flip mutation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .aode import aode_log_scores, aode_terms, fit_aode, fit_nb, nb_log_scores, nb_terms
from .dataset import Dataset, FeatureMask, SchemaError, stratified_folds, stratified_subsample

INF = math.inf
RATE_SIGMA = 0.1


class Objectives(NamedTuple):
    merit: float
    cardinality: int


@dataclass
class Individual:
    mask: FeatureMask
    pc: float
    pm: float
    objectives: Optional[Objectives] = None
    rank: int = 0
    crowding: float = 0.0

    def __post_init__(self):
        self.pc = min(1.0, max(0.0, float(self.pc)))
        self.pm = min(1.0, max(0.0, float(self.pm)))

    @property
    def evaluated(self) -> bool:
        return self.objectives is not None


@dataclass(frozen=True)
class EvaluatorConfig:
    inner_folds: int = 5
    fitness_subsample_cap: int = 2000
    classifier: str = "aode"
    m_threshold: int = 1

    def __post_init__(self):
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")
        if self.fitness_subsample_cap < 1:
            raise ValueError("fitness_subsample_cap must be positive")
        if self.classifier not in ("aode", "nb"):
            raise ValueError(f"unknown classifier {self.classifier!r}")


@dataclass(frozen=True)
class MoeaConfig:
    population_size: int = 50
    generations: int = 50
    ranking: str = "enora"
    slots: Optional[int] = None
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be a positive even integer")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        if self.ranking not in ("enora", "nsga2"):
            raise ValueError(f"unknown ranking {self.ranking!r}")
        if self.slots is not None and not 1 <= self.slots <= self.population_size:
            raise ValueError("slots must lie in [1, population_size]")

    def slot_count(self, n_attributes: int) -> int:
        return self.slots if self.slots is not None else min(10, n_attributes)


@dataclass
class ParetoResult:
    final_population: List[Individual]
    nondominated: List[Individual]
    selected: FeatureMask
    trace: List[dict]
    evaluations: int


# -- dominance, sorting, crowding --------------------------------------------------

def dominates(a: Objectives, b: Objectives) -> bool:
    return (a[0] >= b[0] and a[1] <= b[1]) and (a[0] > b[0] or a[1] < b[1])


def _dominance_matrix(objs: np.ndarray) -> np.ndarray:
    merit, card = objs[:, 0], objs[:, 1]
    ge = merit[:, None] >= merit[None, :]
    le = card[:, None] <= card[None, :]
    strict = (merit[:, None] > merit[None, :]) | (card[:, None] < card[None, :])
    return ge & le & strict


def fast_nondominated_sort(pop: Sequence[Objectives]) -> List[List[int]]:
    """Fronts of indices; front 0 is the globally non-dominated set."""
    if not len(pop):
        return []
    objs = np.asarray(pop, dtype=float).reshape(len(pop), 2)
    dom = _dominance_matrix(objs)
    counts = dom.sum(axis=0)           # how many dominate each member
    fronts = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        counts = counts - dom[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
    return fronts


def crowding_distance(front: Sequence[Objectives]) -> List[float]:
    """Normalized spacing of each member along both objectives.

    The first and last member of each objective's stable sort are boundary
    points (``inf``). Interior members add their normalized neighbour gap,
    except on an objective where every member agrees, which adds nothing.
    """
    m = len(front)
    if m <= 2:
        return [INF] * m
    objs = np.asarray(front, dtype=float).reshape(m, 2)
    dist = np.zeros(m)
    for k in range(objs.shape[1]):
        col = objs[:, k]
        order = np.argsort(col, kind="stable")
        dist[order[0]] = dist[order[-1]] = INF
        lo, hi = col[order[0]], col[order[-1]]
        if hi <= lo:
            continue
        gaps = (col[order[2:]] - col[order[:-2]]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist.tolist()


def slot_of(cardinality: int, n: int, S: int) -> int:
    return min(S - 1, (cardinality - 1) * S // n)


def _rank_groups(objs: List[Objectives], groups: List[List[int]]):
    ranks = np.zeros(len(objs), dtype=np.int64)
    crowd = np.zeros(len(objs))
    for members in groups:
        fronts = fast_nondominated_sort([objs[i] for i in members])
        for level, front in enumerate(fronts):
            idx = [members[i] for i in front]
            ranks[idx] = level
            crowd[idx] = crowding_distance([objs[i] for i in idx])
    return ranks, crowd


def enora_rank(pop: Sequence[Individual], n: int, S: int):
    """Slot-local non-domination rank and crowding distance for every member."""
    objs = [ind.objectives for ind in pop]
    slots = {}
    for i, o in enumerate(objs):
        slots.setdefault(slot_of(o.cardinality, n, S), []).append(i)
    return _rank_groups(objs, [slots[s] for s in sorted(slots)])


def nsga2_rank(pop: Sequence[Individual]):
    objs = [ind.objectives for ind in pop]
    return _rank_groups(objs, [list(range(len(objs)))])


def assign_ranks(pop: Sequence[Individual], ranking: str, n: int, S: int) -> None:
    ranks, crowd = enora_rank(pop, n, S) if ranking == "enora" else nsga2_rank(pop)
    for ind, r, c in zip(pop, ranks, crowd):
        ind.rank, ind.crowding = int(r), float(c)


def better(x: Individual, y: Individual) -> bool:
    return x.rank < y.rank or (x.rank == y.rank and x.crowding > y.crowding)


def binary_tournament(pop: Sequence[Individual], rng: np.random.Generator) -> Individual:
    if len(pop) == 1:
        return pop[0]
    a, b = rng.choice(len(pop), size=2, replace=False)
    x, y = pop[a], pop[b]
    if better(x, y):
        return x
    if better(y, x):
        return y
    return x if rng.random() < 0.5 else y


def survivors(pool: Sequence[Individual], N: int) -> List[Individual]:
    """The ``N`` best members: rank, then crowding, then merit and size."""
    order = sorted(range(len(pool)), key=lambda i: (
        pool[i].rank, -pool[i].crowding, -pool[i].objectives.merit,
        pool[i].objectives.cardinality, i))
    return [pool[i] for i in order[:N]]


# -- variation -------------------------------------------------------------------

def _repair(bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not bits.any():
        bits = bits.copy()
        bits[rng.integers(len(bits))] = True
    return bits


def _perturb(rate: float, rng: np.random.Generator) -> float:
    return min(1.0, max(0.0, rate + rng.normal(0.0, RATE_SIGMA)))


def crossover_self_adaptive(p1: Individual, p2: Individual, rng: np.random.Generator):
    a, b = p1.mask.bits, p2.mask.bits
    if len(a) != len(b):
        raise ValueError("parents have masks of different length")
    if rng.random() < (p1.pc + p2.pc) / 2.0:
        swap = rng.random(len(a)) < 0.5
        c1, c2 = np.where(swap, b, a), np.where(swap, a, b)
    else:
        c1, c2 = a.copy(), b.copy()
    child1 = Individual(FeatureMask(_repair(c1, rng)), _perturb(p1.pc, rng), _perturb(p1.pm, rng))
    child2 = Individual(FeatureMask(_repair(c2, rng)), _perturb(p2.pc, rng), _perturb(p2.pm, rng))
    return child1, child2


def mutate_self_adaptive(ind: Individual, rng: np.random.Generator) -> Individual:
    if not rng.random() < ind.pm:
        return ind
    bits = ind.mask.bits.copy()
    bit = rng.integers(len(bits))
    bits[bit] = not bits[bit]
    mask = FeatureMask(_repair(bits, rng))
    if mask == ind.mask:
        return ind
    return Individual(mask, ind.pc, ind.pm)


# -- fitness ---------------------------------------------------------------------

class FitnessEvaluator:
    """Inner cross-validated accuracy of the downstream classifier on a mask.

    The subsample and inner folds are drawn once, so merit is a pure function
    of the mask. Counts over a subset of attributes are exactly the matching
    slice of the full-attribute counts, hence each inner fold is fitted once
    and masked models are read from per-instance log terms. Results are
    memoized by mask.
    """

    def __init__(self, train: Dataset, cfg: EvaluatorConfig, rng: np.random.Generator):
        if not train.is_nominal:
            raise SchemaError("fitness evaluation needs nominal attributes; discretize first")
        self.cfg = cfg
        self.n_attributes = train.n_attributes
        seeds = rng.integers(0, 2**63 - 1, size=2)
        sample = train.subset(stratified_subsample(train, cfg.fitness_subsample_cap, seeds[0]))
        k = min(cfg.inner_folds, sample.n_instances)
        plan = stratified_folds(sample, k, seeds[1]) if k >= 2 else None
        self.folds = []
        splits = [(plan.train_index(f), plan.test_index(f)) for f in range(k)] if plan else \
            [(np.arange(sample.n_instances), np.arange(sample.n_instances))]
        for tr, te in splits:
            part, held = sample.subset(tr), sample.subset(te)
            if cfg.classifier == "aode":
                terms = aode_terms(fit_aode(part, cfg.m_threshold), held.codes)
            else:
                terms = nb_terms(fit_nb(part), held.codes)
            self.folds.append((terms, held.y))
        self.cache = {}
        self.calls = 0

    def merit(self, mask: FeatureMask) -> float:
        idx = mask.indices
        scorer = aode_log_scores if self.cfg.classifier == "aode" else nb_log_scores
        accs = []
        for terms, y in self.folds:
            scores = scorer(terms, idx)
            accs.append(float(np.mean(scores.argmax(axis=1) == y)))
        return float(np.mean(accs))

    def __call__(self, mask: FeatureMask) -> Objectives:
        hit = self.cache.get(mask.key)
        if hit is None:
            self.calls += 1
            hit = Objectives(self.merit(mask), mask.cardinality)
            self.cache[mask.key] = hit
        return hit


def evaluate_individual(ind: Individual, evaluator: FitnessEvaluator) -> Objectives:
    ind.objectives = evaluator(ind.mask)
    return ind.objectives


# -- driver ----------------------------------------------------------------------

def random_individual(n: int, rng: np.random.Generator) -> Individual:
    bits = _repair(rng.random(n) < 0.5, rng)
    return Individual(FeatureMask(bits), rng.random(), rng.random())


def global_nondominated(pop: Sequence[Individual]) -> List[Individual]:
    objs = np.asarray([ind.objectives for ind in pop], dtype=float)
    dominated = _dominance_matrix(objs).any(axis=0)
    return [ind for ind, d in zip(pop, dominated) if not d]


def select_final(result_or_front) -> FeatureMask:
    """Highest merit, then fewest attributes, then lexicographically smallest mask."""
    front = getattr(result_or_front, "nondominated", result_or_front)
    if not front:
        raise ValueError("no non-dominated individuals to choose from")
    best = min(front, key=lambda ind: (-ind.objectives.merit, ind.objectives.cardinality,
                                       tuple(int(b) for b in ind.mask.bits)))
    return best.mask


def _trace_row(gen: int, pop: Sequence[Individual], evaluator: FitnessEvaluator) -> dict:
    merits = [ind.objectives.merit for ind in pop]
    cards = [ind.objectives.cardinality for ind in pop]
    return {"generation": gen, "best_merit": max(merits),
            "mean_cardinality": float(np.mean(cards)), "evaluations": evaluator.calls}


def run_moea(train: Dataset, cfg: MoeaConfig, evaluator: Optional[FitnessEvaluator] = None
             ) -> ParetoResult:
    n = train.n_attributes
    if n < 1:
        raise ValueError("dataset has no attributes to select from")
    ss = np.random.SeedSequence(cfg.seed)
    search_seed, eval_seed = ss.spawn(2)
    rng = np.random.default_rng(search_seed)
    if evaluator is None:
        evaluator = FitnessEvaluator(train, cfg.evaluator, np.random.default_rng(eval_seed))
    N, S = cfg.population_size, cfg.slot_count(n)

    pop = [random_individual(n, rng) for _ in range(N)]
    for ind in pop:
        evaluate_individual(ind, evaluator)
    assign_ranks(pop, cfg.ranking, n, S)
    trace = [_trace_row(0, pop, evaluator)]

    for gen in range(1, cfg.generations + 1):
        children = []
        while len(children) < N:
            p1 = binary_tournament(pop, rng)
            p2 = binary_tournament(pop, rng)
            c1, c2 = crossover_self_adaptive(p1, p2, rng)
            children.append(mutate_self_adaptive(c1, rng))
            children.append(mutate_self_adaptive(c2, rng))
        for child in children:
            evaluate_individual(child, evaluator)
        pool = pop + children
        assign_ranks(pool, cfg.ranking, n, S)
        pop = survivors(pool, N)
        assign_ranks(pop, cfg.ranking, n, S)
        trace.append(_trace_row(gen, pop, evaluator))

    front = global_nondominated(pop)
    return ParetoResult(pop, front, select_final(front), trace, evaluator.calls)
