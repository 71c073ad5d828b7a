"""Constrained three-objective flexure design with an elitist NSGA-II.

Design vector ``[t_g, l_g, t_d, l_d]`` in mm (guider then decoupler). All
three objectives (axis stiffness, decoupler ratio, guider ratio) are
maximised. Constraint handling is feasibility first: a feasible design beats
any infeasible one and infeasible designs are ranked by total violation.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kinetostatics import ALUMINIUM, Material
from .mcpf import McpfParams, stiffness_report
from .presets import F_MAX, LAYERS, LINK_SPAN_MM, MM, STROKE, WIDTHS_MM
from .stage import axis_stiffness_xy, axis_stiffness_z

log = logging.getLogger(__name__)

FRONT_HEADER = ("t_g_mm", "l_g_mm", "t_d_mm", "l_d_mm", "k_axis", "eta_d", "eta_g", "feasible")


@dataclass(frozen=True)
class OptProblem:
    axis: str  # "xy" or "z"
    lower: tuple[float, float, float, float]
    upper: tuple[float, float, float, float]
    eta_d_min: float
    eta_g_min: float
    f_max: float = F_MAX
    stroke: float = STROKE
    t_min_mm: float = 0.3
    material: Material = ALUMINIUM
    widths_mm: tuple[float, float] = (8.0, 12.0)  # (guider, decoupler)
    layers: tuple[int, int] = (8, 8)
    spans_mm: tuple[float, float] = (0.3783, 0.4903)

    def __post_init__(self):
        if self.axis not in ("xy", "z"):
            raise ValueError("axis must be 'xy' or 'z'")
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != (4,) or hi.shape != (4,) or not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("bounds must be four finite values")
        if np.any(lo >= hi):
            raise ValueError("lower bounds must be below upper bounds")

    @property
    def ceiling(self) -> float:
        """Stiffness limit so the stroke is reachable with the available force (N/m)."""
        return self.f_max / self.stroke

    def families(self, par) -> tuple[McpfParams, McpfParams]:
        t_g, l_g, t_d, l_d = par
        g = McpfParams(t_g * MM, l_g * MM, self.widths_mm[0] * MM, self.layers[0], self.spans_mm[0] * MM)
        d = McpfParams(t_d * MM, l_d * MM, self.widths_mm[1] * MM, self.layers[1], self.spans_mm[1] * MM)
        return g, d


def xy_problem(**kw) -> OptProblem:
    base = dict(axis="xy", lower=(0.3, 20.0, 0.3, 30.0), upper=(0.4, 30.0, 0.4, 40.0), eta_d_min=60.0,
                eta_g_min=60.0, widths_mm=(WIDTHS_MM["xg"], WIDTHS_MM["xd"]),
                layers=(LAYERS["xg"], LAYERS["xd"]), spans_mm=(LINK_SPAN_MM["xg"], LINK_SPAN_MM["xd"]))
    base.update(kw)
    return OptProblem(**base)


def z_problem(**kw) -> OptProblem:
    # guider length in [40, 50], decoupler length in [20, 30]
    base = dict(axis="z", lower=(0.3, 40.0, 0.3, 20.0), upper=(0.4, 50.0, 0.4, 30.0), eta_d_min=100.0,
                eta_g_min=20.0, widths_mm=(WIDTHS_MM["zg"], WIDTHS_MM["zd"]),
                layers=(LAYERS["zg"], LAYERS["zd"]), spans_mm=(LINK_SPAN_MM["zg"], LINK_SPAN_MM["zd"]))
    base.update(kw)
    return OptProblem(**base)


@dataclass
class Individual:
    par: np.ndarray
    objectives: np.ndarray  # (k_axis, eta_d, eta_g)
    violations: np.ndarray  # <= 0 when satisfied, relative units
    clamped: bool = False
    diagnostics: str = ""

    @property
    def feasible(self) -> bool:
        return bool(np.all(self.violations <= 0))

    @property
    def total_violation(self) -> float:
        return float(np.sum(np.maximum(self.violations, 0.0)))


def evaluate(problem: OptProblem, par) -> Individual:
    par = np.asarray(par, dtype=float)
    lo, hi = np.asarray(problem.lower), np.asarray(problem.upper)
    clipped = np.clip(par, lo, hi)
    clamped = bool(np.any(clipped != par))
    # the minimum-thickness rule is checked on the requested values
    t_viol = [(problem.t_min_mm - par[0]) / problem.t_min_mm, (problem.t_min_mm - par[2]) / problem.t_min_mm]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g, d = problem.families(clipped)
            rg = stiffness_report(g, problem.material)
            rd = stiffness_report(d, problem.material)
    except (ValueError, np.linalg.LinAlgError) as exc:
        return Individual(clipped, np.full(3, -np.inf), np.full(5, np.inf), clamped, f"stiffness model failed: {exc}")
    if problem.axis == "xy":
        k = axis_stiffness_xy(rd.k_motional, rg.k_motional)
    else:
        k = axis_stiffness_z(rg.k_motional, rd.k_motional)
    obj = np.array([k, rd.eta, rg.eta])
    viol = np.array([
        (k - problem.ceiling) / problem.ceiling,
        (problem.eta_d_min - rd.eta) / problem.eta_d_min,
        (problem.eta_g_min - rg.eta) / problem.eta_g_min,
        *t_viol,
    ])
    return Individual(clipped, obj, viol, clamped)


# ------------------------------------------------------------------ NSGA-II

def _dominance(obj: np.ndarray, viol: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when i constrained-dominates j (maximisation)."""
    feas = viol <= 0
    ge = np.all(obj[:, None, :] >= obj[None, :, :], axis=2)
    gt = np.any(obj[:, None, :] > obj[None, :, :], axis=2)
    pareto = ge & gt
    fi, fj = feas[:, None], feas[None, :]
    D = (fi & ~fj) | (~fi & ~fj & (viol[:, None] < viol[None, :])) | (fi & fj & pareto)
    return D


def non_dominated_ranks(obj: np.ndarray, viol: np.ndarray) -> np.ndarray:
    D = _dominance(obj, viol)
    count = D.sum(axis=0)
    ranks = np.full(len(obj), -1)
    current = np.nonzero(count == 0)[0]
    r = 0
    while current.size:
        ranks[current] = r
        count = count - D[current].sum(axis=0)
        count[ranks >= 0] = -1
        current = np.nonzero(count == 0)[0]
        r += 1
    return ranks


def crowding_distance(obj: np.ndarray) -> np.ndarray:
    n = len(obj)
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for m in range(obj.shape[1]):
        order = np.argsort(obj[:, m], kind="stable")
        v = obj[order, m]
        d[order[0]] = d[order[-1]] = np.inf
        span = v[-1] - v[0]
        if span > 0:
            d[order[1:-1]] += (v[2:] - v[:-2]) / span
    return d


def _sbx(rng, p1, p2, lo, hi, eta):
    u = rng.random(len(p1))
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)), (1 / (2 * (1 - u))) ** (1 / (eta + 1)))
    c1 = 0.5 * ((1 + beta) * p1 + (1 - beta) * p2)
    c2 = 0.5 * ((1 - beta) * p1 + (1 + beta) * p2)
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def _poly_mutation(rng, x, lo, hi, prob, eta):
    x = x.copy()
    mask = rng.random(len(x)) < prob
    u = rng.random(len(x))
    delta = np.where(u < 0.5, (2 * u) ** (1 / (eta + 1)) - 1, 1 - (2 * (1 - u)) ** (1 / (eta + 1)))
    x[mask] += delta[mask] * (hi - lo)[mask]
    return np.clip(x, lo, hi)


@dataclass
class ParetoFront:
    members: list[Individual]
    problem: OptProblem
    settings: dict = field(default_factory=dict)
    violation_stats: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def __len__(self):
        return len(self.members)

    def objectives(self) -> np.ndarray:
        return np.array([m.objectives for m in self.members]).reshape(-1, 3)

    def rows(self) -> list[tuple]:
        return [(*m.par, *m.objectives, int(m.feasible)) for m in self.members]


def _evaluate_many(problem, pars, workers):
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(evaluate, [problem] * len(pars), list(pars), chunksize=8))
    return [evaluate(problem, p) for p in pars]


def optimize(problem: OptProblem, population: int = 200, generations: int = 100, mutation_prob: float = 0.3,
             seed: int = 0, crossover_prob: float = 0.9, eta_c: float = 15.0, eta_m: float = 20.0,
             workers: int | None = None, progress=None) -> ParetoFront:
    """Run NSGA-II and return the feasible non-dominated set of the last population.

    Deterministic for a given seed; ``workers`` only parallelises evaluations.
    """
    if population < 4 or population % 2:
        raise ValueError("population must be an even number >= 4")
    if generations < 1:
        raise ValueError("generations must be >= 1")
    if not 0 <= mutation_prob <= 1:
        raise ValueError("mutation probability must lie in [0, 1]")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(problem.lower, float), np.asarray(problem.upper, float)
    pop = _evaluate_many(problem, lo + rng.random((population, 4)) * (hi - lo), workers)

    def arrays(ind):
        obj = np.array([i.objectives for i in ind])
        viol = np.array([i.total_violation for i in ind])
        return np.where(np.isfinite(obj), obj, -1e300), viol

    obj, viol = arrays(pop)
    rank = non_dominated_ranks(obj, viol)
    crowd = np.zeros(len(pop))
    for r in np.unique(rank):
        idx = np.nonzero(rank == r)[0]
        crowd[idx] = crowding_distance(obj[idx])

    for gen in range(generations):
        # binary tournament on (rank, crowding)
        a = rng.integers(0, population, size=population)
        b = rng.integers(0, population, size=population)
        better = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
        parents = np.where(better, a, b)
        children = []
        for i in range(0, population, 2):
            p1, p2 = pop[parents[i]].par, pop[parents[i + 1]].par
            if rng.random() < crossover_prob:
                c1, c2 = _sbx(rng, p1, p2, lo, hi, eta_c)
            else:
                c1, c2 = p1.copy(), p2.copy()
            children.append(_poly_mutation(rng, c1, lo, hi, mutation_prob, eta_m))
            children.append(_poly_mutation(rng, c2, lo, hi, mutation_prob, eta_m))
        merged = pop + _evaluate_many(problem, children, workers)
        obj, viol = arrays(merged)
        rank_all = non_dominated_ranks(obj, viol)
        chosen: list[int] = []
        crowd_all = np.zeros(len(merged))
        for r in range(rank_all.max() + 1):
            idx = np.nonzero(rank_all == r)[0]
            cd = crowding_distance(obj[idx])
            crowd_all[idx] = cd
            if len(chosen) + len(idx) <= population:
                chosen.extend(idx.tolist())
            else:
                order = idx[np.lexsort((idx, -cd))]
                chosen.extend(order[:population - len(chosen)].tolist())
                break
        pop = [merged[i] for i in chosen]
        rank, crowd = rank_all[chosen], crowd_all[chosen]
        if progress:
            progress(gen + 1, generations)

    members = [pop[i] for i in range(len(pop)) if rank[i] == 0 and pop[i].feasible]
    uniq: dict[tuple, Individual] = {}
    for m in members:
        uniq.setdefault(tuple(m.par.tolist()), m)
    members = sorted(uniq.values(), key=lambda m: (-m.objectives[0], tuple(m.par)))
    all_viol = np.array([i.violations for i in pop])
    stats = {
        "n_feasible_final": int(sum(i.feasible for i in pop)),
        "mean_violation": np.maximum(all_viol, 0).mean(axis=0).tolist(),
        "max_violation": np.maximum(all_viol, 0).max(axis=0).tolist(),
    }
    settings = dict(population=population, generations=generations, mutation_prob=mutation_prob, seed=seed,
                    crossover_prob=crossover_prob, eta_c=eta_c, eta_m=eta_m)
    front = ParetoFront(members, problem, settings, stats, time.perf_counter() - start)
    if not members:
        log.warning("no feasible design found: %s", stats)
    return front


def select_design(front: ParetoFront, slack: float = 0.10) -> np.ndarray:
    """Stiffest front member whose ratios clear the thresholds by ``slack``.

    Thickness is rounded to 0.01 mm and length to 0.1 mm, and candidates are
    judged after rounding so the returned design is itself feasible when any
    rounded member is. Falls back to the member with the largest ratio margin.
    """
    if not front.members:
        raise ValueError("cannot select from an empty front")
    p = front.problem
    rounded = [evaluate(p, round_design(m.par)) for m in front.members]
    obj = np.array([r.objectives for r in rounded])
    feas = np.array([r.feasible for r in rounded])
    ok = feas & (obj[:, 1] >= p.eta_d_min * (1 + slack)) & (obj[:, 2] >= p.eta_g_min * (1 + slack))
    if ok.any():
        idx = np.nonzero(ok)[0]
        best = idx[np.argmax(obj[idx, 0])]
    else:
        margin = np.minimum(obj[:, 1] / p.eta_d_min, obj[:, 2] / p.eta_g_min)
        margin = np.where(feas, margin, -np.inf) if feas.any() else margin
        best = int(np.argmax(margin))
    return rounded[best].par


def round_design(par) -> np.ndarray:
    t_g, l_g, t_d, l_d = np.asarray(par, dtype=float)
    return np.array([round(t_g, 2), round(l_g, 1), round(t_d, 2), round(l_d, 1)])
