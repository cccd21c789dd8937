"""Exact budgeted coverage of path segments by ceiling sensors.

Composing the visibility relation G with the path matrix P turns the
placement integer program into a pure maximum-coverage problem: candidate j
covers the segment set ``C(j)``, and at most k candidates may be chosen. Sets
are Python-int bitsets over segment ids.

The exact solver is a depth-first branch and bound. Each node branches on
the free candidate of largest marginal gain (include first, then exclude);
its upper bound is the covered count plus the sum of the r largest marginal
gains, r being the remaining budget, capped by the union of all free sets.
Independent components (candidates that share no segment, directly or
transitively) are solved separately and recombined by a budget DP.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .coverage import CoverageMatrix, bit_indices, bits_from_bool
from .errors import DimensionMismatch, EmptySweep, InstanceTooLarge, NoCandidates
from .filtering import SegmentMatrix

DEFAULT_TIME_LIMIT_S = 900.0
BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class Composition:
    """Deduplicated per-candidate segment sets.

    ``classes[r]`` lists every candidate cell whose segment set equals
    ``sets[r]``; ``candidates[r]`` is the lowest of them.
    """

    candidates: tuple
    sets: tuple
    classes: tuple
    total_segments: int


def compose_coverage(G: CoverageMatrix, P: SegmentMatrix) -> Composition:
    if G.n != P.n:
        raise DimensionMismatch(f"coverage matrix has n={G.n}, segment matrix n={P.n}")
    # cell -> bitset of segments passing through it
    through = {}
    for t, seg in enumerate(P.segments):
        bit = 1 << t
        for i in bit_indices(seg):
            through[i] = through.get(i, 0) | bit
    by_set = {}
    for j, row in zip(G.candidates, G.rows):
        acc = 0
        for i in bit_indices(row) if through else ():
            acc |= through.get(i, 0)
        if acc:
            by_set.setdefault(acc, []).append(j)
    groups = sorted((sorted(cells), s) for s, cells in by_set.items())
    return Composition(
        tuple(cells[0] for cells, _ in groups),
        tuple(s for _, s in groups),
        tuple(tuple(cells) for cells, _ in groups),
        P.p,
    )


def prune_dominated(comp: Composition) -> Composition:
    """Drop candidates whose segment set is a strict subset of another's."""
    order = sorted(range(len(comp.sets)), key=lambda r: -comp.sets[r].bit_count())
    kept = []
    for r in order:
        s = comp.sets[r]
        if not any(s & ~comp.sets[q] == 0 for q in kept):
            kept.append(r)
    kept.sort()
    return Composition(
        tuple(comp.candidates[r] for r in kept),
        tuple(comp.sets[r] for r in kept),
        tuple(comp.classes[r] for r in kept),
        comp.total_segments,
    )


@dataclass(frozen=True)
class PlacementProblem:
    sets: tuple  # C(j) bitsets, aligned with ``candidates``
    candidates: tuple
    sensor_budget_k: int
    total_segments: int = 0
    classes: tuple = ()

    def __post_init__(self):
        if self.sensor_budget_k < 1:
            raise ValueError("sensor_budget_k must be >= 1")
        if len(self.sets) != len(self.candidates):
            raise DimensionMismatch("sets and candidates differ in length")
        if not self.classes:
            object.__setattr__(self, "classes", tuple((c,) for c in self.candidates))
        if not self.total_segments:
            union = 0
            for s in self.sets:
                union |= s
            object.__setattr__(self, "total_segments", union.bit_length())

    @classmethod
    def from_sets(cls, sets, k: int, candidates=None, total_segments: int = 0) -> "PlacementProblem":
        """Build from iterables of segment ids (handy for tests and scripts)."""
        masks = tuple(sum(1 << t for t in set(s)) for s in sets)
        cands = tuple(range(len(masks))) if candidates is None else tuple(candidates)
        return cls(masks, cands, k, total_segments)

    @classmethod
    def from_matrices(cls, G: CoverageMatrix, P: SegmentMatrix, k: int, dominated: bool = True) -> "PlacementProblem":
        comp = compose_coverage(G, P)
        if dominated:
            comp = prune_dominated(comp)
        return cls(comp.sets, comp.candidates, k, comp.total_segments, comp.classes)

    def with_budget(self, k: int) -> "PlacementProblem":
        return replace(self, sensor_budget_k=k)

    def objective(self, chosen_cells) -> int:
        pos = {c: r for r, c in enumerate(self.candidates)}
        acc = 0
        for c in chosen_cells:
            acc |= self.sets[pos[c]]
        return acc.bit_count()


@dataclass(frozen=True)
class Placement:
    chosen: tuple  # candidate cell indices, ascending
    objective: int
    optimal: bool
    gap: int = 0
    nodes: int = 0
    seconds: float = field(default=0.0, compare=False)
    total_segments: int = 0

    @property
    def upper_bound(self) -> int:
        return self.objective + self.gap

    @property
    def coverage_rate(self) -> float:
        return self.objective / self.total_segments if self.total_segments else 0.0

    def to_dict(self, grid=None) -> dict:
        doc = {
            "chosen": list(self.chosen),
            "objective": self.objective,
            "total_segments": self.total_segments,
            "coverage_rate": round(self.coverage_rate, 12),
            "optimal": self.optimal,
            "gap": self.gap,
            "nodes": self.nodes,
        }
        if grid is not None:
            doc["rowcol"] = [list(grid.rowcol(c)) for c in self.chosen]
        return doc


# -- search core --------------------------------------------------------------

def _union_count(sets, idx) -> int:
    acc = 0
    for r in idx:
        acc |= sets[r]
    return acc.bit_count()


def _greedy(sets, k, start=()):
    chosen = list(start)
    covered = 0
    for r in chosen:
        covered |= sets[r]
    gains = []
    while len(chosen) < k:
        best_gain, best_r = 0, -1
        for r, s in enumerate(sets):
            g = (s & ~covered).bit_count()
            if g > best_gain:
                best_gain, best_r = g, r
        if best_r < 0:
            break
        chosen.append(best_r)
        gains.append(best_gain)
        covered |= sets[best_r]
    return chosen, covered.bit_count(), gains


def _swap_improve(sets, chosen):
    """1-swap local search; used only to seed the incumbent."""
    chosen = list(chosen)
    val = _union_count(sets, chosen)
    improved = True
    while improved and chosen:
        improved = False
        for pos in range(len(chosen)):
            rest = 0
            for q, r in enumerate(chosen):
                if q != pos:
                    rest |= sets[r]
            base = rest.bit_count()
            inside = set(chosen)
            for r, s in enumerate(sets):
                if r in inside:
                    continue
                if base + (s & ~rest).bit_count() > val:
                    chosen[pos] = r
                    val = base + (s & ~rest).bit_count()
                    improved = True
                    break
            if improved:
                break
    return chosen, val


class _Timeout(Exception):
    pass


def _node_bound(sets, covered, free, r):
    """(bound, gains) for a node; gains are (gain, index) of positive-gain free sets."""
    cov = covered.bit_count()
    gains = []
    union = 0
    notcov = ~covered
    for c in free:
        g = (sets[c] & notcov).bit_count()
        if g:
            gains.append((g, c))
            union |= sets[c]
    if r <= 0 or not gains:
        return cov, gains
    top = sum(g for g, _ in heapq.nlargest(r, gains)) if r < len(gains) else sum(g for g, _ in gains)
    return cov + min(top, (union & notcov).bit_count()), gains


def bnb_core(sets, k, incumbent=(), deadline=math.inf, on_node=None):
    """Depth-first include/exclude branch and bound on set indices.

    Returns ``(choice, value, complete, upper_bound, nodes)``. ``on_node`` is
    called as ``on_node(included, free, bound)`` for every expanded node.
    """
    m = len(sets)
    k = min(k, m)
    best = tuple(sorted(incumbent))
    best_val = _union_count(sets, best)
    root_bound, _ = _node_bound(sets, 0, range(m), k)
    stack = [(0, (), tuple(range(m)), root_bound)]
    nodes = 0
    while stack:
        if nodes & 63 == 0 and time.perf_counter() > deadline:
            ub = max([best_val] + [b for *_, b in stack])
            return best, best_val, False, ub, nodes
        covered, inc, free, pbound = stack.pop()
        if pbound <= best_val:
            continue
        nodes += 1
        cov = covered.bit_count()
        if cov > best_val:
            best, best_val = tuple(sorted(inc)), cov
        r = k - len(inc)
        bound, gains = _node_bound(sets, covered, free, r)
        if on_node is not None:
            on_node(inc, tuple(c for _, c in gains), bound)
        if r == 0 or not gains or bound <= best_val:
            continue
        g_star, c_star = max(gains, key=lambda gc: (gc[0], -gc[1]))
        rest = tuple(c for _, c in gains if c != c_star)
        stack.append((covered, inc, rest, bound))
        stack.append((covered | sets[c_star], inc + (c_star,), rest, bound))
    return best, best_val, True, best_val, nodes


def _components(sets):
    """Group set indices that share segments (transitively)."""
    parent = list(range(len(sets)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner = {}
    for r, s in enumerate(sets):
        for t in bit_indices(s):
            if t in owner:
                ra, rb = find(owner[t]), find(r)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                owner[t] = r
    groups = {}
    for r in range(len(sets)):
        groups.setdefault(find(r), []).append(r)
    return sorted(groups.values())


def _solve_indices(sets, k, deadline, warm=(), decompose=True, on_node=None):
    """Exact max coverage over ``sets`` with budget k -> (choice, value, complete, ub, nodes)."""
    comps = _components(sets) if decompose else [list(range(len(sets)))]
    if len(comps) == 1:
        local = comps[0]
        sub = [sets[r] for r in local]
        pos = {r: q for q, r in enumerate(local)}
        g, _, _ = _greedy(sub, k)
        g, gval = _swap_improve(sub, g)
        w = [pos[r] for r in warm if r in pos][:k]
        # the warm start is the incumbent unless greedy is strictly better
        seed = w if w and _union_count(sub, w) >= gval else g
        choice, val, done, ub, nodes = bnb_core(sub, k, seed, deadline, on_node)
        return tuple(sorted(local[q] for q in choice)), val, done, ub, nodes

    # per-component value curves for budgets 0..min(k, size)
    curves, bounds, picks = [], [], []
    total_nodes, complete = 0, True
    for comp in comps:
        sub = [sets[r] for r in comp]
        cap = min(k, len(comp))
        vals, ubs, chs = [0], [0], [()]
        prev = ()
        for b in range(1, cap + 1):
            g, _, _ = _greedy(sub, b)
            g, gval = _swap_improve(sub, g)
            ext, _, _ = _greedy(sub, b, prev)
            seed = ext if _union_count(sub, ext) >= gval else g
            choice, val, done, ub, nodes = bnb_core(sub, b, seed, deadline)
            total_nodes += nodes
            complete &= done
            vals.append(val)
            ubs.append(max(ub, ubs[-1]))
            chs.append(tuple(comp[q] for q in choice))
            prev = choice
            if val == _union_count(sub, range(len(sub))) and done:
                # saturated: larger budgets cannot improve
                for _ in range(b + 1, cap + 1):
                    vals.append(val), ubs.append(val), chs.append(chs[-1])
                break
        curves.append(vals)
        bounds.append(ubs)
        picks.append(chs)

    def dp(tables):
        # best[b] over processed components, with argmax allocation
        best = [0] * (k + 1)
        alloc = [[] for _ in range(k + 1)]
        for table in tables:
            nb, na = [-1] * (k + 1), [None] * (k + 1)
            for b in range(k + 1):
                for a in range(min(b, len(table) - 1) + 1):
                    v = best[b - a] + table[a]
                    if v > nb[b]:
                        nb[b], na[b] = v, alloc[b - a] + [a]
            best, alloc = nb, na
        return best, alloc

    best, alloc = dp(curves)
    ub_best, _ = dp(bounds)
    choice = tuple(sorted(r for comp_picks, a in zip(picks, alloc[k]) for r in comp_picks[a]))
    return choice, best[k], complete, max(ub_best[k], best[k]), total_nodes


def _placement(problem, choice, value, optimal, ub, nodes, seconds):
    return Placement(
        tuple(sorted(problem.candidates[r] for r in choice)),
        int(value),
        bool(optimal),
        int(max(0, ub - value)) if not optimal else 0,
        int(nodes),
        seconds,
        problem.total_segments,
    )


def solve_bnb(problem: PlacementProblem, time_limit_s: float = DEFAULT_TIME_LIMIT_S, warm_start=(),
              decompose: bool = True, on_node=None) -> Placement:
    """Exact optimum of the budgeted coverage program by branch and bound.

    On time-limit expiry the incumbent is returned with ``optimal=False`` and
    a valid ``gap``. ``warm_start`` is an optional iterable of candidate cells.
    """
    if not problem.candidates:
        raise NoCandidates("placement problem has no candidates")
    t0 = time.perf_counter()
    pos = {c: r for r, c in enumerate(problem.candidates)}
    warm = [pos[c] for c in warm_start if c in pos]
    choice, val, done, ub, nodes = _solve_indices(
        problem.sets, problem.sensor_budget_k, t0 + time_limit_s, warm,
        decompose=decompose and on_node is None, on_node=on_node,
    )
    return _placement(problem, choice, val, done, ub, nodes, time.perf_counter() - t0)


def solve_greedy(problem: PlacementProblem) -> Placement:
    if not problem.candidates:
        raise NoCandidates("placement problem has no candidates")
    t0 = time.perf_counter()
    choice, val, _ = _greedy(problem.sets, problem.sensor_budget_k)
    if not choice:
        choice = [0]
    return _placement(problem, choice, val, False, val, 0, time.perf_counter() - t0)


def greedy_gains(problem: PlacementProblem) -> list:
    """Marginal gains along the greedy prefix (non-increasing by submodularity)."""
    return _greedy(problem.sets, problem.sensor_budget_k)[2]


def brute_force(problem: PlacementProblem) -> Placement:
    """Exhaustive optimum over all size-min(k, m) subsets (test oracle)."""
    m = len(problem.candidates)
    if m == 0:
        raise NoCandidates("placement problem has no candidates")
    r = min(problem.sensor_budget_k, m)
    if math.comb(m, r) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"C({m}, {r}) = {math.comb(m, r)} subsets exceeds {BRUTE_FORCE_LIMIT}")
    t0 = time.perf_counter()
    best_val, best = -1, ()
    sets = problem.sets
    for combo in itertools.combinations(range(m), r):
        acc = 0
        for q in combo:
            acc |= sets[q]
        v = acc.bit_count()
        if v > best_val:
            best_val, best = v, combo
    return _placement(problem, best, best_val, True, best_val, math.comb(m, r), time.perf_counter() - t0)


def sweep_budget(problem: PlacementProblem, k_range, time_limit_s: float = DEFAULT_TIME_LIMIT_S,
                 decompose: bool = True) -> list:
    """Exact solutions for each budget in ``k_range`` -> list of (k, Placement)."""
    return list(iter_sweep_budget(problem, k_range, time_limit_s, decompose))


def iter_sweep_budget(problem: PlacementProblem, k_range, time_limit_s: float = DEFAULT_TIME_LIMIT_S,
                      decompose: bool = True):
    """Lazy form of ``sweep_budget``: yields (k, Placement) as each budget is solved."""
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise EmptySweep("k_range is empty")
    prev = None
    for k in ks:
        warm = ()
        if prev is not None:
            base = [problem.candidates.index(c) for c in prev.chosen]
            ext, _, _ = _greedy(problem.sets, k, base)
            warm = tuple(problem.candidates[r] for r in ext)
        placement = solve_bnb(problem.with_budget(k), time_limit_s, warm, decompose)
        if prev is not None and placement.objective <= prev.objective:
            # no gain from the extra sensor: keep the smaller previous layout
            placement = replace(placement, chosen=prev.chosen, objective=prev.objective,
                                gap=max(0, placement.upper_bound - prev.objective))
        yield k, placement
        prev = placement


def benefit_values(sweep, total_segments: int, alpha: float) -> list:
    """(k, coverage_rate - alpha * k) for each sweep entry."""
    if total_segments <= 0:
        raise ValueError("total_segments must be positive")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    rows = []
    for k, obj in sweep:
        value = obj.objective if isinstance(obj, Placement) else obj
        rows.append((int(k), value / total_segments - alpha * int(k)))
    return rows


def budget_select(sweep, total_segments: int, alpha: float) -> int:
    """Budget maximizing normalized coverage minus ``alpha * k``; ties go to smaller k."""
    if not sweep:
        raise EmptySweep("sweep is empty")
    rows = sorted(benefit_values(sweep, total_segments, alpha))
    best_k, best_v = rows[0]
    for k, v in rows[1:]:
        if v > best_v + 1e-12:
            best_k, best_v = k, v
    return best_k


def _crossing_weights(grid, P) -> np.ndarray:
    """Per-cell count of segments that visit that Boundary cell."""
    boundary = grid.boundary_mask
    weight = np.zeros(grid.n)
    for bits in P.segments:
        idx = np.asarray(bit_indices(bits), dtype=np.int64)
        weight[idx[boundary[idx]]] += 1
    return weight


def pick_representatives(placement: Placement, problem: PlacementProblem, grid, G=None, P=None,
                         refine: bool = True) -> Placement:
    """Choose concrete sensor cells for a solved placement without changing its objective.

    Without ``G`` and ``P`` each chosen sensor moves to the member of its
    equivalence class nearest the class centroid. With them, sensors are
    ranked by how many (segment, boundary cell) incidences their footprints
    see, so they sit over the crossings rather than on segment tails: each
    class contributes its best-seeing member, and with ``refine`` a 1-swap
    search replaces chosen classes while the objective stays the same and
    the seen incidences strictly grow. Remaining ties go to the member
    nearest the class centroid, then to the lowest index.
    """
    pos = {c: r for r, c in enumerate(problem.candidates)}
    centers = grid.centers()
    weight = None
    if G is not None and P is not None:
        weight = _crossing_weights(grid, P)
        boundary_bits = bits_from_bool(grid.boundary_mask)

    def best_member(r):
        members = np.asarray(problem.classes[r])
        pts = centers[members]
        d = np.linalg.norm(pts - pts.mean(axis=0), axis=1)
        if weight is not None:
            score = np.array([weight[bit_indices(G.row_of(m) & boundary_bits)].sum() for m in members])
            d = np.where(score >= score.max() - 1e-9, d, np.inf)
        return int(members[np.flatnonzero(d <= d.min() + 1e-9)[0]])

    rows = [pos[c] for c in placement.chosen]
    if weight is not None and refine and rows:
        rep = [best_member(r) for r in range(len(problem.candidates))]
        seen = [G.row_of(m) & boundary_bits for m in rep]

        def score(rs):
            bits = 0
            for r in rs:
                bits |= seen[r]
            return weight[bit_indices(bits)].sum()

        target = _union_count(problem.sets, rows)
        current = score(rows)
        improved = True
        while improved:
            improved = False
            for slot in range(len(rows)):
                rest = rows[:slot] + rows[slot + 1 :]
                for r in range(len(problem.candidates)):
                    if r in rows:
                        continue
                    trial = rest + [r]
                    if _union_count(problem.sets, trial) < target:
                        continue
                    s = score(trial)
                    if s > current + 1e-9:
                        rows, current, improved = trial, s, True
                        break
        return replace(placement, chosen=tuple(sorted(rep[r] for r in rows)))
    return replace(placement, chosen=tuple(sorted(best_member(r) for r in rows)))
