"""Budget-bounded selection of API call sites to harden.

Each discovered fault becomes a positive clause (harden at least one of
its APIs); high-priority requests contribute hard clauses that must all
be covered, low-priority requests contribute soft clauses whose covered
count is maximized.  Selection is two-stage: enumerate the minimal hard
covers within budget, then spend each cover's residual budget on the
remaining soft clauses.  On small instances the extension is an exact
branch and bound evaluated for every cover, which makes the combined
result globally optimal; above the size limits a single best cover is
extended greedily and the plan is flagged approximate.
"""

from __future__ import annotations

from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass

from .cnf import MonotoneCnf, make_cnf
from .errors import InfeasibleBudgetError, ParameterError
from .simulation import SimulatedSystem, execute
from .solver import SolverConfig, enumerate_minimal

# exact-mode limits: above any of these the approximate path takes over
_EXACT_MAX_CANDIDATES = 24
_EXACT_MAX_CLAUSES = 64
_EXACT_MAX_COVERS = 512


@dataclass(frozen=True)
class HardeningInstance:
    hard: tuple[tuple[int, MonotoneCnf], ...]  # (request_id, per-request formula)
    soft: tuple[tuple[int, MonotoneCnf], ...]
    budget: int
    n_vars: int

    def __post_init__(self):
        if self.budget < 0:
            raise ParameterError(f"budget must be >= 0, got {self.budget}")


@dataclass(frozen=True)
class HardeningPlan:
    selected: tuple[int, ...]
    hard_satisfied: bool
    soft_covered: int
    soft_total: int
    cr: float
    feasible: bool
    exact: bool


@dataclass(frozen=True)
class SweepLevel:
    budget: int
    plan: HardeningPlan | None
    cr: float | None
    mcg: float | None
    afvr: float | None
    feasible: bool


@dataclass(frozen=True)
class BudgetSweep:
    levels: tuple[SweepLevel, ...]


def build_request_cnf(valid_faults: Sequence, n_vars: int) -> MonotoneCnf:
    """One clause per fault: hardening any one API of a fault mitigates it."""
    return make_cnf([frozenset(f) for f in valid_faults], n_vars)


def _all_clauses(formulas: Sequence[tuple[int, MonotoneCnf]]) -> list[frozenset[int]]:
    out: list[frozenset[int]] = []
    for _, cnf in formulas:
        out.extend(cnf.clauses)
    return out


def _coverage(selected, clauses) -> int:
    sel = frozenset(selected)
    return sum(1 for c in clauses if c & sel)


def _plan(selected, hard_clauses, soft_clauses, feasible, exact) -> HardeningPlan:
    sel = tuple(sorted(selected))
    covered = _coverage(sel, soft_clauses)
    total = len(soft_clauses)
    return HardeningPlan(
        selected=sel,
        hard_satisfied=all(c & frozenset(sel) for c in hard_clauses),
        soft_covered=covered,
        soft_total=total,
        cr=covered / total if total else 1.0,
        feasible=feasible,
        exact=exact,
    )


def _max_coverage_exact(candidates, cand_masks, limit):
    """Pick at most ``limit`` candidates maximizing covered clause bits.

    Branch and bound over candidates in descending gain order; ties in
    final coverage go to the lexicographically smallest selection.
    """
    order = sorted(range(len(candidates)), key=lambda i: (-cand_masks[i].bit_count(), candidates[i]))
    best_cov = -1
    best_sel: tuple[int, ...] = ()

    def consider(covered_mask, chosen):
        nonlocal best_cov, best_sel
        cov = covered_mask.bit_count()
        sel = tuple(sorted(candidates[i] for i in chosen))
        if cov > best_cov or (cov == best_cov and sel < best_sel):
            best_cov, best_sel = cov, sel

    def walk(pos, covered_mask, chosen):
        consider(covered_mask, chosen)
        picks_left = limit - len(chosen)
        if picks_left == 0 or pos == len(order):
            return
        gains = sorted(
            ((cand_masks[i] & ~covered_mask).bit_count() for i in order[pos:]),
            reverse=True,
        )
        if covered_mask.bit_count() + sum(gains[:picks_left]) < best_cov:
            return
        idx = order[pos]
        walk(pos + 1, covered_mask | cand_masks[idx], chosen + [idx])
        walk(pos + 1, covered_mask, chosen)

    walk(0, 0, [])
    return best_sel


def _greedy_cover(selected, clauses, budget_left):
    """Max-marginal-gain picks over still-uncovered clauses, ties by id."""
    sel = set(selected)
    uncovered = [c for c in clauses if not c & sel]
    picks = []
    while budget_left > 0 and uncovered:
        gains: dict[int, int] = {}
        for c in uncovered:
            for v in c:
                if v not in sel:
                    gains[v] = gains.get(v, 0) + 1
        if not gains:
            break
        v = min(gains, key=lambda x: (-gains[x], x))
        if gains[v] == 0:
            break
        sel.add(v)
        picks.append(v)
        budget_left -= 1
        uncovered = [c for c in uncovered if v not in c]
    return picks


def _extend_exact(base: set[int], residual: int, soft_clauses) -> tuple[int, ...]:
    uncovered = [c for c in soft_clauses if not c & base]
    if residual <= 0 or not uncovered:
        return tuple(sorted(base))
    candidates = sorted({v for c in uncovered for v in c})
    cand_index = {v: i for i, v in enumerate(candidates)}
    # one bit per clause instance: duplicates across requests count separately
    cand_masks = [0] * len(candidates)
    for bit, c in enumerate(uncovered):
        for v in c:
            cand_masks[cand_index[v]] |= 1 << bit
    picks = _max_coverage_exact(candidates, cand_masks, residual)
    return tuple(sorted(base | set(picks)))


def optimize(instance: HardeningInstance) -> HardeningPlan:
    """Two-stage selection; raises when the hard side cannot fit the budget.

    On small instances the exact stage-2 extension is evaluated for every
    minimal hard cover, which makes the result globally optimal: any
    optimal selection contains some minimal cover of the hard clauses.
    Above the size limits, the densest-coverage cover is frozen and the
    residual budget is spent greedily, flagged via ``exact=False``.
    """
    hard_clauses = _all_clauses(instance.hard)
    soft_clauses = _all_clauses(instance.soft)
    hard_cnf = make_cnf(hard_clauses, instance.n_vars)

    covers = enumerate_minimal(hard_cnf, SolverConfig(max_size=instance.budget))
    if not covers:
        raise InfeasibleBudgetError(
            f"hard clauses unsatisfiable within budget {instance.budget}"
        )
    soft_vars = {v for c in soft_clauses for v in c}
    exact_mode = (
        len(soft_vars) <= _EXACT_MAX_CANDIDATES
        and len(soft_clauses) <= _EXACT_MAX_CLAUSES
        and len(covers) <= _EXACT_MAX_COVERS
    )

    if exact_mode:
        best_sel: tuple[int, ...] | None = None
        best_cov = -1
        for cover in covers:
            sel = _extend_exact(set(cover), instance.budget - len(cover), soft_clauses)
            cov = _coverage(sel, soft_clauses)
            if cov > best_cov or (cov == best_cov and sel < best_sel):
                best_cov, best_sel = cov, sel
        return _plan(best_sel, hard_clauses, soft_clauses, feasible=True, exact=True)

    # approximate path: freeze the best-covering minimal cover, extend greedily
    best = covers[0]
    best_cov = _coverage(best, soft_clauses)
    for s in covers[1:]:
        cov = _coverage(s, soft_clauses)
        if cov > best_cov:
            best, best_cov = s, cov
    selected = set(best)
    uncovered = [c for c in soft_clauses if not c & selected]
    selected.update(_greedy_cover(selected, uncovered, instance.budget - len(selected)))
    return _plan(selected, hard_clauses, soft_clauses, feasible=True, exact=False)


def greedy_baseline(instance: HardeningInstance) -> HardeningPlan:
    """Inverted-index greedy: cover hard clauses first, then soft ones.

    Never raises on a too-small budget; the returned plan carries
    ``feasible=False`` when the hard side could not be fully covered.
    """
    hard_clauses = _all_clauses(instance.hard)
    soft_clauses = _all_clauses(instance.soft)
    selected: set[int] = set()

    budget_left = instance.budget
    picks = _greedy_cover(selected, hard_clauses, budget_left)
    selected.update(picks)
    budget_left -= len(picks)
    hard_ok = all(c & selected for c in hard_clauses)

    if hard_ok and budget_left > 0:
        soft_picks = _greedy_cover(selected, soft_clauses, budget_left)
        selected.update(soft_picks)

    return _plan(selected, hard_clauses, soft_clauses, feasible=hard_ok, exact=False)


def budget_sweep(
    system: SimulatedSystem,
    faults_by_request: Mapping[int, Sequence],
    high_priority: Collection[int],
    budgets: Sequence[int],
    method: str = "exact",
) -> BudgetSweep:
    """Evaluate selection plans across increasing budgets.

    Coverage metrics come from the plans; the residual-validity metric is
    measured the closed-loop way, by re-injecting every known fault with
    the selected APIs immune.  Requests with no known faults contribute
    neither clauses nor an averaging term.  Marginal gain is undefined at
    the first level and is taken against the last feasible level when an
    infeasible one sits in between.
    """
    if method not in ("exact", "greedy"):
        raise ParameterError(f"method must be 'exact' or 'greedy', got {method!r}")
    if not budgets:
        raise ParameterError("budgets must be non-empty")
    if any(b < 0 for b in budgets):
        raise ParameterError("budgets must be non-negative")
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise ParameterError("budgets must be strictly increasing")
    for rid in high_priority:
        system.request(rid)  # raises UnknownRequestError

    active = {
        rid: faults for rid, faults in sorted(faults_by_request.items()) if faults
    }
    hard = tuple(
        (rid, build_request_cnf(faults, system.n_vars))
        for rid, faults in active.items()
        if rid in set(high_priority)
    )
    soft = tuple(
        (rid, build_request_cnf(faults, system.n_vars))
        for rid, faults in active.items()
        if rid not in set(high_priority)
    )

    levels: list[SweepLevel] = []
    prev: tuple[int, int] | None = None  # (budget, soft_covered) of last feasible level
    for b in budgets:
        instance = HardeningInstance(hard=hard, soft=soft, budget=b, n_vars=system.n_vars)
        if method == "exact":
            try:
                plan = optimize(instance)
            except InfeasibleBudgetError:
                plan = None
        else:
            plan = greedy_baseline(instance)
            if not plan.feasible:
                plan = None
        if plan is None:
            levels.append(SweepLevel(budget=b, plan=None, cr=None, mcg=None, afvr=None, feasible=False))
            continue
        mcg = None
        if prev is not None:
            mcg = (plan.soft_covered - prev[1]) / (b - prev[0])
        immune = frozenset(plan.selected)
        fractions = []
        for rid, faults in active.items():
            still = sum(1 for f in faults if execute(system, rid, set(f), immune=immune).failed)
            fractions.append(still / len(faults))
        afvr = sum(fractions) / len(fractions) if fractions else 0.0
        levels.append(
            SweepLevel(budget=b, plan=plan, cr=plan.cr, mcg=mcg, afvr=afvr, feasible=True)
        )
        prev = (b, plan.soft_covered)
    return BudgetSweep(levels=tuple(levels))
