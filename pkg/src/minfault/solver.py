"""Enumeration of all subset-minimal satisfying assignments of a monotone CNF.

Two independent routes exist on purpose: ``enumerate_minimal`` is a
bitmask depth-first search meant for real workloads, and
``brute_force_minimal`` is a small-universe exhaustive oracle used to
verify it.  They share no search machinery.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .cnf import MonotoneCnf, is_satisfied
from .errors import FormulaTooLargeError, ParameterError

FaultSet = tuple  # tuple[VarId, ...] in ascending order

# Per-mask dominance lists are capped: entries beyond the cap are not
# stored (pruning gets weaker, never wrong).
_TABLE_CAP = 32


@dataclass(frozen=True)
class SolverConfig:
    """Search bound and reproducibility knobs.

    ``max_size`` bounds the cardinality of returned assignments.  With
    ``deterministic`` unset, candidate iteration order is shuffled from
    ``order_seed``; the returned *set* is unaffected either way because
    output is canonically sorted.  ``use_pruning_table`` toggles the
    mask-dominance table (a pure accelerator, kept switchable so tests
    can show it does not change results).
    """

    max_size: int
    deterministic: bool = True
    use_pruning_table: bool = True
    order_seed: int | None = None

    def __post_init__(self):
        if self.max_size < 0:
            raise ParameterError(f"max_size must be >= 0, got {self.max_size}")


@dataclass
class SolverCounters:
    """Optional profiling counters; not part of the correctness contract."""

    expansions: int = 0
    pushes: int = 0
    leaf_hits: int = 0
    duplicate_leaves: int = 0
    nonminimal_leaves: int = 0
    distinct_masks: int = 0


def _clause_index(cnf: MonotoneCnf) -> tuple[dict[int, int], list[list[tuple[int, int]]]]:
    """Per-variable coverage masks and per-clause candidate lists."""
    cover: dict[int, int] = {}
    for i, c in enumerate(cnf.clauses):
        bit = 1 << i
        for v in c:
            cover[v] = cover.get(v, 0) | bit
    cands = [[(cover[v], v) for v in sorted(c)] for c in cnf.clauses]
    return cover, cands


def enumerate_minimal(cnf: MonotoneCnf, config: SolverConfig) -> list[FaultSet]:
    """All subset-minimal satisfying assignments with at most ``max_size`` variables.

    Explicit-stack DFS over uncovered-clause bitmasks (plain ints, so any
    clause count works).  Each expansion branches on the lowest-index
    uncovered clause; leaves pass a duplicate check and then a drop-one
    minimality check.  Output is deduplicated, each assignment ascending,
    the list sorted lexicographically.  The empty formula yields ``[()]``.
    """
    sols, _ = enumerate_minimal_with_counters(cnf, config)
    return sols


def enumerate_minimal_with_counters(
    cnf: MonotoneCnf, config: SolverConfig
) -> tuple[list[FaultSet], SolverCounters]:
    counters = SolverCounters()
    m = cnf.m
    if m == 0:
        counters.leaf_hits = 1
        return [()], counters
    maxd = config.max_size
    if maxd == 0:
        return [], counters

    cover, cands = _clause_index(cnf)
    if not config.deterministic:
        rng = random.Random(config.order_seed)
        for lst in cands:
            rng.shuffle(lst)

    full = (1 << m) - 1
    use_table = config.use_pruning_table
    # mask -> pick sets that reached it; a revisit by a superset can only
    # lead to leaves with a redundant variable, so it is pruned
    seen: dict[int, list[frozenset[int]]] = {}
    solutions: set[frozenset[int]] = set()
    stack: list[tuple[int, frozenset[int]]] = [(full, frozenset())]

    while stack:
        u, chosen = stack.pop()
        if u == 0:
            counters.leaf_hits += 1
            if chosen in solutions:
                counters.duplicate_leaves += 1
                continue
            redundant = False
            for v in chosen:
                rest = 0
                for w in chosen:
                    if w != v:
                        rest |= cover[w]
                if rest == full:
                    redundant = True
                    break
            if redundant:
                counters.nonminimal_leaves += 1
            else:
                solutions.add(chosen)
            continue
        d = len(chosen)
        if d >= maxd:
            continue
        if use_table:
            lst = seen.get(u)
            if lst is None:
                seen[u] = [chosen]
            else:
                dominated = False
                for s in lst:
                    if s <= chosen:
                        dominated = True
                        break
                if dominated:
                    continue
                if len(lst) < _TABLE_CAP:
                    lst.append(chosen)
        counters.expansions += 1
        i = (u & -u).bit_length() - 1
        last_level = d + 1 == maxd
        for cmask, v in cands[i]:
            if v in chosen:
                continue
            nu = u & ~cmask
            if nu and last_level:
                continue
            stack.append((nu, chosen | {v}))
            counters.pushes += 1

    counters.distinct_masks = len(seen)
    return sorted(tuple(sorted(s)) for s in solutions), counters


def is_minimal(candidate, cnf: MonotoneCnf) -> bool:
    """True iff dropping any single variable of a satisfying set breaks it.

    Raises ``ValueError`` when the candidate does not satisfy the formula
    (caller bug: minimality of a non-solution is meaningless).
    """
    fs = frozenset(candidate)
    if not is_satisfied(cnf, fs):
        raise ValueError(f"candidate {sorted(fs)} does not satisfy the formula")
    return all(not is_satisfied(cnf, fs - {v}) for v in fs)


def brute_force_minimal(cnf: MonotoneCnf, max_size: int) -> list[FaultSet]:
    """Exhaustive oracle: same contract and ordering as ``enumerate_minimal``.

    Enumerates subsets of the occurring variables by ascending size and
    keeps satisfying sets that stay unsatisfying after removing any
    single member (for monotone formulas that drop-one test is exactly
    subset-minimality).  Refuses universes above 20 variables.
    """
    if max_size < 0:
        raise ParameterError(f"max_size must be >= 0, got {max_size}")
    if cnf.n_vars > 20:
        raise FormulaTooLargeError(
            f"brute force refuses n_vars={cnf.n_vars} (limit 20)"
        )
    m = cnf.m
    if m == 0:
        return [()]
    occ = sorted(cnf.variables())
    masks: dict[int, int] = {}
    for i, c in enumerate(cnf.clauses):
        bit = 1 << i
        for v in c:
            masks[v] = masks.get(v, 0) | bit
    full = (1 << m) - 1
    # every member of a minimal set has a private clause, so size <= m
    out: list[FaultSet] = []
    for size in range(1, min(max_size, m, len(occ)) + 1):
        for combo in itertools.combinations(occ, size):
            acc = 0
            for v in combo:
                acc |= masks[v]
            if acc != full:
                continue
            minimal = True
            for v in combo:
                rest = 0
                for w in combo:
                    if w != v:
                        rest |= masks[w]
                if rest == full:
                    minimal = False
                    break
            if minimal:
                out.append(combo)
    out.sort()
    return out
