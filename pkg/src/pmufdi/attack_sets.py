"""Admissible attacked-state sets.

An attacked-state set I induces the subgraph S = I plus its graph
neighbors. The set is admissible when every boundary bus of S (a neighbor
of I outside I) carries base-case load: injection changes caused by the
state shift then land on load buses, where they pass as plausible demand.
The measurement set J collects every dependency-matrix row with a nonzero
entry on some bus of I; those are exactly the measurements the attack can
touch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cases import GridCase
from .measurements import DependencyMatrix


@dataclass(frozen=True)
class AttackSetValidation:
    attacked_buses: tuple[int, ...]     # I, sorted
    subgraph_buses: tuple[int, ...]     # S = I with neighbors, sorted
    boundary_buses: tuple[int, ...]     # S minus I, sorted
    measurement_rows: tuple[int, ...]   # J, row indices into the dependency matrix
    valid: bool
    reasons: tuple[str, ...]


def measurement_support(dep: DependencyMatrix, bus_ids) -> tuple[int, ...]:
    """Rows of H with a structurally nonzero entry on any bus in *bus_ids*."""
    cols = [dep.column_index(b) for b in bus_ids]
    if not cols:
        return ()
    hit = np.any(dep.h[:, cols] != 0.0, axis=1)
    return tuple(int(i) for i in np.flatnonzero(hit))


def validate_attack_set(
    case: GridCase, dep: DependencyMatrix, attacked_buses
) -> AttackSetValidation:
    """Check the load-boundary rule for I = *attacked_buses* and compute J."""
    attacked = tuple(sorted(set(int(b) for b in attacked_buses)))
    if not attacked:
        raise ValueError("attacked-state set must be nonempty")
    for b in attacked:
        case.bus_index(b)

    inner = set(attacked)
    boundary = set()
    for b in attacked:
        boundary |= case.neighbors(b)
    boundary -= inner
    subgraph = inner | boundary

    reasons = []
    load_ids = case.load_bus_ids
    for b in sorted(boundary):
        if b not in load_ids:
            reasons.append(f"boundary bus {b} carries no load")

    return AttackSetValidation(
        attacked_buses=attacked,
        subgraph_buses=tuple(sorted(subgraph)),
        boundary_buses=tuple(sorted(boundary)),
        measurement_rows=measurement_support(dep, attacked),
        valid=not reasons,
        reasons=tuple(reasons),
    )


def _connected_subsets(adjacency: dict[int, frozenset[int]], max_size: int):
    """All connected vertex subsets of size 1..max_size, each exactly once.

    Grows each subset from its smallest admissible anchor, only ever adding
    vertices not excluded at the current branch, which yields every
    connected subset once without a global dedup pass.
    """
    nodes = sorted(adjacency)
    results = []

    def grow(current: set[int], frontier: set[int], banned: set[int]):
        if len(current) >= 1:
            results.append(tuple(sorted(current)))
        if len(current) == max_size:
            return
        candidates = sorted(frontier - banned)
        local_ban = set(banned)
        for v in candidates:
            grow(
                current | {v},
                (frontier | adjacency[v]) - current - {v},
                set(local_ban),
            )
            local_ban.add(v)

    for anchor in nodes:
        grow({anchor}, set(adjacency[anchor]), {n for n in nodes if n <= anchor})
    return results


def enumerate_attack_sets(
    case: GridCase, dep: DependencyMatrix, max_size: int
) -> list[AttackSetValidation]:
    """All connected attacked-state sets with 1 <= |I| <= *max_size* that pass
    :func:`validate_attack_set`, in lexicographic order of the sorted bus ids.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    adjacency = {b.id: case.neighbors(b.id) for b in case.buses}
    valid = []
    for subset in _connected_subsets(adjacency, max_size):
        check = validate_attack_set(case, dep, subset)
        if check.valid:
            valid.append(check)
    valid.sort(key=lambda v: v.attacked_buses)
    return valid
