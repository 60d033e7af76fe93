"""Automorphism groups of small classical (di)graphs.

Colour refinement plus individualization, searched along a fixed base. The
group order is the product of the basic orbit lengths of the stabilizer
chain, so no enumeration of the group is needed.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

VERTEX_CAP = 512
CLOSURE_CAP = 1_000_000


class AutError(ValueError):
    pass


@dataclass(frozen=True)
class PermGroup:
    degree: int
    generators: tuple[tuple[int, ...], ...]
    order: int

    def closure_order(self, cap: int = CLOSURE_CAP) -> int:
        """Order by explicit closure; a cross-check for :attr:`order`."""
        ident = tuple(range(self.degree))
        seen = {ident}
        queue = deque([ident])
        gens = [np.array(g) for g in self.generators]
        while queue:
            x = np.array(queue.popleft())
            for g in gens:
                y = tuple(g[x])
                if y not in seen:
                    if len(seen) >= cap:
                        raise AutError(f"closure exceeds {cap} elements")
                    seen.add(y)
                    queue.append(y)
        return len(seen)


def _refine_pair(adj: np.ndarray, cols: list[np.ndarray]) -> list[np.ndarray] | None:
    """Jointly refine colourings of copies of one graph.

    Colour names come from the sorted union of signatures, so equal names
    mean equal cells across copies. Returns ``None`` when the copies' cell
    sizes diverge.
    """
    n = adj.shape[0]
    adj_t = adj.T
    current = [c.copy() for c in cols]
    ncol = None
    while True:
        k = int(max(c.max() for c in current)) + 1
        sigs = []
        for c in current:
            onehot = np.zeros((n, k), dtype=np.int64)
            onehot[np.arange(n), c] = 1
            # adj[y, x] = 1 for an edge x -> y
            out_counts = adj_t @ onehot
            in_counts = adj @ onehot
            sigs.append(np.concatenate([c[:, None], out_counts, in_counts], axis=1))
        _, inv = np.unique(np.concatenate(sigs, axis=0), axis=0, return_inverse=True)
        inv = inv.ravel()
        new = [inv[i * n:(i + 1) * n] for i in range(len(current))]
        ref = np.bincount(new[0], minlength=inv.max() + 1)
        for c in new[1:]:
            if not np.array_equal(np.bincount(c, minlength=inv.max() + 1), ref):
                return None
        count = int(np.count_nonzero(ref))
        if count == ncol:
            return new
        ncol = count
        current = new


def _individualize(col: np.ndarray, v: int) -> np.ndarray:
    out = 2 * col + 1
    out[v] = 2 * col[v]
    return out


def _target_cell(col: np.ndarray) -> int | None:
    counts = np.bincount(col)
    nonsingle = np.flatnonzero(counts > 1)
    if nonsingle.size == 0:
        return None
    sizes = counts[nonsingle]
    return int(nonsingle[np.argmin(sizes)])


def _is_automorphism(adj: np.ndarray, perm: np.ndarray) -> bool:
    return bool(np.array_equal(adj[np.ix_(perm, perm)], adj))


def _extend(adj: np.ndarray, col1: np.ndarray, col2: np.ndarray) -> np.ndarray | None:
    cell = _target_cell(col1)
    if cell is None:
        perm = np.empty(adj.shape[0], dtype=int)
        perm[np.argsort(col1)] = np.argsort(col2)
        return perm if _is_automorphism(adj, perm) else None
    b = int(np.flatnonzero(col1 == cell)[0])
    for w in np.flatnonzero(col2 == cell):
        pair = _refine_pair(adj, [_individualize(col1, b), _individualize(col2, int(w))])
        if pair is None:
            continue
        found = _extend(adj, pair[0], pair[1])
        if found is not None:
            return found
    return None


def _orbit(start: int, gens: Sequence[np.ndarray]) -> set[int]:
    orb = {start}
    queue = [start]
    while queue:
        x = queue.pop()
        for g in gens:
            y = int(g[x])
            if y not in orb:
                orb.add(y)
                queue.append(y)
    return orb


def automorphism_group(adj, initial_colours: Sequence[int] | None = None,
                       vertex_cap: int = VERTEX_CAP) -> PermGroup:
    """Colour-preserving automorphisms of the digraph ``adj`` (``adj[y, x]`` for ``x -> y``)."""
    adj = np.asarray(adj, dtype=np.int64)
    n = adj.shape[0]
    if n > vertex_cap:
        raise AutError(f"{n} vertices exceeds the cap of {vertex_cap}")
    if n == 0:
        return PermGroup(0, (), 1)
    col0 = np.zeros(n, dtype=np.int64) if initial_colours is None else np.unique(
        np.asarray(initial_colours), return_inverse=True)[1].ravel()
    root = _refine_pair(adj, [col0])[0]

    # leftmost path: base points and the partitions before each is individualized
    base, parts = [], []
    col = root
    while (cell := _target_cell(col)) is not None:
        b = int(np.flatnonzero(col == cell)[0])
        base.append(b)
        parts.append(col)
        col = _refine_pair(adj, [_individualize(col, b)])[0]

    gens_by_level: list[list[np.ndarray]] = [[] for _ in base]
    order = 1
    for level in range(len(base) - 1, -1, -1):
        b, part = base[level], parts[level]
        known = [g for lv in range(level, len(base)) for g in gens_by_level[lv]]
        orb = _orbit(b, known)
        for v in np.flatnonzero(part == part[b]):
            v = int(v)
            if v in orb:
                continue
            pair = _refine_pair(adj, [_individualize(part, b), _individualize(part, v)])
            if pair is None:
                continue
            perm = _extend(adj, pair[0], pair[1])
            if perm is None:
                continue
            gens_by_level[level].append(perm)
            known.append(perm)
            orb = _orbit(b, known)
        order *= len(orb)
    gens = tuple(tuple(int(x) for x in g) for lv in gens_by_level for g in lv)
    return PermGroup(n, gens, order)
