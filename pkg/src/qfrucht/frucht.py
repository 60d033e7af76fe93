"""Graph combination constructions, coloured families, and classical Frucht graphs.

Combined graphs live on ``C(X) (x) C^L`` with the label as the outer index:
basis vector ``(label, x)`` sits at ``label * dim X + x``, so the quantum set
of the result is the block list of ``X`` repeated ``L`` times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autgroup import PermGroup, automorphism_group
from .fingroup import FiniteGroup
from .qgroup import QGroupData, QGroupError, cayley_graph
from .qspace import (DEFAULT_TOL, LinOp, QSet, QuantumGraph, degree_operators, make_quantum_graph,
                     projection_rank, spectral_projections)


class FruchtError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ClassicalGraph:
    adj: np.ndarray
    directed: bool = True

    def __post_init__(self):
        adj = np.array(self.adj, dtype=np.int64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise FruchtError(f"adjacency must be square, got {adj.shape}")
        if not np.isin(adj, (0, 1)).all():
            raise FruchtError("adjacency entries must be 0 or 1")
        if not self.directed and not np.array_equal(adj, adj.T):
            raise FruchtError("undirected graph needs a symmetric adjacency")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def degrees(self) -> np.ndarray:
        """Out-degrees (column sums, since ``adj[y, x] = 1`` encodes ``x -> y``)."""
        return self.adj.sum(axis=0)

    def in_degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1)

    def edges(self) -> set[tuple[int, int]]:
        ys, xs = np.nonzero(self.adj)
        if self.directed:
            return {(int(x), int(y)) for x, y in zip(xs, ys)}
        return {(int(min(x, y)), int(max(x, y))) for x, y in zip(xs, ys)}

    def to_json(self) -> dict:
        return {"n": self.n, "directed": self.directed, "adj": self.adj.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "ClassicalGraph":
        try:
            g = cls(np.asarray(doc["adj"]), bool(doc.get("directed", True)))
        except (KeyError, TypeError) as exc:
            raise FruchtError(f"malformed graph document: {exc}") from exc
        if "n" in doc and int(doc["n"]) != g.n:
            raise FruchtError("vertex count does not match adjacency size")
        return g

    def to_dot(self) -> str:
        kind, arrow = ("digraph", "->") if self.directed else ("graph", "--")
        lines = [f"{kind} G {{"]
        lines += [f"  {v};" for v in range(self.n)]
        lines += [f"  {a} {arrow} {b};" for a, b in sorted(self.edges())]
        lines.append("}")
        return "\n".join(lines)


def _undirected(n_vertices: int, edges) -> ClassicalGraph:
    adj = np.zeros((n_vertices, n_vertices), dtype=np.int64)
    for a, b in edges:
        adj[a, b] = adj[b, a] = 1
    return ClassicalGraph(adj, directed=False)


def aux_graph_H(n: int) -> ClassicalGraph:
    """``0 ~ i`` for ``i > n // 2``; ``i ~ j`` (both positive) iff ``i + j > n``."""
    if n < 1:
        raise FruchtError("n must be at least 1")
    edges = [(0, i) for i in range(n // 2 + 1, n + 1)]
    edges += [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if i + j > n]
    return _undirected(n + 1, edges)


def aux_graph_Htilde(n: int) -> ClassicalGraph:
    """The ``H`` rule on ``{0..2n}``: vertex 0 then has degree ``n``."""
    if n < 1:
        raise FruchtError("n must be at least 1")
    return aux_graph_H(2 * n)


def classical_cayley_digraph(group: FiniteGroup, subset) -> ClassicalGraph:
    """Edge ``h -> kh`` for every ``k`` in ``subset``."""
    n = group.order
    adj = np.zeros((n, n), dtype=np.int64)
    for k in set(int(s) for s in subset):
        adj[group.mul[k], np.arange(n)] = 1
    return ClassicalGraph(adj, directed=True)


def as_quantum_graph(graph: ClassicalGraph, tol: float = DEFAULT_TOL) -> QuantumGraph:
    return make_quantum_graph(LinOp(QSet((1,) * graph.n), graph.adj), tol)


# -- coloured family ---------------------------------------------------------
def block_projection_family(n: int) -> list[np.ndarray]:
    """``n^2`` rank-one projections spanning ``M_n``."""
    out = []
    eye = np.eye(n, dtype=complex)
    for i in range(n):
        out.append(np.outer(eye[i], eye[i]))
    for i in range(n):
        for j in range(i + 1, n):
            v = (eye[i] + eye[j]) / np.sqrt(2)
            out.append(np.outer(v, v.conj()))
    for i in range(n):
        for j in range(i + 1, n):
            # (E_ii - i E_ij + i E_ji + E_jj) / 2
            v = (eye[i] + 1j * eye[j]) / np.sqrt(2)
            out.append(np.outer(v, v.conj()))
    return out


@dataclass(frozen=True)
class Colour:
    block: int
    projection: np.ndarray
    graph: QuantumGraph
    degree: complex


def coloured_family(q: QGroupData, tol: float = DEFAULT_TOL) -> list[Colour]:
    """Rank-one projections spanning the complement of the counit block, with their Cayley graphs."""
    try:
        skip = q.counit_block
    except QGroupError as exc:
        raise FruchtError(f"cannot identify the counit block: {exc}") from exc
    space = q.space
    out = []
    for k, n in enumerate(space.block_sizes):
        if k == skip:
            continue
        for mat in block_projection_family(n):
            blocks = [np.zeros((m, m), dtype=complex) for m in space.block_sizes]
            blocks[k] = mat
            p = space.from_blocks(blocks)
            graph = cayley_graph(q, p, tol).graph
            if graph.regular_degree is None:
                raise FruchtError(f"Cayley graph of a block-{k} projection is not regular")
            out.append(Colour(k, p, graph, graph.regular_degree))
    span = np.linalg.matrix_rank(np.array([c.projection for c in out]), tol=1e-9) if out else 0
    if span != space.dim - 1:
        raise FruchtError(f"family spans dimension {span}, expected {space.dim - 1}")
    return out


# -- combination -------------------------------------------------------------
def _check_inputs(graphs: Sequence[QuantumGraph]) -> tuple[QSet, list[QuantumGraph]]:
    if not graphs:
        raise FruchtError("need at least one input graph")
    space = graphs[0].space
    for i, g in enumerate(graphs):
        if g.space != space:
            raise FruchtError(f"graph {i} lives on a different quantum set")
        if not g.flags.is_quantum_graph:
            raise FruchtError(f"graph {i} is not a quantum graph: {g.flags.residuals}")
        if not g.flags.loopless:
            raise FruchtError(f"graph {i} has loops")
        if g.regular_degree is None:
            raise FruchtError(f"graph {i} is not regular")
    order = sorted(range(len(graphs)), key=lambda i: (graphs[i].regular_degree.real, i))
    return space, [graphs[i] for i in order]


def _unit(size: int, a: int, b: int) -> np.ndarray:
    e = np.zeros((size, size))
    e[a, b] = 1
    return e


@dataclass(frozen=True)
class CombinedGraph:
    graph: QuantumGraph
    base: ClassicalGraph
    degrees: tuple[complex, ...]
    label_degrees: tuple[complex, ...]
    label_dim: int
    mode: str

    @property
    def collisions(self) -> list[list[int]]:
        """Labels sharing a degree value (the equal-degree case of the proofs)."""
        groups: dict = {}
        for lab, d in enumerate(self.label_degrees):
            groups.setdefault(round(d.real, 6), []).append(lab)
        return [v for v in groups.values() if len(v) > 1]

    def label_projection(self, label: int) -> LinOp:
        dim = self.graph.dim
        diag = np.zeros(dim)
        diag[label * self.label_dim:(label + 1) * self.label_dim] = 1
        return LinOp(self.graph.space, np.diag(diag))


def combine_directed(graphs: Sequence[QuantumGraph], tol: float = DEFAULT_TOL) -> CombinedGraph:
    """``A' = B (x) I + sum_i E_ii (x) A_i`` with ``B = H(n)``."""
    space, ordered = _check_inputs(graphs)
    n = len(ordered)
    base = aux_graph_H(n)
    mat = np.kron(base.adj, np.eye(space.dim))
    for i, g in enumerate(ordered, start=1):
        mat = mat + np.kron(_unit(n + 1, i, i), g.adjacency.matrix)
    new_space = QSet(space.block_sizes * (n + 1))
    degs = tuple(g.regular_degree for g in ordered)
    label_deg = (complex(math.ceil(n / 2)),) + tuple(d + i for i, d in enumerate(degs, start=1))
    return CombinedGraph(make_quantum_graph(LinOp(new_space, mat), tol), base, degs, label_deg, space.dim, "directed")


def combine_undirected(graphs: Sequence[QuantumGraph], tol: float = DEFAULT_TOL) -> CombinedGraph:
    """``A' = B (x) I + sum_i (E_{2i-1,2i} (x) A_i + E_{2i,2i-1} (x) A_i^*)`` with ``B = H~(n)``."""
    space, ordered = _check_inputs(graphs)
    n = len(ordered)
    base = aux_graph_Htilde(n)
    size = 2 * n + 1
    mat = np.kron(base.adj, np.eye(space.dim))
    for i, g in enumerate(ordered, start=1):
        a = g.adjacency
        mat = mat + np.kron(_unit(size, 2 * i - 1, 2 * i), a.matrix)
        mat = mat + np.kron(_unit(size, 2 * i, 2 * i - 1), a.adjoint().matrix)
    new_space = QSet(space.block_sizes * size)
    degs = tuple(g.regular_degree for g in ordered)
    label_deg = [complex(n)]
    for i, d in enumerate(degs, start=1):
        label_deg += [d + 2 * i - 1, d + 2 * i]
    return CombinedGraph(make_quantum_graph(LinOp(new_space, mat), tol), base, degs, tuple(label_deg),
                         space.dim, "undirected")


@dataclass(frozen=True)
class DegreeSpectrum:
    eigenvalues: tuple[complex, ...]
    ranks: tuple[int, ...]


def degree_spectrum(graph: QuantumGraph, cluster_tol: float = 1e-7) -> DegreeSpectrum:
    d_in = degree_operators(graph.adjacency).in_degree
    pairs = spectral_projections(d_in, cluster_tol)
    return DegreeSpectrum(tuple(v for v, _ in pairs), tuple(projection_rank(p) for _, p in pairs))


def refine_degree_classes(adj: LinOp, cluster_tol: float = 1e-7, max_rounds: int = 50) -> list[LinOp]:
    """Equitable refinement of the degree eigenprojections.

    Starting from the spectral projections of ``D_A``, each class ``Q_a`` is
    split along the spectrum of ``Q_a L_{A(Q_b eta)} Q_a``, the degree into
    class ``b``, until no class splits.
    """
    space = adj.space
    eta = space.unit
    classes = [p for _, p in spectral_projections(degree_operators(adj).in_degree, cluster_tol)]
    for _ in range(max_rounds):
        split = False
        for b in range(len(classes)):
            into_b = LinOp(space, space.left_mult(adj(classes[b](eta))))
            new = []
            for qa in classes:
                pieces = []
                for _, p in spectral_projections(qa @ into_b @ qa, cluster_tol):
                    r = p @ qa
                    if r.norm() > 0.5:
                        pieces.append(r)
                split = split or len(pieces) > 1
                new.extend(pieces)
            classes = new
        if not split:
            break
    return classes


# -- classical Frucht --------------------------------------------------------
@dataclass(frozen=True)
class ClassicalFruchtResult:
    graph: ClassicalGraph
    automorphisms: PermGroup
    verified: bool
    mode: str
    labels: int
    witness_ok: bool
    labels_preserved: bool

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "vertices": self.graph.n,
            "labels": self.labels,
            "aut_order": self.automorphisms.order,
            "generators": [list(g) for g in self.automorphisms.generators],
            "right_translations_ok": self.witness_ok,
            "labels_preserved": self.labels_preserved,
            "verified": self.verified,
        }


def right_translation(group: FiniteGroup, x: int, labels: int) -> np.ndarray:
    n = group.order
    return np.concatenate([lab * n + group.mul[:, x] for lab in range(labels)])


def classical_frucht(group: FiniteGroup, mode: str = "directed") -> ClassicalFruchtResult:
    if group.order < 2:
        raise FruchtError("the group needs at least two elements")
    colours = [as_quantum_graph(classical_cayley_digraph(group, [g])) for g in range(1, group.order)]
    if mode == "directed":
        combined = combine_directed(colours)
    elif mode == "undirected":
        combined = combine_undirected(colours)
    else:
        raise FruchtError(f"unknown mode {mode!r}")
    adj = np.rint(combined.graph.adjacency.matrix.real).astype(np.int64)
    graph = ClassicalGraph(adj, directed=(mode == "directed") and not np.array_equal(adj, adj.T))
    aut = automorphism_group(adj)
    labels = adj.shape[0] // group.order
    witness_ok = all(
        np.array_equal(adj[np.ix_(p, p)], adj)
        for p in (right_translation(group, x, labels) for x in range(group.order)))
    lab_of = np.arange(adj.shape[0]) // group.order
    preserved = all(np.array_equal(lab_of[np.array(g)], lab_of) for g in aut.generators)
    verified = aut.order == group.order and witness_ok and preserved
    return ClassicalFruchtResult(graph, aut, verified, mode, labels, witness_ok, preserved)


# -- quantum pipeline --------------------------------------------------------
@dataclass(frozen=True)
class PipelineReport:
    combined: CombinedGraph
    colours: list[Colour]
    spectrum: DegreeSpectrum
    rigidity: list[dict] = field(default_factory=list)

    @property
    def graph(self) -> QuantumGraph:
        return self.combined.graph

    def as_dict(self) -> dict:
        g = self.graph
        return {
            "colour_degrees": [d.real for d in self.combined.degrees],
            "colour_blocks": [c.block for c in self.colours],
            "family": "matrix units: E_ii, (E_ii+E_ij+E_ji+E_jj)/2, (E_ii-iE_ij+iE_ji+E_jj)/2 per block",
            "dimension": g.dim,
            "block_sizes": list(g.space.block_sizes),
            "flags": g.flags.as_dict(),
            "label_degrees": [d.real for d in self.combined.label_degrees],
            "degree_collisions": self.combined.collisions,
            "degree_spectrum": [{"eigenvalue": v.real, "rank": r}
                                for v, r in zip(self.spectrum.eigenvalues, self.spectrum.ranks)],
            "non_real_degrees": [i for i, d in enumerate(self.combined.degrees) if abs(d.imag) > 1e-9],
            "rigidity": self.rigidity,
        }


def quantum_frucht_pipeline(q: QGroupData, tol: float = DEFAULT_TOL) -> PipelineReport:
    colours = coloured_family(q, tol)
    combined = combine_undirected([c.graph for c in colours], tol)
    order = sorted(range(len(colours)), key=lambda i: (colours[i].degree.real, i))
    colours = [colours[i] for i in order]
    evidence = []
    if q.is_group_dual:
        from .qgroup import fourier_multiplier
        from .rigidity import rigidity_verdict

        for c in colours:
            mult = fourier_multiplier(q, c.projection)
            verdict = rigidity_verdict(q.group, mult)
            evidence.append({"block": c.block, "verdict": verdict.kind, "partition": verdict.partition})
    return PipelineReport(combined, colours, degree_spectrum(combined.graph), evidence)
