"""Finite quantum sets and the Schur-product operator calculus.

A finite quantum set is a multi-matrix algebra ``M_{n_1} + ... + M_{n_B}``
equipped with the tracial functional ``psi = sum_k n_k Tr_k``, the unique
trace for which the multiplication map ``m`` satisfies ``m m^* = id``.

Vectors of ``l^2(X)`` are stored as coefficient arrays against the
*unnormalized* matrix units ``e^k_{ij}`` (block-major, then row-major). The
Gram matrix of that basis is diagonal with entry ``n_k`` on block ``k``, so
every adjoint in this package is the weighted one, ``W^{-1} A^H W``, never
the raw conjugate transpose.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

DEFAULT_TOL = 1e-9
DEFAULT_CLUSTER_TOL = 1e-7


class QSpaceError(ValueError):
    """Invalid input to a quantum-set operation."""


@dataclass(frozen=True)
class QSet:
    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if not sizes:
            raise QSpaceError("a quantum set needs at least one block")
        if any(n < 1 for n in sizes):
            raise QSpaceError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @cached_property
    def dim(self) -> int:
        return sum(n * n for n in self.block_sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.block_sizes:
            out.append(acc)
            acc += n * n
        return tuple(out)

    @cached_property
    def psi_weights(self) -> tuple[int, ...]:
        return self.block_sizes

    @cached_property
    def weights(self) -> np.ndarray:
        """Diagonal of the Gram matrix: ``<e^k_ij, e^k_ij> = n_k``."""
        w = np.concatenate([np.full(n * n, float(n)) for n in self.block_sizes])
        w.setflags(write=False)
        return w

    @cached_property
    def transpose_perm(self) -> np.ndarray:
        """Index map ``e^k_{ij} -> e^k_{ji}`` (the basis part of ``*``)."""
        perm = np.empty(self.dim, dtype=int)
        for off, n in zip(self.offsets, self.block_sizes):
            idx = np.arange(n * n).reshape(n, n)
            perm[off:off + n * n] = off + idx.T.ravel()
        perm.setflags(write=False)
        return perm

    @cached_property
    def unit(self) -> np.ndarray:
        """The unit ``eta`` as a vector."""
        return self.from_blocks([np.eye(n, dtype=complex) for n in self.block_sizes])

    @cached_property
    def psi_vector(self) -> np.ndarray:
        """Row vector ``v`` with ``psi(x) = v @ x``."""
        return self.from_blocks([n * np.eye(n, dtype=complex) for n in self.block_sizes])

    @property
    def is_classical(self) -> bool:
        return all(n == 1 for n in self.block_sizes)

    def label(self, index: int) -> tuple[int, int, int]:
        """``(block, row, col)`` of a basis index."""
        for k, (off, n) in enumerate(zip(self.offsets, self.block_sizes)):
            if index < off + n * n:
                i, j = divmod(index - off, n)
                return k, i, j
        raise IndexError(index)

    def index(self, block: int, i: int, j: int) -> int:
        n = self.block_sizes[block]
        return self.offsets[block] + i * n + j

    # -- algebra structure ------------------------------------------------
    def to_blocks(self, x: np.ndarray) -> list[np.ndarray]:
        """Split ``x[..., dim]`` into matrices ``[..., n_k, n_k]``."""
        x = np.asarray(x)
        lead = x.shape[:-1]
        return [x[..., off:off + n * n].reshape(*lead, n, n)
                for off, n in zip(self.offsets, self.block_sizes)]

    def from_blocks(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        lead = np.shape(blocks[0])[:-2]
        return np.concatenate([np.asarray(b, dtype=complex).reshape(*lead, -1) for b in blocks], axis=-1)

    def multiply(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.from_blocks([a @ b for a, b in zip(self.to_blocks(x), self.to_blocks(y))])

    def star(self, x: np.ndarray) -> np.ndarray:
        return np.conj(np.asarray(x)[..., self.transpose_perm])

    def psi(self, x: np.ndarray) -> complex:
        return np.asarray(x) @ self.psi_vector

    def inner(self, x: np.ndarray, y: np.ndarray) -> complex:
        """``<x, y> = psi(x^* y)``, antilinear in ``x``."""
        return np.sum(np.conj(x) * self.weights * y, axis=-1)

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(np.real(self.inner(x, x))))

    def left_mult(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ``y -> x y``."""
        return np.stack([self.multiply(x, e) for e in np.eye(self.dim, dtype=complex)], axis=1)

    def right_mult(self, x: np.ndarray) -> np.ndarray:
        return np.stack([self.multiply(e, x) for e in np.eye(self.dim, dtype=complex)], axis=1)

    def multiplication_matrix(self) -> sparse.csr_matrix:
        """Explicit ``m: l^2(X) (x) l^2(X) -> l^2(X)`` in the product basis.

        Row ``t``, column ``r*dim + s`` is 1 when ``e_r e_s = e_t``.
        """
        rows, cols = [], []
        for k, (off, n) in enumerate(zip(self.offsets, self.block_sizes)):
            for i in range(n):
                for j in range(n):
                    for q in range(n):
                        rows.append(off + i * n + q)
                        cols.append((off + i * n + j) * self.dim + off + j * n + q)
        data = np.ones(len(rows), dtype=complex)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.dim, self.dim * self.dim))

    def tensor(self, other: "QSet") -> "QSet":
        """``C(self) (x) C(other)`` with ``other`` as the outer (slow) index.

        Only tensoring with a classical set keeps the kron basis order equal
        to the block-major order, which is the case used by the graph
        combination constructions.
        """
        if not other.is_classical:
            raise QSpaceError("tensor() keeps block-major order only for a classical outer factor")
        return QSet(self.block_sizes * len(other.block_sizes))


def make_quantum_set(block_sizes: Sequence[int]) -> QSet:
    sizes = list(block_sizes)
    if not sizes:
        raise QSpaceError("block_sizes must be nonempty")
    return QSet(tuple(sizes))


@dataclass(frozen=True, eq=False)
class LinOp:
    """A linear map between quantum sets, stored in the matrix-unit bases."""

    space: QSet
    matrix: np.ndarray
    codomain: QSet | None = field(default=None)

    def __post_init__(self):
        cod = self.codomain or self.space
        object.__setattr__(self, "codomain", cod)
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (cod.dim, self.space.dim):
            raise QSpaceError(f"matrix shape {mat.shape} does not match ({cod.dim}, {self.space.dim})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def is_endo(self) -> bool:
        return self.codomain == self.space

    def __call__(self, x):
        return self.matrix @ x

    def __matmul__(self, other: "LinOp") -> "LinOp":
        if other.codomain != self.space:
            raise QSpaceError("composition of mismatched spaces")
        return LinOp(other.space, self.matrix @ other.matrix, self.codomain)

    def _check_same(self, other: "LinOp"):
        if other.space != self.space or other.codomain != self.codomain:
            raise QSpaceError("operators live on different spaces")

    def __add__(self, other: "LinOp") -> "LinOp":
        self._check_same(other)
        return LinOp(self.space, self.matrix + other.matrix, self.codomain)

    def __sub__(self, other: "LinOp") -> "LinOp":
        self._check_same(other)
        return LinOp(self.space, self.matrix - other.matrix, self.codomain)

    def __mul__(self, c) -> "LinOp":
        return LinOp(self.space, c * self.matrix, self.codomain)

    __rmul__ = __mul__

    def adjoint(self) -> "LinOp":
        wd, wc = self.space.weights, self.codomain.weights
        mat = (self.matrix.conj().T * wc[None, :]) / wd[:, None]
        return LinOp(self.codomain, mat, self.space)

    def orthonormal_matrix(self) -> np.ndarray:
        """The same map written in orthonormal bases."""
        return np.sqrt(self.codomain.weights)[:, None] * self.matrix / np.sqrt(self.space.weights)[None, :]

    def norm(self) -> float:
        """Hilbert-Schmidt norm (basis independent)."""
        return float(np.linalg.norm(self.orthonormal_matrix()))

    @classmethod
    def identity(cls, space: QSet) -> "LinOp":
        return cls(space, np.eye(space.dim))

    @classmethod
    def zero(cls, space: QSet) -> "LinOp":
        return cls(space, np.zeros((space.dim, space.dim)))


def _require_endo(*ops: LinOp):
    space = ops[0].space
    for op in ops:
        if not op.is_endo or op.space != space:
            raise QSpaceError("operators must be endomorphisms of one quantum set")


def schur_product(a: LinOp, b: LinOp) -> LinOp:
    """``A . B = m (A (x) B) m^*``, evaluated block pair by block pair.

    With ``m^* e^k_{iq} = (1/n_k) sum_j e^k_{ij} (x) e^k_{jq}`` the entry is
    ``(A.B)[(l,a,d), (k,i,q)] = (1/n_k) sum_{b,j} A[(l,a,b),(k,i,j)] B[(l,b,d),(k,j,q)]``.
    """
    _require_endo(a, b)
    space = a.space
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for k, (ok, nk) in enumerate(zip(space.offsets, space.block_sizes)):
        cols = slice(ok, ok + nk * nk)
        for ol, nl in zip(space.offsets, space.block_sizes):
            rows = slice(ol, ol + nl * nl)
            asub = a.matrix[rows, cols].reshape(nl, nl, nk, nk)
            bsub = b.matrix[rows, cols].reshape(nl, nl, nk, nk)
            res = np.einsum("abij,bdjq->adiq", asub, bsub, optimize=True) / nk
            out[rows, cols] = res.reshape(nl * nl, nk * nk)
    return LinOp(space, out)


def conjugate_op(a: LinOp) -> LinOp:
    """``A-bar f = (A(f^*))^*``."""
    _require_endo(a)
    p = a.space.transpose_perm
    return LinOp(a.space, np.conj(a.matrix)[np.ix_(p, p)])


def complete_graph(space: QSet) -> LinOp:
    """``A f = psi(f) eta - f``, the complete quantum graph without loops."""
    return LinOp(space, np.outer(space.unit, space.psi_vector) - np.eye(space.dim))


def _rel(x: float, scale: float) -> float:
    return x / max(1.0, scale)


@dataclass(frozen=True)
class GraphFlags:
    schur_idempotent: bool
    real: bool
    undirected: bool
    loopless: bool
    residuals: dict
    tol: float

    @property
    def is_quantum_graph(self) -> bool:
        return self.schur_idempotent and self.real

    def as_dict(self) -> dict:
        return {
            "schur_idempotent": self.schur_idempotent,
            "real": self.real,
            "undirected": self.undirected,
            "loopless": self.loopless,
            "residuals": dict(self.residuals),
            "tol": self.tol,
        }


def verify_quantum_graph(a: LinOp, tol: float = DEFAULT_TOL) -> GraphFlags:
    """Check the quantum adjacency axioms; failures are reported, not raised."""
    _require_endo(a)
    scale = a.norm()
    res = {
        "schur_idempotent": _rel((schur_product(a, a) - a).norm(), scale),
        "real": _rel((a - conjugate_op(a)).norm(), scale),
        "undirected": _rel((a - a.adjoint()).norm(), scale),
        "loopless": _rel(schur_product(a, LinOp.identity(a.space)).norm(), scale),
    }
    return GraphFlags(
        schur_idempotent=res["schur_idempotent"] <= tol,
        real=res["real"] <= tol,
        undirected=res["undirected"] <= tol,
        loopless=res["loopless"] <= tol,
        residuals=res,
        tol=tol,
    )


@dataclass(frozen=True)
class DegreeReport:
    in_degree: LinOp
    out_degree: LinOp
    is_regular: bool
    degree: complex | None
    residual: float


def degree_operators(a: LinOp, tol: float = DEFAULT_TOL) -> DegreeReport:
    """``D_A = m(A eta (x) I)`` and ``D^A = m(A^* eta (x) I)``."""
    _require_endo(a)
    space = a.space
    eta = space.unit
    a_eta = a(eta)
    astar_eta = a.adjoint()(eta)
    d_in = LinOp(space, space.left_mult(a_eta))
    d_out = LinOp(space, space.left_mult(astar_eta))
    d = space.inner(eta, a_eta) / space.inner(eta, eta)
    ident = LinOp.identity(space)
    scale = max(d_in.norm(), d_out.norm())
    residual = max(_rel((d_in - d * ident).norm(), scale), _rel((d_out - d * ident).norm(), scale))
    regular = residual <= tol
    return DegreeReport(d_in, d_out, regular, complex(d) if regular else None, residual)


@dataclass(frozen=True)
class QuantumGraph:
    space: QSet
    adjacency: LinOp
    flags: GraphFlags
    regular_degree: complex | None

    @property
    def dim(self) -> int:
        return self.space.dim


def make_quantum_graph(a: LinOp, tol: float = DEFAULT_TOL) -> QuantumGraph:
    """Wrap an adjacency operator; flags are always derived, never supplied."""
    flags = verify_quantum_graph(a, tol)
    deg = degree_operators(a, tol)
    return QuantumGraph(a.space, a, flags, deg.degree)


def cluster_values(values: np.ndarray, tol: float) -> list[list[int]]:
    """Union-find clustering of complex values by ``|x - y| <= tol``.

    Clusters are returned ordered by their smallest ``(real, imag)`` member;
    members keep ascending index order.
    """
    values = np.asarray(values, dtype=complex).ravel()
    if values.size == 0:
        return []
    close = np.abs(values[:, None] - values[None, :]) <= tol
    _, labels = connected_components(sparse.csr_matrix(close), directed=False)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return sorted(groups.values(), key=lambda g: min((values[i].real, values[i].imag) for i in g))


def spectral_projections(n: LinOp, cluster_tol: float = DEFAULT_CLUSTER_TOL,
                         tol: float = DEFAULT_TOL) -> list[tuple[complex, LinOp]]:
    """Eigenvalue clusters of a normal operator with their spectral projections."""
    from scipy.linalg import schur

    _require_endo(n)
    space = n.space
    scale = n.norm()
    comm = (n @ n.adjoint() - n.adjoint() @ n).norm()
    if comm > tol * max(1.0, scale * scale):
        raise QSpaceError(f"operator is not normal (commutator norm {comm:.3e})")
    mat = n.orthonormal_matrix()
    tri, q = schur(mat, output="complex")
    eig = np.diag(tri)
    sw = np.sqrt(space.weights)
    out = []
    for cluster in cluster_values(eig, cluster_tol):
        v = q[:, cluster]
        p_orth = v @ v.conj().T
        p = p_orth / sw[:, None] * sw[None, :]
        out.append((complex(np.mean(eig[cluster])), LinOp(space, p)))
    return out


def projection_rank(p: LinOp) -> int:
    return int(round(np.real(np.trace(p.matrix))))


# -- JSON ---------------------------------------------------------------------
def operator_to_json(op: LinOp) -> dict:
    doc = {
        "space": {"blocks": list(op.space.block_sizes)},
        "re": op.matrix.real.tolist(),
        "im": op.matrix.imag.tolist(),
    }
    if op.codomain != op.space:
        doc["codomain"] = {"blocks": list(op.codomain.block_sizes)}
    return doc


def operator_from_json(doc: dict) -> LinOp:
    try:
        space = QSet(tuple(doc["space"]["blocks"]))
        cod = QSet(tuple(doc["codomain"]["blocks"])) if "codomain" in doc else None
        mat = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise QSpaceError(f"malformed operator document: {exc}") from exc
    return LinOp(space, mat, cod)


def dumps_operator(op: LinOp) -> str:
    # json.dumps writes shortest round-trip float reprs, so values survive exactly.
    return json.dumps(operator_to_json(op))
