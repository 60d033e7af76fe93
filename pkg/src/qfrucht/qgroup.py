"""Finite quantum groups: duals of finite groups, function algebras, convolution
and quantum Cayley graphs.

Elements of ``C(G)`` are vectors in the matrix-unit basis of ``space``.
Elements of ``C(G) (x) C(G)`` are ``dim x dim`` arrays ``X[r, s]``, the
coefficient of ``e_r (x) e_s``; flattened, that is the Kronecker order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .fingroup import FiniteGroup, Irrep, trivial_index
from .qspace import DEFAULT_TOL, LinOp, QSet, QuantumGraph, make_quantum_graph

PROJECTION_TOL = 1e-8
LEVEL_TOL = 1e-7


class QGroupError(ValueError):
    """Invalid quantum group data or an input that is not a projection."""


# -- tensor algebra ----------------------------------------------------------
def tensor_multiply(space: QSet, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product in ``C(X) (x) C(X)``; leading axes broadcast."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
    lead = x.shape[:-2]
    out = np.zeros(x.shape, dtype=complex)
    for ok, nk in zip(space.offsets, space.block_sizes):
        rk = slice(ok, ok + nk * nk)
        for ol, nl in zip(space.offsets, space.block_sizes):
            rl = slice(ol, ol + nl * nl)

            def as_mat(z):
                z = z[..., rk, rl].reshape(*lead, nk, nk, nl, nl)
                return np.swapaxes(z, -3, -2).reshape(*lead, nk * nl, nk * nl)

            prod = (as_mat(x) @ as_mat(y)).reshape(*lead, nk, nl, nk, nl)
            out[..., rk, rl] = np.swapaxes(prod, -3, -2).reshape(*lead, nk * nk, nl * nl)
    return out


def tensor_star(space: QSet, x: np.ndarray) -> np.ndarray:
    p = space.transpose_perm
    return np.conj(np.asarray(x)[..., p[:, None], p[None, :]])


def structure_constants(space: QSet) -> np.ndarray:
    """``C[t, p, q]`` with ``e_p e_q = sum_t C[t, p, q] e_t``."""
    m = space.multiplication_matrix().toarray().real
    return m.reshape(space.dim, space.dim, space.dim)


# -- quantum groups ----------------------------------------------------------
@dataclass(frozen=True, eq=False)
class QGroupData:
    space: QSet
    delta: np.ndarray  # (dim, dim, dim): delta[i, j, r] = coefficient of e_i (x) e_j in Delta(e_r)
    counit: np.ndarray  # row vector, eps(x) = counit @ x
    antipode: np.ndarray  # (dim, dim)
    kind: str = "raw"
    group: FiniteGroup | None = None
    irreps: tuple[Irrep, ...] | None = None
    fourier: np.ndarray | None = None  # columns: lambda_g in block coordinates

    def __post_init__(self):
        d = self.space.dim
        delta = np.asarray(self.delta, dtype=complex)
        if delta.shape != (d, d, d):
            raise QGroupError(f"coproduct must have shape {(d, d, d)}, got {delta.shape}")
        counit = np.asarray(self.counit, dtype=complex)
        antipode = np.asarray(self.antipode, dtype=complex)
        if counit.shape != (d,) or antipode.shape != (d, d):
            raise QGroupError("counit or antipode has the wrong shape")
        for name, arr in (("delta", delta), ("counit", counit), ("antipode", antipode)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.space.dim

    def coproduct(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("ijr,...r->...ij", self.delta, x)

    @cached_property
    def delta_adjoint(self) -> np.ndarray:
        """``Delta^*`` as a ``(dim, dim*dim)`` matrix in the weighted inner products."""
        w = self.space.weights
        flat = self.delta.reshape(self.dim * self.dim, self.dim)
        return (flat.conj().T * np.kron(w, w)[None, :]) / w[:, None]

    def convolve(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``x * y = Delta^*(x (x) y)``."""
        return self.delta_adjoint @ np.kron(x, y)

    def convolution_operator(self, p: np.ndarray) -> np.ndarray:
        """Matrix of ``x -> p * x``."""
        d = self.dim
        return np.einsum("ris,i->rs", self.delta_adjoint.reshape(d, d, d), p)

    @property
    def haar(self) -> np.ndarray:
        return self.space.psi_vector

    @property
    def is_group_dual(self) -> bool:
        return self.kind == "dual_of_group"

    @cached_property
    def fourier_inverse(self) -> np.ndarray:
        if self.fourier is None:
            raise QGroupError("no lambda basis for this quantum group")
        return np.linalg.inv(self.fourier)

    def from_lambda(self, coeffs: np.ndarray) -> np.ndarray:
        if self.fourier is None:
            raise QGroupError("no lambda basis for this quantum group")
        return self.fourier @ np.asarray(coeffs, dtype=complex)

    def to_lambda(self, x: np.ndarray) -> np.ndarray:
        return self.fourier_inverse @ np.asarray(x, dtype=complex)

    def lambda_vector(self, g: int) -> np.ndarray:
        return self.fourier[:, g]

    @cached_property
    def counit_block(self) -> int:
        """Index of the one-dimensional block that supports the counit."""
        for k, (off, n) in enumerate(zip(self.space.offsets, self.space.block_sizes)):
            if n != 1:
                continue
            e = np.zeros(self.dim)
            e[off] = 1
            if abs(self.counit[off] - 1) < 1e-9 and np.abs(self.counit - e).max() < 1e-9:
                return k
        raise QGroupError("counit is not supported on a single one-dimensional block")

    @cached_property
    def counit_projection(self) -> np.ndarray:
        """``P_eps``: the minimal central projection with ``eps(P_eps) = 1``."""
        k = self.counit_block
        p = np.zeros(self.dim, dtype=complex)
        p[self.space.offsets[k]] = 1
        return p


def fourier_matrix(irreps: Sequence[Irrep]) -> np.ndarray:
    return np.concatenate([r.matrices.reshape(r.order, -1).T for r in irreps], axis=0)


def dual_group(group: FiniteGroup, irreps: Sequence[Irrep]) -> QGroupData:
    """``C(Gamma-hat) = C[Gamma]`` realized blockwise by ``lambda_g -> (+) pi(g)``."""
    n = group.order
    if sum(r.dim ** 2 for r in irreps) != n or any(r.order != n for r in irreps):
        raise QGroupError("irrep set is incomplete: sum of squared dimensions differs from the group order")
    space = QSet(tuple(r.dim for r in irreps))
    f = fourier_matrix(irreps)
    finv = np.linalg.inv(f)
    delta = np.einsum("ig,jg,gr->ijr", f, f, finv, optimize=True)
    ti = trivial_index(irreps)
    counit = np.zeros(space.dim, dtype=complex)
    counit[space.offsets[ti]] = 1
    antipode = f[:, group.inverse] @ finv
    return QGroupData(space, delta, counit, antipode, "dual_of_group", group, tuple(irreps), f)


def function_algebra(group: FiniteGroup) -> QGroupData:
    """``C(Gamma)`` with counting measure; ``Delta f(g, h) = f(gh)``."""
    n = group.order
    space = QSet((1,) * n)
    delta = np.zeros((n, n, n))
    g_idx, h_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    delta[g_idx, h_idx, group.mul] = 1
    counit = np.zeros(n)
    counit[0] = 1
    antipode = np.zeros((n, n))
    antipode[group.inverse, np.arange(n)] = 1
    return QGroupData(space, delta, counit, antipode, "function_algebra", group)


def raw_quantum_group(block_sizes: Sequence[int], delta, counit, antipode) -> QGroupData:
    return QGroupData(QSet(tuple(block_sizes)), delta, counit, antipode, "raw")


@dataclass(frozen=True)
class HopfReport:
    residuals: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.residuals.items() if v > self.tol]

    def as_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "residuals": dict(self.residuals)}


def verify_hopf(q: QGroupData, tol: float = DEFAULT_TOL) -> HopfReport:
    """Residual (max abs entry) of every Hopf *-algebra axiom."""
    space, d = q.space, q.dim
    dl = q.delta
    eye = np.eye(d)
    eta, psi = space.unit, space.psi_vector
    res = {}
    res["unital"] = np.abs(q.coproduct(eta) - np.outer(eta, eta)).max()

    basis_images = np.moveaxis(dl, 2, 0)  # (r, i, j)
    c = structure_constants(space)
    mult = 0.0
    for r in range(d):
        lhs = np.einsum("ijt,ts->sij", dl, c[:, r, :])  # Delta(e_r e_s) for all s
        rhs = tensor_multiply(space, basis_images[r][None], basis_images)
        mult = max(mult, np.abs(lhs - rhs).max())
    res["multiplicative"] = mult
    star_imgs = np.moveaxis(dl[:, :, space.transpose_perm], 2, 0)
    res["star"] = np.abs(tensor_star(space, basis_images) - star_imgs).max()

    left = np.einsum("abm,mcr->abcr", dl, dl, optimize=True)
    right = np.einsum("bcm,amr->abcr", dl, dl, optimize=True)
    res["coassociative"] = np.abs(left - right).max()
    res["counit_left"] = np.abs(np.einsum("i,ijr->jr", q.counit, dl) - eye).max()
    res["counit_right"] = np.abs(np.einsum("j,ijr->ir", q.counit, dl) - eye).max()

    s = q.antipode
    eta_eps = np.outer(eta, q.counit)
    anti_l = np.einsum("ijr,pi,tpj->tr", dl, s, c, optimize=True)
    anti_r = np.einsum("ijr,pj,tip->tr", dl, s, c, optimize=True)
    res["antipode_left"] = np.abs(anti_l - eta_eps).max()
    res["antipode_right"] = np.abs(anti_r - eta_eps).max()

    haar_ref = np.outer(eta, psi)
    res["haar_left"] = np.abs(np.einsum("i,ijr->jr", psi, dl) - haar_ref).max()
    res["haar_right"] = np.abs(np.einsum("j,ijr->ir", psi, dl) - haar_ref).max()
    return HopfReport({k: float(v) for k, v in res.items()}, tol)


# -- Cayley graphs -----------------------------------------------------------
def projection_residuals(space: QSet, p: np.ndarray) -> tuple[float, float]:
    p = np.asarray(p, dtype=complex)
    scale = max(1.0, space.norm(p))
    idem = space.norm(space.multiply(p, p) - p) / scale
    sa = space.norm(space.star(p) - p) / scale
    return idem, sa


@dataclass(frozen=True)
class CayleyGraph:
    quantum_group: QGroupData
    projection: np.ndarray
    graph: QuantumGraph
    counit_value: complex
    antipode_residual: float
    tol: float

    @property
    def adjacency(self) -> LinOp:
        return self.graph.adjacency

    @property
    def loopless_by_counit(self) -> bool:
        return abs(self.counit_value) <= self.tol

    @property
    def symmetric_projection(self) -> bool:
        return self.antipode_residual <= self.tol

    @property
    def undirected_disagreement(self) -> bool:
        """True when ``S(P) = P`` and ``A = A^*`` disagree."""
        return self.symmetric_projection != self.graph.flags.undirected


def cayley_graph(q: QGroupData, p: np.ndarray, tol: float = DEFAULT_TOL,
                 projection_tol: float = PROJECTION_TOL) -> CayleyGraph:
    """The quantum Cayley graph ``A x = P * x``."""
    p = np.asarray(p, dtype=complex)
    idem, sa = projection_residuals(q.space, p)
    if idem > projection_tol or sa > projection_tol:
        raise QGroupError(
            f"not a projection: |P P - P| = {idem:.3e}, |P* - P| = {sa:.3e} (tolerance {projection_tol:.1e})")
    adj = LinOp(q.space, q.convolution_operator(p))
    graph = make_quantum_graph(adj, tol)
    scale = max(1.0, q.space.norm(p))
    anti = q.space.norm(q.antipode @ p - p) / scale
    return CayleyGraph(q, p, graph, complex(q.counit @ p), float(anti), tol)


# -- multipliers -------------------------------------------------------------
def tolerance_blocks(values: np.ndarray, tol: float, scale: float | None = None) -> list[list[int]]:
    """Classes of the tolerance closure of ``|x - y| <= tol * scale``.

    ``scale`` defaults to ``max |values|`` so the partition is invariant under
    rescaling. Blocks are ordered by smallest member.
    """
    values = np.asarray(values, dtype=complex)
    if scale is None:
        scale = float(np.abs(values).max()) if values.size else 0.0
    if scale == 0.0:
        return [list(range(values.size))] if values.size else []
    close = np.abs(values[:, None] - values[None, :]) <= tol * scale
    ncomp, labels = connected_components(sparse.csr_matrix(close), directed=False)
    blocks: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(int(lab), []).append(i)
    return sorted(blocks.values(), key=min)


@dataclass(frozen=True, eq=False)
class Multiplier:
    group: FiniteGroup
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.group.order,):
            raise QGroupError(f"multiplier needs {self.group.order} values, got shape {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __getitem__(self, g: int) -> complex:
        return complex(self.values[g])

    def levels(self, tol: float = LEVEL_TOL) -> list[list[int]]:
        return tolerance_blocks(self.values, tol)

    def scaled(self, c: complex) -> "Multiplier":
        return Multiplier(self.group, c * self.values)


def fourier_multiplier(q: QGroupData, p: np.ndarray, basis: str = "block",
                       tol: float = DEFAULT_TOL) -> Multiplier:
    """``T(g) = c_g`` for ``P = sum_g c_g lambda_g``; checks ``A lambda_g = N T(g) lambda_g``."""
    if not q.is_group_dual:
        raise QGroupError("Fourier multipliers are defined for duals of finite groups")
    p = np.asarray(p, dtype=complex)
    coeffs = q.to_lambda(p) if basis == "block" else p
    block = q.from_lambda(coeffs)
    n = q.group.order
    a = q.convolution_operator(block)
    f = q.fourier
    resid = np.abs(a @ f - f * (n * coeffs)[None, :]).max() / max(1.0, np.abs(a).max())
    if resid > max(tol, 1e-8):
        raise QGroupError(f"Cayley adjacency is not diagonal in the lambda basis (residual {resid:.3e})")
    return Multiplier(q.group, coeffs)


def inv_fourier_rank_one(rep: Irrep, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Lambda-coefficients of the element equal to ``|xi><eta|`` in ``rep``'s block."""
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    if np.linalg.norm(xi) == 0 or np.linalg.norm(eta) == 0:
        raise QGroupError("rank-one data needs nonzero vectors")
    n_elems = rep.order
    # <pi(g) eta, xi>, antilinear in the first slot
    return (rep.dim / n_elems) * np.einsum("gij,j,i->g", rep.matrices.conj(), eta.conj(), xi)


def central_projection(irreps: Sequence[Irrep], subset) -> np.ndarray:
    """Lambda-coefficients of ``P_S = sum_{pi in S} (n_pi/N) sum_g conj(chi_pi(g)) lambda_g``."""
    n = irreps[0].order
    out = np.zeros(n, dtype=complex)
    for i in sorted(set(subset)):
        if not 0 <= i < len(irreps):
            raise QGroupError(f"irrep index {i} out of range")
        out += irreps[i].dim / n * irreps[i].character.conj()
    return out


def central_projection_block(q: QGroupData, subset) -> np.ndarray:
    """``P_S`` in block coordinates: identity on the chosen blocks."""
    blocks = []
    chosen = set(subset)
    for k, n in enumerate(q.space.block_sizes):
        blocks.append(np.eye(n) if k in chosen else np.zeros((n, n)))
    return q.space.from_blocks(blocks)


def is_central(space: QSet, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    scale = max(1.0, space.norm(x))
    for e in np.eye(space.dim):
        if space.norm(space.multiply(x, e) - space.multiply(e, x)) > tol * scale:
            return False
    return True


def rank_one_block(q: QGroupData, irrep_index: int, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``|xi><eta|`` placed in one block, zero elsewhere (block coordinates)."""
    blocks = [np.zeros((n, n), dtype=complex) for n in q.space.block_sizes]
    blocks[irrep_index] = np.outer(xi, np.conj(eta))
    return q.space.from_blocks(blocks)
