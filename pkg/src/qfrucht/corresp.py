"""The edge correspondence of a quantum Cayley graph versus the Vergnioux
correspondence ``K = P_S C(G) (x) C(G)``, and the isometry between them.

Tensors are ``dim x dim`` arrays as in :mod:`qfrucht.qgroup`; a "tensor list"
is a sequence of pairs ``(a_i, b_i)`` standing for ``sum_i a_i (x) b_i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fingroup import character_multiplicity
from .qgroup import (QGroupData, cayley_graph, central_projection_block, is_central, tensor_multiply,
                     tensor_star)
from .qspace import DEFAULT_TOL, LinOp

TensorList = Sequence[tuple[np.ndarray, np.ndarray]]


def edge_inner_product(adj: LinOp, a, b, c, d) -> np.ndarray:
    """``<a (x) b, c (x) d> = b^* A(a^* c) d``."""
    space = adj.space
    inner = adj(space.multiply(space.star(a), c))
    return space.multiply(space.multiply(space.star(b), inner), d)


def edge_inner_product_lists(adj: LinOp, xi: TensorList, eta: TensorList) -> np.ndarray:
    out = np.zeros(adj.space.dim, dtype=complex)
    for a, b in xi:
        for c, d in eta:
            out = out + edge_inner_product(adj, a, b, c, d)
    return out


def vergnioux_inner_product(q: QGroupData, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``(psi (x) id)(xi^* eta)``."""
    prod = tensor_multiply(q.space, tensor_star(q.space, xi), eta)
    return q.space.psi_vector @ prod


def simple_tensor(a, b) -> np.ndarray:
    return np.outer(a, b)


def phi(q: QGroupData, p_s: np.ndarray, a, b) -> np.ndarray:
    """``Delta(a) (1 (x) b) (P_S (x) 1)``."""
    eta = q.space.unit
    x = tensor_multiply(q.space, q.coproduct(a), simple_tensor(eta, b))
    return tensor_multiply(q.space, x, simple_tensor(p_s, eta))


def phi_list(q: QGroupData, p_s: np.ndarray, xi: TensorList) -> np.ndarray:
    return sum(phi(q, p_s, a, b) for a, b in xi)


def left_right_action_k(q: QGroupData, f, kappa: np.ndarray, h) -> np.ndarray:
    """``f . kappa . h = Delta(f) kappa (1 (x) h)``."""
    x = tensor_multiply(q.space, q.coproduct(f), kappa)
    return tensor_multiply(q.space, x, simple_tensor(q.space.unit, h))


def left_right_action_edge(q: QGroupData, f, xi: TensorList, h) -> list[tuple[np.ndarray, np.ndarray]]:
    s = q.space
    return [(s.multiply(f, a), s.multiply(b, h)) for a, b in xi]


def subset_is_symmetric(q: QGroupData, subset) -> bool:
    chosen = set(subset)
    for k in chosen:
        chi = q.irreps[k].character.conj()
        if not any(np.abs(chi - q.irreps[j].character).max() < 1e-7 for j in chosen):
            return False
    return True


def subset_is_generating(q: QGroupData, subset) -> bool:
    """Every irrep occurs in some tensor power of ``S`` together with the trivial rep."""
    irreps = q.irreps
    reached = {i for i, r in enumerate(irreps) if r.is_trivial()}
    frontier = set(reached)
    while frontier:
        new = set()
        for a in frontier:
            for s in subset:
                for c in range(len(irreps)):
                    if c not in reached and character_multiplicity(irreps[c], irreps[a], irreps[s]) > 0:
                        new.add(c)
        reached |= new
        frontier = new
    return len(reached) == len(irreps)


def random_tensor_list(q: QGroupData, rng: np.random.Generator, terms: int = 3) -> list:
    d = q.dim
    out = []
    for _ in range(terms):
        a = rng.normal(size=d) + 1j * rng.normal(size=d)
        b = rng.normal(size=d) + 1j * rng.normal(size=d)
        out.append((a / q.space.norm(a), b / q.space.norm(b)))
    return out


@dataclass(frozen=True)
class IsometryReport:
    subset: tuple[int, ...]
    samples: int
    max_deviation: float
    tol: float
    phi_rank: int
    expected_rank: int
    symmetric: bool
    generating: bool
    bimodule_deviation: float

    @property
    def isometric(self) -> bool:
        return self.max_deviation <= self.tol

    @property
    def passed(self) -> bool:
        return self.isometric and self.phi_rank == self.expected_rank and self.bimodule_deviation <= self.tol

    def as_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "samples": self.samples,
            "max_deviation": self.max_deviation,
            "tol": self.tol,
            "isometric": self.isometric,
            "phi_rank": self.phi_rank,
            "expected_rank": self.expected_rank,
            "bimodule_deviation": self.bimodule_deviation,
            "hypotheses": {"symmetric": self.symmetric, "generating": self.generating},
            "identity_verified": self.passed,
        }


def phi_rank(q: QGroupData, p_s: np.ndarray) -> int:
    eye = np.eye(q.dim, dtype=complex)
    imgs = np.array([phi(q, p_s, eye[r], eye[s]).ravel() for r in range(q.dim) for s in range(q.dim)])
    return int(np.linalg.matrix_rank(imgs, tol=1e-9 * max(1.0, np.abs(imgs).max())))


def isometry_check(q: QGroupData, subset, samples: int = 50, seed: int = 0, tol: float = DEFAULT_TOL,
                   with_rank: bool = True) -> IsometryReport:
    subset = tuple(sorted(set(subset)))
    p_s = central_projection_block(q, subset)
    if not is_central(q.space, p_s):
        raise ValueError("P_S is not central")
    adj = cayley_graph(q, p_s).adjacency
    dev = 0.0
    bimod = 0.0
    for t in range(samples):
        rng = np.random.default_rng([seed, t])
        xi = random_tensor_list(q, rng)
        lhs_k = phi_list(q, p_s, xi)
        lhs = vergnioux_inner_product(q, lhs_k, lhs_k)
        rhs = edge_inner_product_lists(adj, xi, xi)
        dev = max(dev, float(np.abs(lhs - rhs).max()))
        f = rng.normal(size=q.dim) + 1j * rng.normal(size=q.dim)
        h = rng.normal(size=q.dim) + 1j * rng.normal(size=q.dim)
        acted = phi_list(q, p_s, left_right_action_edge(q, f, xi, h))
        bimod = max(bimod, float(np.abs(acted - left_right_action_k(q, f, lhs_k, h)).max()))
    expected = sum(q.space.block_sizes[k] ** 2 for k in subset) * q.dim
    rank = phi_rank(q, p_s) if with_rank else expected
    return IsometryReport(subset, samples, dev, tol, rank, expected, subset_is_symmetric(q, subset),
                          subset_is_generating(q, subset), bimod)
