"""Finite groups as Cayley tables, with numerically computed unitary irreps."""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

DEFAULT_CAP = 10_000
ASSOC_CHECK_MAX = 200
CHAR_MATCH_TOL = 1e-7
SVD_REL_THRESHOLD = 1e-8


class GroupError(ValueError):
    """Invalid group data or a failed representation-theoretic computation."""


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul: np.ndarray
    name: str = ""
    labels: tuple[str, ...] | None = None
    perms: np.ndarray | None = None  # optional faithful permutation action, one row per element

    def __post_init__(self):
        table = np.array(self.mul, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise GroupError(f"multiplication table must be square and nonempty, got shape {table.shape}")
        table.setflags(write=False)
        object.__setattr__(self, "mul", table)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if self.perms is not None:
            perms = np.array(self.perms, dtype=np.int64)
            perms.setflags(write=False)
            object.__setattr__(self, "perms", perms)
        validate_table(table)
        if self.perms is not None:
            if self.perms.shape[0] != table.shape[0]:
                raise GroupError("one permutation per element is required")
            # perms[gh] == perms[g] o perms[h]
            if not np.array_equal(self.perms[table], _compose_all(self.perms)):
                raise GroupError("permutation action is not compatible with the table")

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    @property
    def identity(self) -> int:
        return 0

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = np.argmax(self.mul == 0, axis=1)
        inv.setflags(write=False)
        return inv

    def label(self, g: int) -> str:
        return self.labels[g] if self.labels else str(g)

    def conj(self, g: int, h: int) -> int:
        """``h g h^{-1}``."""
        return int(self.mul[self.mul[h, g], self.inverse[h]])

    @cached_property
    def element_orders(self) -> np.ndarray:
        out = np.ones(self.order, dtype=int)
        for g in range(self.order):
            x = g
            while x != 0:
                x = self.mul[x, g]
                out[g] += 1
        return out

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and np.array_equal(self.mul, other.mul)

    def __hash__(self):
        return hash(self.mul.tobytes())


def _compose_all(perms: np.ndarray) -> np.ndarray:
    """``out[g, h] = perms[g][perms[h]]``."""
    return perms[np.arange(perms.shape[0])[:, None, None], perms[None, :, :]]


def validate_table(table: np.ndarray, assoc_max: int = ASSOC_CHECK_MAX) -> None:
    n = table.shape[0]
    if table.min() < 0 or table.max() >= n:
        raise GroupError("table entries must be element indices in range")
    expect = np.arange(n)
    for g in range(n):
        if not np.array_equal(np.sort(table[g]), expect):
            raise GroupError(f"not a Latin square: row {g} repeats an entry")
        if not np.array_equal(np.sort(table[:, g]), expect):
            raise GroupError(f"not a Latin square: column {g} repeats an entry")
    if not (np.array_equal(table[0], expect) and np.array_equal(table[:, 0], expect)):
        raise GroupError("index 0 must be the identity")
    if n <= assoc_max:
        # (gh)k vs g(hk) for all triples at once
        left = table[table[:, :, None], np.arange(n)[None, None, :]]
        right = table[np.arange(n)[:, None, None], table[None, :, :]]
        bad = np.argwhere(left != right)
        if bad.size:
            g, h, k = (int(v) for v in bad[0])
            raise GroupError(f"associativity fails at triple ({g}, {h}, {k})")


def group_from_generators(degree: int, perms: Sequence[Sequence[int]], cap: int = DEFAULT_CAP,
                          name: str = "") -> FiniteGroup:
    """Close a set of permutations of ``{0..degree-1}`` under composition.

    Elements are ordered by breadth-first discovery from the identity; the
    product ``g h`` is the composition "apply ``h`` first, then ``g``".
    """
    gens = []
    for p in perms:
        p = tuple(int(v) for v in p)
        if sorted(p) != list(range(degree)):
            raise GroupError(f"not a permutation of 0..{degree - 1}: {p}")
        gens.append(p)
    ident = tuple(range(degree))
    elems = [ident]
    index = {ident: 0}
    queue = deque([ident])
    while queue:
        x = queue.popleft()
        for s in gens:
            y = tuple(s[x[i]] for i in range(degree))
            if y not in index:
                if len(elems) >= cap:
                    raise GroupError(f"closure exceeds cap of {cap} elements")
                index[y] = len(elems)
                elems.append(y)
                queue.append(y)
    arr = np.array(elems)
    n = len(elems)
    table = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        # row i: elems[i] o elems[j] = elems[i][elems[j][k]]
        prods = arr[i][arr]
        table[i] = [index[tuple(row)] for row in prods]
    labels = tuple(_cycle_label(e) for e in elems)
    return FiniteGroup(table, name=name, labels=labels, perms=arr)


def _cycle_label(perm: Sequence[int]) -> str:
    seen, cycles = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(x)
            x = perm[x]
        cycles.append("(" + " ".join(str(c) for c in cyc) + ")")
    return "".join(cycles) or "e"


def cyclic_group(n: int) -> FiniteGroup:
    table = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return FiniteGroup(table, name=f"Z{n}", labels=tuple(str(i) for i in range(n)))


def symmetric_group(n: int) -> FiniteGroup:
    if n == 1:
        return FiniteGroup([[0]], name="S1")
    gens = [[1, 0] + list(range(2, n)), list(range(1, n)) + [0]]
    return group_from_generators(n, gens, name=f"S{n}")


def alternating_group(n: int) -> FiniteGroup:
    gens = [[(i + 1) % 3 if i < 3 else i for i in range(n)]]
    if n >= 4:
        gens.append(list(range(1, n)) + [0] if n % 2 == 1 else [0] + list(range(2, n)) + [1])
    return group_from_generators(n, gens, name=f"A{n}")


def dihedral_group(n: int) -> FiniteGroup:
    """Symmetries of the ``n``-gon (order ``2n``)."""
    rot = [(i + 1) % n for i in range(n)]
    ref = [(-i) % n for i in range(n)]
    return group_from_generators(n, [rot, ref], name=f"D{n}")


def quaternion_group() -> FiniteGroup:
    """``Q8`` via its regular permutation action on ``{+-1, +-i, +-j, +-k}``."""
    # units as (sign, axis) with axis 0..3 = 1,i,j,k; quaternion product table
    prod = {
        (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
        (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
        (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
    }
    units = [(s, a) for a in range(4) for s in (1, -1)]
    idx = {u: i for i, u in enumerate(units)}

    def left(u):
        return [idx[(u[0] * v[0] * prod[u[1], v[1]][0], prod[u[1], v[1]][1])] for v in units]

    return group_from_generators(8, [left((1, 1)), left((1, 2))], name="Q8")


def direct_product(a: FiniteGroup, b: FiniteGroup) -> FiniteGroup:
    """Elements ``(x, y)`` indexed ``x * |b| + y``."""
    na, nb = a.order, b.order
    table = (a.mul[:, None, :, None] * nb + b.mul[None, :, None, :]).reshape(na * nb, na * nb)
    labels = tuple(f"({a.label(x)},{b.label(y)})" for x in range(na) for y in range(nb))
    return FiniteGroup(table, name=f"{a.name}x{b.name}", labels=labels)


# -- structure -------------------------------------------------------------
def permutation_matrices(group: FiniteGroup) -> np.ndarray:
    """Matrices ``P(g) e_i = e_{g(i)}`` of the stored permutation action."""
    if group.perms is None:
        raise GroupError("group carries no permutation action")
    n, deg = group.perms.shape
    mats = np.zeros((n, deg, deg))
    mats[np.repeat(np.arange(n), deg), group.perms.ravel(), np.tile(np.arange(deg), n)] = 1
    return mats


def conjugacy_classes(group: FiniteGroup) -> list[list[int]]:
    seen = np.zeros(group.order, dtype=bool)
    out = []
    for g in range(group.order):
        if seen[g]:
            continue
        cls = sorted({group.conj(g, h) for h in range(group.order)})
        seen[cls] = True
        out.append(cls)
    return out


def subgroup_closure(group: FiniteGroup, elements) -> list[int]:
    members = {0}
    frontier = list(set(int(e) for e in elements))
    gens = list(frontier)
    while frontier:
        new = []
        for x in frontier:
            if x in members:
                continue
            members.add(x)
            new.append(x)
        frontier = [int(group.mul[x, s]) for x in new for s in gens if group.mul[x, s] not in members]
    return sorted(members)


@dataclass(frozen=True)
class StructureReport:
    center: list[int]
    conjugacy_classes: list[list[int]]
    commutator_subgroup: list[int]
    is_perfect: bool
    is_abelian: bool

    @property
    def commutator_subgroup_order(self) -> int:
        return len(self.commutator_subgroup)

    def as_dict(self) -> dict:
        return {
            "center": self.center,
            "conjugacy_classes": self.conjugacy_classes,
            "commutator_subgroup": self.commutator_subgroup,
            "commutator_subgroup_order": self.commutator_subgroup_order,
            "is_perfect": self.is_perfect,
            "is_abelian": self.is_abelian,
        }


def structure_report(group: FiniteGroup) -> StructureReport:
    n = group.order
    m, inv = group.mul, group.inverse
    center = [g for g in range(n) if np.array_equal(m[g], m[:, g])]
    comms = {int(m[m[g, h], m[inv[g], inv[h]]]) for g in range(n) for h in range(n)}
    derived = subgroup_closure(group, comms)
    return StructureReport(
        center=center,
        conjugacy_classes=conjugacy_classes(group),
        commutator_subgroup=derived,
        is_perfect=len(derived) == n,
        is_abelian=len(center) == n,
    )


# -- representations -------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Irrep:
    matrices: np.ndarray  # shape (N, n, n)

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise GroupError(f"irrep matrices must have shape (N, n, n), got {mats.shape}")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def order(self) -> int:
        return self.matrices.shape[0]

    @cached_property
    def character(self) -> np.ndarray:
        chi = np.trace(self.matrices, axis1=1, axis2=2)
        chi.setflags(write=False)
        return chi

    def __call__(self, g: int) -> np.ndarray:
        return self.matrices[g]

    def kernel(self, tol: float = 1e-9) -> list[int]:
        eye = np.eye(self.dim)
        return [g for g in range(self.order) if np.abs(self.matrices[g] - eye).max() <= tol]

    def is_trivial(self, tol: float = 1e-9) -> bool:
        return self.dim == 1 and len(self.kernel(tol)) == self.order


def irrep_residuals(group: FiniteGroup, rep: Irrep) -> dict:
    mats = rep.matrices
    prod = np.einsum("gij,hjk->ghik", mats, mats)
    hom = np.abs(prod - mats[group.mul]).max()
    unit = np.abs(np.einsum("gji,gjk->gik", mats.conj(), mats) - np.eye(rep.dim)).max()
    irr = abs(np.sum(np.abs(rep.character) ** 2) / group.order - 1.0)
    return {"homomorphism": float(hom), "unitary": float(unit), "irreducible": float(irr)}


def regular_rep(group: FiniteGroup) -> np.ndarray:
    """Left-regular permutation matrices ``L(g) delta_h = delta_{gh}``."""
    n = group.order
    mats = np.zeros((n, n, n))
    g_idx = np.repeat(np.arange(n), n)
    h_idx = np.tile(np.arange(n), n)
    mats[g_idx, group.mul[g_idx, h_idx], h_idx] = 1.0
    return mats


def _random_hermitian(rng: np.random.Generator, k: int) -> np.ndarray:
    z = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return (z + z.conj().T) / 2


def _split(rep_mats: np.ndarray, rng: np.random.Generator, tol: float, depth: int = 0) -> list[np.ndarray]:
    """Break a unitary representation into irreducibles (with multiplicity)."""
    n_elems, k, _ = rep_mats.shape
    norm_sq = np.sum(np.abs(np.trace(rep_mats, axis1=1, axis2=2)) ** 2) / n_elems
    if abs(norm_sq - 1.0) <= 1e-6:
        return [rep_mats]
    if depth > 40:
        raise GroupError("irrep splitting did not converge")
    h = _random_hermitian(rng, k)
    avg = np.einsum("gij,jk,glk->il", rep_mats, h, rep_mats.conj()) / n_elems
    vals, vecs = np.linalg.eigh(avg)
    # cluster eigenvalues of the commutant element
    spread = max(1.0, np.abs(vals).max())
    groups, start = [], 0
    for i in range(1, k + 1):
        if i == k or vals[i] - vals[i - 1] > 1e-6 * spread:
            groups.append(slice(start, i))
            start = i
    if len(groups) == 1:
        return _split(rep_mats, rng, tol, depth + 1)
    out = []
    for sl in groups:
        q = vecs[:, sl]
        sub = np.einsum("ai,gab,bj->gij", q.conj(), rep_mats, q)
        out.extend(_split(sub, rng, tol, depth + 1))
    return out


def _char_sort_key(chi: np.ndarray) -> tuple:
    rounded = np.round(chi, 7) + 0.0
    return tuple(v for z in rounded for v in (-z.real, -z.imag))


def decompose_regular(group: FiniteGroup, seed: int = 0, tol: float = 1e-9, retries: int = 5) -> list[Irrep]:
    """A complete list of inequivalent unitary irreps of ``group``.

    Sorted by dimension, then by character in descending lexicographic
    order, so the trivial representation is always first.
    """
    n = group.order
    last_err = None
    for attempt in range(retries):
        rng = np.random.default_rng([seed, attempt])
        try:
            pieces = _split(regular_rep(group).astype(complex), rng, tol)
        except GroupError as exc:
            last_err = exc
            continue
        found: list[np.ndarray] = []
        for mats in pieces:
            chi = np.trace(mats, axis1=1, axis2=2)
            if not any(np.abs(chi - np.trace(f, axis1=1, axis2=2)).max() <= CHAR_MATCH_TOL for f in found):
                found.append(mats)
        irreps = [Irrep(m) for m in found]
        if sum(r.dim ** 2 for r in irreps) != n:
            last_err = GroupError(f"incomplete decomposition on attempt {attempt}")
            continue
        bad = [r for r in irreps if max(irrep_residuals(group, r).values()) > 1e-8]
        if bad:
            last_err = GroupError(f"irrep residuals too large on attempt {attempt}")
            continue
        irreps.sort(key=lambda r: (r.dim, _char_sort_key(r.character)))
        return irreps
    raise GroupError(f"decompose_regular failed after {retries} attempts with seed {seed}: {last_err}")


def trivial_index(irreps: Sequence[Irrep]) -> int:
    for i, r in enumerate(irreps):
        if r.is_trivial():
            return i
    raise GroupError("no trivial representation in the irrep list")


def schur_orthogonality_residual(irreps: Sequence[Irrep]) -> float:
    n = irreps[0].order
    coeffs = np.concatenate([r.matrices.reshape(n, -1) * np.sqrt(r.dim) for r in irreps], axis=1)
    gram = coeffs.T @ coeffs.conj() / n
    return float(np.abs(gram - np.eye(gram.shape[0])).max())


# -- tensor products -------------------------------------------------------
@dataclass(frozen=True, eq=False)
class IntertwinerSet:
    source: int
    target: tuple[int, int]
    isometries: tuple[np.ndarray, ...]  # each (n_beta * n_gamma, n_alpha)

    @property
    def multiplicity(self) -> int:
        return len(self.isometries)


def character_multiplicity(alpha: Irrep, beta: Irrep, gamma: Irrep) -> int:
    n = alpha.order
    val = np.sum(alpha.character.conj() * beta.character * gamma.character) / n
    return int(round(val.real))


def intertwiners(alpha: Irrep, rep_mats: np.ndarray, rel: float = SVD_REL_THRESHOLD) -> list[np.ndarray]:
    """Isometries ``V`` with ``V alpha(g) = rho(g) V``, orthonormal in HS/n_alpha."""
    na = alpha.dim
    m = rep_mats.shape[1]
    eye_a, eye_m = np.eye(na), np.eye(m)
    # vec_row(V) with V of shape (m, na): rho V - V alpha = 0
    system = np.concatenate(
        [np.kron(rep_mats[g], eye_a) - np.kron(eye_m, alpha.matrices[g].T) for g in range(alpha.order)], axis=0)
    _, s, vh = np.linalg.svd(system)
    thresh = rel * max(s[0], 1.0) if s.size else 0.0
    null_dim = int(np.sum(s <= thresh)) + (vh.shape[0] - s.size)
    if null_dim == 0:
        return []
    basis = vh[vh.shape[0] - null_dim:].conj()
    # orthonormal in Frobenius; scale so that each V is an isometry
    return [v.reshape(m, na) * np.sqrt(na) for v in basis]


def tensor_decompose(beta: Irrep, gamma: Irrep, irreps: Sequence[Irrep]) -> list[IntertwinerSet]:
    """Decompose ``beta (x) gamma`` into copies of members of ``irreps``.

    The product basis is ``e_b (x) e_c`` at index ``b * n_gamma + c``.
    """
    prod = np.einsum("gab,gcd->gacbd", beta.matrices, gamma.matrices)
    prod = prod.reshape(beta.order, beta.dim * gamma.dim, beta.dim * gamma.dim)
    b_idx = next((i for i, r in enumerate(irreps) if r is beta), -1)
    c_idx = next((i for i, r in enumerate(irreps) if r is gamma), -1)
    out = []
    for a_idx, alpha in enumerate(irreps):
        vs = intertwiners(alpha, prod)
        if vs:
            out.append(IntertwinerSet(a_idx, (b_idx, c_idx), tuple(vs)))
    return out


def coefficient_product_expand(irreps: Sequence[Irrep], beta: int, b: int, bp: int,
                               gamma: int, c: int, cp: int) -> dict[tuple[int, int, int], complex]:
    """Expand ``u^beta_{b b'} u^gamma_{c c'}`` in the coefficients ``u^alpha_{a a'}``.

    Returns ``{(alpha, a, a'): coefficient}`` with ``|coefficient| > 1e-12``.
    """
    rb, rg = irreps[beta], irreps[gamma]
    row, col = b * rg.dim + c, bp * rg.dim + cp
    table: dict[tuple[int, int, int], complex] = {}
    for iset in tensor_decompose(rb, rg, irreps):
        na = irreps[iset.source].dim
        acc = np.zeros((na, na), dtype=complex)
        for v in iset.isometries:
            acc += np.outer(v[row], v[col].conj())
        for a, ap in itertools.product(range(na), repeat=2):
            if abs(acc[a, ap]) > 1e-12:
                table[(iset.source, a, ap)] = complex(acc[a, ap])
    return table


def evaluate_expansion(irreps: Sequence[Irrep], table: dict) -> np.ndarray:
    n = irreps[0].order
    out = np.zeros(n, dtype=complex)
    for (alpha, a, ap), coef in table.items():
        out += coef * irreps[alpha].matrices[:, a, ap]
    return out


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


def change_basis(rep: Irrep, u: np.ndarray) -> Irrep:
    return Irrep(np.einsum("ji,gjk,kl->gil", u.conj(), rep.matrices, u))


# -- JSON ------------------------------------------------------------------
def group_to_json(group: FiniteGroup) -> dict:
    doc = {"name": group.name, "order": group.order, "mul": group.mul.tolist()}
    if group.labels:
        doc["labels"] = list(group.labels)
    if group.perms is not None:
        doc["perms"] = group.perms.tolist()
    return doc


def group_from_json(doc: dict) -> FiniteGroup:
    try:
        mul = doc["mul"]
        order = int(doc.get("order", len(mul)))
    except (KeyError, TypeError) as exc:
        raise GroupError(f"malformed group document: {exc}") from exc
    if order != len(mul):
        raise GroupError(f"order {order} does not match table size {len(mul)}")
    return FiniteGroup(np.asarray(mul), name=str(doc.get("name", "")), labels=doc.get("labels"),
                       perms=doc.get("perms"))


def irreps_to_json(irreps: Sequence[Irrep]) -> list:
    return [{"dim": r.dim, "re": r.matrices.real.tolist(), "im": r.matrices.imag.tolist()} for r in irreps]


def irreps_from_json(doc: list) -> list[Irrep]:
    try:
        return [Irrep(np.asarray(d["re"]) + 1j * np.asarray(d["im"])) for d in doc]
    except (KeyError, TypeError) as exc:
        raise GroupError(f"malformed irreps document: {exc}") from exc


def dumps_group(group: FiniteGroup) -> str:
    return json.dumps(group_to_json(group))
