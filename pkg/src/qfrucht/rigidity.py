"""Level-set rigidity criteria for quantum Cayley graphs on group duals, plus
the generic-basis closure experiments.

For ``P = sum_g c_g lambda_g`` the Cayley adjacency acts by
``lambda_g -> N c_g lambda_g``. A quantum symmetry commuting with it must have
``a_{g,h} = 0`` whenever ``c_g != c_h``. Every verdict here rests only on that
vanishing pattern.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .fingroup import (FiniteGroup, Irrep, change_basis, character_multiplicity, haar_unitary,
                       permutation_matrices, structure_report, symmetric_group)
from .qgroup import (LEVEL_TOL, Multiplier, QGroupData, central_projection, fourier_multiplier,
                     inv_fourier_rank_one)

SEPARATION_TOL = 1e-7
RANK_TOL = 1e-9
IRREP_ENUM_CAP = 20


class RigidityError(ValueError):
    pass


class Verdict(str, Enum):
    RIGID_INJECTIVE = "RIGID_INJECTIVE"
    RIGID_NONCENTRAL_SEPARATED = "RIGID_NONCENTRAL_SEPARATED"
    INCONCLUSIVE = "INCONCLUSIVE"

    @property
    def rank(self) -> int:
        return {"RIGID_INJECTIVE": 2, "RIGID_NONCENTRAL_SEPARATED": 1, "INCONCLUSIVE": 0}[self.value]

    @property
    def is_rigid(self) -> bool:
        return self is not Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class LevelPartition:
    group: FiniteGroup
    blocks: list[list[int]]
    tol: float
    multiplier: Multiplier

    def block_of(self) -> np.ndarray:
        out = np.empty(self.group.order, dtype=int)
        for i, b in enumerate(self.blocks):
            out[b] = i
        return out

    def separates(self, g: int, h: int) -> bool:
        lab = self.block_of()
        return lab[g] != lab[h]

    @property
    def is_discrete(self) -> bool:
        return len(self.blocks) == self.group.order

    def labelled(self) -> list[list[str]]:
        return [[self.group.label(g) for g in b] for b in self.blocks]


def level_partition(mult: Multiplier, tol: float = LEVEL_TOL) -> LevelPartition:
    return LevelPartition(mult.group, mult.levels(tol), tol, mult)


@dataclass(frozen=True)
class RigidityVerdict:
    kind: Verdict
    partition: list[list[int]]
    witness: dict = field(default_factory=dict)

    @property
    def is_rigid(self) -> bool:
        return self.kind.is_rigid

    def as_dict(self) -> dict:
        return {"verdict": self.kind.value, "partition": self.partition, "witness": self.witness}


def _min_gap(values: np.ndarray, pairs) -> float:
    gaps = [abs(values[g] - values[h]) for g, h in pairs]
    return float(min(gaps)) if gaps else float("inf")


def rigidity_verdict(group: FiniteGroup, mult: Multiplier, tol: float = LEVEL_TOL) -> RigidityVerdict:
    part = level_partition(mult, tol)
    lab = part.block_of()
    vals = mult.values
    n = group.order
    scale = max(1.0, float(np.abs(vals).max()))
    all_pairs = list(itertools.combinations(range(n), 2))
    if part.is_discrete:
        return RigidityVerdict(Verdict.RIGID_INJECTIVE, part.blocks,
                               {"min_gap": _min_gap(vals, all_pairs), "scale": scale})
    rep = structure_report(group)
    center = set(rep.center)
    witness = {"abelian": rep.is_abelian, "center": sorted(center)}
    if not rep.is_abelian:
        pairs = [(g, h) for g, h in all_pairs if g not in center or h not in center]
        unseparated = [[g, h] for g, h in pairs if lab[g] == lab[h]]
        if not unseparated:
            witness.update(min_gap=_min_gap(vals, pairs), scale=scale,
                           central_collisions=[[g, h] for g, h in all_pairs if lab[g] == lab[h]])
            return RigidityVerdict(Verdict.RIGID_NONCENTRAL_SEPARATED, part.blocks, witness)
        witness["unseparated_noncentral_pairs"] = unseparated
    return RigidityVerdict(Verdict.INCONCLUSIVE, part.blocks, witness)


def _passes_gap(verdict: RigidityVerdict, tol: float = SEPARATION_TOL) -> bool:
    """Absolute separation: every relevant gap exceeds ``tol * max(1, max|T|)``."""
    gap = verdict.witness.get("min_gap", 0.0)
    return gap > tol * verdict.witness.get("scale", 1.0)


# -- searches ----------------------------------------------------------------
def _run_trials(fn: Callable[[int], object], trials: int, jobs: int, stop: Callable[[object], bool]):
    """Evaluate ``fn(0..trials-1)`` in index order, chunked by ``jobs``. Results are returned in index
    order and cut after the first hit, so output never depends on ``jobs``."""
    results = []
    jobs = max(1, int(jobs))
    with ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else _Serial() as pool:
        for start in range(0, trials, jobs):
            idx = range(start, min(trials, start + jobs))
            chunk = list(pool.map(fn, idx))
            for r in chunk:
                results.append(r)
                if stop(r):
                    return results
    return results


class _Serial:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, it):
        return map(fn, it)


def _unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class SeparatingVector:
    success: bool
    xi: np.ndarray | None
    values: np.ndarray | None
    trials_used: int
    min_gap: float


def separating_vector_search(rep: Irrep, faithful_required: bool = True, seed: int = 0, trials: int = 20,
                             tol: float = SEPARATION_TOL) -> SeparatingVector:
    """Find ``xi`` with ``g -> <xi, pi(g) xi>`` injective."""
    kernel = rep.kernel()
    if faithful_required and len(kernel) > 1:
        raise RigidityError(f"representation is not faithful; kernel = {kernel}")
    pairs = list(itertools.combinations(range(rep.order), 2))
    best_gap = 0.0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        xi = _unit_vector(rng, rep.dim)
        vals = np.einsum("i,gij,j->g", xi.conj(), rep.matrices, xi)
        gap = _min_gap(vals, pairs)
        best_gap = max(best_gap, gap)
        if gap > tol * max(1.0, float(np.abs(vals).max())):
            return SeparatingVector(True, xi, vals, t + 1, gap)
    return SeparatingVector(False, None, None, trials, best_gap)


def rank_one_multiplier(group: FiniteGroup, irreps: Sequence[Irrep], xis: dict[int, np.ndarray]) -> np.ndarray:
    """``c_g = sum_k (n_k / N) <alpha_k(g) xi_k, xi_k>``: lambda-coefficients of ``(+)_k |xi_k><xi_k|``."""
    out = np.zeros(group.order, dtype=complex)
    for k, xi in xis.items():
        out += inv_fourier_rank_one(irreps[k], xi, xi)
    return out


@dataclass(frozen=True)
class SearchResult:
    projection: np.ndarray  # lambda-coefficients
    multiplier: Multiplier
    verdict: RigidityVerdict
    trial: int
    trials_run: int
    xis: dict

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.kind.value,
            "partition": self.verdict.partition,
            "witness": self.verdict.witness,
            "trial": self.trial,
            "trials_run": self.trials_run,
            "projection": {"basis": "lambda", "re": self.projection.real.tolist(),
                           "im": self.projection.imag.tolist()},
        }


def rigid_projection_search(group: FiniteGroup, irreps: Sequence[Irrep], seed: int = 0, trials: int = 100,
                            tol: float = LEVEL_TOL, jobs: int = 1) -> SearchResult:
    """Random ``P = (+) |xi_k><xi_k|`` over irreps of dimension > 1; strongest verdict wins."""
    if structure_report(group).is_abelian:
        raise RigidityError("the group is abelian; the rigid-projection theorem needs a non-abelian group")
    big = [k for k, r in enumerate(irreps) if r.dim > 1]

    def trial(t: int) -> SearchResult:
        rng = np.random.default_rng([seed, t])
        xis = {k: _unit_vector(rng, irreps[k].dim) for k in big}
        coeffs = rank_one_multiplier(group, irreps, xis)
        mult = Multiplier(group, coeffs)
        verdict = rigidity_verdict(group, mult, tol)
        if verdict.is_rigid and not _passes_gap(verdict):
            verdict = RigidityVerdict(Verdict.INCONCLUSIVE, verdict.partition,
                                      dict(verdict.witness, reason="separation below absolute tolerance"))
        return SearchResult(coeffs, mult, verdict, t, 0, xis)

    results = _run_trials(trial, trials, jobs, lambda r: r.verdict.kind is Verdict.RIGID_INJECTIVE)
    best = max(results, key=lambda r: (r.verdict.kind.rank, -r.trial))
    return SearchResult(best.projection, best.multiplier, best.verdict, best.trial, len(results), best.xis)


# -- central projections -----------------------------------------------------
@dataclass(frozen=True)
class ObstructionReport:
    subsets: list[tuple[int, ...]]
    partitions: list[list[list[int]]]
    class_function_residual: float
    never_separated: list[tuple[int, int]]

    def as_dict(self) -> dict:
        return {
            "subsets": [list(s) for s in self.subsets],
            "partitions": self.partitions,
            "class_function_residual": self.class_function_residual,
            "never_separated": [list(p) for p in self.never_separated],
        }


def central_rigidity_obstruction(group: FiniteGroup, irreps: Sequence[Irrep],
                                 tol: float = LEVEL_TOL) -> ObstructionReport:
    """Level sets of every central projection, and the pairs none of them separate."""
    if len(irreps) > IRREP_ENUM_CAP:
        raise RigidityError(f"{len(irreps)} irreps exceeds the enumeration cap of {IRREP_ENUM_CAP}")
    classes = structure_report(group).conjugacy_classes
    subsets, partitions = [], []
    resid = 0.0
    pairs = set(itertools.combinations(range(group.order), 2))
    separated = set()
    for r in range(len(irreps) + 1):
        for subset in itertools.combinations(range(len(irreps)), r):
            coeffs = central_projection(irreps, subset)
            for cls in classes:
                resid = max(resid, float(np.ptp(coeffs[cls].real) + np.ptp(coeffs[cls].imag)))
            blocks = Multiplier(group, coeffs).levels(tol)
            lab = np.empty(group.order, dtype=int)
            for i, b in enumerate(blocks):
                lab[b] = i
            separated |= {(g, h) for g, h in pairs if lab[g] != lab[h]}
            subsets.append(subset)
            partitions.append(blocks)
    return ObstructionReport(subsets, partitions, resid, sorted(pairs - separated))


def permutation_character_multiplier(q: QGroupData) -> Multiplier:
    """Multiplier of ``(1/N) sum_g chi(g) lambda_g`` for the group's permutation character.

    Built in block form from character multiplicities, then read back
    through the Fourier transform; the result is ``|Fix(g)| / N``.
    """
    group, irreps = q.group, q.irreps
    mats = permutation_matrices(group)
    chi = np.trace(mats, axis1=1, axis2=2)
    n = group.order
    blocks = []
    for r in irreps:
        mult = np.sum(chi * r.character.conj()) / n
        # (1/N) sum_g chi_pi(g) pi(g) is (1/n_pi) times the unit of the conj-pi block; chi is real
        blocks.append(mult.real / r.dim * np.eye(r.dim))
    x = q.space.from_blocks(blocks)
    return fourier_multiplier(q, x)


# -- the S3 closed forms -----------------------------------------------------
S3_LABELS = ("e", "(0 1)", "(0 2)", "(1 2)", "(0 1 2)", "(0 2 1)")


def s3_rank_one_values(alpha: complex) -> dict[str, complex]:
    """Values ``<pi(g) xi, xi>`` on the defining representation for ``xi = (1, alpha, -1-alpha)``.

    Keys are cycle labels on ``{0, 1, 2}``; ``(0 1 2)`` sends ``0 -> 1 -> 2 -> 0``.
    """
    a = complex(alpha)
    ac = a.conjugate()
    m2 = abs(a) ** 2
    return {
        "e": 1 + m2 + abs(1 + a) ** 2,
        "(0 1)": abs(1 + a) ** 2 + a + ac,
        "(0 2)": m2 - 2 - (a + ac),
        "(1 2)": 1 - (a + ac) - 2 * m2,
        "(0 1 2)": -1 - m2 + a - 2 * ac,
        "(0 2 1)": -1 - m2 + ac - 2 * a,
    }


def s3_rank_one_multiplier(alpha: complex, group: FiniteGroup | None = None) -> Multiplier:
    group = group or symmetric_group(3)
    vals = s3_rank_one_values(alpha)
    return Multiplier(group, np.array([vals[group.label(g)] for g in range(group.order)]))


def s3_pipeline_multiplier(alpha: complex, group: FiniteGroup | None = None) -> Multiplier:
    """The same multiplier via the standard irrep on the sum-zero subspace and the inverse Fourier map."""
    group = group or symmetric_group(3)
    mats = permutation_matrices(group)
    basis = np.array([[1, -1, 0], [1, 1, -2]], dtype=float).T
    basis /= np.linalg.norm(basis, axis=0)
    std = Irrep(np.einsum("ai,gab,bj->gij", basis, mats, basis))
    xi = basis.T @ np.array([1, alpha, -1 - alpha], dtype=complex)
    return Multiplier(group, inv_fourier_rank_one(std, xi, xi))


# -- convolution closures ----------------------------------------------------
def _orth_rows(rows: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    if rows.size == 0:
        return rows
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return rows[:0]
    return vh[: int(np.sum(s > tol * s[0]))]


def convolution_unit(q: QGroupData) -> np.ndarray:
    """The element ``u`` with ``u * x = x`` for all ``x`` (least squares)."""
    d = q.dim
    system = np.moveaxis(q.delta_adjoint.reshape(d, d, d), 1, 2).reshape(d * d, d)
    u, *_ = np.linalg.lstsq(system, np.eye(d).ravel(), rcond=None)
    return u


@dataclass(frozen=True)
class ClosureResult:
    dimension: int
    history: list[int]


def convolution_generation_test(q: QGroupData, p: np.ndarray) -> tuple[bool, list[int]]:
    """Close ``span{u, P}`` under convolution, ``u`` the convolution unit."""
    span = _orth_rows(np.array([convolution_unit(q), np.asarray(p, dtype=complex)]))
    history = [span.shape[0]]
    while True:
        prods = np.einsum("xrs,ys->xyr", np.array([q.convolution_operator(x) for x in span]), span)
        span = _orth_rows(np.concatenate([span, prods.reshape(-1, q.dim)]))
        history.append(span.shape[0])
        if history[-1] == history[-2]:
            break
    return history[-1] == q.dim, history


def _close_functions(group: FiniteGroup, rows: np.ndarray) -> list[int]:
    """Close a span of functions on the group under pointwise product and convolution."""
    n = group.order
    # shift[k, g] = index of k^{-1} g
    shift = group.mul[group.inverse]
    span = _orth_rows(rows)
    history = [span.shape[0]]
    while True:
        pointwise = (span[:, None, :] * span[None, :, :]).reshape(-1, n)
        conv = np.einsum("ik,jkg->ijg", span, span[:, shift]).reshape(-1, n)
        span = _orth_rows(np.concatenate([span, pointwise, conv]))
        history.append(span.shape[0])
        if history[-1] == history[-2]:
            return history


def closure_trial(group: FiniteGroup, irreps: Sequence[Irrep], seed: int, trial: int,
                  restrict_trivial: bool = False) -> ClosureResult:
    rng = np.random.default_rng([seed, trial])
    rows = []
    for r in irreps:
        rot = change_basis(r, haar_unitary(r.dim, rng))
        if restrict_trivial and not r.is_trivial():
            continue
        rows.extend(rot.matrices[:, a, a] for a in range(r.dim))
    history = _close_functions(group, np.array(rows))
    return ClosureResult(history[-1], history)


def closure_check(group: FiniteGroup, irreps: Sequence[Irrep], seed: int = 0, trials: int = 20,
                  restrict_trivial: bool = False, jobs: int = 1) -> list[ClosureResult]:
    return _run_trials(lambda t: closure_trial(group, irreps, seed, t, restrict_trivial), trials, jobs,
                       lambda r: False)


# -- hypotheses and certificates ---------------------------------------------
def colouring_hypothesis_check(group: FiniteGroup, irreps: Sequence[Irrep]) -> dict:
    nontrivial = [k for k, r in enumerate(irreps) if not r.is_trivial()]
    characters = [k for k in nontrivial if irreps[k].dim == 1]
    witnesses, missing = {}, []
    for a in nontrivial:
        found = None
        for b, c in itertools.combinations(nontrivial, 2):
            if a in (b, c):
                continue
            if character_multiplicity(irreps[a], irreps[b], irreps[c]) > 0:
                found = [b, c]
                break
        if found is None:
            missing.append(a)
        else:
            witnesses[a] = found
    return {
        "nontrivial_character": characters[0] if characters else None,
        "character_hypothesis": bool(characters),
        "tensor_hypothesis": not missing,
        "tensor_witnesses": {str(k): v for k, v in witnesses.items()},
        "tensor_missing": missing,
    }


def lie_witness_dimension(q: QGroupData, p: np.ndarray) -> dict:
    """``dim {X : [A, ad_X] = 0}`` minus the centre dimension (numerical, beyond the criteria)."""
    space = q.space
    a = q.convolution_operator(p)
    cols = []
    for e in np.eye(space.dim, dtype=complex):
        ad = space.left_mult(e) - space.right_mult(e)
        cols.append((a @ ad - ad @ a).ravel())
    system = np.array(cols).T
    s = np.linalg.svd(system, compute_uv=False)
    kernel = int(np.sum(s <= RANK_TOL * max(1.0, s[0])))
    centre = len(space.block_sizes)
    return {"commutant_dimension": kernel, "centre_dimension": centre, "excess": kernel - centre}


def gap_certificate(group: FiniteGroup, irreps: Sequence[Irrep], q: QGroupData | None = None,
                    seed: int = 0, trials: int = 100, jobs: int = 1) -> dict:
    rep = structure_report(group)
    report = {"order": group.order, "perfect": rep.is_perfect,
              "commutator_subgroup_order": rep.commutator_subgroup_order}
    if not rep.is_perfect:
        report.update(certified=False, abelianization_order=group.order // rep.commutator_subgroup_order,
                      reason="group is not perfect")
        return report
    search = rigid_projection_search(group, irreps, seed=seed, trials=trials, jobs=jobs)
    report["search"] = search.as_dict()
    report["rigid"] = search.verdict.is_rigid
    report["certified"] = search.verdict.is_rigid
    if search.verdict.is_rigid:
        report["conclusion"] = ("classical automorphism group of the dual is trivial while the quantum "
                                "automorphism group of the Cayley graph equals the dual and acts transitively")
        if q is not None:
            report["lie_witness"] = dict(lie_witness_dimension(q, q.from_lambda(search.projection)),
                                         note="numerical check beyond the certificate criteria")
    else:
        report["reason"] = "no rigid projection found"
    return report
