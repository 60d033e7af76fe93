"""``qfrucht`` command line.

Exit codes: 0 verified, rigid or certified; 1 verification failed,
inconclusive or refused; 2 input error. A JSON report is written to
``--out`` (or standard output) on every path, failures included.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
import time
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .fingroup import (GroupError, alternating_group, cyclic_group, decompose_regular, dihedral_group,
                       group_from_json, group_to_json, irrep_residuals, irreps_from_json, irreps_to_json,
                       quaternion_group, schur_orthogonality_residual, structure_report, symmetric_group)
from .frucht import ClassicalGraph, FruchtError, as_quantum_graph, classical_frucht, combine_directed, \
    combine_undirected, quantum_frucht_pipeline
from .jsonio import InputError, digest, load_json, vector_from_json, write_json
from .qgroup import QGroupError, cayley_graph, dual_group, fourier_multiplier, verify_hopf
from .qspace import DEFAULT_TOL, QSpaceError, make_quantum_graph, operator_from_json, operator_to_json
from .rigidity import (RigidityError, closure_check, gap_certificate, rigid_projection_search,
                       rigidity_verdict)
from .corresp import isometry_check

SCHEMA_VERSION = 1
INPUT_ERRORS = (InputError, GroupError, QSpaceError, QGroupError, FruchtError, RigidityError)


class Outcome:
    def __init__(self, ok: bool, result: dict):
        self.ok = ok
        self.result = result


def default_tol() -> float:
    env = os.environ.get("QFRUCHT_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        return float(env)
    except ValueError as exc:
        raise InputError(f"QFRUCHT_TOL is not a number: {env!r}") from exc


# -- input helpers -----------------------------------------------------------
def builtin_group(name: str):
    m = re.fullmatch(r"([ZSAD])(\d+)|Q8", name)
    if not m:
        raise InputError(f"unknown builtin group {name!r}; use Zn, Sn, An, Dn or Q8")
    if name == "Q8":
        return quaternion_group()
    kind, n = m.group(1), int(m.group(2))
    return {"Z": cyclic_group, "S": symmetric_group, "A": alternating_group, "D": dihedral_group}[kind](n)


def parse_group_file(path: str):
    doc = load_json(path)
    # a report from ``qfrucht group`` is accepted as well as a bare group
    if isinstance(doc, dict) and isinstance(doc.get("result"), dict) and "group" in doc["result"]:
        doc = doc["result"]["group"]
    return group_from_json(doc)


def load_dual(args, inputs: dict):
    group = parse_group_file(args.dual)
    inputs[args.dual] = digest(args.dual)
    if getattr(args, "irreps_file", None):
        irreps = irreps_from_json(load_json(args.irreps_file))
        inputs[args.irreps_file] = digest(args.irreps_file)
    else:
        irreps = decompose_regular(group, seed=args.seed)
    return group, irreps, dual_group(group, irreps)


def load_projection(q, path: str, inputs: dict) -> np.ndarray:
    doc = load_json(path)
    if isinstance(doc, dict) and isinstance(doc.get("result"), dict) and "projection" in doc["result"]:
        doc = doc["result"]["projection"]
    vec, basis = vector_from_json(doc)
    inputs[path] = digest(path)
    expect = q.group.order if basis == "lambda" else q.dim
    if vec.size != expect:
        raise InputError(f"projection has {vec.size} entries, expected {expect} in the {basis} basis")
    return q.from_lambda(vec) if basis == "lambda" else vec


def load_graph(path: str, tol: float, inputs: dict):
    doc = load_json(path)
    inputs[path] = digest(path)
    if isinstance(doc, dict) and "result" in doc:
        doc = doc["result"]
    if isinstance(doc, dict) and "graph" in doc:
        doc = doc["graph"]
    if isinstance(doc, dict) and "adj" in doc:
        return as_quantum_graph(ClassicalGraph.from_json(doc), tol)
    return make_quantum_graph(operator_from_json(doc), tol)


def graph_doc(graph) -> dict:
    return {"graph": operator_to_json(graph.adjacency), "flags": graph.flags.as_dict(),
            "regular_degree": graph.regular_degree}


# -- commands ----------------------------------------------------------------
def cmd_group(args, inputs, tol) -> Outcome:
    if args.builtin:
        group = builtin_group(args.builtin)
    elif args.file:
        group = parse_group_file(args.file)
        inputs[args.file] = digest(args.file)
    else:
        raise InputError("give a group file or --builtin NAME")
    rep = structure_report(group)
    return Outcome(True, {"group": group_to_json(group), "order": group.order, "structure": rep.as_dict()})


def cmd_irreps(args, inputs, tol) -> Outcome:
    group = parse_group_file(args.file)
    inputs[args.file] = digest(args.file)
    irreps = decompose_regular(group, seed=args.seed)
    resid = schur_orthogonality_residual(irreps)
    per = [irrep_residuals(group, r) for r in irreps]
    ok = resid <= 1e-8 and all(max(p.values()) <= 1e-8 for p in per)
    return Outcome(ok, {"dims": [r.dim for r in irreps], "orthogonality_residual": resid,
                        "residuals": per, "irreps": irreps_to_json(irreps)})


def cmd_cayley(args, inputs, tol) -> Outcome:
    _, _, q = load_dual(args, inputs)
    p = load_projection(q, args.projection, inputs)
    cg = cayley_graph(q, p, tol)
    doc = graph_doc(cg.graph)
    doc.update(space={"blocks": list(q.space.block_sizes)}, counit_value=cg.counit_value,
               loopless_by_counit=cg.loopless_by_counit, symmetric_projection=cg.symmetric_projection,
               undirected_disagreement=cg.undirected_disagreement)
    return Outcome(cg.graph.flags.is_quantum_graph, doc)


def cmd_verify(args, inputs, tol) -> Outcome:
    graph = load_graph(args.graph, tol, inputs)
    flags = graph.flags
    return Outcome(flags.is_quantum_graph, {"flags": flags.as_dict(), "regular_degree": graph.regular_degree,
                                            "is_quantum_graph": flags.is_quantum_graph})


def cmd_rigidity(args, inputs, tol) -> Outcome:
    group, _, q = load_dual(args, inputs)
    p = load_projection(q, args.projection, inputs)
    mult = fourier_multiplier(q, p)
    verdict = rigidity_verdict(group, mult)
    return Outcome(verdict.is_rigid, dict(verdict.as_dict(), multiplier=mult.values))


def cmd_rigid_search(args, inputs, tol) -> Outcome:
    group, irreps, _ = load_dual(args, inputs)
    res = rigid_projection_search(group, irreps, seed=args.seed, trials=args.trials, jobs=args.jobs)
    return Outcome(res.verdict.is_rigid, res.as_dict())


def cmd_closure(args, inputs, tol) -> Outcome:
    group = parse_group_file(args.file)
    inputs[args.file] = digest(args.file)
    irreps = decompose_regular(group, seed=args.seed)
    results = closure_check(group, irreps, seed=args.seed, trials=args.trials,
                            restrict_trivial=args.trivial_only, jobs=args.jobs)
    dims = [r.dimension for r in results]
    target = 1 if args.trivial_only else group.order
    return Outcome(all(d == target for d in dims),
                   {"dimensions": dims, "target": target, "histories": [r.history for r in results]})


def cmd_gap_cert(args, inputs, tol) -> Outcome:
    group = parse_group_file(args.file)
    inputs[args.file] = digest(args.file)
    irreps = decompose_regular(group, seed=args.seed)
    q = dual_group(group, irreps) if structure_report(group).is_perfect else None
    report = gap_certificate(group, irreps, q, seed=args.seed, trials=args.trials, jobs=args.jobs)
    if q is not None:
        report["orthogonality_residual"] = schur_orthogonality_residual(irreps)
    return Outcome(bool(report["certified"]), report)


def cmd_combine(args, inputs, tol) -> Outcome:
    graphs = [load_graph(p, tol, inputs) for p in args.graphs]
    combined = (combine_directed if args.mode == "directed" else combine_undirected)(graphs, tol)
    doc = graph_doc(combined.graph)
    doc.update(mode=args.mode, colour_degrees=combined.degrees, label_degrees=combined.label_degrees,
               degree_collisions=combined.collisions, dimension=combined.graph.dim)
    return Outcome(combined.graph.flags.is_quantum_graph, doc)


def cmd_frucht(args, inputs, tol) -> Outcome:
    _, _, q = load_dual(args, inputs)
    hopf = verify_hopf(q)
    if not hopf.passed:
        return Outcome(False, {"hopf": hopf.as_dict()})
    report = quantum_frucht_pipeline(q, tol)
    doc = report.as_dict()
    doc["hopf"] = hopf.as_dict()
    doc["graph"] = operator_to_json(report.graph.adjacency)
    flags = report.graph.flags
    return Outcome(flags.is_quantum_graph and flags.undirected and flags.loopless, doc)


def cmd_classical_frucht(args, inputs, tol) -> Outcome:
    group = parse_group_file(args.file)
    inputs[args.file] = digest(args.file)
    res = classical_frucht(group, args.mode)
    doc = res.as_dict()
    doc["graph"] = res.graph.to_json()
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(res.graph.to_dot() + "\n")
    ok = res.verified if args.verify_aut else True
    return Outcome(ok, doc)


def cmd_corresp(args, inputs, tol) -> Outcome:
    _, irreps, q = load_dual(args, inputs)
    try:
        subset = [int(s) for s in args.irreps.split(",") if s.strip()] if args.irreps else []
    except ValueError as exc:
        raise InputError(f"--irreps must be a comma-separated list of indices: {exc}") from exc
    if any(not 0 <= s < len(irreps) for s in subset):
        raise InputError(f"irrep indices must lie in 0..{len(irreps) - 1}")
    rep = isometry_check(q, subset, samples=args.samples, seed=args.seed, tol=tol)
    return Outcome(rep.passed, rep.as_dict())


COMMANDS: dict[str, Callable] = {
    "group": cmd_group,
    "irreps": cmd_irreps,
    "cayley": cmd_cayley,
    "verify": cmd_verify,
    "rigidity": cmd_rigidity,
    "rigid-search": cmd_rigid_search,
    "closure-check": cmd_closure,
    "gap-cert": cmd_gap_cert,
    "combine": cmd_combine,
    "frucht": cmd_frucht,
    "classical-frucht": cmd_classical_frucht,
    "corresp-check": cmd_corresp,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="overrides QFRUCHT_TOL")
    common.add_argument("-o", "--out", default=None, help="report path (default: standard output)")
    common.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    common.add_argument("--timing", action="store_true", help="record wall-clock time in the report")

    parser = argparse.ArgumentParser(prog="qfrucht", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qfrucht {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group", parents=[common], help="validate a group file or emit a builtin group")
    p.add_argument("file", nargs="?")
    p.add_argument("--builtin", help="Zn, Sn, An, Dn or Q8")

    p = sub.add_parser("irreps", parents=[common], help="compute irreducible representations")
    p.add_argument("file")

    dual_help = "group JSON whose dual is used"
    for name, helptext in (("cayley", "build a quantum Cayley graph"),
                           ("rigidity", "rigidity verdict for a projection")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--dual", required=True, help=dual_help)
        p.add_argument("--projection", required=True)
        p.add_argument("--irreps-file")

    p = sub.add_parser("verify", parents=[common], help="check the quantum adjacency axioms")
    p.add_argument("graph")

    p = sub.add_parser("rigid-search", parents=[common], help="search for a rigid projection")
    p.add_argument("--dual", required=True, help=dual_help)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--irreps-file")

    p = sub.add_parser("closure-check", parents=[common], help="generic-basis closure dimensions")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--trivial-only", action="store_true")

    p = sub.add_parser("gap-cert", parents=[common], help="perfect-group certificate")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=100)

    p = sub.add_parser("combine", parents=[common], help="combine regular loopless quantum graphs")
    p.add_argument("--mode", choices=("directed", "undirected"), default="undirected")
    p.add_argument("graphs", nargs="+")

    p = sub.add_parser("frucht", parents=[common], help="quantum Frucht pipeline for a group dual")
    p.add_argument("--dual", required=True, help=dual_help)
    p.add_argument("--irreps-file")

    p = sub.add_parser("classical-frucht", parents=[common], help="classical Frucht graph of a group")
    p.add_argument("file")
    p.add_argument("--mode", choices=("directed", "undirected"), default="directed")
    p.add_argument("--verify-aut", action="store_true")
    p.add_argument("--dot", help="also write the graph in DOT format")

    p = sub.add_parser("corresp-check", parents=[common], help="correspondence isometry check")
    p.add_argument("--dual", required=True, help=dual_help)
    p.add_argument("--irreps", default="", help="comma-separated irrep indices")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--irreps-file")
    return parser


def run_command(argv: Sequence[str]) -> tuple[int, dict]:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return code, {"schema_version": SCHEMA_VERSION, "version": __version__, "command": list(argv),
                      "exit_code": code, "error": "usage"}
    inputs: dict[str, str] = {}
    report = {"schema_version": SCHEMA_VERSION, "version": __version__, "command": list(argv),
              "seed": args.seed}
    start = time.perf_counter()
    try:
        tol = args.tol if args.tol is not None else default_tol()
        report["tol"] = tol
        outcome = COMMANDS[args.command](args, inputs, tol)
        code = 0 if outcome.ok else 1
        report["result"] = outcome.result
    except INPUT_ERRORS as exc:
        code = 2
        report["error"] = str(exc)
    report["inputs"] = inputs
    report["exit_code"] = code
    if args.timing:
        report["timing_s"] = time.perf_counter() - start
    try:
        write_json(report, args.out)
    except OSError as exc:
        print(f"qfrucht: cannot write report: {exc}", file=sys.stderr)
        return 2, report
    if "error" in report:
        print(f"qfrucht: error: {report['error']}", file=sys.stderr)
    return code, report


def main(argv: Sequence[str] | None = None) -> int:
    code, _ = run_command(sys.argv[1:] if argv is None else argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
