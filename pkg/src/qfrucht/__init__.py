"""Finite quantum graphs, quantum Cayley graphs and quantum Frucht constructions."""

__version__ = "0.1.0"

from .fingroup import FiniteGroup, Irrep, decompose_regular, group_from_generators, structure_report
from .qgroup import QGroupData, cayley_graph, dual_group, function_algebra, verify_hopf
from .qspace import LinOp, QSet, QuantumGraph, make_quantum_set, schur_product, verify_quantum_graph

__all__ = [
    "FiniteGroup",
    "Irrep",
    "LinOp",
    "QGroupData",
    "QSet",
    "QuantumGraph",
    "cayley_graph",
    "decompose_regular",
    "dual_group",
    "function_algebra",
    "group_from_generators",
    "make_quantum_set",
    "schur_product",
    "structure_report",
    "verify_hopf",
    "verify_quantum_graph",
]
