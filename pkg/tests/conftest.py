from functools import lru_cache

import numpy as np
import pytest

from qfrucht.fingroup import (alternating_group, cyclic_group, decompose_regular, dihedral_group,
                              direct_product, quaternion_group, symmetric_group)
from qfrucht.qgroup import dual_group

BUILDERS = {
    "Z2": lambda: cyclic_group(2),
    "Z3": lambda: cyclic_group(3),
    "Z4": lambda: cyclic_group(4),
    "Z5": lambda: cyclic_group(5),
    "S3": lambda: symmetric_group(3),
    "Q8": quaternion_group,
    "D4": lambda: dihedral_group(4),
    "S4": lambda: symmetric_group(4),
    "A5": lambda: alternating_group(5),
    "Z3xS3": lambda: direct_product(cyclic_group(3), symmetric_group(3)),
}


@lru_cache(maxsize=None)
def group(name):
    return BUILDERS[name]()


@lru_cache(maxsize=None)
def irreps(name):
    return tuple(decompose_regular(group(name), seed=0))


@lru_cache(maxsize=None)
def dual(name):
    return dual_group(group(name), irreps(name))


def element(g, label):
    return next(i for i in range(g.order) if g.label(i) == label)


def random_projection_blocks(space, rng, ranks=None):
    """A random orthogonal projection in the algebra, blockwise."""
    blocks = []
    for k, n in enumerate(space.block_sizes):
        r = rng.integers(0, n + 1) if ranks is None else ranks[k]
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, _ = np.linalg.qr(z)
        v = q[:, :r]
        blocks.append(v @ v.conj().T)
    return space.from_blocks(blocks)


# acceptance bookkeeping: one line per criterion in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
