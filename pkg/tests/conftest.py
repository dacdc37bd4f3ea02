from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from rankwitness.graph import build_graph

DATA = Path(__file__).resolve().parent.parent / "data"

SIXTH = Fraction(1, 6)
OFFDIAG3 = np.array([[0, SIXTH, SIXTH], [SIXTH, 0, SIXTH], [SIXTH, SIXTH, 0]], dtype=object)
OFFDIAG3[0, 0] = OFFDIAG3[1, 1] = OFFDIAG3[2, 2] = Fraction(0)


@pytest.fixture
def offdiag3():
    return OFFDIAG3.copy()


@pytest.fixture
def offdiag3_float():
    return OFFDIAG3.astype(float)


@pytest.fixture
def data_dir():
    return DATA


def common_cause_graph(card_u=2, card_x=3, card_y=3, card_z=2, direct=False, observed_z=False):
    """Hidden U -> X, U -> Y; optionally X -> Y, and an observed Z feeding both."""
    variables = [("X", card_x, True), ("Y", card_y, True), ("U", card_u, False)]
    edges = [("U", "X"), ("U", "Y")]
    if direct:
        edges.append(("X", "Y"))
    if observed_z:
        variables.append(("Z", card_z, True))
        edges += [("Z", "X"), ("Z", "Y")]
    return build_graph(variables, edges)


def random_dag(rng, n, p=0.4, max_card=3):
    names = [f"V{i}" for i in range(n)]
    perm = rng.permutation(n)
    edges = [(names[perm[i]], names[perm[j]]) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    variables = [(nm, int(rng.integers(1, max_card + 1)), bool(rng.random() < 0.7)) for nm in names]
    return build_graph(variables, edges)


def exact_ci(joint, axes, xs, ys, zs) -> bool:
    """P(x,y,z) P(z) == P(x,z) P(y,z) for every assignment, in exact arithmetic."""
    def marg(keep):
        drop = tuple(i for i in range(len(axes)) if axes[i] not in keep)
        return joint.sum(axis=drop, keepdims=True) if drop else joint
    pxyz = marg(set(xs) | set(ys) | set(zs))
    pz = marg(set(zs)) if zs else Fraction(1)
    lhs, rhs = np.broadcast_arrays(pxyz * pz, marg(set(xs) | set(zs)) * marg(set(ys) | set(zs)))
    return bool(np.all(lhs == rhs))


# acceptance summary: one line per criterion at the end of the run
_ACCEPTANCE: list = []


def record_acceptance(criterion: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
