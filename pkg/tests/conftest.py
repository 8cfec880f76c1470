import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import paper_qw  # noqa: E402

from ddpc.behavior import build_hankel_representation, generate_pe_input  # noqa: E402
from ddpc.descriptor import simulate  # noqa: E402
from ddpc.presets import PAPER_DATA_LENGTH, PAPER_HORIZON  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def qw_paper():
    return paper_qw()


def paper_data(qw, T=PAPER_DATA_LENGTH, order=None, seed=0):
    w = qw.q + qw.s - 1
    order = PAPER_HORIZON + 2 * w if order is None else order
    u = generate_pe_input(T, qw.m, order, seed=seed)
    tail = np.random.default_rng(seed + 1000).uniform(-1, 1, (qw.s - 1, qw.m))
    z1 = np.random.default_rng(seed + 2000).uniform(-1, 1, qw.q)
    return simulate(qw, z1, np.vstack([u, tail])).manifest()


@pytest.fixture(scope="session")
def data_paper(qw_paper):
    return paper_data(qw_paper)


@pytest.fixture(scope="session")
def rep_ocp(qw_paper, data_paper):
    """Depth ``L + q + s - 1`` representation for the OCP with ``L = 20``."""
    w = qw_paper.q + qw_paper.s - 1
    return build_hankel_representation(data_paper, PAPER_HORIZON + w, qw_paper.s)


@pytest.fixture(scope="session")
def rep_ocp_independent(qw_paper):
    w = qw_paper.q + qw_paper.s - 1
    return build_hankel_representation(paper_data(qw_paper, seed=7), PAPER_HORIZON + w, qw_paper.s)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
