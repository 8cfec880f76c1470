"""Named systems and experiment settings."""

import numpy as np

from .descriptor import DescriptorSystem

# 4 states, 1 input, 4 outputs; slow and fast parts both of dimension 2, index 2.
PAPER_E = np.array([[0, 0, 1, 0], [1, 2, 0, 2], [2, 3, 1, 3], [1, 2, 0, 2]], dtype=float)
PAPER_A = np.array([[1, 1, 0, 2], [0, 2, 1, 1], [1, 4, 2, 3], [-1, 1, 1, 0]], dtype=float)
PAPER_B = np.array([[-1], [2], [2], [3]], dtype=float)
PAPER_C = np.array([[1, 2, 1, 2], [0, 1, 0, 1], [1, 2, 1, 1], [2, 2, 1, 2]], dtype=float)
PAPER_D = np.zeros((4, 1))

# Published transformation pair for the system above.
PAPER_P = np.array([[0, -1, 0, 1], [-1, 0, 1, 1], [1, 0, 0, -1], [1, 1, -1, -1]], dtype=float)
PAPER_S = np.array([[0, -1, 1, 0], [1, 2, -1, 0], [-1, -1, 1, 0], [0, 1, 0, -1]], dtype=float)

PAPER_HORIZON = 20
# The published data length (30) is below the (m+1)*26-1 = 51 samples that
# persistent excitation of order 26 needs for a single input.
PAPER_PUBLISHED_DATA_LENGTH = 30
PAPER_DATA_LENGTH = 60
PAPER_PRIMING_STEPS = 10
PAPER_TOTAL_STEPS = 60
PAPER_SCHEDULE = (
    (10, np.zeros(1), np.array([20.0, 0.0, 0.0, 20.0])),
    (30, np.zeros(1), np.array([-10.0, 0.0, 0.0, -10.0])),
)


def paper_system():
    return DescriptorSystem(PAPER_E, PAPER_A, PAPER_B, PAPER_C, PAPER_D)
