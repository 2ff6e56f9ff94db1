"""Shared fixtures: the worked examples used across the test modules.

"oscillator example": the 2D reversible oscillator with involution
R = diag(-1, 1) and nilpotent Floquet matrix [[0, 1], [0, 0]].

"coupled-planes example": the 4D two-plane family
    Omega(mu) = [[0, -(1+mu1), 1, 0],
                 [1+mu1, 0, 0, 1],
                 [-mu2, 0, 0, -(1+mu1)],
                 [0, -mu2, 1+mu1, 0]]
with involution R = diag(1, -1, -1, 1), eigenvalues
+-i(1+mu1) +- sqrt(-mu2), and its 2:1 co-rotating normal form
Omega_hat(mu) = Omega(mu) - J_rot with J_rot = diag(J2, J2).
"""

import numpy as np
import pytest

from kamforge.revlin import (MINUS, ReversingStructure, StructuredMatrix)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


# -- acceptance reporting --------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


# -- oscillator example ----------------------------------------------------

@pytest.fixture
def osc_structure():
    return ReversingStructure(np.diag([-1.0, 1.0]))


@pytest.fixture
def osc_Omega(osc_structure):
    return StructuredMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]),
                            MINUS, osc_structure)


# -- coupled-planes example ------------------------------------------------

def coupled_Omega_entries(mu1: float, mu2: float) -> np.ndarray:
    a = 1.0 + mu1
    return np.array([[0.0, -a, 1.0, 0.0],
                     [a, 0.0, 0.0, 1.0],
                     [-mu2, 0.0, 0.0, -a],
                     [0.0, -mu2, a, 0.0]])


def coupled_J_rot() -> np.ndarray:
    return np.kron(np.eye(2), J2)


def coupled_Omega_hat_entries(mu1: float, mu2: float) -> np.ndarray:
    return coupled_Omega_entries(mu1, mu2) - coupled_J_rot()


@pytest.fixture
def coupled_structure():
    return ReversingStructure(np.diag([1.0, -1.0, -1.0, 1.0]))


@pytest.fixture
def coupled_Omega0(coupled_structure):
    return StructuredMatrix(coupled_Omega_entries(0.0, 0.0),
                            MINUS, coupled_structure)


@pytest.fixture
def coupled_Omega_hat0(coupled_structure):
    return StructuredMatrix(coupled_Omega_hat_entries(0.0, 0.0),
                            MINUS, coupled_structure)


def span_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Largest principal-angle sine between the column spans of A and B
    (0 iff equal subspaces of equal dimension)."""
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    resid = qb - qa @ (qa.T @ qb)
    return float(np.linalg.norm(resid, 2))
