import os

import numpy as np
import pytest

from fodeabm import FractionalProblem
from fodeabm.systems import rhs_constant, rhs_hindmarsh_rose, rhs_linear, rhs_power_law


def pytest_addoption(parser):
    group = parser.getgroup("fodeabm acceptance")
    group.addoption(
        "--speedup-block-min",
        type=float,
        default=1.5,
        help="block-strategy speedup threshold (machine dependent)",
    )
    group.addoption(
        "--speedup-reduction-min",
        type=float,
        default=1.8,
        help="reduction-strategy speedup threshold (machine dependent)",
    )
    group.addoption(
        "--speedup-workers",
        type=int,
        default=min(4, os.cpu_count() or 1),
        help="worker count for the speedup criterion (default: min(4, cores))",
    )
    group.addoption(
        "--speedup-steps",
        type=int,
        default=50000,
        help="N for the speedup criterion",
    )


def sup_rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    """Sup-norm relative deviation with a tiny floor against zero entries."""
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-30)))


def constant_problem(value=(0.0,), y0=(3.0,), alpha=0.5, t_end=1.0):
    value = np.asarray(value, dtype=float)
    return FractionalProblem(
        alpha=alpha, dim=len(value), rhs=rhs_constant(value), y0=y0, t_end=t_end
    )


def power_problem(alpha=0.5, beta=2.0, t_end=1.0):
    return FractionalProblem(
        alpha=alpha, dim=1, rhs=rhs_power_law(alpha, beta), y0=[0.0], t_end=t_end
    )


def linear_problem(alpha=0.5, lam=-1.0, y0=(1.0,), t_end=1.0):
    y0 = np.asarray(y0, dtype=float)
    return FractionalProblem(
        alpha=alpha, dim=len(y0), rhs=rhs_linear(lam), y0=y0, t_end=t_end
    )


def hr_problem(alpha=0.9, t_end=40.0, y0=(0.1, 0.2, 0.2)):
    return FractionalProblem(
        alpha=alpha, dim=3, rhs=rhs_hindmarsh_rose(), y0=y0, t_end=t_end
    )


@pytest.fixture
def make_constant():
    return constant_problem


@pytest.fixture
def make_power():
    return power_problem


@pytest.fixture
def make_linear():
    return linear_problem


@pytest.fixture
def make_hr():
    return hr_problem
