"""Sequential predictor-corrector solver; the reference for both parallel strategies.

One step advances y_n -> y_{n+1} in PECE form:

    predict   yP = y0 + h^alpha * sum_{k=0..n} b_{n-k} f_k
    evaluate  fP = f(t_{n+1}, yP)
    correct   y  = y0 + h^alpha * (c_n f_0 + sum_{k=1..n} a_{n-k} f_k
                                   + fP / Gamma(alpha+2))
    evaluate  f_{n+1} = f(t_{n+1}, y)

The history sums run over every previous step (ascending k), which is what
makes the total cost O(N^2).  ``f_cache`` keeps f at accepted states only;
the predictor evaluation fP is transient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._threads import single_threaded_blas
from .core import (
    FractionalProblem,
    GridSpec,
    SolverStepError,
    WeightTable,
    _all_finite,
    precompute_weights,
)

__all__ = ["Trajectory", "step_predictor", "step_corrector", "solve_serial"]


@dataclass(frozen=True)
class Trajectory:
    """Computed states y_0..y_N on a uniform grid, with the rhs cache.

    Row n of ``states`` is y_n; row n of ``f_cache`` is f(t_n, y_n) evaluated
    at the accepted state.  Both arrays are read-only.
    """

    grid: GridSpec
    states: np.ndarray
    f_cache: np.ndarray

    def __post_init__(self):
        n = self.grid.n_steps
        if self.states.shape != self.f_cache.shape or self.states.shape[0] != n + 1:
            raise ValueError(
                f"states/f_cache must both have shape ({n + 1}, d), got "
                f"{self.states.shape} and {self.f_cache.shape}"
            )
        for arr in (self.states, self.f_cache):
            arr.setflags(write=False)

    @property
    def t(self) -> np.ndarray:
        return self.grid.times()

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def _history_transposed(traj: Trajectory, n: int) -> np.ndarray:
    """Rows 0..n of the rhs cache in (d, n+1) contiguous layout."""
    if not 0 <= n < traj.grid.n_steps:
        raise ValueError(f"step index n={n} outside [0, {traj.grid.n_steps})")
    return np.ascontiguousarray(traj.f_cache[: n + 1].T)


def step_predictor(
    problem: FractionalProblem, weights: WeightTable, traj: Trajectory, n: int
) -> np.ndarray:
    """Predicted state yP_{n+1} from the completed prefix y_0..y_n."""
    fT = _history_transposed(traj, n)
    N = weights.n_max
    br = weights.b[::-1]
    ha = traj.grid.h ** problem.alpha
    S = np.dot(fT, np.ascontiguousarray(br[N - n : N + 1]))
    return problem.y0 + ha * S


def step_corrector(
    problem: FractionalProblem,
    weights: WeightTable,
    traj: Trajectory,
    n: int,
    y_pred: np.ndarray,
) -> np.ndarray:
    """Corrected state y_{n+1} given a predicted state for t_{n+1}."""
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if not np.isfinite(y_pred).all():
        raise SolverStepError("predicted state is non-finite", step=n, t=(n + 1) * traj.grid.h)
    fT = _history_transposed(traj, n)
    N = weights.n_max
    ar = weights.a[::-1]
    h = traj.grid.h
    t1 = (n + 1) * h
    ha = h ** problem.alpha
    ig = 1.0 / math.gamma(problem.alpha + 2.0)
    fP = np.asarray(problem.rhs(t1, y_pred), dtype=np.float64).reshape(-1)
    if not np.isfinite(fP).all():
        raise SolverStepError("rhs returned a non-finite value", step=n, t=t1)
    acc = weights.c[n] * fT[:, 0]
    if n >= 1:
        acc += np.dot(fT[:, 1 : n + 1], np.ascontiguousarray(ar[N - n + 1 : N + 1]))
    acc += ig * fP
    return problem.y0 + ha * acc


def solve_serial(problem: FractionalProblem, grid: GridSpec) -> Trajectory:
    """Integrate the problem over the full grid, one corrector pass per step.

    Deterministic: identical inputs give bitwise-identical trajectories.
    Raises :class:`SolverStepError` (with the failing step index and time) as
    soon as any rhs evaluation produces a non-finite value.
    """
    N = grid.n_steps
    d = problem.dim
    h = grid.h
    alpha = problem.alpha
    if not grid.spans(problem.t_end):
        raise ValueError(
            f"grid (h={grid.h!r}, N={N}) does not span t_end={problem.t_end!r}"
        )

    table = precompute_weights(alpha, N)
    # reversed copies give contiguous forward slices: br[N-n:] == b_n..b_0
    br = table.b[::-1].copy()
    ar = table.a[::-1].copy()
    c = table.c
    ha = h ** alpha
    ig = 1.0 / math.gamma(alpha + 2.0)

    Y = np.empty((N + 1, d))
    fT = np.empty((d, N + 1))
    y0v = problem.y0
    Y[0] = y0v
    fT[:, 0] = problem.eval_rhs0()
    f0 = fT[:, 0].copy()
    fbuf = np.empty(d)
    rhs = problem.rhs

    n = 0
    try:
        with single_threaded_blas():
            for n in range(N):
                t1 = (n + 1) * h
                # predicted state, built in place on the history-sum buffer
                yP = np.dot(fT[:, : n + 1], br[N - n : N + 1])
                yP *= ha
                yP += y0v
                fbuf[:] = rhs(t1, yP)
                if not _all_finite(fbuf):
                    raise SolverStepError("rhs returned a non-finite value", step=n, t=t1)
                # corrected state: c_n f_0, then the interior history, then fP
                y1 = c[n] * f0
                if n >= 1:
                    y1 += np.dot(fT[:, 1 : n + 1], ar[N - n + 1 : N + 1])
                y1 += ig * fbuf
                y1 *= ha
                y1 += y0v
                fbuf[:] = rhs(t1, y1)
                if not _all_finite(fbuf):
                    raise SolverStepError("rhs returned a non-finite value", step=n, t=t1)
                Y[n + 1] = y1
                fT[:, n + 1] = fbuf
    except (ArithmeticError, ValueError) as exc:
        raise SolverStepError(
            f"rhs evaluation failed: {exc}", step=n, t=(n + 1) * h
        ) from exc

    return Trajectory(grid=grid, states=Y, f_cache=np.ascontiguousarray(fT.T))
