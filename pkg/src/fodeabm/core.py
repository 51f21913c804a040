"""Problem data model and quadrature weights for the fractional ABM scheme.

The solver integrates D^alpha y = f(t, y) on [0, T] for a Caputo derivative of
order alpha in (0, 1].  Everything downstream consumes three weight sequences
(predictor weights ``b``, corrector interior weights ``a``, corrector
first-node weights ``c``) that depend only on alpha and the step index, so
they are precomputed once per solve as flat arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "FractionalProblem",
    "GridSpec",
    "WeightTable",
    "SolverStepError",
    "StrategyTimeoutError",
    "gamma",
    "predictor_weight",
    "corrector_weight_a",
    "corrector_weight_c",
    "precompute_weights",
]

RhsFunction = Callable[[float, np.ndarray], "np.ndarray | tuple | list"]


class SolverStepError(RuntimeError):
    """A time step produced a non-finite value or a failing rhs evaluation.

    Carries the failing step index ``step`` and grid time ``t``.
    """

    def __init__(self, message: str, step: int, t: float):
        super().__init__(f"{message} (step {step}, t={t:.17g})")
        self.step = step
        self.t = t


class StrategyTimeoutError(RuntimeError):
    """A parallel strategy made no progress before its watchdog expired."""


def _all_finite(vec: np.ndarray) -> bool:
    """Fast non-finite detection for small vectors.

    The sum of finite values is only non-finite on overflow, so a finite sum
    proves the vector finite; the rare non-finite sum is confirmed with the
    exact elementwise check.
    """
    if math.isfinite(vec.sum()):
        return True
    return bool(np.isfinite(vec).all())


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return alpha


def gamma(x: float) -> float:
    """Gamma function for positive real x (relative error well under 1e-13)."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"gamma requires finite x > 0, got {x!r}")
    return math.gamma(x)


def predictor_weight(alpha: float, n: int) -> float:
    """Predictor weight b_n = ((n+1)^alpha - n^alpha) / Gamma(alpha+1).

    At alpha = 1 this reduces to the classical rectangle-rule weight 1.
    """
    alpha = _check_alpha(alpha)
    if n < 0:
        raise ValueError("n must be non-negative")
    # evaluated through a length-1 array so the result is bitwise identical
    # to the bulk fill (numpy's vector pow differs from scalar pow by 1 ulp)
    nv = np.array([float(n)])
    b = ((nv + 1.0) ** alpha - nv ** alpha) / math.gamma(alpha + 1.0)
    return float(b[0])


def corrector_weight_a(alpha: float, n: int) -> float:
    """Interior corrector weight
    a_n = ((n+2)^(alpha+1) - 2(n+1)^(alpha+1) + n^(alpha+1)) / Gamma(alpha+2).
    """
    alpha = _check_alpha(alpha)
    if n < 0:
        raise ValueError("n must be non-negative")
    nv = np.array([float(n)])
    p = alpha + 1.0
    a = ((nv + 2.0) ** p - 2.0 * (nv + 1.0) ** p + nv ** p) / math.gamma(alpha + 2.0)
    return float(a[0])


def corrector_weight_c(alpha: float, n: int) -> float:
    """First-node corrector weight
    c_n = (n^(alpha+1) - (n - alpha)(n+1)^alpha) / Gamma(alpha+2).

    c_0 = alpha / Gamma(alpha+2) exactly.
    """
    alpha = _check_alpha(alpha)
    if n < 0:
        raise ValueError("n must be non-negative")
    nv = np.array([float(n)])
    p = alpha + 1.0
    c = (nv ** p - (nv - alpha) * (nv + 1.0) ** alpha) / math.gamma(alpha + 2.0)
    return float(c[0])


@dataclass(frozen=True)
class WeightTable:
    """Precomputed weight arrays b, a, c for indices 0..N."""

    alpha: float
    b: np.ndarray
    a: np.ndarray
    c: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.b) - 1


def precompute_weights(alpha: float, n_steps: int) -> WeightTable:
    """Fill a :class:`WeightTable` for n = 0..n_steps.

    Each entry is bitwise identical to the corresponding single-call weight
    function (both paths evaluate the same libm ``pow``).  The fill is a
    vectorised O(N) pass; entries are independent of one another.
    """
    alpha = _check_alpha(alpha)
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    n = np.arange(n_steps + 1, dtype=np.float64)
    ga1 = math.gamma(alpha + 1.0)
    ga2 = math.gamma(alpha + 2.0)
    p = alpha + 1.0
    b = ((n + 1.0) ** alpha - n ** alpha) / ga1
    a = ((n + 2.0) ** p - 2.0 * (n + 1.0) ** p + n ** p) / ga2
    c = (n ** p - (n - alpha) * (n + 1.0) ** alpha) / ga2
    for arr in (b, a, c):
        arr.setflags(write=False)
    return WeightTable(alpha=alpha, b=b, a=a, c=c)


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid with N steps of size h; grid point t_n = n*h."""

    n_steps: int
    h: float

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise ValueError("n_steps must be >= 1")
        if not math.isfinite(self.h) or self.h <= 0.0:
            raise ValueError(f"step size must be finite and positive, got {self.h!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_horizon(cls, t_end: float, n_steps: int) -> "GridSpec":
        n_steps = int(n_steps)
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        return cls(n_steps=n_steps, h=float(t_end) / n_steps)

    def times(self) -> np.ndarray:
        """All grid points t_0..t_N."""
        return np.arange(self.n_steps + 1, dtype=np.float64) * self.h

    def spans(self, t_end: float, rtol: float = 1e-12) -> bool:
        """True when h*N reproduces t_end to within roundoff."""
        return abs(self.h * self.n_steps - t_end) <= rtol * abs(t_end)


@dataclass(frozen=True)
class FractionalProblem:
    """An initial value problem D^alpha y = f(t, y), y(0) = y0, on [0, t_end].

    alpha is restricted to (0, 1], so the single initial value y0 is the only
    initial datum needed.  ``rhs(t, y)`` must return ``dim`` finite values;
    the shape is validated on the first evaluation of each solve.
    """

    alpha: float
    dim: int
    rhs: RhsFunction
    y0: np.ndarray = field(repr=False)
    t_end: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        object.__setattr__(self, "alpha", float(self.alpha))
        dim = int(self.dim)
        if dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "dim", dim)
        y0 = np.array(self.y0, dtype=np.float64).reshape(-1)
        if y0.shape != (dim,):
            raise ValueError(f"y0 must have exactly {dim} entries, got shape {y0.shape}")
        if not np.isfinite(y0).all():
            raise ValueError("y0 must be finite")
        y0.setflags(write=False)
        object.__setattr__(self, "y0", y0)
        t_end = float(self.t_end)
        if not math.isfinite(t_end) or t_end <= 0.0:
            raise ValueError(f"t_end must be finite and positive, got {t_end!r}")
        object.__setattr__(self, "t_end", t_end)

    def grid(self, n_steps: int) -> GridSpec:
        """Uniform grid over this problem's horizon."""
        return GridSpec.from_horizon(self.t_end, n_steps)

    def eval_rhs0(self) -> np.ndarray:
        """Evaluate f(0, y0), validating the rhs output shape and finiteness."""
        raw = self.rhs(0.0, self.y0)
        f0 = np.asarray(raw, dtype=np.float64).reshape(-1)
        if f0.shape != (self.dim,):
            raise ValueError(
                f"rhs returned {f0.shape[0]} values, expected {self.dim}"
            )
        if not np.isfinite(f0).all():
            raise SolverStepError("rhs returned a non-finite value", step=0, t=0.0)
        return f0
