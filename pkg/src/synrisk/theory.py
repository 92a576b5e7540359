"""Mean-field theory of threshold cascades on configuration-model networks.

Two equivalent toolkits are implemented.  The tree-based recursion computes
the neighbor activation probability q as the smallest fixed point of

    q = rho0 + (1 - rho0) * sum_k (k p_k / z) * E[ F(Bin(k-1, q) / k) ]

and the mean cascade size

    rho = rho0 + (1 - rho0) * sum_k p_k * E[ F(Bin(k, q) / k) ],

where F is the response function (a step at the threshold R, or the CDF of a
random threshold).  Expanding the recursion to first and second order in q
gives the cascade conditions on (degree distribution, threshold).

The generating-function toolkit works with the vulnerable-degree moments
g0 = sum mu_k p_k, g1 = sum k mu_k p_k, g2 = sum k(k-1) mu_k p_k, where
mu_k = F(1/k) is the probability that a degree-k node activates with a
single active neighbor.  Mean vulnerable cluster size is
g0 + g1^2 / (z - g2), divergent when z <= g2, and global cascades are
possible iff z < g2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import betainc, gammaln

from .errors import ConvergenceError
from .network import DegreeModel

FIXED_POINT_TOL = 1e-10
MAX_FIXED_POINT_ITER = 100_000


@dataclass
class ResponseFunction:
    """Activation probability as a function of the active-neighbor fraction.

    ``deterministic(R)`` activates strictly above the threshold:
    F(x) = 1 if x > R else 0.  ``from_cdf`` wraps the CDF of a random
    threshold, evaluated at the active fraction; ``tabulated`` interpolates a
    sampled CDF linearly on [0, 1].
    """

    kind: str
    threshold: float | None = None
    fn: Callable | None = None

    @classmethod
    def deterministic(cls, threshold: float) -> "ResponseFunction":
        if threshold < 0:
            raise ValueError("threshold must be non-negative")
        return cls("deterministic", threshold=threshold)

    @classmethod
    def from_cdf(cls, fn: Callable) -> "ResponseFunction":
        rf = cls("cdf", fn=fn)
        rf._check_cdf()
        return rf

    @classmethod
    def tabulated(cls, xs, values) -> "ResponseFunction":
        xs = np.asarray(xs, dtype=float)
        values = np.asarray(values, dtype=float)
        if xs.size != values.size or xs.size < 2:
            raise ValueError("need matching x/value tables with >= 2 points")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("x grid must be strictly increasing")
        rf = cls("cdf", fn=lambda x: np.interp(x, xs, values))
        rf._check_cdf()
        return rf

    def _check_cdf(self):
        probe = np.asarray(self.fn(np.linspace(0.0, 1.0, 257)), dtype=float)
        if np.any(probe < -1e-12) or np.any(probe > 1 + 1e-12):
            raise ValueError("response function must map into [0, 1]")
        if np.any(np.diff(probe) < -1e-12):
            raise ValueError("response function must be nondecreasing")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "deterministic":
            return (x > self.threshold).astype(float)
        # clip float dust only; range violations are caught at construction
        return np.clip(np.asarray(self.fn(x), dtype=float), 0.0, 1.0)


@dataclass
class TheoryResult:
    q_star: float
    rho: float
    g0: float
    g1: float
    g2: float
    mean_cluster_size: float  # inf marks the divergent (cascade) regime
    conditions: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# binomial-mixture kernels

# S(q) and rho(q) are binomial mixtures over the (truncated) degree
# distribution.  For a deterministic threshold they reduce to binomial tail
# probabilities, evaluated through the regularized incomplete beta function;
# the general CDF case multiplies an explicit pmf matrix.


class _CascadeKernel:
    def __init__(self, model: DegreeModel, response: ResponseFunction):
        self.model = model
        self.response = response
        self.z = model.mean_degree
        k_max = model.k_max
        ks = np.arange(1, k_max + 1)
        self.ks = ks
        self.pk = model.p[1:]
        self.w = ks * self.pk / self.z  # excess-degree weights

        m_excess = np.arange(k_max)          # m = 0..k-1 for row k
        m_full = np.arange(k_max + 1)        # m = 0..k   for row k
        self.F_excess = response(m_excess[None, :] / ks[:, None])
        self.F_excess[m_excess[None, :] > (ks - 1)[:, None]] = 0.0
        self.F_full = response(m_full[None, :] / ks[:, None])
        self.F_full[m_full[None, :] > ks[:, None]] = 0.0

        if response.kind == "deterministic":
            # first activating count per degree; k+1 means "never activates"
            self.m_excess_min = _first_one(self.F_excess, limit=ks - 1)
            self.m_full_min = _first_one(self.F_full, limit=ks)
        else:
            r = (ks - 1)[:, None]
            self.logc_excess = _log_binom(r, m_excess[None, :])
            self.logc_full = _log_binom(ks[:, None], m_full[None, :])

    def s_value(self, q: float) -> float:
        """Excess-degree activation mixture, the RHS kernel of the recursion."""
        if self.response.kind == "deterministic":
            tails = _binom_tail(self.ks - 1, self.m_excess_min, q)
            return float(np.dot(self.w, tails))
        pmf = _binom_pmf(self.logc_excess, (self.ks - 1)[:, None],
                         np.arange(self.model.k_max)[None, :], q)
        return float(np.sum(self.w[:, None] * pmf * self.F_excess))

    def rho_value(self, q: float, rho0: float) -> float:
        if self.response.kind == "deterministic":
            tails = _binom_tail(self.ks, self.m_full_min, q)
            mix = float(np.dot(self.pk, tails))
        else:
            pmf = _binom_pmf(self.logc_full, self.ks[:, None],
                             np.arange(self.model.k_max + 1)[None, :], q)
            mix = float(np.sum(self.pk[:, None] * pmf * self.F_full))
        return rho0 + (1 - rho0) * mix


def _first_one(fmat: np.ndarray, limit: np.ndarray) -> np.ndarray:
    hot = fmat >= 0.5
    first = np.argmax(hot, axis=1)
    none = ~hot.any(axis=1)
    first[none] = limit[none] + 1
    return first


def _log_binom(n, m):
    out = gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
    return np.where(m <= n, out, -np.inf)


def _binom_pmf(logc, n, m, q):
    if q <= 0:
        return (m == 0).astype(float) * (m <= n)
    if q >= 1:
        return (m == n).astype(float)
    logp = logc + m * np.log(q) + (n - m) * np.log1p(-q)
    return np.exp(logp)


def _binom_tail(n: np.ndarray, j: np.ndarray, q: float) -> np.ndarray:
    """P[Bin(n, q) >= j] for vectors n, j (j may exceed n: probability 0)."""
    out = np.zeros(n.shape, dtype=float)
    out[j <= 0] = 1.0
    inside = (j >= 1) & (j <= n)
    if np.any(inside):
        if q <= 0:
            out[inside] = 0.0
        elif q >= 1:
            out[inside] = 1.0
        else:
            out[inside] = betainc(j[inside], n[inside] - j[inside] + 1, q)
    return out


# ---------------------------------------------------------------------------
# tree-based recursion


def solve_mean_cascade_size(model: DegreeModel, response: ResponseFunction,
                            rho0: float, tol: float = FIXED_POINT_TOL,
                            max_iter: int = MAX_FIXED_POINT_ITER
                            ) -> TheoryResult:
    """Smallest fixed point of the activation recursion and the cascade size.

    The map q -> rho0 + (1-rho0) S(q) is monotone, so iterating from
    q = rho0 converges to the smallest fixed point above the seed fraction.
    The returned result also carries the vulnerable moments and all three
    cascade conditions for the same model and response.
    """
    if not 0 <= rho0 <= 1:
        raise ValueError("seed fraction must lie in [0, 1]")
    kernel = _CascadeKernel(model, response)
    q = rho0
    for _ in range(max_iter):
        nxt = min(1.0, rho0 + (1 - rho0) * kernel.s_value(q))
        step = abs(nxt - q)
        q = nxt
        if step <= tol:
            break
    else:
        raise ConvergenceError("activation recursion did not converge",
                               residual=step, iterations=max_iter)
    rho = kernel.rho_value(q, rho0)
    g0, g1, g2 = vulnerable_generating_moments(model, response)
    z = model.mean_degree
    return TheoryResult(
        q_star=float(q),
        rho=float(min(1.0, rho)),
        g0=g0, g1=g1, g2=g2,
        mean_cluster_size=mean_vulnerable_cluster_size(model, response),
        conditions={
            "first_order": first_order_cascade_condition(model, response, rho0),
            "second_order": second_order_cascade_condition(model, response, rho0),
            "watts": watts_cascade_condition(model, response),
        },
    )


def _series_coefficients(model: DegreeModel, response: ResponseFunction
                         ) -> tuple[float, float, float]:
    """First three Taylor coefficients of the recursion kernel at q = 0."""
    k = np.arange(1, model.k_max + 1, dtype=float)
    w = k * model.p[1:] / model.mean_degree
    f0 = response(np.zeros_like(k))
    f1 = np.where(k >= 2, response(1.0 / k), 0.0)
    f2 = np.where(k >= 3, response(2.0 / k), 0.0)
    c0 = float(np.dot(w, f0))
    c1 = float(np.dot(w * (k - 1), np.where(k >= 2, f1 - f0, 0.0)))
    c2 = float(np.dot(w * (k - 1) * (k - 2) / 2.0,
                      np.where(k >= 3, f2 - 2 * f1 + f0, 0.0)))
    return c0, c1, c2


def first_order_cascade_condition(model: DegreeModel,
                                  response: ResponseFunction,
                                  rho0: float = 0.0) -> tuple[bool, float]:
    """Linearized instability of the recursion at q = 0.

    Returns the slope (1-rho0) * sum_k k(k-1)/z p_k [F(1/k) - F(0)] and
    whether it exceeds one.
    """
    if model.mean_degree <= 0:
        raise ValueError("mean degree must be positive")
    _, c1, _ = _series_coefficients(model, response)
    value = (1 - rho0) * c1
    return value > 1.0, value


def second_order_cascade_condition(model: DegreeModel,
                                   response: ResponseFunction,
                                   rho0: float = 0.0) -> tuple[bool, float]:
    """Quadratic refinement of the cascade condition near q = 0.

    Approximating the recursion kernel to second order, the self-consistency
    equation reads a q^2 + b q + c = 0 with a = (1-rho0) C2,
    b = (1-rho0) C1 - 1 and c = rho0 + (1-rho0) C0.  Cascades are possible
    iff that quadratic has no root near the origin, which would pin the
    iteration to a vanishing activation level: with b >= 0 the map already
    expands at q = 0 (first-order escape), otherwise escape requires the
    upward-curving quadratic to clear the axis, i.e. a > 0 with a negative
    discriminant.  Roots far from the origin lie outside the expansion's
    validity and are ignored.  The reported scalar is the seed-corrected
    discriminant

        (C1-1)^2 - 4 C0 C2 + 2 rho0 (C1 - C1^2 - 2 C2 + 4 C0 C2),

    whose sign decides the boundary cases.
    """
    c0, c1, c2 = _series_coefficients(model, response)
    disc = ((c1 - 1.0) ** 2 - 4.0 * c0 * c2
            + 2.0 * rho0 * (c1 - c1**2 - 2.0 * c2 + 4.0 * c0 * c2))
    a = (1 - rho0) * c2
    b = (1 - rho0) * c1 - 1.0
    c = rho0 + (1 - rho0) * c0
    if b >= 0.0:
        possible = True
    elif a > 0.0:
        possible = b * b - 4.0 * a * c < 0.0
    else:
        # downward or flat curvature with b < 0: a root sits at ~ c/|b|
        possible = False
    return possible, disc


# ---------------------------------------------------------------------------
# generating-function toolkit


def vulnerable_generating_moments(model: DegreeModel,
                                  response: ResponseFunction
                                  ) -> tuple[float, float, float]:
    """Moments of the vulnerable-degree generating function at 1.

    mu_k = F(1/k) for k >= 1; degree-0 nodes count as vulnerable by
    convention (mu_0 = 1) but carry zero weight in the k-weighted sums.
    """
    k = model.degrees.astype(float)
    mu = np.empty_like(k)
    mu[0] = 1.0
    mu[1:] = response(1.0 / k[1:])
    weighted = mu * model.p
    g0 = float(weighted.sum())
    g1 = float(np.dot(k, weighted))
    g2 = float(np.dot(k * (k - 1), weighted))
    return g0, g1, g2


def mean_vulnerable_cluster_size(model: DegreeModel,
                                 response: ResponseFunction) -> float:
    """Average vulnerable cluster size g0 + g1^2/(z - g2); inf if z <= g2."""
    g0, g1, g2 = vulnerable_generating_moments(model, response)
    z = model.mean_degree
    if z <= g2:
        return np.inf
    return g0 + g1**2 / (z - g2)


def watts_cascade_condition(model: DegreeModel, response: ResponseFunction
                            ) -> tuple[bool, float]:
    """Divergence criterion for vulnerable clusters: z < g2; margin g2 - z."""
    _, _, g2 = vulnerable_generating_moments(model, response)
    margin = g2 - model.mean_degree
    return margin > 0.0, margin


# ---------------------------------------------------------------------------
# cascade window location


def find_cascade_window(model_factory: Callable[[float], DegreeModel],
                        response: ResponseFunction, z_min: float,
                        z_max: float, criterion: str = "watts",
                        rho0: float = 0.0, grid: int = 200,
                        xtol: float = 1e-6) -> list[float]:
    """Boundaries in z where the chosen cascade condition flips.

    Scans a grid of mean degrees, then bisects every sign change of the
    condition indicator.  Returns the sorted boundary list (normally two
    values, the lower and upper edge of the cascade window; empty if the
    condition never holds).
    """

    def holds(z: float) -> bool:
        model = model_factory(z)
        if criterion == "watts":
            return watts_cascade_condition(model, response)[0]
        if criterion == "first":
            return first_order_cascade_condition(model, response, rho0)[0]
        if criterion == "second":
            return second_order_cascade_condition(model, response, rho0)[0]
        raise ValueError(f"unknown criterion {criterion!r}")

    zs = np.linspace(z_min, z_max, grid)
    flags = [holds(z) for z in zs]
    roots = []
    for lo, hi, f_lo, f_hi in zip(zs[:-1], zs[1:], flags[:-1], flags[1:]):
        if f_lo == f_hi:
            continue
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            if holds(mid) == f_lo:
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return roots
