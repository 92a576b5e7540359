"""Clearing payment vectors for networks of bilateral obligations.

Given a liabilities matrix L (entry L_ij = amount bank i owes bank j) and an
external cash-flow vector e, the clearing vector p solves, bank by bank,

    p_i = min{ e_i + sum_j Pi_ji p_j,  pbar_i }

where pbar_i = sum_j L_ij are total obligations and Pi_ij = L_ij / pbar_i the
relative liabilities.  The discounted variant applies haircuts alpha on
external and beta on interbank assets of insolvent banks:

    p_i = pbar_i                                if e_i + sum_j Pi_ji p_j >= pbar_i
        = alpha e_i + beta sum_j Pi_ji p_j      otherwise.

Both are solved by monotone Picard iteration from p = pbar, which converges
to the greatest clearing vector; iteration from p = 0 gives the least one,
and the two agree whenever every bank has strictly positive equity.  A
fictitious-default solver (freeze the default set, solve the linear system,
update the set) is provided as a cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

DEFAULT_TOL = 1e-9
MAX_ITERATIONS = 1_000_000
# iterate until steps sit three decades below the contract tolerance: the
# geometric tail of the iteration then keeps the fixed-point residual and the
# above/below agreement within tol even for slowly contracting default blocks
STOP_SAFETY = 1e-3


@dataclass
class FinancialSystem:
    """Nominal liabilities matrix plus external cash flows.

    ``L[i, j]`` is what bank i owes bank j; the diagonal is zero and all
    entries non-negative, as is ``e``.  External liabilities are modeled by
    an extra sink node (see :func:`add_external_sink`), never by negative e.
    """

    L: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        self.e = np.asarray(self.e, dtype=float)

    @property
    def n(self) -> int:
        return self.e.size

    def validate(self):
        if self.L.shape != (self.n, self.n):
            raise ValueError("L must be n x n with n = len(e)")
        if np.any(self.L < 0):
            raise ValueError("liabilities must be non-negative")
        if np.any(np.diag(self.L) != 0):
            raise ValueError("banks cannot owe themselves (zero diagonal)")
        if np.any(self.e < 0):
            raise ValueError("external cash flow must be non-negative; "
                             "model external debt via a sink node")
        return self

    @classmethod
    def from_json(cls, text: str) -> "FinancialSystem":
        data = json.loads(text)
        return cls(np.array(data["L"], dtype=float),
                   np.array(data["e"], dtype=float)).validate()

    def to_json(self) -> str:
        return json.dumps({"e": self.e.tolist(), "L": self.L.tolist()})


def add_external_sink(system: FinancialSystem,
                      external_liabilities) -> FinancialSystem:
    """Append a sink node absorbing each bank's external debt.

    The sink has zero cash flow and no obligations, so it never defaults and
    makes no payments; it is appended as the last index.
    """
    ext = np.asarray(external_liabilities, dtype=float)
    if ext.shape != (system.n,):
        raise ValueError("need one external liability per bank")
    if np.any(ext < 0):
        raise ValueError("external liabilities must be non-negative")
    n = system.n
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = system.L
    L[:n, n] = ext
    e = np.concatenate([system.e, [0.0]])
    return FinancialSystem(L, e)


@dataclass
class ClearingResult:
    p: np.ndarray
    p_bar: np.ndarray
    defaults: set[int]
    net_positions: np.ndarray
    iterations: int
    unique: bool | None = None  # set when both iteration directions were run

    def to_json(self) -> str:
        return json.dumps({
            "p": self.p.tolist(),
            "p_bar": self.p_bar.tolist(),
            "defaults": sorted(int(i) for i in self.defaults),
            "net_positions": self.net_positions.tolist(),
            "iterations": self.iterations,
            "unique": self.unique,
        })


def total_obligations(system: FinancialSystem) -> np.ndarray:
    """Row sums of the liabilities matrix."""
    return system.L.sum(axis=1)


def relative_liabilities(system: FinancialSystem) -> np.ndarray:
    """Fraction of bank i's obligations owed to j; zero rows stay zero."""
    p_bar = total_obligations(system)
    pi = np.zeros_like(system.L)
    np.divide(system.L, p_bar[:, None], out=pi, where=p_bar[:, None] > 0)
    return pi


def _default_set(p: np.ndarray, p_bar: np.ndarray, tol: float) -> set[int]:
    # strict p_i < pbar_i, with a per-bank float cushion
    mask = p < p_bar - tol * np.maximum(1.0, p_bar)
    return set(np.nonzero(mask)[0].tolist())


def _picard(system: FinancialSystem, update, start: str, tol: float,
            max_iter: int) -> tuple[np.ndarray, int]:
    p_bar = total_obligations(system)
    pi_t = relative_liabilities(system).T
    p = p_bar.copy() if start == "above" else np.zeros_like(p_bar)
    scale = np.maximum(1.0, p_bar)
    resid = np.zeros_like(p)
    for it in range(1, max_iter + 1):
        nxt = update(pi_t @ p, p_bar, system.e)
        resid = np.abs(nxt - p)
        p = nxt
        if np.all(resid <= STOP_SAFETY * tol * scale):
            return p, it
    raise ConvergenceError("clearing iteration did not converge",
                           residual=float(np.max(resid / scale, initial=0.0)),
                           iterations=max_iter)


def _finish(system: FinancialSystem, p: np.ndarray, iterations: int,
            tol: float) -> ClearingResult:
    p_bar = total_obligations(system)
    incoming = relative_liabilities(system).T @ p
    return ClearingResult(
        p=p,
        p_bar=p_bar,
        defaults=_default_set(p, p_bar, tol),
        net_positions=system.e + incoming - p,
        iterations=iterations,
    )


def clear_eisenberg_noe(system: FinancialSystem, tol: float = DEFAULT_TOL,
                        max_iter: int = MAX_ITERATIONS, start: str = "above",
                        verify_uniqueness: bool = False) -> ClearingResult:
    """Clearing vector of the undiscounted fixed point.

    Iterates p <- min{e + Pi^T p, pbar} from p = pbar (``start="above"``,
    the greatest clearing vector) or from p = 0 (``start="below"``, the
    least).  With ``verify_uniqueness`` both limits are computed and compared
    within tolerance; they coincide whenever all equities are positive.
    """
    system.validate()
    if start not in ("above", "below"):
        raise ValueError("start must be 'above' or 'below'")

    def update(incoming, p_bar, e):
        return np.minimum(e + incoming, p_bar)

    p, iters = _picard(system, update, start, tol, max_iter)
    result = _finish(system, p, iters, tol)
    if verify_uniqueness:
        other = "below" if start == "above" else "above"
        p2, _ = _picard(system, update, other, tol, max_iter)
        gap = float(np.max(np.abs(p - p2), initial=0.0))
        result.unique = gap <= tol * max(1.0, float(result.p_bar.max(initial=0.0)))
    return result


def clear_rogers_veraart(system: FinancialSystem, alpha: float, beta: float,
                         tol: float = DEFAULT_TOL,
                         max_iter: int = MAX_ITERATIONS) -> ClearingResult:
    """Greatest clearing vector with default discounts alpha, beta.

    Insolvent banks pay ``alpha*e_i + beta*incoming`` instead of everything
    they have; ``alpha = beta = 1`` reproduces the undiscounted model
    exactly.  Iteration starts from p = pbar.
    """
    system.validate()
    if not (0 <= alpha <= 1 and 0 <= beta <= 1):
        raise ValueError("alpha and beta must lie in [0, 1]")

    def update(incoming, p_bar, e):
        return np.where(e + incoming >= p_bar, p_bar, alpha * e + beta * incoming)

    p, iters = _picard(system, update, "above", tol, max_iter)
    return _finish(system, p, iters, tol)


def clear_fictitious_default(system: FinancialSystem, alpha: float = 1.0,
                             beta: float = 1.0,
                             tol: float = DEFAULT_TOL) -> ClearingResult:
    """Fictitious-default cross-check solver.

    Alternates (a) identify the default set under the current payments and
    (b) solve the linear system in which exactly those banks pay their
    discounted assets while everyone else pays in full.  The set grows
    monotonically from the banks insolvent under full payment, so at most n
    rounds are needed.
    """
    system.validate()
    p_bar = total_obligations(system)
    pi_t = relative_liabilities(system).T
    p = p_bar.copy()
    defaulted = np.zeros(system.n, dtype=bool)
    for rounds in range(1, system.n + 2):
        assets = system.e + pi_t @ p
        new = assets < p_bar - tol * np.maximum(1.0, p_bar)
        new |= defaulted
        if rounds > 1 and np.array_equal(new, defaulted):
            break
        defaulted = new
        idx = np.nonzero(defaulted)[0]
        if idx.size:
            solvent = ~defaulted
            a = np.eye(idx.size) - beta * pi_t[np.ix_(idx, idx)]
            b = (alpha * system.e[idx]
                 + beta * pi_t[np.ix_(idx, np.nonzero(solvent)[0])]
                 @ p_bar[solvent])
            p = p_bar.copy()
            p[idx] = np.linalg.solve(a, b)
    return _finish(system, p, rounds, tol)
