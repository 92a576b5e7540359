"""Price-mediated contagion through overlapping portfolios.

Banks hold shares Q[i, a] of assets priced p_a; equity is marked to market.
Rounds alternate (a) re-mark equity at the new prices, (b) apply the selling
rule, (c) re-price each asset from the cumulative liquidated share fraction
ell_a = sum_i (Q_ia(0) - Q_ia(t)) / sum_i Q_ia(0):

    linear      p_a = b_a * (1 - alpha * ell_a), floored at zero
    log-linear  p_a = b_a * exp(-alpha * ell_a)

where b_a is the post-shock baseline price.  Selling rules:

* threshold: banks are passive until insolvent (E < 0), then liquidate the
  whole portfolio.
* leverage targeting: solvent banks above their target leverage lambda_i
  sell gamma * A * (1 - lambda_i E / A) worth per round, spread evenly over
  their portfolio (gamma = 1 restores the target in one step).
* buffered deleveraging: banks act only once leverage breaches a regulatory
  ceiling, then sell marketable securities to return to the target below
  the ceiling; illiquid assets are never sold nor repriced.

All sell decisions within a round are computed against beginning-of-round
prices and executed before a single synchronous re-mark, so round outcomes
do not depend on bank ordering.  Sale proceeds retire liabilities, keeping
the accounting identity assets = equity + liabilities exact.

For the threshold rule with log-linear impact the single-failure transfer
matrix T[i, j] = 1{ sum_a Q_ia p_a(0) (1 - exp(-alpha Q_ja / sum_k Q_ka)) > E_i }
linearizes the cascade: its spectral radius separates ensembles where one
failure dies out from those where it snowballs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .debtrank import power_method_radius
from .network import BipartiteGraph

LIQUIDATION_RTOL = 1e-9  # stop once round turnover falls below this x assets


@dataclass
class ImpactFunction:
    """Market impact of cumulative liquidation: linear or log-linear."""

    kind: str
    alpha: float

    def __post_init__(self):
        if self.kind not in ("linear", "loglinear"):
            raise ValueError("impact kind must be 'linear' or 'loglinear'")
        if self.alpha < 0:
            raise ValueError("impact strength alpha must be non-negative")

    def price(self, baseline: np.ndarray, liquidated_fraction: np.ndarray
              ) -> np.ndarray:
        if self.kind == "linear":
            return baseline * np.clip(1.0 - self.alpha * liquidated_fraction,
                                      0.0, None)
        return baseline * np.exp(-self.alpha * liquidated_fraction)


@dataclass
class PortfolioSystem:
    """Bank-asset holdings with balance sheets.

    ``liabilities`` is non-equity funding, so Q @ p0 = equity + liabilities
    row by row.  ``target_leverage`` and ``max_leverage`` are only consulted
    by the leverage-targeting and buffered rules; ``marketable`` marks the
    assets the buffered rule may sell.
    """

    Q: np.ndarray
    p0: np.ndarray
    equity: np.ndarray
    liabilities: np.ndarray
    target_leverage: np.ndarray | None = None
    max_leverage: np.ndarray | None = None
    marketable: np.ndarray | None = None

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.p0 = np.asarray(self.p0, dtype=float)
        self.equity = np.asarray(self.equity, dtype=float)
        self.liabilities = np.asarray(self.liabilities, dtype=float)
        if self.target_leverage is not None:
            self.target_leverage = np.asarray(self.target_leverage, dtype=float)
        if self.max_leverage is not None:
            self.max_leverage = np.asarray(self.max_leverage, dtype=float)
        if self.marketable is None:
            self.marketable = np.ones(self.p0.size, dtype=bool)
        else:
            self.marketable = np.asarray(self.marketable, dtype=bool)

    @property
    def n_banks(self) -> int:
        return self.Q.shape[0]

    @property
    def m_assets(self) -> int:
        return self.Q.shape[1]

    def diversification(self) -> np.ndarray:
        """Number of distinct assets held per bank (initial portfolio)."""
        return (self.Q > 0).sum(axis=1)

    def assets_value(self, prices: np.ndarray | None = None) -> np.ndarray:
        p = self.p0 if prices is None else prices
        return self.Q @ p

    def validate(self):
        n, m = self.Q.shape
        if np.any(self.Q < 0):
            raise ValueError("holdings must be non-negative")
        if self.p0.shape != (m,) or np.any(self.p0 <= 0):
            raise ValueError("need one strictly positive initial price per asset")
        for name in ("equity", "liabilities"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one entry per bank")
        if np.any(self.liabilities < -1e-12):
            raise ValueError("liabilities must be non-negative")
        total = self.equity + self.liabilities
        if not np.allclose(self.assets_value(), total, rtol=1e-9, atol=1e-9):
            raise ValueError("accounting identity A = E + liabilities violated")
        if self.marketable.shape != (m,):
            raise ValueError("marketable flags must have one entry per asset")
        return self

    @classmethod
    def from_bipartite(cls, graph: BipartiteGraph, leverage,
                       total_assets: float = 1.0, price: float = 1.0,
                       max_leverage=None) -> "PortfolioSystem":
        """Uniform calibration of a bipartite holdings graph.

        Every bank's portfolio is worth ``total_assets``, split evenly over
        the assets it holds; equity is assets / leverage.  Banks holding
        nothing get zero balance sheets and stay inert.
        """
        leverage = np.broadcast_to(np.asarray(leverage, dtype=float),
                                   (graph.n_banks,)).copy()
        if np.any(leverage < 1):
            raise ValueError("leverage A/E must be at least 1")
        q = graph.to_dense()
        k = (q > 0).sum(axis=1)
        held = k > 0
        q[held] = (q[held] > 0) * (total_assets / (k[held] * price))[:, None]
        p0 = np.full(graph.m_assets, float(price))
        assets = q @ p0
        equity = np.where(held, assets / leverage, 0.0)
        if max_leverage is not None:
            max_leverage = np.broadcast_to(
                np.asarray(max_leverage, dtype=float), (graph.n_banks,)).copy()
        return cls(q, p0, equity, assets - equity,
                   target_leverage=leverage, max_leverage=max_leverage)


@dataclass
class FireSaleOutcome:
    defaulted: set[int]
    rounds: int
    prices: np.ndarray
    per_round_liquidations: list[np.ndarray]
    total_equity_loss: float
    equity: np.ndarray | None = None
    constrained: set[int] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "defaulted": sorted(self.defaulted),
            "rounds": self.rounds,
            "prices": self.prices.tolist(),
            "liquidated_shares": np.sum(self.per_round_liquidations,
                                        axis=0).tolist()
            if self.per_round_liquidations else [],
            "total_equity_loss": self.total_equity_loss,
            "constrained": sorted(self.constrained),
        }


def _parse_shock(system: PortfolioSystem, shock) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a shock spec into (baseline price factors, failed banks)."""
    devaluation = np.zeros(system.m_assets)
    failed = np.zeros(system.n_banks, dtype=bool)
    if shock is None:
        return devaluation, failed
    if isinstance(shock, dict):
        if "asset" in shock:
            xi = float(shock.get("fraction", 0.0))
            if not 0 <= xi <= 1:
                raise ValueError("shock fraction must lie in [0, 1]")
            devaluation[int(shock["asset"])] = xi
        if "banks" in shock:
            failed[np.asarray(list(shock["banks"]), dtype=np.int64)] = True
        return devaluation, failed
    # (asset, fraction) pair
    asset, xi = shock
    if not 0 <= xi <= 1:
        raise ValueError("shock fraction must lie in [0, 1]")
    devaluation[int(asset)] = float(xi)
    return devaluation, failed


def _run_rounds(system: PortfolioSystem, impact: ImpactFunction, shock,
                sell_rule, priceable: np.ndarray,
                max_rounds: int = 10_000) -> FireSaleOutcome:
    devaluation, failed = _parse_shock(system, shock)
    q = system.Q.copy()
    q0_total = system.Q.sum(axis=0)
    baseline = system.p0 * (1.0 - devaluation)
    prices = system.p0.copy()
    equity = system.equity.astype(float).copy()
    liabilities = system.liabilities.astype(float).copy()
    defaulted = failed.copy()
    constrained: set[int] = set()
    liquidations: list[np.ndarray] = []
    stop_value = LIQUIDATION_RTOL * max(float(system.assets_value().sum()), 1e-300)

    # the exogenous shock is the first price move; impact is anchored at the
    # post-shock baseline
    new_prices = baseline.copy()
    rounds = 0
    to_liquidate = failed.copy()  # exogenously failed banks sell in round 1
    for _ in range(max_rounds):
        # (a) mark to market at the new prices
        equity += q @ (new_prices - prices)
        prices = new_prices
        # (b) defaults liquidate the priceable part of their book, then the
        # rule's voluntary sales, all at beginning-of-round prices
        newly = (equity < 0) & ~defaulted
        defaulted |= newly
        newly |= to_liquidate
        to_liquidate = np.zeros_like(failed)
        sold = np.zeros_like(q)
        sold[newly] = q[newly] * priceable[None, :]
        sold += sell_rule(q, prices, equity, liabilities, defaulted, constrained)
        sold = np.minimum(sold, q)  # clamp at current holdings
        q -= sold
        proceeds = sold @ prices
        liabilities -= proceeds
        # (c) synchronous re-pricing from cumulative liquidated fractions
        ell = np.divide(q0_total - q.sum(axis=0), q0_total,
                        out=np.zeros_like(q0_total), where=q0_total > 0)
        new_prices = np.where(priceable, impact.price(baseline, ell), baseline)
        if not newly.any() and float(proceeds.sum()) < stop_value:
            break
        rounds += 1
        liquidations.append(sold.sum(axis=0))
    equity += q @ (new_prices - prices)  # settle the final re-mark
    return FireSaleOutcome(
        defaulted=set(np.nonzero(defaulted)[0].tolist()),
        rounds=rounds,
        prices=new_prices,
        per_round_liquidations=liquidations,
        total_equity_loss=float(np.sum(system.equity - equity)),
        equity=equity,
        constrained=constrained,
    )


def simulate_threshold_firesale(system: PortfolioSystem,
                                impact: ImpactFunction, shock,
                                max_rounds: int = 10_000) -> FireSaleOutcome:
    """Passive banks, full liquidation on insolvency.

    ``shock`` is ``(asset, fraction)``, or a dict with keys ``asset`` /
    ``fraction`` and/or ``banks`` for exogenous initial failures.
    """
    system.validate()

    def sell_rule(q, prices, equity, liabilities, defaulted, constrained):
        return np.zeros_like(q)

    return _run_rounds(system, impact, shock, sell_rule,
                       priceable=np.ones(system.m_assets, dtype=bool),
                       max_rounds=max_rounds)


def simulate_leverage_targeting(system: PortfolioSystem,
                                impact: ImpactFunction, shock, gamma: float,
                                max_rounds: int = 10_000) -> FireSaleOutcome:
    """Preemptive deleveraging towards per-bank target leverage.

    Each round a solvent bank above target sells
    gamma * A * (1 - lambda E / A) in value, as equal per-asset value
    A_sold / k_i over its k_i initially held assets (clamped at holdings);
    insolvent banks liquidate in full.  gamma = 0 recovers the passive
    threshold behavior for solvent banks.
    """
    system.validate()
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if system.target_leverage is None or np.any(system.target_leverage <= 0):
        raise ValueError("leverage targeting needs positive target_leverage")
    k = system.diversification()
    held0 = system.Q > 0

    def sell_rule(q, prices, equity, liabilities, defaulted, constrained):
        assets = q @ prices
        active = ~defaulted & (k > 0) & (assets > 0)
        gap = assets - system.target_leverage * equity
        sellers = active & (gap > 0)
        sold = np.zeros_like(q)
        if gamma > 0 and sellers.any():
            total_value = gamma * assets[sellers] * (
                1.0 - system.target_leverage[sellers] * equity[sellers]
                / assets[sellers])
            per_asset_value = total_value / k[sellers]
            with np.errstate(divide="ignore"):
                shares = per_asset_value[:, None] / prices[None, :]
            shares[~np.isfinite(shares)] = 0.0
            sold[sellers] = shares * held0[sellers]
        return sold

    return _run_rounds(system, impact, shock, sell_rule,
                       priceable=np.ones(system.m_assets, dtype=bool),
                       max_rounds=max_rounds)


def simulate_buffered_deleveraging(system: PortfolioSystem,
                                   impact: ImpactFunction, shock,
                                   max_rounds: int = 10_000) -> FireSaleOutcome:
    """Deleveraging only on breach of a regulatory leverage ceiling.

    Banks stay passive while leverage A/E is at or below ``max_leverage``;
    on breach they sell marketable securities (the same fraction of each)
    until leverage is back at the target, which must sit below the ceiling.
    Illiquid assets are never sold and never repriced.  Banks that breach
    with no marketable holdings are flagged as constrained.
    """
    system.validate()
    if system.target_leverage is None or system.max_leverage is None:
        raise ValueError("buffered deleveraging needs target and max leverage")
    if np.any(system.max_leverage <= system.target_leverage):
        raise ValueError("max_leverage must exceed target_leverage")
    mkt = system.marketable

    def sell_rule(q, prices, equity, liabilities, defaulted, constrained):
        sold = np.zeros_like(q)
        assets = q @ prices
        solvent = ~defaulted & (equity > 0)
        breach = solvent & (assets > system.max_leverage * equity)
        if breach.any():
            mval = q[:, mkt] @ prices[mkt]
            need = assets - system.target_leverage * equity
            for i in np.nonzero(breach)[0]:
                if mval[i] <= 0:
                    constrained.add(int(i))
                    continue
                frac = min(1.0, need[i] / mval[i])
                if need[i] > mval[i]:
                    constrained.add(int(i))
                sold[i, mkt] = frac * q[i, mkt]
        return sold

    return _run_rounds(system, impact, shock, sell_rule, priceable=mkt,
                       max_rounds=max_rounds)


def transfer_matrix(system: PortfolioSystem, impact: ImpactFunction
                    ) -> tuple[np.ndarray, float]:
    """Single-failure trigger matrix and its spectral radius.

    T[i, j] = 1 when the sole liquidation of bank j's portfolio devalues
    bank i's holdings by more than its equity, under log-linear impact at
    initial prices.  Ensemble-average trigger probabilities are obtained by
    averaging realizations in the Monte Carlo harness.
    """
    system.validate()
    if impact.kind != "loglinear":
        raise ValueError("transfer matrix is defined for log-linear impact")
    totals = system.Q.sum(axis=0)
    frac = np.divide(system.Q, totals[None, :],
                     out=np.zeros_like(system.Q), where=totals[None, :] > 0)
    # devaluation[a, j]: price drop of asset a if bank j alone liquidates
    devaluation = system.p0[:, None] * (1.0 - np.exp(-impact.alpha * frac.T))
    losses = system.Q @ devaluation
    trigger = (losses > system.equity[:, None]).astype(float)
    np.fill_diagonal(trigger, 0.0)
    return trigger, power_method_radius(trigger)
