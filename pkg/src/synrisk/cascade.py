"""Zero-recovery default cascades on directed interbank networks.

Banks hold stylized balance sheets (interbank assets, external assets,
interbank liabilities, deposits) with capital K = A_ib + A_ext - L_ib - D.
A bank is solvent while K > 0.  When a borrower defaults the lender loses
the full exposure (loss given default 100%), and defaults iff accumulated
losses from defaulted borrowers exceed its capital:

    sum_{j defaulted} A_ij  >  K_i

With exposures split evenly across borrowers this reduces to the classic
fraction condition phi_i > K_i / A_ib_i.  Rounds are synchronous; the final
default set is order-independent (it is the minimal stable closure of the
seed set), which the test suite checks against brute-force iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import DirectedGraph

LOSS_ATOL = 1e-12  # absolute cushion on the strict loss > capital comparison
DEFAULT_EXTERNAL_RATIO = 4.0


def _gather_ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenate index ranges [start, start+count) without a Python loop."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    shift = starts - np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.repeat(shift, counts) + np.arange(total)


@dataclass
class InterbankSystem:
    """Weighted exposure network plus per-bank balance-sheet arrays.

    ``indptr``/``borrowers``/``exposures`` hold the out-edges of each lender
    in CSR form: bank i's borrowers are ``borrowers[indptr[i]:indptr[i+1]]``
    with exposure ``exposures[...]`` on each.  Consistency:
    ``ib_assets[i] = sum of i's exposures`` and ``ib_liabilities[j] = sum of
    exposures towards j``.
    """

    n: int
    indptr: np.ndarray
    borrowers: np.ndarray
    exposures: np.ndarray
    ib_assets: np.ndarray
    ext_assets: np.ndarray
    ib_liabilities: np.ndarray
    deposits: np.ndarray
    capital: np.ndarray

    def validate(self):
        lender = np.repeat(np.arange(self.n), np.diff(self.indptr))
        row_sums = np.bincount(lender, weights=self.exposures, minlength=self.n)
        if not np.allclose(row_sums, self.ib_assets, rtol=1e-9, atol=1e-12):
            raise ValueError("ib_assets disagree with summed exposures")
        col_sums = np.bincount(self.borrowers, weights=self.exposures,
                               minlength=self.n)
        if not np.allclose(col_sums, self.ib_liabilities, rtol=1e-9, atol=1e-12):
            raise ValueError("ib_liabilities disagree with summed exposures")
        identity = (self.ib_assets + self.ext_assets
                    - self.ib_liabilities - self.deposits)
        if not np.allclose(identity, self.capital, rtol=1e-9, atol=1e-9):
            raise ValueError("balance-sheet identity violated")
        if min(self.ib_assets.min(initial=0), self.ext_assets.min(initial=0),
               self.deposits.min(initial=0)) < 0:
            raise ValueError("stock variables must be non-negative")
        return self

    def lenders_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """In-edge view: for each borrower, its lenders and their exposures."""
        lender = np.repeat(np.arange(self.n), np.diff(self.indptr))
        order = np.argsort(self.borrowers, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.borrowers, minlength=self.n), out=indptr[1:])
        return indptr, lender[order], self.exposures[order]


@dataclass
class CascadeOutcome:
    initially_defaulted: set[int]
    finally_defaulted: set[int]
    rounds: int
    default_fraction: float
    per_round_defaults: list[set[int]]

    def to_dict(self) -> dict:
        return {
            "initially_defaulted": sorted(self.initially_defaulted),
            "finally_defaulted": sorted(self.finally_defaulted),
            "rounds": self.rounds,
            "default_fraction": self.default_fraction,
            "per_round_defaults": [sorted(s) for s in self.per_round_defaults],
        }


def build_gai_kapadia_system(graph: DirectedGraph, capital_ratio: float,
                             total_ib_asset_per_bank: float = 1.0,
                             external_ratio: float = DEFAULT_EXTERNAL_RATIO,
                             ) -> InterbankSystem:
    """Balance sheets with even exposures and a common capital ratio.

    Every bank is allocated the same interbank asset total, split evenly
    across its borrowers; capital is ``capital_ratio`` times that allocation.
    Banks without borrowers hold the allocation as external assets instead
    (they keep the same capital, so they can only default via external
    shocks, never contagiously).  External assets start at ``external_ratio``
    times the allocation and deposits balance the books; external assets are
    raised where needed to keep deposits non-negative.
    """
    if capital_ratio <= 0:
        raise ValueError("capital ratio must be positive")
    if total_ib_asset_per_bank <= 0:
        raise ValueError("interbank asset allocation must be positive")
    n = graph.n
    alloc = float(total_ib_asset_per_bank)
    indptr, borrowers, _ = graph.out_csr()
    out_deg = np.diff(indptr)
    has_borrowers = out_deg > 0
    exposures = np.repeat(
        np.divide(alloc, out_deg, out=np.zeros(n, dtype=float),
                  where=has_borrowers), out_deg)
    ib_assets = np.where(has_borrowers, alloc, 0.0)
    capital = np.full(n, capital_ratio * alloc)
    ib_liabilities = np.bincount(borrowers, weights=exposures, minlength=n)
    ext_assets = external_ratio * alloc + np.where(has_borrowers, 0.0, alloc)
    # deposits close the identity; lift external assets if a heavily borrowed
    # bank would otherwise need negative deposits
    ext_assets = np.maximum(ext_assets, capital + ib_liabilities - ib_assets)
    deposits = ib_assets + ext_assets - ib_liabilities - capital
    return InterbankSystem(n, indptr, borrowers, exposures, ib_assets,
                           ext_assets, ib_liabilities, deposits, capital)


def from_weighted_graph(graph: DirectedGraph, capital: np.ndarray,
                        external_ratio: float = DEFAULT_EXTERNAL_RATIO,
                        ) -> InterbankSystem:
    """Heterogeneous-exposure system from an explicitly weighted graph."""
    if graph.weight is None:
        raise ValueError("graph must carry exposure weights")
    capital = np.asarray(capital, dtype=float)
    if capital.shape != (graph.n,):
        raise ValueError("need one capital entry per bank")
    n = graph.n
    indptr, borrowers, exposures = graph.out_csr()
    ib_assets = np.bincount(graph.src, weights=graph.weight, minlength=n)
    ib_liabilities = np.bincount(graph.dst, weights=graph.weight, minlength=n)
    ext_assets = np.maximum(external_ratio * ib_assets,
                            capital + ib_liabilities - ib_assets)
    deposits = ib_assets + ext_assets - ib_liabilities - capital
    return InterbankSystem(n, indptr, borrowers, exposures, ib_assets,
                           ext_assets, ib_liabilities, deposits, capital)


def apply_external_shock(system: InterbankSystem, bank: int,
                         devaluation: float) -> InterbankSystem:
    """Devalue a fraction of one bank's external assets (pure update).

    Capital falls by the same amount; if it reaches zero or below the bank
    is insolvent and acts as a seed in the next cascade run.
    """
    if not 0 <= devaluation <= 1:
        raise ValueError("devaluation must lie in [0, 1]")
    if not 0 <= bank < system.n:
        raise ValueError("bank index out of range")
    loss = devaluation * system.ext_assets[bank]
    ext = system.ext_assets.copy()
    cap = system.capital.copy()
    ext[bank] -= loss
    cap[bank] -= loss
    return replace(system, ext_assets=ext, capital=cap)


def simulate_default_cascade(system: InterbankSystem,
                             seeds=None,
                             seed_fraction: float | None = None,
                             rng: np.random.Generator | None = None,
                             ) -> CascadeOutcome:
    """Synchronous zero-recovery cascade from a seed set.

    Seeds may be given explicitly, or drawn i.i.d. with probability
    ``seed_fraction`` per bank (requires ``rng``); the draw may legitimately
    come up empty, in which case the cascade is trivially empty.  Banks
    whose capital is already non-positive (e.g. after
    :func:`apply_external_shock`) always join the seed set.  Each round,
    every solvent bank defaults iff its accumulated exposure to defaulted
    borrowers strictly exceeds its capital; the run stops when a round adds
    no defaults.
    """
    defaulted = np.zeros(system.n, dtype=bool)
    seeded = bool(np.any(system.capital <= 0))
    if seeds is not None:
        seed_idx = np.fromiter((int(s) for s in seeds), dtype=np.int64)
        if seed_idx.size and not (0 <= seed_idx.min() and seed_idx.max() < system.n):
            raise ValueError("seed index out of range")
        defaulted[seed_idx] = True
        seeded |= seed_idx.size > 0
    if seed_fraction is not None:
        if not 0 <= seed_fraction <= 1:
            raise ValueError("seed fraction must lie in [0, 1]")
        if rng is None:
            raise ValueError("seed_fraction sampling needs an rng")
        defaulted |= rng.random(system.n) < seed_fraction
        seeded |= seed_fraction > 0
    if not seeded:
        raise ValueError("no seeds: give seeds or a positive seed_fraction")
    defaulted |= system.capital <= 0
    if not defaulted.any():  # an empty binomial draw is a valid outcome
        return CascadeOutcome(set(), set(), 0, 0.0, [])

    in_ptr, lenders, in_exposures = system.lenders_csr()
    loss = np.zeros(system.n)
    new = np.nonzero(defaulted)[0]
    initially = set(new.tolist())
    per_round = [set(new.tolist())]
    while new.size:
        # scatter the newly defaulted borrowers' exposures onto their lenders
        flat = _gather_ranges(in_ptr[new], in_ptr[new + 1] - in_ptr[new])
        hit = lenders[flat]
        if not hit.size:
            break
        round_loss = np.bincount(hit, weights=in_exposures[flat],
                                 minlength=system.n)
        loss += round_loss
        candidates = np.nonzero(round_loss)[0]
        candidates = candidates[~defaulted[candidates]]
        trips = candidates[loss[candidates] > system.capital[candidates] + LOSS_ATOL]
        if trips.size == 0:
            break
        defaulted[trips] = True
        per_round.append(set(trips.tolist()))
        new = trips

    finally_defaulted = set(np.nonzero(defaulted)[0].tolist())
    return CascadeOutcome(
        initially_defaulted=initially,
        finally_defaulted=finally_defaulted,
        rounds=len(per_round) - 1,
        default_fraction=len(finally_defaulted) / system.n,
        per_round_defaults=per_round,
    )
