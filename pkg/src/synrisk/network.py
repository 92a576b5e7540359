"""Random-graph ensembles and exposure-matrix reconstruction.

Generators cover the ensembles used by the contagion models: directed and
undirected Erdos-Renyi graphs, the directed configuration model with an
arbitrary degree sequence, and bipartite bank-asset graphs.  All generators
are pure functions of their parameters plus a ``numpy.random.Generator``, so
identical seeds give identical graphs.

The module also provides truncated degree distributions (``DegreeModel``)
shared by the analytic cascade machinery, and a maximum-entropy
reconstruction of a bilateral exposure matrix from aggregate per-bank
assets/liabilities (zero-diagonal iterative proportional fitting).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, zeta

from .errors import ConvergenceError

DEFAULT_K_MAX = 200


# ---------------------------------------------------------------------------
# graph containers


@dataclass
class DirectedGraph:
    """Directed graph on ``n`` nodes stored as parallel edge arrays.

    Edges run lender -> borrower.  ``weight`` (optional) carries the exposure
    on each edge in currency units.  No self-loops, no duplicate edges;
    weights, when present, must be strictly positive.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray | None = None

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        if self.weight is not None:
            self.weight = np.asarray(self.weight, dtype=float)

    @property
    def n_edges(self) -> int:
        return self.src.size

    def validate(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        if self.src.shape != self.dst.shape:
            raise ValueError("src/dst arrays differ in length")
        if self.src.size:
            if self.src.min() < 0 or self.src.max() >= self.n:
                raise ValueError("edge source out of range")
            if self.dst.min() < 0 or self.dst.max() >= self.n:
                raise ValueError("edge target out of range")
        if np.any(self.src == self.dst):
            raise ValueError("self-loops are not allowed")
        codes = self.src * self.n + self.dst
        if np.unique(codes).size != codes.size:
            raise ValueError("duplicate edges are not allowed")
        if self.weight is not None:
            if self.weight.shape != self.src.shape:
                raise ValueError("weight array length mismatch")
            if self.weight.size and self.weight.min() <= 0:
                raise ValueError("edge weights must be strictly positive")
        return self

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n)

    def out_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
        """Edges grouped by source: (indptr, borrower indices, weights)."""
        order = np.argsort(self.src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=self.n), out=indptr[1:])
        w = self.weight[order] if self.weight is not None else None
        return indptr, self.dst[order], w

    def to_dense(self) -> np.ndarray:
        """Dense weight matrix (unit weights if the graph is unweighted)."""
        mat = np.zeros((self.n, self.n))
        w = self.weight if self.weight is not None else 1.0
        mat[self.src, self.dst] = w
        return mat


@dataclass
class BipartiteGraph:
    """Bank-asset holdings: edge (bank, asset) with a positive share count."""

    n_banks: int
    m_assets: int
    bank: np.ndarray
    asset: np.ndarray
    shares: np.ndarray

    def __post_init__(self):
        self.bank = np.asarray(self.bank, dtype=np.int64)
        self.asset = np.asarray(self.asset, dtype=np.int64)
        self.shares = np.asarray(self.shares, dtype=float)

    def validate(self):
        if self.n_banks < 1 or self.m_assets < 1:
            raise ValueError("bipartite graph needs banks and assets")
        if not (self.bank.shape == self.asset.shape == self.shares.shape):
            raise ValueError("edge arrays differ in length")
        if self.bank.size:
            if self.bank.min() < 0 or self.bank.max() >= self.n_banks:
                raise ValueError("bank index out of range")
            if self.asset.min() < 0 or self.asset.max() >= self.m_assets:
                raise ValueError("asset index out of range")
            if self.shares.min() <= 0:
                raise ValueError("share counts must be strictly positive")
        codes = self.bank * self.m_assets + self.asset
        if np.unique(codes).size != codes.size:
            raise ValueError("duplicate holdings are not allowed")
        return self

    def bank_degrees(self) -> np.ndarray:
        return np.bincount(self.bank, minlength=self.n_banks)

    def to_dense(self) -> np.ndarray:
        q = np.zeros((self.n_banks, self.m_assets))
        q[self.bank, self.asset] = self.shares
        return q


def undirected_adjacency(graph: DirectedGraph) -> np.ndarray:
    """Project a directed graph to a dense symmetric 0/1 adjacency matrix.

    An undirected edge is present if either direction is.  Used by the
    core-periphery detector, which operates on undirected graphs.
    """
    adj = np.zeros((graph.n, graph.n))
    adj[graph.src, graph.dst] = 1.0
    adj = np.maximum(adj, adj.T)
    np.fill_diagonal(adj, 0.0)
    return adj


# ---------------------------------------------------------------------------
# degree distributions


@dataclass
class DegreeModel:
    """Degree distribution truncated at ``k_max`` and renormalized.

    ``p[k]`` is the probability of degree ``k`` for ``k = 0..k_max``.  The
    reported ``truncation_error`` bounds the discarded second factorial
    moment, ``sum_{k>k_max} k^2 p_k`` of the untruncated distribution.
    """

    kind: str
    p: np.ndarray
    k_max: int
    params: dict = field(default_factory=dict)
    truncation_error: float = 0.0

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.size != self.k_max + 1:
            raise ValueError("p must have k_max+1 entries")
        if np.any(self.p < 0):
            raise ValueError("degree probabilities must be non-negative")
        total = self.p.sum()
        if not np.isfinite(total) or abs(total - 1.0) > 1e-6:
            raise ValueError("degree probabilities must sum to 1")
        self.p = self.p / total  # exact renormalization
        if self.mean_degree <= 0:
            raise ValueError("mean degree must be positive")

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(self.k_max + 1)

    @property
    def mean_degree(self) -> float:
        return float(np.dot(self.degrees, self.p))

    @classmethod
    def poisson(cls, z: float, k_max: int = DEFAULT_K_MAX) -> "DegreeModel":
        if z <= 0:
            raise ValueError("poisson mean degree must be positive")
        k_ext = np.arange(4 * k_max + 1000 + 1)
        logp = k_ext * np.log(z) - z - gammaln(k_ext + 1)
        raw = np.exp(logp)
        tail = float(np.sum(raw[k_max + 1:] * k_ext[k_max + 1:] ** 2))
        return cls("poisson", raw[: k_max + 1], k_max, {"z": z}, tail)

    @classmethod
    def regular(cls, z: int, k_max: int | None = None) -> "DegreeModel":
        z = int(z)
        if z < 1:
            raise ValueError("regular degree must be >= 1")
        if k_max is None:
            k_max = z
        if k_max < z:
            raise ValueError("k_max below the regular degree")
        p = np.zeros(k_max + 1)
        p[z] = 1.0
        return cls("regular", p, k_max, {"z": z}, 0.0)

    @classmethod
    def powerlaw(cls, exponent: float, k_min: int = 1,
                 k_max: int = DEFAULT_K_MAX) -> "DegreeModel":
        if exponent <= 1:
            raise ValueError("power-law exponent must exceed 1")
        if not 1 <= k_min <= k_max:
            raise ValueError("need 1 <= k_min <= k_max")
        p = np.zeros(k_max + 1)
        ks = np.arange(k_min, k_max + 1, dtype=float)
        p[k_min:] = ks ** (-exponent)
        norm = p.sum()
        # discarded second moment of the un-truncated law; infinite for
        # exponents <= 3 where <k^2> diverges
        if exponent > 3:
            tail = float(zeta(exponent - 2, k_max + 1)) / norm
        else:
            tail = np.inf
        return cls("powerlaw", p / norm, k_max,
                   {"exponent": exponent, "k_min": k_min}, tail)

    @classmethod
    def lognormal(cls, mu: float, sigma: float,
                  k_max: int = DEFAULT_K_MAX) -> "DegreeModel":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        k_ext = np.arange(1, 8 * k_max + 1, dtype=float)
        raw = np.exp(-((np.log(k_ext) - mu) ** 2) / (2 * sigma**2)) / k_ext
        norm = raw[: k_max].sum()  # k = 1..k_max
        tail = float(np.sum(raw[k_max:] * k_ext[k_max:] ** 2)) / norm
        p = np.zeros(k_max + 1)
        p[1:] = raw[: k_max]
        return cls("lognormal", p / p.sum(), k_max,
                   {"mu": mu, "sigma": sigma}, tail)

    @classmethod
    def empirical(cls, p, k_max: int | None = None) -> "DegreeModel":
        p = np.asarray(p, dtype=float)
        if k_max is not None:
            if k_max + 1 < p.size:
                p = p[: k_max + 1]
            elif k_max + 1 > p.size:
                p = np.concatenate([p, np.zeros(k_max + 1 - p.size)])
        return cls("empirical", p, p.size - 1, {}, 0.0)


def sample_degree_sequence(model: DegreeModel, n: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. degrees from the model's distribution."""
    if n < 1:
        raise ValueError("need n >= 1")
    return rng.choice(model.degrees, size=n, p=model.p)


# ---------------------------------------------------------------------------
# Erdos-Renyi ensembles

# Sampling recipe used below: draw the edge count from the exact binomial,
# then a uniform set of that many distinct pairs.  This equals independent
# per-pair sampling but runs in O(edges) instead of O(n^2).


def _sample_distinct_codes(n_codes: int, m: int,
                           rng: np.random.Generator) -> np.ndarray:
    if m == 0:
        return np.empty(0, dtype=np.int64)
    if m > n_codes:
        raise ValueError("cannot sample more codes than exist")
    if 3 * m >= n_codes:
        # dense regime: permute the full code space
        return rng.permutation(n_codes)[:m]
    collected = np.empty(0, dtype=np.int64)
    while collected.size < m:
        need = m - collected.size
        extra = rng.integers(0, n_codes, size=int(1.1 * need) + 16)
        collected = np.unique(np.concatenate([collected, extra]))
    if collected.size > m:
        collected = rng.choice(collected, size=m, replace=False)
    return collected


def gen_erdos_renyi_directed(n: int, z: float,
                             rng: np.random.Generator) -> DirectedGraph:
    """Directed G(n, p) with p = z/(n-1): mean in- and out-degree z."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0 <= z <= n - 1:
        raise ValueError("mean degree must lie in [0, n-1]")
    p = z / (n - 1)
    n_pairs = n * (n - 1)
    m = rng.binomial(n_pairs, p)
    codes = _sample_distinct_codes(n_pairs, m, rng)
    src = codes // (n - 1)
    rem = codes % (n - 1)
    dst = rem + (rem >= src)
    return DirectedGraph(n, src, dst)


def _decode_triangular(codes: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # row-major codes over pairs (i, j), i < j; row i starts at i(2n-i-1)/2
    c = codes.astype(np.float64)
    i = np.floor(((2 * n - 1) - np.sqrt((2 * n - 1) ** 2 - 8 * c)) / 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    start = i * (2 * n - i - 1) // 2
    # fix float rounding at row boundaries
    too_big = start > codes
    i[too_big] -= 1
    start = i * (2 * n - i - 1) // 2
    too_small = codes - start >= (n - 1 - i)
    i[too_small] += 1
    start = i * (2 * n - i - 1) // 2
    j = codes - start + i + 1
    return i, j


def gen_erdos_renyi_undirected(n: int, z: float,
                               rng: np.random.Generator) -> DirectedGraph:
    """Undirected G(n, p) with p = z/(n-1), as reciprocal directed edges.

    Each sampled pair {i, j} appears as both i->j and j->i, so out-neighbor
    sets coincide with undirected neighborhoods and the cascade simulator
    runs unchanged on undirected ensembles.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0 <= z <= n - 1:
        raise ValueError("mean degree must lie in [0, n-1]")
    p = z / (n - 1)
    n_pairs = n * (n - 1) // 2
    m = rng.binomial(n_pairs, p)
    codes = _sample_distinct_codes(n_pairs, m, rng)
    i, j = _decode_triangular(codes, n)
    return DirectedGraph(n, np.concatenate([i, j]), np.concatenate([j, i]))


def gen_bipartite_er(n_banks: int, m_assets: int, mean_diversification: float,
                     rng: np.random.Generator) -> BipartiteGraph:
    """Bipartite Erdos-Renyi bank-asset graph, unit share per link.

    Each (bank, asset) pair is linked independently with probability
    ``mean_diversification / m_assets``.  Economic scaling of the unit
    holdings (prices, equity) is applied downstream by the fire-sale module.
    """
    if n_banks < 1 or m_assets < 1:
        raise ValueError("need at least one bank and one asset")
    if not 0 <= mean_diversification <= m_assets:
        raise ValueError("mean diversification must lie in [0, m_assets]")
    p = mean_diversification / m_assets
    mask = rng.random((n_banks, m_assets)) < p
    bank, asset = np.nonzero(mask)
    return BipartiteGraph(n_banks, m_assets, bank, asset,
                          np.ones(bank.size))


# ---------------------------------------------------------------------------
# configuration model


def gen_configuration_model(out_degrees, in_degrees, rng: np.random.Generator,
                            max_rewire_passes: int = 200
                            ) -> tuple[DirectedGraph, int]:
    """Directed configuration model by stub matching.

    Out-stubs are matched to a random permutation of in-stubs.  Self-loops
    and duplicate edges are re-matched among themselves for up to
    ``max_rewire_passes`` shuffles; whatever still conflicts afterwards is
    erased.  Returns the graph and the number of discarded stub pairs, so
    requested-minus-realized degree totals equal the reported count.
    """
    out_degrees = np.asarray(out_degrees, dtype=np.int64)
    in_degrees = np.asarray(in_degrees, dtype=np.int64)
    if out_degrees.size != in_degrees.size:
        raise ValueError("degree sequences differ in length")
    if np.any(out_degrees < 0) or np.any(in_degrees < 0):
        raise ValueError("degrees must be non-negative")
    if out_degrees.sum() != in_degrees.sum():
        raise ValueError("out- and in-stub totals must match")
    n = out_degrees.size
    src = np.repeat(np.arange(n), out_degrees)
    dst = np.repeat(np.arange(n), in_degrees)
    rng.shuffle(dst)

    accepted = np.zeros(0, dtype=np.int64)  # edge codes src*n + dst
    for _ in range(max_rewire_passes):
        codes = src * n + dst
        ok = src != dst
        # keep the first occurrence of each new code, provided it is not a
        # self-loop and does not collide with an already accepted edge
        _, first_idx = np.unique(codes, return_index=True)
        is_first = np.zeros(codes.size, dtype=bool)
        is_first[first_idx] = True
        ok &= is_first & ~np.isin(codes, accepted)
        accepted = np.concatenate([accepted, codes[ok]])
        src, dst = src[~ok], dst[~ok]
        if src.size == 0:
            break
        rng.shuffle(dst)

    discarded = int(src.size)
    return DirectedGraph(n, accepted // n, accepted % n), discarded


# ---------------------------------------------------------------------------
# maximum-entropy reconstruction


@dataclass
class MarginVector:
    """Aggregate per-bank interbank assets and liabilities (row/col margins)."""

    assets: np.ndarray
    liabilities: np.ndarray

    def __post_init__(self):
        self.assets = np.asarray(self.assets, dtype=float)
        self.liabilities = np.asarray(self.liabilities, dtype=float)
        if self.assets.shape != self.liabilities.shape or self.assets.ndim != 1:
            raise ValueError("assets and liabilities must be equal-length vectors")
        if np.any(self.assets < 0) or np.any(self.liabilities < 0):
            raise ValueError("margins must be non-negative")
        ta, tl = self.assets.sum(), self.liabilities.sum()
        if ta <= 0:
            raise ValueError("total assets must be positive")
        if abs(ta - tl) > 1e-9 * max(ta, tl):
            raise ValueError("asset and liability totals disagree beyond 1e-9")
        # remove the residual float mismatch so both margins are attainable
        self.liabilities = self.liabilities * (ta / tl)

    @property
    def n(self) -> int:
        return self.assets.size


def max_entropy_reconstruction(margins: MarginVector, tol: float = 1e-10,
                               max_sweeps: int = 100_000) -> np.ndarray:
    """Zero-diagonal dense exposure matrix matching the given margins.

    Iterative proportional fitting started from the outer product
    ``assets_i * liabilities_j`` with the diagonal forced to zero, the
    canonical "as even as possible" allocation of aggregate positions.  Row
    sums reproduce ``assets`` and column sums ``liabilities`` to relative
    ``tol``.  Raises ``ConvergenceError`` for infeasible margins (e.g. one
    bank so large that the zero diagonal cannot be compensated).
    """
    if margins.n < 2:
        raise ValueError("need at least two banks")
    a, l = margins.assets, margins.liabilities
    x = np.outer(a, l)
    np.fill_diagonal(x, 0.0)
    a_pos = a > 0
    l_pos = l > 0
    x[~a_pos, :] = 0.0
    x[:, ~l_pos] = 0.0
    rel = np.inf
    for sweep in range(max_sweeps):
        rows = x.sum(axis=1)
        np.divide(a, rows, out=rows, where=rows > 0)
        x *= rows[:, None]
        cols = x.sum(axis=0)
        np.divide(l, cols, out=cols, where=cols > 0)
        x *= cols[None, :]
        # columns are exact after the column step; convergence is measured
        # on the row margins only
        row_err = np.abs(x.sum(axis=1) - a)
        rel = float(np.max(row_err[a_pos] / a[a_pos], initial=0.0))
        if rel <= tol:
            return x
    raise ConvergenceError(
        "iterative proportional fitting did not converge; margins may be "
        "infeasible with a zero diagonal", residual=rel, iterations=max_sweeps)


# ---------------------------------------------------------------------------
# edge-list serialization

# Text format: a header line `# directed n=<n>` or `# bipartite n=<n> m=<m>`,
# then one `src dst [weight]` line per edge, 0-indexed, UTF-8.


def write_edge_list(path, graph: DirectedGraph | BipartiteGraph):
    lines = []
    if isinstance(graph, DirectedGraph):
        lines.append(f"# directed n={graph.n}")
        if graph.weight is None:
            for s, d in zip(graph.src, graph.dst):
                lines.append(f"{s} {d}")
        else:
            for s, d, w in zip(graph.src, graph.dst, graph.weight):
                lines.append(f"{s} {d} {w:.17g}")
    elif isinstance(graph, BipartiteGraph):
        lines.append(f"# bipartite n={graph.n_banks} m={graph.m_assets}")
        for b, a, s in zip(graph.bank, graph.asset, graph.shares):
            lines.append(f"{b} {a} {s:.17g}")
    else:
        raise TypeError(f"cannot serialize {type(graph).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_edge_list(path) -> DirectedGraph | BipartiteGraph:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        rows = [line.split() for line in fh if line.strip()]
    if not header.startswith("#"):
        raise ValueError("missing edge-list header line")
    fields = dict(tok.split("=") for tok in header[1:].split() if "=" in tok)
    kind = header[1:].split()[0]
    if "n" not in fields:
        raise ValueError("header must declare n=<count>")
    n = int(fields["n"])
    src = np.array([int(r[0]) for r in rows], dtype=np.int64)
    dst = np.array([int(r[1]) for r in rows], dtype=np.int64)
    has_weight = rows and len(rows[0]) > 2
    if any((len(r) > 2) != has_weight for r in rows):
        raise ValueError("mixed weighted/unweighted edge lines")
    weight = np.array([float(r[2]) for r in rows]) if has_weight else None
    if kind == "directed":
        return DirectedGraph(n, src, dst, weight).validate()
    if kind == "bipartite":
        m = int(fields.get("m", 0))
        shares = weight if weight is not None else np.ones(src.size)
        return BipartiteGraph(n, m, src, dst, shares).validate()
    raise ValueError(f"unknown edge-list kind {kind!r}")
