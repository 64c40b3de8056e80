"""Score-based causal graph learning.

The scoring function is the Bayesian Gaussian equivalent (BGe) log marginal
likelihood, which decomposes over nodes and assigns equal scores to
Markov-equivalent DAGs.  Search is greedy hill-climbing over add/delete/
reverse moves with random restarts, under exogeneity (no edge into an
interventional variable), an in-degree cap, and optional tier ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .core import (
    CausalGraph,
    ObservationMatrix,
    Tier,
    VariableKind,
    VariableSpec,
)
from .errors import (
    NodeSetMismatchError,
    NumericalError,
    SchemaError,
    UnknownNodeError,
)


@dataclass(frozen=True)
class BgeHyper:
    """Normal-Wishart prior hyperparameters.

    ``alpha_w`` and ``prior_scale_t`` default per the data dimension M:
    alpha_w = M + 2 and t = alpha_mu * (alpha_w - M - 1) / (alpha_mu + 1).
    The prior mean is zero, matching internally standardized data; the prior
    scale matrix is t times the identity.
    """

    alpha_mu: float = 1.0
    alpha_w: float | None = None
    prior_scale_t: float | None = None

    def __post_init__(self) -> None:
        if self.alpha_mu <= 0:
            raise SchemaError("alpha_mu must be positive")

    def resolved(self, m: int) -> tuple[float, float, float]:
        alpha_w = self.alpha_w if self.alpha_w is not None else m + 2.0
        if alpha_w <= m - 1:
            raise SchemaError("alpha_w must exceed M - 1")
        t = (
            self.prior_scale_t
            if self.prior_scale_t is not None
            else self.alpha_mu * (alpha_w - m - 1.0) / (self.alpha_mu + 1.0)
        )
        if t <= 0:
            raise SchemaError("prior_scale_t must be positive")
        return self.alpha_mu, alpha_w, t


def _standardize(x: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0.0] = 1.0
    return (x - mu) / sd


class BgeScorer:
    """Decomposable BGe scoring over one dataset, with a local-score cache.

    Data is standardized once (zero mean, unit variance per column), so the
    learned structure is invariant to positive rescaling of any column.
    """

    def __init__(
        self, data: ObservationMatrix, hyper: BgeHyper | None = None
    ) -> None:
        hyper = hyper or BgeHyper()
        x = np.asarray(data.data, dtype=np.float64)
        n, m = x.shape
        if n <= m:
            raise NumericalError(f"need more runs than variables (N={n}, M={m})")
        self.names = data.names
        self.n = n
        self.m = m
        self.alpha_mu, self.alpha_w, self.t = hyper.resolved(m)
        self.log_t = math.log(self.t)
        xs = _standardize(x)
        # posterior scale matrix: prior t*I plus the scatter of the
        # (exactly mean-centered) standardized data; the prior-mean term
        # vanishes because the prior mean is zero and columns are centered
        self.r_mat = self.t * np.eye(m) + xs.T @ xs
        self._index = {name: i for i, name in enumerate(self.names)}
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def local_index(self, node: int, parents: tuple[int, ...]) -> float:
        key = (node, parents)
        got = self._cache.get(key)
        if got is None:
            got = float(
                _kernels.bge_local_score(
                    self.r_mat,
                    node,
                    np.asarray(parents, dtype=np.int64),
                    self.n,
                    self.m,
                    self.alpha_mu,
                    self.alpha_w,
                    self.log_t,
                )
            )
            if math.isnan(got):
                raise NumericalError(
                    "non-positive determinant in BGe score (degenerate data)"
                )
            self._cache[key] = got
        return got

    def local(self, node: str, parents: Iterable[str]) -> float:
        if node not in self._index:
            raise UnknownNodeError(f"unknown variable: {node!r}")
        pset = []
        for p in parents:
            if p not in self._index:
                raise UnknownNodeError(f"unknown variable: {p!r}")
            pset.append(self._index[p])
        node_idx = self._index[node]
        if node_idx in pset:
            raise ValueError(f"{node!r} cannot be its own parent")
        return self.local_index(node_idx, tuple(sorted(pset)))


def bge_local_score(
    data: ObservationMatrix,
    node: str,
    parents: Iterable[str],
    hyper: BgeHyper | None = None,
) -> float:
    """Log marginal-likelihood contribution of one (node, parent set) family."""
    return BgeScorer(data, hyper).local(node, parents)


def bge_score(
    data: ObservationMatrix, g: CausalGraph, hyper: BgeHyper | None = None
) -> float:
    """Total BGe score of a DAG: sum of local scores over all families."""
    if set(g.nodes) != set(data.names):
        raise NodeSetMismatchError("graph nodes differ from data variables")
    scorer = BgeScorer(data, hyper)
    return sum(scorer.local(n, g.parents(n)) for n in g.nodes)


# ---------------------------------------------------------------------------
# greedy search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 10
    max_in_degree: int | None = 4
    tier_constraints: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise SchemaError("restarts must be >= 1")
        if self.max_in_degree is not None and self.max_in_degree < 0:
            raise SchemaError("max_in_degree must be >= 0")


_TIER_RANK = {Tier.HYPER: 0, Tier.DATA: 0, Tier.TRAIN: 1, Tier.TEST: 2}

# accept a move only if it improves the score by more than float jitter
_MIN_GAIN = 1e-9


class _SearchState:
    """Mutable DAG as parent sets over column indices, plus its score."""

    def __init__(self, scorer: BgeScorer, parents: list[set[int]]):
        self.scorer = scorer
        self.parents = parents
        self.locals = [
            scorer.local_index(v, tuple(sorted(ps))) for v, ps in enumerate(parents)
        ]

    @property
    def score(self) -> float:
        return float(sum(self.locals))

    def has_path(self, src: int, dst: int, skip_edge: tuple[int, int] | None = None) -> bool:
        # DFS over child lists derived from parent sets
        m = len(self.parents)
        children: list[list[int]] = [[] for _ in range(m)]
        for v, ps in enumerate(self.parents):
            for u in ps:
                if skip_edge is not None and (u, v) == skip_edge:
                    continue
                children[u].append(v)
        seen = [False] * m
        stack = [src]
        while stack:
            cur = stack.pop()
            if cur == dst:
                return True
            if seen[cur]:
                continue
            seen[cur] = True
            stack.extend(children[cur])
        return False

    def local_with(self, v: int, ps: set[int]) -> float:
        return self.scorer.local_index(v, tuple(sorted(ps)))


def _edge_allowed(
    u: int,
    v: int,
    specs: Sequence[VariableSpec],
    tier_constraints: bool,
) -> bool:
    if specs[v].kind is VariableKind.INTERVENTIONAL:
        return False
    if tier_constraints:
        tu, tv = specs[u].tier, specs[v].tier
        if tu is not None and tv is not None:
            if _TIER_RANK[tu] > _TIER_RANK[tv]:
                return False
    return True


def _hill_climb(
    state: _SearchState,
    specs: Sequence[VariableSpec],
    pair_order: list[tuple[int, int]],
    cfg: SearchConfig,
) -> None:
    cap = cfg.max_in_degree if cfg.max_in_degree is not None else len(specs)
    while True:
        best_gain = _MIN_GAIN
        best_move = None
        for u, v in pair_order:
            if u in state.parents[v]:
                # delete u -> v
                gain = state.local_with(v, state.parents[v] - {u}) - state.locals[v]
                if gain > best_gain:
                    best_gain, best_move = gain, ("del", u, v)
                # reverse u -> v  (v -> u must be admissible and acyclic)
                if (
                    _edge_allowed(v, u, specs, cfg.tier_constraints)
                    and len(state.parents[u]) < cap
                    and not state.has_path(u, v, skip_edge=(u, v))
                ):
                    gain = (
                        state.local_with(v, state.parents[v] - {u})
                        - state.locals[v]
                        + state.local_with(u, state.parents[u] | {v})
                        - state.locals[u]
                    )
                    if gain > best_gain:
                        best_gain, best_move = gain, ("rev", u, v)
            else:
                # add u -> v
                if (
                    _edge_allowed(u, v, specs, cfg.tier_constraints)
                    and len(state.parents[v]) < cap
                    and not state.has_path(v, u)
                ):
                    gain = state.local_with(v, state.parents[v] | {u}) - state.locals[v]
                    if gain > best_gain:
                        best_gain, best_move = gain, ("add", u, v)
        if best_move is None:
            return
        kind, u, v = best_move
        if kind == "add":
            state.parents[v] = state.parents[v] | {u}
        elif kind == "del":
            state.parents[v] = state.parents[v] - {u}
        else:
            state.parents[v] = state.parents[v] - {u}
            state.parents[u] = state.parents[u] | {v}
            state.locals[u] = state.local_with(u, state.parents[u])
        state.locals[v] = state.local_with(v, state.parents[v])


def _random_start(
    rng: np.random.Generator,
    specs: Sequence[VariableSpec],
    cfg: SearchConfig,
    edge_prob: float = 0.1,
) -> list[set[int]]:
    m = len(specs)
    cap = cfg.max_in_degree if cfg.max_in_degree is not None else m
    order = rng.permutation(m)
    parents: list[set[int]] = [set() for _ in range(m)]
    for j in range(1, m):
        v = int(order[j])
        for i in range(j):
            u = int(order[i])
            if not _edge_allowed(u, v, specs, cfg.tier_constraints):
                continue
            if len(parents[v]) >= cap:
                break
            if rng.random() < edge_prob:
                parents[v].add(u)
    return parents


def learn_graph(
    data: ObservationMatrix,
    specs: Sequence[VariableSpec] | None = None,
    hyper: BgeHyper | None = None,
    cfg: SearchConfig | None = None,
) -> CausalGraph:
    """Greedy BGe hill-climbing with random restarts.

    Restart 0 starts from the empty graph; later restarts start from sparse
    random DAGs.  Moves are add/delete/reverse, scanned in lexicographic
    (from, to) name order so ties resolve deterministically.  Returns the
    best-scoring DAG found.
    """
    specs = tuple(specs) if specs is not None else data.variables
    if tuple(s.name for s in specs) != data.names:
        raise SchemaError("specs must match the data variables in order")
    cfg = cfg or SearchConfig()
    scorer = BgeScorer(data, hyper)
    m = len(specs)

    by_name = sorted(range(m), key=lambda i: specs[i].name)
    pair_order = [(u, v) for u in by_name for v in by_name if u != v]

    best_parents: list[set[int]] | None = None
    best_score = -math.inf
    for r in range(cfg.restarts):
        if r == 0:
            parents = [set() for _ in range(m)]
        else:
            rng = np.random.default_rng([cfg.seed, r])
            parents = _random_start(rng, specs, cfg)
        state = _SearchState(scorer, parents)
        _hill_climb(state, specs, pair_order, cfg)
        if state.score > best_score:
            best_score = state.score
            best_parents = state.parents
    assert best_parents is not None
    edges = [
        (specs[u].name, specs[v].name)
        for v, ps in enumerate(best_parents)
        for u in sorted(ps)
    ]
    return CausalGraph([s.name for s in specs], edges)


# ---------------------------------------------------------------------------
# graph comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapReport:
    n_common: int
    n_edges_1: int
    n_edges_2: int
    jaccard: float


@dataclass(frozen=True)
class GraphAccuracy:
    false_edge_rate: float
    missing_edge_rate: float
    shd: int


def _require_same_nodes(g1: CausalGraph, g2: CausalGraph) -> None:
    if set(g1.nodes) != set(g2.nodes):
        raise NodeSetMismatchError("graphs are over different node sets")


def compare_graphs(g1: CausalGraph, g2: CausalGraph) -> OverlapReport:
    """Directed-edge overlap; Jaccard is 1.0 when both edge sets are empty."""
    _require_same_nodes(g1, g2)
    inter = len(g1.edges & g2.edges)
    union = len(g1.edges | g2.edges)
    return OverlapReport(
        n_common=inter,
        n_edges_1=len(g1.edges),
        n_edges_2=len(g2.edges),
        jaccard=inter / union if union else 1.0,
    )


def eval_against_truth(learned: CausalGraph, truth: CausalGraph) -> GraphAccuracy:
    """Directed error rates plus structural Hamming distance against truth."""
    _require_same_nodes(learned, truth)
    false_edges = len(learned.edges - truth.edges)
    missing_edges = len(truth.edges - learned.edges)
    shd = 0
    seen_pairs: set[frozenset[str]] = set()
    for a, b in learned.edges | truth.edges:
        pair = frozenset((a, b))
        if pair in seen_pairs:
            continue
        seen_pairs.add(pair)
        s1 = _pair_status(learned, a, b)
        s2 = _pair_status(truth, a, b)
        if s1 != s2:
            shd += 1
    return GraphAccuracy(
        false_edge_rate=false_edges / len(learned.edges) if learned.edges else 0.0,
        missing_edge_rate=missing_edges / len(truth.edges) if truth.edges else 0.0,
        shd=shd,
    )


def _pair_status(g: CausalGraph, a: str, b: str) -> int:
    if (a, b) in g.edges:
        return 1
    if (b, a) in g.edges:
        return -1
    return 0


def skeleton_f1(learned: CausalGraph, truth: CausalGraph) -> float:
    """F1 of the undirected skeletons; 1.0 when both graphs are empty."""
    _require_same_nodes(learned, truth)
    skel_l = {frozenset(e) for e in learned.edges}
    skel_t = {frozenset(e) for e in truth.edges}
    if not skel_l and not skel_t:
        return 1.0
    inter = len(skel_l & skel_t)
    denom = len(skel_l) + len(skel_t)
    return 2.0 * inter / denom if denom else 1.0
