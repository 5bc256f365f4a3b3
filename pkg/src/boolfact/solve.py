"""
Exact anytime solver for weighted rank-k Boolean approximation.

The search branches on whole rows of C: every row takes one of the 2^k
patterns.  Given C, the columns of R decouple, so for each column the best
of the 2^k R-patterns can be picked independently.  At a node where only
some rows of C are fixed, picking the best R-pattern per column against the
fixed rows alone gives an admissible lower bound (the rows still open can
only add error).  A leaf's bound is its exact objective.

``brute_force`` is an independent vectorized enumeration used as an oracle.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .boolmat import BooleanMatrix, Factorization, approximation_error, boolean_product
from .reduce import WeightedInstance, expand, reduce

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
TIME_LIMIT = "time_limit"
NODE_LIMIT = "node_limit"

BRUTE_FORCE_MAX_BITS = 20


@dataclass(frozen=True)
class SolveConfig:
    k: int
    time_limit: float = 60.0
    node_limit: Optional[int] = None
    seed: int = 0  # recorded for reproducibility; the search itself draws no random numbers
    warm_start: bool = True
    symmetry_breaking: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"rank must be >= 1, got {self.k}")
        if not self.time_limit > 0:
            raise ValueError(f"time limit must be positive, got {self.time_limit}")
        if self.node_limit is not None and self.node_limit < 0:
            raise ValueError("node limit must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SolveResult:
    incumbent: Optional[Factorization]  # reduced space; None for an empty instance
    objective: int
    lower_bound: int
    nodes: int
    elapsed: float
    status: str
    trace: list = field(default_factory=list)  # (elapsed, objective) at each incumbent update

    @property
    def gap(self) -> int:
        return self.objective - self.lower_bound

    @property
    def relative_gap(self) -> float:
        return self.gap / self.objective if self.objective else 0.0


# -- shared helpers --------------------------------------------------------------


def _data(W: WeightedInstance):
    X = W.matrix.array.astype(np.int64)
    return X, np.asarray(W.alpha, dtype=np.int64), np.asarray(W.beta, dtype=np.int64)


def _pattern_overlap(k: int) -> np.ndarray:
    """``H[p, q]`` is True iff patterns p and q share a set bit."""
    pats = np.arange(1 << k)
    return (pats[:, None] & pats[None, :]) != 0


def _patterns_to_matrix(patterns, k: int) -> np.ndarray:
    pats = np.asarray(patterns, dtype=np.int64)
    return ((pats[:, None] >> np.arange(k)[None, :]) & 1).astype(np.uint8)


def _best_r(C: np.ndarray, X, alpha, beta):
    """Column-wise optimal R for fixed C; ties go to the smallest pattern."""
    k = C.shape[1]
    pats = _patterns_to_matrix(range(1 << k), k)  # q x k
    Zq = (C.astype(np.int64) @ pats.T.astype(np.int64)) > 0  # n x q
    cost = np.einsum("i,iqj->qj", alpha, (Zq[:, :, None] != X[:, None, :]).astype(np.int64))
    best = np.argmin(cost, axis=0)
    value = int(cost[best, np.arange(X.shape[1])] @ beta)
    return pats[best].T.copy(), value


def weighted_error(W: WeightedInstance, F: Factorization) -> int:
    return approximation_error(W.matrix, boolean_product(F.C, F.R), W.alpha, W.beta)


# -- oracle ----------------------------------------------------------------------


def brute_force(W: WeightedInstance, k: int, chunk: int = 1 << 12) -> SolveResult:
    """
    Exhaustive optimum: every C over the shorter side, with the best pattern
    chosen independently for each entry of the longer side.

    Raises ``ValueError`` when ``k * min(n, m)`` exceeds the enumeration guard.
    """
    t0 = time.perf_counter()
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    if W.is_empty:
        return SolveResult(None, 0, 0, 0, time.perf_counter() - t0, OPTIMAL)
    X, alpha, beta = _data(W)
    transposed = X.shape[0] > X.shape[1]
    if transposed:
        X, alpha, beta = X.T, beta, alpha
    n, m = X.shape
    bits = k * n
    if bits > BRUTE_FORCE_MAX_BITS:
        raise ValueError(
            f"brute force would enumerate 2^{bits} factor matrices; use branch_and_bound instead"
        )
    Q = 1 << k
    # err0[i, j]: cost when z_ij = 0, err1[i, j]: cost when z_ij = 1
    err0 = alpha[:, None] * X
    err1 = alpha[:, None] * (1 - X)
    qbits = (np.arange(Q)[None, :] >> np.arange(k)[:, None]) & 1  # k x Q
    best_val, best_code = None, 0
    total = 1 << bits
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        C = (codes[:, None] >> np.arange(bits)[None, :]) & 1
        C = C.reshape(-1, n, k)
        Z = np.einsum("bik,kq->biq", C, qbits) > 0  # batch, i, q
        cost = np.where(Z[:, :, :, None], err1[None, :, None, :], err0[None, :, None, :]).sum(axis=1)
        vals = cost.min(axis=1) @ beta
        pos = int(np.argmin(vals))
        if best_val is None or vals[pos] < best_val:
            best_val, best_code = int(vals[pos]), int(codes[pos])
    C = ((best_code >> np.arange(bits)) & 1).reshape(n, k).astype(np.uint8)
    R, value = _best_r(C, X, alpha, beta)
    assert value == best_val
    F = Factorization(BooleanMatrix(C), BooleanMatrix(R))
    if transposed:
        F = Factorization(F.R.T, F.C.T)
    return SolveResult(F, best_val, best_val, total, time.perf_counter() - t0, OPTIMAL)


# -- heuristics ------------------------------------------------------------------


def greedy_warm_start(W: WeightedInstance, k: int, max_iter: int = 100) -> Factorization:
    """
    k rounds of rank-1 covering.

    Each round alternates between the best row support for a fixed column
    support and vice versa, seeded from every row and every column of the
    matrix, and keeps the pair with the largest error reduction.  A round
    with no positive reduction leaves its factor empty, so the error never
    increases and the first k rounds of a rank-(k+1) run equal the rank-k run.
    """
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    X, alpha, beta = _data(W)
    n, m = X.shape
    # covering an uncovered cell changes the error by -gain
    G = (alpha[:, None] * beta[None, :]) * (2 * X - 1)
    C = np.zeros((n, k), dtype=np.uint8)
    R = np.zeros((k, m), dtype=np.uint8)
    for ell in range(k):
        seeds_v = np.vstack([X, np.eye(m, dtype=np.int64)])
        seeds_u = np.vstack([np.eye(n, dtype=np.int64), X.T])
        # seeds given as column supports v, and as row supports u
        cand = []
        V = seeds_v
        for _ in range(max_iter):
            U = (V @ G.T > 0).astype(np.int64)
            V_new = (U @ G > 0).astype(np.int64)
            if np.array_equal(V_new, V):
                break
            V = V_new
        cand.append((U, V))
        U = seeds_u
        for _ in range(max_iter):
            V = (U @ G > 0).astype(np.int64)
            U_new = (V @ G.T > 0).astype(np.int64)
            if np.array_equal(U_new, U):
                break
            U = U_new
        cand.append((U, V))
        best_gain, best_uv = 0, None
        for U, V in cand:
            gains = np.einsum("si,ij,sj->s", U, G, V)
            s = int(np.argmax(gains))
            if gains[s] > best_gain:
                best_gain, best_uv = int(gains[s]), (U[s], V[s])
        if best_uv is None:
            break
        u, v = best_uv
        C[:, ell] = u
        R[ell] = v
        G = np.where(np.outer(u, v) > 0, 0, G)
    return Factorization(BooleanMatrix(C), BooleanMatrix(R))


def alternating_refine(W: WeightedInstance, F: Factorization, max_rounds: int = 50) -> Factorization:
    """Alternate exact R-given-C and C-given-R updates until the error stops dropping."""
    X, alpha, beta = _data(W)
    C = np.array(F.C.array)
    R, value = _best_r(C, X, alpha, beta)
    for _ in range(max_rounds):
        Ct, v1 = _best_r(R.T, X.T, beta, alpha)
        C_new = Ct.T
        R_new, v2 = _best_r(C_new, X, alpha, beta)
        if v2 >= value:
            break
        C, R, value = C_new, R_new, v2
    return Factorization(BooleanMatrix(C), BooleanMatrix(R))


# -- branch and bound ------------------------------------------------------------


class _Search:
    """Depth-first search state over one instance."""

    def __init__(self, W: WeightedInstance, cfg: SolveConfig):
        self.X, self.alpha, self.beta = _data(W)
        self.n, self.m = self.X.shape
        self.k = cfg.k
        self.cfg = cfg
        self.H = _pattern_overlap(cfg.k)
        # heaviest rows first; stable so ties keep index order
        self.order = np.argsort(-self.alpha, kind="stable")
        self.err0 = self.alpha[:, None] * self.X
        self.err1 = self.alpha[:, None] * (1 - self.X)
        # rest0[d, j]: ones of column j in rows not yet fixed at depth d; a column
        # whose R pattern is empty must pay for all of them
        ordered = self.err0[self.order]
        self.rest0 = np.vstack([np.cumsum(ordered[::-1], axis=0)[::-1], np.zeros((1, self.m), dtype=np.int64)])
        P = 1 << cfg.k
        # pair (l, l+1) stays "tied" while C columns l and l+1 agree on all rows so far
        self.pairs_all = (1 << max(cfg.k - 1, 0)) - 1
        pats = np.arange(P)
        self.bit = [(pats >> l) & 1 for l in range(cfg.k)]

    def root(self):
        cost = np.zeros((1 << self.k, self.m), dtype=np.int64)
        tie = self.pairs_all if self.cfg.symmetry_breaking else 0
        return (0, cost, (), tie, 0)

    def allowed(self, tie: int) -> np.ndarray:
        ok = np.ones(1 << self.k, dtype=bool)
        for l in range(self.k - 1):
            if tie >> l & 1:
                ok &= self.bit[l] >= self.bit[l + 1]
        return ok

    def next_tie(self, tie: int, p: int) -> int:
        for l in range(self.k - 1):
            if tie >> l & 1 and (p >> l & 1) != (p >> (l + 1) & 1):
                tie &= ~(1 << l)
        return tie

    def children(self, node):
        depth, cost, pats, tie, _ = node
        i = self.order[depth]
        add = np.where(self.H[:, :, None], self.err1[i][None, None, :], self.err0[i][None, None, :])
        costs = cost[None] + add  # p, q, j
        best = costs[:, 1:, :].min(axis=1)
        best = np.minimum(best, costs[:, 0, :] + self.rest0[depth + 1][None, :])
        bounds = best @ self.beta
        allowed = np.flatnonzero(self.allowed(tie))
        return costs, bounds, allowed

    def factorization(self, pats) -> Factorization:
        C = np.zeros((self.n, self.k), dtype=np.uint8)
        C[self.order[: len(pats)]] = _patterns_to_matrix(pats, self.k)
        R, _ = _best_r(C, self.X, self.alpha, self.beta)
        return Factorization(BooleanMatrix(C), BooleanMatrix(R))

    def run(self, stack, incumbent, deadline, node_limit, shared=None):
        """
        DFS from the nodes on ``stack``.

        Returns ``(best_value, best_patterns, nodes, stopped, remaining)``,
        where ``best_patterns`` is None if nothing better than ``incumbent``
        was found and ``remaining`` are the unexplored nodes when stopped.
        """
        best_val, best_pats = incumbent, None
        nodes = 0
        trace = []
        while stack:
            if shared is not None and nodes % 64 == 0:
                best_val = min(best_val, shared.value)
            if node_limit is not None and nodes >= node_limit:
                return best_val, best_pats, nodes, NODE_LIMIT, stack, trace
            if time.perf_counter() >= deadline:
                return best_val, best_pats, nodes, TIME_LIMIT, stack, trace
            node = stack.pop()
            if node[4] >= best_val:
                continue
            nodes += 1
            depth, _, pats, tie, _ = node
            costs, bounds, allowed = self.children(node)
            if depth + 1 == self.n:
                p = int(allowed[np.argmin(bounds[allowed])])
                if bounds[p] < best_val:
                    best_val, best_pats = int(bounds[p]), pats + (p,)
                    trace.append((time.perf_counter(), best_val))
                    if shared is not None:
                        with shared.get_lock():
                            shared.value = min(shared.value, best_val)
                continue
            # push worst first so the best child (smallest pattern on ties) is popped next
            keep = [int(p) for p in allowed if bounds[p] < best_val]
            keep.sort(key=lambda p: (bounds[p], p), reverse=True)
            for p in keep:
                stack.append((depth + 1, costs[p], pats + (p,), self.next_tie(tie, p), int(bounds[p])))
        return best_val, best_pats, nodes, OPTIMAL, stack, trace


def _initial_incumbent(W: WeightedInstance, cfg: SolveConfig) -> Factorization:
    n, m = W.matrix.shape
    if cfg.warm_start:
        F = greedy_warm_start(W, cfg.k)
        return alternating_refine(W, F)
    return Factorization(BooleanMatrix.zeros(n, cfg.k), BooleanMatrix.zeros(cfg.k, m))


_shared_best = None


def _init_worker(shared):
    global _shared_best
    _shared_best = shared


def _solve_subtree(args):
    W, cfg, node, incumbent, deadline, node_limit = args
    search = _Search(W, cfg)
    best_val, best_pats, nodes, status, rest, trace = search.run(
        [node], incumbent, deadline, node_limit, shared=_shared_best
    )
    open_lb = min((nd[4] for nd in rest), default=None)
    return best_val, best_pats, nodes, status, open_lb, trace


def branch_and_bound(W: WeightedInstance, cfg: SolveConfig) -> SolveResult:
    """
    Anytime exact search.

    The incumbent starts from the greedy warm start (or all-zero factors) and
    the reported lower bound is the smallest bound over unexplored nodes.
    With ``cfg.workers > 1`` the subtrees below a small frontier are explored
    in separate processes sharing the incumbent value.
    """
    t0 = time.perf_counter()
    deadline = t0 + cfg.time_limit
    if W.is_empty:
        return SolveResult(None, 0, 0, 0, time.perf_counter() - t0, OPTIMAL)
    if W.shape[0] > W.shape[1]:
        # branch over the shorter side
        res = branch_and_bound(WeightedInstance.weighted(W.matrix.T, W.beta, W.alpha), cfg)
        res.incumbent = Factorization(res.incumbent.R.T, res.incumbent.C.T)
        res.elapsed = time.perf_counter() - t0
        return res
    search = _Search(W, cfg)
    F0 = _initial_incumbent(W, cfg)
    best_val = weighted_error(W, F0)
    best_F = F0
    trace = [(time.perf_counter() - t0, best_val)]
    root = search.root()

    if cfg.workers == 1:
        val, pats, nodes, status, rest, tr = search.run([root], best_val, deadline, cfg.node_limit)
        if pats is not None:
            best_val, best_F = val, search.factorization(pats)
        trace.extend((t - t0, v) for t, v in tr)
        open_lb = min((nd[4] for nd in rest), default=None)
    else:
        val, best_F, nodes, status, open_lb, tr = _parallel(search, root, best_val, best_F, deadline, cfg)
        best_val = min(best_val, val)
        trace.extend((t - t0, v) for t, v in tr)

    if status == OPTIMAL or open_lb is None:
        lower = best_val
    else:
        lower = min(best_val, open_lb)
    assert weighted_error(W, best_F) == best_val
    log.debug("b&b k=%d: obj=%d lb=%d nodes=%d status=%s", cfg.k, best_val, lower, nodes, status)
    return SolveResult(best_F, best_val, lower, nodes, time.perf_counter() - t0, status, trace)


def _parallel(search: _Search, root, best_val, best_F, deadline, cfg: SolveConfig):
    # expand breadth-first until there is enough work to share out
    frontier = [root]
    nodes = 0
    target = 4 * cfg.workers
    while frontier and len(frontier) < target and frontier[0][0] + 1 < search.n:
        nxt = []
        for node in frontier:
            nodes += 1
            depth, _, pats, tie, _ = node
            costs, bounds, allowed = search.children(node)
            for p in allowed:
                p = int(p)
                if bounds[p] < best_val:
                    nxt.append((depth + 1, costs[p], pats + (p,), search.next_tie(tie, p), int(bounds[p])))
        frontier = nxt
    frontier.sort(key=lambda nd: (nd[4], nd[2]))
    shared = mp.get_context("fork").Value("q", best_val)
    per_task = None if cfg.node_limit is None else max(1, cfg.node_limit // max(len(frontier), 1))
    W = WeightedInstance.weighted(BooleanMatrix(search.X), search.alpha, search.beta)
    tasks = [(W, cfg, nd, best_val, deadline, per_task) for nd in frontier]
    status = OPTIMAL
    open_lbs = []
    trace = []
    with ProcessPoolExecutor(
        max_workers=cfg.workers, mp_context=mp.get_context("fork"), initializer=_init_worker, initargs=(shared,)
    ) as pool:
        for val, pats, n_sub, st, lb, tr in pool.map(_solve_subtree, tasks):
            nodes += n_sub
            trace.extend(tr)
            if pats is not None and val < best_val:
                best_val, best_F = val, search.factorization(pats)
            if st != OPTIMAL:
                status = st if status == OPTIMAL else status
                if lb is not None:
                    open_lbs.append(lb)
    trace.sort()
    return best_val, best_F, nodes, status, (min(open_lbs) if open_lbs else None), trace


# -- pipeline --------------------------------------------------------------------


@dataclass
class FactorizeOutcome:
    instance: WeightedInstance
    result: SolveResult
    factorization: Factorization  # original space
    error: int  # recomputed on the original matrix


def factorize(X: BooleanMatrix, cfg: SolveConfig, preprocess: bool = True) -> FactorizeOutcome:
    """Reduce (optionally), solve, expand, and re-score on the original matrix."""
    W = reduce(X) if preprocess else WeightedInstance.unreduced(X)
    result = branch_and_bound(W, cfg)
    F = expand(W, result.incumbent, rank=cfg.k)
    error = approximation_error(X, boolean_product(F.C, F.R))
    if error != result.objective:
        raise RuntimeError(f"re-scored error {error} differs from solver objective {result.objective}")
    return FactorizeOutcome(W, result, F, error)


def percent_reconstructed(error: int, n: int, m: int) -> float:
    return 100.0 * (1.0 - error / (n * m))
