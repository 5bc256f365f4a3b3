"""
Integer programming formulations of weighted rank-k Boolean approximation.

Three variants share one variable set (c, r, z, y, xi):

* ``full``        every variable binary, both absolute-value rows per cell,
                  both coupling rows and the four McCormick rows per product;
* ``aggregated``  as ``full`` but the k rows ``y <= z`` of a cell are summed
                  into ``sum_l y <= k z``;
* ``improved``    only c and r binary, and for every cell only the rows that
                  can be active given the data bit x_ij.

Variables are ordered c, r, z, y, xi, each block lexicographic in its
indices.  Names use 1-based indices (``c_i_l``, ``r_l_j``, ``z_i_j``,
``y_i_l_j``, ``xi_i_j``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Union

import numpy as np
import scipy.sparse as sp

from .boolmat import BooleanMatrix, Factorization
from .reduce import WeightedInstance

FORMULATIONS = ("full", "improved", "aggregated")

LE, GE, EQ = "<=", ">=", "="


class VarRef(NamedTuple):
    kind: str  # one of c, r, z, y, xi
    index: tuple
    binary: bool = True

    @property
    def name(self) -> str:
        return self.kind + "_" + "_".join(str(i + 1) for i in self.index)

    @property
    def key(self) -> tuple:
        return (self.kind, self.index)


class Constraint(NamedTuple):
    name: str
    terms: tuple  # ((VarRef, coefficient), ...)
    sense: str
    rhs: float

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(coef * values[v.name] for v, coef in self.terms)

    def slack(self, values: Mapping[str, float]) -> float:
        """Signed slack; negative means violated."""
        lhs = self.activity(values)
        if self.sense == LE:
            return self.rhs - lhs
        if self.sense == GE:
            return lhs - self.rhs
        return -abs(lhs - self.rhs)

    def __str__(self):
        body = " ".join(f"{coef:+g} {v.name}" for v, coef in self.terms)
        return f"{self.name}: {body} {self.sense} {self.rhs:g}"


@dataclass
class MipModel:
    """Minimization MIP over variables bounded in [0, 1]."""

    formulation: str
    n: int
    m: int
    k: int
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)  # variable name -> coefficient
    name: str = "bmf"

    def __post_init__(self):
        self._index = {v.name: pos for pos, v in enumerate(self.variables)}

    def add_variable(self, v: VarRef) -> VarRef:
        if v.name in self._index:
            raise ValueError(f"duplicate variable {v.name}")
        self._index[v.name] = len(self.variables)
        self.variables.append(v)
        return v

    def var(self, name: str) -> VarRef:
        return self.variables[self._index[name]]

    def position(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def binary_variables(self) -> list:
        return [v for v in self.variables if v.binary]

    @property
    def n_binary(self) -> int:
        return sum(v.binary for v in self.variables)

    def counts(self) -> dict:
        senses = [c.sense for c in self.constraints]
        return {
            "variables": len(self.variables),
            "binary": self.n_binary,
            "continuous": len(self.variables) - self.n_binary,
            "constraints": len(self.constraints),
            "equalities": senses.count(EQ),
            "nonzeros": sum(len(c.terms) for c in self.constraints),
        }

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(coef * values[name] for name, coef in self.objective.items())

    def to_arrays(self):
        """
        Sparse row form ``lo <= A v <= hi`` in variable order, plus the
        objective vector and a binary mask.
        """
        rows, cols, data = [], [], []
        lo = np.empty(len(self.constraints))
        hi = np.empty(len(self.constraints))
        for r, con in enumerate(self.constraints):
            for v, coef in con.terms:
                rows.append(r)
                cols.append(self._index[v.name])
                data.append(coef)
            lo[r] = con.rhs if con.sense in (GE, EQ) else -np.inf
            hi[r] = con.rhs if con.sense in (LE, EQ) else np.inf
        A = sp.csr_matrix((data, (rows, cols)), shape=(len(self.constraints), len(self.variables)))
        obj = np.zeros(len(self.variables))
        for name, coef in self.objective.items():
            obj[self._index[name]] = coef
        binary = np.array([v.binary for v in self.variables], dtype=bool)
        return A, lo, hi, obj, binary


def mccormick_constraints(a: VarRef, b: VarRef, y: VarRef, tag: str = "mc") -> list:
    """
    The four inequalities describing ``y`` in the McCormick envelope of ``a*b``:
    ``y <= a``, ``y <= b``, ``y >= a + b - 1`` and ``y >= 0``.
    """
    if len({a.key, b.key, y.key}) != 3:
        raise ValueError("McCormick envelope needs three distinct variables")
    suffix = "_".join(str(i + 1) for i in y.index)
    return [
        Constraint(f"{tag}1_{suffix}", ((y, 1.0), (a, -1.0)), LE, 0.0),
        Constraint(f"{tag}2_{suffix}", ((y, 1.0), (b, -1.0)), LE, 0.0),
        Constraint(f"{tag}3_{suffix}", ((y, 1.0), (a, -1.0), (b, -1.0)), GE, -1.0),
        Constraint(f"{tag}4_{suffix}", ((y, 1.0),), GE, 0.0),
    ]


class _Vars:
    """Variable blocks of one model, indexed by 0-based tuples."""

    def __init__(self, model: MipModel, n: int, m: int, k: int, binary_aux: bool):
        self.c = {(i, l): model.add_variable(VarRef("c", (i, l))) for i in range(n) for l in range(k)}
        self.r = {(l, j): model.add_variable(VarRef("r", (l, j))) for l in range(k) for j in range(m)}
        self.z = {
            (i, j): model.add_variable(VarRef("z", (i, j), binary_aux)) for i in range(n) for j in range(m)
        }
        self.y = {
            (i, l, j): model.add_variable(VarRef("y", (i, l, j), binary_aux))
            for i in range(n)
            for l in range(k)
            for j in range(m)
        }
        self.xi = {
            (i, j): model.add_variable(VarRef("xi", (i, j), binary_aux)) for i in range(n) for j in range(m)
        }


def _prepare(W: Union[WeightedInstance, BooleanMatrix], k: int, formulation: str):
    if isinstance(W, BooleanMatrix):
        W = WeightedInstance.unreduced(W)
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    if W.is_empty:
        raise ValueError("cannot build a model for an empty instance")
    X = W.matrix.array
    n, m = X.shape
    model = MipModel(formulation, n, m, k, name=f"bmf_{formulation}_n{n}_m{m}_k{k}")
    V = _Vars(model, n, m, k, binary_aux=formulation != "improved")
    for i in range(n):
        for j in range(m):
            model.objective[V.xi[i, j].name] = float(W.alpha[i] * W.beta[j])
    return W, X, model, V


def _cells(n, m) -> Iterator[tuple[int, int]]:
    for i in range(n):
        for j in range(m):
            yield i, j


def _suffix(*idx) -> str:
    return "_".join(str(i + 1) for i in idx)


def _build_unreduced(W, k, formulation):
    W, X, model, V = _prepare(W, k, formulation)
    n, m = X.shape
    cons = model.constraints
    for i, j in _cells(n, m):
        x = float(X[i, j])
        z, xi = V.z[i, j], V.xi[i, j]
        # x - z <= xi  and  z - x <= xi
        cons.append(Constraint(f"e1a_{_suffix(i, j)}", ((z, 1.0), (xi, 1.0)), GE, x))
        cons.append(Constraint(f"e1b_{_suffix(i, j)}", ((z, 1.0), (xi, -1.0)), LE, x))
    for i, j in _cells(n, m):
        z = V.z[i, j]
        ys = [V.y[i, l, j] for l in range(k)]
        cons.append(Constraint(f"e2a_{_suffix(i, j)}", ((z, 1.0),) + tuple((y, -1.0) for y in ys), LE, 0.0))
        if formulation == "aggregated":
            cons.append(
                Constraint(f"e2b_{_suffix(i, j)}", tuple((y, 1.0) for y in ys) + ((z, -float(k)),), LE, 0.0)
            )
        else:
            for l, y in enumerate(ys):
                cons.append(Constraint(f"e2b_{_suffix(i, l, j)}", ((y, 1.0), (z, -1.0)), LE, 0.0))
    for i in range(n):
        for l in range(k):
            for j in range(m):
                cons.extend(mccormick_constraints(V.c[i, l], V.r[l, j], V.y[i, l, j]))
    return model


def build_full(W: Union[WeightedInstance, BooleanMatrix], k: int) -> MipModel:
    """All-binary formulation with McCormick linearization of every product c_il * r_lj."""
    return _build_unreduced(W, k, "full")


def build_aggregated(W: Union[WeightedInstance, BooleanMatrix], k: int) -> MipModel:
    """``build_full`` with the per-factor rows ``y <= z`` summed into ``sum_l y <= k z``."""
    return _build_unreduced(W, k, "aggregated")


def build_improved(W: Union[WeightedInstance, BooleanMatrix], k: int) -> MipModel:
    """
    Mixed-binary formulation with k(n+m) binary variables.

    Per cell, x_ij = 0 keeps ``z = xi``, ``y <= z`` and the lower McCormick
    pair; x_ij = 1 keeps ``z + xi = 1``, ``z <= sum_l y`` and the upper pair.
    """
    W, X, model, V = _prepare(W, k, "improved")
    n, m = X.shape
    cons = model.constraints
    for i, j in _cells(n, m):
        z, xi = V.z[i, j], V.xi[i, j]
        if X[i, j]:
            cons.append(Constraint(f"e6_{_suffix(i, j)}", ((z, 1.0), (xi, 1.0)), EQ, 1.0))
        else:
            cons.append(Constraint(f"e6_{_suffix(i, j)}", ((z, 1.0), (xi, -1.0)), EQ, 0.0))
    for i, j in _cells(n, m):
        z = V.z[i, j]
        if X[i, j]:
            terms = ((z, 1.0),) + tuple((V.y[i, l, j], -1.0) for l in range(k))
            cons.append(Constraint(f"e7_{_suffix(i, j)}", terms, LE, 0.0))
        else:
            for l in range(k):
                cons.append(Constraint(f"e7_{_suffix(i, j, l)}", ((V.y[i, l, j], 1.0), (z, -1.0)), LE, 0.0))
    for i in range(n):
        for l in range(k):
            for j in range(m):
                y, c, r = V.y[i, l, j], V.c[i, l], V.r[l, j]
                s = _suffix(i, l, j)
                if X[i, j]:
                    cons.append(Constraint(f"e8a_{s}", ((y, 1.0), (r, -1.0)), LE, 0.0))
                    cons.append(Constraint(f"e8b_{s}", ((y, 1.0), (c, -1.0)), LE, 0.0))
                else:
                    cons.append(Constraint(f"e8a_{s}", ((y, 1.0), (r, -1.0), (c, -1.0)), GE, -1.0))
                    cons.append(Constraint(f"e8b_{s}", ((y, 1.0),), GE, 0.0))
    return model


def build_model(W: Union[WeightedInstance, BooleanMatrix], k: int, formulation: str = "improved") -> MipModel:
    builders = {"full": build_full, "improved": build_improved, "aggregated": build_aggregated}
    try:
        builder = builders[formulation]
    except KeyError:
        raise ValueError(f"unknown formulation {formulation!r}; choose from {FORMULATIONS}") from None
    return builder(W, k)


def expected_counts(X: BooleanMatrix, k: int, formulation: str) -> dict:
    """Closed-form variable and constraint counts for a model over ``X``."""
    n, m = X.shape
    ones = X.ones_count()
    zeros = n * m - ones
    variables = 2 * n * m + k * (n + m) + n * m * k
    if formulation == "full":
        constraints = 2 * n * m + n * m + n * m * k + 4 * n * m * k
        binary = variables
    elif formulation == "aggregated":
        constraints = 2 * n * m + 2 * n * m + 4 * n * m * k
        binary = variables
    elif formulation == "improved":
        constraints = n * m + (zeros * k + ones) + 2 * n * m * k
        binary = k * (n + m)
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    return {"variables": variables, "binary": binary, "constraints": constraints}


# -- assignments -----------------------------------------------------------------


class Violation(NamedTuple):
    name: str
    slack: float

    def __str__(self):
        return f"{self.name} violated by {-self.slack:g}"


def canonical_assignment(X: BooleanMatrix, F: Factorization) -> dict:
    """
    Extend binary factors to every model variable:
    ``y = c*r``, ``z = min(1, sum_l y)``, ``xi = |x - z|``.
    """
    C = F.C.array.astype(np.int64)
    R = F.R.array.astype(np.int64)
    n, k = C.shape
    m = R.shape[1]
    if X.shape != (n, m):
        raise ValueError(f"factorization gives {n}x{m}, matrix is {X.shape}")
    values = {}
    for i in range(n):
        for l in range(k):
            values[f"c_{i + 1}_{l + 1}"] = float(C[i, l])
    for l in range(k):
        for j in range(m):
            values[f"r_{l + 1}_{j + 1}"] = float(R[l, j])
    Y = C[:, :, None] * R[None, :, :]
    Z = np.minimum(1, Y.sum(axis=1))
    Xi = np.abs(X.array.astype(np.int64) - Z)
    for i in range(n):
        for j in range(m):
            values[f"z_{i + 1}_{j + 1}"] = float(Z[i, j])
            values[f"xi_{i + 1}_{j + 1}"] = float(Xi[i, j])
            for l in range(k):
                values[f"y_{i + 1}_{l + 1}_{j + 1}"] = float(Y[i, l, j])
    return values


def check_feasible(model: MipModel, assignment: Mapping, tol: float = 1e-9) -> list:
    """
    Every bound, integrality requirement and constraint violated by ``assignment``.

    ``assignment`` maps variable names (or VarRefs) to values and must cover
    every variable of the model.  An empty list means feasible.
    """
    values = {}
    for key, val in assignment.items():
        values[key.name if isinstance(key, VarRef) else key] = float(val)
    missing = [v.name for v in model.variables if v.name not in values]
    if missing:
        raise KeyError(f"assignment is missing {len(missing)} variable(s), e.g. {missing[0]}")
    out = []
    for v in model.variables:
        val = values[v.name]
        if val < -tol:
            out.append(Violation(f"lb:{v.name}", val))
        if val > 1 + tol:
            out.append(Violation(f"ub:{v.name}", 1 - val))
        if v.binary and min(abs(val), abs(val - 1)) > tol:
            out.append(Violation(f"int:{v.name}", -min(abs(val), abs(val - 1))))
    for con in model.constraints:
        s = con.slack(values)
        if s < -tol:
            out.append(Violation(con.name, s))
    return out


def enumerate_optimum(model: MipModel, X: BooleanMatrix, chunk: int = 1 << 14) -> float:
    """
    Smallest objective over all binary (c, r) assignments, each extended by
    ``canonical_assignment`` and kept only if it satisfies every row of
    ``model``.  Exponential in k(n+m); meant for tiny instances.
    """
    n, m, k = model.n, model.m, model.k
    nbits = k * (n + m)
    if nbits > 24:
        raise ValueError(f"{nbits} binary factor entries is too many to enumerate")
    A, lo, hi, obj, _ = model.to_arrays()
    x = X.array.astype(np.int64)
    total = 1 << nbits
    best = np.inf
    shifts = np.arange(nbits, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (codes[:, None] >> shifts[None, :]) & 1
        C = bits[:, : n * k].reshape(-1, n, k)
        R = bits[:, n * k :].reshape(-1, k, m)
        Y = C[:, :, :, None] * R[:, None, :, :]  # batch, i, l, j
        Z = np.minimum(1, Y.sum(axis=2))
        Xi = np.abs(x[None] - Z)
        V = np.concatenate(
            [
                C.reshape(len(codes), -1),
                R.reshape(len(codes), -1),
                Z.reshape(len(codes), -1),
                Y.reshape(len(codes), -1),
                Xi.reshape(len(codes), -1),
            ],
            axis=1,
        ).astype(float)
        act = (A @ V.T).T
        ok = np.all((act >= lo - 1e-9) & (act <= hi + 1e-9), axis=1)
        if ok.any():
            best = min(best, float((V[ok] @ obj).min()))
    return best
