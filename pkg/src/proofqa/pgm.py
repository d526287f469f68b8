"""Undirected joint model over binary indicators (answer, nodes, edges).

For m candidate proof nodes the variables are A, V_0..V_{m-1} and one E_ij
per ordered pair i != j.  The unnormalized log score of an assignment is

    phi_a[a] + sum_i phi_v[i, 2*v_i + a] + sum_ij phi_e[ij, 8*v_i + 4*v_j + 2*e_ij + a]

with tables stored in log space; the index encodings place the earlier
variable of the tuple at the more significant bit.  Ordered pairs are laid
out row-major: (0,1), (0,2), ..., (1,0), (1,2), ...

Exact partition and exact conditionals enumerate assignments and exist as
small-instance oracles; the closed-form conditionals below them are what the
rest of the package uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, TooLarge

#: Exact enumeration refuses instances with more state bits than this.
MAX_EXACT_BITS = 22


@lru_cache(maxsize=None)
def pair_table(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Source and destination index arrays for the row-major pair layout."""
    src = np.array([i for i in range(m) for j in range(m) if i != j], dtype=np.int64)
    dst = np.array([j for i in range(m) for j in range(m) if i != j], dtype=np.int64)
    return src, dst


def pair_index(i: int, j: int, m: int) -> int:
    """Row index of ordered pair (i, j) in the pair layout for m nodes."""
    if i == j or not (0 <= i < m and 0 <= j < m):
        raise IndexError(f"bad pair ({i}, {j}) for m={m}")
    return i * (m - 1) + (j if j < i else j - 1)


def num_pairs(m: int) -> int:
    return m * (m - 1)


@dataclass
class LogPotentials:
    """Log-space factor tables; shapes (2,), (m, 4), (m*(m-1), 16)."""

    phi_a: np.ndarray
    phi_v: np.ndarray
    phi_e: np.ndarray

    def __post_init__(self):
        self.phi_a = np.asarray(self.phi_a, dtype=np.float64)
        self.phi_v = np.asarray(self.phi_v, dtype=np.float64)
        self.phi_e = np.asarray(self.phi_e, dtype=np.float64)
        m = self.phi_v.shape[0] if self.phi_v.ndim == 2 else -1
        if self.phi_a.shape != (2,) or self.phi_v.shape != (m, 4):
            raise DimensionMismatch(
                f"bad table shapes {self.phi_a.shape}, {self.phi_v.shape}")
        if self.phi_e.shape != (num_pairs(m), 16):
            raise DimensionMismatch(
                f"phi_e shape {self.phi_e.shape} does not match m={m}")

    @property
    def m(self) -> int:
        return self.phi_v.shape[0]

    @staticmethod
    def zeros(m: int) -> "LogPotentials":
        return LogPotentials(np.zeros(2), np.zeros((m, 4)), np.zeros((num_pairs(m), 16)))

    @staticmethod
    def random(rng: np.random.Generator, m: int, scale: float = 1.0) -> "LogPotentials":
        return LogPotentials(
            rng.normal(0.0, scale, size=2),
            rng.normal(0.0, scale, size=(m, 4)),
            rng.normal(0.0, scale, size=(num_pairs(m), 16)),
        )


@dataclass
class Assignment:
    """One joint configuration: answer bit, node bits (m,), edge bits (m*(m-1),)."""

    a: int
    v: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=np.int64)
        self.e = np.asarray(self.e, dtype=np.int64)
        if self.a not in (0, 1):
            raise DimensionMismatch(f"answer bit must be 0/1, got {self.a}")
        if self.e.shape != (num_pairs(len(self.v)),):
            raise DimensionMismatch(
                f"edge bits {self.e.shape} do not match m={len(self.v)}")

    @property
    def m(self) -> int:
        return len(self.v)

    def copy(self) -> "Assignment":
        return Assignment(self.a, self.v.copy(), self.e.copy())

    @staticmethod
    def random(rng: np.random.Generator, m: int) -> "Assignment":
        return Assignment(
            int(rng.integers(0, 2)),
            rng.integers(0, 2, size=m),
            rng.integers(0, 2, size=num_pairs(m)),
        )


def _check(lp: LogPotentials, y: Assignment):
    if lp.m != y.m:
        raise DimensionMismatch(f"potentials have m={lp.m}, assignment m={y.m}")


def _edge_columns(v: np.ndarray, e: np.ndarray, a: int, m: int) -> np.ndarray:
    src, dst = pair_table(m)
    return 8 * v[src] + 4 * v[dst] + 2 * e + a


def joint_log_score(lp: LogPotentials, y: Assignment) -> float:
    """Unnormalized log score of one assignment."""
    _check(lp, y)
    m = lp.m
    score = lp.phi_a[y.a]
    score += lp.phi_v[np.arange(m), 2 * y.v + y.a].sum()
    if m > 1:
        cols = _edge_columns(y.v, y.e, y.a, m)
        score += lp.phi_e[np.arange(num_pairs(m)), cols].sum()
    return float(score)


def state_bits(m: int) -> int:
    return 1 + m + num_pairs(m)


def exact_log_partition(lp: LogPotentials) -> float:
    """log-sum-exp of the score over all 2^B assignments (max-shift), B <= 22."""
    m = lp.m
    bits = state_bits(m)
    if bits > MAX_EXACT_BITS:
        raise TooLarge(f"{bits} state bits exceed the exact cap of {MAX_EXACT_BITS}")
    scores = _all_scores(lp)
    shift = scores.max()
    return float(shift + np.log(np.exp(scores - shift).sum()))


def _all_scores(lp: LogPotentials) -> np.ndarray:
    """Scores of every assignment, ordered by (a, v-bits, e-bits)."""
    m = lp.m
    p = num_pairs(m)
    e_states = _bit_matrix(p)              # (2^p, p)
    v_states = _bit_matrix(m)              # (2^m, m)
    pair_rows = np.arange(p)
    out = []
    for a in (0, 1):
        for v in v_states:
            base = lp.phi_a[a] + lp.phi_v[np.arange(m), 2 * v + a].sum()
            if p:
                cols = 8 * v[pair_table(m)[0]] + 4 * v[pair_table(m)[1]] + 2 * e_states + a
                edge_scores = lp.phi_e[pair_rows, cols].sum(axis=1)
                out.append(base + edge_scores)
            else:
                out.append(np.array([base]))
    return np.concatenate(out)


@lru_cache(maxsize=None)
def _bit_matrix(n: int) -> np.ndarray:
    """All length-n bit vectors, most significant bit first, as (2^n, n)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    codes = np.arange(2 ** n, dtype=np.int64)
    return (codes[:, None] >> np.arange(n - 1, -1, -1)) & 1


_VALID_VAR_KINDS = ("a", "v", "e")


def exact_conditional(lp: LogPotentials, y: Assignment, var: tuple) -> np.ndarray:
    """p(var | all other bits of y) from the exact joint, as a length-2 vector."""
    _check(lp, y)
    if state_bits(lp.m) > MAX_EXACT_BITS:
        raise TooLarge(f"{state_bits(lp.m)} state bits exceed {MAX_EXACT_BITS}")
    if not var or var[0] not in _VALID_VAR_KINDS:
        raise IndexError(f"bad variable id {var!r}")
    scores = np.empty(2)
    for value in (0, 1):
        y2 = y.copy()
        if var[0] == "a":
            y2.a = value
        elif var[0] == "v":
            y2.v[var[1]] = value
        else:
            y2.e[pair_index(var[1], var[2], lp.m)] = value
        scores[value] = joint_log_score(lp, y2)
    return _softmax_pair(scores)


def _softmax_pair(scores: np.ndarray) -> np.ndarray:
    shift = scores.max()
    w = np.exp(scores - shift)
    return w / w.sum()


def conditional_answer(lp: LogPotentials, v: np.ndarray, e: np.ndarray) -> np.ndarray:
    """p(A | V=v, E=e): every factor touches A, so all tables contribute."""
    v = np.asarray(v, dtype=np.int64)
    e = np.asarray(e, dtype=np.int64)
    m = lp.m
    if v.shape != (m,) or e.shape != (num_pairs(m),):
        raise DimensionMismatch(
            f"conditioning bits {v.shape}/{e.shape} do not match m={m}")
    scores = np.empty(2)
    rows_v = np.arange(m)
    rows_e = np.arange(num_pairs(m))
    for a in (0, 1):
        s = lp.phi_a[a] + lp.phi_v[rows_v, 2 * v + a].sum()
        if m > 1:
            s += lp.phi_e[rows_e, _edge_columns(v, e, a, m)].sum()
        scores[a] = s
    return _softmax_pair(scores)


def node_conditionals(lp: LogPotentials, y: Assignment) -> np.ndarray:
    """p(V_i | rest) for every i at once, as an (m, 2) row-stochastic array."""
    _check(lp, y)
    m, a = lp.m, y.a
    src, dst = pair_table(m)
    rows_e = np.arange(num_pairs(m))
    scores = np.empty((m, 2))
    for value in (0, 1):
        s = lp.phi_v[np.arange(m), 2 * value + a].copy()
        if m > 1:
            out_cols = 8 * value + 4 * y.v[dst] + 2 * y.e + a
            in_cols = 8 * y.v[src] + 4 * value + 2 * y.e + a
            np.add.at(s, src, lp.phi_e[rows_e, out_cols])
            np.add.at(s, dst, lp.phi_e[rows_e, in_cols])
        scores[:, value] = s
    shift = scores.max(axis=1, keepdims=True)
    w = np.exp(scores - shift)
    return w / w.sum(axis=1, keepdims=True)


def conditional_node(lp: LogPotentials, y: Assignment, i: int) -> np.ndarray:
    """p(V_i | rest): only the node factor and the edge factors touching i."""
    if not 0 <= i < lp.m:
        raise IndexError(f"node index {i} out of range for m={lp.m}")
    return node_conditionals(lp, y)[i]


def edge_conditionals(lp: LogPotentials, y: Assignment) -> np.ndarray:
    """p(E_ij | rest) for every ordered pair, as an (m*(m-1), 2) array."""
    _check(lp, y)
    m, a = lp.m, y.a
    src, dst = pair_table(m)
    rows = np.arange(num_pairs(m))
    scores = np.stack(
        [lp.phi_e[rows, 8 * y.v[src] + 4 * y.v[dst] + 2 * value + a] for value in (0, 1)],
        axis=1,
    )
    shift = scores.max(axis=1, keepdims=True)
    w = np.exp(scores - shift)
    return w / w.sum(axis=1, keepdims=True)


def conditional_edge(lp: LogPotentials, y: Assignment, i: int, j: int) -> np.ndarray:
    """p(E_ij | rest): only the single pair factor matters."""
    return edge_conditionals(lp, y)[pair_index(i, j, lp.m)]


def pseudolikelihood_log(lp: LogPotentials, y: Assignment) -> float:
    """Sum of the log conditional of every variable at its assigned value."""
    _check(lp, y)
    total = float(np.log(conditional_answer(lp, y.v, y.e)[y.a]))
    node_p = node_conditionals(lp, y)
    total += float(np.log(node_p[np.arange(lp.m), y.v]).sum())
    if lp.m > 1:
        edge_p = edge_conditionals(lp, y)
        total += float(np.log(edge_p[np.arange(num_pairs(lp.m)), y.e]).sum())
    return total
