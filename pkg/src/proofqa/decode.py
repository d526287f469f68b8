"""Constrained decoding of a proof graph from the variational posterior.

Node selection thresholds the node posteriors (with an argmax fallback so
the set is never empty).  Edge decoding maximises the sum of posterior
log-odds of the included edges subject to the structural constraints:

    C1  both endpoints are selected nodes
    C2  every edge destination is a rule; sources may be fact, NAF or rule
    C3  the directed graph is acyclic
    C4  the graph is weakly connected whenever two or more nodes are selected
    C5  a single selected node means no edges at all

The search is an exact branch-and-bound over the C1/C2 candidate edges with
an admissible bound (current score plus all remaining positive scores).  It
falls back to a deterministic greedy-connect construction when the node set
is larger than ``max_nodes_exact`` or the expansion budget derived from
``time_budget_ms`` runs out; fallback results are flagged.  When no edge set
can connect the selected nodes, the lowest-probability nodes are dropped
until the remainder is connectable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pgm import LogPotentials, conditional_answer, num_pairs, pair_index
from .reasoner import NAF, ProofGraph
from .theory import Query, Theory

#: Deterministic stand-in for wall-clock budgeting: branch-and-bound node
#: expansions allowed per millisecond of ``time_budget_ms``.
EXPANSIONS_PER_MS = 100


@dataclass(frozen=True)
class DecodeConfig:
    node_threshold: float = 0.5
    max_nodes_exact: int = 10
    time_budget_ms: int = 2000


@dataclass
class DecodedProof:
    """Index-level decode result; ``exact`` is False after a greedy fallback."""

    graph: ProofGraph
    objective: float
    exact: bool


@dataclass
class Prediction:
    answer: int
    proof: ProofGraph
    v_hat: np.ndarray
    e_hat: np.ndarray
    exact: bool = True
    example_id: str | None = None


def predict_nodes(q, cfg: DecodeConfig = DecodeConfig()) -> set[int]:
    """Indices with node posterior >= threshold; argmax fallback, lowest index wins ties."""
    chosen = {int(i) for i in np.flatnonzero(q.q_v[:, 1] >= cfg.node_threshold)}
    if chosen:
        return chosen
    return {int(np.argmax(q.q_v[:, 1]))}


def _candidates(nodes: set[int], kinds) -> list[tuple[int, int]]:
    """C1/C2-admissible ordered pairs, sorted by index."""
    return [(i, j) for i in sorted(nodes) for j in sorted(nodes)
            if i != j and kinds[j] == "rule"]


def _connectable(nodes: set[int], cand: list[tuple[int, int]]) -> bool:
    if len(nodes) <= 1:
        return True
    neighbours: dict[int, set[int]] = {n: set() for n in nodes}
    for i, j in cand:
        neighbours[i].add(j)
        neighbours[j].add(i)
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        for nxt in neighbours[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen == nodes


def _weakly_connected(nodes: set[int], edges) -> bool:
    return _connectable(nodes, list(edges))


def _creates_cycle(edges: set[tuple[int, int]], new: tuple[int, int]) -> bool:
    src, dst = new
    stack = [dst]
    seen = set()
    while stack:
        n = stack.pop()
        if n == src:
            return True
        if n in seen:
            continue
        seen.add(n)
        stack.extend(d for s, d in edges if s == n)
    return False


def decode_proof(q, nodes: set[int], kinds, cfg: DecodeConfig = DecodeConfig()
                 ) -> DecodedProof:
    """Highest-scoring feasible edge set over the selected nodes.

    ``kinds`` maps node index to "fact" | "rule" | "naf" (any sequence or
    mapping indexable by node).  Infeasible node sets are repaired by
    dropping the node with the smallest posterior (larger index dropped on
    ties) until the rest can be connected.
    """
    m = q.q_v.shape[0]
    nodes = set(nodes)
    while len(nodes) > 1 and not _connectable(nodes, _candidates(nodes, kinds)):
        drop = min(nodes, key=lambda i: (q.q_v[i, 1], -i))
        nodes.remove(drop)

    if len(nodes) == 1:
        return DecodedProof(ProofGraph.make(nodes), 0.0, True)

    cand = _candidates(nodes, kinds)
    log_q = np.log(q.q_e)
    score = {(i, j): float(log_q[pair_index(i, j, m), 1] - log_q[pair_index(i, j, m), 0])
             for i, j in cand}

    if len(nodes) > cfg.max_nodes_exact:
        edges = _greedy_connect(nodes, cand, score)
        return DecodedProof(ProofGraph.make(nodes, edges),
                            sum(score[e] for e in edges), False)

    budget = cfg.time_budget_ms * EXPANSIONS_PER_MS
    result = _branch_and_bound(nodes, cand, score, budget)
    if result is None:
        edges = _greedy_connect(nodes, cand, score)
        return DecodedProof(ProofGraph.make(nodes, edges),
                            sum(score[e] for e in edges), False)
    edges, total = result
    return DecodedProof(ProofGraph.make(nodes, edges), total, True)


def _greedy_connect(nodes: set[int], cand, score) -> set[tuple[int, int]]:
    """Positive edges first (cycle-free), then cheapest repairs to connect."""
    chosen: set[tuple[int, int]] = set()
    for edge in sorted(cand, key=lambda e: (-score[e], e)):
        if score[edge] <= 0:
            break
        if not _creates_cycle(chosen, edge):
            chosen.add(edge)
    while not _weakly_connected(nodes, chosen):
        parts = _components(nodes, chosen)
        best_edge = None
        for edge in sorted(cand, key=lambda e: (-score[e], e)):
            if edge in chosen or parts[edge[0]] == parts[edge[1]]:
                continue
            if not _creates_cycle(chosen, edge):
                best_edge = edge
                break
        if best_edge is None:
            break
        chosen.add(best_edge)
    return chosen


def _components(nodes: set[int], edges) -> dict[int, int]:
    comp = {n: n for n in nodes}

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            comp[ri] = rj
    return {n: find(n) for n in nodes}


def _branch_and_bound(nodes, cand, score, budget):
    """Exact DFS over include/exclude decisions; None when the budget runs out."""
    order = sorted(cand, key=lambda e: (-score[e], e))
    pos_suffix = np.zeros(len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        pos_suffix[k] = pos_suffix[k + 1] + max(0.0, score[order[k]])

    best_edges: set[tuple[int, int]] | None = None
    best_score = -np.inf
    expansions = 0

    def remaining_connectable(k, chosen):
        return _connectable(nodes, list(chosen) + order[k:])

    def dfs(k, chosen, total):
        nonlocal best_edges, best_score, expansions
        if expansions > budget:
            raise _Budget
        expansions += 1
        if total + pos_suffix[k] <= best_score:
            return
        if not remaining_connectable(k, chosen):
            return
        if k == len(order):
            if _weakly_connected(nodes, chosen):
                if total > best_score:
                    best_score = total
                    best_edges = set(chosen)
            return
        edge = order[k]
        if not _creates_cycle(chosen, edge):
            chosen.add(edge)
            dfs(k + 1, chosen, total + score[edge])
            chosen.remove(edge)
        dfs(k + 1, chosen, total)

    try:
        dfs(0, set(), 0.0)
    except _Budget:
        return None
    if best_edges is None:
        return None
    return best_edges, best_score


class _Budget(Exception):
    pass


def predict_answer(lp: LogPotentials, v: np.ndarray, e: np.ndarray) -> int:
    """Joint-model answer given decoded proof bits; exact ties resolve to 0."""
    dist = conditional_answer(lp, v, e)
    return int(dist[1] > dist[0])


def node_kinds(theory: Theory) -> list[str]:
    """Kind per node index: NAF at 0, then statement kinds in order."""
    return ["naf"] + [s.kind for s in theory.statements]


def infer(params, theory: Theory, query: Query,
          cfg: DecodeConfig = DecodeConfig()) -> Prediction:
    """Full pipeline: encode, variational posterior, decode, joint answer."""
    from .model import compute_potentials, compute_variational, encode

    reps = encode(params, theory, query)
    lp = compute_potentials(params, reps)
    q = compute_variational(params, reps)
    kinds = node_kinds(theory)
    dec = decode_proof(q, predict_nodes(q, cfg), kinds, cfg)

    m = len(theory.statements) + 1
    v_hat = np.zeros(m, dtype=np.int64)
    for i in dec.graph.nodes:
        v_hat[i] = 1
    e_hat = np.zeros(num_pairs(m), dtype=np.int64)
    for i, j in dec.graph.edges:
        e_hat[pair_index(i, j, m)] = 1
    answer = predict_answer(lp, v_hat, e_hat)

    names = [NAF] + [s.id for s in theory.statements]
    proof = ProofGraph.make({names[i] for i in dec.graph.nodes},
                            {(names[i], names[j]) for i, j in dec.graph.edges})
    return Prediction(answer=answer, proof=proof, v_hat=v_hat, e_hat=e_hat,
                      exact=dec.exact)
