"""End-to-end checks of the package's headline guarantees.

Each test here pins a contract the rest of the suite relies on: exact
inference oracles, gradient correctness, decoder exactness, reasoner
equivalence with a naive fixpoint, a scaled-down learning target, metric
identities, and byte-level reproducibility.  A per-test verdict panel is
printed by tests/conftest.py after the run.
"""

import math
import random
import time

import numpy as np
import pytest

import oracles
from proofqa import cli
from proofqa.data import GenConfig, generate_examples
from proofqa.decode import decode_proof, infer, predict_answer, predict_nodes
from proofqa.metrics import evaluate
from proofqa.model import (VARIANTS, EncoderConfig, ModelParams, QDist,
                           TrainConfig, grad, loss, train_model)
from proofqa.pgm import (Assignment, LogPotentials, conditional_answer,
                         conditional_edge, conditional_node,
                         exact_conditional, exact_log_partition, num_pairs,
                         pair_index, pseudolikelihood_log)
from proofqa.reasoner import extract_proofs, forward_chain, validate_proof_graph
from proofqa.theory import parse_query


def test_closed_form_conditionals_match_enumeration():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_cond = 0.0
    worst_pl = 0.0
    for m in (2, 3):
        for _ in range(100):
            lp = LogPotentials.random(rng, m)
            y = Assignment.random(rng, m)
            reference_pl = 0.0

            dist = exact_conditional(lp, y, ("a",))
            fast = conditional_answer(lp, y.v, y.e)
            worst_cond = max(worst_cond, float(np.abs(dist - fast).max()))
            reference_pl += math.log(dist[y.a])

            for i in range(m):
                dist = exact_conditional(lp, y, ("v", i))
                fast = conditional_node(lp, y, i)
                worst_cond = max(worst_cond, float(np.abs(dist - fast).max()))
                reference_pl += math.log(dist[y.v[i]])

            for i in range(m):
                for j in range(m):
                    if i == j:
                        continue
                    dist = exact_conditional(lp, y, ("e", i, j))
                    fast = conditional_edge(lp, y, i, j)
                    worst_cond = max(worst_cond,
                                     float(np.abs(dist - fast).max()))
                    reference_pl += math.log(dist[y.e[pair_index(i, j, m)]])

            worst_pl = max(worst_pl,
                           abs(pseudolikelihood_log(lp, y) - reference_pl))
    elapsed = time.perf_counter() - start
    assert worst_cond <= 1e-9
    assert worst_pl <= 1e-8
    assert elapsed < 10.0


def test_uniform_potentials_give_known_partition():
    for m in (2, 3, 4):
        lp = LogPotentials(np.zeros(2), np.zeros((m, 4)),
                           np.zeros((num_pairs(m), 16)))
        count = 1 + m + m * (m - 1)
        assert exact_log_partition(lp) == pytest.approx(count * math.log(2),
                                                        abs=1e-12)
    lp2 = LogPotentials(np.zeros(2), np.zeros((2, 4)), np.zeros((2, 16)))
    assert abs(exact_log_partition(lp2) - 5 * math.log(2)) < 1e-13


def test_training_gradients_match_finite_differences():
    start = time.perf_counter()
    examples = generate_examples(GenConfig(num_examples=10, max_depth=1,
                                           facts_range=(1, 2),
                                           rules_range=(1, 1), seed=7))
    assert all(len(ex.theory.statements) + 1 <= 4 for ex in examples)
    enc = EncoderConfig(hash_dim=256, embed_dim=8, hidden_dim=8, seed=7)
    rng = np.random.default_rng(7)
    h = 1e-4
    worst = 0.0
    for variant in VARIANTS:
        for ex in examples:
            params = ModelParams.init(enc)
            for name in params.arrays:
                params.arrays[name] = rng.uniform(
                    -0.3, 0.3, size=params.arrays[name].shape)
            analytic = grad(params, ex, variant)
            names = sorted(params.arrays)
            for _ in range(50):
                name = names[int(rng.integers(len(names)))]
                flat = params.arrays[name].ravel()
                k = int(rng.integers(flat.size))
                keep = flat[k]
                flat[k] = keep + h
                up = loss(params, ex, variant)
                flat[k] = keep - h
                down = loss(params, ex, variant)
                flat[k] = keep
                fd = (up - down) / (2 * h)
                an = analytic[name].ravel()[k]
                worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-6))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-4
    assert elapsed < 60.0


def test_reference_posterior_decodes_reference_graph():
    # Three statements fact/fact/rule (no failure node); the posterior puts
    # the first fact and the rule in the proof, joined by one edge, and the
    # potentials favor a true answer.  Every other bit must come out zero.
    m = 3
    kinds = ["fact", "fact", "rule"]
    q_v = np.array([[0.1, 0.9], [0.9, 0.1], [0.1, 0.9]])
    e_true = np.full(num_pairs(m), 0.1)
    e_true[pair_index(0, 2, m)] = 0.9
    q = QDist(q_a=np.array([0.1, 0.9]), q_v=q_v,
              q_e=np.stack([1.0 - e_true, e_true], axis=1))

    nodes = predict_nodes(q)
    assert nodes == {0, 2}
    dec = decode_proof(q, nodes, kinds)
    assert dec.exact

    v_hat = np.array([int(i in dec.graph.nodes) for i in range(m)])
    e_hat = np.zeros(num_pairs(m), dtype=np.int64)
    for i, j in dec.graph.edges:
        e_hat[pair_index(i, j, m)] = 1
    lp = LogPotentials(np.array([0.0, 2.0]), np.zeros((m, 4)),
                       np.zeros((num_pairs(m), 16)))
    answer = predict_answer(lp, v_hat, e_hat)

    assert answer == 1
    assert v_hat.tolist() == [1, 0, 1]
    expected_e = np.zeros(num_pairs(m), dtype=np.int64)
    expected_e[pair_index(0, 2, m)] = 1
    assert np.array_equal(e_hat, expected_e)


def test_edge_search_is_exact_and_valid():
    rng = np.random.default_rng(17)
    for trial in range(200):
        m = 2 + trial % 5
        q, kinds = oracles.random_qdist(rng, m)
        dec = decode_proof(q, predict_nodes(q), kinds)
        assert dec.exact
        problems = validate_proof_graph(dec.graph, dict(enumerate(kinds)))
        assert problems == [], problems
        best = oracles.exhaustive_best_edges(q, dec.graph.nodes, kinds)
        assert best is not None
        assert dec.objective == pytest.approx(best, abs=1e-9)


def _theory_attributes(theory):
    attrs = set()
    for s in theory.statements:
        if s.kind == "fact":
            attrs.add(s.fact.attribute)
        else:
            attrs.add(s.head.attribute)
            attrs.update(lit.attribute for lit in s.body)
    return sorted(attrs)


def test_forward_chaining_matches_reference_fixpoint():
    rng = random.Random(23)
    replayed = 0
    for _ in range(500):
        theory = oracles.random_theory(rng)
        ds = forward_chain(theory)
        derived, depth = oracles.naive_fixpoint(theory)
        assert ds.derived == frozenset(derived)
        assert dict(ds.depth) == depth
        for entity in sorted(theory.entities()):
            for attr in _theory_attributes(theory):
                for negated in (False, True):
                    text = (f"{entity} is not {attr}." if negated
                            else f"{entity} is {attr}.")
                    query = parse_query(text)
                    for proof in extract_proofs(ds, query, cap=6):
                        problems = oracles.replay_proof(theory, query, proof,
                                                        derived)
                        assert problems == [], problems
                        replayed += 1
    assert replayed > 1000


@pytest.fixture(scope="module")
def trained_run():
    """One full generate/train/evaluate pass shared by the learning checks."""
    start = time.perf_counter()
    examples = generate_examples(GenConfig(num_examples=2500, max_depth=1,
                                           seed=7))
    train_set, test_set = examples[:2000], examples[2000:]
    result = train_model(train_set, None, TrainConfig(seed=7),
                         EncoderConfig())
    predictions = []
    for ex in test_set:
        pred = infer(result.params, ex.theory, ex.query)
        pred.example_id = ex.id
        predictions.append(pred)
    metrics = evaluate(predictions, test_set)
    return metrics, time.perf_counter() - start


def test_trained_model_answers_and_proves_held_out_queries(trained_run):
    metrics, elapsed = trained_run
    assert metrics.count == 500
    assert metrics.qa >= 0.90
    assert metrics.per_depth[0].pa >= 0.85
    assert elapsed < 600.0


def test_full_accuracy_bounded_by_answer_and_proof(trained_run):
    metrics, _ = trained_run
    assert metrics.fa <= min(metrics.qa, metrics.pa) + 1e-12
    for row in metrics.per_depth.values():
        assert row.fa <= min(row.qa, row.pa) + 1e-12


def test_pipeline_is_byte_reproducible(tmp_path):
    def run(tag):
        data = tmp_path / f"data_{tag}.jsonl"
        model = tmp_path / f"model_{tag}.json"
        assert cli.main(["generate", "--num", "24", "--seed", "11",
                         "--out", str(data)]) == 0
        assert cli.main(["train", "--train", str(data), "--model", str(model),
                         "--epochs", "2", "--batch", "4", "--seed", "11"]) == 0
        log = model.parent / (model.name + ".log.jsonl")
        return data.read_bytes(), model.read_bytes(), log.read_bytes()

    assert run("a") == run("b")
