"""Accuracy aggregation and reporting."""

import numpy as np
import pytest

from proofqa.data import GenConfig, generate_examples
from proofqa.decode import Prediction
from proofqa.errors import IdMismatch, LengthMismatch
from proofqa.metrics import evaluate, format_table, report
from proofqa.reasoner import Example, ProofGraph
from proofqa.theory import parse_query, theory_from_texts


def _example(id, answer, depth, proofs):
    theory = theory_from_texts(["Alan is young.", "Alan is kind."])
    return Example(id=id, theory=theory, query=parse_query("Alan is young."),
                   answer=answer, depth=depth, gold_proofs=proofs)


def _prediction(answer, proof, example_id=None):
    return Prediction(answer=answer, proof=proof, v_hat=np.zeros(3),
                      e_hat=np.zeros(6), example_id=example_id)


def _fixture():
    g1 = ProofGraph.make({"F1"})
    g2 = ProofGraph.make({"F1", "R1"}, {("F1", "R1")})
    examples = [
        _example("a", True, 0, (g1,)),
        _example("b", False, 0, (g1, g2)),
        _example("c", True, 1, (g2,)),
    ]
    predictions = [
        _prediction(1, g1),                       # both right
        _prediction(1, g2),                       # answer wrong, proof right
        _prediction(1, ProofGraph.make({"R1"})),  # answer right, proof wrong
    ]
    return predictions, examples


def test_exact_fractions():
    m = evaluate(*_fixture())
    assert m.count == 3
    assert m.qa == pytest.approx(2 / 3)
    assert m.pa == pytest.approx(2 / 3)
    assert m.fa == pytest.approx(1 / 3)


def test_per_depth_rows():
    m = evaluate(*_fixture())
    assert sorted(m.per_depth) == [0, 1]
    d0, d1 = m.per_depth[0], m.per_depth[1]
    assert (d0.count, d0.qa, d0.pa, d0.fa) == (2, 0.5, 1.0, 0.5)
    assert (d1.count, d1.qa, d1.pa, d1.fa) == (1, 1.0, 0.0, 0.0)


def test_proof_must_match_some_gold_exactly():
    g_extra = ProofGraph.make({"F1", "R1"})  # right nodes, missing the edge
    ex = _example("a", True, 1,
                  (ProofGraph.make({"F1", "R1"}, {("F1", "R1")}),))
    m = evaluate([_prediction(1, g_extra)], [ex])
    assert m.pa == 0.0


def test_full_accuracy_never_exceeds_components():
    rng = np.random.default_rng(0)
    graphs = [ProofGraph.make({"F1"}), ProofGraph.make({"F2"}),
              ProofGraph.make({"F1", "R1"}, {("F1", "R1")})]
    for _ in range(50):
        n = int(rng.integers(1, 8))
        examples = [_example(str(i), bool(rng.integers(2)),
                             int(rng.integers(3)),
                             (graphs[int(rng.integers(3))],))
                    for i in range(n)]
        predictions = [_prediction(int(rng.integers(2)),
                                   graphs[int(rng.integers(3))])
                       for _ in range(n)]
        m = evaluate(predictions, examples)
        assert m.fa <= min(m.qa, m.pa) + 1e-12
        for row in m.per_depth.values():
            assert row.fa <= min(row.qa, row.pa) + 1e-12


def test_misaligned_lengths_rejected():
    preds, examples = _fixture()
    with pytest.raises(LengthMismatch):
        evaluate(preds[:2], examples)


def test_id_checked_only_when_present():
    preds, examples = _fixture()
    preds[0] = _prediction(1, ProofGraph.make({"F1"}), example_id="zzz")
    with pytest.raises(IdMismatch):
        evaluate(preds, examples)
    preds[0] = _prediction(1, ProofGraph.make({"F1"}), example_id="a")
    assert evaluate(preds, examples).count == 3


def test_empty_evaluation_is_all_zero():
    m = evaluate([], [])
    assert (m.qa, m.pa, m.fa, m.count) == (0.0, 0.0, 0.0, 0)
    assert m.per_depth == {}


def test_report_is_json_ready():
    doc = report(evaluate(*_fixture()))
    assert set(doc) == {"qa", "pa", "fa", "per_depth"}
    assert set(doc["per_depth"]) == {"0", "1"}
    assert doc["per_depth"]["1"]["count"] == 1


def test_table_layout():
    text = format_table(evaluate(*_fixture()))
    lines = text.splitlines()
    assert lines[0].split() == ["D", "Cnt", "QA", "PA", "FA"]
    assert lines[-1].split()[0] == "All"
    assert len(lines) == 4  # header, depth 0, depth 1, footer


def test_generated_examples_evaluate_perfectly_against_gold():
    examples = generate_examples(GenConfig(num_examples=8, seed=13))
    preds = [_prediction(int(ex.answer), ex.gold_proofs[0], ex.id)
             for ex in examples]
    m = evaluate(preds, examples)
    assert (m.qa, m.pa, m.fa) == (1.0, 1.0, 1.0)
