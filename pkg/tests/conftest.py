"""Prints a one-line verdict per end-to-end check after the usual summary."""

_PANEL = [
    "test_closed_form_conditionals_match_enumeration",
    "test_uniform_potentials_give_known_partition",
    "test_training_gradients_match_finite_differences",
    "test_reference_posterior_decodes_reference_graph",
    "test_edge_search_is_exact_and_valid",
    "test_forward_chaining_matches_reference_fixpoint",
    "test_trained_model_answers_and_proves_held_out_queries",
    "test_full_accuracy_bounded_by_answer_and_proof",
    "test_pipeline_is_byte_reproducible",
]

_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _outcomes[name] = report.outcome
    elif report.outcome != "passed":  # setup/teardown error or skip
        _outcomes.setdefault(name, report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("end-to-end checks")
    for k, name in enumerate(_PANEL, start=1):
        outcome = _outcomes.get(name)
        verdict = {"passed": "PASS", "failed": "FAIL", None: "NOT RUN"}.get(
            outcome, outcome.upper() if outcome else "NOT RUN")
        terminalreporter.write_line(f"[{k}/{len(_PANEL)}] {name}: {verdict}")
