"""Joint true/false answering and proof-graph generation over rule text."""

from .theory import (Atom, Literal, Query, Statement, Theory, parse_query,
                     parse_statement, render_query, render_statement,
                     theory_from_texts)
from .reasoner import (NAF, DerivationSet, DerivationStep, Example, ProofGraph,
                       answer_query, extract_proofs, forward_chain, query_depth,
                       validate_proof_graph)
from .pgm import (Assignment, LogPotentials, conditional_answer,
                  conditional_edge, conditional_node, exact_conditional,
                  exact_log_partition, joint_log_score, pseudolikelihood_log)
from .model import (EncoderConfig, ModelParams, QDist, Reps, TrainConfig,
                    compute_potentials, compute_variational, encode, grad,
                    hard_predictions, load_checkpoint, loss, proof_bits,
                    save_checkpoint, train, train_model)
from .decode import (DecodeConfig, Prediction, decode_proof, infer,
                     predict_answer, predict_nodes)
from .data import (GenConfig, generate_example, generate_examples,
                   read_examples, write_examples)
from .metrics import Metrics, evaluate, format_table, report
from .estimator import JointProofClassifier

__version__ = "0.1.0"

__all__ = [
    "Atom", "Literal", "Query", "Statement", "Theory",
    "parse_query", "parse_statement", "render_query", "render_statement",
    "theory_from_texts",
    "NAF", "DerivationSet", "DerivationStep", "Example", "ProofGraph",
    "answer_query", "extract_proofs", "forward_chain", "query_depth",
    "validate_proof_graph",
    "Assignment", "LogPotentials", "conditional_answer", "conditional_edge",
    "conditional_node", "exact_conditional", "exact_log_partition",
    "joint_log_score", "pseudolikelihood_log",
    "EncoderConfig", "ModelParams", "QDist", "Reps", "TrainConfig",
    "compute_potentials", "compute_variational", "encode", "grad",
    "hard_predictions", "load_checkpoint", "loss", "proof_bits",
    "save_checkpoint", "train", "train_model",
    "DecodeConfig", "Prediction", "decode_proof", "infer", "predict_answer",
    "predict_nodes",
    "GenConfig", "generate_example", "generate_examples", "read_examples",
    "write_examples",
    "Metrics", "evaluate", "format_table", "report",
    "JointProofClassifier",
]
