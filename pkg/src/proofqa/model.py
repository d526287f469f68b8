"""Parameterisation, losses, gradients and training for the joint model.

Six small heads sit on top of a hashed bag-of-tokens encoder: three produce
the log-potential tables of the joint model (answer, per-node, per-ordered-
pair), three produce the factorised variational distribution (answer, node,
edge posteriors).  Node and edge heads are shared across positions; the NAF
node's representation is an affine image of the instance representation.

The training objective is

    L = L_qa + L_node + L_edge            (+ L_kl for the *_kl variants)

where L_node / L_edge are cross-entropies of the variational node and edge
posteriors against the first gold proof, and L_qa is the negative log of the
conditional answer distribution of the joint model given the proof bits.
Variants:

    base     L_qa conditions on the hard variational predictions
    gold     L_qa conditions on the gold proof bits
    kl       base + sum of KL(q(var) || p(var | rest)) at the hard predictions
    gold_kl  gold + the same KL term

No gradient flows through the hard predictions themselves.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autograd as ag
from .errors import EmptyDataset, EmptyTheory, MissingGold, SchemaError
from .features import Features, featurize
from .pgm import Assignment, LogPotentials, num_pairs, pair_index, pair_table
from .reasoner import NAF, Example, ProofGraph
from .theory import Query, Theory

VARIANTS = ("base", "gold", "kl", "gold_kl")

#: Output widths of the six heads, in order.
_HEAD_OUT = {1: 2, 2: 4, 3: 16, 4: 2, 5: 2, 6: 2}
#: Heads that consume pair representations (three slices wide).
_PAIR_HEADS = (3, 6)

_ADAM_B1, _ADAM_B2, _ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass(frozen=True)
class EncoderConfig:
    hash_dim: int = 2048
    embed_dim: int = 64
    hidden_dim: int = 64
    seed: int = 0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 1e-3
    grad_clip: float = 1.0
    dropout: float = 0.0
    variant: str = "base"
    seed: int = 0


@dataclass
class Reps:
    """Representations for one instance: answer-level, per-node, per-pair."""

    h_cls: np.ndarray
    h_node: np.ndarray
    h_pair: np.ndarray
    pair_src: np.ndarray
    pair_dst: np.ndarray


@dataclass
class QDist:
    """Factorised variational posterior; every row sums to one."""

    q_a: np.ndarray
    q_v: np.ndarray
    q_e: np.ndarray


class ModelParams:
    """Named float64 parameter arrays plus the encoder configuration."""

    def __init__(self, encoder_config: EncoderConfig, arrays: dict[str, np.ndarray]):
        self.encoder_config = encoder_config
        self.arrays = arrays

    @staticmethod
    def param_names(cfg: EncoderConfig) -> list[str]:
        names = ["embed", "enc_w", "enc_b", "naf_w", "naf_b"]
        for k in range(1, 7):
            names += [f"mlp{k}_w1", f"mlp{k}_b1", f"mlp{k}_w2", f"mlp{k}_b2"]
        return names

    @staticmethod
    def shapes(cfg: EncoderConfig) -> dict[str, tuple]:
        h = cfg.hidden_dim
        shapes = {
            "embed": (cfg.hash_dim, cfg.embed_dim),
            "enc_w": (cfg.embed_dim, h),
            "enc_b": (h,),
            "naf_w": (h, h),
            "naf_b": (h,),
        }
        for k in range(1, 7):
            inp = 3 * h if k in _PAIR_HEADS else h
            shapes[f"mlp{k}_w1"] = (inp, h)
            shapes[f"mlp{k}_b1"] = (h,)
            shapes[f"mlp{k}_w2"] = (h, _HEAD_OUT[k])
            shapes[f"mlp{k}_b2"] = (_HEAD_OUT[k],)
        return shapes

    @staticmethod
    def init(cfg: EncoderConfig) -> "ModelParams":
        """Seeded uniform(-0.05, 0.05) everywhere except zeroed head outputs.

        Zero output layers make every initial potential exactly zero and the
        initial variational posterior exactly uniform.
        """
        rng = np.random.default_rng(cfg.seed)
        arrays = {}
        for name, shape in ModelParams.shapes(cfg).items():
            if name.endswith("_w2") or name.endswith("_b2"):
                arrays[name] = np.zeros(shape)
            else:
                arrays[name] = rng.uniform(-0.05, 0.05, size=shape)
        return ModelParams(cfg, arrays)

    def copy(self) -> "ModelParams":
        return ModelParams(self.encoder_config,
                           {k: v.copy() for k, v in self.arrays.items()})


# ---------------------------------------------------------------------------
# forward passes


def _mlp_np(x, w1, b1, w2, b2):
    return np.tanh(x @ w1 + b1) @ w2 + b2


def _softmax_np(z, axis=-1):
    shift = z.max(axis=axis, keepdims=True)
    w = np.exp(z - shift)
    return w / w.sum(axis=axis, keepdims=True)


def encode(params: ModelParams, theory: Theory, query: Query,
           feats: Features | None = None) -> Reps:
    """Deterministic representations for one instance.

    The NAF node occupies row 0 of ``h_node``; pair rows follow the row-major
    ordered-pair layout.  Every pair row is the concatenation of the source
    representation, the destination representation and their difference.
    """
    if not theory.statements:
        raise EmptyTheory("encode needs at least one statement")
    a = params.arrays
    cfg = params.encoder_config
    if feats is None:
        feats = featurize(theory, query, cfg.hash_dim)
    embed = a["embed"]
    cls_mean = embed[feats.cls_idx].mean(axis=0)
    h_cls = cls_mean @ a["enc_w"] + a["enc_b"]
    naf_rep = h_cls @ a["naf_w"] + a["naf_b"]
    sent_means = np.stack([embed[idx].mean(axis=0) for idx in feats.node_idx])
    stmt_reps = sent_means @ a["enc_w"] + a["enc_b"]
    h_node = np.concatenate([naf_rep[None, :], stmt_reps], axis=0)
    hi = h_node[feats.pair_src]
    hj = h_node[feats.pair_dst]
    h_pair = np.concatenate([hi, hj, hi - hj], axis=1)
    return Reps(h_cls=h_cls, h_node=h_node, h_pair=h_pair,
                pair_src=feats.pair_src, pair_dst=feats.pair_dst)


def _head_np(params: ModelParams, k: int, x):
    a = params.arrays
    return _mlp_np(x, a[f"mlp{k}_w1"], a[f"mlp{k}_b1"],
                   a[f"mlp{k}_w2"], a[f"mlp{k}_b2"])


def compute_potentials(params: ModelParams, reps: Reps) -> LogPotentials:
    return LogPotentials(
        phi_a=_head_np(params, 1, reps.h_cls),
        phi_v=_head_np(params, 2, reps.h_node),
        phi_e=_head_np(params, 3, reps.h_pair),
    )


def compute_variational(params: ModelParams, reps: Reps) -> QDist:
    return QDist(
        q_a=_softmax_np(_head_np(params, 4, reps.h_cls)),
        q_v=_softmax_np(_head_np(params, 5, reps.h_node), axis=-1),
        q_e=_softmax_np(_head_np(params, 6, reps.h_pair), axis=-1),
    )


def hard_predictions(q: QDist) -> Assignment:
    """Componentwise argmax with ties (exactly 0.5) resolving to 0."""
    return Assignment(
        int(q.q_a[1] > q.q_a[0]),
        (q.q_v[:, 1] > q.q_v[:, 0]).astype(np.int64),
        (q.q_e[:, 1] > q.q_e[:, 0]).astype(np.int64),
    )


# ---------------------------------------------------------------------------
# gold proof bits


def proof_bits(theory: Theory, proof: ProofGraph) -> tuple[np.ndarray, np.ndarray]:
    """Node and edge indicator vectors for a proof over this theory.

    Index 0 is the NAF node; statement k of the theory is index k + 1.
    """
    m = len(theory.statements) + 1
    index = {NAF: 0}
    for k, s in enumerate(theory.statements):
        index[s.id] = k + 1
    v = np.zeros(m, dtype=np.int64)
    e = np.zeros(num_pairs(m), dtype=np.int64)
    try:
        for node in proof.nodes:
            v[index[node]] = 1
        for s_id, d_id in proof.edges:
            e[pair_index(index[s_id], index[d_id], m)] = 1
    except KeyError as exc:
        raise MissingGold(f"proof references unknown statement id {exc}") from exc
    return v, e


# ---------------------------------------------------------------------------
# loss graph


def _forward_t(pt: dict, feats: Features, dropout: float = 0.0,
               drop_rng: np.random.Generator | None = None):
    """Tensor-mode forward shared by every variant."""

    def head(k: int, x):
        hidden = ag.tanh(ag.affine(x, pt[f"mlp{k}_w1"], pt[f"mlp{k}_b1"]))
        if dropout > 0.0 and drop_rng is not None:
            keep = (drop_rng.random(hidden.value.shape) >= dropout) / (1.0 - dropout)
            hidden = ag.mul(hidden, ag.const(keep))
        return ag.affine(hidden, pt[f"mlp{k}_w2"], pt[f"mlp{k}_b2"])

    cls_mean = ag.mean0(ag.rows(pt["embed"], feats.cls_idx))
    h_cls = ag.affine(cls_mean, pt["enc_w"], pt["enc_b"])
    naf = ag.affine(h_cls, pt["naf_w"], pt["naf_b"])
    means = ag.stack([ag.mean0(ag.rows(pt["embed"], idx)) for idx in feats.node_idx])
    stmts = ag.affine(means, pt["enc_w"], pt["enc_b"])
    h_node = ag.concat([ag.stack([naf]), stmts], axis=0)
    hi = ag.rows(h_node, feats.pair_src)
    hj = ag.rows(h_node, feats.pair_dst)
    h_pair = ag.concat([hi, hj, ag.sub(hi, hj)], axis=1)

    phi_a = head(1, h_cls)
    phi_v = head(2, h_node)
    phi_e = head(3, h_pair)
    qa_log = ag.log_softmax(head(4, h_cls))
    qv_log = ag.log_softmax(head(5, h_node), axis=-1)
    qe_log = ag.log_softmax(head(6, h_pair), axis=-1)
    return phi_a, phi_v, phi_e, qa_log, qv_log, qe_log


def _answer_scores_t(phi_a, phi_v, phi_e, v_bits, e_bits, feats: Features):
    """Log-conditional of the answer given fixed proof bits, as a (2,) tensor."""
    m = feats.m
    p = num_pairs(m)
    scores = []
    for a in (0, 1):
        s = ag.take(phi_a, a)
        s = ag.add(s, ag.total(ag.take2d(phi_v, np.arange(m), 2 * v_bits + a)))
        if p:
            cols = 8 * v_bits[feats.pair_src] + 4 * v_bits[feats.pair_dst] + 2 * e_bits + a
            s = ag.add(s, ag.total(ag.take2d(phi_e, np.arange(p), cols)))
        scores.append(s)
    return ag.log_softmax(ag.stack(scores))


def _kl_t(q_log, p_log):
    """KL(q || p) summed over rows, both given in log space."""
    return ag.total(ag.mul(ag.exp(q_log), ag.sub(q_log, p_log)))


def _kl_term_t(phi_a, phi_v, phi_e, qa_log, qv_log, qe_log,
               yhat: Assignment, feats: Features):
    """Sum over variables of KL(q(var) || p(var | rest)) at hard predictions."""
    m, p = feats.m, num_pairs(feats.m)
    src, dst = feats.pair_src, feats.pair_dst
    a_hat, v_hat, e_hat = yhat.a, yhat.v, yhat.e

    pa_log = _answer_scores_t(phi_a, phi_v, phi_e, v_hat, e_hat, feats)
    kl = _kl_t(qa_log, pa_log)

    per_value = []
    for value in (0, 1):
        s = ag.take2d(phi_v, np.arange(m), np.full(m, 2 * value) + a_hat)
        if p:
            out_cols = 8 * value + 4 * v_hat[dst] + 2 * e_hat + a_hat
            in_cols = 8 * v_hat[src] + 4 * value + 2 * e_hat + a_hat
            s = ag.add(s, ag.segment_sum(ag.take2d(phi_e, np.arange(p), out_cols), src, m))
            s = ag.add(s, ag.segment_sum(ag.take2d(phi_e, np.arange(p), in_cols), dst, m))
        per_value.append(s)
    pv_log = ag.log_softmax(ag.transpose(ag.stack(per_value)), axis=-1)
    kl = ag.add(kl, _kl_t(qv_log, pv_log))

    if p:
        cols = [8 * v_hat[src] + 4 * v_hat[dst] + 2 * value + a_hat for value in (0, 1)]
        pe_log = ag.log_softmax(
            ag.transpose(ag.stack([ag.take2d(phi_e, np.arange(p), c) for c in cols])),
            axis=-1)
        kl = ag.add(kl, _kl_t(qe_log, pe_log))
    return kl


def _loss_t(params: ModelParams, example: Example, variant: str,
            feats: Features | None = None,
            gold: tuple | None = None,
            dropout: float = 0.0,
            drop_rng: np.random.Generator | None = None):
    """Build the loss graph; returns (loss tensor, wrapped parameter dict)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if feats is None:
        feats = featurize(example.theory, example.query,
                          params.encoder_config.hash_dim)
    if gold is None:
        if not example.gold_proofs:
            raise MissingGold(f"example {example.id} carries no gold proof")
        v_star, e_star = proof_bits(example.theory, example.gold_proofs[0])
    else:
        v_star, e_star = gold
    a_star = int(example.answer)
    m, p = feats.m, num_pairs(feats.m)

    pt = {name: ag.param(arr) for name, arr in params.arrays.items()}
    phi_a, phi_v, phi_e, qa_log, qv_log, qe_log = _forward_t(
        pt, feats, dropout=dropout, drop_rng=drop_rng)

    loss = ag.neg(ag.total(ag.take2d(qv_log, np.arange(m), v_star)))
    if p:
        loss = ag.add(loss, ag.neg(ag.total(ag.take2d(qe_log, np.arange(p), e_star))))

    yhat = hard_predictions(QDist(
        q_a=_softmax_np(qa_log.value),
        q_v=_softmax_np(qv_log.value, axis=-1),
        q_e=_softmax_np(qe_log.value, axis=-1),
    ))
    if variant in ("gold", "gold_kl"):
        cond_v, cond_e = v_star, e_star
    else:
        cond_v, cond_e = yhat.v, yhat.e
    answer_log = _answer_scores_t(phi_a, phi_v, phi_e, cond_v, cond_e, feats)
    loss = ag.add(loss, ag.neg(ag.take(answer_log, a_star)))

    if variant in ("kl", "gold_kl"):
        loss = ag.add(loss, _kl_term_t(phi_a, phi_v, phi_e,
                                       qa_log, qv_log, qe_log, yhat, feats))
    return loss, pt


def loss(params: ModelParams, example: Example, variant: str = "base") -> float:
    """Scalar training loss of one example under the given variant."""
    node, _ = _loss_t(params, example, variant)
    return float(node.value)


def grad(params: ModelParams, example: Example, variant: str = "base"
         ) -> dict[str, np.ndarray]:
    """Analytic gradient of ``loss`` for every named parameter array."""
    node, pt = _loss_t(params, example, variant)
    ag.backward(node)
    return {name: (t.grad if t.grad is not None else np.zeros_like(t.value))
            for name, t in pt.items()}


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    params: ModelParams
    moments: dict
    history: list[dict] = field(default_factory=list)


def _clip_global(grads: dict[str, np.ndarray], clip: float) -> dict[str, np.ndarray]:
    if clip <= 0:
        return grads
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm > clip:
        factor = clip / norm
        return {k: g * factor for k, g in grads.items()}
    return grads


def train_model(train_set, dev_set, config: TrainConfig,
                encoder_config: EncoderConfig | None = None) -> TrainResult:
    """Minibatch Adam with gradient-norm clipping; see ``train`` for the contract.

    Keeps the parameters (and optimiser moments) of the epoch with the best
    dev full accuracy when a dev set is given, otherwise the final epoch.
    """
    from .decode import DecodeConfig, infer  # local import breaks the cycle
    from .metrics import evaluate

    if not train_set:
        raise EmptyDataset("train_model needs at least one training example")
    if config.variant not in VARIANTS:
        raise ValueError(f"unknown variant {config.variant!r}")
    if encoder_config is None:
        encoder_config = EncoderConfig(seed=config.seed)

    params = ModelParams.init(encoder_config)
    feats = [featurize(ex.theory, ex.query, encoder_config.hash_dim)
             for ex in train_set]
    gold = []
    for ex in train_set:
        if not ex.gold_proofs:
            raise MissingGold(f"example {ex.id} carries no gold proof")
        gold.append(proof_bits(ex.theory, ex.gold_proofs[0]))

    mom = {name: np.zeros_like(a) for name, a in params.arrays.items()}
    vel = {name: np.zeros_like(a) for name, a in params.arrays.items()}
    step = 0
    rng = np.random.default_rng(config.seed)
    history: list[dict] = []
    best: TrainResult | None = None
    best_fa = -1.0
    n = len(train_set)

    def snapshot() -> TrainResult:
        return TrainResult(
            params=params.copy(),
            moments={"step": step,
                     "m": {k: v.copy() for k, v in mom.items()},
                     "v": {k: v.copy() for k, v in vel.items()}},
            history=list(history),
        )

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            sums: dict[str, np.ndarray] | None = None
            for k in batch:
                drop_rng = (np.random.default_rng((config.seed, step, int(k)))
                            if config.dropout > 0 else None)
                node, pt = _loss_t(params, train_set[k], config.variant,
                                   feats=feats[k], gold=gold[k],
                                   dropout=config.dropout, drop_rng=drop_rng)
                ag.backward(node)
                epoch_loss += float(node.value)
                if sums is None:
                    sums = {name: (t.grad if t.grad is not None
                                   else np.zeros_like(t.value))
                            for name, t in pt.items()}
                else:
                    for name, t in pt.items():
                        if t.grad is not None:
                            sums[name] += t.grad
            grads = {name: g / len(batch) for name, g in sums.items()}
            grads = _clip_global(grads, config.grad_clip)
            step += 1
            lr = config.learning_rate
            for name, g in grads.items():
                mom[name] = _ADAM_B1 * mom[name] + (1 - _ADAM_B1) * g
                vel[name] = _ADAM_B2 * vel[name] + (1 - _ADAM_B2) * g * g
                mhat = mom[name] / (1 - _ADAM_B1 ** step)
                vhat = vel[name] / (1 - _ADAM_B2 ** step)
                params.arrays[name] -= lr * mhat / (np.sqrt(vhat) + _ADAM_EPS)

        row = {"epoch": epoch, "train_loss": epoch_loss / n}
        if dev_set:
            dcfg = DecodeConfig()
            preds = [infer(params, ex.theory, ex.query, dcfg) for ex in dev_set]
            m = evaluate(preds, dev_set)
            row.update({"dev_qa": m.qa, "dev_pa": m.pa, "dev_fa": m.fa})
            if m.fa > best_fa:
                best_fa = m.fa
                history.append(row)
                best = snapshot()
                continue
        history.append(row)

    if dev_set and best is not None:
        best.history = history
        return best
    return snapshot()


def train(train_set, dev_set, config: TrainConfig,
          encoder_config: EncoderConfig | None = None) -> ModelParams:
    """Train and return the parameters selected on dev full accuracy.

    With an empty or missing dev set the final-epoch parameters are returned.
    ``config.epochs == 0`` returns the freshly initialised parameters.
    """
    return train_model(train_set, dev_set, config, encoder_config).params


# ---------------------------------------------------------------------------
# checkpoints

_ENCODER_KEYS = ("embed", "enc_w", "enc_b")
_NAF_KEYS = ("naf_w", "naf_b")


def save_checkpoint(path, params: ModelParams, train_config: TrainConfig,
                    moments: dict | None = None):
    """Write a single JSON document with all parameters as flat float lists."""
    if moments is None:
        moments = {"step": 0,
                   "m": {k: np.zeros_like(v) for k, v in params.arrays.items()},
                   "v": {k: np.zeros_like(v) for k, v in params.arrays.items()}}
    doc = {
        "version": 1,
        "encoder_config": asdict(params.encoder_config),
        "train_config": asdict(train_config),
        "encoder": {k: params.arrays[k].ravel().tolist() for k in _ENCODER_KEYS},
        "naf_map": {k: params.arrays[k].ravel().tolist() for k in _NAF_KEYS},
        "heads": {k: v.ravel().tolist() for k, v in params.arrays.items()
                  if k.startswith("mlp")},
        "moments": {
            "step": int(moments["step"]),
            "m": {k: np.asarray(v).ravel().tolist() for k, v in moments["m"].items()},
            "v": {k: np.asarray(v).ravel().tolist() for k, v in moments["v"].items()},
        },
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n",
                          encoding="utf-8")


def load_checkpoint(path) -> tuple[ModelParams, TrainConfig, dict]:
    text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    if doc.get("version") != 1:
        raise SchemaError(f"unsupported checkpoint version {doc.get('version')!r}", 0)
    try:
        enc_cfg = EncoderConfig(**doc["encoder_config"])
        train_cfg = TrainConfig(**doc["train_config"])
        shapes = ModelParams.shapes(enc_cfg)
        arrays = {}
        merged = {**doc["encoder"], **doc["naf_map"], **doc["heads"]}
        for name, shape in shapes.items():
            arrays[name] = np.array(merged[name], dtype=np.float64).reshape(shape)
        moments = {
            "step": int(doc["moments"]["step"]),
            "m": {k: np.array(v, dtype=np.float64).reshape(shapes[k])
                  for k, v in doc["moments"]["m"].items()},
            "v": {k: np.array(v, dtype=np.float64).reshape(shapes[k])
                  for k, v in doc["moments"]["v"].items()},
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed checkpoint: {exc}", 0) from exc
    return ModelParams(enc_cfg, arrays), train_cfg, moments
