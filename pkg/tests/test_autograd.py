"""Reverse-mode tape: every op is checked against central finite differences."""

import numpy as np
import pytest

import proofqa.autograd as ag

RNG = np.random.default_rng(42)
H = 1e-6
TOL = 1e-6


def _fd_check(build, *shapes):
    """build(*tensors) -> scalar Tensor; compares grads on every input."""
    values = [RNG.uniform(-0.8, 0.8, size=s) for s in shapes]
    params = [ag.param(v.copy()) for v in values]
    out = build(*params)
    ag.backward(out)
    for v, p in zip(values, params):
        flat = v.ravel()
        for k in range(min(flat.size, 12)):
            keep = flat[k]
            flat[k] = keep + H
            up = float(build(*[ag.const(x) for x in values]).value)
            flat[k] = keep - H
            down = float(build(*[ag.const(x) for x in values]).value)
            flat[k] = keep
            fd = (up - down) / (2 * H)
            an = p.grad.ravel()[k]
            assert an == pytest.approx(fd, abs=5e-5, rel=TOL), f"param {k}"


def test_add_broadcast():
    _fd_check(lambda a, b: ag.total(ag.add(a, b)), (3, 4), (4,))


def test_sub():
    _fd_check(lambda a, b: ag.total(ag.sub(a, b)), (5,), (5,))


def test_mul():
    _fd_check(lambda a, b: ag.total(ag.mul(a, b)), (2, 3), (2, 3))


def test_scale_neg():
    _fd_check(lambda a: ag.total(ag.scale(ag.neg(a), 2.5)), (4,))


def test_matmul_2d():
    _fd_check(lambda a, b: ag.total(ag.matmul(a, b)), (3, 4), (4, 2))


def test_matmul_vector():
    _fd_check(lambda a, b: ag.total(ag.matmul(a, b)), (4,), (4, 3))


def test_tanh_exp():
    _fd_check(lambda a: ag.total(ag.exp(ag.tanh(a))), (6,))


def test_mean0():
    _fd_check(lambda a: ag.total(ag.mean0(a)), (5, 3))


def test_rows_accumulates_repeats():
    idx = np.array([0, 2, 2, 1])
    _fd_check(lambda a: ag.total(ag.rows(a, idx)), (4, 3))


def test_take2d():
    r = np.array([0, 1, 2])
    c = np.array([1, 0, 2])
    _fd_check(lambda a: ag.total(ag.take2d(a, r, c)), (3, 3))


def test_take():
    _fd_check(lambda a: ag.take(a, 2), (5,))


def test_segment_sum():
    seg = np.array([0, 1, 0, 2, 1])
    _fd_check(lambda a: ag.total(ag.exp(ag.segment_sum(a, seg, 3))), (5,))


def test_concat_axis0_axis1():
    _fd_check(lambda a, b: ag.total(ag.concat([a, b], axis=0)), (2, 3), (4, 3))
    _fd_check(lambda a, b: ag.total(ag.concat([a, b], axis=1)), (2, 3), (2, 2))


def test_transpose():
    _fd_check(lambda a: ag.total(ag.mul(ag.transpose(a), ag.transpose(a))), (2, 4))


def test_stack():
    _fd_check(lambda a, b: ag.total(ag.exp(ag.stack([a, b]))), (3,), (3,))


def test_log_softmax_1d_and_rows():
    _fd_check(lambda a: ag.take(ag.log_softmax(a), 1), (4,))
    _fd_check(lambda a: ag.total(ag.take2d(ag.log_softmax(a, axis=-1),
                                           np.array([0, 1]), np.array([2, 0]))),
              (2, 3))


def test_affine_and_mlp():
    _fd_check(lambda x, w, b: ag.total(ag.affine(x, w, b)), (3,), (3, 2), (2,))
    _fd_check(lambda x, w1, b1, w2, b2:
              ag.total(ag.mlp(x, w1, b1, w2, b2)),
              (4,), (4, 3), (3,), (3, 2), (2,))


def test_shared_subgraph_accumulates():
    x = ag.param(np.array([0.3, -0.2]))
    y = ag.tanh(x)
    out = ag.total(ag.add(ag.mul(y, y), ag.exp(y)))
    ag.backward(out)
    v = x.value
    t = np.tanh(v)
    want = (2 * t + np.exp(t)) * (1 - t ** 2)
    assert x.grad == pytest.approx(want, rel=1e-12)


def test_constants_do_not_track():
    c = ag.const(np.ones(3))
    p = ag.param(np.ones(3))
    out = ag.total(ag.mul(c, p))
    ag.backward(out)
    assert c.grad is None or not c.requires_grad
    assert p.grad == pytest.approx(np.ones(3))


def test_log_softmax_shifts_cancel():
    z = np.array([1.0, 2.0, 3.0])
    a = ag.log_softmax(ag.const(z)).value
    b = ag.log_softmax(ag.const(z + 100.0)).value
    assert a == pytest.approx(b, abs=1e-12)
    assert np.exp(a).sum() == pytest.approx(1.0, abs=1e-12)
