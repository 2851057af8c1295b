"""Tensor core: primitive semantics, backward rules, grad checking, optimizers."""

import math

import numpy as np
import pytest

from treebench.numcore import (
    Adadelta,
    Adam,
    NumericError,
    PRIMITIVES,
    SGD,
    ShapeError,
    Tape,
    TapeError,
    Tensor,
    add,
    apply_primitive,
    backward,
    clip_global_norm,
    concat,
    cross_entropy_with_logits,
    cumulative_sum,
    embedding_lookup,
    exp,
    grad_check,
    make_optimizer,
    matmul,
    mean,
    mul,
    no_grad,
    recording,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
    tensor,
    uniform_param,
)


def leaf(data):
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=True)


def run_backward(f, *leaves):
    with recording() as tape:
        out = f(*leaves)
    backward(tape, out)
    return out


# ---------------------------------------------------------------------------
# forward semantics
# ---------------------------------------------------------------------------

def test_sigmoid_at_zero():
    assert sigmoid(tensor([0.0])).data[0] == 0.5


def test_softmax_symmetry():
    out = softmax(tensor([0.0, 0.0, 0.0]))
    np.testing.assert_array_equal(out.data, np.full(3, 1.0 / 3.0))


def test_matmul_hand_example():
    out = matmul(tensor([[1.0, 2.0], [3.0, 4.0]]), tensor([[1.0], [1.0]]))
    np.testing.assert_array_equal(out.data, [[3.0], [7.0]])


def test_apply_primitive_dispatch():
    out = apply_primitive("add", tensor([1.0]), tensor([2.0]))
    assert out.data[0] == 3.0
    out = apply_primitive("softmax", tensor([0.0, 0.0]), axis=-1)
    np.testing.assert_allclose(out.data, [0.5, 0.5])
    with pytest.raises(ShapeError):
        apply_primitive("does_not_exist", tensor([1.0]))


def test_shape_mismatch_raises():
    with pytest.raises(ShapeError):
        add(tensor([1.0, 2.0]), tensor([1.0, 2.0, 3.0]))
    with pytest.raises(ShapeError):
        matmul(tensor([[1.0, 2.0]]), tensor([[1.0, 2.0]]))


def test_non_finite_output_names_primitive():
    big = tensor([1e308])
    with pytest.raises(NumericError, match="add"):
        add(big, big)
    with pytest.raises(NumericError, match="exp"):
        exp(tensor([1000.0]))


def test_constructor_rejects_non_finite():
    with pytest.raises(NumericError):
        Tensor(np.array([np.nan]))


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------

def test_backward_square():
    x = leaf([3.0])
    run_backward(lambda t: sum_(mul(t, t)), x)
    np.testing.assert_array_equal(x.grad, [6.0])


def test_backward_sum_all_ones():
    x = leaf([[1.0, 2.0], [3.0, 4.0]])
    run_backward(sum_, x)
    np.testing.assert_array_equal(x.grad, np.ones((2, 2)))


def test_backward_cross_entropy_uniform():
    logits = leaf([0.0, 0.0])
    run_backward(lambda t: cross_entropy_with_logits(t, 0), logits)
    np.testing.assert_allclose(logits.grad, [-0.5, 0.5])


def test_backward_requires_scalar_loss():
    x = leaf([1.0, 2.0])
    with recording() as tape:
        y = mul(x, x)
    with pytest.raises(TapeError):
        backward(tape, y)


def test_backward_loss_not_on_tape():
    x = leaf([1.0])
    with recording() as tape:
        mul(x, x)
    stranger = tensor(1.0)
    with pytest.raises(TapeError):
        backward(tape, stranger)


def test_backward_consumes_tape():
    x = leaf([2.0])
    with recording() as tape:
        loss = sum_(mul(x, x))
    backward(tape, loss)
    assert len(tape) == 0


def test_tape_topological_order():
    x = leaf([1.0, 2.0])
    with recording() as tape:
        y = mul(x, x)
        z = add(y, x)
        sum_(z)
        produced = set()
        for node in tape.nodes:
            for t in node.inputs:
                assert id(t) in produced or t is x
            produced.add(id(node.output))


def test_grad_accumulates_across_backwards():
    x = leaf([1.0])
    run_backward(lambda t: sum_(mul(t, t)), x)
    with recording() as tape:
        loss = sum_(mul(x, x))
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, [4.0])


def test_backward_linearity():
    rng = np.random.default_rng(7)
    for _ in range(10):
        xd = rng.uniform(-1.0, 1.0, 6)
        a, b = rng.uniform(0.5, 2.0, 2)

        def loss1(t):
            return sum_(mul(sigmoid(t), t))

        def loss2(t):
            return sum_(tanh(mul(t, t)))

        x1 = leaf(xd)
        run_backward(loss1, x1)
        x2 = leaf(xd)
        run_backward(loss2, x2)
        x3 = leaf(xd)
        run_backward(lambda t: add(mul(loss1(t), tensor(a)), mul(loss2(t), tensor(b))), x3)
        np.testing.assert_allclose(x3.grad, a * x1.grad + b * x2.grad, atol=1e-10)


def test_cumulative_sum_exact_prefix_sums():
    rng = np.random.default_rng(3)
    x = rng.uniform(-10, 10, 64)
    out = cumulative_sum(tensor(x)).data
    running = 0.0
    for k in range(64):
        running += x[k]
        assert out[k] == running


def test_deterministic_bit_identical():
    rng = np.random.default_rng(5)
    xd = rng.standard_normal(16)
    wd = rng.standard_normal((16, 16)) * 0.3

    def run():
        x = leaf(xd)
        w = leaf(wd)
        with recording() as tape:
            loss = sum_(tanh(matmul(w, sigmoid(x))))
        backward(tape, loss)
        return loss.data.copy(), x.grad.copy(), w.grad.copy()

    first, second = run(), run()
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# grad_check
# ---------------------------------------------------------------------------

def test_grad_check_polynomial_exact():
    x = tensor([3.0])
    assert grad_check(lambda t: sum_(mul(t, t)), x) < 1e-8


def test_grad_check_sigmoid_chain():
    rng = np.random.default_rng(0)
    x = tensor(rng.uniform(-1.0, 1.0, 8))
    assert grad_check(lambda t: sum_(sigmoid(t)), x) < 1e-6


def test_grad_check_constant_function():
    x = tensor([1.0, 2.0])
    c = tensor(5.0)
    assert grad_check(lambda t: mul(c, c), x) == 0.0


def test_grad_check_rejects_bad_eps():
    with pytest.raises(ValueError):
        grad_check(lambda t: sum_(t), tensor([1.0]), eps=0.0)


def _primitive_cases(rng):
    """(name, build scalar loss from a probe tensor, probe data) per primitive."""
    v6 = lambda: rng.uniform(-1.0, 1.0, 6)
    m23 = lambda: rng.uniform(-1.0, 1.0, (2, 3))
    other6 = tensor(rng.uniform(-1.0, 1.0, 6))
    mat36 = tensor(rng.uniform(-1.0, 1.0, (3, 6)))
    return [
        ("add", lambda t: sum_(mul(add(t, other6), add(t, other6))), v6()),
        ("sub", lambda t: sum_(mul(sub(t, other6), sub(t, other6))), v6()),
        ("mul", lambda t: sum_(mul(t, other6)), v6()),
        ("matmul", lambda t: sum_(tanh(matmul(mat36, t))), v6()),
        ("concat", lambda t: sum_(mul(concat((t, other6)), concat((t, other6)))), v6()),
        ("slice", lambda t: sum_(mul(slice_(t, 1, 4), slice_(t, 2, 5))), v6()),
        ("sigmoid", lambda t: sum_(sigmoid(t)), v6()),
        ("tanh", lambda t: sum_(tanh(t)), v6()),
        ("relu", lambda t: sum_(relu(t)), v6() + 0.05),
        ("exp", lambda t: sum_(exp(t)), v6()),
        ("softmax", lambda t: sum_(mul(softmax(t, axis=-1), other6)), v6()),
        ("cumulative_sum", lambda t: sum_(tanh(cumulative_sum(t, axis=-1))), v6()),
        ("reshape", lambda t: sum_(mul(reshape(t, (3, 2)), reshape(t, (3, 2)))), v6()),
        ("sum", lambda t: mul(sum_(t, axis=0), sum_(t, axis=0)), v6()),
        ("mean", lambda t: sum_(tanh(mean(t, axis=1))), m23()),
        ("embedding_lookup",
         lambda t: sum_(tanh(embedding_lookup(t, [0, 1, 1]))), m23()),
        ("cross_entropy_with_logits",
         lambda t: cross_entropy_with_logits(t, 1), v6()),
    ]


def test_every_primitive_grad_check_100_random_inputs():
    rng = np.random.default_rng(42)
    covered = set()
    for trial in range(100):
        for name, loss_fn, data in _primitive_cases(rng):
            covered.add(name)
            err = grad_check(loss_fn, tensor(data))
            assert err < 1e-4, f"{name} trial {trial}: rel error {err}"
    assert covered == set(PRIMITIVES)


def test_relu_gradient_blocks_negative():
    x = leaf([-1.5, 2.0])
    run_backward(lambda t: sum_(relu(t)), x)
    np.testing.assert_array_equal(x.grad, [0.0, 1.0])


def test_embedding_gradient_hits_looked_up_rows_only():
    table = leaf(np.arange(12.0).reshape(4, 3))
    run_backward(lambda t: sum_(embedding_lookup(t, [1, 1])), table)
    expected = np.zeros((4, 3))
    expected[1] = 2.0
    np.testing.assert_array_equal(table.grad, expected)
    with pytest.raises(ShapeError):
        embedding_lookup(table, [4])


def test_no_grad_suppresses_recording():
    x = leaf([1.0])
    with recording() as tape:
        with no_grad():
            y = mul(x, x)
    assert len(tape) == 0 and not y.requires_grad


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def _param(value):
    p = Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)
    return p


def test_sgd_step():
    p = _param([1.0])
    p.grad = np.array([2.0])
    opt = SGD([p], lr=0.1)
    opt.step()
    np.testing.assert_allclose(p.data, [0.8])
    assert opt.step_count == 1


def test_adam_first_step_magnitude_is_lr():
    p = _param([0.0])
    p.grad = np.array([5.0])
    opt = Adam([p], lr=0.001)
    opt.step()
    assert abs(abs(p.data[0]) - 0.001) < 1e-6


def test_adadelta_first_step_hand_evaluated():
    # rho=0.95, eps=1e-6, zero accumulators, g=1:
    # E[g^2] = 0.05, delta = -sqrt(eps)/sqrt(0.05 + eps)
    p = _param([0.0])
    p.grad = np.array([1.0])
    opt = Adadelta([p], lr=1.0, rho=0.95, eps=1e-6)
    opt.step()
    expected = -math.sqrt(1e-6) / math.sqrt(0.05 + 1e-6)
    np.testing.assert_allclose(p.data, [expected], rtol=1e-12)
    assert abs(expected - (-4.47e-3)) < 5e-5


def test_optimizer_missing_gradient():
    p = _param([1.0])
    opt = SGD([p], lr=0.1)
    with pytest.raises(ValueError, match="no gradient"):
        opt.step()


def test_optimizer_step_counter_increments():
    p = _param([1.0])
    opt = make_optimizer("adam", [p])
    for expected in range(1, 4):
        p.grad = np.array([1.0])
        opt.step()
        assert opt.step_count == expected


def test_make_optimizer_rejects_unknown_kind():
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", [_param([1.0])])


def test_clip_global_norm():
    p1, p2 = _param([3.0]), _param([4.0])
    p1.grad, p2.grad = np.array([3.0]), np.array([4.0])
    norm = clip_global_norm([p1, p2], max_norm=1.0)
    assert norm == pytest.approx(5.0)
    total = math.sqrt(float(p1.grad**2 + p2.grad**2))
    assert total == pytest.approx(1.0)
    # below the threshold nothing changes
    p1.grad, p2.grad = np.array([0.3]), np.array([0.4])
    clip_global_norm([p1, p2], max_norm=1.0)
    np.testing.assert_allclose(p1.grad, [0.3])


def test_uniform_param_bounds():
    rng = np.random.default_rng(1)
    p = uniform_param(rng, (50, 16))
    bound = 1.0 / math.sqrt(16.0)
    assert p.requires_grad
    assert np.all(np.abs(p.data) <= bound)
