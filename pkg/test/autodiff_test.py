import numpy as np
import pytest
import scipy.sparse as sp

from exceptions import ContractError, NumericError, ShapeError
from services.autodiff import (
    Tape,
    Tensor,
    absolute,
    add,
    backward,
    concat,
    embedding_lookup,
    finite_difference_check,
    hadamard,
    logsumexp,
    matmul,
    reduce_max,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    scale,
    sigmoid,
    slice_rows,
    softplus,
    sub,
    tanh,
    transpose,
)


def test_forward_examples():
    assert relu(Tensor([-1.0, 0.0, 2.0])).values.tolist() == [0.0, 0.0, 2.0]
    a = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(matmul(Tensor(np.eye(2)), Tensor(a)).values, a)
    assert sigmoid(Tensor(0.0)).item() == 0.5


def test_sum_gradient_is_ones():
    x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with Tape() as tape:
        loss = reduce_sum(x)
    (g,) = backward(tape, loss, [x])
    assert g.tolist() == [1.0, 1.0, 1.0]


def test_square_gradient():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        loss = reduce_sum(hadamard(x, x))
    (g,) = backward(tape, loss, [x])
    assert g.tolist() == [2.0, 4.0]
    assert x.grad.tolist() == [2.0, 4.0]


def test_gradients_accumulate_over_uses():
    x = Tensor([0.5, -1.5], requires_grad=True)
    with Tape() as tape:
        loss = reduce_sum(add(x, x))
    (g,) = backward(tape, loss, [x])
    assert g.tolist() == [2.0, 2.0]


def test_unused_tensor_gets_zero_gradient():
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = Tensor([[3.0]], requires_grad=True)
    with Tape() as tape:
        loss = reduce_sum(x)
    gx, gy = backward(tape, loss, [x, y])
    assert gx.tolist() == [1.0, 1.0]
    assert gy.tolist() == [[0.0]]


def test_default_wrt_is_every_leaf():
    x = Tensor([1.0, 2.0], requires_grad=True, name="x")
    w = Tensor([3.0, 4.0], requires_grad=True, name="w")
    with Tape() as tape:
        loss = reduce_sum(hadamard(x, w))
    assert [t.name for t in tape.leaves()] == ["x", "w"]
    gx, gw = backward(tape, loss)
    assert gx.tolist() == [3.0, 4.0] and gw.tolist() == [1.0, 2.0]


def test_non_scalar_loss_rejected():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        out = scale(x, 2.0)
    with pytest.raises(ContractError):
        backward(tape, out, [x])


def test_shape_errors_name_both_shapes():
    with pytest.raises(ShapeError) as err:
        hadamard(Tensor(np.ones(3)), Tensor(np.ones(4)))
    assert "(3,)" in str(err.value) and "(4,)" in str(err.value)
    with pytest.raises(ShapeError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        add(Tensor(np.ones((2, 3))), Tensor(np.ones(2)))
    with pytest.raises(ShapeError):
        embedding_lookup(Tensor(np.ones((2, 3))), [0, 2])


def test_non_finite_forward_value_raises():
    with pytest.raises(NumericError):
        relu(Tensor([1.0, np.inf]))


def test_nothing_recorded_without_tape_or_grad():
    x = Tensor([1.0], requires_grad=True)
    out = scale(x, 3.0)
    assert out.requires_grad and out.node_id is None
    with Tape() as tape:
        scale(Tensor([1.0]), 3.0)
    assert len(tape) == 0


def test_tape_dump_lists_operations():
    x = Tensor(np.ones((2, 2)), requires_grad=True, name="x")
    with Tape() as tape:
        reduce_sum(relu(matmul(x, x)))
    dump = tape.dump()
    assert dump.splitlines()[0].startswith("#0 matmul(x, x)")
    assert "relu(#0)" in dump


def test_forward_is_bit_identical_across_runs(rng):
    a, b = rng.normal(size=(4, 3)), rng.normal(size=(3, 2))

    def run():
        return reduce_sum(softplus(tanh(matmul(Tensor(a), Tensor(b))))).values

    assert run().tobytes() == run().tobytes()


# ==================== FINITE DIFFERENCES ====================

def test_check_of_sum_is_exact(rng):
    assert finite_difference_check(lambda x: reduce_sum(x), Tensor(rng.normal(size=5))) < 1e-8


def test_check_of_sigmoid_sum(rng):
    assert finite_difference_check(lambda x: reduce_sum(sigmoid(x)), Tensor(rng.normal(size=6))) < 1e-6


def test_relu_kink_is_skipped():
    x = Tensor([0.0, 1.0, -2.0])
    assert finite_difference_check(lambda t: reduce_sum(relu(t)), x) < 1e-8


def test_three_layer_composite(rng):
    w1, w2, w3 = rng.normal(size=(4, 5)), rng.normal(size=(5, 3)), rng.normal(size=(3, 1))

    def f(x):
        h = tanh(matmul(x, Tensor(w1)))
        h = sigmoid(matmul(h, Tensor(w2)))
        return reduce_sum(softplus(matmul(h, Tensor(w3))))

    assert finite_difference_check(f, Tensor(rng.normal(size=(2, 4)))) < 1e-6


OP_CASES = {
    "matmul_left": lambda x, c: reduce_sum(matmul(x, Tensor(c["b"]))),
    "matmul_right": lambda x, c: reduce_sum(matmul(Tensor(c["a"]), transpose(x))),
    "sparse_matmul": lambda x, c: reduce_sum(tanh(matmul(c["sparse"], x))),
    "add_row": lambda x, c: reduce_sum(tanh(add(Tensor(c["m"]), reshape(slice_rows(x, 0, 1), (3,))))),
    "sub": lambda x, c: reduce_sum(hadamard(sub(x, Tensor(c["m"])), sub(x, Tensor(c["m"])))),
    "scale": lambda x, c: reduce_sum(sigmoid(scale(x, -2.5))),
    "concat": lambda x, c: reduce_sum(tanh(concat([x, scale(x, 0.5)], axis=1))),
    "abs": lambda x, c: reduce_sum(absolute(x)),
    "softplus": lambda x, c: reduce_sum(softplus(x)),
    "reduce_mean_axis": lambda x, c: reduce_sum(tanh(reduce_mean(x, axis=0))),
    "reduce_max_axis": lambda x, c: reduce_sum(reduce_max(x, axis=1)),
    "reduce_max_all": lambda x, c: reduce_max(x),
    "logsumexp_axis": lambda x, c: reduce_sum(logsumexp(x, axis=1)),
    "logsumexp_all": lambda x, c: logsumexp(x),
    "embedding_lookup": lambda x, c: reduce_sum(tanh(embedding_lookup(x, [2, 0, 2, 1]))),
}


@pytest.mark.parametrize("name", sorted(OP_CASES))
def test_operation_gradients(name):
    rng = np.random.default_rng(sorted(OP_CASES).index(name))
    consts = {
        "a": rng.normal(size=(2, 3)),
        "b": rng.normal(size=(3, 2)),
        "m": rng.normal(size=(3, 3)),
        "sparse": sp.csr_array(rng.normal(size=(4, 3)) * (rng.random((4, 3)) < 0.5)),
    }
    for _ in range(20):
        x = Tensor(rng.normal(size=(3, 3)))
        assert finite_difference_check(lambda t: OP_CASES[name](t, consts), x) < 1e-5
