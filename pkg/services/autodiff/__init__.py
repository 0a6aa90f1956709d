from services.autodiff.tensor import (
    Tape,
    Tensor,
    absolute,
    add,
    as_tensor,
    backward,
    concat,
    embedding_lookup,
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
from services.autodiff.gradcheck import finite_difference_check
