import numpy as np
import pytest


@pytest.fixture
def gen():
    return np.random.default_rng(20260810)


def random_dense(gen, row_dims, col_dims, scale=1.0):
    from tensortail.tensor_core import DenseTensor, Shape

    shape = Shape(tuple(row_dims), tuple(col_dims))
    z = gen.standard_normal(shape.dims + (2,))
    return DenseTensor(shape, (z[..., 0] + 1j * z[..., 1]) * scale)
