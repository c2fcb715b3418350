"""Dense real matrices and the arithmetic kernels used by the rest of the package.

A batch is laid out one column per sample, so a dense layer computes ``W @ X + b``.
"""
import numpy as np

from .errors import DimensionError


class Matrix:
    """
    Immutable 2-D array of 64-bit reals, stored row-major.

    Vectors are 1-column matrices. The underlying numpy array is flagged read-only, so a
    Matrix can be shared between threads without copying.

    Parameters
    ----------
    values: array_like
        Anything numpy can turn into a 2-D float array. 1-D input becomes a column.
    """

    __slots__ = ('_values',)

    def __init__(self, values):
        array = np.array(values, dtype=np.float64, order='C')
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        if array.ndim != 2:
            raise DimensionError(f"Matrix needs 2 dimensions, got {array.ndim}", shapes=[array.shape])
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise DimensionError(f"Matrix dimensions must be positive, got {array.shape}", shapes=[array.shape])
        array.setflags(write=False)
        self._values = array

    @classmethod
    def zeros(cls, rows, cols):
        return cls(np.zeros((rows, cols)))

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    @classmethod
    def column(cls, values):
        """Build a column vector"""
        return cls(np.asarray(values, dtype=np.float64).reshape(-1, 1))

    @property
    def values(self):
        """
        Read-only view of the data

        Returns
        -------
        numpy.ndarray
            array of shape (rows, cols)
        """
        return self._values

    @property
    def rows(self):
        return self._values.shape[0]

    @property
    def cols(self):
        return self._values.shape[1]

    @property
    def shape(self):
        return self._values.shape

    @property
    def data(self):
        """Row-major flat copy, of length rows * cols"""
        return self._values.ravel().copy()

    @property
    def T(self):
        return Matrix(self._values.T)

    def take_cols(self, indices):
        """Columns (samples) selected by an index array, in the given order"""
        return Matrix(self._values[:, np.asarray(indices, dtype=np.intp)])

    def is_finite(self):
        return bool(np.isfinite(self._values).all())

    def sum_cols(self):
        """Sum over samples, giving a column vector"""
        return Matrix(self._values.sum(axis=1, keepdims=True))

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return Matrix(self._values + _operand(self, other))

    def __sub__(self, other):
        return Matrix(self._values - _operand(self, other))

    def __mul__(self, other):
        return Matrix(self._values * _operand(self, other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Matrix(self._values / _operand(self, other))

    def __neg__(self):
        return Matrix(-self._values)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._values, other._values))

    def __hash__(self):
        return hash((self.shape, self._values.tobytes()))

    def __repr__(self):
        return f"Matrix({self._values.tolist()!r})"


def _operand(a, other):
    """Elementwise operand: a scalar or a matrix of identical shape"""
    if isinstance(other, Matrix):
        if other.shape != a.shape:
            raise DimensionError(f"Elementwise operation between {a.shape} and {other.shape}",
                                 shapes=[a.shape, other.shape])
        return other.values
    if np.ndim(other) != 0:
        raise TypeError(f"Unsupported operand of type {type(other).__name__}")
    return float(other)


def matmul(a, b):
    """
    Matrix product

    Parameters
    ----------
    a: Matrix
        left operand, shape (n, k)
    b: Matrix
        right operand, shape (k, m)

    Returns
    -------
    Matrix
        product of shape (n, m)
    """
    if a.cols != b.rows:
        raise DimensionError(f"Cannot multiply {a.shape} by {b.shape}", shapes=[a.shape, b.shape])
    return Matrix(a.values @ b.values)


def elementwise(a, f):
    """
    Apply a scalar map to every entry.

    Parameters
    ----------
    a: Matrix
        input matrix
    f: callable
        scalar map written with numpy operations, so it also acts entry by entry on an array
        (``numpy.negative``, ``lambda z: z ** 2``, ``functools.partial(activations.forward, kind)``...)

    Returns
    -------
    Matrix
        matrix of the same shape with ``out[i, j] = f(a[i, j])``
    """
    try:
        out = np.asarray(f(a.values), dtype=np.float64)
    except TypeError:
        out = None
    if out is None or out.shape != a.shape:
        # f does not broadcast over arrays (math.* functions, constants...)
        out = np.array([f(z) for z in a.values.ravel()], dtype=np.float64).reshape(a.shape)
    return Matrix(out)


def add_broadcast_col(a, bias):
    """
    Add a column vector to every column of a matrix

    Parameters
    ----------
    a: Matrix
        shape (n, m)
    bias: Matrix
        shape (n, 1)

    Returns
    -------
    Matrix
        ``out[i, j] = a[i, j] + bias[i, 0]``
    """
    if bias.cols != 1 or bias.rows != a.rows:
        raise DimensionError(f"Bias of shape {bias.shape} does not broadcast over {a.shape}",
                             shapes=[a.shape, bias.shape])
    return Matrix(a.values + bias.values)
