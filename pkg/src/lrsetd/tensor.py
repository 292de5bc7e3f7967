"""Dense tensor primitives: unfolding, folding, mode products, masks.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The storage
convention is mode-1 lexicographic (first index varies fastest), i.e. Fortran
order, and all unfoldings follow the column ordering

    j = sum_{l != n} i_l * J_l,   J_l = prod_{t < l, t != n} I_t

so that ``unfold(multilinear(s, [X1, ..., XN]), n)`` equals
``Xn @ unfold(s, n) @ kron(XN, ..., X_{n+1}, X_{n-1}, ..., X1).T``.

Modes are 0-based throughout, matching numpy axis numbering.
"""

import numpy as np

__all__ = [
    "unfold",
    "fold",
    "mode_product",
    "multilinear",
    "kron",
    "inner",
    "frobenius",
    "ObservationMask",
    "project_assign",
]


def _check_mode(ndim, mode):
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for order-{ndim} tensor")


def unfold(tensor, mode):
    """Mode-`mode` unfolding of `tensor`.

    Parameters
    ----------
    tensor : ndarray
    mode : int
        0-based mode index.

    Returns
    -------
    ndarray of shape ``(tensor.shape[mode], prod of the other dims)``.
    """
    tensor = np.asarray(tensor)
    _check_mode(tensor.ndim, mode)
    return np.moveaxis(tensor, mode, 0).reshape(
        (tensor.shape[mode], -1), order="F"
    )


def fold(matrix, mode, dims):
    """Inverse of :func:`unfold`: rebuild a tensor with shape `dims`."""
    matrix = np.asarray(matrix)
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), mode)
    other = tuple(d for i, d in enumerate(dims) if i != mode)
    if matrix.shape != (dims[mode], int(np.prod(other, dtype=np.int64))):
        raise ValueError(
            f"matrix shape {matrix.shape} does not match mode-{mode} "
            f"unfolding of dims {dims}"
        )
    tensor = matrix.reshape((dims[mode],) + other, order="F")
    return np.moveaxis(tensor, 0, mode)


def mode_product(tensor, matrix, mode):
    """n-mode product ``tensor x_mode matrix``.

    `matrix` must have as many columns as ``tensor.shape[mode]``; that mode
    is replaced by ``matrix.shape[0]`` in the result.
    """
    tensor = np.asarray(tensor)
    matrix = np.asarray(matrix)
    _check_mode(tensor.ndim, mode)
    if matrix.ndim != 2 or matrix.shape[1] != tensor.shape[mode]:
        raise ValueError(
            f"factor shape {matrix.shape} incompatible with mode-{mode} "
            f"dimension {tensor.shape[mode]}"
        )
    out = np.tensordot(matrix, tensor, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def multilinear(core, factors):
    """Multilinear (Tucker) product ``core x_0 F0 x_1 F1 ...``.

    Computed as sequential mode products; the large Kronecker factor of the
    matricized form is never materialized.
    """
    core = np.asarray(core)
    if len(factors) != core.ndim:
        raise ValueError(
            f"expected {core.ndim} factors, got {len(factors)}"
        )
    out = core
    for mode, f in enumerate(factors):
        out = mode_product(out, f, mode)
    return out


def kron(a, b):
    """Matrix Kronecker product. Exists for tests and small cases only."""
    return np.kron(np.asarray(a), np.asarray(b))


def inner(a, b):
    """Inner product: sum of elementwise products."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def frobenius(a):
    """Frobenius norm, ``sqrt(inner(a, a))``."""
    return float(np.linalg.norm(np.asarray(a).ravel()))


class ObservationMask:
    """Set of observed multi-indices over a fixed dimension vector.

    Stores explicit index tuples (a ``(k, N)`` int array) and caches a dense
    boolean view for inner-loop use. Immutable after construction.
    """

    def __init__(self, dims, indices):
        self.dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in self.dims):
            raise ValueError(f"all dims must be >= 1, got {self.dims}")
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            idx = idx.reshape(0, len(self.dims))
        if idx.ndim != 2 or idx.shape[1] != len(self.dims):
            raise ValueError(
                f"indices must be (k, {len(self.dims)}), got {idx.shape}"
            )
        if idx.shape[0]:
            if idx.min() < 0 or (idx >= np.array(self.dims)).any():
                raise ValueError("mask index out of range")
        # canonical order + uniqueness via flat (Fortran) position
        flat = np.ravel_multi_index(idx.T, self.dims, order="F")
        flat = np.unique(flat)
        self._flat = flat
        self.indices = np.column_stack(
            np.unravel_index(flat, self.dims, order="F")
        ).astype(np.int64)
        self._boolean = None

    @classmethod
    def from_boolean(cls, observed):
        observed = np.asarray(observed, dtype=bool)
        idx = np.argwhere(observed)
        mask = cls(observed.shape, idx)
        mask._boolean = observed.copy()
        return mask

    @classmethod
    def full(cls, dims):
        return cls.from_boolean(np.ones(dims, dtype=bool))

    @classmethod
    def empty(cls, dims):
        return cls(dims, np.empty((0, len(tuple(dims))), dtype=np.int64))

    @property
    def n_observed(self):
        return int(self._flat.size)

    @property
    def n_missing(self):
        return int(np.prod(self.dims, dtype=np.int64)) - self.n_observed

    def boolean(self):
        """Dense boolean view (True = observed). Cached; treat as read-only."""
        if self._boolean is None:
            b = np.zeros(self.dims, dtype=bool)
            if self.indices.shape[0]:
                b[tuple(self.indices.T)] = True
            self._boolean = b
        return self._boolean

    def contains(self, index):
        return bool(self.boolean()[tuple(index)])

    def __eq__(self, other):
        if not isinstance(other, ObservationMask):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(
            self._flat, other._flat
        )

    def __repr__(self):
        return (
            f"ObservationMask(dims={self.dims}, "
            f"observed={self.n_observed}/{int(np.prod(self.dims))})"
        )


def project_assign(tensor, mask, source):
    """Return `tensor` with the entries in the mask overwritten by `source`.

    Entries outside the observed set are untouched; inputs are not mutated.
    """
    tensor = np.asarray(tensor)
    source = np.asarray(source)
    if tensor.shape != source.shape or tensor.shape != mask.dims:
        raise ValueError(
            f"shape mismatch: tensor {tensor.shape}, source {source.shape}, "
            f"mask {mask.dims}"
        )
    out = tensor.copy()
    sel = mask.boolean()
    out[sel] = source[sel]
    return out
