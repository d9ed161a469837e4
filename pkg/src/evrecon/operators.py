"""Sparse operators for the linear systems: the directional-derivative
operator built from optical flow, the forward-difference gradient used by the
regularizers, and the 5-point Laplacian stencil.

Pixel (x, y) maps to row/column index y * width + x. Rows of the directional
operator encode L(x) - L(x + u_hat(x)), with the displaced sample expressed
either through bilinear interpolation (TwoPoint) or through the pair of
ramp-normalized 3x3 Sobel kernels (Sobel9). Border pixels and pixels with
negligible flow get all-zero rows; the regularizer supplies their constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, LengthMismatch
from .io import FlowField
from .motion import DEFAULT_U_MIN


class StencilKind(str, Enum):
    TwoPoint = "2pt"
    Sobel9 = "sobel9"


@dataclass
class SparseOperator:
    """Row-compressed sparse matrix with explicit transpose application."""

    matrix: sparse.csr_array

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_cols,):
            raise LengthMismatch(f"vector length {v.shape} != {self.n_cols}")
        return self.matrix @ v

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n_rows,):
            raise LengthMismatch(f"vector length {v.shape} != {self.n_rows}")
        return self.matrix.T @ v

    def row_sums(self) -> np.ndarray:
        """Per-row sums as the CSR matvec accumulates them."""
        return self.matrix @ np.ones(self.n_cols)


# Standard 3x3 Sobel kernels, indexed [dy, dx], divided by 8 so each has unit
# response to a unit-slope ramp along its axis.
SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64) / 8.0
SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64) / 8.0


def laplacian_kernel() -> np.ndarray:
    """The 5-point Laplacian stencil."""
    return np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def build_directional_operator(flow: FlowField, sensor: tuple[int, int],
                               kind: StencilKind = StencilKind.Sobel9,
                               u_min: float = DEFAULT_U_MIN) -> SparseOperator:
    """Assemble the (width*height)^2 directional-derivative matrix.

    Every nonzero row sums to exactly 0.0 (constants are annihilated); a
    refinement pass nudges the diagonal coefficient by ~1 ulp where plain
    floating-point assembly leaves a residual.
    """
    width, height = sensor
    grid = flow.dense(width, height)
    mag = np.hypot(grid[..., 0], grid[..., 1])
    active = mag >= u_min
    active[0, :] = active[-1, :] = False
    active[:, 0] = active[:, -1] = False
    ys, xs = np.nonzero(active)
    n = width * height
    if xs.size == 0:
        empty = sparse.csr_array((n, n), dtype=np.float64)
        return SparseOperator(empty)
    ux = grid[ys, xs, 0] / mag[ys, xs]
    uy = grid[ys, xs, 1] / mag[ys, xs]
    pix = ys * width + xs

    kind = StencilKind(kind)
    if kind is StencilKind.TwoPoint:
        rows, cols, vals = _twopoint_entries(xs, ys, ux, uy, pix, width, height)
    else:
        rows, cols, vals = _sobel9_entries(xs, ys, ux, uy, pix, width)

    mat = sparse.csr_array(
        sparse.coo_array((vals, (rows, cols)), shape=(n, n), dtype=np.float64))
    mat.sum_duplicates()
    mat.sort_indices()
    _zero_row_sums(mat)
    mat.eliminate_zeros()
    return SparseOperator(mat)


def _twopoint_entries(xs, ys, ux, uy, pix, width, height):
    # clip guards against |u_hat| overshooting 1 by an ulp after normalization
    tx = np.clip(xs + ux, 0.0, width - 1)
    ty = np.clip(ys + uy, 0.0, height - 1)
    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    wx = tx - x0
    wy = ty - y0
    # unit flow from an interior pixel keeps targets inside the grid; the
    # +1 neighbour can only step outside where its weight is exactly 0
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    w00 = (1 - wx) * (1 - wy)
    w10 = wx * (1 - wy)
    w01 = (1 - wx) * wy
    w11 = wx * wy
    diag = ((w00 + w10) + w01) + w11
    rows = np.concatenate([pix] * 5)
    cols = np.concatenate([pix, y0 * width + x0, y0 * width + x1,
                           y1 * width + x0, y1 * width + x1])
    vals = np.concatenate([diag, -w00, -w10, -w01, -w11])
    return rows, cols, vals


def _sobel9_entries(xs, ys, ux, uy, pix, width):
    rows, cols, vals = [], [], []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            coef = -(ux * SOBEL_X[dy + 1, dx + 1] + uy * SOBEL_Y[dy + 1, dx + 1])
            rows.append(pix)
            cols.append((ys + dy) * width + (xs + dx))
            vals.append(coef)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _zero_row_sums(mat: sparse.csr_array) -> None:
    """Make every row sum exactly 0.0 under left-to-right accumulation.

    The last stored entry of each row is analytically the negative of the
    others' sum; re-deriving it as the exact negation of their left-to-right
    floating-point prefix (the order CSR matvec uses) moves it by ~1 ulp and
    makes the cancellation bit-exact.
    """
    indptr, data = mat.indptr, mat.data
    nnz = np.diff(indptr)
    for k in np.unique(nnz):
        if k == 0:
            continue
        rows = np.flatnonzero(nnz == k)
        starts = indptr[rows]
        prefix = np.zeros(rows.size)
        for j in range(k - 1):
            prefix += data[starts + j]
        data[starts + k - 1] = -prefix


def build_gradient_operator(sensor: tuple[int, int]) -> SparseOperator:
    """Stacked forward-difference gradient [Gx; Gy], 2*width*height rows.

    Replicate (Neumann) boundary: rows for the last column (Gx) / last row
    (Gy) are zero.
    """
    width, height = sensor
    n = width * height
    ys, xs = np.mgrid[0:height, 0:width]
    pix = (ys * width + xs).ravel()
    xs = xs.ravel()
    ys = ys.ravel()

    inner_x = xs < width - 1
    px = pix[inner_x]
    rows_x = np.concatenate([px, px])
    cols_x = np.concatenate([px, px + 1])
    vals_x = np.concatenate([-np.ones(px.size), np.ones(px.size)])

    inner_y = ys < height - 1
    py = pix[inner_y]
    rows_y = np.concatenate([py, py]) + n
    cols_y = np.concatenate([py, py + width])
    vals_y = np.concatenate([-np.ones(py.size), np.ones(py.size)])

    mat = sparse.csr_array(
        sparse.coo_array((np.concatenate([vals_x, vals_y]),
                          (np.concatenate([rows_x, rows_y]),
                           np.concatenate([cols_x, cols_y]))),
                         shape=(2 * n, n), dtype=np.float64))
    mat.sum_duplicates()
    mat.sort_indices()
    return SparseOperator(mat)


def identity_operator(n: int) -> SparseOperator:
    return SparseOperator(sparse.csr_array(sparse.eye_array(n, format="csr")))


def stack_operators(top: SparseOperator, bottom: SparseOperator) -> SparseOperator:
    if top.n_cols != bottom.n_cols:
        raise DimensionMismatch(f"{top.n_cols} != {bottom.n_cols} columns")
    mat = sparse.csr_array(sparse.vstack([top.matrix, bottom.matrix], format="csr"))
    return SparseOperator(mat)


def scale_operator(op: SparseOperator, factor: float) -> SparseOperator:
    return SparseOperator(sparse.csr_array(op.matrix * factor))
