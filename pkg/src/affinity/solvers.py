"""Laplacian linear algebra: pseudoinverse, nullspace projection, and solves.

Small systems go through a dense eigendecomposition pseudoinverse; everything
else runs block preconditioned conjugate gradient (Jacobi preconditioner)
against a cached sparse Laplacian, with the nullspace of component indicator
vectors projected out of the right-hand side and re-projected every iteration.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .graph import Graph

_PINV_CACHE: "weakref.WeakKeyDictionary[Graph, DensePseudoinverse]" = \
    weakref.WeakKeyDictionary()
_CSR_CACHE: "weakref.WeakKeyDictionary[Graph, sparse.csr_matrix]" = \
    weakref.WeakKeyDictionary()

#: Relative eigenvalue cutoff below which spectrum entries count as zero.
PINV_RCOND = 1e-10


class SolverConvergenceError(RuntimeError):
    """PCG failed to reach the requested tolerance within the iteration cap.

    Attributes:
        residuals: relative residual of each failed column.
        columns: indices of the failed right-hand-side columns.
    """

    def __init__(self, message: str, residuals=None, columns=None):
        super().__init__(message)
        self.residuals = residuals
        self.columns = columns


class PseudoinverseRankError(RuntimeError):
    """The number of (near-)zero Laplacian eigenvalues disagreed with the
    connected-component count, which signals an ill-conditioned input."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`solve_laplacian`.

    Attributes:
        dense_threshold: systems with n below this go through the dense
            pseudoinverse path.
        rel_tolerance: PCG stops when ||r|| <= rel_tolerance * ||b|| per column.
        max_iterations: PCG iteration cap; None means 10*sqrt(n) + 200.
    """

    dense_threshold: int = 512
    rel_tolerance: float = 1e-8
    max_iterations: int | None = None

    def __post_init__(self):
        if self.dense_threshold < 1:
            raise ValueError("dense_threshold must be >= 1")
        if not (0 < self.rel_tolerance < 1):
            raise ValueError("rel_tolerance must be in (0, 1)")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def iteration_cap(self, n: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return int(10 * math.sqrt(max(n, 1))) + 200


@dataclass(frozen=True)
class DensePseudoinverse:
    """Dense Moore-Penrose pseudoinverse of a graph Laplacian.

    Attributes:
        matrix: (n, n) symmetric pseudoinverse.
        cutoff: absolute eigenvalue cutoff that was applied.
        num_zero_eigenvalues: how many eigenvalues were treated as zero.
    """

    matrix: np.ndarray
    cutoff: float
    num_zero_eigenvalues: int


def laplacian_csr(graph: Graph) -> sparse.csr_matrix:
    """Sparse CSR Laplacian L = D - A, cached per graph instance."""
    cached = _CSR_CACHE.get(graph)
    if cached is not None:
        return cached
    n = graph.num_nodes
    m = graph.num_edges
    rows = np.concatenate([graph.edge_u, graph.edge_v, np.arange(n)])
    cols = np.concatenate([graph.edge_v, graph.edge_u, np.arange(n)])
    vals = np.concatenate([-graph.edge_w, -graph.edge_w, graph.degrees])
    lap = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    _CSR_CACHE[graph] = lap
    return lap


def dense_laplacian(graph: Graph) -> np.ndarray:
    """Dense L = D - A, assembled directly from the edge arrays."""
    n = graph.num_nodes
    lap = np.zeros((n, n))
    np.add.at(lap, (graph.edge_u, graph.edge_v), -graph.edge_w)
    np.add.at(lap, (graph.edge_v, graph.edge_u), -graph.edge_w)
    lap[np.arange(n), np.arange(n)] = graph.degrees
    return lap


def project_out_nullspace(graph: Graph, b: np.ndarray) -> np.ndarray:
    """Subtract the per-component mean from b, columnwise.

    The Laplacian nullspace is spanned by the indicator vectors of the
    connected components, so this makes b solvable. Accepts shape (n,) or
    (n, k).
    """
    b = np.asarray(b, dtype=np.float64)
    single = b.ndim == 1
    mat = b[:, None] if single else b
    if mat.shape[0] != graph.num_nodes:
        raise ValueError(f"expected leading dimension {graph.num_nodes}, "
                         f"got {mat.shape[0]}")
    if graph.num_components <= 1:
        out = mat - mat.mean(axis=0, keepdims=True)
    else:
        comp = graph.component_of
        counts = np.bincount(comp, minlength=graph.num_components).astype(float)
        means = np.empty((graph.num_components, mat.shape[1]))
        for j in range(mat.shape[1]):
            means[:, j] = np.bincount(comp, weights=mat[:, j],
                                      minlength=graph.num_components) / counts
        out = mat - means[comp]
    return out[:, 0] if single else out


def dense_pseudoinverse(graph: Graph, cap: int = 2048) -> DensePseudoinverse:
    """Eigendecomposition pseudoinverse of the Laplacian.

    Eigenvalues at or below ``PINV_RCOND * lambda_max`` are zeroed; the count
    of zeroed eigenvalues must equal the number of connected components.

    Raises:
        ValueError: if the graph has more than ``cap`` nodes.
        PseudoinverseRankError: if the numeric nullspace dimension disagrees
            with the component count.
    """
    if graph.num_nodes > cap:
        raise ValueError(f"dense pseudoinverse capped at {cap} nodes, "
                         f"graph has {graph.num_nodes}")
    cached = _PINV_CACHE.get(graph)
    if cached is not None:
        return cached
    n = graph.num_nodes
    if n == 0:
        result = DensePseudoinverse(np.zeros((0, 0)), 0.0, 0)
        _PINV_CACHE[graph] = result
        return result
    eigvals, eigvecs = np.linalg.eigh(dense_laplacian(graph))
    lam_max = float(eigvals[-1])
    if lam_max <= 0.0:
        # no edges at all: L = 0 and the pseudoinverse is 0
        if graph.num_components != n:
            raise PseudoinverseRankError(
                f"zero Laplacian but {graph.num_components} components")
        result = DensePseudoinverse(np.zeros((n, n)), 0.0, n)
        _PINV_CACHE[graph] = result
        return result
    cutoff = PINV_RCOND * lam_max
    zero = eigvals <= cutoff
    num_zero = int(zero.sum())
    if num_zero != graph.num_components:
        raise PseudoinverseRankError(
            f"{num_zero} eigenvalues under cutoff {cutoff:.3e} but graph has "
            f"{graph.num_components} connected components")
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, eigvals))
    pinv = (eigvecs * inv) @ eigvecs.T
    pinv = 0.5 * (pinv + pinv.T)
    result = DensePseudoinverse(pinv, float(cutoff), num_zero)
    _PINV_CACHE[graph] = result
    return result


def _dense_pinv_matrix(graph: Graph) -> np.ndarray:
    """Uncapped pseudoinverse matrix for internal solve paths."""
    cached = _PINV_CACHE.get(graph)
    if cached is not None:
        return cached.matrix
    return dense_pseudoinverse(graph, cap=graph.num_nodes).matrix


def pcg(matvec, precond_diag_inv: np.ndarray, rhs: np.ndarray,
        rel_tolerance: float, max_iterations: int,
        project=None) -> tuple[np.ndarray, int]:
    """Block preconditioned conjugate gradient with per-column convergence.

    Each right-hand-side column converges (and freezes) independently, so
    results do not depend on how columns are batched. Columns with zero
    right-hand side return zero immediately.

    Args:
        matvec: callable mapping an (n, k) block to A times that block.
        precond_diag_inv: (n,) inverse of the diagonal preconditioner.
        rhs: (n, k) right-hand sides.
        rel_tolerance: per-column relative residual target.
        max_iterations: iteration cap.
        project: optional callable applied to the iterate and residual each
            step (used to pin down the Laplacian nullspace).

    Returns:
        (solution block, iterations used).

    Raises:
        SolverConvergenceError: listing the columns that missed the target.
    """
    n, k = rhs.shape
    solution = np.zeros_like(rhs)
    bnorm_all = np.linalg.norm(rhs, axis=0)
    idx = np.flatnonzero(bnorm_all > 0.0)
    if idx.size == 0:
        return solution, 0

    bnorm = bnorm_all[idx]
    x = np.zeros((n, idx.size))
    r = rhs[:, idx].copy()
    z = precond_diag_inv[:, None] * r
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    iterations = 0

    for _ in range(max_iterations):
        resid = np.linalg.norm(r, axis=0)
        done = resid <= rel_tolerance * bnorm
        if done.any():
            finished = np.flatnonzero(done)
            solution[:, idx[finished]] = x[:, finished]
            keep = ~done
            if not keep.any():
                return solution, iterations
            idx = idx[keep]
            bnorm = bnorm[keep]
            x = x[:, keep]
            r = r[:, keep]
            z = z[:, keep]
            p = p[:, keep]
            rz = rz[keep]
        ap = matvec(p)
        pap = np.einsum("ij,ij->j", p, ap)
        # pap can only vanish if a direction fell entirely into the nullspace;
        # stall that column rather than dividing by zero.
        alpha = np.divide(rz, pap, out=np.zeros_like(rz), where=pap > 0)
        x += p * alpha
        r -= ap * alpha
        if project is not None:
            x = project(x)
            r = project(r)
        z = precond_diag_inv[:, None] * r
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = rz_new / rz
        p = z + p * beta
        rz = rz_new
        iterations += 1

    resid = np.linalg.norm(r, axis=0)
    done = resid <= rel_tolerance * bnorm
    solution[:, idx[done]] = x[:, done]
    if not done.all():
        failed = ~done
        rel = resid[failed] / bnorm[failed]
        raise SolverConvergenceError(
            f"PCG missed tolerance {rel_tolerance:g} after {max_iterations} "
            f"iterations on {int(failed.sum())} column(s); worst relative "
            f"residual {float(rel.max()):.3e} at column {int(idx[failed][np.argmax(rel)])}",
            residuals=rel, columns=idx[failed])
    return solution, iterations


def solve_laplacian(graph: Graph, b: np.ndarray,
                    config: SolverConfig | None = None) -> np.ndarray:
    """Solve L x = b in the least-squares sense, for (n,) or (n, k) inputs.

    The right-hand side is first projected onto the range of L (per-component
    mean removed). Systems with n below ``config.dense_threshold`` multiply by
    the cached dense pseudoinverse; larger ones run Jacobi-preconditioned
    block CG with nullspace re-projection each iteration.
    """
    config = config or SolverConfig()
    b = np.asarray(b, dtype=np.float64)
    single = b.ndim == 1
    mat = b[:, None] if single else b
    if mat.ndim != 2 or mat.shape[0] != graph.num_nodes:
        raise ValueError(f"right-hand side must have leading dimension "
                         f"{graph.num_nodes}, got shape {b.shape}")
    projected = project_out_nullspace(graph, mat)
    n = graph.num_nodes
    if n < config.dense_threshold:
        x = _dense_pinv_matrix(graph) @ projected
    else:
        lap = laplacian_csr(graph)
        safe_deg = np.where(graph.degrees > 0, graph.degrees, 1.0)
        x, _ = pcg(lambda block: lap @ block, 1.0 / safe_deg, projected,
                   config.rel_tolerance, config.iteration_cap(n),
                   project=lambda block: project_out_nullspace(graph, block))
    return x[:, 0] if single else x
