"""Symmetric eigensolves, eigenvalue counting functions and perturbation gaps.

The dense path is LAPACK's symmetric solver (orthogonal reduction to
tridiagonal form plus implicitly shifted QL/QR); the alternative backend is
an n-step Lanczos iteration with full reorthogonalisation feeding the
tridiagonal solver, with a dense fallback when its trace check fails.
Counting functions cluster eigenvalues closer than the tolerance tau into a
single breakpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .ergodic import StepFunction


class SpectraError(RuntimeError):
    pass


class BoundViolation(AssertionError):
    """A proven spectral bound failed numerically."""


class QuasiModeError(ValueError):
    """Quasi-mode hypotheses (orthonormality / residual size) not met."""


DEFAULT_TAU_SCALE = 1e-9


def _as_dense(M) -> np.ndarray:
    if scipy.sparse.issparse(M):
        return np.asarray(M.todense(), dtype=np.float64)
    if hasattr(M, "to_dense"):
        return M.to_dense()
    return np.asarray(M, dtype=np.float64)


def _norm_hint(M, dense: np.ndarray) -> float:
    hint = getattr(M, "norm_hint", None)
    if hint is not None and hint > 0:
        return float(hint)
    if dense.size == 0:
        return 1.0
    return float(max(1.0, np.abs(dense).max() * dense.shape[0]))


def default_tau(M, dense: Optional[np.ndarray] = None) -> float:
    if dense is None:
        dense = _as_dense(M)
    return DEFAULT_TAU_SCALE * max(1.0, _norm_hint(M, dense))


@dataclass(frozen=True)
class EigenvalueList:
    """All eigenvalues with multiplicity, sorted ascending."""

    values: np.ndarray
    tau: float

    def __len__(self) -> int:
        return len(self.values)


def _check_symmetric(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpectraError("matrix must be square")
    if A.size == 0:
        return
    scale = max(1.0, float(np.abs(A).max()))
    if float(np.abs(A - A.T).max()) > 1e-12 * scale:
        raise SpectraError("matrix is not symmetric")


def _lanczos_eigenvalues(A: np.ndarray) -> np.ndarray:
    """Full-reorthogonalised Lanczos run to completion, then tridiagonal solve."""
    n = A.shape[0]
    if n == 0:
        return np.empty(0)
    V = np.zeros((n, n))
    alphas = np.zeros(n)
    betas = np.zeros(max(n - 1, 0))
    v = np.ones(n) / np.sqrt(n)
    V[:, 0] = v
    for k in range(n):
        w = A @ V[:, k]
        alphas[k] = float(V[:, k] @ w)
        w -= alphas[k] * V[:, k]
        if k > 0:
            w -= betas[k - 1] * V[:, k - 1]
        # full reorthogonalisation, twice for safety
        for _ in range(2):
            w -= V[:, : k + 1] @ (V[:, : k + 1].T @ w)
        if k == n - 1:
            break
        beta = float(np.linalg.norm(w))
        if beta <= 1e-13 * max(1.0, float(np.abs(A).max())):
            # invariant subspace found; restart with a fresh orthogonal direction
            w = np.zeros(n)
            for j in range(n):
                cand = np.zeros(n)
                cand[j] = 1.0
                cand -= V[:, : k + 1] @ (V[:, : k + 1].T @ cand)
                norm = float(np.linalg.norm(cand))
                if norm > 1e-8:
                    w = cand / norm
                    break
            betas[k] = 0.0
            V[:, k + 1] = w
        else:
            betas[k] = beta
            V[:, k + 1] = w / beta
    return scipy.linalg.eigh_tridiagonal(alphas, betas, eigvals_only=True)


def eigenvalues(M, tau: Optional[float] = None, backend: str = "auto") -> EigenvalueList:
    """All eigenvalues of a symmetric matrix, with multiplicity.

    backend "auto"/"dense" uses LAPACK; "lanczos" uses the iterative
    tridiagonalisation and falls back to the dense path when its trace
    validation fails.
    """
    dense = _as_dense(M)
    _check_symmetric(dense)
    if tau is None:
        tau = default_tau(M, dense)
    if dense.shape[0] == 0:
        return EigenvalueList(np.empty(0), tau)
    if backend in ("auto", "dense"):
        try:
            vals = np.linalg.eigvalsh(dense)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise SpectraError(f"eigensolver did not converge: {exc}") from exc
    elif backend == "lanczos":
        vals = _lanczos_eigenvalues(dense)
        trace = float(np.trace(dense))
        if abs(float(vals.sum()) - trace) > 1e-6 * max(1.0, abs(trace), _norm_hint(M, dense)):
            vals = np.linalg.eigvalsh(dense)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return EigenvalueList(np.sort(vals), float(tau))


def cluster_values(values: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Group sorted values whose neighbour gap is below tau.

    Returns cluster means and multiplicities.
    """
    values = np.sort(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        return values, np.empty(0, dtype=np.int64)
    split = np.nonzero(np.diff(values) >= tau)[0] + 1
    groups = np.split(values, split)
    reps = np.array([float(g.mean()) for g in groups])
    counts = np.array([len(g) for g in groups], dtype=np.int64)
    return reps, counts


def counting_from_values(values: np.ndarray, tau: float) -> StepFunction:
    reps, counts = cluster_values(values, tau)
    return StepFunction.from_jumps(reps, counts.astype(np.float64))


def counting_function(M, tau: Optional[float] = None) -> StepFunction:
    """Cumulative eigenvalue counting function n(M) as a step function."""
    ev = M if isinstance(M, EigenvalueList) else eigenvalues(M, tau)
    return counting_from_values(ev.values, ev.tau)


def _joint_gap(vals_a: np.ndarray, vals_b: np.ndarray, tau: float) -> int:
    """Max over energies of |n_a - n_b| with both spectra snapped to a joint
    tau-clustering (floating ties would otherwise produce spurious gaps)."""
    reps, _ = cluster_values(np.concatenate([vals_a, vals_b]), tau)
    if reps.size == 0:
        return 0
    edges = (reps[:-1] + reps[1:]) / 2.0 if reps.size > 1 else np.empty(0)
    cum_a = np.searchsorted(np.sort(vals_a), np.concatenate([edges, [np.inf]]))
    cum_b = np.searchsorted(np.sort(vals_b), np.concatenate([edges, [np.inf]]))
    return int(np.abs(cum_a - cum_b).max())


def numerical_rank(C: np.ndarray, tau: float) -> int:
    if C.size == 0:
        return 0
    sigma = np.linalg.svd(C, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int((sigma > C.shape[0] * tau * sigma[0]).sum())


def rank_perturbation_gap(A, C, tau: Optional[float] = None) -> int:
    """Max over E of |n(A)(E) - n(A+C)(E)|; must not exceed rank(C)."""
    A = _as_dense(A)
    C = _as_dense(C)
    if A.shape != C.shape:
        raise SpectraError("perturbation must match the matrix dimension")
    _check_symmetric(A)
    _check_symmetric(C)
    if tau is None:
        tau = default_tau(A + C)
    ev_a = eigenvalues(A, tau).values
    ev_b = eigenvalues(A + C, tau).values
    gap = _joint_gap(ev_a, ev_b, tau)
    rank = numerical_rank(C, tau)
    if gap > rank:
        raise BoundViolation(f"counting gap {gap} exceeds rank {rank}")
    return gap


def projection_truncation_gap(A, keep: Sequence[int], tau: Optional[float] = None) -> int:
    """Max over E of |n(A)(E) - n(pAi)(E)| for a coordinate-subspace truncation;
    must not exceed 4 * (dim V - dim U)."""
    A = _as_dense(A)
    _check_symmetric(A)
    keep = np.asarray(sorted(set(int(i) for i in keep)), dtype=np.int64)
    if keep.size and (keep[0] < 0 or keep[-1] >= A.shape[0]):
        raise SpectraError("kept indices out of range")
    B = A[np.ix_(keep, keep)]
    if tau is None:
        tau = default_tau(A)
    ev_a = eigenvalues(A, tau).values
    ev_b = eigenvalues(B, tau).values
    gap = _joint_gap(ev_a, ev_b, tau)
    codim = A.shape[0] - keep.size
    if gap > 4 * codim:
        raise BoundViolation(f"truncation gap {gap} exceeds 4*{codim}")
    return gap


def quasi_mode_count(
    A,
    lam: float,
    eps: float,
    vectors: Sequence[np.ndarray],
    ortho_tol: float = 1e-8,
) -> int:
    """Eigenvalue count of A strictly inside (lam-eps, lam+eps), at least the
    number of supplied quasi-modes.

    Hypotheses checked literally: the vectors are orthonormal, the images
    (A-lam)u_i are pairwise orthogonal, and every residual norm is < eps.
    """
    A = _as_dense(A)
    _check_symmetric(A)
    U = np.column_stack([np.asarray(u, dtype=np.float64) for u in vectors])
    m = U.shape[1]
    gram = U.T @ U
    if float(np.abs(gram - np.eye(m)).max()) > ortho_tol:
        raise QuasiModeError("vectors are not orthonormal")
    V = A @ U - lam * U
    norms = np.linalg.norm(V, axis=0)
    if not bool((norms < eps).all()):
        raise QuasiModeError(
            f"residual norms {norms} must be strictly below eps={eps}"
        )
    cross = V.T @ V
    off = cross - np.diag(np.diag(cross))
    if float(np.abs(off).max()) > ortho_tol * max(1.0, float(norms.max()) ** 2, 1.0):
        raise QuasiModeError("images (A-lam)u_i are not pairwise orthogonal")
    vals = eigenvalues(A).values
    count = int(((vals > lam - eps) & (vals < lam + eps)).sum())
    if count < m:
        raise BoundViolation(f"only {count} eigenvalues inside the window, need {m}")
    return count


def spectral_shift_integral(H, G, tau: Optional[float] = None) -> float:
    """L^1 norm of the spectral shift between two symmetric matrices.

    Computed exactly as the area between the two counting functions; bounded
    by the trace norm of the difference.
    """
    Hd = _as_dense(H)
    Gd = _as_dense(G)
    if Hd.shape != Gd.shape:
        raise SpectraError("spectral shift needs matrices of equal dimension")
    _check_symmetric(Hd)
    _check_symmetric(Gd)
    if tau is None:
        tau = min(default_tau(Hd), default_tau(Gd))
    nh = counting_function(eigenvalues(Hd, tau))
    ng = counting_function(eigenvalues(Gd, tau))
    merged = np.union1d(nh.breakpoints, ng.breakpoints)
    integral = 0.0
    for i in range(len(merged) - 1):
        width = merged[i + 1] - merged[i]
        integral += abs(nh(merged[i]) - ng(merged[i])) * width
    diff_vals = np.linalg.eigvalsh(Hd - Gd) if Hd.size else np.empty(0)
    trace_norm = float(np.abs(diff_vals).sum())
    if integral > trace_norm + 1e-7 * max(1.0, trace_norm):
        raise BoundViolation(
            f"shift integral {integral} exceeds trace norm {trace_norm}"
        )
    return integral
