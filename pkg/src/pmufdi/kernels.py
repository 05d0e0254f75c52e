"""Complex-matrix kernels for low-rank plus column-sparse decompositions.

All kernels operate on full complex matrices (the data are phasors, and
stacking real/imaginary parts would change the nuclear norm). SVDs are
economy-size throughout. Everything here is pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SolverOptions:
    """Shared ADMM settings for the attack and detection solvers.

    Convergence requires both the primal and the dual residual to fall
    below ``tol_abs + tol_rel * ||data||_F``. The penalty starts at *rho*
    and, while *adapt_penalty* is set, is doubled/halved whenever one
    residual exceeds *residual_gap* times the other, within a bounded
    range of the starting penalty: an uncontrolled downward run feeds
    back through the scaled dual variable and blows the iterates up,
    while too low a ceiling leaves residuals parked just above
    tolerance. *adapt_until* optionally freezes the penalty after that
    many iterations. Solvers normalize their data to unit Frobenius norm
    internally, so *rho* refers to the normalized problem; *tol_abs*
    stays in the data's own units.
    """
    max_iter: int = 5000
    tol_rel: float = 1e-7
    tol_abs: float = 0.0
    rho: float = 1.0
    adapt_penalty: bool = True
    adapt_until: int | None = None
    residual_gap: float = 10.0
    verbose: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol_rel <= 0 and self.tol_abs <= 0:
            raise ValueError("tolerances must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    def rho_bounds(self) -> tuple[float, float]:
        return self.rho / 1024.0, self.rho * 2.0 ** 20


class SolverError(RuntimeError):
    """ADMM failed to converge; carries the final residuals."""

    def __init__(self, message: str, primal: float, dual: float, iterations: int):
        super().__init__(
            f"{message}: primal residual {primal:.3e}, dual residual "
            f"{dual:.3e} after {iterations} iterations"
        )
        self.primal = primal
        self.dual = dual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    primal_residual: float
    dual_residual: float
    rho: float
    converged: bool


def _require_finite(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m)
    if np.iscomplexobj(m):
        ok = np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))
    else:
        ok = np.all(np.isfinite(m))
    if not ok:
        raise ValueError(f"{name} contains non-finite entries")
    return m


def nuclear_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = _require_finite(m, "matrix")
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # the default gesdd driver occasionally fails to converge on
        # extreme inputs; gesvd is slower but far more robust
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def svt(m: np.ndarray, tau: float) -> np.ndarray:
    """Singular value soft-thresholding, the prox of tau * nuclear norm."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    m = _require_finite(m, "matrix")
    u, s, vh = _svd(m)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vh[keep]


def shrink_columns(c: np.ndarray, kappa: float) -> np.ndarray:
    """Per-column soft shrinkage, the prox of kappa * (sum of column norms).

    Column j maps to max(1 - kappa/||c_j||, 0) * c_j; columns with norm at
    or below kappa (including zero columns) map to exactly zero.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    c = _require_finite(c, "matrix")
    norms = np.linalg.norm(c, axis=0)
    scale = np.zeros_like(norms)
    np.divide(norms - kappa, norms, out=scale, where=norms > kappa)
    return c * scale


def l12_norm(c: np.ndarray) -> float:
    """Sum of Euclidean column norms."""
    c = _require_finite(c, "matrix")
    return float(np.sum(np.linalg.norm(c, axis=0)))


class RidgeSolver:
    """Minimizer of ||W A - B||_F^2 + rho ||W||_F^2 over W.

    The Cholesky factorization of (A A^H + rho I) is computed once so
    repeated right-hand sides amortize it. With rho = 0 the matrix must be
    positive definite, i.e. A must have full row rank.
    """

    def __init__(self, a: np.ndarray, rho: float = 0.0):
        if rho < 0:
            raise ValueError("rho must be >= 0")
        a = _require_finite(np.atleast_2d(a), "A")
        gram = a @ a.conj().T
        gram[np.diag_indices_from(gram)] += rho
        try:
            self._cho = scipy.linalg.cho_factor(gram)
        except scipy.linalg.LinAlgError:
            raise np.linalg.LinAlgError(
                "A A^H + rho I is singular; need rho > 0 or full row rank A"
            ) from None
        self._a = a

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = _require_finite(np.atleast_2d(b), "B")
        # W = B A^H (A A^H + rho I)^{-1}, via the Hermitian solve of W^H
        wh = scipy.linalg.cho_solve(self._cho, self._a @ b.conj().T)
        return wh.conj().T


def ridge_least_squares(a: np.ndarray, b: np.ndarray, rho: float = 0.0) -> np.ndarray:
    """One-shot form of :class:`RidgeSolver`."""
    return RidgeSolver(a, rho).solve(b)
