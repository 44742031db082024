"""Dense symmetric-matrix kernel.

Symmetric matrices are plain ``numpy`` arrays of shape ``(d, d)``. Every
public function symmetrizes its input as ``(M + M.T) / 2`` before use, so
asymmetry picked up through repeated inversions never accumulates.
Functions whose name says so also accept stacks of shape ``(..., d, d)``.
"""

from typing import NamedTuple

import numpy as np

from .errors import DimMismatch, InvalidMatrix, NotPsd

#: Relative tolerance for positive semi-definiteness checks.
PSD_TOL = 1e-9
#: Eigenvalues at or below ``RANK_TOL * lambda_max`` are treated as zero.
RANK_TOL = 1e-12


class EigenDecomp(NamedTuple):
    """Eigenvalues in ascending order and orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        Q, w = self.eigenvectors, self.eigenvalues
        return sym((Q * w[..., None, :]) @ np.swapaxes(Q, -1, -2))


def sym(M):
    """Validate ``M`` as a (stack of) square real matrices and symmetrize it."""
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2] or M.shape[-1] < 1:
        raise InvalidMatrix(f"expected square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix("matrix has non-finite entries")
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _same_dim(A, B):
    if A.shape[-1] != B.shape[-1]:
        raise DimMismatch(f"dimension mismatch: {A.shape[-1]} vs {B.shape[-1]}")


def eig_sym(M):
    w, Q = np.linalg.eigh(sym(M))
    return EigenDecomp(w, Q)


def max_eig(M):
    """Largest eigenvalue. Works on stacks."""
    return np.linalg.eigvalsh(sym(M))[..., -1]


def min_eig(M):
    return np.linalg.eigvalsh(sym(M))[..., 0]


def spectral_norm(M):
    """``max |eigenvalue|``. Works on stacks."""
    w = np.linalg.eigvalsh(sym(M))
    return np.maximum(np.abs(w[..., 0]), np.abs(w[..., -1]))


def loewner_leq(A, B, tol=PSD_TOL):
    """Test ``A <= B`` in the Loewner order.

    True iff ``lambda_min(B - A) >= -tol * max(1, ||B - A||)``. Broadcasts
    over leading stack dimensions and then returns a boolean array.
    """
    A, B = sym(A), sym(B)
    _same_dim(A, B)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    w = np.linalg.eigvalsh(B - A)
    scale = np.maximum(1.0, np.maximum(np.abs(w[..., 0]), np.abs(w[..., -1])))
    out = w[..., 0] >= -tol * scale
    return bool(out) if np.ndim(out) == 0 else out


def is_psd(M, tol=PSD_TOL):
    """``lambda_min >= -tol * max(1, lambda_max)``."""
    w = np.linalg.eigvalsh(sym(M))
    out = w[..., 0] >= -tol * np.maximum(1.0, w[..., -1])
    return bool(out) if np.ndim(out) == 0 else out


def _psd_eig(M, rank_tol):
    w, Q = np.linalg.eigh(sym(M))
    top = max(w[-1], 0.0)
    if w[0] < -max(rank_tol * top, PSD_TOL * max(1.0, top)):
        raise NotPsd(f"matrix is not p.s.d. (lambda_min = {w[0]:.3e})")
    keep = w > rank_tol * top
    return w, Q, keep


def pinv_sqrt(M, rank_tol=RANK_TOL):
    """Square root of the pseudo-inverse, ``(M^+)^{1/2}``.

    Eigenvalues above ``rank_tol * lambda_max`` map to ``lambda^{-1/2}``,
    the rest to zero.
    """
    w, Q, keep = _psd_eig(M, rank_tol)
    f = np.zeros_like(w)
    f[keep] = 1.0 / np.sqrt(w[keep])
    return sym((Q * f) @ Q.T)


def psd_sqrt(M, rank_tol=RANK_TOL):
    w, Q, keep = _psd_eig(M, rank_tol)
    f = np.where(keep, np.sqrt(np.clip(w, 0.0, None)), 0.0)
    return sym((Q * f) @ Q.T)


def pinv_sym(M, rank_tol=RANK_TOL):
    w, Q, keep = _psd_eig(M, rank_tol)
    f = np.zeros_like(w)
    f[keep] = 1.0 / w[keep]
    return sym((Q * f) @ Q.T)


def range_projector(M, rank_tol=RANK_TOL):
    """Orthogonal projector ``M M^+`` onto the range of a p.s.d. matrix."""
    w, Q, keep = _psd_eig(M, rank_tol)
    Qk = Q[:, keep]
    return sym(Qk @ Qk.T)


def matrix_exp(M):
    """``e^M`` via the eigenbasis. Works on stacks."""
    w, Q = np.linalg.eigh(sym(M))
    return sym((Q * np.exp(w)[..., None, :]) @ np.swapaxes(Q, -1, -2))


def inv_sym(M):
    """Inverse of a p.d. matrix (or stack) through its eigendecomposition."""
    w, Q = np.linalg.eigh(sym(M))
    if np.any(w[..., 0] <= 0):
        raise NotPsd("matrix is not positive definite")
    return sym((Q / w[..., None, :]) @ np.swapaxes(Q, -1, -2))
