"""Log-determinant of 1 - K for symmetric contraction kernels."""

from __future__ import annotations

import numpy as np

from .errors import ContractionError, DomainError


def logdet_one_minus(kernel) -> float:
    """ln det(1 - K) via a symmetric (Cholesky) factorization.

    ``kernel`` is a :class:`~casimir_cylinders.kernels.KernelMatrix` or any
    square symmetric array.  For the physical scattering kernels K is
    positive semidefinite with spectral radius below one, so 1 - K is
    positive definite and the result is finite and <= 0.  A non-positive
    pivot means K is not a contraction (bad geometry or a truncation
    failure) and raises :class:`ContractionError`.
    """
    k = getattr(kernel, "entries", kernel)
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DomainError(f"kernel must be square, got shape {k.shape}")
    if not np.all(np.isfinite(k)):
        raise DomainError("kernel has non-finite entries")
    scale = np.abs(k).max()
    if scale > 0 and np.abs(k - k.T).max() > 1e-10 * scale:
        raise DomainError("kernel is not symmetric")
    m = np.eye(k.shape[0]) - k
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ContractionError(
            "1 - K is not positive definite; the kernel is not a contraction"
        ) from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))
