"""Symmetric matrix functions via eigendecomposition.

The Gaussian-flow kernel needs cos(sqrt(M) T) and the spectral map
phi(z) = (sin(z)/z)^2 applied to sqrt(M) T. All matrix functions here
go through a single symmetric eigendecomposition of M; eigenvalues
below SPD_FLOOR raise NotSPDError (round-off on genuinely SPD inputs
is absorbed by clamping at the floor before the square root).
"""

import numpy as np

from .errors import NotSPDError

SPD_FLOOR = 1e-14
SYM_TOL = 1e-12


def check_symmetric(m, tol=SYM_TOL):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSPDError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.abs(m - m.T) <= tol * max(1.0, float(np.max(np.abs(m))))):
        raise NotSPDError("matrix is not symmetric within tolerance")
    return m


def spd_eigh(m):
    """Eigendecomposition of an SPD matrix; raises NotSPDError otherwise."""
    m = check_symmetric(m)
    w, q = np.linalg.eigh(m)
    if w[0] < SPD_FLOOR:
        raise NotSPDError(f"smallest eigenvalue {w[0]:.3e} below SPD floor")
    w = np.maximum(w, SPD_FLOOR)
    return w, q


def sym_apply(w, q, f):
    """Assemble q diag(f(w)) q^T."""
    return (q * f(w)) @ q.T


def sinc(z):
    """sin(z)/z, series below 1e-4 to avoid 0/0."""
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    out = np.where(small, 1.0 - z * z / 6.0 + z ** 4 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def phi_spectral(z):
    """phi(z) = (sin(z)/z)^2."""
    s = sinc(z)
    return s * s
