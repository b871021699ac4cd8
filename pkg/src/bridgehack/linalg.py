"""Dense matrix primitives: Hadamard algebra, Hermitian spectral calculus and
the sandwich solve ``M N M = L``.

Every matrix function goes through a full eigendecomposition. Dimensions in
this package are small, so exactness is preferred over iterative schemes.
"""

from typing import NamedTuple

import numpy as np

from .errors import DivisionSingularity, InvalidInput, NotHermitian, RankDeficient

DIV_EPS = 1e-14
HERM_TOL = 1e-10
RANK_EPS = 1e-12
PSD_TOL = 1e-10
NOISE_ULPS = 8


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, unitary

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def apply(self, fn) -> np.ndarray:
        """Return ``V diag(fn(eigenvalues)) V^dagger``."""
        v = self.eigenvectors
        return (v * fn(self.eigenvalues)) @ v.conj().T


def _as_vector(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional, got shape {a.shape}")
    return a


def hadamard_product(a, b) -> np.ndarray:
    """Elementwise product ``a ⊙ b`` (equal to ``diag(a) @ b``)."""
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    if a.shape != b.shape:
        raise InvalidInput(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a * b


def hadamard_divide(a, b, eps: float = DIV_EPS) -> np.ndarray:
    """Elementwise quotient ``a ⊘ b`` with the convention ``0 / 0 = 0``.

    Raises
    ------
    DivisionSingularity
        If some ``|b_i| <= eps`` while ``a_i != 0``.
    """
    a = _as_vector(a, "a")
    b = _as_vector(b, "b")
    if a.shape != b.shape:
        raise InvalidInput(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    small = np.abs(b) <= eps
    bad = small & (a != 0)
    if np.any(bad):
        idx = np.flatnonzero(bad).tolist()
        raise DivisionSingularity(f"division of nonzero entries by zero at indices {idx}")
    out = np.zeros_like(a)
    np.divide(a, b, out=out, where=~small)
    return out


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m)
    return 0.5 * (m + m.conj().T)


def check_hermitian(m, tol: float = HERM_TOL) -> np.ndarray:
    """Validate Hermiticity in max norm and return the symmetrised matrix."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise NotHermitian(f"max |m - m^dagger| = {dev:.3e} exceeds {tol:.1e}")
    return hermitian_part(m)


def herm_eig(m) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending."""
    h = check_hermitian(m)
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def _psd_eig(m) -> SpectralDecomposition:
    dec = herm_eig(m)
    w = dec.eigenvalues
    scale = max(1.0, abs(w[0])) if w.size else 1.0
    if w.size and w[-1] < -PSD_TOL * scale:
        raise InvalidInput(f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3e})")
    # eigenvalues within rounding of zero are zero; otherwise sqrt turns 1e-17 into 3e-9
    noise = NOISE_ULPS * np.finfo(float).eps * w.size * (abs(w[0]) if w.size else 0.0)
    return SpectralDecomposition(np.where(w <= noise, 0.0, w), dec.eigenvectors)


def _check_floor(w: np.ndarray) -> None:
    if w.size == 0:
        return
    if w[0] <= 0 or w[-1] <= RANK_EPS * w[0]:
        raise RankDeficient(
            f"eigenvalue {w[-1]:.3e} below floor {RANK_EPS:.0e} * {w[0]:.3e}"
        )


def matrix_sqrt(m) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix."""
    return hermitian_part(_psd_eig(m).apply(np.sqrt))


def matrix_inv_sqrt(m) -> np.ndarray:
    """Inverse principal square root; raises RankDeficient below the floor."""
    dec = _psd_eig(m)
    _check_floor(dec.eigenvalues)
    return hermitian_part(dec.apply(lambda w: 1.0 / np.sqrt(w)))


def matrix_inv(m) -> np.ndarray:
    """Inverse of a Hermitian positive definite matrix via its spectrum."""
    dec = _psd_eig(m)
    _check_floor(dec.eigenvalues)
    return hermitian_part(dec.apply(lambda w: 1.0 / w))


def sqrt_and_inv_sqrt(m) -> tuple[np.ndarray, np.ndarray]:
    """``(m^{1/2}, m^{-1/2})`` from a single decomposition."""
    dec = _psd_eig(m)
    _check_floor(dec.eigenvalues)
    return (
        hermitian_part(dec.apply(np.sqrt)),
        hermitian_part(dec.apply(lambda w: 1.0 / np.sqrt(w))),
    )


def sandwich_from_roots(n, l_sqrt, l_inv_sqrt) -> np.ndarray:
    """Solve ``M N M = L`` given precomputed ``L^{1/2}`` and ``L^{-1/2}``."""
    n_inv = matrix_inv(n)
    inner = matrix_sqrt(hermitian_part(l_inv_sqrt @ n_inv @ l_inv_sqrt))
    return hermitian_part(l_sqrt @ inner @ l_sqrt)


def solve_sandwich(n, l) -> np.ndarray:
    """Hermitian PSD solution of ``M N M = L`` for positive definite ``N, L``.

    Uses ``M = L^{1/2} (L^{-1/2} N^{-1} L^{-1/2})^{1/2} L^{1/2}``.
    """
    n = check_hermitian(n)
    l = check_hermitian(l)
    if n.shape != l.shape:
        raise InvalidInput(f"shape mismatch: {n.shape} vs {l.shape}")
    l_sqrt, l_inv_sqrt = sqrt_and_inv_sqrt(l)
    return sandwich_from_roots(n, l_sqrt, l_inv_sqrt)


def shannon_entropy(p) -> float:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    p = _as_vector(p, "p")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def purity(rho) -> float:
    """``Tr rho^2`` of a density matrix."""
    rho = check_hermitian(rho)
    return float(np.real(np.sum(rho * rho.conj())))


def relative_frobenius(a, b) -> float:
    """``||a - b||_F / max(||b||_F, tiny)``."""
    den = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / den)
