"""Dense complex linear algebra: operators, vectorization, superoperators.

Conventions used across the whole package:

* Operators are dense complex ``numpy`` arrays of shape (d, d).
* Vectorization is row-major: ``|A>>`` has entry ``A[m, n]`` at flat index
  ``m*d + n``, i.e. ``vectorize(A) = A.reshape(d*d)``.
* With that convention the map ``rho -> X rho Y`` becomes the matrix
  ``kron(X, Y.T)`` acting on ``|rho>>``, and unitary conjugation
  ``rho -> U rho U^dag`` becomes ``kron(U, U.conj())``.

Matrix exponentials of Hermitian generators go through an eigendecomposition
(spectral mapping, exact to roundoff); general generators (Lindbladians) use
:func:`scipy.linalg.expm`, which implements Pade approximation of order 13
with scaling and squaring and automatic norm-based scale selection.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonHermitianInput

HERMITICITY_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def as_operator(m) -> np.ndarray:
    """Coerce to a square complex matrix, raising DimensionMismatch otherwise."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m.T)


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    """Relative Hermiticity check: max|M - M^dag| <= tol * max|M|.

    The zero matrix counts as Hermitian.
    """
    m = as_operator(m)
    scale = np.max(np.abs(m))
    if scale == 0.0:
        return True
    return np.max(np.abs(m - dagger(m))) <= tol * scale


def require_hermitian(m: np.ndarray, name: str = "operator",
                      tol: float = HERMITICITY_TOL) -> np.ndarray:
    m = as_operator(m)
    if not is_hermitian(m, tol):
        defect = np.max(np.abs(m - dagger(m)))
        raise NonHermitianInput(f"{name} is not Hermitian (defect {defect:.3e})")
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the standard row-major block layout."""
    return np.kron(as_operator(a), as_operator(b))


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary e^{-i h t} of a Hermitian generator via spectral mapping.

    Args:
        h: Hermitian matrix (checked against the relative tolerance).
        t: real evolution time; ``t = 0`` returns the identity exactly.

    Returns:
        The unitary exp(-1j*h*t).

    Raises:
        NonHermitianInput: if ``h`` fails the Hermiticity check.
    """
    h = require_hermitian(h, "exponent")
    if not np.isfinite(t):
        raise ValueError("evolution time must be finite")
    if t == 0.0:
        return np.eye(h.shape[0], dtype=complex)
    evals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * t)
    return (vecs * phases) @ dagger(vecs)


def expm_general(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of an arbitrary square matrix (Pade, see module doc)."""
    return scipy.linalg.expm(as_operator(m))


def vectorize(m: np.ndarray) -> np.ndarray:
    """Row-major vectorization |A>>: entry (m, n) lands at index m*d + n."""
    m = as_operator(m)
    return m.reshape(m.shape[0] * m.shape[1])


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {v.shape}")
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatch(f"length {v.size} is not a perfect square")
    return v.reshape(d, d)


def sandwich_superop(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> X rho Y, namely kron(X, Y.T)."""
    x, y = as_operator(x), as_operator(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"operand shapes differ: {x.shape} vs {y.shape}")
    return np.kron(x, y.T)


def conjugation_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator of unitary conjugation rho -> U rho U^dag."""
    u = as_operator(u)
    return np.kron(u, u.conj())


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> [H, rho] = H rho - rho H, i.e. H x I - I x H^T."""
    h = as_operator(h)
    eye = np.eye(h.shape[0], dtype=complex)
    return np.kron(h, eye) - np.kron(eye, h.T)


def vec_identity(d: int) -> np.ndarray:
    """Vectorized identity |I>>; <<I|v is the trace of devectorize(v)."""
    return np.eye(d, dtype=complex).reshape(d * d)


def apply_superop(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply a d^2 x d^2 superoperator matrix to a d x d operator."""
    return devectorize(np.asarray(s) @ vectorize(rho))


def choi_matrix(superop: np.ndarray) -> np.ndarray:
    """Choi matrix C = sum_pq |p><q| (x) Phi(|p><q|) of a superoperator.

    With row-major vectorization the entries satisfy
    C[(p,m),(q,n)] = superop[m*d+n, p*d+q]; complete positivity of the
    channel is equivalent to C >= 0.
    """
    s = as_operator(superop)
    d = int(round(np.sqrt(s.shape[0])))
    if d * d != s.shape[0]:
        raise DimensionMismatch("superoperator size is not a perfect square")
    return s.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def density_matrix_defects(rho: np.ndarray) -> tuple[float, float, float]:
    """Return (hermiticity defect, trace defect, negativity) of a state."""
    rho = as_operator(rho)
    herm = float(np.max(np.abs(rho - dagger(rho))))
    tr = abs(np.trace(rho) - 1.0)
    evals = np.linalg.eigvalsh((rho + dagger(rho)) / 2.0)
    neg = float(max(0.0, -evals.min()))
    return herm, float(tr), neg
