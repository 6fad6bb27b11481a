"""The normalized k-Hessian operator F = sigma_k^{1/k} on Hermitian pencils.

Inputs are pencils (g, w) of Hermitian matrices with g positive definite;
the operator acts on the relative eigenvalues lambda(g^{-1} w).  Derivative
formulas are evaluated in a g-orthonormal eigenframe (diagonal first
derivative, the (2,2)-tensor second derivative splits into a "diagonal"
block on real perturbation diagonals and an "off" block on off-diagonal
moduli) and conjugated back to coordinates where needed.

All routines broadcast over leading batch axes; eigenvalue order is
descending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConeViolationError, DomainError
from .symfunc import elementary_all, sigma_restricted_each, sigma_restricted_pairs

# strict-interior guard: sigma_k below this is treated as a cone exit so the
# k-th root and its derivatives stay well conditioned
SIGMA_FLOOR = 1e-14

HERMITIAN_RTOL = 1e-12


def require_hermitian(a, name: str = "matrix") -> np.ndarray:
    """Validate relative Hermitian symmetry of the trailing 2 axes."""
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DomainError(f"{name} must have square trailing axes, got {a.shape}")
    skew = np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max()
    scale = max(np.abs(a).max(), 1.0)
    if skew > HERMITIAN_RTOL * scale:
        raise DomainError(
            f"{name} is not Hermitian: relative asymmetry {skew / scale:.3e}"
        )
    return a


def relative_eigenvalues(g, w, validate: bool = True):
    """Eigenpairs of w v = lambda g v for Hermitian w and positive definite g.

    Returns (lam, vecs) with lam descending along the last axis and
    eigenvector columns vecs[..., :, a] normalized so that
    vecs^H g vecs = identity.  Implemented by Cholesky reduction to an
    ordinary Hermitian problem, which keeps the eigenvalues real.
    """
    g = np.asarray(g, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if validate:
        require_hermitian(g, "g")
        require_hermitian(w, "w")
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DomainError("g must be positive definite") from exc
    y = np.linalg.solve(chol, w)
    a = np.linalg.solve(chol, np.conj(np.swapaxes(y, -1, -2)))
    a = np.conj(np.swapaxes(a, -1, -2))  # a = L^{-1} w L^{-H}
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    lam, q = np.linalg.eigh(a)
    vecs = np.linalg.solve(np.conj(np.swapaxes(chol, -1, -2)), q)
    return lam[..., ::-1], vecs[..., :, ::-1]


def relative_eigenvalues_only(g, w) -> np.ndarray:
    """Descending eigenvalues of the pencil without eigenvectors (cheaper)."""
    g = np.asarray(g, dtype=complex)
    w = np.asarray(w, dtype=complex)
    chol = np.linalg.cholesky(g)
    y = np.linalg.solve(chol, w)
    a = np.linalg.solve(chol, np.conj(np.swapaxes(y, -1, -2)))
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    return np.linalg.eigvalsh(a)[..., ::-1]


def _cone_guard(lam: np.ndarray, k: int) -> np.ndarray:
    """Return sigma table after enforcing strict Gamma_k membership."""
    e = elementary_all(lam)
    ok = np.all(e[..., 1 : k + 1] > 0.0, axis=-1) & (e[..., k] >= SIGMA_FLOOR)
    if not np.all(ok):
        n_bad = int(np.size(ok) - np.count_nonzero(ok))
        raise ConeViolationError(
            f"spectrum outside the strict Gamma_{k} interior at {n_bad} point(s)",
            count=n_bad,
        )
    return e


def sigma_root(values, k: int) -> float | np.ndarray:
    """F(lambda) = sigma_k(lambda)^{1/k} on the strict Gamma_k interior."""
    lam = np.asarray(values, dtype=float)
    _check_k(lam, k)
    e = _cone_guard(lam, k)
    out = e[..., k] ** (1.0 / k)
    return float(out) if out.ndim == 0 else out


def sigma_root_gradient(values, k: int) -> np.ndarray:
    """Eigenframe gradient: dF/dlambda_i = (1/k) sigma_k^{1/k-1} sigma_{k-1}(lambda|i)."""
    lam = np.asarray(values, dtype=float)
    _check_k(lam, k)
    e = _cone_guard(lam, k)
    sk = e[..., k]
    return (1.0 / k) * sk[..., None] ** (1.0 / k - 1.0) * sigma_restricted_each(k - 1, lam)


def sigma_root_hessian(values, k: int):
    """Eigenframe second derivative of F, split into its two blocks.

    Returns (diag_block, off_block), each shaped like values + (n,):

    diag_block[i, p] couples diagonal perturbations a_i a_p,
        (1/k) sigma_k^{1/k-1} (1 - delta_ip) sigma_{k-2}(lambda|i,p)
        + (1/k)(1/k - 1) sigma_k^{1/k-2} sigma_{k-1}(lambda|i) sigma_{k-1}(lambda|p);
    off_block[i, p] multiplies |b_ip|^2 for i != p,
        -(1/k) sigma_k^{1/k-1} sigma_{k-2}(lambda|i,p),
    with zeros on its diagonal.
    """
    lam = np.asarray(values, dtype=float)
    _check_k(lam, k)
    n = lam.shape[-1]
    e = _cone_guard(lam, k)
    sk = e[..., k]
    s1 = sigma_restricted_each(k - 1, lam)
    if k >= 2:
        s2 = sigma_restricted_pairs(k - 2, lam)
    else:
        s2 = np.zeros(lam.shape + (n,))
    root1 = sk[..., None, None] ** (1.0 / k - 1.0)
    root2 = sk[..., None, None] ** (1.0 / k - 2.0)
    eye = np.eye(n)
    diag = (1.0 / k) * root1 * (1.0 - eye) * s2 + (1.0 / k) * (
        1.0 / k - 1.0
    ) * root2 * s1[..., :, None] * s1[..., None, :]
    off = -(1.0 / k) * root1 * s2 * (1.0 - eye)
    return diag, off


def garding_floor(values, k: int, trace_cap: float | None = None) -> float | np.ndarray:
    """min_i dF/dlambda_i, the uniform ellipticity floor of the linearization.

    For spectra with sigma_1 bounded (``trace_cap``) and sigma_k bounded
    below, the floor is bounded away from zero; passing trace_cap asserts
    the bound as a precondition.
    """
    lam = np.asarray(values, dtype=float)
    if trace_cap is not None:
        s1 = elementary_all(lam)[..., 1]
        if np.any(s1 > trace_cap):
            raise DomainError(
                f"sigma_1 exceeds the stated trace cap {trace_cap}"
            )
    grad = sigma_root_gradient(lam, k)
    out = grad.min(axis=-1)
    return float(out) if out.ndim == 0 else out


def coordinate_gradient(vecs, grad_diag) -> np.ndarray:
    """Conjugate an eigenframe-diagonal derivative back to coordinates:
    Phi = V diag(grad) V^H, Hermitian by construction."""
    return np.einsum(
        "...ia,...a,...ja->...ij", vecs, grad_diag, np.conj(vecs), optimize=True
    )


def concavity_form(values, k: int, diag_perturb, off_perturb) -> float | np.ndarray:
    """Quadratic form of the eigenframe second derivative.

    diag_perturb: real (..., n) diagonal entries a_i of the Hermitian
    perturbation in the eigenframe; off_perturb: (..., n, n) complex
    off-diagonal entries b_ip (diagonal ignored).  On Gamma_k the value is
    <= 0 (F is concave); at simple pinned spectra this is exactly

        sum_{i,p} diag[i,p] a_i a_p + sum_{i != p} off[i,p] |b_ip|^2.
    """
    diag_block, off_block = sigma_root_hessian(values, k)
    a = np.asarray(diag_perturb, dtype=float)
    b = np.asarray(off_perturb, dtype=complex)
    quad = np.einsum("...ip,...i,...p->...", diag_block, a, a, optimize=True)
    mask = 1.0 - np.eye(a.shape[-1])
    quad = quad + np.einsum(
        "...ip,...ip->...", off_block * mask, np.abs(b) ** 2, optimize=True
    )
    return float(quad) if np.ndim(quad) == 0 else quad


@dataclass
class OperatorEval:
    """Operator value and derivatives at one pencil point."""

    value: float
    spectrum: np.ndarray  # descending relative eigenvalues
    gradient: np.ndarray  # coordinate-frame Hermitian matrix Phi
    gradient_diag: np.ndarray  # eigenframe diagonal of dF
    hessian_diag: np.ndarray  # eigenframe second-derivative blocks
    hessian_off: np.ndarray
    vectors: np.ndarray  # g-orthonormal eigenvector columns


def evaluate(g, w, k: int) -> OperatorEval:
    """Full operator evaluation at a single (g, w) pencil."""
    lam, vecs = relative_eigenvalues(g, w)
    value = sigma_root(lam, k)
    gdiag = sigma_root_gradient(lam, k)
    hdiag, hoff = sigma_root_hessian(lam, k)
    phi = coordinate_gradient(vecs, gdiag)
    return OperatorEval(
        value=float(np.asarray(value)),
        spectrum=lam,
        gradient=phi,
        gradient_diag=gdiag,
        hessian_diag=hdiag,
        hessian_off=hoff,
        vectors=vecs,
    )


def _check_k(lam: np.ndarray, k: int) -> None:
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
