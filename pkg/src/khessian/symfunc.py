"""Elementary symmetric functions of eigenvalue spectra and Garding cones.

A spectrum is the last axis of a real float array; every routine here is
vectorized over arbitrary leading (batch) axes.  Where entry order matters
(position-indexed checks, lemma ratios) the convention is descending,
``values[..., 0] >= values[..., 1] >= ...``, and positions are 1-based to
match the usual statement "lambda_1 >= ... >= lambda_n".

sigma_k is computed with the stable coefficient recurrence for
prod_i (1 + lambda_i t); no subset enumeration happens outside tests.
"""

from __future__ import annotations

import numpy as np

from .errors import ConeViolationError, DomainError, SamplingBudgetError


def spectrum(values) -> np.ndarray:
    """Validating constructor: sort a single eigenvalue vector descending.

    Accepts any 1-D array-like with n >= 1 finite real entries.
    """
    lam = np.asarray(values, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise DomainError(f"spectrum must be a 1-D vector, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)):
        raise DomainError("spectrum entries must be finite")
    return np.sort(lam)[::-1].copy()


def elementary_all(values) -> np.ndarray:
    """All elementary symmetric functions sigma_0..sigma_n along the last axis.

    Returns an array of shape ``values.shape[:-1] + (n+1,)`` holding the
    coefficients of prod_i (1 + lambda_i t), i.e. e[..., j] = sigma_j.
    The update runs j descending so each lambda_i enters exactly once.
    """
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,), dtype=float)
    e[..., 0] = 1.0
    for i in range(n):
        top = min(i + 1, n)
        for j in range(top, 0, -1):
            e[..., j] += lam[..., i] * e[..., j - 1]
    return e


def sigma(k: int, values) -> float | np.ndarray:
    """sigma_k(values); k = 0 gives 1, k = n the full product."""
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f"sigma_{k} undefined for spectra of length {n}")
    out = elementary_all(lam)[..., k]
    return float(out) if out.ndim == 0 else out


def sigma_restricted(r: int, values, excluded) -> float | np.ndarray:
    """sigma_r of the spectrum with the given entries deleted.

    ``excluded`` is a single 0-based index or an iterable of distinct
    0-based indices.  Deletion is implemented by zeroing: sigma_r of the
    zeroed vector equals sigma_r of the shortened one for r <= n - |excluded|
    and is 0 beyond that, which is the conventional value.
    """
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    if np.isscalar(excluded) or isinstance(excluded, (int, np.integer)):
        idx = [int(excluded)]
    else:
        idx = [int(i) for i in excluded]
    if len(set(idx)) != len(idx):
        raise DomainError(f"excluded indices must be distinct, got {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise DomainError(f"excluded index {i} out of range for n={n}")
    if not 0 <= r <= n:
        raise DomainError(f"sigma_{r} undefined for spectra of length {n}")
    reduced = lam.copy()
    reduced[..., idx] = 0.0
    out = elementary_all(reduced)[..., r]
    return float(out) if out.ndim == 0 else out


def sigma_restricted_each(r: int, values) -> np.ndarray:
    """sigma_r(values | i) for every single deleted index i.

    Output shape equals the input shape; entry [..., i] is sigma_r of the
    spectrum with entry i removed.
    """
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    if not 0 <= r <= n:
        raise DomainError(f"sigma_{r} undefined for spectra of length {n}")
    out = np.empty(lam.shape, dtype=float)
    for i in range(n):
        reduced = lam.copy()
        reduced[..., i] = 0.0
        out[..., i] = elementary_all(reduced)[..., r]
    return out


def sigma_restricted_pairs(r: int, values) -> np.ndarray:
    """sigma_r(values | i, p) for every index pair, shape values.shape + (n,).

    Symmetric in (i, p); the diagonal holds the single-deletion value
    sigma_r(values | i).
    """
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    if not 0 <= r <= n:
        raise DomainError(f"sigma_{r} undefined for spectra of length {n}")
    out = np.empty(lam.shape + (n,), dtype=float)
    for i in range(n):
        for p in range(i, n):
            reduced = lam.copy()
            reduced[..., i] = 0.0
            reduced[..., p] = 0.0
            val = elementary_all(reduced)[..., r]
            out[..., i, p] = val
            out[..., p, i] = val
    return out


def in_gamma_k(values, k: int) -> bool | np.ndarray:
    """Strict Garding cone test: sigma_j > 0 for all j = 1..k.

    Batched input gives a boolean array over the batch axes.
    """
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"Gamma_{k} undefined for spectra of length {n}")
    e = elementary_all(lam)
    ok = np.all(e[..., 1 : k + 1] > 0.0, axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


def sample_gamma_k(
    n: int,
    k: int,
    count: int | None = None,
    scale: float = 1.0,
    seed: int = 0,
    max_attempts: int = 10_000_000,
) -> np.ndarray:
    """Draw spectra uniformly from the box [-scale, scale]^n conditioned on
    Gamma_k membership, sorted descending.

    Rejection sampling is exact for the box-conditioned law.  If the observed
    acceptance rate drops below 1% (deep cones, large n) a constructive
    fallback fills the remainder: positive-orthant draws with a bounded
    negative perturbation of the trailing entries, shrunk until membership
    holds.  Fallback points are still i.i.d. draws from a fixed law, just not
    the box-conditioned one; they keep audits running instead of stalling.

    Returns shape (count, n), or (n,) when count is None.
    """
    if n < 1 or not 1 <= k <= n:
        raise DomainError(f"invalid cone parameters n={n}, k={k}")
    if scale <= 0:
        raise DomainError("scale must be positive")
    want = 1 if count is None else int(count)
    if want < 0:
        raise DomainError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    got: list[np.ndarray] = []
    have = 0
    attempts = 0
    fallback = False
    # probe in blocks; block size adapts to the remaining need
    while have < want:
        block = min(max(4 * (want - have), 1024), 1_000_000)
        if attempts + block > max_attempts:
            raise SamplingBudgetError(
                f"rejection budget exhausted after {attempts} attempts "
                f"({have}/{want} accepted)"
            )
        cand = rng.uniform(-scale, scale, size=(block, n))
        keep = cand[in_gamma_k(cand, k)]
        attempts += block
        got.append(keep)
        have += keep.shape[0]
        if have < want and attempts >= 4096 and have < 0.01 * attempts:
            fallback = True
            break
    if fallback:
        need = want - have
        base = rng.uniform(scale * 1e-6, scale, size=(need, n))
        base = np.sort(base, axis=-1)[:, ::-1]
        # negative perturbation of the smallest entry, halved until inside
        perturb = -rng.uniform(0.0, 1.0, size=need) * base[:, -1]
        shrink = np.ones(need)
        for _ in range(80):
            trial = base.copy()
            trial[:, -1] = base[:, -1] + shrink * perturb
            bad = ~in_gamma_k(trial, k)
            if not np.any(bad):
                break
            shrink[bad] *= 0.5
        else:
            trial = base  # positive orthant is always inside
        got.append(trial)
    out = np.concatenate(got, axis=0)[:want]
    out = np.sort(out, axis=-1)[:, ::-1]
    return out[0] if count is None else out


def sample_gamma_k_boundary(
    n: int,
    k: int,
    count: int,
    seed: int = 0,
    scale: float = 1.0,
    depth: float = 1e-8,
) -> np.ndarray:
    """Spectra just inside the Gamma_k boundary.

    Starting from interior samples, the smallest entry is pushed down by
    bisection to the largest shift that keeps strict membership, then backed
    off by ``depth`` of that shift.  Useful for stressing inequalities that
    must hold up to the cone boundary.
    """
    lam = np.atleast_2d(sample_gamma_k(n, k, count, scale=scale, seed=seed))
    # bracket: shifting the smallest entry by -t leaves the cone for large t
    t_hi = np.full(lam.shape[0], scale)
    for _ in range(60):
        trial = lam.copy()
        trial[:, -1] -= t_hi
        inside = in_gamma_k(trial, k)
        if not np.any(inside):
            break
        t_hi[inside] *= 2.0
    t_lo = np.zeros(lam.shape[0])
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        trial = lam.copy()
        trial[:, -1] -= mid
        inside = in_gamma_k(trial, k)
        t_lo = np.where(inside, mid, t_lo)
        t_hi = np.where(inside, t_hi, mid)
    out = lam.copy()
    out[:, -1] -= t_lo * (1.0 - depth)
    out = np.sort(out, axis=-1)[:, ::-1]
    bad = ~in_gamma_k(out, k)
    if np.any(bad):  # fall back to the interior point where bisection degenerated
        out[bad] = lam[bad]
    return out


def _require_descending(lam: np.ndarray) -> None:
    if np.any(lam[..., :-1] < lam[..., 1:]):
        raise DomainError("spectrum must be sorted descending")


def basic_inequality_check(values, k: int) -> bool | np.ndarray:
    """For descending lambda in Gamma_k with k < n, test
    |lambda_p| <= (n - k) * lambda_k for every p = k+1..n.

    This bound is a theorem for Gamma_k spectra, so False flags either a
    cone-membership bug or a counterexample worth reporting.
    """
    lam = np.asarray(values, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got k={k}, n={n}")
    _require_descending(lam)
    inside = in_gamma_k(lam, k)
    if not np.all(inside):
        raise ConeViolationError(
            "basic inequality requires Gamma_k membership",
            count=int(np.size(inside) - np.count_nonzero(inside)),
        )
    bound = (n - k) * lam[..., k - 1 : k]
    ok = np.all(np.abs(lam[..., k:]) <= bound, axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


def lemma21_ratio(values, k: int, i: int, j: int, subset) -> float:
    """|lambda_{j_1} ... lambda_{j_i}| / sigma_i(lambda | j) for a descending
    spectrum in Gamma_k, 3 <= k <= n, 0 <= i <= k-2.

    ``j`` and the members of ``subset`` are 1-based positions; subset entries
    are distinct and avoid j.  The denominator sigma_i(lambda|j) is positive
    for Gamma_k spectra (i <= k-2 < k); nonpositive values are reported as a
    violation via ConeViolationError.
    """
    lam = spectrum(values)
    n = lam.shape[-1]
    if not 3 <= k <= n:
        raise DomainError(f"need 3 <= k <= n, got k={k}, n={n}")
    if not 0 <= i <= k - 2:
        raise DomainError(f"need 0 <= i <= k-2, got i={i}, k={k}")
    if not 1 <= j <= n:
        raise DomainError(f"position j={j} out of range for n={n}")
    sub = [int(p) for p in subset]
    if len(sub) != i or len(set(sub)) != i:
        raise DomainError(f"subset must hold {i} distinct positions, got {sub}")
    for p in sub:
        if not 1 <= p <= n or p == j:
            raise DomainError(f"subset position {p} invalid (n={n}, j={j})")
    if not in_gamma_k(lam, k):
        raise ConeViolationError("lemma ratio requires Gamma_k membership")
    denom = sigma_restricted(i, lam, j - 1)
    if denom <= 0.0:
        raise ConeViolationError(
            f"sigma_{i}(lambda|{j}) = {denom} <= 0 on a Gamma_{k} spectrum"
        )
    numer = 1.0
    for p in sub:
        numer *= abs(lam[p - 1])
    return float(numer / denom)
