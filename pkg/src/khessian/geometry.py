"""Spectral geometry on the flat complex torus C^n / (Z + iZ)^n.

Fields live on a uniform (N,)*(2n) grid; axis 2j holds x^{j+1} and axis
2j+1 holds y^{j+1} for the complex coordinates z^j = x^j + i y^j, each of
period 1.  Derivatives are Fourier multipliers, exact for band-limited data:

    d/dz^j  = (d/dx^j - i d/dy^j) / 2,    d/dzbar^j = (d/dx^j + i d/dy^j) / 2.

Hermitian metrics are (grid + (n, n)) complex arrays g[..., i, j] = g_{i jbar},
not assumed Kahler.  The Chern connection of such a metric,

    Gamma^p_ij = g^{p qbar} d_i g_{j qbar},
    T^p_ij     = Gamma^p_ij - Gamma^p_ji,
    R_{i jbar k}^p = -d_jbar Gamma^p_ik,

furnishes covariant derivatives of scalars up to fourth order and the
commutation residuals used to validate them; derivative subscripts are
applied left to right, i.e. u_{i jbar l} differentiates u_{i jbar}.

The integration convention normalizes the flat torus to unit volume:
integrate(1, identity metric) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .symfunc import in_gamma_k, sigma_restricted_each
from .operator import relative_eigenvalues, relative_eigenvalues_only


class TorusGrid:
    """Uniform periodic grid with cached Fourier multiplier symbols."""

    def __init__(self, n: int, N: int):
        if n < 2:
            raise DomainError(f"need complex dimension n >= 2, got {n}")
        if N < 8 or N % 2 != 0:
            raise DomainError(f"need even N >= 8 nodes per axis, got {N}")
        self.n = int(n)
        self.N = int(N)
        self.shape = (self.N,) * (2 * self.n)
        self._freq = np.fft.fftfreq(self.N) * self.N  # integer wavenumbers
        self._ticks = np.arange(self.N) / self.N
        self._symz: dict[int, np.ndarray] = {}
        self._symzbar: dict[int, np.ndarray] = {}
        self._lap = None

    # ---------------------------------------------------------- coordinates

    def _axis_view(self, values: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * (2 * self.n)
        shape[axis] = self.N
        return values.reshape(shape)

    def x(self, j: int) -> np.ndarray:
        """Broadcastable x^{j+1} coordinate values (0-based j)."""
        return self._axis_view(self._ticks, 2 * j)

    def y(self, j: int) -> np.ndarray:
        return self._axis_view(self._ticks, 2 * j + 1)

    def axis_coordinate(self, axis: int) -> np.ndarray:
        return self._axis_view(self._ticks, axis)

    def zeros(self, extra: tuple = (), dtype=float) -> np.ndarray:
        return np.zeros(self.shape + extra, dtype=dtype)

    # ---------------------------------------------------------- derivatives

    def _symbol_z(self, j: int) -> np.ndarray:
        if j not in self._symz:
            mx = self._axis_view(self._freq, 2 * j)
            my = self._axis_view(self._freq, 2 * j + 1)
            self._symz[j] = np.pi * (1j * mx + my)
        return self._symz[j]

    def _symbol_zbar(self, j: int) -> np.ndarray:
        if j not in self._symzbar:
            mx = self._axis_view(self._freq, 2 * j)
            my = self._axis_view(self._freq, 2 * j + 1)
            self._symzbar[j] = np.pi * (1j * mx - my)
        return self._symzbar[j]

    @property
    def laplace_symbol(self) -> np.ndarray:
        """Fourier symbol of the complex Laplacian sum_j d_j d_jbar."""
        if self._lap is None:
            acc = np.zeros(self.shape)
            for a in range(2 * self.n):
                m = self._axis_view(self._freq, a)
                acc = acc - (np.pi * m) ** 2
            self._lap = acc
        return self._lap

    def _check_shape(self, field: np.ndarray) -> None:
        # reject broadcastable coordinate views: Fourier symbols would
        # silently attach their content to the wrong axes
        if field.shape != self.shape:
            raise DomainError(
                f"field shape {field.shape} does not match grid {self.shape}; "
                "broadcast coordinate expressions to full shape first"
            )

    def fft(self, field: np.ndarray) -> np.ndarray:
        self._check_shape(field)
        return np.fft.fftn(field, axes=range(2 * self.n))

    def ifft(self, hat: np.ndarray) -> np.ndarray:
        self._check_shape(hat)
        return np.fft.ifftn(hat, axes=range(2 * self.n))

    def dz(self, field: np.ndarray, j: int) -> np.ndarray:
        return self.ifft(self.fft(field) * self._symbol_z(j))

    def dzbar(self, field: np.ndarray, j: int) -> np.ndarray:
        return self.ifft(self.fft(field) * self._symbol_zbar(j))

    def holomorphic_gradient(self, field: np.ndarray) -> np.ndarray:
        """All first derivatives d_j field, shape grid + (n,)."""
        hat = self.fft(field)
        out = np.empty(self.shape + (self.n,), dtype=complex)
        for j in range(self.n):
            out[..., j] = self.ifft(hat * self._symbol_z(j))
        return out

    def complex_hessian(self, field: np.ndarray) -> np.ndarray:
        """d_i d_jbar field for a real field, shape grid + (n, n).

        Hermitian by construction: the lower triangle mirrors the upper and
        the diagonal is forced real.
        """
        if not np.isrealobj(field):
            raise DomainError("complex_hessian expects a real field")
        hat = self.fft(field)
        out = np.empty(self.shape + (self.n, self.n), dtype=complex)
        for i in range(self.n):
            for j in range(i, self.n):
                ent = self.ifft(hat * self._symbol_z(i) * self._symbol_zbar(j))
                if i == j:
                    out[..., i, i] = ent.real
                else:
                    out[..., i, j] = ent
                    out[..., j, i] = np.conj(ent)
        return out

    def complex_laplacian(self, field: np.ndarray) -> np.ndarray:
        return self.ifft(self.fft(field) * self.laplace_symbol)

    def solve_laplacian(self, rhs: np.ndarray) -> np.ndarray:
        """Mean-zero solution of the complex Laplace equation; the rhs mean
        is discarded (zero mode of the symbol)."""
        hat = self.fft(rhs)
        sym = self.laplace_symbol.copy()
        zero = (0,) * (2 * self.n)
        sym[zero] = 1.0
        hat = hat / sym
        hat[zero] = 0.0
        return self.ifft(hat)

    # ---------------------------------------------------------- integration

    def mean(self, field: np.ndarray) -> float:
        return float(np.mean(field.real if np.iscomplexobj(field) else field))

    def integrate(self, field: np.ndarray, metric: np.ndarray | None = None) -> float:
        """Trapezoidal (= mean, by periodicity) integral of field against the
        metric volume density det g; unit volume for the flat metric."""
        if metric is None:
            return self.mean(field)
        dens = np.linalg.det(metric).real
        return self.mean(field * dens)

    # ---------------------------------------------------------- constructors

    def trig_field(self, terms) -> np.ndarray:
        """Real trigonometric polynomial sum_t amp * cos(2 pi m . xi + phase).

        Each term is (amplitude, freqs, phase) with ``freqs`` a length-2n
        integer vector against the coordinates (x^1, y^1, ..., x^n, y^n).
        """
        out = np.zeros(self.shape)
        for term in terms:
            amp, freqs, phase = term
            freqs = [int(v) for v in freqs]
            if len(freqs) != 2 * self.n:
                raise DomainError(
                    f"frequency vector must have length {2 * self.n}, got {len(freqs)}"
                )
            arg = np.zeros(self.shape)
            for a, m in enumerate(freqs):
                if m:
                    arg = arg + 2.0 * np.pi * m * self.axis_coordinate(a)
            out = out + float(amp) * np.cos(arg + float(phase))
        return out


# ------------------------------------------------------------------ metrics

PRESET_NAMES = ("euclidean", "kahler", "torsion")


def identity_metric(grid: TorusGrid) -> np.ndarray:
    g = np.zeros(grid.shape + (grid.n, grid.n), dtype=complex)
    for i in range(grid.n):
        g[..., i, i] = 1.0
    return g


def kahler_potential(grid: TorusGrid, amplitude: float) -> np.ndarray:
    """Small torus-periodic potential mixing coordinates of different blocks."""
    n = grid.n
    phi = np.zeros(grid.shape)
    for j in range(n):
        phi = phi + np.cos(2 * np.pi * grid.x(j)) * np.sin(
            2 * np.pi * grid.y((j + 1) % n)
        )
    phi = phi + np.cos(2 * np.pi * grid.x(0))
    return amplitude * phi


def metric_preset(grid: TorusGrid, name: str, epsilon: float = 0.1,
                  amplitude: float = 0.02) -> np.ndarray:
    """Build one of the named Hermitian metric families.

    euclidean: the identity.
    kahler:    g = id + ddbar(phi) for a small potential (torsion-free).
    torsion:   diagonal g_ii = 1 + epsilon * h_i with nonnegative bump
               profiles h_i = 1 + (unit wave in a coordinate outside block
               i); distinct cross-coordinate waves force nonzero torsion,
               and g_ii >= 1 keeps relative-eigenvalue cone margins at least
               as good as the flat metric.
    """
    if name == "euclidean":
        return identity_metric(grid)
    if name == "kahler":
        g = identity_metric(grid) + grid.complex_hessian(
            kahler_potential(grid, amplitude)
        )
        _require_positive(g, "kahler preset")
        return g
    if name == "torsion":
        if not 0.0 < epsilon <= 0.2:
            raise DomainError(f"torsion preset needs 0 < epsilon <= 0.2, got {epsilon}")
        n = grid.n
        g = np.zeros(grid.shape + (n, n), dtype=complex)
        for i in range(n):
            other = (i + 1) % n
            if i % 2 == 0:
                wave = np.cos(2 * np.pi * grid.x(other))
            else:
                wave = np.sin(2 * np.pi * grid.y(other))
            g[..., i, i] = 1.0 + epsilon * (1.0 + wave)
        return g
    raise DomainError(f"unknown metric preset {name!r}; choose from {PRESET_NAMES}")


def _require_positive(g: np.ndarray, label: str) -> None:
    lam_min = np.linalg.eigvalsh(g)[..., 0].min()
    if lam_min <= 0:
        raise DomainError(f"{label} is not positive definite (min eig {lam_min:.3e})")


def inverse_metric(g: np.ndarray) -> np.ndarray:
    """Matrix inverse of g_{i jbar}; the raised tensor is g^{p qbar} =
    inverse[..., q, p]."""
    return np.linalg.inv(g)


# ------------------------------------------------------------ Chern tensors

@dataclass
class ChernTensors:
    """Connection data of a Hermitian metric on the grid.

    gamma[..., p, i, j]      : Gamma^p_ij
    torsion[..., p, i, j]    : T^p_ij = Gamma^p_ij - Gamma^p_ji
    curvature[..., i, j, k, p]: R_{i jbar k}^p = -d_jbar Gamma^p_ik
    """

    metric: np.ndarray
    inverse: np.ndarray
    gamma: np.ndarray
    torsion: np.ndarray
    curvature: np.ndarray

    def lowered_curvature(self) -> np.ndarray:
        """R_{i jbar k lbar} = R_{i jbar k}^p g_{p lbar}."""
        return np.einsum(
            "...ijkp,...pl->...ijkl", self.curvature, self.metric, optimize=True
        )


def chern_tensors(grid: TorusGrid, g: np.ndarray, with_curvature: bool = True) -> ChernTensors:
    """Assemble connection, torsion and curvature of a Hermitian metric."""
    n = grid.n
    if g.shape != grid.shape + (n, n):
        raise DomainError(f"metric shape {g.shape} does not match grid {grid.shape}")
    ginv = inverse_metric(g)
    dg = np.empty(grid.shape + (n, n, n), dtype=complex)  # dg[..., i, j, q] = d_i g_{j qbar}
    for j in range(n):
        for q in range(n):
            hat = grid.fft(g[..., j, q])
            for i in range(n):
                dg[..., i, j, q] = grid.ifft(hat * grid._symbol_z(i))
    gamma = np.einsum("...qp,...ijq->...pij", ginv, dg, optimize=True)
    torsion = gamma - np.swapaxes(gamma, -1, -2)
    if with_curvature:
        curvature = np.empty(grid.shape + (n, n, n, n), dtype=complex)
        for p in range(n):
            for i in range(n):
                for kk in range(n):
                    hat = grid.fft(gamma[..., p, i, kk])
                    for j in range(n):
                        curvature[..., i, j, kk, p] = -grid.ifft(
                            hat * grid._symbol_zbar(j)
                        )
    else:
        curvature = np.zeros(grid.shape + (n, n, n, n), dtype=complex)
    return ChernTensors(metric=g, inverse=ginv, gamma=gamma, torsion=torsion,
                        curvature=curvature)


# ------------------------------------------------- covariant derivatives

@dataclass
class CovariantDerivatives:
    """Chern-covariant derivatives of a real scalar, subscripts left to right.

    grad[..., i]          : u_i
    hess[..., i, j]       : u_{i jbar}
    hol2[..., p, i]       : u_{p i}
    d3_mixed[..., i, j, l]: u_{i jbar l}
    d3_hol[..., p, i, j]  : u_{p i jbar}
    d3_anti[..., i, p, j] : u_{i pbar jbar}
    d4[..., i, j, l, m]   : u_{i jbar l mbar}
    """

    grad: np.ndarray
    hess: np.ndarray
    hol2: np.ndarray
    d3_mixed: np.ndarray
    d3_hol: np.ndarray
    d3_anti: np.ndarray
    d4: np.ndarray | None


def covariant_derivatives(
    grid: TorusGrid, u: np.ndarray, tensors: ChernTensors, order: int = 4
) -> CovariantDerivatives:
    if order not in (3, 4):
        raise DomainError(f"covariant derivative order must be 3 or 4, got {order}")
    n = grid.n
    gamma = tensors.gamma
    hat = grid.fft(u)
    grad = np.empty(grid.shape + (n,), dtype=complex)
    for i in range(n):
        grad[..., i] = grid.ifft(hat * grid._symbol_z(i))
    hess = grid.complex_hessian(u)
    # u_{p i} = d_i d_p u - Gamma^q_ip u_q
    dz2 = np.empty(grid.shape + (n, n), dtype=complex)
    for p in range(n):
        for i in range(p, n):
            ent = grid.ifft(hat * grid._symbol_z(p) * grid._symbol_z(i))
            dz2[..., p, i] = ent
            dz2[..., i, p] = ent
    hol2 = dz2 - np.einsum("...qip,...q->...pi", gamma, grad, optimize=True)
    # u_{i jbar l} = d_l u_{i jbar} - Gamma^p_li u_{p jbar}
    d3_mixed = np.empty(grid.shape + (n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            hhat = grid.fft(hess[..., i, j])
            for l in range(n):
                d3_mixed[..., i, j, l] = grid.ifft(hhat * grid._symbol_z(l))
    d3_mixed = d3_mixed - np.einsum("...pli,...pj->...ijl", gamma, hess, optimize=True)
    # u_{p i jbar} = d_jbar u_{p i}
    d3_hol = np.empty(grid.shape + (n, n, n), dtype=complex)
    for p in range(n):
        for i in range(n):
            hhat = grid.fft(hol2[..., p, i])
            for j in range(n):
                d3_hol[..., p, i, j] = grid.ifft(hhat * grid._symbol_zbar(j))
    # u_{i pbar jbar} = d_jbar u_{i pbar} - conj(Gamma^q_jp) u_{i qbar}
    d3_anti = np.empty(grid.shape + (n, n, n), dtype=complex)
    for i in range(n):
        for p in range(n):
            hhat = grid.fft(hess[..., i, p])
            for j in range(n):
                d3_anti[..., i, p, j] = grid.ifft(hhat * grid._symbol_zbar(j))
    d3_anti = d3_anti - np.einsum(
        "...qjp,...iq->...ipj", np.conj(gamma), hess, optimize=True
    )
    d4 = None
    if order == 4:
        # u_{i jbar l mbar} = d_mbar u_{i jbar l} - conj(Gamma^q_mj) u_{i qbar l}
        d4 = np.empty(grid.shape + (n, n, n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    hhat = grid.fft(d3_mixed[..., i, j, l])
                    for m in range(n):
                        d4[..., i, j, l, m] = grid.ifft(hhat * grid._symbol_zbar(m))
        d4 = d4 - np.einsum(
            "...qmj,...iql->...ijlm", np.conj(gamma), d3_mixed, optimize=True
        )
    return CovariantDerivatives(
        grad=grad, hess=hess, hol2=hol2, d3_mixed=d3_mixed, d3_hol=d3_hol,
        d3_anti=d3_anti, d4=d4,
    )


def commutation_residual(
    grid: TorusGrid,
    u: np.ndarray,
    g: np.ndarray,
    order: int = 3,
    omit_torsion_product: bool = False,
    tensors: ChernTensors | None = None,
    derivatives: CovariantDerivatives | None = None,
) -> float:
    """Max-abs defect of the third- or fourth-order commutation identities.

    order=3 takes the worst case over the three index-exchange identities

        u_{i jbar l} = u_{l jbar i} - T^p_li u_{p jbar}
        u_{p i jbar} = u_{p jbar i} + u_q R_{i jbar p}^q
        u_{i pbar jbar} = u_{i jbar pbar} - conj(T^q_jp) u_{i qbar}

    and order=4 measures

        u_{i jbar l mbar} = u_{l mbar i jbar}
            + u_{p jbar} R_{l mbar i}^p - u_{p mbar} R_{i jbar l}^p
            - T^p_li u_{p mbar jbar} - conj(T^q_mj) u_{l qbar i}
            + T^p_li conj(T^q_mj) u_{p qbar}.

    ``omit_torsion_product`` drops the final torsion-squared term, a mutation
    hook used to confirm the audit rejects the wrong identity.
    """
    if tensors is None:
        tensors = chern_tensors(grid, g, with_curvature=True)
    if derivatives is None:
        derivatives = covariant_derivatives(grid, u, tensors, order=order)
    t = tensors.torsion
    r = tensors.curvature
    d = derivatives
    if order == 3:
        res_a = (
            d.d3_mixed
            - np.swapaxes(d.d3_mixed, -3, -1)  # u_{l jbar i} in [i, j, l] slots
            + np.einsum("...pli,...pj->...ijl", t, d.hess, optimize=True)
        )
        res_b = (
            d.d3_hol
            - np.transpose(d.d3_mixed, axes=tuple(range(d.d3_mixed.ndim - 3)) + (-3, -1, -2))
            - np.einsum("...q,...ijpq->...pij", d.grad, r, optimize=True)
        )
        res_c = (
            d.d3_anti
            - np.swapaxes(d.d3_anti, -2, -1)  # u_{i jbar pbar} in [i, p, j] slots
            + np.einsum("...qjp,...iq->...ipj", np.conj(t), d.hess, optimize=True)
        )
        return max(
            float(np.abs(res_a).max()),
            float(np.abs(res_b).max()),
            float(np.abs(res_c).max()),
        )
    if order == 4:
        if d.d4 is None:
            raise DomainError("fourth-order residual needs order=4 derivatives")
        res = (
            d.d4
            - np.transpose(d.d4, axes=tuple(range(d.d4.ndim - 4)) + (-2, -1, -4, -3))
            - np.einsum("...lmip,...pj->...ijlm", r, d.hess, optimize=True)
            + np.einsum("...ijlp,...pm->...ijlm", r, d.hess, optimize=True)
            + np.einsum("...pli,...pmj->...ijlm", t, d.d3_anti, optimize=True)
            + np.einsum("...qmj,...lqi->...ijlm", np.conj(t), d.d3_mixed, optimize=True)
        )
        if not omit_torsion_product:
            res = res - np.einsum(
                "...pli,...qmj,...pq->...ijlm", t, np.conj(t), d.hess, optimize=True
            )
        return float(np.abs(res).max())
    raise DomainError(f"commutation residual order must be 3 or 4, got {order}")


# ------------------------------------------------------------- functionals

def gradient_norm_sq(grid: TorusGrid, u: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Pointwise |du|_g^2 = g^{i jbar} u_i conj(u_j) for a real scalar."""
    du = grid.holomorphic_gradient(u)
    ginv = inverse_metric(g)
    # raised tensor g^{i jbar} = ginv[..., j, i]
    out = np.einsum("...ji,...i,...j->...", ginv, du, np.conj(du), optimize=True)
    return out.real


def hessian_pencil_extremes(grid: TorusGrid, u: np.ndarray, g: np.ndarray):
    """(min, max) relative eigenvalue of ddbar(u) against g over all nodes,
    i.e. the range of |ddbar u|_g in the signed sense."""
    lam = relative_eigenvalues_only(g, grid.complex_hessian(u))
    return float(lam.min()), float(lam.max())


def cone_band_integrand(
    grid: TorusGrid, u: np.ndarray, g: np.ndarray, i: int, k: int
) -> np.ndarray:
    """Eigenframe density sum_a sigma_i(lambda | a) |c_a|^2 of the gradient
    band, where lambda are the relative eigenvalues of omega_u = g + ddbar(u)
    against g and c are the frame components of du.

    Positive wherever omega_u lies in Gamma_{i+1}; requires pointwise
    Gamma_k membership with 0 <= i <= k - 2.  The corresponding wedge-ratio
    density carries an extra factor i! (n-i-1)! / n!.
    """
    n = grid.n
    if not (0 <= i <= k - 2):
        raise DomainError(f"band index must satisfy 0 <= i <= k-2, got i={i}, k={k}")
    w = g + grid.complex_hessian(u)
    lam, vecs = relative_eigenvalues(g, w, validate=False)
    inside = in_gamma_k(lam, k)
    if not np.all(inside):
        raise DomainError(
            f"omega_u leaves Gamma_{k} at "
            f"{int(np.size(inside) - np.count_nonzero(inside))} node(s)"
        )
    du = grid.holomorphic_gradient(u)
    # frame components of du: with vecs^H g vecs = id the orthonormal frame
    # carries conj(vecs), so c = vecs^H du
    frame = np.einsum("...i,...ia->...a", du, np.conj(vecs), optimize=True)
    sig = sigma_restricted_each(i, lam)
    return np.einsum("...a,...a->...", sig, np.abs(frame) ** 2, optimize=True)
