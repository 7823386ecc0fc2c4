r"""Truncated scattering kernels and classical mode matrices.

The exact interaction energy is an integral over imaginary frequency of
``ln det(1 - A)`` where A couples the angular modes of the two surfaces.
For eccentric cylinders of radius ratio :math:`\alpha` and reduced
eccentricity :math:`\delta`, the kernel at dimensionless frequency
:math:`\beta` reads

.. math::
    A_{np} = g_n(\beta) \sum_m c_m(\alpha\beta)\,
             I_{n-m}(\delta\beta)\, I_{p-m}(\delta\beta),

with ``g_n = I_n/K_n`` and ``c_m = K_m/I_m`` for TM modes and the primed
(derivative) ratios for TE modes; sign conventions are absorbed so that
``g`` and ``c`` are positive for both polarizations.  This module builds
the determinant-equivalent symmetrized form

.. math::
    \tilde A_{np} = \sqrt{g_n}\, S_{np} \sqrt{g_p}
                  = (G G^T)_{np},\qquad
    G_{nm} = \exp\!\big[\tfrac12 \ln g_n + \tfrac12 \ln c_m
             + \ln I_{n-m}(\delta\beta)\big],

whose entries are all finite, non-negative and O(1): the huge individual
factors cancel inside the exponent, which is assembled in log scale.  The
alternating sign factor carried by the raw matrix is dropped, being a
similarity transform that leaves the determinant unchanged.

Also here: the concentric diagonal, the cylinder-plane kernel, the
tridiagonal quasi-concentric terms, and the real-frequency mode matrices
whose determinant zeros are the classical eigenvalues of the annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import log_ratio_seq, mod_bessel_seq, ord_bessel_seq
from .errors import DomainError, TruncationError
from .geometry import CylPlaneGeometry, Geometry

_LN2 = math.log(2.0)
_TAIL_RTOL = 1e-16
_M_MAX_CAP = 1 << 17


def _check_pol(pol):
    if pol not in ("TM", "TE"):
        raise DomainError(f"pol must be 'TM' or 'TE', got {pol!r}")


def _check_beta(beta):
    if not (isinstance(beta, (int, float)) and math.isfinite(beta)) or beta <= 0:
        raise DomainError(f"need finite beta > 0, got {beta!r}")


@dataclass(frozen=True)
class Truncation:
    """Index windows of the truncated kernel.

    ``n_max`` is the half-width N of the mode window n in [-N, N] (matrix
    dimension 2N + 1).  ``m_max`` bounds the internal m-sum; None lets the
    builder choose it adaptively (recommended).
    """

    n_max: int
    m_max: int | None = None

    def __post_init__(self):
        if self.n_max < 1:
            raise DomainError(f"need n_max >= 1, got {self.n_max}")
        if self.m_max is not None and self.m_max < self.n_max:
            raise DomainError(
                f"need m_max >= n_max, got m_max={self.m_max} < n_max={self.n_max}"
            )


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Symmetrized scattering kernel at one imaginary frequency.

    ``entries`` is the dense (2N+1) x (2N+1) array indexed by mode numbers
    n, p in [-N, N] with offset -N; all entries are finite and >= 0 and the
    matrix is symmetric positive semidefinite by construction.
    """

    beta: float
    pol: str
    n_half: int
    entries: np.ndarray
    m_max_used: int
    m_converged: bool

    @property
    def dim(self) -> int:
        return 2 * self.n_half + 1

    def entry(self, n: int, p: int) -> float:
        return float(self.entries[n + self.n_half, p + self.n_half])


def default_m_max(n_max: int, delta_beta: float) -> int:
    """Starting m-window: couplings die superexponentially past ~delta*beta*e."""
    return n_max + int(math.ceil(delta_beta * math.e)) + 8


def _gram_factor(geom, beta, n_half, m_half, pol):
    # G[n, m] = exp(lg_n/2 + lc_m/2 + ln I_{n-m}(delta*beta))
    seq_in = mod_bessel_seq(beta, n_half)
    seq_out = mod_bessel_seq(geom.alpha * beta, m_half)
    seq_cpl = mod_bessel_seq(geom.delta * beta, n_half + m_half)
    lg = log_ratio_seq(seq_in, pol)
    lc = -log_ratio_seq(seq_out, pol)
    li = seq_cpl.log_i
    n = np.arange(-n_half, n_half + 1)
    m = np.arange(-m_half, m_half + 1)
    expo = (
        0.5 * lg[np.abs(n)][:, None]
        + 0.5 * lc[np.abs(m)][None, :]
        + li[np.abs(n[:, None] - m[None, :])]
    )
    return np.exp(expo)


def _assemble(G):
    a = G @ G.T
    a = 0.5 * (a + a.T)
    # worst ratio of the outermost retained m-terms to the accumulated sum
    tail = np.outer(G[:, 0], G[:, 0]) + np.outer(G[:, -1], G[:, -1])
    mask = a > 1e-300
    if mask.any():
        ratios = np.where(mask, tail / np.where(mask, a, 1.0), 0.0)
        worst = np.unravel_index(np.argmax(ratios), ratios.shape)
        return a, float(ratios[worst]), worst
    return a, 0.0, (0, 0)


def _diagonal_kernel(geom, beta, n_half, pol):
    d = build_kernel_concentric(geom.alpha, beta, n_half, pol)
    n = np.arange(-n_half, n_half + 1)
    return np.diag(d[np.abs(n)])


def build_kernel_eccentric(
    geom: Geometry, beta: float, trunc: Truncation, pol: str = "TM"
) -> KernelMatrix:
    """Symmetrized eccentric-cylinder kernel at dimensionless frequency beta.

    With an explicit ``trunc.m_max`` the m-sum is evaluated once and a
    :class:`TruncationError` (carrying the worst (n, p)) is raised if its
    outermost term still matters at 1e-16 relative.  With ``m_max=None``
    the window starts at :func:`default_m_max` and doubles until the tail
    criterion holds.
    """
    _check_pol(pol)
    _check_beta(beta)
    if geom.gap <= 0:
        raise DomainError("geometry has alpha - 1 <= delta (touching shells)")
    n_half = trunc.n_max

    if geom.delta == 0.0:
        # couplings collapse to the identity: the kernel is diagonal
        entries = _diagonal_kernel(geom, beta, n_half, pol)
        return KernelMatrix(beta, pol, n_half, entries, n_half, True)

    auto = trunc.m_max is None
    m_half = default_m_max(n_half, geom.delta * beta) if auto else trunc.m_max
    while True:
        G = _gram_factor(geom, beta, n_half, m_half, pol)
        entries, worst_ratio, worst = _assemble(G)
        if worst_ratio <= _TAIL_RTOL:
            return KernelMatrix(beta, pol, n_half, entries, m_half, True)
        if not auto:
            n_bad = worst[0] - n_half
            p_bad = worst[1] - n_half
            raise TruncationError(
                f"m-sum not converged at m_max={m_half}: last term is "
                f"{worst_ratio:.2e} of entry ({n_bad}, {p_bad})",
                n=n_bad,
                p=p_bad,
            )
        if 2 * m_half > _M_MAX_CAP:
            n_bad = worst[0] - n_half
            p_bad = worst[1] - n_half
            raise TruncationError(
                f"m-sum still unconverged at the m_max cap {_M_MAX_CAP}",
                n=n_bad,
                p=p_bad,
            )
        m_half *= 2


def build_kernel_eccentric_pair(geom: Geometry, beta: float, trunc: Truncation):
    """(TM, TE) kernels at one beta; cheaper than two independent builds
    because the Bessel sequences are shared between polarizations."""
    _check_beta(beta)
    if geom.gap <= 0:
        raise DomainError("geometry has alpha - 1 <= delta (touching shells)")
    n_half = trunc.n_max
    if geom.delta == 0.0:
        return tuple(
            KernelMatrix(beta, pol, n_half, _diagonal_kernel(geom, beta, n_half, pol),
                         n_half, True)
            for pol in ("TM", "TE")
        )
    auto = trunc.m_max is None
    m_half = default_m_max(n_half, geom.delta * beta) if auto else trunc.m_max
    while True:
        seq_in = mod_bessel_seq(beta, n_half)
        seq_out = mod_bessel_seq(geom.alpha * beta, m_half)
        seq_cpl = mod_bessel_seq(geom.delta * beta, n_half + m_half)
        n = np.arange(-n_half, n_half + 1)
        m = np.arange(-m_half, m_half + 1)
        li_block = seq_cpl.log_i[np.abs(n[:, None] - m[None, :])]
        out = []
        worst_ratio = 0.0
        worst = (0, 0)
        for pol in ("TM", "TE"):
            lg = log_ratio_seq(seq_in, pol)
            lc = -log_ratio_seq(seq_out, pol)
            G = np.exp(
                0.5 * lg[np.abs(n)][:, None] + 0.5 * lc[np.abs(m)][None, :] + li_block
            )
            entries, ratio, pos = _assemble(G)
            out.append(entries)
            if ratio > worst_ratio:
                worst_ratio, worst = ratio, pos
        if worst_ratio <= _TAIL_RTOL:
            return tuple(
                KernelMatrix(beta, pol, n_half, e, m_half, True)
                for pol, e in zip(("TM", "TE"), out)
            )
        if not auto or 2 * m_half > _M_MAX_CAP:
            raise TruncationError(
                f"m-sum not converged at m_max={m_half}",
                n=worst[0] - n_half,
                p=worst[1] - n_half,
            )
        m_half *= 2


def build_kernel_concentric(alpha: float, beta: float, n_max: int, pol: str = "TM"):
    """Concentric diagonal d_n = g_n(beta)/g_n(alpha*beta) for n = 0..n_max.

    d_n = I_n(b) K_n(ab) / (I_n(ab) K_n(b)) for TM, the primed analogue for
    TE; every d_n lies strictly between 0 and 1.
    """
    _check_pol(pol)
    _check_beta(beta)
    if not alpha > 1:
        raise DomainError(f"need alpha > 1, got {alpha}")
    seq_in = mod_bessel_seq(beta, max(n_max, 1))
    seq_out = mod_bessel_seq(alpha * beta, max(n_max, 1))
    logd = log_ratio_seq(seq_in, pol) - log_ratio_seq(seq_out, pol)
    return np.exp(logd[: n_max + 1])


def build_kernel_concentric_pair(alpha: float, beta: float, n_max: int):
    """(TM, TE) concentric diagonals sharing the Bessel sequences."""
    _check_beta(beta)
    if not alpha > 1:
        raise DomainError(f"need alpha > 1, got {alpha}")
    seq_in = mod_bessel_seq(beta, max(n_max, 1))
    seq_out = mod_bessel_seq(alpha * beta, max(n_max, 1))
    out = []
    for pol in ("TM", "TE"):
        logd = log_ratio_seq(seq_in, pol) - log_ratio_seq(seq_out, pol)
        out.append(np.exp(logd[: n_max + 1]))
    return tuple(out)


def build_kernel_cylplane(
    geom: CylPlaneGeometry, beta: float, trunc: Truncation, pol: str = "TM"
) -> KernelMatrix:
    """Symmetrized cylinder-plane kernel at dimensionless frequency beta.

    Entry (n, p) is sqrt(g_n g_p) K_{n+p}(2 beta h/a); the K factor already
    couples all modes, so there is no internal m-sum to truncate.
    """
    _check_pol(pol)
    _check_beta(beta)
    n_half = trunc.n_max
    seq_in = mod_bessel_seq(beta, n_half)
    seq_k = mod_bessel_seq(2.0 * beta * geom.h / geom.a, max(2 * n_half, 1))
    lg = log_ratio_seq(seq_in, pol)
    lk = seq_k.log_k
    n = np.arange(-n_half, n_half + 1)
    expo = 0.5 * lg[np.abs(n)][:, None] + 0.5 * lg[np.abs(n)][None, :] + lk[
        np.abs(n[:, None] + n[None, :])
    ]
    return KernelMatrix(beta, pol, n_half, np.exp(expo), 0, True)


def build_kernel_cylplane_pair(geom: CylPlaneGeometry, beta: float, trunc: Truncation):
    """(TM, TE) cylinder-plane kernels sharing the Bessel sequences."""
    _check_beta(beta)
    n_half = trunc.n_max
    seq_in = mod_bessel_seq(beta, n_half)
    seq_k = mod_bessel_seq(2.0 * beta * geom.h / geom.a, max(2 * n_half, 1))
    lk = seq_k.log_k
    n = np.arange(-n_half, n_half + 1)
    kblock = lk[np.abs(n[:, None] + n[None, :])]
    out = []
    for pol in ("TM", "TE"):
        lg = log_ratio_seq(seq_in, pol)
        expo = 0.5 * lg[np.abs(n)][:, None] + 0.5 * lg[np.abs(n)][None, :] + kblock
        out.append(KernelMatrix(beta, pol, n_half, np.exp(expo), 0, True))
    return tuple(out)


def tridiag_terms(geom: Geometry, beta: float, n: int, pol: str = "TM"):
    """Quasi-concentric tridiagonal pieces (Dcc_n, Dqc_n, Nqc_n) at one n.

    In terms of the positive ratios g (inner surface) and c (outer
    surface):

    * Dcc_n = g_n c_n, the concentric diagonal;
    * Dqc_n = Dcc_n/2 + g_n (c_{n-1} + c_{n+1})/4, the eccentricity-induced
      diagonal shift per unit (delta*beta)^2;
    * Nqc_n = g_n g_{n+1} (c_n + c_{n+1})^2 / 4, the off-diagonal square.

    Negative n maps by |n| symmetry of g and c; all three are positive and
    carry no delta dependence (the quadratic eccentricity factor is
    explicit in the energy formula).
    """
    _check_pol(pol)
    _check_beta(beta)
    if not geom.alpha > 1:
        raise DomainError("need alpha > 1")
    na, nm1, np1 = abs(n), abs(n - 1), abs(n + 1)
    top = max(na, nm1, np1, 1)
    lg = log_ratio_seq(mod_bessel_seq(beta, top), pol)
    lc = -log_ratio_seq(mod_bessel_seq(geom.alpha * beta, top), pol)
    dcc = math.exp(lg[na] + lc[na])
    dqc = 0.5 * dcc + math.exp(lg[na] + np.logaddexp(lc[nm1], lc[np1]) - 2.0 * _LN2)
    nqc = math.exp(lg[na] + lg[np1] + 2.0 * np.logaddexp(lc[na], lc[np1]) - 2.0 * _LN2)
    return dcc, dqc, nqc


def tridiag_term_arrays(geom: Geometry, beta: float, n_max: int, pol: str = "TM"):
    """Vectorized (d, dqc, nqc) for n = 0..n_max (d runs to n_max + 1).

    Same quantities as :func:`tridiag_terms`, computed once per beta for a
    whole mode window; used by the quasi-concentric energy pipeline.
    """
    _check_pol(pol)
    _check_beta(beta)
    top = n_max + 1
    lg = log_ratio_seq(mod_bessel_seq(beta, top), pol)
    lc = -log_ratio_seq(mod_bessel_seq(geom.alpha * beta, top), pol)
    d = np.exp(lg + lc)  # orders 0..n_max+1
    n = np.arange(0, n_max + 1)
    nm1 = np.abs(n - 1)
    dqc = 0.5 * d[: n_max + 1] + np.exp(
        lg[n] + np.logaddexp(lc[nm1], lc[n + 1]) - 2.0 * _LN2
    )
    nqc = np.exp(lg[n] + lg[n + 1] + 2.0 * np.logaddexp(lc[n], lc[n + 1]) - 2.0 * _LN2)
    return d, dqc, nqc


def _signed_orders(vals, orders):
    # C_{-n} = (-1)^n C_n for J and Y
    out = vals[np.abs(orders)]
    return np.where(orders < 0, np.where(np.abs(orders) % 2 == 1, -out, out), out)


def _q_parts(lam, geom, trunc, pol):
    nh = trunc.n_max
    orders = np.arange(-nh, nh + 1)

    def radial(x):
        j, y = ord_bessel_seq(x, nh + 1)
        if pol == "TM":
            return _signed_orders(j[: nh + 1], orders), _signed_orders(y[: nh + 1], orders)
        # derivatives: C_0' = -C_1, C_n' = (C_{n-1} - C_{n+1})/2
        dj = np.empty(nh + 1)
        dy = np.empty(nh + 1)
        dj[0], dy[0] = -j[1], -y[1]
        k = np.arange(1, nh + 1)
        dj[1:] = 0.5 * (j[k - 1] - j[k + 1])
        dy[1:] = 0.5 * (y[k - 1] - y[k + 1])
        return _signed_orders(dj, orders), _signed_orders(dy, orders)

    ja, ya = radial(lam * geom.a)
    jb, yb = radial(lam * geom.b)
    if geom.eps == 0.0:
        cpl_vals = np.zeros(2 * nh + 1)
        cpl_vals[0] = 1.0
    else:
        cpl_vals, _ = ord_bessel_seq(lam * geom.eps, 2 * nh)
    diff = orders[None, :] - orders[:, None]
    cpl = _signed_orders(cpl_vals, diff)  # J_{n-m}, rows m, cols n
    cross = ja[None, :] * yb[:, None] - jb[:, None] * ya[None, :]
    return cross, cpl


def q_matrix(lam: float, geom: Geometry, trunc: Truncation, pol: str = "TM"):
    """Unrescaled classical mode matrix Q at real frequency parameter lam.

    Q_{mn} = [R_n(lam a) S_m(lam b) - R_m(lam b) S_n(lam a)] J_{n-m}(lam eps)
    with (R, S) = (J, Y) for TM and their derivatives for TE; det Q = 0
    picks out the annulus eigenvalues.  Raw entries can span huge ranges;
    use :func:`q_matrix_det` for root location.
    """
    _check_pol(pol)
    if not lam > 0:
        raise DomainError(f"need lam > 0, got {lam!r}")
    cross, cpl = _q_parts(lam, geom, trunc, pol)
    return cross * cpl


def q_matrix_det(lam: float, geom: Geometry, trunc: Truncation, pol: str = "TM") -> float:
    """Determinant of the rescaled truncated mode matrix.

    Rows and columns are divided by the square root of the magnitude of
    their diagonal cross-products, so the diagonal has near-unit magnitude
    and the determinant stays in floating range; only its sign changes in
    lam are meaningful, and they bracket the classical eigenvalues.  A
    diagonal cross-product that is exactly zero IS an eigenvalue hit and
    returns 0.
    """
    _check_pol(pol)
    if not lam > 0:
        raise DomainError(f"need lam > 0, got {lam!r}")
    cross, cpl = _q_parts(lam, geom, trunc, pol)
    diag = np.abs(np.diag(cross))
    if np.any(diag == 0.0):
        return 0.0
    scale = 1.0 / np.sqrt(diag)
    sign, logabs = np.linalg.slogdet(cross * cpl * scale[:, None] * scale[None, :])
    if sign == 0.0:
        return 0.0
    return float(sign * math.exp(min(logabs, 300.0)))
