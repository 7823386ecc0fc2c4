r"""Energy pipelines and closed-form limits.

Exact pipelines (eccentric, concentric, cylinder-plane) follow the same
pattern: at every imaginary frequency build the truncated kernel(s), take
``ln det(1 - K)`` per polarization, and integrate

.. math::
    E = \frac{L}{4\pi a^2} \int_0^\infty d\beta\, \beta\,
        \big[\ln M^{TM}(\beta) + \ln M^{TE}(\beta)\big],

then enlarge the mode window N in steps of 4 until the energy stops
moving (the truncation ladder).  The quasi-concentric pipeline evaluates
the tridiagonal reduction of the same determinant, whose eccentricity
dependence is exactly quadratic.  Closed forms: the proximity
approximation, the large-radius-ratio logarithmic asymptote (with its two
constants computed by quadrature at first use, not hard-coded) and the
electrostatic capacity/force of the same geometry.

Energies are reported both in absolute units (hbar = c = 1, i.e. length
** -1 times the cylinder length) and reduced by L/(4 pi a^2), the unit
used throughout for plotting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from .errors import DomainError
from .geometry import CylPlaneGeometry, Geometry
from .kernels import (
    Truncation,
    build_kernel_concentric,
    build_kernel_concentric_pair,
    build_kernel_cylplane_pair,
    build_kernel_eccentric_pair,
    tridiag_term_arrays,
)
from .linalg import logdet_one_minus
from .quadrature import QuadratureSpec, energy_integral

LADDER_STEP = 4
LADDER_MAX_RUNGS = 60
GAP_FLOOR = 0.02


@dataclass(frozen=True)
class EnergyResult:
    """An interaction energy with its TM/TE split and diagnostics.

    ``value = reduced * L/(4 pi a^2)`` and ``value = tm + te`` hold
    exactly; ``rel_error`` is the combined ladder + quadrature estimate.
    Non-converged results are returned with ``converged`` cleared, never
    raised.
    """

    value: float
    reduced: float
    tm: float
    te: float
    rel_error: float
    truncation_used: Truncation | None
    converged: bool

    @classmethod
    def _from_reduced(cls, red_tm, red_te, scale, rel_error, trunc, converged):
        reduced = red_tm + red_te
        value = reduced * scale
        tm = red_tm * scale
        te = value - tm  # keeps value == tm + te exact in floating point
        return cls(value, reduced, tm, te, rel_error, trunc, converged)


def _reduced_scale(a: float, length: float) -> float:
    return length / (4.0 * math.pi * a * a)


def _start_n(gap: float, n_max: int | None) -> int:
    if n_max is not None:
        return n_max
    return min(max(4, int(math.ceil(3.0 / gap))), 160)


def _check_gap(gap: float, force: bool, what: str):
    if gap <= 0:
        raise DomainError(f"{what}: surfaces touch or intersect (gap <= 0)")
    if gap < GAP_FLOOR and not force:
        raise DomainError(
            f"{what}: gap {gap:.3g} below the proximity floor {GAP_FLOOR}; matrix "
            f"sizes explode there. Pass force_small_gap=True to override."
        )


def _fold_modes(log_terms: np.ndarray) -> float:
    # sum over n in [-N, N] of a |n|-symmetric per-mode quantity
    return float(log_terms[0] + 2.0 * log_terms[1:].sum())


def _ladder(evaluate, n_start: int, rel_tol: float):
    """Run evaluate(N, panels_hint) -> (stop_values, payload, panels) with N
    growing by LADDER_STEP until every stop component stabilizes.  Returns
    the per-component last changes so callers can attribute errors."""
    n = n_start
    hint = 1
    prev = None
    diffs = None
    for _ in range(LADDER_MAX_RUNGS):
        stop, payload, panels = evaluate(n, hint)
        stop = np.atleast_1d(np.asarray(stop, dtype=float))
        # restart the next rung one refinement below the converged panel count
        hint = max(1, panels // 2)
        if prev is not None:
            diffs = np.abs(stop - prev)
            if np.all(diffs <= np.maximum(rel_tol * np.abs(stop), 1e-12)):
                return payload, n, diffs, True
        prev = stop
        n += LADDER_STEP
    if diffs is None:
        diffs = np.full_like(np.atleast_1d(stop), math.inf)
    return payload, n - LADDER_STEP, diffs, False


# ---------------------------------------------------------------------------
# exact eccentric pipeline

def _eccentric_rung(geom, q, m_max):
    def evaluate(n, hint):
        m_used = 0
        mm = None if m_max is None else max(m_max, n)

        def f(beta):
            nonlocal m_used
            ktm, kte = build_kernel_eccentric_pair(geom, beta, Truncation(n, mm))
            m_used = max(m_used, ktm.m_max_used)
            ln_tm = logdet_one_minus(ktm)
            ln_te = logdet_one_minus(kte)
            d_tm, d_te = build_kernel_concentric_pair(geom.alpha, beta, n)
            cc_tm = _fold_modes(np.log1p(-d_tm))
            cc_te = _fold_modes(np.log1p(-d_te))
            return np.array([ln_tm, ln_te, ln_tm - cc_tm, ln_te - cc_te])

        res = energy_integral(f, 1.0 / (2.0 * geom.gap), q, initial_panels=hint)
        return res, m_used

    return evaluate


def exact_with_delta(
    geom: Geometry,
    trunc: Truncation | None = None,
    q: QuadratureSpec | None = None,
    *,
    force_small_gap: bool = False,
):
    """(E, E - E_concentric) from one matched ladder run.

    The eccentric determinant and the concentric reference are evaluated
    with the same mode window and the same quadrature panels, and their
    difference is integrated directly, so the energy difference is far
    more accurate than subtracting two independent runs.  The ladder stops
    when both the energy and the difference have stabilized.
    """
    q = q or QuadratureSpec()
    _check_gap(geom.gap, force_small_gap, "eccentric pipeline")
    rung = _eccentric_rung(geom, q, trunc.m_max if trunc else None)

    def evaluate(n, hint):
        res, m_used = rung(n, hint)
        e_red = res.value[0] + res.value[1]
        de_red = res.value[2] + res.value[3]
        return (e_red, de_red), (res, m_used), res.panels_used

    (res, m_used), n_final, diffs, ladder_ok = _ladder(
        evaluate, _start_n(geom.gap, trunc.n_max if trunc else None), q.rel_tol
    )
    scale = _reduced_scale(geom.a, geom.length)
    trunc_used = Truncation(n_final, m_used or None)
    converged = bool(ladder_ok and res.converged)

    e_norm = abs(res.value[0] + res.value[1])
    rel_e = (float(np.max(res.abs_error_estimate[:2])) + diffs[0]) / max(e_norm, 1e-300)
    energy = EnergyResult._from_reduced(
        res.value[0], res.value[1], scale, rel_e, trunc_used, converged
    )
    de_norm = abs(res.value[2] + res.value[3])
    rel_de = (float(np.max(res.abs_error_estimate[2:])) + diffs[1]) / max(de_norm, 1e-300)
    delta = EnergyResult._from_reduced(
        res.value[2], res.value[3], scale, rel_de, trunc_used, converged
    )
    return energy, delta


def casimir_exact(
    geom: Geometry,
    trunc: Truncation | None = None,
    q: QuadratureSpec | None = None,
    *,
    force_small_gap: bool = False,
) -> EnergyResult:
    """Exact interaction energy of the eccentric configuration."""
    energy, _ = exact_with_delta(geom, trunc, q, force_small_gap=force_small_gap)
    return energy


def delta_e_exact(
    geom: Geometry,
    trunc: Truncation | None = None,
    q: QuadratureSpec | None = None,
    *,
    force_small_gap: bool = False,
) -> EnergyResult:
    """Exact-pipeline energy difference E(eps) - E(0) at matched truncation."""
    _, delta = exact_with_delta(geom, trunc, q, force_small_gap=force_small_gap)
    return delta


# ---------------------------------------------------------------------------
# concentric pipeline

def casimir_concentric(
    alpha: float,
    a: float = 1.0,
    length: float = 1.0,
    n_max: int | None = None,
    q: QuadratureSpec | None = None,
    *,
    force_small_gap: bool = False,
) -> EnergyResult:
    """Interaction energy of concentric shells with radius ratio alpha.

    The determinant is diagonal, so the integrand is a plain mode sum of
    ln(1 - d_n) over both polarizations; the same ladder policy controls
    the mode window.
    """
    if not alpha > 1:
        raise DomainError(f"need alpha > 1, got {alpha}")
    q = q or QuadratureSpec()
    gap = alpha - 1.0
    _check_gap(gap, force_small_gap, "concentric pipeline")

    def evaluate(n, hint):
        def f(beta):
            d_tm, d_te = build_kernel_concentric_pair(alpha, beta, n)
            return np.array(
                [_fold_modes(np.log1p(-d_tm)), _fold_modes(np.log1p(-d_te))]
            )

        res = energy_integral(f, 1.0 / (2.0 * gap), q, initial_panels=hint)
        return res.value.sum(), res, res.panels_used

    res, n_final, diffs, ladder_ok = _ladder(evaluate, _start_n(gap, n_max), q.rel_tol)
    scale = _reduced_scale(a, length)
    quad_err = float(np.max(res.abs_error_estimate))
    e_norm = abs(res.value.sum())
    return EnergyResult._from_reduced(
        res.value[0],
        res.value[1],
        scale,
        (quad_err + float(diffs.max())) / max(e_norm, 1e-300),
        Truncation(n_final),
        bool(ladder_ok and res.converged),
    )


def concentric_mode_breakdown(alpha: float, n_max: int, q: QuadratureSpec | None = None):
    """Reduced-energy contribution of each mode pair (n, pol), n = 0..n_max.

    Returns (tm_terms, te_terms) where entry n integrates ln(1 - d_n) with
    the |n|-degeneracy factor included (2 for n >= 1).  Used to audit which
    modes dominate at large radius ratio.
    """
    if not alpha > 1:
        raise DomainError(f"need alpha > 1, got {alpha}")
    q = q or QuadratureSpec()

    def f(beta):
        d_tm, d_te = build_kernel_concentric_pair(alpha, beta, n_max)
        weight = np.full(n_max + 1, 2.0)
        weight[0] = 1.0
        return np.concatenate([weight * np.log1p(-d_tm), weight * np.log1p(-d_te)])

    res = energy_integral(f, 1.0 / (2.0 * (alpha - 1.0)), q)
    return res.value[: n_max + 1], res.value[n_max + 1 :]


# ---------------------------------------------------------------------------
# quasi-concentric (tridiagonal) pipeline

def delta_e_tridiagonal(
    geom: Geometry,
    n_max: int | None = None,
    q: QuadratureSpec | None = None,
) -> EnergyResult:
    r"""Energy difference E - E_concentric from the tridiagonal reduction.

    Valid for small reduced eccentricity; the result is exactly
    proportional to eps^2 by construction:

    .. math::
        \Delta E = -\frac{L\,\epsilon^2}{4\pi a^4} \sum_n \int_0^\infty
        d\beta\, \beta^3\, \frac{1}{1 - d_n}\Big[{\cal D}_n
        + \frac{{\cal N}_n}{1 - d_{n+1}}\Big]

    per polarization, with the terms of
    :func:`~casimir_cylinders.kernels.tridiag_terms` and the n-sum running
    over the full symmetric window.
    """
    if not geom.alpha > 1:
        raise DomainError("need alpha > 1")
    if geom.delta > 0.1:
        warnings.warn(
            f"delta = {geom.delta:.3g} > 0.1: the tridiagonal reduction is only "
            f"quadratic-order accurate in the eccentricity",
            stacklevel=2,
        )
    q = q or QuadratureSpec()
    gap = geom.alpha - 1.0
    delta2 = geom.delta * geom.delta

    def window_sum(geom_, beta, n, pol):
        d, dqc, nqc = tridiag_term_arrays(geom_, beta, n, pol)
        inv = 1.0 / (1.0 - d)  # orders 0..n+1
        diag = dqc * inv[: n + 1]
        nd = nqc * inv[: n + 1] * inv[1 : n + 2]
        # fold n in [-N, N]: diagonal is |n|-symmetric; off-diagonal pairs
        # (n, n+1) reflect onto (-n-1, -n)
        return (
            diag[0]
            + 2.0 * diag[1:].sum()
            + 2.0 * nd.sum()
            - nd[n]
        )

    def evaluate(n, hint):
        def f(beta):
            b2 = beta * beta
            return np.array(
                [
                    -delta2 * b2 * window_sum(geom, beta, n, "TM"),
                    -delta2 * b2 * window_sum(geom, beta, n, "TE"),
                ]
            )

        res = energy_integral(f, 1.0 / (2.0 * gap), q, initial_panels=hint)
        return res.value.sum(), res, res.panels_used

    res, n_final, diffs, ladder_ok = _ladder(evaluate, _start_n(gap, n_max), q.rel_tol)
    scale = _reduced_scale(geom.a, geom.length)
    quad_err = float(np.max(res.abs_error_estimate))
    e_norm = abs(res.value.sum())
    return EnergyResult._from_reduced(
        res.value[0],
        res.value[1],
        scale,
        (quad_err + float(diffs.max())) / max(e_norm, 1e-300),
        Truncation(n_final),
        bool(ladder_ok and res.converged),
    )


# ---------------------------------------------------------------------------
# cylinder-plane pipeline

def casimir_cylplane(
    geom: CylPlaneGeometry,
    trunc: Truncation | None = None,
    q: QuadratureSpec | None = None,
    *,
    force_small_gap: bool = False,
) -> EnergyResult:
    """Interaction energy of a cylinder facing a conducting plane."""
    q = q or QuadratureSpec()
    _check_gap(geom.gap, force_small_gap, "cylinder-plane pipeline")

    def evaluate(n, hint):
        def f(beta):
            ktm, kte = build_kernel_cylplane_pair(geom, beta, Truncation(n))
            return np.array([logdet_one_minus(ktm), logdet_one_minus(kte)])

        res = energy_integral(f, 1.0 / (2.0 * geom.gap), q, initial_panels=hint)
        return res.value.sum(), res, res.panels_used

    res, n_final, diffs, ladder_ok = _ladder(
        evaluate, _start_n(geom.gap, trunc.n_max if trunc else None), q.rel_tol
    )
    scale = _reduced_scale(geom.a, geom.length)
    quad_err = float(np.max(res.abs_error_estimate))
    e_norm = abs(res.value.sum())
    return EnergyResult._from_reduced(
        res.value[0],
        res.value[1],
        scale,
        (quad_err + float(diffs.max())) / max(e_norm, 1e-300),
        Truncation(n_final),
        bool(ladder_ok and res.converged),
    )


# ---------------------------------------------------------------------------
# closed forms

@dataclass(frozen=True)
class PfaForms:
    """Proximity-approximation closed forms for quasi-concentric shells.

    Per-polarization and electromagnetic (TM + TE) concentric energies,
    the eccentricity-induced energy differences, and the attractive force
    -d(dE_em)/d(eps); each polarization carries exactly half of the
    electromagnetic value.
    """

    e_cc_per_pol: float
    e_cc_em: float
    de_per_pol: float
    de_em: float
    f_pfa: float


def pfa_closed_forms(geom: Geometry) -> PfaForms:
    """Evaluate the five proximity-limit closed forms for this geometry."""
    a, eps, length = geom.a, geom.eps, geom.length
    am1 = geom.alpha - 1.0
    pi3 = math.pi**3
    e_cc_per_pol = -pi3 * length / (720.0 * a * a * am1**3)
    de_per_pol = -pi3 * length * eps * eps / (240.0 * a**4 * am1**5)
    f_pfa = pi3 * eps * length / (60.0 * a**4 * am1**5)
    return PfaForms(
        e_cc_per_pol=e_cc_per_pol,
        e_cc_em=2.0 * e_cc_per_pol,
        de_per_pol=de_per_pol,
        de_em=2.0 * de_per_pol,
        f_pfa=f_pfa,
    )


@dataclass(frozen=True)
class AsymptoticConstants:
    r"""The two quadrature constants of the large-radius-ratio limit.

    c1 = :math:`\int_0^\infty x K_0(x)/I_0(x)\,dx` (2 c1 is close to 1.26)
    and c2 = :math:`\int_0^\infty x^3 [K_0/I_0 + K_1/I_1]\,dx` (close to
    3.33).  Computed once by the same quadrature engine as the energies.
    """

    c1: float
    c2: float

    @classmethod
    def compute(cls, q: QuadratureSpec | None = None) -> "AsymptoticConstants":
        q = q or QuadratureSpec(rel_tol=1e-10)

        def ratio0(x):
            return _sp.k0e(x) / _sp.i0e(x) * math.exp(-2.0 * x)

        def ratio1(x):
            return _sp.k1e(x) / _sp.i1e(x) * math.exp(-2.0 * x)

        c1 = energy_integral(ratio0, 0.5, q).value
        c2 = energy_integral(lambda x: x * x * (ratio0(x) + ratio1(x)), 0.5, q).value
        return cls(c1=float(c1), c2=float(c2))


@lru_cache(maxsize=1)
def asymptotic_constants() -> AsymptoticConstants:
    """Cached default-precision constants; computed on first use."""
    return AsymptoticConstants.compute()


def large_alpha_asymptote(geom: Geometry, c: AsymptoticConstants | None = None) -> float:
    r"""Logarithmic-decay energy for a thin wire in a wide shell.

    :math:`E = -\frac{L}{8\pi b^2 \ln\alpha}\,(2 c_1 + c_2\,\epsilon^2/b^2)`;
    at eps = 0 only the concentric term survives.  Derived for ln(alpha)
    much larger than one, so a warning is issued below alpha = 10.
    """
    if geom.alpha < 10.0:
        warnings.warn(
            f"alpha = {geom.alpha:.3g} < 10: the logarithmic asymptote is only "
            f"reliable for very wide shells",
            stacklevel=2,
        )
    c = c or asymptotic_constants()
    b, eps, length = geom.b, geom.eps, geom.length
    return (
        -length
        / (8.0 * math.pi * b * b * math.log(geom.alpha))
        * (2.0 * c.c1 + c.c2 * eps * eps / (b * b))
    )


def delta_e_asymptote(geom: Geometry, c: AsymptoticConstants | None = None) -> float:
    """Eccentricity part of :func:`large_alpha_asymptote` (its eps^2 term)."""
    if geom.eps == 0.0:
        return 0.0
    c = c or asymptotic_constants()
    b, eps, length = geom.b, geom.eps, geom.length
    return -length * c.c2 * eps * eps / (8.0 * math.pi * b**4 * math.log(geom.alpha))


@dataclass(frozen=True)
class ElectrostaticResult:
    capacity: float
    force: float


def electrostatics(geom: Geometry, voltage: float = 1.0, eps0: float = 1.0) -> ElectrostaticResult:
    """Capacity of the eccentric pair and the force at fixed voltage.

    With Y = (a^2 + b^2 - eps^2)/(2ab):

    * C = 2 pi eps0 L / ln(Y + sqrt(Y^2 - 1)),
    * F = (eps/ab) pi eps0 V^2 L / (sqrt(Y^2 - 1) ln^2(Y + sqrt(Y^2 - 1))),

    reducing to the coaxial capacitor at eps = 0.  The force vanishes
    linearly with the eccentricity and points away from the centered
    configuration.
    """
    if voltage <= 0 or eps0 <= 0:
        raise DomainError("voltage and eps0 must be positive")
    a, b, eps, length = geom.a, geom.b, geom.eps, geom.length
    y = (a * a + b * b - eps * eps) / (2.0 * a * b)
    if y <= 1.0:
        raise DomainError(f"touching or overlapping cylinders: Y = {y} <= 1")
    root = math.sqrt(y * y - 1.0)
    log_term = math.log(y + root)
    capacity = 2.0 * math.pi * eps0 * length / log_term
    force = (
        (eps / (a * b))
        * math.pi
        * eps0
        * voltage
        * voltage
        * length
        / (root * log_term * log_term)
    )
    return ElectrostaticResult(capacity=capacity, force=force)
