"""Slow, independent reference implementations used by the test suite.

Everything here is computed from scratch with mpmath arbitrary-precision
arithmetic: ascending series for the modified Bessel functions, the raw
(unsymmetrized) scattering kernel entry, permutation-expansion determinants,
and a set of structural identity checks.  Nothing in this module touches the
double-precision production path, so agreement between the two is a real
cross-check.  Speed is a non-goal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

from .errors import DomainError, PrecisionError
from .geometry import Geometry

#: default number of significant decimal digits carried by reference values
DIGITS = 40

def _k_series_cutoff(dps):
    # The asymptotic K expansion bottoms out at a relative remainder of
    # ~ e^{-2x}, so it only reaches dps digits for x above ~1.2 dps; below
    # that the ascending series runs with enough guard digits to absorb the
    # cancellation against its log term.
    return 1.2 * (dps + 20)


def _tail_eps(dps):
    return mp.mpf(10) ** (-(dps + 5))


@lru_cache(maxsize=None)
def series_bessel_i(n: int, x: float, terms: int | None = None, dps: int = DIGITS):
    """I_n(x) from the ascending series sum_k (x/2)^(n+2k) / (k! (n+k)!).

    All terms are positive, so the series is cancellation-free for any order
    and argument.  With ``terms`` given, exactly that many terms are summed
    and the geometric tail bound is checked against 1e-35; otherwise terms
    are added until the tail is negligible at the working precision.
    """
    if n < 0:
        raise DomainError("order must be non-negative (use I_{-n} = I_n)")
    if x < 0 or not math.isfinite(x):
        raise DomainError(f"need x >= 0, got {x!r}")
    guard = 10 + int(n * 0.1)
    with mp.workdps(dps + guard):
        if x == 0:
            return mp.mpf(1) if n == 0 else mp.mpf(0)
        half = mp.mpf(x) / 2
        h2 = half * half
        term = half**n / mp.factorial(n)
        total = term
        eps = _tail_eps(dps)
        k = 1
        while True:
            term *= h2 / (k * (k + n))
            total += term
            if terms is not None:
                if k + 1 >= terms:
                    break
            elif term < eps * total:
                break
            k += 1
            if k > 10_000_000:
                raise PrecisionError("I series did not converge")
        # bound the dropped tail by a geometric series
        r = h2 / ((k + 1) * (k + 1 + n))
        if r >= 1:
            raise PrecisionError(f"I series truncated before decay: n={n}, x={x}")
        tail = term * r / (1 - r)
        if terms is not None and tail > mp.mpf("1e-35") * total:
            raise PrecisionError(
                f"{terms} terms leave tail {mp.nstr(tail / total, 3)} > 1e-35"
            )
        return +total


def _harmonic(k):
    # psi(k+1) = -euler + H_k, accumulated exactly
    return mp.fsum(mp.mpf(1) / j for j in range(1, k + 1))


def _series_bessel_k(n, x, dps):
    # ascending series with log/digamma terms; cancellation against the log
    # term costs about x/ln(10) digits, absorbed by guard digits
    guard = 15 + int(0.9 * x) + int(n * 0.1)
    with mp.workdps(dps + guard):
        xm = mp.mpf(x)
        half = xm / 2
        q = half * half
        finite = mp.mpf(0)
        for k in range(n):
            finite += (
                mp.factorial(n - k - 1) / mp.factorial(k) * (-q) ** k
            )
        finite *= half ** (-n) / 2
        i_n = series_bessel_i(n, x, dps=dps + guard)
        logterm = (-1) ** (n + 1) * mp.log(half) * i_n
        eps = _tail_eps(dps + int(0.9 * x))
        hk = mp.mpf(0)
        hnk = _harmonic(n)
        term = half**n / (2 * mp.factorial(n))
        psisum = term * (2 * (-mp.euler) + hk + hnk)
        k = 1
        while True:
            term *= q / (k * (n + k))
            hk += mp.mpf(1) / k
            hnk += mp.mpf(1) / (n + k)
            piece = term * (2 * (-mp.euler) + hk + hnk)
            psisum += piece
            if abs(piece) < eps * (abs(psisum) + abs(logterm) + 1):
                break
            k += 1
            if k > 10_000_000:
                raise PrecisionError("K series did not converge")
        psisum *= (-1) ** n
        return +(finite + logterm + psisum)


def _asymptotic_bessel_k(n, x, dps):
    # large-argument expansion; remainder bounded by the first omitted term
    with mp.workdps(dps + 10):
        xm = mp.mpf(x)
        mu = mp.mpf(4 * n * n)
        term = mp.mpf(1)
        total = term
        eps = _tail_eps(dps)
        k = 1
        while True:
            factor = (mu - (2 * k - 1) ** 2) / (8 * k * xm)
            nxt = term * factor
            if abs(nxt) >= abs(term):
                raise PrecisionError(
                    f"asymptotic K series diverged before tail target: n={n}, x={x}"
                )
            term = nxt
            if abs(term) < eps * abs(total):
                break
            total += term
            k += 1
            if k > 10_000:
                raise PrecisionError("asymptotic K series too long")
        return mp.sqrt(mp.pi / (2 * xm)) * mp.e**-xm * total


@lru_cache(maxsize=None)
def series_bessel_k(n: int, x: float, dps: int = DIGITS):
    """K_n(x): ascending series with digamma/log terms for moderate x,
    large-argument expansion (plus exact upward recurrence in the order)
    beyond the series cutoff.
    """
    if n < 0:
        raise DomainError("order must be non-negative (use K_{-n} = K_n)")
    if x <= 0 or not math.isfinite(x):
        raise DomainError(f"need x > 0, got {x!r}")
    if x <= _k_series_cutoff(dps):
        return _series_bessel_k(n, x, dps)
    with mp.workdps(dps + 15):
        k0 = _asymptotic_bessel_k(0, x, dps + 10)
        if n == 0:
            return +k0
        k1 = _asymptotic_bessel_k(1, x, dps + 10)
        xm = mp.mpf(x)
        for j in range(1, n):
            k0, k1 = k1, k0 + 2 * j / xm * k1
        return +k1


def bessel_i_deriv(n: int, x: float, dps: int = DIGITS):
    """I_n'(x) from the neighbor relation, on reference values."""
    if n == 0:
        return series_bessel_i(1, x, dps=dps)
    with mp.workdps(dps + 10):
        return (series_bessel_i(n - 1, x, dps=dps) + series_bessel_i(n + 1, x, dps=dps)) / 2


def bessel_k_deriv(n: int, x: float, dps: int = DIGITS):
    """K_n'(x) (negative) from the neighbor relation, on reference values."""
    if n == 0:
        return -series_bessel_k(1, x, dps=dps)
    with mp.workdps(dps + 10):
        return -(series_bessel_k(n - 1, x, dps=dps) + series_bessel_k(n + 1, x, dps=dps)) / 2


def _ratio_inner(n, x, pol, dps):
    # I_n/K_n for TM, I_n'/K_n' for TE (the latter is negative)
    if pol == "TM":
        return series_bessel_i(n, x, dps=dps) / series_bessel_k(n, x, dps=dps)
    return bessel_i_deriv(n, x, dps=dps) / bessel_k_deriv(n, x, dps=dps)


def _ratio_outer(m, x, pol, dps):
    # K_m/I_m for TM, K_m'/I_m' for TE (the latter is negative)
    if pol == "TM":
        return series_bessel_k(m, x, dps=dps) / series_bessel_i(m, x, dps=dps)
    return bessel_k_deriv(m, x, dps=dps) / bessel_i_deriv(m, x, dps=dps)


def naive_kernel_entry(
    geom: Geometry,
    beta: float,
    n: int,
    p: int,
    pol: str = "TM",
    m_window: int = 30,
    dps: int = DIGITS,
) -> float:
    """Raw scattering-kernel entry by direct high-precision summation.

    This is the unsymmetrized matrix element, alternating sign factor
    (-1)^(n+p) included; the production kernel stores the symmetrized,
    sign-stripped form, and the two are related by a similarity transform
    that leaves det(1 - A) unchanged.
    """
    if pol not in ("TM", "TE"):
        raise DomainError(f"pol must be 'TM' or 'TE', got {pol!r}")
    if beta <= 0:
        raise DomainError("beta must be positive")
    with mp.workdps(dps + 20):
        ab = geom.alpha * beta
        db = geom.delta * beta
        g = _ratio_inner(abs(n), beta, pol, dps)
        total = mp.mpf(0)
        for m in range(-m_window, m_window + 1):
            c = _ratio_outer(abs(m), ab, pol, dps)
            total += (
                c
                * series_bessel_i(abs(n - m), db, dps=dps)
                * series_bessel_i(abs(p - m), db, dps=dps)
            )
        val = (-1) ** (n + p) * g * total
        return float(val)


def naive_logdet(matrix, dps: int = DIGITS) -> float:
    """ln det of a small dense matrix by permutation expansion.

    The caller passes the matrix whose determinant is wanted (for the
    kernel use case that is 1 - K).  Dimension is capped at 8 because the
    expansion has dim! terms.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix must be square")
    dim = a.shape[0]
    if dim > 8:
        raise DomainError("permutation expansion is capped at dim 8")
    with mp.workdps(dps + 10):
        m = [[mp.mpf(a[i, j]) for j in range(dim)] for i in range(dim)]
        det = mp.mpf(0)
        for perm in itertools.permutations(range(dim)):
            sign = _perm_sign(perm)
            prod = mp.mpf(sign)
            for i, j in enumerate(perm):
                prod *= m[i][j]
            det += prod
        if det <= 0:
            raise DomainError("determinant is not positive; no real log")
        return float(mp.log(det))


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    deviations: tuple
    criterion: str
    passed: bool


@dataclass(frozen=True)
class IdentityReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            devs = ", ".join(f"{d:.3e}" for d in c.deviations)
            lines.append(f"[{status}] {c.name}: deviations ({devs}); criterion: {c.criterion}")
        return "\n".join(lines)


def identity_checks(dps: int = DIGITS) -> IdentityReport:
    """Verify the structural Bessel identities the kernel construction rests on.

    Three checks, all on reference values:

    1. inverse-matrix identity: sum_p (-1)^(m-p) I_{m-p}(x) I_{p-n}(x) = delta_{mn};
    2. displaced-product collapse: I_{m-n}(x) I_{m-p}(x) / I_m(x+h) approaches
       I_{m-n-p}(x-h) as x grows at fixed h;
    3. large-order exponential form: I_n(nx) K_n(a n x) / (K_n(nx) I_n(a n x))
       against exp(-2 n (a-1) sqrt(1+x^2)) at a - 1 = 0.01 for n = 20, 40, 80.
    """
    checks = []

    # (1) absolute deviation from delta_{mn}, x <= 2, |m|, |n| <= 4, P = 30
    devs = []
    for x in (0.5, 1.0, 2.0):
        for mm in range(-4, 5):
            for nn in range(-4, 5):
                with mp.workdps(dps + 10):
                    s = mp.mpf(0)
                    for p in range(-30, 31):
                        s += (
                            (-1) ** (mm - p)
                            * series_bessel_i(abs(mm - p), x, dps=dps)
                            * series_bessel_i(abs(p - nn), x, dps=dps)
                        )
                    target = 1 if mm == nn else 0
                    devs.append(abs(float(s - target)))
    dev1 = max(devs)
    checks.append(
        IdentityCheck(
            name="inverse_coupling_matrix",
            deviations=(dev1,),
            criterion="max |sum - delta| <= 1e-10",
            passed=dev1 <= 1e-10,
        )
    )

    # (2) relative error decreasing over x = 20, 40, 80 at h = 2 (m=3, n=1, p=2)
    h = 2.0
    m0, n0, p0 = 3, 1, 2
    rel2 = []
    for x in (20.0, 40.0, 80.0):
        with mp.workdps(dps + 10):
            lhs = (
                series_bessel_i(abs(m0 - n0), x, dps=dps)
                * series_bessel_i(abs(m0 - p0), x, dps=dps)
                / series_bessel_i(m0, x + h, dps=dps)
            )
            rhs = series_bessel_i(abs(m0 - n0 - p0), x - h, dps=dps)
            rel2.append(abs(float(lhs / rhs - 1)))
    checks.append(
        IdentityCheck(
            name="displaced_product_collapse",
            deviations=tuple(rel2),
            criterion="relative error strictly decreasing over x = 20, 40, 80",
            passed=rel2[0] > rel2[1] > rel2[2],
        )
    )

    # (3) deviation of the exact ratio from the large-order exponential,
    #     alpha - 1 = 0.01, x = 1
    alpha = 1.01
    x = 1.0
    hval = math.sqrt(1 + x * x)
    rel3 = []
    for n in (20, 40, 80):
        with mp.workdps(dps + 30):
            beta = n * x
            num = series_bessel_i(n, beta, dps=dps) * series_bessel_k(
                n, alpha * beta, dps=dps
            )
            den = series_bessel_k(n, beta, dps=dps) * series_bessel_i(
                n, alpha * beta, dps=dps
            )
            approx = mp.e ** (-2 * n * (alpha - 1) * hval)
            rel3.append(abs(float(num / den / approx - 1)))
    checks.append(
        IdentityCheck(
            name="uniform_expansion_ratio",
            deviations=tuple(rel3),
            criterion="deviation strictly decreasing over n = 20, 40, 80",
            passed=rel3[0] > rel3[1] > rel3[2],
        )
    )

    return IdentityReport(checks=tuple(checks))
