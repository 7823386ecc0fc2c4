r"""Overflow-safe Bessel machinery.

The scattering kernels multiply factors like :math:`I_n(\beta)/K_n(\beta)`
and :math:`K_m(\alpha\beta)/I_m(\alpha\beta)` whose individual magnitudes
span thousands of orders of magnitude once the matrix order grows, even
though every finished kernel entry is O(1).  Raw doubles overflow near
order ~60 at moderate arguments, so this module keeps every modified
Bessel value in log scale and only ever exponentiates finished
combinations.

Contents:

* :class:`LogScaled` -- a real number stored as (log magnitude, sign);
* :func:`mod_bessel_seq` -- log-scaled sequences of :math:`I_n, K_n` and
  their derivatives up to a maximum order (upward recurrence for K,
  downward ratio recurrence for I normalized at order zero);
* :func:`bessel_ratio_g` -- the polarization-dependent surface ratio;
* :func:`ord_bessel_seq` -- plain double-precision :math:`J_n, Y_n`
  sequences for the classical mode-matrix checks.

Seeds of order 0 and 1 come from the scaled cephes routines in
``scipy.special``; everything above them is produced by the recurrences
here and is validated against the independent series oracle in
:mod:`casimir_cylinders.reference`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import CapacityError, DomainError

#: |log magnitude| cap under which LogScaled products are guaranteed safe
LOG_CAP = 1.0e6

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LogScaled:
    """The real number ``sign * exp(log_magnitude)``.

    Multiplication and division add/subtract log magnitudes and multiply
    signs, so products of enormously large and small factors never leave
    the representable range as long as |log_magnitude| stays below
    :data:`LOG_CAP`.
    """

    log_magnitude: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise DomainError(f"sign must be -1 or +1, got {self.sign!r}")
        if not math.isfinite(self.log_magnitude):
            raise DomainError("log_magnitude must be finite")

    @classmethod
    def from_float(cls, value: float) -> "LogScaled":
        if value == 0.0 or not math.isfinite(value):
            raise DomainError(f"cannot log-scale {value!r}")
        return cls(math.log(abs(value)), 1 if value > 0 else -1)

    def to_float(self) -> float:
        """May underflow to 0.0 or overflow to +-inf; the log form is exact."""
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "LogScaled") -> "LogScaled":
        return LogScaled(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    def __truediv__(self, other: "LogScaled") -> "LogScaled":
        return LogScaled(self.log_magnitude - other.log_magnitude, self.sign * other.sign)


@dataclass(frozen=True, eq=False)
class BesselSeq:
    """Log-scaled modified Bessel sequences at a fixed argument ``x``.

    Arrays cover orders 0..n_max.  Signs are fixed: ``I_n, K_n, I_n' > 0``
    and ``K_n' < 0`` for x > 0, so only log magnitudes are stored:

    * ``log_i[n]``  = ln I_n(x)
    * ``log_k[n]``  = ln K_n(x)
    * ``log_di[n]`` = ln I_n'(x)
    * ``log_dk[n]`` = ln |K_n'(x)|   (the value itself is negative)
    """

    x: float
    n_max: int
    log_i: np.ndarray
    log_k: np.ndarray
    log_di: np.ndarray
    log_dk: np.ndarray

    def i(self, n: int) -> LogScaled:
        return LogScaled(float(self.log_i[abs(n)]), 1)

    def k(self, n: int) -> LogScaled:
        return LogScaled(float(self.log_k[abs(n)]), 1)

    def i_deriv(self, n: int) -> LogScaled:
        return LogScaled(float(self.log_di[abs(n)]), 1)

    def k_deriv(self, n: int) -> LogScaled:
        return LogScaled(float(self.log_dk[abs(n)]), -1)


def _debye_exponent(nu: float, x: float) -> float:
    # eta with I_nu(x) ~ e^eta, K_nu(x) ~ e^-eta up to algebraic factors
    s = math.hypot(nu, x)
    if nu == 0.0:
        return x
    return s + nu * math.log(x / (nu + s))


def _miller_start(n_top: int, x: float) -> int:
    # classic margin, then widen until the contaminating-solution ratio
    # exp(2(eta(M+1) - eta(n_top))) is below ~1e-17; matters when x >> n_top
    m = n_top + int(math.ceil(10.0 + 2.0 * math.sqrt(n_top * x)))
    eta_top = _debye_exponent(n_top, x)
    while eta_top - _debye_exponent(m + 1, x) < 20.0:
        m += max(8, m // 8)
        if m > 100_000_000:
            raise CapacityError("cannot find a safe downward-recurrence start")
    return m


def mod_bessel_seq(x: float, n_max: int) -> BesselSeq:
    """Log-scaled I_n, K_n and derivatives for orders 0..n_max at x > 0.

    K grows with the order, so it is generated by the stable upward
    recurrence from the order-0/1 seeds.  I decays with the order and is
    generated downward: the ratio recurrence v_n = 1/(2n/x + v_{n+1})
    started well above ``n_max`` converges to I_n/I_{n-1}, and the
    sequence is anchored at the independently computed I_0.  Derivatives
    come from the exact neighbor relations, never finite differences.
    """
    if not (isinstance(x, (int, float)) and math.isfinite(x)) or x <= 0:
        raise DomainError(f"need finite x > 0, got {x!r}")
    if n_max < 1:
        raise DomainError(f"need n_max >= 1, got {n_max}")
    x = float(x)
    n_top = n_max + 1  # derivatives at n_max need order n_max + 1

    # K upward, entirely in log space: K_{n+1} = (2n/x) K_n + K_{n-1}
    log_k = np.empty(n_top + 1)
    log_k[0] = math.log(_sp.k0e(x)) - x
    log_k[1] = math.log(_sp.k1e(x)) - x
    for n in range(1, n_top):
        step = 2.0 * n / x + math.exp(log_k[n - 1] - log_k[n])
        log_k[n + 1] = log_k[n] + math.log(step)

    # I downward ratios v_n ~ I_n/I_{n-1}, anchored at I_0
    start = _miller_start(n_top, x)
    v = 0.0
    ratios = np.empty(n_top + 1)  # ratios[n] = I_n/I_{n-1}, index 1..n_top
    for n in range(start, 0, -1):
        v = 1.0 / (2.0 * n / x + v)
        if n <= n_top:
            ratios[n] = v
    log_i = np.empty(n_top + 1)
    log_i[0] = x + math.log(_sp.i0e(x))
    log_i[1:] = log_i[0] + np.cumsum(np.log(ratios[1:]))

    # neighbor relations: I_0' = I_1, I_n' = (I_{n-1} + I_{n+1})/2,
    #                     K_0' = -K_1, K_n' = -(K_{n-1} + K_{n+1})/2
    log_di = np.empty(n_max + 1)
    log_dk = np.empty(n_max + 1)
    log_di[0] = log_i[1]
    log_dk[0] = log_k[1]
    n = np.arange(1, n_max + 1)
    log_di[1:] = log_i[n - 1] + np.log1p(np.exp(log_i[n + 1] - log_i[n - 1])) - _LN2
    log_dk[1:] = log_k[n + 1] + np.log1p(np.exp(log_k[n - 1] - log_k[n + 1])) - _LN2

    worst = max(
        np.abs(log_i).max(), np.abs(log_k).max(), np.abs(log_di).max(), np.abs(log_dk).max()
    )
    if worst > LOG_CAP:
        raise CapacityError(
            f"log magnitudes reach {worst:.3g} > {LOG_CAP:.0e}; order {n_max} at "
            f"x = {x:g} exceeds the safe log-scaled range"
        )
    return BesselSeq(
        x=x,
        n_max=n_max,
        log_i=log_i[: n_max + 1],
        log_k=log_k[: n_max + 1],
        log_di=log_di,
        log_dk=log_dk,
    )


def log_ratio_seq(seq: BesselSeq, pol: str) -> np.ndarray:
    """ln of the positive surface ratio g_n for orders 0..n_max.

    g_n = I_n/K_n for TM and g_n = -I_n'/K_n' for TE; both are positive,
    and the ratio at the outer argument enters the kernels as 1/g.
    """
    if pol == "TM":
        return seq.log_i - seq.log_k
    if pol == "TE":
        return seq.log_di - seq.log_dk
    raise DomainError(f"pol must be 'TM' or 'TE', got {pol!r}")


def bessel_ratio_g(n: int, x: float, pol: str = "TM") -> LogScaled:
    """Surface ratio g_n(x): I_n/K_n (TM) or -I_n'/K_n' (TE), always > 0."""
    seq = mod_bessel_seq(x, max(abs(n), 1))
    return LogScaled(float(log_ratio_seq(seq, pol)[abs(n)]), 1)


def ord_bessel_seq(x: float, n_max: int):
    """J_n(x) and Y_n(x) for orders 0..n_max, as plain doubles.

    J is generated by downward recurrence normalized with the series sum
    J_0 + 2 J_2 + 2 J_4 + ... = 1; Y grows with the order and is generated
    upward from the order-0/1 seeds.  Values outside the double range
    appear as 0.0 (J underflow) or +-inf (Y overflow).
    """
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"need finite x > 0, got {x!r}")
    if n_max < 0:
        raise DomainError(f"need n_max >= 0, got {n_max}")
    x = float(x)

    base = max(n_max, int(math.ceil(x)))
    start = base + int(math.ceil(math.sqrt(40.0 * (base + 1))))
    if start % 2 == 1:
        start += 1

    j = np.zeros(n_max + 1)
    bjp = 0.0
    bj = 1.0e-30
    norm = 0.0
    for n in range(start, 0, -1):
        bjm = (2.0 * n / x) * bj - bjp
        bjp = bj
        bj = bjm
        if abs(bj) > 1.0e250:  # rescale everything accumulated so far
            bj *= 1.0e-250
            bjp *= 1.0e-250
            norm *= 1.0e-250
            j *= 1.0e-250
        if n % 2 == 1:  # n-1 even: contributes to the normalization sum
            norm += 2.0 * bj
        if n - 1 <= n_max:
            j[n - 1] = bj
    norm -= bj  # J_0 enters the sum once, not twice
    j /= norm

    y = np.empty(n_max + 1)
    y[0] = _sp.y0(x)
    if n_max >= 1:
        y[1] = _sp.y1(x)
        for n in range(1, n_max):
            y[n + 1] = (2.0 * n / x) * y[n] - y[n - 1]
    return j, y
