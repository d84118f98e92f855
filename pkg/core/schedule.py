"""
Regularization schedules and step sizes.

The built-in family is the power law a(t) = d / (c + t)^b sampled at
t = n h. Arbitrary decreasing sequences are accepted in tabulated form;
they are certified from their samples only.
"""

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .error_handling import InvalidScheduleError, StepBoundError
from .models import GammaRule, ScheduleCertificate, ScheduleParams, TabulatedSchedule

logger = logging.getLogger(__name__)

Schedule = Union[ScheduleParams, TabulatedSchedule]

NU_ZERO_LIMIT = 0.1
A0_H_LIMIT = 2.0
REMARK_MIN_C = 5.0


def _validate_power_params(d: float, c: float, b: float, h: float) -> None:
    values = {"d": d, "c": c, "b": b, "h": h}
    for key, value in values.items():
        if not math.isfinite(value):
            raise InvalidScheduleError(f"Schedule parameter {key} must be finite, got {value}")
    if d <= 0:
        raise InvalidScheduleError(f"Schedule needs d > 0, got d={d}")
    if c < 1:
        raise InvalidScheduleError(f"Schedule needs c >= 1, got c={c}")
    if not 0 < b < 1:
        raise InvalidScheduleError(f"Schedule needs b in (0, 1), got b={b}")
    if h <= 0:
        raise InvalidScheduleError(f"Schedule needs step h > 0, got h={h}")


def certify_schedule(s: ScheduleParams) -> ScheduleCertificate:
    """
    Closed-form admissibility flags of a power-law schedule.

    The conditions nu(0) <= 1/10 and a(0) h <= 2 are evaluated as
    10 b / c^(1-b) <= d and d h <= 2 c^b, the same expressions the
    sufficient power-law condition uses, so remark36_ok implies
    theorem3_ok in floating point as well.
    """
    messages = []

    eqsxa_ok = s.d > 0 and s.c >= 1 and 0 < s.b < 1 and s.h > 0
    if not eqsxa_ok:
        messages.append("a(t) is not positive decreasing with decreasing nu(t)")

    lower_d = 10.0 * s.b / s.c ** (1.0 - s.b)
    upper_d = 2.0 * s.c ** s.b

    nu_ok = lower_d <= s.d
    step_ok = s.d * s.h <= upper_d
    theorem3_ok = eqsxa_ok and nu_ok and step_ok
    if not nu_ok:
        messages.append(f"nu(0) = {nu_at(s, 0.0):.6g} exceeds {NU_ZERO_LIMIT}")
    if not step_ok:
        messages.append(f"a(0) h = {s.a0 * s.h:.6g} exceeds {A0_H_LIMIT}")

    remark36_ok = eqsxa_ok and s.c >= REMARK_MIN_C and lower_d <= s.d <= upper_d and s.h <= 1.0
    if not remark36_ok:
        if s.c < REMARK_MIN_C:
            messages.append(f"c = {s.c:.6g} is below {REMARK_MIN_C:g}")
        if not lower_d <= s.d <= upper_d:
            messages.append(f"d = {s.d:.6g} outside [{lower_d:.6g}, {upper_d:.6g}]")
        if s.h > 1.0:
            messages.append(f"h = {s.h:.6g} exceeds 1")

    return ScheduleCertificate(
        eqsxa_ok=eqsxa_ok,
        theorem3_ok=theorem3_ok,
        remark36_ok=remark36_ok,
        messages=messages,
        sampled=False,
    )


def make_power_schedule(d: float, c: float, b: float, h: float) -> Tuple[ScheduleParams, ScheduleCertificate]:
    """
    Build a power-law schedule a(t) = d / (c + t)^b and certify it.

    Args:
        d: Scale, positive
        c: Offset, at least 1
        b: Exponent in (0, 1)
        h: Step of the time grid t = n h, positive

    Returns:
        Tuple of the schedule parameters and their certificate

    Raises:
        InvalidScheduleError: If the parameters cannot give a positive
            decreasing a(t) with decreasing nu(t)
    """
    _validate_power_params(d, c, b, h)
    params = ScheduleParams(d=float(d), c=float(c), b=float(b), h=float(h))
    certificate = certify_schedule(params)
    logger.debug(
        f"Power schedule d={d:.6g} c={c:.6g} b={b:.6g} h={h:.6g}: "
        f"theorem3_ok={certificate.theorem3_ok} remark36_ok={certificate.remark36_ok}"
    )
    return params, certificate


def make_tabulated_schedule(values: Sequence[float], h: float) -> Tuple[TabulatedSchedule, ScheduleCertificate]:
    """
    Accept a user-supplied decreasing schedule with sampled certification.

    nu is approximated by the gaps (1/a_{n+1} - 1/a_n) / h. The power-law
    sufficient condition never applies, so remark36_ok is always False.

    Raises:
        InvalidScheduleError: If the values are not positive and strictly decreasing
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise InvalidScheduleError("A tabulated schedule needs at least two values")
    if not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise InvalidScheduleError("Tabulated schedule values must be positive and finite")
    if np.any(np.diff(a) >= 0):
        raise InvalidScheduleError("Tabulated schedule values must be strictly decreasing")
    if not (h > 0 and math.isfinite(h)):
        raise InvalidScheduleError(f"Schedule needs step h > 0, got h={h}")

    nu_samples = np.diff(1.0 / a) / h
    messages = ["certified from samples only"]

    eqsxa_ok = bool(np.all(np.diff(nu_samples) < 0)) if nu_samples.size > 1 else True
    if not eqsxa_ok:
        messages.append("sampled nu is not strictly decreasing")

    nu0 = float(nu_samples[0])
    theorem3_ok = eqsxa_ok and a[0] * h <= A0_H_LIMIT and nu0 <= NU_ZERO_LIMIT
    if nu0 > NU_ZERO_LIMIT:
        messages.append(f"sampled nu(0) = {nu0:.6g} exceeds {NU_ZERO_LIMIT}")
    if a[0] * h > A0_H_LIMIT:
        messages.append(f"a(0) h = {a[0] * h:.6g} exceeds {A0_H_LIMIT}")

    schedule = TabulatedSchedule(values=tuple(float(x) for x in a), h=float(h))
    certificate = ScheduleCertificate(
        eqsxa_ok=eqsxa_ok,
        theorem3_ok=theorem3_ok,
        remark36_ok=False,
        messages=messages,
        sampled=True,
    )
    return schedule, certificate


def a_at(s: Schedule, n: int) -> float:
    """a_n = a(n h); strictly decreasing in n."""
    if n < 0:
        raise ValueError(f"Schedule index must be nonnegative, got {n}")
    if isinstance(s, TabulatedSchedule):
        if n >= len(s.values):
            raise InvalidScheduleError(f"Tabulated schedule has {len(s.values)} values, index {n} requested")
        return s.values[n]
    return s.d / (s.c + n * s.h) ** s.b


def schedule_values(s: Schedule, count: int) -> np.ndarray:
    """a_0, ..., a_{count-1} as an array."""
    return np.array([a_at(s, n) for n in range(count)], dtype=np.float64)


def nu_at(s: ScheduleParams, t: float) -> float:
    """nu(t) = |a'(t)| / a(t)^2 = b (c + t)^(b-1) / d."""
    return s.b * (s.c + t) ** (s.b - 1.0) / s.d


def nu_zero(s: Schedule) -> float:
    if isinstance(s, TabulatedSchedule):
        return (1.0 / s.values[1] - 1.0 / s.values[0]) / s.h
    return nu_at(s, 0.0)


def gamma_max(sigma_inverse: float, a_n: float) -> float:
    """Largest admissible step 2 / (sigma^{-1} + 2 a_n)."""
    return 2.0 / (sigma_inverse + 2.0 * a_n)


def phi(s: Schedule, n: int) -> float:
    """phi_n = h * sum_{i=0..n} a_i."""
    return s.h * math.fsum(a_at(s, i) for i in range(n + 1))


def phi_half(s: Schedule, n: int) -> float:
    """Half-weight variant sum_{i=1..n} a_i h / 2; zero at n = 0."""
    return 0.5 * s.h * math.fsum(a_at(s, i) for i in range(1, n + 1))


def gamma_for(
    s: Schedule,
    n: int,
    rule: GammaRule,
    sigma_inverse: float,
    gamma: Optional[float] = None,
    cap: float = 1.0,
) -> float:
    """
    Step size gamma_n under the configured rule.

    The constant rule uses ``gamma`` (h when None); the capped-adaptive
    rule uses min(cap, gamma_max(sigma^{-1}, a_n)).
    """
    if rule == GammaRule.CAPPED_ADAPTIVE:
        return min(cap, gamma_max(sigma_inverse, a_at(s, n)))
    return s.h if gamma is None else gamma


def check_step_bounds(
    s: Schedule,
    rule: GammaRule,
    sigma_inverse: float,
    gamma: Optional[float] = None,
    cap: float = 1.0,
) -> float:
    """
    Verify h <= gamma_n <= gamma_max(sigma^{-1}, a_n) for every n.

    a_n decreases, so gamma_max increases with n and the adaptive gamma_n
    is nondecreasing; checking n = 0 covers the whole run.

    Returns:
        float: gamma_0

    Raises:
        StepBoundError: If gamma_0 falls outside [h, gamma_max]
    """
    gamma0 = gamma_for(s, 0, rule, sigma_inverse, gamma, cap)
    bound = gamma_max(sigma_inverse, s.a0)
    if not gamma0 > 0:
        raise StepBoundError(f"Step size must be positive, got gamma={gamma0}")
    if gamma0 > bound:
        raise StepBoundError(
            f"Step size gamma={gamma0:.6g} exceeds the step bound 2/(sigma^-1 + 2 a_0) = {bound:.6g} "
            f"(sigma^-1={sigma_inverse:.6g}, a_0={s.a0:.6g})"
        )
    if gamma0 < s.h:
        raise StepBoundError(f"Step size gamma={gamma0:.6g} is below the schedule step h={s.h:.6g}")
    return gamma0
