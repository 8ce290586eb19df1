"""Finite-block secret key length and rate.

For a sifted block of n bits the extractable key length is

    l = n (1 - chi - delta(eps_s)/sqrt(n)) - k - code_EC - check_EC - loss_PA

where delta(eps_s) is the smooth min-entropy correction, k the bits spent
on parameter estimation, code_EC the disclosed syndrome, check_EC the
verification hash (eps_EC = 2^-check_EC) and loss_PA = log2(1/eps_PA) - 2
the privacy-amplification overhead.  The finite rate integrates the same
per-bit budget over the accepted readout region.

Two error-correction charges are available.  The default, "pointwise",
subtracts f_EC h(e(v) + dQ) inside the integrand, the finite-efficiency
analogue of the asymptotic h(e(v)) term, so the rate converges to the
asymptotic one as n grows and the margins vanish.  "block" subtracts the
flat per-bit syndrome cost f_EC h(Q + dQ) instead, which reproduces the
key-length bookkeeping above verbatim (see the length consistency check
in the tests) but keeps a Jensen gap from the asymptotic rate even at
idealized efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError, EmptyAcceptanceError
from .noise import ChannelModel, DecisionStats, decision_stats, erasure_error_profiles
from .optics import SystemParams, TunableParams, matched_means
from .security import (
    accepted_rate_integral,
    binary_entropy,
    integration_ceiling,
    security_quantities,
)
import numpy as np

_EC_MODES = ("pointwise", "block")


@dataclass(frozen=True)
class FiniteKeyParams:
    """Block size, security parameters and error-correction overheads."""

    n: int
    eps_s: float = 1e-10
    eps_PA: float = 1e-10
    check_EC: int = 256
    f_EC: float = 1.15
    dQ: float = 0.01
    k_sample: int = 0
    Q_est: float | None = None

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise DomainError(f"block size must be a positive int, got {self.n!r}")
        for name in ("eps_s", "eps_PA"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise DomainError(f"{name} must be in (0, 1), got {val}")
        if not (isinstance(self.check_EC, int) and self.check_EC >= 1):
            raise DomainError(
                f"verification hash length must be a positive int, got {self.check_EC!r}"
            )
        if not self.f_EC >= 1.0:
            raise DomainError(f"f_EC must be >= 1, got {self.f_EC}")
        if not 0.0 <= self.dQ < 0.5:
            raise DomainError(f"dQ must be in [0, 1/2), got {self.dQ}")
        if not 0 <= self.k_sample < self.n:
            raise DomainError(
                f"k_sample must be in [0, n), got {self.k_sample} with n={self.n}"
            )
        if self.Q_est is not None and not 0.0 <= self.Q_est <= 0.5:
            raise DomainError(f"Q_est must be in [0, 1/2], got {self.Q_est}")

    @property
    def eps_EC(self) -> float:
        return 2.0 ** -self.check_EC

    @property
    def loss_PA(self) -> float:
        return math.log2(1.0 / self.eps_PA) - 2.0

    @property
    def eps_QKD(self) -> float:
        return self.eps_EC + self.eps_s + self.eps_PA


@dataclass(frozen=True)
class FiniteKeyLength:
    """Extractable key length in bits; zero with ``abort`` set when negative."""

    l: float
    abort: bool


@dataclass(frozen=True)
class FiniteKeyResult:
    """One finite-block rate point in bits per second."""

    rate: float
    abort: bool
    chi: float
    stats: DecisionStats | None
    n: int


def smoothing_correction(eps_s: float) -> float:
    """Smooth min-entropy correction per sqrt(n), 4 log2(2 + sqrt 2) sqrt(log2(2/eps_s^2))."""
    if not 0.0 < eps_s < 1.0:
        raise DomainError(f"eps_s must be in (0, 1), got {eps_s}")
    return 4.0 * math.log2(2.0 + math.sqrt(2.0)) * math.sqrt(
        math.log2(2.0 / eps_s**2)
    )


def ec_syndrome_length(n: int, Q_est: float, dQ: float, f_EC: float) -> int:
    """Disclosed syndrome bits, ceil(n f_EC h(Q_est + dQ))."""
    if not (isinstance(n, int) and n >= 1):
        raise DomainError(f"block size must be a positive int, got {n!r}")
    if not f_EC >= 1.0:
        raise DomainError(f"f_EC must be >= 1, got {f_EC}")
    q = Q_est + dQ
    if not 0.0 <= q < 0.5:
        raise DomainError(f"Q_est + dQ must be in [0, 1/2), got {q}")
    return math.ceil(n * f_EC * binary_entropy(q))


def finite_key_length(fk: FiniteKeyParams, chi: float) -> FiniteKeyLength:
    """Extractable key length for a block with known error-rate estimate."""
    if fk.Q_est is None:
        raise DomainError("finite_key_length needs Q_est set on FiniteKeyParams")
    if not 0.0 <= chi <= 1.0:
        raise DomainError(f"chi must be in [0, 1], got {chi}")
    if fk.Q_est + fk.dQ >= 0.5:
        return FiniteKeyLength(l=0.0, abort=True)
    code_ec = ec_syndrome_length(fk.n, fk.Q_est, fk.dQ, fk.f_EC)
    l = (
        fk.n * (1.0 - chi)
        - math.sqrt(fk.n) * smoothing_correction(fk.eps_s)
        - fk.k_sample
        - code_ec
        - fk.check_EC
        - fk.loss_PA
    )
    if l <= 0.0:
        return FiniteKeyLength(l=0.0, abort=True)
    return FiniteKeyLength(l=l, abort=False)


def finite_key_rate(
    tun: TunableParams,
    sys: SystemParams,
    ch: ChannelModel,
    fk: FiniteKeyParams,
    ec_mode: str = "pointwise",
    doubling: bool | None = None,
) -> FiniteKeyResult:
    """Finite-block secret key rate in bits per second.

    The per-bit budget 1 - chi - delta/sqrt(n) - (k + check_EC + loss_PA)/n
    minus the error-correction charge is integrated over the accepted
    region with the same folding and clamping conventions as the
    asymptotic rate.  ``fk.k_sample`` overrides ``tun.k_sample`` when the
    latter is zero.
    """
    if ec_mode not in _EC_MODES:
        raise DomainError(f"ec_mode must be one of {_EC_MODES}, got {ec_mode!r}")
    if doubling is None:
        doubling = sys.symmetric_doubling
    k_sample = tun.k_sample if tun.k_sample > 0 else fk.k_sample
    if k_sample >= fk.n:
        raise DomainError(f"k_sample {k_sample} must be below block size {fk.n}")

    mean_plus, mean_minus = matched_means(tun, sys, ch.eta)
    quantities = security_quantities(tun.mu_0, tun.beta_A, sys.S)
    chi = quantities.chi_dr

    try:
        stats = decision_stats(tun.v_0, mean_plus, mean_minus, ch.xi)
    except EmptyAcceptanceError:
        return FiniteKeyResult(rate=0.0, abort=True, chi=chi, stats=None, n=fk.n)

    # n-dependent overheads shared by both charges
    fixed = (
        chi
        + smoothing_correction(fk.eps_s) / math.sqrt(fk.n)
        + (k_sample + fk.check_EC + fk.loss_PA) / fk.n
    )

    if ec_mode == "block":
        if stats.Q + fk.dQ >= 0.5:
            return FiniteKeyResult(rate=0.0, abort=True, chi=chi, stats=stats, n=fk.n)
        code_ec = ec_syndrome_length(fk.n, stats.Q, fk.dQ, fk.f_EC)
        bracket_const = 1.0 - fixed - code_ec / fk.n

        def integrand(v):
            og, _ = erasure_error_profiles(v, mean_plus, mean_minus, ch.xi)
            return og * bracket_const

    else:

        def integrand(v):
            og, e = erasure_error_profiles(v, mean_plus, mean_minus, ch.xi)
            charge = fk.f_EC * binary_entropy(np.minimum(e + fk.dQ, 0.5))
            return og * (1.0 - fixed - charge)

    hi = integration_ceiling(mean_plus, mean_minus, ch.xi)
    scale = (2.0 if doubling else 1.0) / (sys.N * sys.T)
    raw = scale * accepted_rate_integral(integrand, tun.v_0, hi)

    if raw <= 0.0:
        return FiniteKeyResult(rate=0.0, abort=True, chi=chi, stats=stats, n=fk.n)
    return FiniteKeyResult(rate=raw, abort=False, chi=chi, stats=stats, n=fk.n)


def with_observed_error_rate(fk: FiniteKeyParams, Q_est: float) -> FiniteKeyParams:
    """Copy of the parameter block with the error-rate estimate filled in."""
    return replace(fk, Q_est=Q_est)
