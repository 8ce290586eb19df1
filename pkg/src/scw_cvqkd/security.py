"""Eavesdropper information bound and the asymptotic secret key rate.

Under a collective beam-splitting attack the adversary ends up having to
distinguish the two multimode coherent states Alice sends within one
basis.  Their overlap fixes the eigenvalues of the intercepted density
operator and hence the accessible information (the chi bound below); the
secret fraction at readout v is 1 - h(e(v)) - chi, and the key rate is
its acceptance-weighted integral over the post-selected region, converted
to bits per second by the basis count and window duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import xlogy

from .angular import carrier_weight, wigner_d_row
from .errors import DomainError, EmptyAcceptanceError
from .noise import (
    ChannelModel,
    DecisionStats,
    decision_stats,
    erasure_error_profiles,
    noise_sigma,
)
from .optics import SystemParams, TunableParams, matched_means

_BOUNDS_SLOP = 1e-12
# Gauss-Legendre order for the rate integral; the integrand is entire, so
# convergence is supergeometric and this is far past saturation.
_GL_ORDER = 240
_TAIL_SIGMAS = 14.0


@dataclass(frozen=True)
class SecurityQuantities:
    """Overlap, intercepted-state spectrum and information bound."""

    overlap: float
    lambda_1: float
    lambda_2: float
    chi_dr: float
    K: float | None = None


@dataclass(frozen=True)
class KeyRateResult:
    """One evaluated rate point: bits per second plus its ingredients."""

    rate: float
    insecure: bool
    chi: float
    stats: DecisionStats | None
    quantities: SecurityQuantities


def binary_entropy(x):
    """Binary Shannon entropy in bits, with 0 log 0 = 0.  Scalar or array."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -_BOUNDS_SLOP) or np.any(arr > 1.0 + _BOUNDS_SLOP):
        raise DomainError(f"entropy argument outside [0, 1]: {x!r}")
    arr = np.clip(arr, 0.0, 1.0)
    out = -(xlogy(arr, arr) + xlogy(1.0 - arr, 1.0 - arr)) / math.log(2.0)
    return float(out) if out.ndim == 0 else out


def state_overlap(mu_0: float, beta_A: float, S: int) -> float:
    """Overlap of the two same-basis signal states, exp(-mu_0 (1 - d00(2 beta_A))).

    The doubled angle can exceed pi; the carrier weight continues
    analytically there.
    """
    if not (math.isfinite(mu_0) and mu_0 >= 0.0):
        raise DomainError(f"mu_0 must be finite and >= 0, got {mu_0}")
    if not 0.0 <= beta_A <= math.pi:
        raise DomainError(f"beta_A must be in [0, pi], got {beta_A}")
    return math.exp(-mu_0 * (1.0 - carrier_weight(S, 2.0 * beta_A)))


def security_quantities(mu_0: float, beta_A: float, S: int) -> SecurityQuantities:
    """Spectrum of the intercepted two-state mixture and its chi bound."""
    overlap = state_overlap(mu_0, beta_A, S)
    lambda_1 = 0.5 * (1.0 + overlap)
    lambda_2 = 0.5 * (1.0 - overlap)
    return SecurityQuantities(
        overlap=overlap,
        lambda_1=lambda_1,
        lambda_2=lambda_2,
        chi_dr=binary_entropy(lambda_2),
    )


def holevo_dr(mu_0: float, beta_A: float, S: int) -> float:
    """Direct-reconciliation information bound chi = h((1 - overlap)/2)."""
    return security_quantities(mu_0, beta_A, S).chi_dr


@lru_cache(maxsize=8)
def _gl_nodes(order: int):
    return np.polynomial.legendre.leggauss(order)


def accepted_rate_integral(fn, lo: float, hi: float) -> float:
    """Integral of a smooth vectorized integrand over [lo, hi]."""
    if hi <= lo:
        return 0.0
    x, w = _gl_nodes(_GL_ORDER)
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    return half * float(np.dot(w, fn(mid + half * x)))


def integration_ceiling(mean_plus: float, mean_minus: float, xi: float) -> float:
    """Upper readout bound past which the remaining mass is below 1e-40."""
    return max(abs(mean_plus), abs(mean_minus)) + _TAIL_SIGMAS * noise_sigma(xi)


def asymptotic_key_rate(
    tun: TunableParams,
    sys: SystemParams,
    ch: ChannelModel,
    doubling: bool | None = None,
) -> KeyRateResult:
    """Collective-attack secret key rate in bits per second.

    Integrates the acceptance-weighted secret fraction over v >= v_0 and,
    when ``doubling`` is set (default: the system's symmetric_doubling
    flag), doubles it for the mirrored negative branch.  A non-positive
    total is clamped to 0 and flagged insecure.
    """
    if doubling is None:
        doubling = sys.symmetric_doubling
    mean_plus, mean_minus = matched_means(tun, sys, ch.eta)
    quantities = security_quantities(tun.mu_0, tun.beta_A, sys.S)
    chi = quantities.chi_dr

    try:
        stats = decision_stats(tun.v_0, mean_plus, mean_minus, ch.xi)
    except EmptyAcceptanceError:
        return KeyRateResult(
            rate=0.0, insecure=True, chi=chi, stats=None, quantities=quantities
        )

    def integrand(v):
        one_minus_g, e = erasure_error_profiles(v, mean_plus, mean_minus, ch.xi)
        return one_minus_g * (1.0 - binary_entropy(e) - chi)

    hi = integration_ceiling(mean_plus, mean_minus, ch.xi)
    scale = (2.0 if doubling else 1.0) / (sys.N * sys.T)
    raw = scale * accepted_rate_integral(integrand, tun.v_0, hi)

    if raw <= 0.0:
        return KeyRateResult(
            rate=0.0, insecure=True, chi=chi, stats=stats, quantities=quantities
        )
    return KeyRateResult(
        rate=raw, insecure=False, chi=chi, stats=stats, quantities=quantities
    )


def sideband_photon_number(mu_0: float, beta_A: float, S: int) -> float:
    """Total mean photons in the sidebands, mu_0 (1 - d00(beta_A)^2)."""
    w = wigner_d_row(S, beta_A)[0]
    return mu_0 * (1.0 - w * w)
