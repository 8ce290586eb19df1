"""Key-rate maximization over protocol knobs, and loss-grid sweeps.

The decision variables are the carrier photon number (searched in log
space), Alice's modulation angle, and the post-selection threshold in
readout-sigma units; finite-block searches add the fraction of the block
spent on parameter estimation.  The modulation-depth ratio delta is never
free: it is re-derived from the calibration condition at every angle.

The search is a deterministic two-stage scheme: a fixed coarse grid
ranks feasible regions, then derivative-free simplex refinement runs
from the best few grid points.  Ties are broken toward the smaller
photon number, then the smaller threshold.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, InfeasibleError, ScwError
from .finitekey import FiniteKeyParams, finite_key_rate
from .noise import ChannelModel, noise_sigma
from .optics import SystemParams, TunableParams, calibrate_delta
from .security import asymptotic_key_rate

# coarse-grid resolution per axis: photon number, angle, threshold
_GRID_SHAPE = (12, 8, 9)
# rates within this relative band are treated as tied
_TIE_REL = 1e-9
_NM_OPTIONS = dict(fatol=1e-11, xatol=1e-7, maxfev=900, maxiter=900)


@dataclass(frozen=True)
class Bounds:
    """Box bounds for the decision variables.

    The threshold bound is expressed in units of the readout standard
    deviation so one box serves every noise level.
    """

    mu_0: tuple[float, float] = (1e-3, 10.0)
    beta_A: tuple[float, float] = (0.1, 1.45)
    v_0_sigmas: tuple[float, float] = (0.0, 6.0)
    k_frac: tuple[float, float] = (0.0, 0.5)

    def __post_init__(self):
        for name in ("mu_0", "beta_A", "v_0_sigmas", "k_frac"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise DomainError(f"bounds for {name} must be ordered, got ({lo}, {hi})")
        if self.mu_0[0] <= 0.0:
            raise DomainError(f"mu_0 lower bound must be positive, got {self.mu_0[0]}")
        if not 0.0 < self.beta_A[0] < self.beta_A[1] < 0.5 * math.pi:
            raise DomainError(
                f"beta_A bounds must sit inside (0, pi/2), got {self.beta_A}"
            )
        if self.v_0_sigmas[0] < 0.0:
            raise DomainError(
                f"threshold lower bound must be >= 0, got {self.v_0_sigmas[0]}"
            )
        if not 0.0 <= self.k_frac[0] < self.k_frac[1] <= 0.9:
            raise DomainError(f"k_frac bounds must sit inside [0, 0.9], got {self.k_frac}")


@dataclass(frozen=True)
class OptimumPoint:
    """Best parameters found for one channel point and the rate there."""

    params: TunableParams
    rate: float
    Q: float
    P: float
    chi: float
    evaluations: int


@dataclass(frozen=True)
class SweepSpec:
    """Grid of channel points to optimize, with shared search settings."""

    loss_grid: tuple[float, ...]
    noise_levels: tuple[float, ...]
    n_values: tuple[int, ...] | None = None
    bounds: Bounds = Bounds()
    restarts: int = 8
    fk_template: FiniteKeyParams | None = None
    ec_mode: str = "pointwise"

    def __post_init__(self):
        for name in ("loss_grid", "noise_levels"):
            grid = getattr(self, name)
            if len(grid) == 0:
                raise DomainError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise DomainError(f"{name} must be strictly increasing, got {grid}")
        if self.n_values is not None:
            if len(self.n_values) == 0:
                raise DomainError("n_values must be non-empty when given")
            if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
                raise DomainError(
                    f"n_values must be strictly increasing, got {self.n_values}"
                )
        if self.restarts < 1:
            raise DomainError(f"restarts must be >= 1, got {self.restarts}")


@dataclass(frozen=True)
class KeyRateReport:
    """Outcome of one sweep point; ``status`` records failures in-band."""

    loss_db: float
    xi: float
    n: int | None
    rate: float
    Q: float | None
    P: float | None
    chi: float | None
    params: TunableParams | None
    status: str


def _decode(x, ch: ChannelModel, fk: FiniteKeyParams | None) -> TunableParams:
    mu_0 = 10.0 ** x[0]
    beta_A = float(x[1])
    v_0 = float(x[2]) * noise_sigma(ch.xi)
    k_sample = 0
    if fk is not None and len(x) > 3:
        k_sample = min(int(round(float(x[3]) * fk.n)), fk.n - 1)
    return TunableParams(mu_0=mu_0, beta_A=beta_A, delta=1.0, v_0=v_0, k_sample=k_sample)


def _evaluate(
    x,
    ch: ChannelModel,
    sys: SystemParams,
    fk: FiniteKeyParams | None,
    ec_mode: str,
):
    """Rate and reporting stats at one decision vector; ScwError means infeasible."""
    shell = _decode(x, ch, fk)
    delta = calibrate_delta(shell.beta_A, sys)
    tun = replace(shell, delta=delta)
    if fk is None:
        out = asymptotic_key_rate(tun, sys, ch)
    else:
        out = finite_key_rate(tun, sys, ch, fk, ec_mode=ec_mode)
    stats = out.stats
    return (
        tun,
        out.rate,
        stats.Q if stats is not None else None,
        stats.P if stats is not None else None,
        out.chi,
    )


def optimize_point(
    ch: ChannelModel,
    sys: SystemParams,
    fk: FiniteKeyParams | None = None,
    ec_mode: str = "pointwise",
    bounds: Bounds = Bounds(),
    restarts: int = 8,
) -> OptimumPoint:
    """Maximize the key rate at one channel point.

    A fixed coarse grid over (log10 mu_0, beta_A, v_0/sigma) seeds
    ``restarts`` simplex refinements; finite-block searches append the
    parameter-estimation fraction, started at zero.  Deterministic: no
    randomness enters at any stage.

    Raises :class:`InfeasibleError` when no coarse-grid point has a
    positive rate, carrying the best grid diagnostics.
    """
    n_eval = 0

    def rate_at(x):
        nonlocal n_eval
        n_eval += 1
        try:
            return _evaluate(x, ch, sys, fk, ec_mode)[1]
        except ScwError:
            return -math.inf

    lg_mu = np.linspace(math.log10(bounds.mu_0[0]), math.log10(bounds.mu_0[1]), _GRID_SHAPE[0])
    betas = np.linspace(bounds.beta_A[0], bounds.beta_A[1], _GRID_SHAPE[1])
    v_sig = np.linspace(bounds.v_0_sigmas[0], bounds.v_0_sigmas[1], _GRID_SHAPE[2])

    coarse = []
    for xm, xb, xv in product(lg_mu, betas, v_sig):
        x = (float(xm), float(xb), float(xv))
        coarse.append((rate_at(x), x))
    best_rate, best_x = max(coarse, key=lambda c: c[0])
    if not best_rate > 0.0:
        raise InfeasibleError(
            f"no positive rate on the {len(coarse)}-point coarse grid at "
            f"loss={ch.loss_db} dB, xi={ch.xi}",
            diagnostics={
                "best_rate": best_rate,
                "best_point": best_x,
                "grid_points": len(coarse),
            },
        )

    coarse.sort(key=lambda c: -c[0])
    starts = [x for r, x in coarse[: max(1, restarts)] if r > 0.0]
    scale = best_rate

    box = [
        (math.log10(bounds.mu_0[0]), math.log10(bounds.mu_0[1])),
        bounds.beta_A,
        bounds.v_0_sigmas,
    ]
    if fk is not None:
        box.append(bounds.k_frac)

    def objective(x):
        return -rate_at(x) / scale

    candidates = []
    for x0 in starts:
        if fk is not None:
            x0 = (*x0, bounds.k_frac[0])
        res = minimize(
            objective, np.asarray(x0), method="Nelder-Mead", bounds=box, options=_NM_OPTIONS
        )
        r = -res.fun * scale
        if math.isfinite(r) and r > 0.0:
            candidates.append((r, tuple(float(v) for v in res.x)))
    if not candidates:
        # refinement lost every start; fall back to the grid optimum
        candidates = [(best_rate, best_x)]

    top = max(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] >= top * (1.0 - _TIE_REL)]
    tied.sort(key=lambda c: (c[1][0], c[1][2]))
    _, x_win = tied[0]

    tun, rate, q, p, chi = _evaluate(x_win, ch, sys, fk, ec_mode)
    return OptimumPoint(params=tun, rate=rate, Q=q, P=p, chi=chi, evaluations=n_eval)


def _sweep_worker(args) -> KeyRateReport:
    loss_db, xi, n, sys, bounds, restarts, fk_template, ec_mode = args
    ch = ChannelModel(loss_db=loss_db, xi=xi)
    fk = None
    if n is not None:
        base = fk_template if fk_template is not None else FiniteKeyParams(n=n)
        fk = replace(base, n=n)
    try:
        opt = optimize_point(
            ch, sys, fk=fk, ec_mode=ec_mode, bounds=bounds, restarts=restarts
        )
    except InfeasibleError:
        return KeyRateReport(
            loss_db=loss_db, xi=xi, n=n, rate=0.0,
            Q=None, P=None, chi=None, params=None, status="infeasible",
        )
    except Exception as exc:  # record, never abort the sweep
        return KeyRateReport(
            loss_db=loss_db, xi=xi, n=n, rate=0.0,
            Q=None, P=None, chi=None, params=None,
            status=f"error: {type(exc).__name__}: {exc}",
        )
    return KeyRateReport(
        loss_db=loss_db, xi=xi, n=n, rate=opt.rate,
        Q=opt.Q, P=opt.P, chi=opt.chi, params=opt.params, status="ok",
    )


def thread_count(n_tasks: int) -> int:
    """Worker count for sweeps: SCW_THREADS, else the CPU count, capped by tasks."""
    raw = os.environ.get("SCW_THREADS", "")
    try:
        threads = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise DomainError(f"SCW_THREADS must be an integer, got {raw!r}")
    return max(1, min(threads, n_tasks))


def sweep(spec: SweepSpec, sys: SystemParams) -> list[KeyRateReport]:
    """Optimize every (noise, block-size, loss) grid point.

    Points are independent and evaluated in parallel when more than one
    worker is available; the output order always follows the grid index
    (noise level outermost, loss innermost), and per-point failures are
    recorded in the report status rather than raised.
    """
    n_list = list(spec.n_values) if spec.n_values is not None else [None]
    tasks = [
        (loss, xi, n, sys, spec.bounds, spec.restarts, spec.fk_template, spec.ec_mode)
        for xi in spec.noise_levels
        for n in n_list
        for loss in spec.loss_grid
    ]
    workers = thread_count(len(tasks))
    if workers == 1:
        return [_sweep_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_worker, tasks))
