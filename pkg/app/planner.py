"""
Redundancy planning: switching interval, backup channels and backup TAPs.
"""
import logging
import math
from dataclasses import dataclass

from scipy import optimize

from app.errors import PlannerError
from app.topology import BackupSelection, combined_reliability, select_backup_taps
from app.utils import validate_probability

logger = logging.getLogger(__name__)

W_MAX_DEFAULT = 64
PLAN_N_TAP = 10


@dataclass(frozen=True)
class ReliabilityTarget:
    xi_min: float
    tau_max: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.xi_min <= 1.0:
            raise PlannerError(f"xi_min must be in (0, 1], got {self.xi_min}")
        if not self.tau_max > 0:
            raise PlannerError(f"tau_max must be > 0, got {self.tau_max}")


@dataclass(frozen=True)
class RedundancyPlan:
    t_w_star: float
    w_star: int
    n_a: int
    tap_set: tuple
    achieved_reliability: float
    achieved_latency: float = math.nan
    w_min: int = 1
    feasible: bool = True

    def __post_init__(self):
        if not 0.0 <= self.achieved_reliability <= 1.0:
            raise PlannerError(f"achieved_reliability out of range: {self.achieved_reliability}")
        if self.w_star < self.w_min:
            raise PlannerError(f"w_star={self.w_star} is below w_min={self.w_min}")
        if self.n_a < 1:
            raise PlannerError(f"n_a must be >= 1, got {self.n_a}")

    def to_dict(self):
        return {
            't_w_star': self.t_w_star if math.isfinite(self.t_w_star) else None,
            'w_star': self.w_star,
            'n_a': self.n_a,
            'tap_set': list(self.tap_set),
            'achieved_reliability': self.achieved_reliability,
            'achieved_latency': None if math.isnan(self.achieved_latency) else self.achieved_latency,
            'feasible': self.feasible,
        }


@dataclass(frozen=True)
class SurfaceCell:
    ratio: float
    n_a: int
    xi_min: float
    xi: float
    w: int = None

    @property
    def feasible(self):
        return self.w is not None


def switching_interval(lambda_p, xi_min):
    """
    Longest channel switching interval worth using.

    Maximises f(t) = t * (exp(-lambda_p t) - xi_min). Its stationary point
    solves exp(-x)(1 - x) = xi_min with x = lambda_p t, which has a single
    root on (0, 1); the root is found by bisection in x, so
    t_w*(k * lambda_p) = t_w*(lambda_p) / k holds exactly.

    Args:
        lambda_p: PU arrival rate, > 0
        xi_min: Required reliability in (0, 1)

    Returns:
        float: t_w*
    """
    if not lambda_p > 0:
        raise PlannerError(f"lambda_p must be > 0, got {lambda_p}")
    if not 0.0 < xi_min < 1.0:
        raise PlannerError(f"xi_min must be in (0, 1) for a positive switching interval, got {xi_min}")

    def first_order(x):
        return math.exp(-x) * (1.0 - x) - xi_min

    x_star = optimize.bisect(first_order, 0.0, 1.0, xtol=1e-300, rtol=1e-13, maxiter=2000)
    return x_star / lambda_p


def switching_objective(t, lambda_p, xi_min):
    """t * (exp(-lambda_p t) - xi_min)"""
    return t * (math.exp(-lambda_p * t) - xi_min)


def _lookup(tau_of_w):
    if hasattr(tau_of_w, '__getitem__') and not callable(tau_of_w):
        return tau_of_w.__getitem__
    return tau_of_w


def backup_channel_count(tau_of_w, tau_max, w_min=1, w_max=W_MAX_DEFAULT):
    """
    Number of channels whose latency comes closest to tau_max.

    argmin over w in [w_min, w_max] of (tau_max - tau(w))^2; ties go to the
    smaller w.

    Args:
        tau_of_w: Callable w -> latency, or a mapping w -> latency
        tau_max: Maximum tolerable latency
        w_min: Smallest channel count considered
        w_max: Largest channel count considered

    Returns:
        int: w*

    Raises:
        PlannerError: Empty range, or a latency that is not a finite number
    """
    if w_min < 1 or w_max < w_min:
        raise PlannerError(f"Empty search range [{w_min}, {w_max}]")
    lookup = _lookup(tau_of_w)
    best_w, best_cost = None, math.inf
    for w in range(w_min, w_max + 1):
        tau = float(lookup(w))
        if not math.isfinite(tau):
            raise PlannerError(f"Latency for w={w} is not finite: {tau}")
        cost = (tau_max - tau) ** 2
        if cost < best_cost:
            best_w, best_cost = w, cost
    return best_w


def tap_redundancy(xi, n_a):
    """Reliability of n_a independent alternatives: 1 - (1 - xi)^n_a"""
    validate_probability('xi', xi)
    if n_a < 1:
        raise PlannerError(f"n_a must be >= 1, got {n_a}")
    return 1.0 - (1.0 - xi) ** n_a


def link_reliability(ratio):
    """
    Per-attempt reliability for a traffic ratio mu_S / lambda_P.

    The message completes before a PU returns (competing exponentials):
    xi = mu_S / (mu_S + lambda_P) = ratio / (ratio + 1).
    """
    if not ratio > 0:
        raise PlannerError(f"Traffic ratio must be > 0, got {ratio}")
    if math.isinf(ratio):
        return 1.0
    return ratio / (ratio + 1.0)


def smart_reliability(xi, monitored_channels=None):
    """
    Per-attempt reliability with the TAP channel monitor.

    With ideal knowledge (monitored_channels=None) a message is never put on
    a channel a PU will reclaim, so xi = 1. With m monitored channels an
    attempt fails only when all of them are busy.
    """
    if monitored_channels is None:
        return 1.0
    if monitored_channels < 1:
        raise PlannerError(f"monitored_channels must be >= 1, got {monitored_channels}")
    return tap_redundancy(xi, monitored_channels)


def minimal_channels(xi, n_a, xi_min, w_max=W_MAX_DEFAULT):
    """
    Smallest w with 1 - (1 - xi)^(w * n_a) >= xi_min.

    Returns:
        int or None: w, or None when no w up to w_max is enough
    """
    # Only a certain attempt reaches 1; 1 - (1 - xi)^k rounds to 1.0 for large k
    if xi_min >= 1.0 and xi < 1.0:
        return None
    for w in range(1, w_max + 1):
        if tap_redundancy(xi, w * n_a) >= xi_min:
            return w
    return None


def reliability_surface(ratio_list, n_a_list, xi_min_grid, smart=False,
                        monitored_channels=None, w_max=W_MAX_DEFAULT):
    """
    Minimal channel count for every (ratio, n_a, xi_min) cell.

    Args:
        ratio_list: Traffic ratios mu_S / lambda_P
        n_a_list: TAP set sizes
        xi_min_grid: Required reliabilities
        smart: Apply the TAP channel monitor
        monitored_channels: Channels the monitor watches (None = ideal knowledge)
        w_max: Search bound; cells needing more are infeasible

    Returns:
        list: SurfaceCell per cell, sorted by (ratio, n_a, xi_min)
    """
    cells = []
    for ratio in sorted(ratio_list):
        xi = link_reliability(ratio)
        if smart:
            xi = smart_reliability(xi, monitored_channels)
        for n_a in sorted(n_a_list):
            if n_a < 1:
                raise PlannerError(f"n_a must be >= 1, got {n_a}")
            for xi_min in sorted(xi_min_grid):
                validate_probability('xi_min', xi_min, low_open=True)
                w = minimal_channels(xi, n_a, xi_min, w_max)
                cells.append(SurfaceCell(ratio=ratio, n_a=n_a, xi_min=xi_min, xi=xi, w=w))
    logger.debug("Reliability surface: %d cells, %d infeasible",
                 len(cells), sum(1 for c in cells if not c.feasible))
    return cells


def _tap_selection(pool, w, xi_min):
    """TAP set for per-TAP reliabilities lifted by w channels"""
    lifted = sorted((int(tap), tap_redundancy(float(xi), w)) for tap, xi in pool)
    everything = BackupSelection(taps=tuple(tap for tap, _ in lifted),
                                 reliability=combined_reliability(xi for _, xi in lifted), feasible=False)
    if xi_min >= 1.0:
        certain = [tap for tap, xi in lifted if xi >= 1.0]
        return BackupSelection(taps=(certain[0],), reliability=1.0, feasible=True) if certain else everything
    if everything.reliability < xi_min:
        return everything
    return select_backup_taps('plan', lifted, xi_min)


def plan_redundancy(lambda_p, mu_s, target, tau_of_w=None, candidates=None, n_tap=PLAN_N_TAP,
                    w_min=1, w_max=W_MAX_DEFAULT):
    """
    Compose the switching-interval, channel-count and TAP-set optimizers.

    Without a latency profile (w, n_a) is sized jointly: the pair with the
    fewest channel/TAP alternatives w * n_a that meets xi_min, ties going to
    fewer channels. With a profile w* comes from backup_channel_count and the
    TAP set is then the smallest one meeting xi_min over w* channels.

    Args:
        lambda_p: PU arrival rate
        mu_s: SU service rate
        target: ReliabilityTarget
        tau_of_w: Optional latency profile w -> tau
        candidates: Optional (tap_id, reliability) list; defaults to n_tap
            identical TAPs of reliability mu_s / (mu_s + lambda_p)
        n_tap: Number of TAPs an object can reach when candidates is omitted
        w_min: Lower bound on w
        w_max: Upper bound on w, usually the number of channels

    Returns:
        RedundancyPlan: feasible=False when no (w, TAP set) reaches xi_min;
        it then carries every TAP and w_max channels
    """
    if w_min < 1 or w_max < w_min:
        raise PlannerError(f"Empty search range [{w_min}, {w_max}]")
    xi = link_reliability(mu_s / lambda_p if lambda_p > 0 else math.inf)
    xi_min = target.xi_min

    if xi_min >= 1.0:
        t_w_star = 0.0
    elif lambda_p > 0:
        t_w_star = switching_interval(lambda_p, xi_min)
    else:
        t_w_star = math.inf

    if candidates is None:
        if n_tap < 1:
            raise PlannerError(f"n_tap must be >= 1, got {n_tap}")
        candidates = [(j, xi) for j in range(n_tap)]
    if not candidates:
        raise PlannerError("No candidate TAPs to plan with")

    if tau_of_w is not None and math.isfinite(target.tau_max):
        w_star = backup_channel_count(tau_of_w, target.tau_max, w_min, w_max)
        latency = float(_lookup(tau_of_w)(w_star))
        selection = _tap_selection(candidates, w_star, xi_min)
    else:
        latency = math.nan
        best = None
        for w in range(w_min, w_max + 1):
            if best is not None and w >= best[0] * best[1].n_a:
                break
            selection = _tap_selection(candidates, w, xi_min)
            if selection.feasible and (best is None or w * selection.n_a < best[0] * best[1].n_a):
                best = (w, selection)
        w_star, selection = best if best is not None else (w_max, _tap_selection(candidates, w_max, xi_min))

    plan = RedundancyPlan(
        t_w_star=t_w_star,
        w_star=w_star,
        n_a=selection.n_a,
        tap_set=tuple(selection.taps),
        achieved_reliability=min(1.0, max(0.0, selection.reliability)),
        achieved_latency=latency,
        w_min=w_min,
        feasible=selection.feasible,
    )
    if not plan.feasible:
        logger.warning("No plan reaches xi_min=%s with %d TAPs and at most %d channels",
                       xi_min, len(candidates), w_star)
    logger.info("Plan: t_w*=%.6g w*=%d n_a=%d reliability=%.9g", t_w_star, w_star, plan.n_a,
                plan.achieved_reliability)
    return plan
