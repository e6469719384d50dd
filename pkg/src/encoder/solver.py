import logging
from typing import Dict, NamedTuple, Optional, Union

import numpy as np
from scipy import optimize

from src.errors import EndOfWindow, ParameterError
from src.signals.grid import FineGrid
from src.signals.model import BandlimitedSignal

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Numerical floor for the running signal energy
ENERGY_FLOOR = 1e-300

INITIAL_CHUNK = 16
MAX_CHUNK = 4096

# Shortest admissible firing interval, as a fraction of the fine-grid spacing
MIN_STEP_FRACTION = 1e-3


class Point(NamedTuple):
    """Accumulator state at one or more instants after a firing."""
    t: Union[float, np.ndarray]
    signal: Union[float, np.ndarray]
    e: Union[float, np.ndarray]
    d: Union[float, np.ndarray]
    g: Union[float, np.ndarray]
    gp: Union[float, np.ndarray]


class Firing(NamedTuple):
    """A located firing and the interval quantities at that instant."""
    t: float
    signal_integral: float
    e: float
    d: float
    bias_integral: float
    threshold: float
    # True when the crossing fell inside the minimum step and the firing was placed at its end
    floored: bool = False


class IntervalContext:
    """
    Running integrals since the firing at t_n.

    All quantities are differences of fine-grid cumulative integrals, so the
    accumulators reset to exactly zero at t_n.

    Args:
        grid: FineGrid of the encoded signal
        t_n: Last firing instant
        shift: Constant s added to the signal inside the energy accumulator
    """

    def __init__(self, grid: FineGrid, t_n: float, shift: float = 0.0):
        self.grid = grid
        self.t_n = t_n
        self.shift = shift
        self.k0 = grid.node_index(t_n)
        _, _, self._F = grid.tables("signal")
        self._g, self._gp, self._P = grid.tables("energy", shift)
        _, _, self._Q = grid.tables("derivative_energy")
        self.f0 = grid.cumulative_at("signal", t_n)
        self.p0 = grid.cumulative_at("energy", t_n, shift)
        self.q0 = grid.cumulative_at("derivative_energy", t_n)

    def start(self) -> Point:
        g, gp = self.grid.integrand_at("energy", self.t_n, self.shift)
        return Point(self.t_n, 0.0, 0.0, 0.0, g, gp)

    def at(self, t: float) -> Point:
        grid = self.grid
        g, gp = grid.integrand_at("energy", t, self.shift)
        return Point(
            t,
            grid.cumulative_at("signal", t) - self.f0,
            max(grid.cumulative_at("energy", t, self.shift) - self.p0, 0.0),
            max(grid.cumulative_at("derivative_energy", t) - self.q0, 0.0),
            g, gp,
        )

    def nodes(self, idx: np.ndarray) -> Point:
        return Point(
            self.grid.t[idx],
            self._F[idx] - self.f0,
            np.maximum(self._P[idx] - self.p0, 0.0),
            np.maximum(self._Q[idx] - self.q0, 0.0),
            self._g[idx],
            self._gp[idx],
        )

    def first_node(self) -> int:
        """Index of the first grid node strictly after t_n."""
        j = self.k0 + 1
        while j <= self.grid.n_cells and self.grid.t[j] <= self.t_n:
            j += 1
        return j


def _chain(left: Point, nodes: Point) -> Point:
    return Point(*(np.concatenate(([a], b)) for a, b in zip(left, nodes)))


class ConstantBias:
    """Bias b held constant over the interval."""

    def __init__(self, bias: float):
        self.bias = bias

    def segments(self, left: Point, right: Point):
        return self.bias * (right.t - left.t)

    def describe(self) -> Dict[str, float]:
        return {"bias": self.bias}


class EnergyBias:
    """
    Bias c + 1 / (pi sqrt(alpha e_n + gamma1^2)) driven by the running energy e_n.

    The bias is added to the shifted signal f + s, so the firing integrand is
    f + s + c + 1 / (pi sqrt(alpha e_n + gamma1^2)).

    When f + s stays away from zero (s > c) each segment is integrated in the
    variable z = sqrt(alpha e_n + gamma1^2), where the integrand 2 / (alpha (f + s)^2)
    is smooth. Otherwise e_n is treated as linear on each segment and the
    inverse square root is integrated exactly.
    """

    def __init__(self, alpha: float, shift: float, c: float, gamma1: float = 0.0):
        self.alpha = alpha
        self.shift = shift
        self.c = c
        self.gamma1 = gamma1
        self.smooth = shift > c

    def _z(self, e):
        return np.sqrt(self.alpha * np.maximum(e, ENERGY_FLOOR) + self.gamma1 ** 2)

    def segments(self, left: Point, right: Point):
        du = right.t - left.t
        za, zb = self._z(left.e), self._z(right.e)
        if self.smooth:
            a2 = self.alpha ** 2
            phi_a = 2.0 / (self.alpha * left.g)
            phi_b = 2.0 / (self.alpha * right.g)
            dphi_a = -4.0 * za * left.gp / (a2 * left.g ** 3)
            dphi_b = -4.0 * zb * right.gp / (a2 * right.g ** 3)
            dz = zb - za
            inverse_root = dz * (phi_a + phi_b) / 2.0 + dz * dz * (dphi_a - dphi_b) / 12.0
        else:
            inverse_root = 2.0 * du / (za + zb)
        return self.c * du + inverse_root / np.pi

    def describe(self) -> Dict[str, float]:
        return {"alpha": self.alpha, "shift": self.shift, "c": self.c, "gamma1": self.gamma1}


class ConstantThreshold:
    """Threshold Delta held constant over the interval."""

    def __init__(self, threshold: float):
        self.threshold = threshold

    def value(self, e, d):
        return self.threshold

    def residual(self, integral, e, d):
        return integral / self.threshold - 1.0

    def describe(self) -> Dict[str, float]:
        return {"threshold": self.threshold}


class EnergyThreshold:
    """Threshold 1 / sqrt(d_n + beta e_n + gamma2^2); non-increasing as the energies grow."""

    def __init__(self, beta: float, gamma2: float = 0.0):
        self.beta = beta
        self.gamma2 = gamma2

    def _root(self, e, d):
        return np.sqrt(d + self.beta * e + self.gamma2 ** 2)

    def value(self, e, d):
        root = self._root(e, d)
        return np.inf if root == 0 else 1.0 / root

    def residual(self, integral, e, d):
        # integral * root - 1 stays finite at the reset instant
        return integral * self._root(e, d) - 1.0

    def describe(self) -> Dict[str, float]:
        return {"beta": self.beta, "gamma2": self.gamma2}


def _grid_of(signal: Union[BandlimitedSignal, FineGrid], oversample: int) -> FineGrid:
    return signal if isinstance(signal, FineGrid) else signal.fine_grid(oversample)


def find_next_firing(signal: Union[BandlimitedSignal, FineGrid], t_n: float, bias_law, threshold_law,
                     shift: float = 0.0, oversample: int = 64, xtol: Optional[float] = None) -> Firing:
    """
    Locate the first t > t_n where the running integral meets the threshold.

    The residual I(t) / Delta_n(t) - 1 is increasing, so the grid nodes are
    scanned forward in growing chunks until it turns non-negative and the
    bracketing cell is refined with Brent's method.

    No interval is shorter than MIN_STEP_FRACTION of the grid spacing. Where
    f(t_n) = 0 the running energy grows like (t - t_n)^3 and the unshifted
    bias integral meets the threshold immediately; such firings are placed at
    t_n plus the minimum step and flagged as floored.

    Args:
        signal: Signal (or its FineGrid) being encoded
        t_n: Last firing instant
        bias_law: ConstantBias or EnergyBias
        threshold_law: ConstantThreshold or EnergyThreshold
        shift: Constant s added to the signal in the firing integral
        oversample: Fine-grid points per Nyquist interval
        xtol: Absolute tolerance on the firing instant (default 1e-12 of the window length)

    Returns:
        Firing with the instant and the interval quantities

    Raises:
        EndOfWindow: No crossing before the window end
    """
    grid = _grid_of(signal, oversample)
    if xtol is None:
        xtol = 1e-12 * (grid.t_end - grid.t_start)
    ctx = IntervalContext(grid, t_n, shift)

    def integral_of(point: Point, bias):
        return point.signal + shift * (point.t - t_n) + bias

    left = ctx.start()
    t_floor = t_n + MIN_STEP_FRACTION * grid.dt
    if t_floor < grid.t_end:
        floor_point = ctx.at(t_floor)
        floor_bias = float(bias_law.segments(left, floor_point))
        if threshold_law.residual(integral_of(floor_point, floor_bias), floor_point.e, floor_point.d) >= 0.0:
            logger.debug(f"Firing after t={t_n:.12g} held to the minimum step")
            return _firing(floor_point, floor_bias, threshold_law, floored=True)

    carry = 0.0
    j = ctx.first_node()
    chunk = INITIAL_CHUNK
    while j <= grid.n_cells:
        idx = np.arange(j, min(j + chunk, grid.n_cells + 1))
        path = _chain(left, ctx.nodes(idx))
        prev = Point(*(a[:-1] for a in path))
        cur = Point(*(a[1:] for a in path))
        bias = carry + np.cumsum(bias_law.segments(prev, cur))
        rho = threshold_law.residual(integral_of(cur, bias), cur.e, cur.d)
        hit = np.flatnonzero(rho >= 0.0)
        if hit.size:
            m = int(hit[0])
            lo = Point(*(float(a[m]) for a in prev))
            lo_bias = carry if m == 0 else float(bias[m - 1])
            return _refine(ctx, lo, lo_bias, float(cur.t[m]), bias_law, threshold_law, integral_of, xtol,
                           t_floor)
        left = Point(*(float(a[-1]) for a in cur))
        carry = float(bias[-1])
        j = int(idx[-1]) + 1
        chunk = min(2 * chunk, MAX_CHUNK)

    raise EndOfWindow(f"no firing after t={t_n:.12g} before the window end {grid.t_end:.12g}")


def _firing(point: Point, bias: float, threshold_law, floored: bool = False) -> Firing:
    return Firing(
        t=float(point.t),
        signal_integral=float(point.signal),
        e=float(point.e),
        d=float(point.d),
        bias_integral=float(bias),
        threshold=float(threshold_law.value(point.e, point.d)),
        floored=floored,
    )


def _refine(ctx: IntervalContext, lo: Point, lo_bias: float, t_hi: float, bias_law, threshold_law,
            integral_of, xtol: float, t_floor: float) -> Firing:
    def state(t: float):
        point = lo if t == lo.t else ctx.at(t)
        bias = lo_bias + float(bias_law.segments(lo, point))
        return point, bias

    def rho(t: float) -> float:
        point, bias = state(t)
        return float(threshold_law.residual(integral_of(point, bias), point.e, point.d))

    # Short intervals need a tolerance relative to their length
    xtol = min(xtol, 1e-9 * (t_hi - ctx.t_n))
    rho_lo, rho_hi = rho(lo.t), rho(t_hi)
    if rho_lo >= 0.0 and lo.t > ctx.t_n:
        root = lo.t
    elif rho_hi <= 0.0:
        root = t_hi
    else:
        root = optimize.brentq(rho, lo.t, t_hi, xtol=xtol)

    if root < t_floor:
        if t_floor > t_hi:
            raise EndOfWindow(f"no room for a firing after t={ctx.t_n:.12g} before the window end")
        logger.debug(f"Firing after t={ctx.t_n:.12g} held to the minimum step")
        point, bias = state(t_floor)
        return _firing(point, bias, threshold_law, floored=True)

    point, bias = state(root)
    return _firing(point, bias, threshold_law)


def solve_next_firing(signal: Union[BandlimitedSignal, FineGrid], t_n: float, bias_law, threshold_law,
                      shift: float = 0.0, oversample: int = 64) -> float:
    """Next firing instant after t_n in seconds; raises EndOfWindow when none exists."""
    return find_next_firing(signal, t_n, bias_law, threshold_law, shift=shift, oversample=oversample).t


def integral_trace(signal: Union[BandlimitedSignal, FineGrid], t_n: float, t_stop: float, bias_law,
                   threshold_law, shift: float = 0.0, oversample: int = 64) -> Dict[str, np.ndarray]:
    """
    Running integral I(t) and threshold Delta_n(t) on the grid nodes inside (t_n, t_stop].

    Returns:
        Dict of arrays 't', 'integral', 'threshold' and 'residual'
    """
    grid = _grid_of(signal, oversample)
    if t_stop <= t_n:
        raise ParameterError(f"trace needs t_stop > t_n, got [{t_n}, {t_stop}]")
    ctx = IntervalContext(grid, t_n, shift)
    j = ctx.first_node()
    idx = np.arange(j, grid.n_cells + 1)
    idx = idx[grid.t[idx] < t_stop]
    path = _chain(ctx.start(), ctx.nodes(idx))
    end = ctx.at(t_stop)
    path = Point(*(np.append(a, b) for a, b in zip(path, end)))
    prev = Point(*(a[:-1] for a in path))
    cur = Point(*(a[1:] for a in path))
    bias = np.cumsum(bias_law.segments(prev, cur))
    integral = cur.signal + shift * (cur.t - t_n) + bias
    threshold = np.array([threshold_law.value(e, d) for e, d in zip(cur.e, cur.d)], dtype=float)
    return {
        "t": np.asarray(cur.t, dtype=float),
        "integral": integral,
        "threshold": threshold,
        "residual": threshold_law.residual(integral, cur.e, cur.d),
    }
