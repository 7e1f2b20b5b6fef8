"""Tích phân các nghiệm cơ bản u(τ), v̄(τ) của ü + Ω²(τ)u = 0."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from errors import GrowthOverflow, IdentityViolation, InvalidInput, NonPositiveFrequency, StepFailure
from model import FrequencyProtocol

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-11
DEFAULT_SAMPLES = 2000
DEFAULT_RK4_STEP = 1e-3
OVERFLOW_LIMIT = 1e12
TOLERANCE_RANGE = (1e-13, 1e-4)
# cửa sổ dài hơn thì tolerance được siết tỉ lệ để độ trôi Wronskian vẫn ≤ 100 × tolerance
LONG_WINDOW = 20.0 * math.pi
INITIAL_VECTOR = np.array([1.0, 0.0, 0.0, 1.0])


@dataclass(frozen=True)
class FundamentalState:
    """(u, u̇, v̄, v̄̇) tại τ; các trường có thể là mảng numpy cùng kích thước."""
    tau: object
    u: object
    du: object
    v: object
    dv: object

    @classmethod
    def initial(cls, tau: float = 0.0) -> "FundamentalState":
        return cls(tau, 1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_vector(cls, tau, y) -> "FundamentalState":
        y = np.asarray(y, dtype=float)
        return cls(tau, y[0], y[1], y[2], y[3])

    def as_vector(self) -> np.ndarray:
        return np.array([self.u, self.du, self.v, self.dv], dtype=float)


def wronskian(state: FundamentalState):
    """u·v̄̇ − u̇·v̄ (bằng 1 với mọi nghiệm đúng)."""
    return state.u * state.dv - state.du * state.v


def wronskian_residual(state: FundamentalState):
    """|W − 1| chia cho độ lớn các số hạng, dùng được cả khi nghiệm tăng trưởng mũ."""
    scale = np.maximum(1.0, np.abs(state.u * state.dv) + np.abs(state.du * state.v))
    return np.abs(wronskian(state) - 1.0) / scale


def sudden_jump_state(w0: float, w1: float, tau: float = 0.0) -> FundamentalState:
    """Xấp xỉ đột ngột: toán tử tiến hoá là đồng nhất, trạng thái giữ (1, 0, 0, 1)."""
    if not (w0 > 0 and w1 > 0):
        raise NonPositiveFrequency(tau, min(w0, w1))
    return FundamentalState.initial(tau)


@dataclass
class Trajectory:
    taus: np.ndarray
    states: np.ndarray
    protocol: Optional[FrequencyProtocol] = None
    metadata: Dict = field(default_factory=dict)

    def __len__(self):
        return len(self.taus)

    def __getitem__(self, i) -> FundamentalState:
        return FundamentalState.from_vector(self.taus[i], self.states[i])

    @property
    def u(self):
        return self.states[:, 0]

    @property
    def du(self):
        return self.states[:, 1]

    @property
    def v(self):
        return self.states[:, 2]

    @property
    def dv(self):
        return self.states[:, 3]

    @property
    def final(self) -> FundamentalState:
        return self[-1]

    def as_state(self) -> FundamentalState:
        """Toàn bộ quỹ đạo dưới dạng một FundamentalState chứa mảng."""
        return FundamentalState(self.taus, self.u, self.du, self.v, self.dv)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"tau": self.taus, "u": self.u, "du": self.du,
                             "v": self.v, "dv": self.dv})


def _make_rhs(omega_sq: Callable, lo: float, hi: float):
    # τ bị kẹp vào [lo, hi) để không bao giờ đánh giá qua điểm gián đoạn
    top = np.nextafter(hi, lo)

    def rhs(tau, y):
        w2 = float(omega_sq(min(max(tau, lo), top)))
        return np.array([y[1], -w2 * y[0], y[3], -w2 * y[2]])
    return rhs


def _overflow_event(limit: float):
    def event(tau, y):
        return limit - max(abs(y[0]), abs(y[2]))
    event.terminal = True
    event.direction = -1
    return event


def _adaptive_segment(omega_sq, y0, lo, hi, start, stop, t_eval, tolerance, limit):
    sol = solve_ivp(
        _make_rhs(omega_sq, lo, hi), (start, stop), y0,
        method="DOP853", rtol=tolerance, atol=tolerance,
        t_eval=t_eval, events=_overflow_event(limit),
    )
    if sol.status == 1:
        raise GrowthOverflow(sol.t_events[0][0], limit)
    if sol.status != 0:
        raise StepFailure(f"Bộ tích phân thất bại trên [{start:g}, {stop:g}]: {sol.message}")
    return sol


def _rk4_advance(rhs, y, t0, t1, step, limit):
    delta = t1 - t0
    if delta == 0:
        return y
    n = max(1, math.ceil(abs(delta) / step - 1e-9))
    h = delta / n
    t = t0
    for _ in range(n):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if not max(abs(y[0]), abs(y[2])) <= limit:
            raise GrowthOverflow(t, limit)
    return y


def _segments(edges: Sequence[float]):
    return list(zip(edges[:-1], edges[1:]))


def _check_tolerance(tolerance):
    low, high = TOLERANCE_RANGE
    if not low <= tolerance <= high:
        raise InvalidInput(f"tolerance = {tolerance:g} ngoài khoảng [{low:g}, {high:g}]")


def _window_tolerance(tolerance: float, tau_end: float) -> float:
    """Tolerance thực dùng cho DOP853 trên [0, τ_end]."""
    if tau_end <= LONG_WINDOW:
        return tolerance
    return max(TOLERANCE_RANGE[0], tolerance * LONG_WINDOW / tau_end)


def integrate(protocol: FrequencyProtocol, tau_end: float,
              output_grid: Optional[Sequence[float]] = None,
              tolerance: float = DEFAULT_TOLERANCE, method: str = "adaptive",
              step: float = DEFAULT_RK4_STEP,
              overflow_limit: float = OVERFLOW_LIMIT) -> Trajectory:
    """Tích phân (u, u̇, v̄, v̄̇) từ (1, 0, 0, 1) tới τ_end, lấy mẫu trên output_grid."""
    if not tau_end > 0:
        raise InvalidInput(f"τ_end phải dương, nhận {tau_end!r}")
    _check_tolerance(tolerance)
    if method not in ("adaptive", "rk4"):
        raise InvalidInput(f"Phương pháp không hỗ trợ: {method}")
    if method == "rk4" and not step > 0:
        raise InvalidInput(f"Bước RK4 phải dương, nhận {step!r}")
    protocol.validate(tau_end)

    if output_grid is None:
        grid = np.linspace(0.0, tau_end, DEFAULT_SAMPLES)
    else:
        grid = np.asarray(output_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise InvalidInput("Lưới xuất phải là dãy một chiều khác rỗng")
        if np.any(np.diff(grid) <= 0):
            raise InvalidInput("Lưới xuất phải tăng nghiêm ngặt")
        if grid[0] < 0 or grid[-1] > tau_end:
            raise InvalidInput(f"Lưới xuất phải nằm trong [0, {tau_end:g}]")
        if grid[0] > 0:
            grid = np.concatenate([[0.0], grid])

    omega_sq = protocol.reduced_omega_squared
    solver_tolerance = _window_tolerance(tolerance, tau_end)
    edges = [0.0] + sorted(b for b in protocol.breakpoints(tau_end) if 0.0 < b < tau_end) + [float(tau_end)]
    states = np.empty((grid.size, 4))
    y = INITIAL_VECTOR.copy()
    nfev = 0
    for k, (lo, hi) in enumerate(_segments(edges)):
        last = k == len(edges) - 2
        mask = (grid >= lo) & ((grid <= hi) if last else (grid < hi))
        points = grid[mask]
        if method == "adaptive":
            # điểm đầu của đoạn được gán trực tiếp, solve_ivp chỉ xuất các điểm sau đó
            inner = points[points > lo]
            t_eval = inner if inner.size and inner[-1] == hi else np.append(inner, hi)
            sol = _adaptive_segment(omega_sq, y, lo, hi, lo, hi, t_eval,
                                    solver_tolerance, overflow_limit)
            nfev += sol.nfev
            values = dict(zip(sol.t, sol.y.T))
            for idx in np.flatnonzero(mask):
                states[idx] = y if grid[idx] == lo else values[grid[idx]]
            y = sol.y[:, -1].copy()
        else:
            rhs = _make_rhs(omega_sq, lo, hi)
            current = lo
            inner = points[points > lo]
            stops = list(inner) if inner.size and inner[-1] == hi else list(inner) + [hi]
            row = np.flatnonzero(mask)
            if points.size and points[0] == lo:
                states[row[0]] = y
                row = row[1:]
            r = 0
            for target in stops:
                y = _rk4_advance(rhs, y, current, target, step, overflow_limit)
                current = target
                if r < row.size and grid[row[r]] == target:
                    states[row[r]] = y
                    r += 1

    if not np.all(np.isfinite(states)):
        raise StepFailure("Quỹ đạo chứa giá trị không hữu hạn")
    trajectory = Trajectory(grid, states, protocol)
    drift = wronskian_residual(trajectory.as_state())
    trajectory.metadata = {
        "method": method,
        "tolerance": tolerance,
        "solver_tolerance": solver_tolerance if method == "adaptive" else None,
        "step": step if method == "rk4" else None,
        "segments": len(edges) - 1,
        "nfev": nfev,
        "samples": int(grid.size),
        "max_wronskian_drift": float(np.max(drift)),
    }
    if method == "adaptive" and trajectory.metadata["max_wronskian_drift"] > 100 * tolerance:
        raise IdentityViolation("u v̄̇ − u̇ v̄ = 1", trajectory.metadata["max_wronskian_drift"], 100 * tolerance)
    logger.debug(f"Tích phân xong {grid.size} mẫu trên [0, {tau_end:g}], nfev = {nfev}")
    return trajectory


def propagate(omega_sq: Callable, y0: Sequence[float], tau_start: float, tau_end: float,
              tolerance: float = DEFAULT_TOLERANCE,
              breakpoints: Sequence[float] = (),
              overflow_limit: float = OVERFLOW_LIMIT) -> np.ndarray:
    """Đưa vectơ (u, u̇, v̄, v̄̇) từ τ_start tới τ_end (có thể lùi thời gian)."""
    _check_tolerance(tolerance)
    y = np.asarray(y0, dtype=float).copy()
    if tau_end == tau_start:
        return y
    lo_all, hi_all = min(tau_start, tau_end), max(tau_start, tau_end)
    edges = [lo_all] + sorted(b for b in breakpoints if lo_all < b < hi_all) + [hi_all]
    pieces = _segments(edges)
    if tau_end < tau_start:
        pieces = pieces[::-1]
    for lo, hi in pieces:
        start, stop = (lo, hi) if tau_end > tau_start else (hi, lo)
        sol = _adaptive_segment(omega_sq, y, lo, hi, start, stop, None, tolerance, overflow_limit)
        y = sol.y[:, -1].copy()
    return y
