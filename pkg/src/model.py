"""Giao thức tần số, hệ đơn vị và trạng thái nhiệt ban đầu của ion."""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import constants
from scipy.interpolate import PchipInterpolator, interp1d

from errors import (
    DegenerateProtocol,
    InvalidInput,
    InvalidTemperature,
    NonPositiveFrequency,
    OutOfDomain,
    ProtocolError,
)

logger = logging.getLogger(__name__)

# Khối lượng ion ⁹Be⁺ (amu), mặc định cho cấu hình SI
BERYLLIUM_MASS_AMU = 9.012182


@dataclass(frozen=True)
class UnitSystem:
    """Hệ đơn vị: SI hoặc không thứ nguyên (ℏ = m = k_B = 1, tần số theo đơn vị w0)."""
    mode: str = "si"
    hbar: float = constants.hbar
    k_b: float = constants.k
    mass: float = BERYLLIUM_MASS_AMU * constants.atomic_mass
    reference_frequency: float = 1.0
    si_mass: float = BERYLLIUM_MASS_AMU * constants.atomic_mass

    @classmethod
    def si(cls, mass: Optional[float] = None) -> "UnitSystem":
        m = BERYLLIUM_MASS_AMU * constants.atomic_mass if mass is None else float(mass)
        return cls(mode="si", mass=m, si_mass=m)

    @classmethod
    def dimensionless(cls, reference_frequency: float = 1.0,
                      si_mass: Optional[float] = None) -> "UnitSystem":
        if reference_frequency <= 0:
            raise InvalidInput("Tần số tham chiếu phải dương")
        m = BERYLLIUM_MASS_AMU * constants.atomic_mass if si_mass is None else float(si_mass)
        return cls(mode="dimensionless", hbar=1.0, k_b=1.0, mass=1.0,
                   reference_frequency=float(reference_frequency), si_mass=m)

    @property
    def is_dimensionless(self) -> bool:
        return self.mode == "dimensionless"

    def scale(self, quantity: str) -> float:
        """Giá trị SI của một đơn vị không thứ nguyên cho đại lượng đã cho."""
        if not self.is_dimensionless:
            return 1.0
        w = self.reference_frequency
        scales = {
            "frequency": w,
            "time": 1.0 / w,
            "energy": constants.hbar * w,
            "temperature": constants.hbar * w / constants.k,
            "mass": self.si_mass,
            "length": math.sqrt(constants.hbar / (self.si_mass * w)),
            "momentum": math.sqrt(constants.hbar * self.si_mass * w),
        }
        if quantity not in scales:
            raise InvalidInput(f"Đại lượng không hỗ trợ: {quantity}")
        return scales[quantity]

    def to_dimensionless(self, value, quantity: str):
        return value / self.scale(quantity)

    def to_si(self, value, quantity: str):
        return value * self.scale(quantity)

    def to_dict(self) -> Dict:
        return {"mode": self.mode, "hbar": self.hbar, "k_b": self.k_b,
                "mass": self.mass, "reference_frequency": self.reference_frequency}


def _check_positive(tau, omega_sq):
    values = np.asarray(omega_sq, dtype=float)
    bad = ~(values > 0)
    if np.any(bad):
        taus = np.broadcast_to(np.asarray(tau, dtype=float), values.shape)
        idx = np.flatnonzero(bad.ravel())[0]
        raise NonPositiveFrequency(float(taus.ravel()[idx]), float(values.ravel()[idx]))
    return omega_sq


class FrequencyProtocol:
    """Giao diện chung: w²(τ) theo thời gian không thứ nguyên τ."""
    kind = "base"

    @property
    def time_scale(self) -> float:
        """Thang thời gian của τ (rad/s hoặc đơn vị w0): τ = time_scale · t."""
        raise NotImplementedError

    @property
    def initial_frequency(self) -> float:
        return math.sqrt(float(self.omega_squared(0.0)))

    def _raw_omega_squared(self, tau):
        raise NotImplementedError

    def omega_squared(self, tau):
        return _check_positive(tau, self._raw_omega_squared(tau))

    def frequency(self, tau):
        return np.sqrt(self.omega_squared(tau))

    def reduced_omega_squared(self, tau):
        """Hệ số Ω² = w²/time_scale² của phương trình theo τ."""
        return self.omega_squared(tau) / self.time_scale ** 2

    def breakpoints(self, tau_end: float) -> List[float]:
        return []

    def validate(self, tau_end: float) -> None:
        if not tau_end > 0:
            raise InvalidInput(f"τ_end phải dương, nhận {tau_end!r}")
        grid = np.linspace(0.0, tau_end, 2001)
        self.omega_squared(grid)

    def rescaled(self, factor: float) -> "FrequencyProtocol":
        """Bản sao với mọi tần số nhân với factor (đổi đơn vị)."""
        raise NotImplementedError

    def to_dict(self) -> Dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantProtocol(FrequencyProtocol):
    w0: float
    kind = "constant"

    def __post_init__(self):
        if not self.w0 > 0:
            raise NonPositiveFrequency(0.0, self.w0)

    @property
    def time_scale(self):
        return self.w0

    @property
    def initial_frequency(self):
        return self.w0

    def _raw_omega_squared(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), self.w0 ** 2)[()]

    def validate(self, tau_end):
        if not tau_end > 0:
            raise InvalidInput(f"τ_end phải dương, nhận {tau_end!r}")

    def rescaled(self, factor):
        return replace(self, w0=self.w0 * factor)

    def to_dict(self):
        return {"kind": self.kind, "w0": self.w0}


@dataclass(frozen=True)
class MathieuProtocol(FrequencyProtocol):
    """w² = φ²(ā − 2q̄ cos 2τ) với τ = φ t."""
    a_bar: float
    q_bar: float
    phi: float = 1.0
    kind = "mathieu"

    @classmethod
    def from_initial_frequency(cls, w0: float, a_bar: float, q_bar: float) -> "MathieuProtocol":
        return cls(a_bar=a_bar, q_bar=q_bar, phi=mathieu_scale(w0, a_bar, q_bar))

    @property
    def time_scale(self):
        return self.phi

    @property
    def initial_frequency(self):
        return self.phi * math.sqrt(self.a_bar - 2.0 * self.q_bar)

    def _raw_omega_squared(self, tau):
        return self.phi ** 2 * (self.a_bar - 2.0 * self.q_bar * np.cos(2.0 * np.asarray(tau, dtype=float)))[()]

    def reduced_omega_squared(self, tau):
        return _check_positive(tau, (self.a_bar - 2.0 * self.q_bar * np.cos(2.0 * np.asarray(tau, dtype=float)))[()])

    def validate(self, tau_end):
        if not tau_end > 0:
            raise InvalidInput(f"τ_end phải dương, nhận {tau_end!r}")
        if not self.phi > 0:
            raise ProtocolError(f"φ phải dương, nhận {self.phi!r}")
        if self.a_bar - 2.0 * self.q_bar <= 0:
            raise DegenerateProtocol(f"ā − 2q̄ = {self.a_bar - 2.0 * self.q_bar:g} ≤ 0")
        # cực tiểu của ā − 2q̄ cos 2τ trên [0, τ_end]
        tau_min = 0.0 if self.q_bar >= 0 else min(tau_end, math.pi / 2)
        self.omega_squared(tau_min)

    def rescaled(self, factor):
        return replace(self, phi=self.phi * factor)

    def to_dict(self):
        return {"kind": self.kind, "a_bar": self.a_bar, "q_bar": self.q_bar, "phi": self.phi}


@dataclass(frozen=True)
class LinearRampProtocol(FrequencyProtocol):
    """w tăng tuyến tính từ w0 tới w1 trong τ ∈ [0, τ_ramp], sau đó giữ w1."""
    w0: float
    w1: float
    tau_ramp: float
    kind = "linear_ramp"

    def __post_init__(self):
        if not (self.w0 > 0 and self.w1 > 0):
            raise NonPositiveFrequency(0.0, min(self.w0, self.w1))
        if not self.tau_ramp > 0:
            raise ProtocolError(f"τ_ramp phải dương, nhận {self.tau_ramp!r}")

    @property
    def time_scale(self):
        return self.w0

    @property
    def initial_frequency(self):
        return self.w0

    def _raw_omega_squared(self, tau):
        s = np.clip(np.asarray(tau, dtype=float) / self.tau_ramp, 0.0, 1.0)
        return ((self.w0 + (self.w1 - self.w0) * s) ** 2)[()]

    def breakpoints(self, tau_end):
        return [self.tau_ramp] if self.tau_ramp < tau_end else []

    def rescaled(self, factor):
        return replace(self, w0=self.w0 * factor, w1=self.w1 * factor)

    def to_dict(self):
        return {"kind": self.kind, "w0": self.w0, "w1": self.w1, "tau_ramp": self.tau_ramp}


@dataclass(frozen=True)
class SuddenJumpProtocol(FrequencyProtocol):
    """w² = w0² với τ < τ_jump, w1² với τ ≥ τ_jump."""
    w0: float
    w1: float
    tau_jump: float
    kind = "sudden_jump"

    def __post_init__(self):
        if not (self.w0 > 0 and self.w1 > 0):
            raise NonPositiveFrequency(self.tau_jump, min(self.w0, self.w1))
        if self.tau_jump < 0:
            raise ProtocolError(f"τ_jump phải không âm, nhận {self.tau_jump!r}")

    @property
    def time_scale(self):
        return self.w0

    @property
    def initial_frequency(self):
        return self.w0

    def _raw_omega_squared(self, tau):
        t = np.asarray(tau, dtype=float)
        return np.where(t < self.tau_jump, self.w0 ** 2, self.w1 ** 2)[()]

    def breakpoints(self, tau_end):
        return [self.tau_jump] if 0.0 < self.tau_jump < tau_end else []

    def rescaled(self, factor):
        return replace(self, w0=self.w0 * factor, w1=self.w1 * factor)

    def to_dict(self):
        return {"kind": self.kind, "w0": self.w0, "w1": self.w1, "tau_jump": self.tau_jump}


@dataclass(frozen=True)
class TabulatedProtocol(FrequencyProtocol):
    """Các mẫu (τ, w²) nội suy PCHIP (đơn điệu) hoặc tuyến tính."""
    taus: Tuple[float, ...]
    omega_sq: Tuple[float, ...]
    interpolation: str = "pchip"
    scale: Optional[float] = None
    kind = "tabulated"
    _interp: object = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        values = np.asarray(self.omega_sq, dtype=float)
        if taus.ndim != 1 or taus.shape != values.shape or taus.size < 2:
            raise ProtocolError("Cần ít nhất 2 mẫu (τ, w²) cùng độ dài")
        if np.any(np.diff(taus) <= 0):
            raise ProtocolError("Các mẫu τ phải tăng nghiêm ngặt")
        _check_positive(taus, values)
        if self.interpolation == "pchip":
            interp = PchipInterpolator(taus, values, extrapolate=False)
        elif self.interpolation == "linear":
            interp = interp1d(taus, values, kind="linear", assume_sorted=True)
        else:
            raise ProtocolError(f"Kiểu nội suy không hỗ trợ: {self.interpolation}")
        object.__setattr__(self, "taus", tuple(float(t) for t in taus))
        object.__setattr__(self, "omega_sq", tuple(float(v) for v in values))
        object.__setattr__(self, "_interp", interp)

    @property
    def time_scale(self):
        if self.scale is not None:
            return self.scale
        return self.initial_frequency

    def _raw_omega_squared(self, tau):
        t = np.asarray(tau, dtype=float)
        low, high = self.taus[0], self.taus[-1]
        outside = (t < low) | (t > high)
        if np.any(outside):
            bad = float(t) if t.ndim == 0 else float(t[outside][0])
            raise OutOfDomain(bad, low, high)
        return np.asarray(self._interp(t), dtype=float)[()]

    def breakpoints(self, tau_end):
        # w² chỉ liên tục bậc nhất (PCHIP) hoặc bậc không (tuyến tính) tại các mốc
        return [t for t in self.taus if 0.0 < t < tau_end]

    def validate(self, tau_end):
        if self.taus[0] > 0.0:
            raise OutOfDomain(0.0, self.taus[0], self.taus[-1])
        if tau_end > self.taus[-1]:
            raise OutOfDomain(tau_end, self.taus[0], self.taus[-1])
        super().validate(tau_end)

    def rescaled(self, factor):
        scale = None if self.scale is None else self.scale * factor
        return TabulatedProtocol(self.taus, tuple(v * factor ** 2 for v in self.omega_sq),
                                 self.interpolation, scale)

    def to_dict(self):
        return {"kind": self.kind, "samples": len(self.taus),
                "interpolation": self.interpolation, "time_scale": self.time_scale}


def omega_squared(protocol: FrequencyProtocol, tau):
    """w²(τ) của giao thức; lỗi nếu w² ≤ 0 hoặc τ ngoài miền."""
    return protocol.omega_squared(tau)


def mathieu_scale(w0: float, a_bar: float, q_bar: float) -> float:
    """φ = w0/√(ā − 2q̄) để w(τ=0) = w0."""
    d = a_bar - 2.0 * q_bar
    if d <= 0:
        raise DegenerateProtocol(f"ā − 2q̄ = {d:g} ≤ 0, w(0) không thực")
    return w0 / math.sqrt(d)


def to_units(protocol: FrequencyProtocol, units: UnitSystem) -> FrequencyProtocol:
    """Chuyển giao thức cho bằng SI sang hệ đơn vị units."""
    return protocol.rescaled(1.0 / units.scale("frequency"))


@dataclass(frozen=True)
class ThermalConfig:
    w0: float
    temperature: float
    nbar: float
    beta: float
    e0: float
    units: UnitSystem = field(default_factory=UnitSystem.si)

    def to_dict(self) -> Dict:
        return {"w0": self.w0, "temperature": self.temperature, "nbar": self.nbar,
                "beta": self.beta, "e0": self.e0, "units": self.units.mode}


def thermal_config(w0: float, temperature: float,
                   units: Optional[UnitSystem] = None) -> ThermalConfig:
    """Trạng thái nhiệt: n̄ = 1/(exp(βℏw0) − 1), E0 = ℏw0(n̄ + ½)."""
    units = units or UnitSystem.si()
    if not w0 > 0:
        raise InvalidInput(f"w0 phải dương, nhận {w0!r}")
    if not (temperature >= 0) or math.isinf(temperature):
        raise InvalidTemperature(f"Nhiệt độ không hợp lệ: {temperature!r}")
    quantum = units.hbar * w0
    if temperature == 0:
        return ThermalConfig(w0, 0.0, 0.0, math.inf, quantum / 2.0, units)
    beta = 1.0 / (units.k_b * temperature)
    with np.errstate(over="ignore"):
        nbar = float(1.0 / np.expm1(beta * quantum))
    return ThermalConfig(w0, float(temperature), nbar, beta, quantum * (nbar + 0.5), units)


def thermal_config_from_nbar(w0: float, nbar: float,
                             units: Optional[UnitSystem] = None) -> ThermalConfig:
    """Nghịch đảo hệ số Bose: T = ℏw0 / (k_B ln(1 + 1/n̄))."""
    units = units or UnitSystem.si()
    if not w0 > 0:
        raise InvalidInput(f"w0 phải dương, nhận {w0!r}")
    if not nbar >= 0 or math.isinf(nbar):
        raise InvalidInput(f"n̄ phải không âm, nhận {nbar!r}")
    quantum = units.hbar * w0
    if nbar == 0:
        return ThermalConfig(w0, 0.0, 0.0, math.inf, quantum / 2.0, units)
    beta = math.log1p(1.0 / nbar) / quantum
    temperature = 1.0 / (units.k_b * beta)
    return ThermalConfig(w0, temperature, float(nbar), beta, quantum * (nbar + 0.5), units)


def thermal_in_units(thermal: ThermalConfig, units: UnitSystem) -> ThermalConfig:
    """Chuyển ThermalConfig SI sang hệ đơn vị units (giữ nguyên n̄)."""
    if thermal.units.is_dimensionless:
        raise InvalidInput("ThermalConfig nguồn phải ở hệ SI")
    w0 = units.to_dimensionless(thermal.w0, "frequency")
    return thermal_config_from_nbar(w0, thermal.nbar, units)

