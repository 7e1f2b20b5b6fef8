"""Đọc cấu hình TOML: các mục [protocol], [thermal], [simulation], [scan], [output]."""
import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from scipy import constants

from errors import ConfigError, SimulationError
from model import (
    BERYLLIUM_MASS_AMU,
    ConstantProtocol,
    FrequencyProtocol,
    LinearRampProtocol,
    MathieuProtocol,
    SuddenJumpProtocol,
    TabulatedProtocol,
    ThermalConfig,
    UnitSystem,
    mathieu_scale,
    thermal_config,
    thermal_config_from_nbar,
)

logger = logging.getLogger(__name__)

# Giá trị thực nghiệm: w0 = 2π·4 MHz, T = 1.42×10⁻⁴ K (n̄ ≈ 0.35)
DEFAULT_W0_HZ = 4.0e6
DEFAULT_TEMPERATURE_K = 1.42e-4
PROTOCOL_KINDS = ("constant", "mathieu", "linear_ramp", "sudden_jump", "tabulated")


def _from_section(cls, section: str, data: Dict):
    if not isinstance(data, dict):
        raise ConfigError(f"Mục [{section}] phải là bảng")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Khóa không hợp lệ trong [{section}]: {', '.join(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Giá trị không hợp lệ trong [{section}]: {e}") from e


def _number(section: str, name: str, value, positive: bool = False, allow_none: bool = True):
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"[{section}] {name} phải là số hữu hạn, nhận {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"[{section}] {name} phải dương, nhận {value!r}")


@dataclass(frozen=True)
class ProtocolSettings:
    kind: str = "mathieu"
    w0_hz: float = DEFAULT_W0_HZ
    w1_hz: Optional[float] = None
    a_bar: Optional[float] = None
    q_bar: Optional[float] = None
    phi_rad_s: Optional[float] = None
    tau_ramp: Optional[float] = None
    tau_jump: Optional[float] = None
    samples: Optional[List[List[float]]] = None
    interpolation: str = "pchip"
    time_scale_rad_s: Optional[float] = None

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ConfigError(f"[protocol] kind phải thuộc {PROTOCOL_KINDS}, nhận {self.kind!r}")
        _number("protocol", "w0_hz", self.w0_hz, positive=True, allow_none=False)
        for name in ("w1_hz", "phi_rad_s", "time_scale_rad_s", "tau_ramp"):
            _number("protocol", name, getattr(self, name), positive=True)
        for name in ("a_bar", "q_bar", "tau_jump"):
            _number("protocol", name, getattr(self, name))
        if self.interpolation not in ("pchip", "linear"):
            raise ConfigError("[protocol] interpolation phải là pchip hoặc linear")

    @property
    def w0(self) -> float:
        return 2.0 * math.pi * self.w0_hz

    def _require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"[protocol] kind = {self.kind} cần: {', '.join(missing)}")

    def build(self) -> FrequencyProtocol:
        """Giao thức ở hệ SI (rad/s)."""
        try:
            if self.kind == "constant":
                return ConstantProtocol(self.w0)
            if self.kind == "mathieu":
                self._require("a_bar", "q_bar")
                phi = self.phi_rad_s or mathieu_scale(self.w0, self.a_bar, self.q_bar)
                return MathieuProtocol(self.a_bar, self.q_bar, phi)
            if self.kind == "linear_ramp":
                self._require("w1_hz", "tau_ramp")
                return LinearRampProtocol(self.w0, 2.0 * math.pi * self.w1_hz, self.tau_ramp)
            if self.kind == "sudden_jump":
                self._require("w1_hz", "tau_jump")
                return SuddenJumpProtocol(self.w0, 2.0 * math.pi * self.w1_hz, self.tau_jump)
            self._require("samples")
            pairs = [tuple(p) for p in self.samples]
            if any(len(p) != 2 for p in pairs):
                raise ConfigError("[protocol] samples phải là danh sách cặp [τ, w²]")
            taus, omega_sq = zip(*pairs)
            return TabulatedProtocol(taus, omega_sq, self.interpolation, self.time_scale_rad_s)
        except ConfigError:
            raise
        except SimulationError as e:
            raise ConfigError(f"[protocol] không hợp lệ: {e}") from e


@dataclass(frozen=True)
class ThermalSettings:
    temperature_k: Optional[float] = None
    nbar: Optional[float] = None
    mass_amu: float = BERYLLIUM_MASS_AMU
    mean_position_m: float = 0.0
    mean_momentum_kg_m_s: float = 0.0

    def __post_init__(self):
        if self.temperature_k is not None and self.nbar is not None:
            raise ConfigError("[thermal] chỉ được đặt một trong temperature_k hoặc nbar")
        _number("thermal", "temperature_k", self.temperature_k)
        _number("thermal", "nbar", self.nbar)
        _number("thermal", "mass_amu", self.mass_amu, positive=True, allow_none=False)
        if self.mean_position_m != 0 or self.mean_momentum_kg_m_s != 0:
            raise ConfigError("[thermal] trạng thái dịch chuyển (⟨x⟩, ⟨p⟩ ≠ 0) không được hỗ trợ")

    @property
    def mass_kg(self) -> float:
        return self.mass_amu * constants.atomic_mass

    def build(self, w0: float) -> ThermalConfig:
        units = UnitSystem.si(self.mass_kg)
        try:
            if self.nbar is not None:
                return thermal_config_from_nbar(w0, self.nbar, units)
            temperature = DEFAULT_TEMPERATURE_K if self.temperature_k is None else self.temperature_k
            return thermal_config(w0, temperature, units)
        except SimulationError as e:
            raise ConfigError(f"[thermal] không hợp lệ: {e}") from e


@dataclass(frozen=True)
class SimulationSettings:
    tau_end: float = 12.0 * math.pi
    samples: int = 4000
    tolerance: float = 1e-11
    method: str = "adaptive"
    rk4_step: float = 1e-3
    units: str = "si"

    def __post_init__(self):
        _number("simulation", "tau_end", self.tau_end, positive=True, allow_none=False)
        _number("simulation", "tolerance", self.tolerance, positive=True, allow_none=False)
        _number("simulation", "rk4_step", self.rk4_step, positive=True, allow_none=False)
        if not isinstance(self.samples, int) or self.samples < 2:
            raise ConfigError("[simulation] samples phải là số nguyên ≥ 2")
        if self.method not in ("adaptive", "rk4"):
            raise ConfigError("[simulation] method phải là adaptive hoặc rk4")
        if self.units not in ("si", "dimensionless"):
            raise ConfigError("[simulation] units phải là si hoặc dimensionless")


@dataclass(frozen=True)
class ScanSettings:
    a_min: float = 0.0
    a_max: float = 14.0
    a_points: int = 29
    q_min: float = 0.0
    q_max: float = 3.0
    q_points: int = 13
    tolerance: float = 1e-11
    workers: int = 1

    def __post_init__(self):
        for name in ("a_min", "a_max", "q_min", "q_max"):
            _number("scan", name, getattr(self, name), allow_none=False)
        for name in ("a_points", "q_points", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"[scan] {name} phải là số nguyên dương")

    @property
    def a_range(self) -> Tuple[float, float]:
        return self.a_min, self.a_max

    @property
    def q_range(self) -> Tuple[float, float]:
        return self.q_min, self.q_max


@dataclass(frozen=True)
class OutputSettings:
    """Đường dẫn ghi kết quả; đường dẫn tương đối tính từ thư mục chứa file cấu hình."""
    path: Optional[str] = None
    summary_json: Optional[str] = None

    def __post_init__(self):
        for name in ("path", "summary_json"):
            value = getattr(self, name)
            if value is not None and (not isinstance(value, str) or not value.strip()):
                raise ConfigError(f"[output] {name} phải là chuỗi khác rỗng")


@dataclass(frozen=True)
class RunConfig:
    protocol: Optional[ProtocolSettings] = None
    thermal: ThermalSettings = field(default_factory=ThermalSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    scan: ScanSettings = field(default_factory=ScanSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    source: Optional[str] = None

    def require_protocol(self) -> ProtocolSettings:
        if self.protocol is None:
            raise ConfigError("Thiếu mục [protocol]")
        return self.protocol

    def output_path(self, name: str) -> Optional[Path]:
        """Đường dẫn [output] name, tương đối theo thư mục của file cấu hình."""
        value = getattr(self.output, name)
        if value is None:
            return None
        path = Path(value)
        if not path.is_absolute() and self.source is not None:
            path = Path(self.source).parent / path
        return path


SECTIONS = {
    "protocol": ProtocolSettings,
    "thermal": ThermalSettings,
    "simulation": SimulationSettings,
    "scan": ScanSettings,
    "output": OutputSettings,
}


def parse_config(data: Dict, source: Optional[str] = None) -> RunConfig:
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"Mục không hợp lệ: {', '.join(unknown)}")
    parts = {name: _from_section(cls, name, data[name]) for name, cls in SECTIONS.items() if name in data}
    return RunConfig(source=source, **parts)


def load_config(path) -> RunConfig:
    """Đọc file TOML và trả về RunConfig đã kiểm tra."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as e:
        raise ConfigError(f"Không tìm thấy file cấu hình: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Lỗi cú pháp TOML trong {path}: {e}") from e
    config = parse_config(data, str(path))
    logger.info(f"Đã tải cấu hình {path.name}")
    return config
