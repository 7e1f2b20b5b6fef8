"""Pipeline mô phỏng một lần chạy: giao thức → quỹ đạo → Q*, C, (r, θ, γ) → báo cáo CSV."""
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from config import RunConfig
from errors import SimulationError
from evolution_op import bar_q_triple, evolution_residual, fg_from_state, squeeze_params, squeezed_thermal
from heisenberg import (
    bogoliubov_r,
    classicality,
    covariance,
    critical_q,
    minimum_covariance_eigenvalue,
    q_triple,
    variances,
)
from integrator import Trajectory, integrate, wronskian_residual
from model import ThermalConfig, UnitSystem, thermal_in_units, to_units

logger = logging.getLogger(__name__)

TOOL_VERSION = "1.0.0"
HYPERBOLIC_LIMIT = 1e-8
FG_LIMIT = 1e-9

COLUMNS = [
    "tau", "w", "u", "du", "v", "dv",
    "q_star", "q1", "q2", "q_star_bar", "q1_bar", "q2_bar",
    "classicality", "n_h", "m_h_abs", "covariance_min_eigenvalue", "r", "theta", "gamma", "r_a",
    "beta_s", "mu", "energy", "lagrangian", "correlation", "dx2", "dp2",
    "nonclassical", "wronskian_residual", "hyperbolic_residual", "fg_residual",
]


def _first_tau(taus: np.ndarray, mask: np.ndarray) -> Optional[float]:
    idx = np.flatnonzero(mask)
    return float(taus[idx[0]]) if idx.size else None


def atomic_write_text(path, text: str) -> None:
    """Ghi qua file tạm cùng thư mục rồi os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def frame_to_csv(frame: pd.DataFrame, metadata: Optional[Dict] = None) -> str:
    """CSV với khối chú thích '#' chứa metadata (khóa sắp xếp, không có dấu thời gian)."""
    header = ""
    if metadata:
        header = "".join(f"# {key}: {json.dumps(metadata[key], sort_keys=True, default=float)}\n"
                         for key in sorted(metadata))
    return header + frame.to_csv(index=False, float_format="%.15g", lineterminator="\n")


def format_summary(summary: Dict) -> str:
    lines = []
    for key in sorted(summary):
        value = summary[key]
        if isinstance(value, float):
            value = f"{value:.10g}"
        elif value is None:
            value = "none"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def evaluate_trajectory(traj: Trajectory, thermal: ThermalConfig, mass: float) -> pd.DataFrame:
    """Mọi đại lượng trên từng mẫu của quỹ đạo."""
    protocol = traj.protocol
    state = traj.as_state()
    scale = protocol.time_scale
    w = np.sqrt(protocol.omega_squared(traj.taus))
    w0 = thermal.w0

    triple = q_triple(state, w0 / scale, w / scale)
    c = classicality(thermal.nbar, triple.q_star)
    cov = covariance(triple, thermal, w)
    eigenvalue = minimum_covariance_eigenvalue(state, thermal.nbar, w0 / scale, w / scale)
    f, g = fg_from_state(state, w0 / scale)
    r, theta, gamma = squeeze_params(f, g)
    r_a = bogoliubov_r(w0, w)
    bar = bar_q_triple(r, theta, r_a)
    squeezed = squeezed_thermal(thermal.beta, r, theta)
    dx2, dp2 = variances(state, thermal, mass, scale)

    frame = pd.DataFrame({
        "tau": traj.taus, "w": w,
        "u": traj.u, "du": traj.du, "v": traj.v, "dv": traj.dv,
        "q_star": triple.q_star, "q1": triple.q1, "q2": triple.q2,
        "q_star_bar": bar.q_star, "q1_bar": bar.q1, "q2_bar": bar.q2,
        "classicality": c, "n_h": cov.n_h, "m_h_abs": np.abs(cov.m_h),
        "covariance_min_eigenvalue": eigenvalue,
        "r": r, "theta": theta, "gamma": gamma, "r_a": r_a,
        "beta_s": squeezed.beta_s, "mu": squeezed.mu,
        "energy": cov.energy, "lagrangian": cov.lagrangian, "correlation": cov.correlation,
        "dx2": dx2, "dp2": dp2,
        "nonclassical": (c < 0).astype(int),
        "wronskian_residual": wronskian_residual(state),
        "hyperbolic_residual": triple.relative_residual,
        "fg_residual": np.abs(evolution_residual(f, g)) / (np.abs(f) ** 2 + np.abs(g) ** 2),
    })
    return frame[COLUMNS]


def summarize(frame: pd.DataFrame, nbar: float) -> Dict:
    taus = frame["tau"].to_numpy()
    q_star = frame["q_star"].to_numpy()
    c = frame["classicality"].to_numpy()
    heis = frame[["q_star", "q1", "q2"]].to_numpy()
    bar = frame[["q_star_bar", "q1_bar", "q2_bar"]].to_numpy()
    cross = np.abs(heis - bar).max(axis=1) / np.maximum(1.0, q_star)
    half = len(q_star) // 2
    summary = {
        "max_q_star": float(q_star.max()),
        "max_q_star_minus_one": float(q_star.max() - 1.0),
        "min_classicality": float(c.min()),
        "final_classicality": float(c[-1]),
        "critical_q": float(critical_q(nbar)),
        "nbar": float(nbar),
        "first_tau_nonclassical": _first_tau(taus, c < 0),
        "first_tau_covariance_crossing": _first_tau(taus, frame["covariance_min_eigenvalue"].to_numpy() < 0.5),
        "nonclassical_fraction": float(np.mean(c < 0)),
        "classicality_sign_changes": int(np.count_nonzero(np.diff(np.sign(c)) != 0)),
        "max_r": float(frame["r"].max()),
        "max_r_a": float(np.abs(frame["r_a"]).max()),
        "max_r_deviation": float(np.abs(frame["r"] - frame["r_a"]).max()),
        "q_star_envelope_ratio": float(q_star[half:].max() / q_star[:max(half, 1)].max()),
        "max_wronskian_residual": float(frame["wronskian_residual"].max()),
        "max_hyperbolic_residual": float(frame["hyperbolic_residual"].max()),
        "max_fg_residual": float(frame["fg_residual"].max()),
        "max_cross_picture_residual": float(cross.max()),
    }
    if summary["max_hyperbolic_residual"] > HYPERBOLIC_LIMIT:
        logger.warning(f"Sai số Q*² − Q1*² − Q2*² vượt {HYPERBOLIC_LIMIT:g}")
    if summary["max_fg_residual"] > FG_LIMIT:
        logger.warning(f"Sai số |f|² − |g|² vượt {FG_LIMIT:g}")
    return summary


@dataclass
class RunReport:
    records: pd.DataFrame
    metadata: Dict = field(default_factory=dict)
    summary: Dict = field(default_factory=dict)

    def to_csv(self) -> str:
        meta = dict(self.metadata)
        meta["summary"] = self.summary
        return frame_to_csv(self.records, meta)

    def write(self, path) -> None:
        atomic_write_text(path, self.to_csv())
        logger.info(f"Đã ghi {len(self.records)} dòng vào {path}")

    def summary_json(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2, default=float) + "\n"


class IonSimulator:
    def __init__(self, config: RunConfig):
        self.config = config
        self.protocol = None
        self.thermal = None
        self.units = None
        self.trajectory = None

    def prepare(self):
        """Dựng giao thức và trạng thái nhiệt trong hệ đơn vị đã chọn."""
        settings = self.config.simulation
        protocol = self.config.require_protocol().build()
        thermal = self.config.thermal.build(protocol.initial_frequency)
        if settings.units == "dimensionless":
            self.units = UnitSystem.dimensionless(protocol.initial_frequency, thermal.units.mass)
            protocol = to_units(protocol, self.units)
            thermal = thermal_in_units(thermal, self.units)
        else:
            self.units = thermal.units
        protocol.validate(settings.tau_end)
        self.protocol, self.thermal = protocol, thermal
        logger.info(f"Giao thức {protocol.kind}, n̄ = {thermal.nbar:.6g}, đơn vị {self.units.mode}")
        return protocol, thermal

    def integrate(self):
        settings = self.config.simulation
        grid = np.linspace(0.0, settings.tau_end, settings.samples)
        self.trajectory = integrate(self.protocol, settings.tau_end, grid, settings.tolerance,
                                    settings.method, settings.rk4_step)
        logger.info(f"Đã tích phân {len(self.trajectory)} mẫu, "
                    f"độ trôi Wronskian {self.trajectory.metadata['max_wronskian_drift']:.2e}")
        return self.trajectory

    def evaluate(self) -> pd.DataFrame:
        return evaluate_trajectory(self.trajectory, self.thermal, self.units.mass)

    def summarize(self, frame: pd.DataFrame) -> Dict:
        return summarize(frame, self.thermal.nbar)

    def metadata(self) -> Dict:
        settings = self.config.simulation
        return {
            "tool_version": TOOL_VERSION,
            "config": self.config.source,
            "protocol": self.protocol.to_dict(),
            "time_scale": self.protocol.time_scale,
            "thermal": self.thermal.to_dict(),
            "units": self.units.to_dict(),
            "tau_end": settings.tau_end,
            "samples": settings.samples,
            "tolerance": settings.tolerance,
            "method": settings.method,
            "integration": self.trajectory.metadata,
        }

    def run(self) -> RunReport:
        try:
            self.prepare()
            self.integrate()
            frame = self.evaluate()
            summary = self.summarize(frame)
        except SimulationError as e:
            logger.error(f"Lỗi mô phỏng: {e}")
            raise
        report = RunReport(frame, self.metadata(), summary)
        logger.info(f"Max Q* = {summary['max_q_star']:.6g}, min C = {summary['min_classicality']:.6g}")
        return report


def run_simulation(config: RunConfig) -> RunReport:
    return IonSimulator(config).run()
