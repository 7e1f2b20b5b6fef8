"""Tham số phi đoạn nhiệt Q*, ma trận hiệp phương sai và hàm cổ điển C(n̄, Q*).

Tần số w0, w truyền vào q_triple phải đo cùng thang thời gian với đạo hàm trong
FundamentalState (khi tích phân theo τ thì là w/time_scale). Q* không phụ thuộc
vào việc đổi thang thời gian.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from errors import DomainError, NonPositiveFrequency
from integrator import FundamentalState
from model import ThermalConfig

logger = logging.getLogger(__name__)

Q_STAR_CLAMP = 1e-10


@dataclass(frozen=True)
class QTriple:
    q_star: object
    q1: object
    q2: object

    @property
    def residual(self):
        """Q*² − Q1*² − Q2*² − 1."""
        return self.q_star ** 2 - self.q1 ** 2 - self.q2 ** 2 - 1.0

    @property
    def relative_residual(self):
        return np.abs(self.residual) / np.maximum(1.0, self.q_star ** 2)

    def as_tuple(self) -> Tuple:
        return self.q_star, self.q1, self.q2


@dataclass(frozen=True)
class CovarianceState:
    n_h: object
    m_h: object
    w: object
    energy: object
    lagrangian: object
    correlation: object

    def matrix(self) -> np.ndarray:
        """[[n_H+½, m̄_H], [m̄_H*, n_H+½]] cho một mẫu."""
        d = self.n_h + 0.5
        return np.array([[d, self.m_h], [np.conj(self.m_h), d]], dtype=complex)

    def is_positive_semidefinite(self, tol: float = 1e-12) -> bool:
        eig = np.linalg.eigvalsh(self.matrix())
        return bool(eig.min() >= -tol * max(1.0, abs(eig).max()))

    def purity_residual(self, nbar: float):
        """(n_H+½)² − |m_H|² − (n̄+½)², chia cho (n_H+½)²."""
        d = self.n_h + 0.5
        return ((d - np.abs(self.m_h)) * (d + np.abs(self.m_h)) - (nbar + 0.5) ** 2) / d ** 2


def _require_positive(**frequencies):
    for name, value in frequencies.items():
        if np.any(~(np.asarray(value, dtype=float) > 0)):
            raise NonPositiveFrequency(float("nan"), float(np.min(value)))


def q_triple(state: FundamentalState, w0, w) -> QTriple:
    """Bộ ba (Q*, Q1*, Q2*) tính từ nghiệm cơ bản."""
    _require_positive(w0=w0, w=w)
    u, du, v, dv = state.u, state.du, state.v, state.dv
    w0_sq, w_sq = w0 * w0, w * w
    denom = 2.0 * w0 * w
    q_star = (w0_sq * (dv * dv + w_sq * v * v) + w_sq * u * u + du * du) / denom
    q1 = (w0_sq * (dv * dv - w_sq * v * v) + du * du - w_sq * u * u) / denom
    q2 = (u * du + w0_sq * v * dv) / w0
    return QTriple(q_star, q1, q2)


def mean_values(triple: QTriple, thermal: ThermalConfig, w) -> Tuple:
    """(⟨H_H⟩, ⟨L_H⟩, ⟨Co_H⟩) = (w/w0)·E0·(Q*, Q1*, Q2*)."""
    factor = w / thermal.w0 * thermal.e0
    return factor * triple.q_star, factor * triple.q1, factor * triple.q2


def covariance(triple: QTriple, thermal: ThermalConfig, w) -> CovarianceState:
    s = thermal.nbar + 0.5
    energy, lagrangian, correlation = mean_values(triple, thermal, w)
    n_h = s * triple.q_star - 0.5
    m_h = -s * (triple.q1 - 1j * triple.q2)
    return CovarianceState(n_h, m_h, w, energy, lagrangian, correlation)


def variances(state: FundamentalState, thermal: ThermalConfig, mass: float,
              time_scale: Optional[float] = None) -> Tuple:
    """(Δx², Δp²) theo thời gian vật lý; time_scale đổi đạo hàm theo τ sang theo t."""
    s = 1.0 if time_scale is None else time_scale
    du = state.du * s
    v = state.v / s
    w0 = thermal.w0
    dx2 = thermal.e0 / mass * (state.u ** 2 / w0 ** 2 + v ** 2)
    dp2 = mass * thermal.e0 * (du ** 2 / w0 ** 2 + state.dv ** 2)
    return dx2, dp2


def quadrature_from_covariance(cov: CovarianceState, thermal: ThermalConfig, mass: float):
    """Δx² = (ℏ/(m w))(n_H + ½ + Re m_H)."""
    return thermal.units.hbar / (mass * cov.w) * (cov.n_h + 0.5 + np.real(cov.m_h))


def quadrature_covariance(state: FundamentalState, nbar, w0, w) -> np.ndarray:
    """Ma trận hiệp phương sai đối xứng của (√w·x, p/√w) dựng thẳng từ nghiệm cơ bản (ℏ = m = 1).

    x = u x0 + v̄ p0, p = u̇ x0 + v̄̇ p0 với ⟨x0²⟩ = (n̄+½)/w0, ⟨p0²⟩ = (n̄+½)w0.
    Kết quả có dạng (..., 2, 2).
    """
    _require_positive(w0=w0, w=w)
    s = nbar + 0.5
    u, du, v, dv = state.u, state.du, state.v, state.dv
    xx = s * w * (u * u / w0 + w0 * v * v)
    pp = s * (du * du / w0 + w0 * dv * dv) / w
    xp = s * (u * du / w0 + w0 * v * dv)
    xx, pp, xp = np.broadcast_arrays(xx, pp, xp)
    return np.stack([np.stack([xx, xp], axis=-1), np.stack([xp, pp], axis=-1)], axis=-2)


def minimum_covariance_eigenvalue(state: FundamentalState, nbar, w0, w):
    """Trị riêng nhỏ nhất của quadrature_covariance; < ½ khi trạng thái phi cổ điển."""
    return np.linalg.eigvalsh(quadrature_covariance(state, nbar, w0, w))[..., 0][()]


def _clamp_q_star(q_star):
    q = np.asarray(q_star, dtype=float)
    if np.any(q < 1.0 - Q_STAR_CLAMP) or np.any(np.isnan(q)):
        raise DomainError(f"Q* = {np.min(q)!r} < 1 vượt quá sai số làm tròn")
    return np.maximum(q, 1.0)


def classicality(nbar, q_star):
    """C = (n̄ + ½)[Q* − √(Q*² − 1)] − ½; C < 0 nghĩa là trạng thái phi cổ điển."""
    if np.any(np.asarray(nbar) < 0):
        raise DomainError(f"n̄ phải không âm, nhận {nbar!r}")
    q = _clamp_q_star(q_star)
    # Q* − √(Q*²−1) = 1/(Q* + √(Q*²−1)), tránh triệt tiêu khi Q* lớn
    root = np.sqrt((q - 1.0) * (q + 1.0))
    c = (nbar + 0.5) / (q + root) - 0.5
    return c[()] if isinstance(c, np.ndarray) else c


def critical_q(nbar):
    """Q*c = [(n̄+½)² + ¼]/(n̄+½), nghiệm của C(n̄, Q*) = 0."""
    if np.any(np.asarray(nbar) < 0):
        raise DomainError(f"n̄ phải không âm, nhận {nbar!r}")
    s = np.asarray(nbar, dtype=float) + 0.5
    return (s + 0.25 / s)[()]


def critical_squeeze(nbar):
    """r_c = ½ ln(2n̄ + 1): độ nén làm trạng thái nhiệt nén đạt C = 0."""
    if np.any(np.asarray(nbar) < 0):
        raise DomainError(f"n̄ phải không âm, nhận {nbar!r}")
    return (0.5 * np.log1p(2.0 * np.asarray(nbar, dtype=float)))[()]


def minimum_quadrature_variance(nbar, q_star):
    return classicality(nbar, q_star) + 0.5


def bogoliubov_r(w0, w):
    """r_a = ½ ln(w/w0)."""
    _require_positive(w0=w0, w=w)
    return (0.5 * np.log(np.asarray(w, dtype=float) / np.asarray(w0, dtype=float)))[()]


def classicality_table(nbars: Iterable[float], q_grid: Iterable[float]) -> pd.DataFrame:
    """Bảng C(n̄, Q*) cho từng n̄ trên lưới Q*."""
    q = np.asarray(list(q_grid), dtype=float)
    frames = []
    for nbar in nbars:
        frames.append(pd.DataFrame({
            "nbar": float(nbar),
            "q_star": q,
            "classicality": np.asarray(classicality(nbar, q), dtype=float).reshape(q.shape),
            "critical_q": float(critical_q(nbar)),
        }))
    if not frames:
        return pd.DataFrame(columns=["nbar", "q_star", "classicality", "critical_q"])
    return pd.concat(frames, ignore_index=True)
