"""Phân tích toán tử tiến hoá thành nén × quay qua các biên độ Bogoliubov f, g."""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import DomainError, IdentityViolation, InvalidInput
from heisenberg import QTriple
from integrator import FundamentalState

logger = logging.getLogger(__name__)

FG_VIOLATION = 1e-6
ABS_F_CLAMP = 1e-6


@dataclass(frozen=True)
class EvolutionParams:
    f: object
    g: object
    r: object
    theta: object
    gamma: object


@dataclass(frozen=True)
class SqueezedThermalParams:
    beta_s: object
    mu: object
    theta: object


def principal_angle(x):
    """Đưa góc về (−π, π]."""
    return (np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi))[()]


def evolution_residual(f, g):
    return np.abs(f) ** 2 - np.abs(g) ** 2 - 1.0


def fg_from_state(state: FundamentalState, w0) -> Tuple:
    """f = ½(u + v̄̇) − (i/2)(w0 v̄ − u̇/w0), g = ½(u − v̄̇) + (i/2)(w0 v̄ + u̇/w0)."""
    u, du, v, dv = (np.asarray(x, dtype=float) for x in (state.u, state.du, state.v, state.dv))
    f = 0.5 * (u + dv) - 0.5j * (w0 * v - du / w0)
    g = 0.5 * (u - dv) + 0.5j * (w0 * v + du / w0)
    relative = np.abs(evolution_residual(f, g)) / (np.abs(f) ** 2 + np.abs(g) ** 2)
    worst = float(np.max(relative))
    if worst > FG_VIOLATION:
        raise IdentityViolation("|f|² − |g|² = 1", worst, FG_VIOLATION)
    return f[()], g[()]


def squeeze_params(f, g) -> Tuple:
    """(r, θ, γ) với cosh r = |f|, γ = −arg f, θ = arg f + arg g + π.

    r lấy từ sinh r = |g|: arccosh|f| mất điều kiện khi r ≈ 0.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    abs_f = np.abs(f)
    if np.any(abs_f < 1.0 - ABS_F_CLAMP):
        raise DomainError(f"|f| = {float(np.min(abs_f))!r} < 1")
    r = np.arcsinh(np.abs(g))
    gamma = principal_angle(-np.angle(f))
    theta = np.where(g == 0, 0.0, principal_angle(np.angle(f) + np.angle(g) + np.pi))
    return r[()], theta[()], gamma


def evolution_from_state(state: FundamentalState, w0) -> EvolutionParams:
    f, g = fg_from_state(state, w0)
    r, theta, gamma = squeeze_params(f, g)
    return EvolutionParams(f, g, r, theta, gamma)


def bar_q_triple(r, theta, r_a) -> QTriple:
    """Bộ ba Q̄* từ tham số nén (r, θ) và độ nén tức thời r_a.

    Thành phần thứ ba mang dấu −sinh 2r sin θ để khớp với Q2* tính từ nghiệm cơ bản
    khi θ = arg f + arg g + π.
    """
    if np.any(np.asarray(r) < 0):
        raise DomainError(f"r phải không âm, nhận {r!r}")
    c, s = np.cosh(2.0 * r), np.sinh(2.0 * r)
    ca, sa = np.cosh(2.0 * r_a), np.sinh(2.0 * r_a)
    q_star = c * ca - s * sa * np.cos(theta)
    q1 = s * ca * np.cos(theta) - c * sa
    q2 = -s * np.sin(theta)
    return QTriple(q_star, q1, q2)


def squeezed_thermal(beta, r, theta) -> SqueezedThermalParams:
    """β_s = β cosh 2r, μ = tanh 2r."""
    if not beta > 0:
        raise InvalidInput(f"β phải dương, nhận {beta!r}")
    if np.any(np.asarray(r) < 0):
        raise DomainError(f"r phải không âm, nhận {r!r}")
    return SqueezedThermalParams(beta * np.cosh(2.0 * r), np.tanh(2.0 * r), theta)
