import pytest
import numpy as np
import math
import sys
import os

# Thêm src vào path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import DomainError, IdentityViolation
from evolution_op import (
    bar_q_triple,
    evolution_from_state,
    fg_from_state,
    principal_angle,
    squeeze_params,
    squeezed_thermal,
)
from heisenberg import bogoliubov_r, q_triple
from integrator import FundamentalState, integrate
from model import ConstantProtocol, MathieuProtocol, SuddenJumpProtocol


class TestFG:

    def test_initial(self):
        f, g = fg_from_state(FundamentalState.initial(), 1.0)
        assert f == 1.0
        assert g == 0.0

    def test_constant_protocol(self):
        """f = e^{−iτ}, g = 0"""
        taus = np.linspace(0, 4 * math.pi, 200)
        traj = integrate(ConstantProtocol(1.0), 4 * math.pi, taus)
        f, g = fg_from_state(traj.as_state(), 1.0)
        np.testing.assert_allclose(f, np.exp(-1j * taus), atol=1e-9)
        np.testing.assert_allclose(np.abs(g), 0.0, atol=1e-9)

    def test_bogoliubov_identity(self):
        protocol = MathieuProtocol(1.0, 0.2, 1.0)
        traj = integrate(protocol, 8 * math.pi)
        f, g = fg_from_state(traj.as_state(), math.sqrt(0.6))
        rel = np.abs(np.abs(f) ** 2 - np.abs(g) ** 2 - 1) / (np.abs(f) ** 2 + np.abs(g) ** 2)
        assert rel.max() <= 1e-9

    def test_violation(self):
        with pytest.raises(IdentityViolation):
            fg_from_state(FundamentalState(0.0, 1.0, 0.0, 0.0, 2.0), 1.0)


class TestSqueezeParams:

    def test_identity(self):
        assert squeeze_params(1.0, 0.0) == (0.0, 0.0, 0.0)

    def test_pure_rotation(self):
        r, theta, gamma = squeeze_params(np.exp(-0.7j), 0.0)
        assert r == pytest.approx(0.0, abs=1e-12)
        assert theta == 0.0
        assert gamma == pytest.approx(0.7)
        _, _, gamma = squeeze_params(np.exp(-4.0j), 0.0)
        assert gamma == pytest.approx(4.0 - 2 * math.pi)

    def test_principal_branch(self):
        angles = np.array([math.pi, -math.pi, 3 * math.pi, 0.1, -7.0])
        reduced = principal_angle(angles)
        assert np.all(reduced > -math.pi) and np.all(reduced <= math.pi)
        np.testing.assert_allclose(np.cos(reduced), np.cos(angles), atol=1e-12)
        assert principal_angle(-math.pi) == pytest.approx(math.pi)

    def test_domain(self):
        with pytest.raises(DomainError):
            squeeze_params(0.5, 0.0)

    def test_small_squeeze_is_accurate(self):
        """Sai số làm tròn 1e-12 trong |f| không làm lệch r nhỏ"""
        r = 1e-6
        f = math.cosh(r) * (1.0 + 1e-12) * np.exp(0.3j)
        g = math.sinh(r) * np.exp(-1.1j)
        r_found, theta, _ = squeeze_params(f, g)
        assert r_found == pytest.approx(r, rel=1e-9)
        assert theta == pytest.approx(0.3 - 1.1 + math.pi)

    def test_sudden_jump_cross_check(self):
        """Ngay sau bước nhảy w0 → 2w0: Q̄* = Q* = 1.25"""
        params = evolution_from_state(FundamentalState.initial(), 1.0)
        triple = bar_q_triple(params.r, params.theta, bogoliubov_r(1.0, 2.0))
        assert triple.q_star == pytest.approx(1.25, abs=1e-12)
        assert triple.q1 == pytest.approx(q_triple(FundamentalState.initial(), 1.0, 2.0).q1, abs=1e-12)


class TestBarQTriple:

    def test_adiabatic_point(self):
        triple = bar_q_triple(0.3, 0.0, 0.3)
        assert triple.q_star == pytest.approx(1.0, abs=1e-14)
        assert triple.q1 == pytest.approx(0.0, abs=1e-14)
        assert triple.q2 == 0.0
        assert bar_q_triple(0.0, 0.0, 0.0).as_tuple() == (1.0, 0.0, 0.0)

    def test_identity_grid(self):
        rng = np.random.default_rng(3)
        r = rng.uniform(0, 1.5, 500)
        theta = rng.uniform(-math.pi, math.pi, 500)
        r_a = rng.uniform(-1, 1, 500)
        triple = bar_q_triple(r, theta, r_a)
        assert np.max(np.abs(triple.residual)) <= 1e-10

    def test_phase_branch_invariance(self):
        a = bar_q_triple(0.4, 1.1, 0.2)
        b = bar_q_triple(0.4, 1.1 + 2 * math.pi, 0.2)
        np.testing.assert_allclose(a.as_tuple(), b.as_tuple(), atol=1e-12)

    def test_negative_r(self):
        with pytest.raises(DomainError):
            bar_q_triple(-0.1, 0.0, 0.0)

    def test_matches_heisenberg_for_generic_state(self):
        """Bộ ba từ (r, θ, r_a) khớp bộ ba từ nghiệm cơ bản"""
        state = FundamentalState(0.0, 1.0, 0.0, 0.5, 1.0)
        params = evolution_from_state(state, 1.0)
        bar = bar_q_triple(params.r, params.theta, bogoliubov_r(1.0, 1.0))
        heis = q_triple(state, 1.0, 1.0)
        assert heis.q2 == pytest.approx(0.5)
        np.testing.assert_allclose(bar.as_tuple(), heis.as_tuple(), atol=1e-12)


class TestCrossPicture:

    @pytest.mark.parametrize("protocol,w0", [
        (MathieuProtocol(6.0, 0.5, 1.0), math.sqrt(5.0)),
        (MathieuProtocol(6.0, -0.5, 1.0), math.sqrt(7.0)),
        (MathieuProtocol(1.2, 0.1, 1.0), 1.0),
        (MathieuProtocol(1.0, 0.2, 1.0), math.sqrt(0.6)),
        (SuddenJumpProtocol(1.0, 2.0, 1.0), 1.0),
    ])
    def test_trajectory(self, protocol, w0):
        traj = integrate(protocol, 12 * math.pi)
        state = traj.as_state()
        w = np.sqrt(protocol.reduced_omega_squared(traj.taus))
        heis = q_triple(state, w0, w)
        params = evolution_from_state(state, w0)
        bar = bar_q_triple(params.r, params.theta, bogoliubov_r(w0, w))
        scale = np.maximum(1.0, heis.q_star)
        for a, b in zip(heis.as_tuple(), bar.as_tuple()):
            assert np.max(np.abs(a - b) / scale) <= 1e-7

    def test_r_continuity(self):
        protocol = MathieuProtocol(6.0, 0.5, 1.0)
        traj = integrate(protocol, 12 * math.pi)
        params = evolution_from_state(traj.as_state(), math.sqrt(5.0))
        assert np.max(np.abs(np.diff(params.r))) <= 0.1


class TestSqueezedThermal:

    def test_plain_thermal(self):
        params = squeezed_thermal(2.0, 0.0, 0.0)
        assert params.beta_s == 2.0
        assert params.mu == 0.0

    def test_cosh_two(self):
        r = 0.5 * math.acosh(2.0)
        params = squeezed_thermal(1.5, r, 0.3)
        assert params.beta_s == pytest.approx(3.0)
        assert params.mu == pytest.approx(math.sqrt(3) / 2)
        assert params.theta == 0.3

    def test_mu_bound(self):
        params = squeezed_thermal(1.0, np.linspace(0, 5, 100), 0.0)
        assert np.all(params.mu < 1.0) and np.all(params.mu >= 0.0)


if __name__ == "__main__":
    pytest.main([__file__])
