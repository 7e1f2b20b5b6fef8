"""Các lỗi của bộ mô phỏng ion bẫy."""


class SimulationError(Exception):
    """Lỗi gốc của toàn bộ gói."""


class ProtocolError(SimulationError, ValueError):
    """Giao thức tần số không hợp lệ."""


class NonPositiveFrequency(ProtocolError):
    def __init__(self, tau, omega_sq):
        self.tau = tau
        self.omega_sq = omega_sq
        super().__init__(f"w² = {omega_sq!r} ≤ 0 tại τ = {tau!r}")


class OutOfDomain(ProtocolError):
    def __init__(self, tau, low, high):
        self.tau = tau
        super().__init__(f"τ = {tau!r} nằm ngoài miền mẫu [{low!r}, {high!r}]")


class DegenerateProtocol(ProtocolError):
    pass


class InvalidTemperature(SimulationError, ValueError):
    pass


class DomainError(SimulationError, ValueError):
    pass


class InvalidInput(SimulationError, ValueError):
    pass


class ConfigError(SimulationError, ValueError):
    pass


class IntegrationError(SimulationError, RuntimeError):
    """Lỗi trong quá trình tích phân số."""


class StepFailure(IntegrationError):
    pass


class GrowthOverflow(IntegrationError):
    def __init__(self, tau_reached, limit=1e12):
        self.tau_reached = float(tau_reached)
        self.limit = limit
        super().__init__(
            f"|u| hoặc |v̄| vượt {limit:g} tại τ = {self.tau_reached:.6g}"
        )


class IdentityViolation(IntegrationError):
    def __init__(self, name, residual, threshold):
        self.name = name
        self.residual = residual
        self.threshold = threshold
        super().__init__(
            f"Đẳng thức {name} bị vi phạm: sai số {residual:.3e} > {threshold:.1e}"
        )
