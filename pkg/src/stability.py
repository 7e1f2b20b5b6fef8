"""Phân loại ổn định Floquet của phương trình Mathieu ü + (ā − 2q̄ cos 2τ)u = 0."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from errors import InvalidInput
from integrator import DEFAULT_TOLERANCE, INITIAL_VECTOR, propagate

logger = logging.getLogger(__name__)

MARGINAL_BAND = 1e-9
STABLE, MARGINAL, UNSTABLE = "Stable", "Marginal", "Unstable"


@dataclass(frozen=True)
class MonodromyResult:
    a_bar: float
    q_bar: float
    u: float
    du: float
    v: float
    dv: float
    trace: float
    classification: str
    floquet_exponent: float
    characteristic_exponent: float

    @property
    def determinant(self) -> float:
        return self.u * self.dv - self.du * self.v


def classify(trace: float) -> str:
    excess = abs(trace) - 2.0
    if abs(excess) <= MARGINAL_BAND:
        return MARGINAL
    return UNSTABLE if excess > 0 else STABLE


def monodromy(a_bar: float, q_bar: float, tolerance: float = DEFAULT_TOLERANCE) -> MonodromyResult:
    """Ma trận đơn đạo trên một chu kỳ τ ∈ [0, π] và phân loại theo vết."""
    def omega_sq(tau):
        return a_bar - 2.0 * q_bar * math.cos(2.0 * tau)

    u, du, v, dv = propagate(omega_sq, INITIAL_VECTOR, 0.0, math.pi, tolerance)
    trace = float(u + dv)
    label = classify(trace)
    if label == MARGINAL:
        logger.warning(f"Điểm (ā, q̄) = ({a_bar:g}, {q_bar:g}) nằm trên biên ổn định: vết = {trace:.12g}")
    half = abs(trace) / 2.0
    floquet = math.acosh(half) if label == UNSTABLE else 0.0
    characteristic = math.acos(max(-1.0, min(1.0, trace / 2.0))) / math.pi if label != UNSTABLE else math.nan
    return MonodromyResult(float(a_bar), float(q_bar), float(u), float(du), float(v), float(dv),
                           trace, label, floquet, characteristic)


def _monodromy_point(args) -> MonodromyResult:
    a_bar, q_bar, tolerance = args
    return monodromy(a_bar, q_bar, tolerance)


def _axis(bounds: Sequence[float], points: int) -> np.ndarray:
    low, high = bounds
    if not (math.isfinite(low) and math.isfinite(high)) or high < low:
        raise InvalidInput(f"Khoảng quét không hợp lệ: {bounds!r}")
    if points < 2:
        raise InvalidInput(f"Độ phân giải mỗi trục phải ≥ 2, nhận {points}")
    return np.linspace(low, high, int(points))


def scan(a_range: Sequence[float], q_range: Sequence[float],
         resolution: Union[int, Tuple[int, int]] = (29, 13),
         tolerance: float = DEFAULT_TOLERANCE, workers: int = 1,
         progress: bool = False) -> List[MonodromyResult]:
    """Lưới phân loại theo thứ tự hàng: mỗi hàng là một q̄, các cột là ā."""
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    a_axis = _axis(a_range, resolution[0])
    q_axis = _axis(q_range, resolution[1])
    points = [(float(a), float(q), tolerance) for q in q_axis for a in a_axis]
    logger.info(f"Quét {len(points)} điểm (ā, q̄) với {workers} tiến trình")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            # map giữ nguyên thứ tự lưới bất kể thứ tự hoàn thành
            results = list(tqdm(executor.map(_monodromy_point, points, chunksize=8),
                                total=len(points), disable=not progress, desc="scan"))
    else:
        results = [_monodromy_point(p) for p in tqdm(points, disable=not progress, desc="scan")]

    unstable = sum(r.classification == UNSTABLE for r in results)
    logger.info(f"Hoàn tất quét: {unstable}/{len(results)} điểm không ổn định")
    return results


def scan_frame(results: Sequence[MonodromyResult]) -> pd.DataFrame:
    columns = ["a_bar", "q_bar", "trace", "determinant", "classification",
               "floquet_exponent", "characteristic_exponent"]
    rows = []
    for result in results:
        row = asdict(result)
        row["determinant"] = result.determinant
        rows.append(row)
    return pd.DataFrame(rows, columns=columns)
