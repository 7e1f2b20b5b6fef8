"""Giao diện dòng lệnh: simulate, scan, critical, thermal, classicality, check."""
import argparse
import logging
import math
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from check_run import RunChecker
from config import DEFAULT_W0_HZ, load_config
from errors import GrowthOverflow, IntegrationError, InvalidInput, ProtocolError, SimulationError
from heisenberg import classicality_table, critical_q, critical_squeeze
from model import thermal_config, thermal_config_from_nbar
from simulation import atomic_write_text, format_summary, frame_to_csv, run_simulation
from stability import scan, scan_frame

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_OVERFLOW = 4
EXIT_CHECK = 5


def _nbar_list(text: str) -> List[float]:
    try:
        values = [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as e:
        raise InvalidInput(f"Danh sách n̄ không hợp lệ: {text!r}") from e
    if not values:
        raise InvalidInput("Danh sách n̄ rỗng")
    bad = [v for v in values if not v >= 0 or math.isinf(v)]
    if bad:
        raise InvalidInput(f"n̄ phải không âm: {bad}")
    return values


def _output_path(args, config):
    out = args.out or config.output_path("path")
    if out is None:
        raise InvalidInput("Thiếu đường dẫn kết quả: dùng --out hoặc [output] path")
    return out


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    out = _output_path(args, config)
    report = run_simulation(config)
    report.write(out)
    summary_json = args.summary_json or config.output_path("summary_json")
    if summary_json:
        atomic_write_text(summary_json, report.summary_json())
    sys.stdout.write(format_summary(report.summary))
    return EXIT_OK


def cmd_scan(args) -> int:
    config = load_config(args.config)
    out = _output_path(args, config)
    settings = config.scan
    workers = args.workers or settings.workers
    results = scan(settings.a_range, settings.q_range, (settings.a_points, settings.q_points),
                   settings.tolerance, workers, progress=args.progress)
    frame = scan_frame(results)
    atomic_write_text(out, frame_to_csv(frame))
    logger.info(f"Đã ghi bản đồ ổn định {len(frame)} điểm vào {out}")
    return EXIT_OK


def cmd_critical(args) -> int:
    w0 = 2.0 * math.pi * args.w0
    rows = []
    for nbar in _nbar_list(args.nbar):
        thermal = thermal_config_from_nbar(w0, nbar)
        rows.append({"nbar": nbar, "critical_q": float(critical_q(nbar)),
                     "critical_squeeze": float(critical_squeeze(nbar)),
                     "temperature_k": thermal.temperature})
    sys.stdout.write(frame_to_csv(pd.DataFrame(rows)))
    return EXIT_OK


def cmd_thermal(args) -> int:
    thermal = thermal_config(2.0 * math.pi * args.w0, args.temp)
    quantum = thermal.units.hbar * thermal.w0
    sys.stdout.write(format_summary({
        "w0_rad_s": thermal.w0,
        "temperature_k": thermal.temperature,
        "nbar": thermal.nbar,
        "beta_per_j": thermal.beta,
        "e0_j": thermal.e0,
        "e0_over_hbar_w0": thermal.e0 / quantum,
    }))
    return EXIT_OK


def cmd_classicality(args) -> int:
    if not args.q_max > 1 or args.points < 2:
        raise InvalidInput("Cần q_max > 1 và points ≥ 2")
    table = classicality_table(_nbar_list(args.nbar), np.linspace(1.0, args.q_max, args.points))
    text = frame_to_csv(table)
    if args.out:
        atomic_write_text(args.out, text)
        logger.info(f"Đã ghi bảng C(n̄, Q*) vào {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args) -> int:
    findings = RunChecker(args.path).check()
    return EXIT_OK if findings["ok"] else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ion-nonadiabatic",
        description="Động lực học phi đoạn nhiệt của một ion bẫy với tần số phụ thuộc thời gian",
    )
    level = parser.add_mutually_exclusive_group()
    level.add_argument("-v", "--verbose", action="store_true", help="Ghi log mức DEBUG")
    level.add_argument("-q", "--quiet", action="store_true", help="Chỉ ghi cảnh báo và lỗi")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Chạy một mô phỏng và ghi chuỗi thời gian CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="Mặc định lấy từ [output] path")
    p.add_argument("--summary-json", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="Bản đồ ổn định Mathieu trên lưới (ā, q̄)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="Mặc định lấy từ [output] path")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("critical", help="Bảng giá trị tới hạn Q*c theo n̄")
    p.add_argument("--nbar", required=True, help="Danh sách cách nhau bởi dấu phẩy, ví dụ 0,0.35,1")
    p.add_argument("--w0", type=float, default=DEFAULT_W0_HZ, help="Tần số bẫy ban đầu (Hz)")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("thermal", help="n̄, β, E0 của trạng thái nhiệt ban đầu")
    p.add_argument("--w0", type=float, required=True, help="Tần số bẫy (Hz)")
    p.add_argument("--temp", type=float, required=True, help="Nhiệt độ (K)")
    p.set_defaults(func=cmd_thermal)

    p = sub.add_parser("classicality", help="Đường cong C(n̄, Q*)")
    p.add_argument("--nbar", required=True)
    p.add_argument("--q-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_classicality)

    p = sub.add_parser("check", help="Kiểm tra lại các đẳng thức trong file kết quả")
    p.add_argument("path")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')
    try:
        return args.func(args)
    except GrowthOverflow as e:
        logger.error(f"Nghiệm tăng vượt ngưỡng tại τ = {e.tau_reached:.6g}: {e}")
        return EXIT_OVERFLOW
    except (IntegrationError, ProtocolError) as e:
        logger.error(f"Lỗi tích phân: {e}")
        return EXIT_INTEGRATION
    except SimulationError as e:
        logger.error(f"Lỗi cấu hình hoặc đầu vào: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"Lỗi đọc/ghi file: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
