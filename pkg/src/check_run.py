import json
import os
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from simulation import COLUMNS, FG_LIMIT, HYPERBOLIC_LIMIT

WRONSKIAN_LIMIT = 1e-9
CROSS_PICTURE_LIMIT = 1e-7


def read_run(path) -> Tuple[Dict, pd.DataFrame]:
    """Đọc file CSV của lệnh simulate: (metadata, bảng số liệu)."""
    metadata = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(": ")
            metadata[key] = json.loads(value)
    frame = pd.read_csv(path, comment="#")
    return metadata, frame


class RunChecker:
    def __init__(self, path):
        self.path = path
        self.metadata = {}
        self.frame = None
        self.findings = {}

    def check_file_existence(self):
        """Kiểm tra sự tồn tại của file kết quả"""
        print("=== KIỂM TRA FILE KẾT QUẢ ===")
        if not os.path.exists(self.path):
            print(f" {self.path} - KHÔNG TỒN TẠI")
            self.findings["exists"] = False
            return False
        size = os.path.getsize(self.path) / 1024
        print(f" {self.path} ({size:.1f} KB)")
        self.findings["exists"] = True
        try:
            self.metadata, self.frame = read_run(self.path)
        except ValueError as e:
            print(f" Không đọc được file: {e}")
            self.findings["readable"] = False
            return False
        self.findings["readable"] = True
        return True

    def check_columns(self):
        print("\n=== KIỂM TRA CỘT ===")
        missing = [c for c in COLUMNS if c not in self.frame.columns]
        if missing:
            print(f"  Thiếu cột: {', '.join(missing)}")
        else:
            print(f" Đủ {len(COLUMNS)} cột, {len(self.frame)} dòng")
        self.findings["missing_columns"] = missing
        return not missing

    def check_values(self):
        """Không có NaN, τ tăng nghiêm ngặt"""
        print("\n=== KIỂM TRA GIÁ TRỊ ===")
        numeric = self.frame.drop(columns=["beta_s"], errors="ignore")
        nan_count = int(numeric.isnull().sum().sum())
        increasing = bool(np.all(np.diff(self.frame["tau"].to_numpy()) > 0))
        print(f" NaN: {nan_count}")
        print(f" τ tăng nghiêm ngặt: {'có' if increasing else 'KHÔNG'}")
        self.findings["nan_count"] = nan_count
        self.findings["tau_increasing"] = increasing
        return nan_count == 0 and increasing

    def check_identities(self):
        """Tính lại các đẳng thức từ cột số liệu"""
        print("\n=== KIỂM TRA ĐẲNG THỨC ===")
        df = self.frame
        u, du, v, dv = (df[c].to_numpy() for c in ("u", "du", "v", "dv"))
        wron = np.abs(u * dv - du * v - 1.0) / np.maximum(1.0, np.abs(u * dv) + np.abs(du * v))
        q, q1, q2 = (df[c].to_numpy() for c in ("q_star", "q1", "q2"))
        hyper = np.abs(q ** 2 - q1 ** 2 - q2 ** 2 - 1.0) / np.maximum(1.0, q ** 2)
        bar = df[["q_star_bar", "q1_bar", "q2_bar"]].to_numpy()
        cross = np.abs(df[["q_star", "q1", "q2"]].to_numpy() - bar).max(axis=1) / np.maximum(1.0, q)
        results = {
            "wronskian": (float(wron.max()), WRONSKIAN_LIMIT),
            "hyperbolic": (float(hyper.max()), HYPERBOLIC_LIMIT),
            "fg": (float(df["fg_residual"].max()), FG_LIMIT),
            "cross_picture": (float(cross.max()), CROSS_PICTURE_LIMIT),
        }
        ok = True
        for name, (value, limit) in results.items():
            passed = value <= limit
            ok = ok and passed
            print(f" {name}: {value:.3e} (giới hạn {limit:.0e}) {'OK' if passed else '⚠️  VƯỢT'}")
            self.findings[f"max_{name}_residual"] = value
        return ok

    def check(self) -> Dict:
        ok = self.check_file_existence()
        if ok:
            ok = self.check_columns()
        if ok:
            ok = self.check_values() & self.check_identities()
        self.findings["ok"] = bool(ok)
        print(f"\n=== KẾT QUẢ: {'ĐẠT' if ok else 'KHÔNG ĐẠT'} ===")
        return self.findings


if __name__ == "__main__":
    import sys
    checker = RunChecker(sys.argv[1] if len(sys.argv) > 1 else "run.csv")
    sys.exit(0 if checker.check()["ok"] else 1)
