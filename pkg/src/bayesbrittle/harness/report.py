"""Report container and its JSON / CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CURVE_COLUMNS = ("n", "diagnostic", "value", "seed_group")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return obj


@dataclass
class Report:
    kind: str
    config: dict
    resolved: dict
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    curves: list = field(default_factory=list)
    backend: str = ""
    timing: dict = field(default_factory=dict)

    def curve(self, n, diagnostic, value, seed_group="all"):
        self.curves.append((n, diagnostic, float(value), seed_group))

    def violation(self, name, count=1):
        self.checks[name] = self.checks.get(name, 0) + int(count)

    @property
    def violations(self) -> int:
        return sum(v for k, v in self.checks.items() if k.endswith("_violations"))

    def to_dict(self) -> dict:
        return _plain({
            "kind": self.kind,
            "rows": self.rows,
            "summary": self.summary,
            "checks": self.checks,
            "metadata": {
                "config": self.config,
                "resolved": self.resolved,
                "seed": self.config.get("seed"),
                "backend": self.backend,
                # the only run-dependent field
                "timing": self.timing,
            },
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for n, diag, value, group in self.curves:
            w.writerow([n, diag, repr(value), group])
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rp = out / "report.json"
        cp = out / "curves.csv"
        rp.write_text(self.to_json() + "\n")
        cp.write_text(self.curves_csv())
        return rp, cp
