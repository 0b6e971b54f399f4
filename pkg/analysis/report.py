"""
Analysis Report
Collects the figures of one CLI run and renders them as key = value text or JSON
"""

import json
import math
from datetime import datetime
from pathlib import Path

import pandas as pd


class AnalysisReport:
    def __init__(self, title, digits=6):
        self.title = title
        self.digits = digits
        self.values = {}
        self.units = {}
        self.checks = {}
        self.notes = []

    def add(self, key, value, unit=""):
        """Record one figure (numbers, strings or lists)"""
        self.values[key] = value
        if unit:
            self.units[key] = unit

    def add_check(self, name, passed):
        self.checks[name] = bool(passed)

    def note(self, text):
        """Free-form remark shown under the figures"""
        self.notes.append(text)

    @property
    def all_passed(self):
        return all(self.checks.values())

    def failed_checks(self):
        return [name for name, passed in self.checks.items() if not passed]

    def _format(self, value):
        if isinstance(value, bool):
            return "yes" if value else "no"
        if isinstance(value, float):
            if math.isinf(value):
                return "inf" if value > 0 else "-inf"
            return f"{value:.{self.digits}f}"
        if isinstance(value, (list, tuple)):
            return ",".join(self._format(v) for v in value)
        return str(value)

    def render_text(self):
        lines = ["=" * 60, self.title, "=" * 60]
        for key, value in self.values.items():
            unit = self.units.get(key)
            lines.append(f"{key} = {self._format(value)}" + (f" {unit}" if unit else ""))
        if self.checks:
            lines.append("")
            for name, passed in self.checks.items():
                lines.append(f"{'✓' if passed else '✗'} {name}")
        return "\n".join(lines) + "\n"

    def _jsonable(self, value):
        if isinstance(value, float) and not math.isfinite(value):
            return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
        if isinstance(value, (list, tuple)):
            return [self._jsonable(v) for v in value]
        if hasattr(value, "item"):
            return self._jsonable(value.item())
        return value

    def as_dict(self):
        return {
            "title": self.title,
            "values": {k: self._jsonable(v) for k, v in self.values.items()},
            "units": dict(self.units),
            "checks": dict(self.checks),
            "notes": list(self.notes),
        }

    def render_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"

    def get_dataframe(self):
        """Figures and checks as one key/value table"""
        rows = [{"key": k, "value": self._format(v), "unit": self.units.get(k, "")}
                for k, v in self.values.items()]
        rows += [{"key": f"check:{name}", "value": "pass" if passed else "fail", "unit": ""}
                 for name, passed in self.checks.items()]
        return pd.DataFrame(rows, columns=["key", "value", "unit"])

    def export(self, filename=None):
        """Write the key/value table to CSV; default is a timestamped file in exports/"""
        if filename is None:
            exports_dir = Path(__file__).parent.parent / "exports"
            exports_dir.mkdir(exist_ok=True)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filepath = exports_dir / f"analysis_{timestamp}.csv"
        else:
            filepath = Path(filename)
        df = self.get_dataframe()
        df.to_csv(filepath, index=False)
        return filepath
