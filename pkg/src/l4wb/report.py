"""The "l4wb/1" report envelope and its JSON and CSV renderings.

Results are either a mapping (rendered to CSV as flattened ``key,value``
rows) or a list of flat row mappings (rendered one CSV row each).  Floats are
written with ``repr``, the shortest string that reads back to the same double,
in both formats.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "l4wb/1"
SCHEMA_PATH = Path(__file__).with_name("report_schema.json")


def plain(obj):
    """Convert numpy scalars, mpf, enums, tuples and paths into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if obj is None or isinstance(obj, str):
        return obj
    x = float(obj)
    # JSON has no NaN or infinity; a missing estimate is reported as null
    return x if math.isfinite(x) else None


@dataclass
class Report:
    inputs: dict
    results: dict | list
    diagnostics: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return plain({"schema_version": self.schema_version, "inputs": self.inputs,
                      "results": self.results, "diagnostics": self.diagnostics})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(d["inputs"], d["results"], d.get("diagnostics", {}), d["schema_version"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        res = self.to_dict()["results"]
        if isinstance(res, list):
            cols = list(res[0]) if res else []
            w.writerow(cols)
            for row in res:
                w.writerow([_cell(row[c]) for c in cols])
        else:
            w.writerow(["key", "value"])
            for key, val in flatten(res):
                w.writerow([key, _cell(val)])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")


def flatten(obj, prefix: str = ""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
