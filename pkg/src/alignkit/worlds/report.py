"""Report documents and their JSON / CSV renderings."""

from __future__ import annotations

import csv
import io
import json
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

TOOL = "alignkit"


class Report(BaseModel):
    tool: str = TOOL
    version: str
    command: str
    scenario: str | None = None
    input_digest: str | None = None
    sections: dict[str, Any] = Field(default_factory=dict)
    timings: dict[str, float] | None = None


def _plain(value: Any) -> Any:
    """numpy and pydantic values to JSON primitives."""
    if isinstance(value, BaseModel):
        return _plain(value.model_dump(mode="python", by_alias=True))
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _scalar(value: float) -> dict[str, Any]:
    return {"value": value, "sig12": format(value, ".12g")}


def _decorate(value: Any) -> Any:
    """Named float fields gain a fixed 12-digit twin; floats inside arrays stay bare."""
    if isinstance(value, dict):
        return {
            k: _scalar(v) if isinstance(v, float) else _decorate(v)
            for k, v in value.items()
        }
    if isinstance(value, list):
        return [_decorate(v) if isinstance(v, (dict, list)) else v for v in value]
    return value


def render_json(report: Report) -> str:
    header = report.model_dump(mode="python", exclude_none=True, exclude={"sections", "timings"})
    document = {**header, "sections": _plain(report.sections)}
    if report.timings is not None:
        document["timings"] = report.timings
    document = _decorate(document)
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def _matrix_section(sections: dict[str, Any]) -> dict[str, Any] | None:
    for section in sections.values():
        if isinstance(section, dict) and {"matrix", "factors", "targets"} <= section.keys():
            return section
    return None


def _flatten(prefix: str, value: Any, out: list[tuple[str, Any]]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for k, v in enumerate(value):
            _flatten(f"{prefix}[{k}]", v, out)
    elif isinstance(value, list):
        out.append((prefix, " ".join(str(v) for v in value)))
    else:
        out.append((prefix, value))


def render_csv(report: Report) -> str:
    """Matrix sections as ``factor,<targets...>`` rows; anything else as key/value pairs."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    sections = _plain(report.sections)
    matrix = _matrix_section(sections)
    if matrix is not None:
        writer.writerow(["factor", *matrix["targets"]])
        for factor, row in zip(matrix["factors"], matrix["matrix"]):
            writer.writerow([factor, *(repr(float(v)) for v in row)])
        return buffer.getvalue()
    rows: list[tuple[str, Any]] = []
    _flatten("", sections, rows)
    writer.writerow(["key", "value"])
    for key, value in rows:
        writer.writerow([key, repr(value) if isinstance(value, float) else value])
    return buffer.getvalue()


def render(report: Report, fmt: str = "json") -> str:
    return render_csv(report) if fmt == "csv" else render_json(report)
