import csv
import json
import logging
import os
import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update({"svg.hashsalt": "minkowski-horofunctions", "font.family": "DejaVu Sans"})
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from typing import Dict, Iterable, List, Optional, Sequence  # noqa: E402

from models.horofunction import HoroballSample  # noqa: E402
from schemas.reports import FiberReport, ReportEnvelope  # noqa: E402

logger = logging.getLogger("mh.export")


def _number(v: float) -> str:
    return f"{float(v):.17g}"


def _open(path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """UTF-8 CSV, header first, '\\n' line endings; floats with 17 significant digits"""
    with _open(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_number(v) if isinstance(v, (float, np.floating)) else v for v in row])
    logger.debug(f"Wrote {path}")
    return path


def write_values(path: str, points: np.ndarray, values: np.ndarray, provenance: Optional[Dict] = None) -> str:
    """(point, value) grid of a horofunction; provenance goes into '#' comment lines above the header"""
    n = points.shape[1]
    header = [f"x{i + 1}" for i in range(n)] + ["value"]
    with _open(path) as f:
        for key, value in (provenance or {}).items():
            f.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for p, v in zip(points, values):
            writer.writerow([_number(x) for x in p] + [_number(v)])
    logger.info(f"Wrote {len(points)} horofunction values to {path}")
    return path


def write_level_set(path: str, sample: HoroballSample) -> str:
    n = sample.horofunction.dimension
    header = [f"x{i + 1}" for i in range(n)] + ["level"]
    return write_rows(path, header, ([*map(float, p), sample.level] for p in sample.points))


def write_svg(path: str, sample: HoroballSample, box_low: Sequence[float], box_high: Sequence[float]) -> str:
    """Polylines of a planar level set"""
    fig, ax = plt.subplots(figsize=(6, 6))
    for line in sample.polylines:
        ax.plot(line[:, 0], line[:, 1], color="#1f77b4", linewidth=1.2)
    ax.plot([sample.horofunction.base[0]], [sample.horofunction.base[1]], marker="o", color="#d62728")
    ax.set_xlim(box_low[0], box_high[0])
    ax.set_ylim(box_low[1], box_high[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"{sample.horofunction.label} = {sample.level:g}")
    ax.grid(True, alpha=0.3)
    _open(path).close()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote {len(sample.polylines)} polylines to {path}")
    return path


def write_fiber(path: str, report: FiberReport) -> str:
    rows: List[list] = []
    for r in report.records:
        projection = "" if r.projection is None else " ".join(_number(v) for v in r.projection)
        klass = "" if r.equivalence_class is None else r.equivalence_class
        rows.append([r.id, projection, r.busemann or "", klass, "excluded" if r.excluded else ""])
    return write_rows(path, ["id", "projection", "busemann", "class", "note"], rows)


def write_report(path: str, envelope: ReportEnvelope) -> str:
    with _open(path) as f:
        f.write(envelope.model_dump_json(indent=2))
        f.write("\n")
    logger.debug(f"Wrote report {path}")
    return path
