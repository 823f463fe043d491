"""Experiment reports: JSON/CSV artifacts and figure rendering.

Reports carry their generating parameters and write deterministically:
reruns with the same inputs produce byte-identical data sections, with the
wall-clock timestamp isolated in a comment header.  Figures are rendered
to files next to the delimited output.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

SCHEMA_VERSION = 1


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ExperimentReport:
    """A named table of result rows plus the parameters that produced it."""

    experiment: str
    model: str
    k: int
    seed: int
    params: dict
    rows: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def stem(self):
        return f"{self.experiment}-{self.model}-k{self.k}-s{self.seed}"

    def columns(self):
        cols = []
        for row in self.rows:
            for key in row:
                if key not in cols:
                    cols.append(key)
        return cols

    def to_json(self):
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "model": self.model,
            "k": self.k,
            "seed": self.seed,
            "params": self.params,
            "rows": self.rows,
        }

    @classmethod
    def from_json(cls, data):
        from .errors import SchemaError

        try:
            if data["schema_version"] != SCHEMA_VERSION:
                raise SchemaError(
                    f"unsupported report schema {data['schema_version']!r}"
                )
            return cls(
                experiment=data["experiment"],
                model=data["model"],
                k=data["k"],
                seed=data["seed"],
                params=data["params"],
                rows=data["rows"],
            )
        except KeyError as exc:
            raise SchemaError(f"report missing key {exc}") from None

    # --- file output -------------------------------------------------------
    def write_json(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{self.stem()}.json"
        _atomic_write(path, json.dumps(self.to_json(), indent=2, sort_keys=True))
        return path

    def csv_header_lines(self, timestamp=None):
        ts = timestamp or datetime.now(timezone.utc).isoformat()
        params = json.dumps(self.params, sort_keys=True)
        return [
            f"# feketelab {self.experiment} model={self.model} k={self.k} seed={self.seed}",
            f"# generated {ts}",
            f"# params {params}",
        ]

    def csv_data_lines(self):
        cols = self.columns()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
        return buf.getvalue()

    def write_csv(self, out_dir):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{self.stem()}.csv"
        text = "\n".join(self.csv_header_lines()) + "\n" + self.csv_data_lines()
        _atomic_write(path, text)
        return path


def append_csv(path, report):
    """Append report rows to a shared CSV, writing the header only once."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = report.columns()
    fresh = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            writer.writerow(cols)
        for row in report.rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
    return path


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_figures(report, out_dir):
    """Render the report's numeric columns to a PNG next to the tables.

    Returns the list of written figure paths.  Rendering is best-effort
    visualization of whatever rows the experiment produced: rows that share
    a ``k`` column become trend lines over k, otherwise columns are drawn
    against row index.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = report.rows
    if not rows:
        return []
    cols = report.columns()
    numeric = [
        c
        for c in cols
        if all(isinstance(r.get(c, 0.0), (int, float)) for r in rows)
    ]
    if not numeric:
        return []
    x_col = "k" if "k" in numeric and len(numeric) > 1 else None
    y_cols = [c for c in numeric if c != x_col][:8]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    x = [r.get(x_col) for r in rows] if x_col else list(range(len(rows)))
    for c in y_cols:
        y = [r.get(c) for r in rows]
        ax.plot(x, y, marker="o", label=c)
    ax.set_xlabel(x_col or "row")
    ax.set_title(f"{report.experiment} ({report.model}, seed {report.seed})")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / f"{report.stem()}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
