"""Result tables (CSV) with a JSON metadata sidecar, and the deterministic trial pool."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

COLUMNS = ("scenario", "speed_kmh", "M", "N", "sweep_name", "sweep_value", "metric",
           "mean", "stderr", "trial_count", "n_samples", "seed_range")


def trial_seed(base_seed: int, index: int) -> int:
    return int(base_seed) ^ int(index)


def seed_range(base_seed: int, trials: int) -> str:
    return f"{base_seed}^[0,{trials})"


def run_tasks(fn, tasks, workers: int = 1):
    """Map ``fn`` over ``tasks`` and return results in task order.

    Each task carries its own seed, so the output is independent of the
    worker count.
    """
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def build_id() -> str:
    """Content hash of the package sources (stable across checkouts of the same code)."""
    h = hashlib.sha1()
    for f in sorted(Path(__file__).parent.glob("*.py")):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()[:12]


@dataclass
class ResultTable:
    scenario: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)

    def add(self, **row):
        missing = set(COLUMNS) - set(row)
        for c in missing:
            row[c] = ""
        self.rows.append({c: row[c] for c in COLUMNS})

    def value(self, metric, **where) -> float:
        """Mean of the unique row matching ``metric`` and the given column values."""
        hits = [r for r in self.rows if r["metric"] == metric
                and all(_eq(r[k], v) for k, v in where.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {metric} {where}")
        return float(hits[0]["mean"])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        meta = dict(self.metadata)
        meta.update(scenario=self.scenario, build_id=build_id(),
                    wall_time_s=round(time.time() - self.started, 3))
        path.with_suffix(path.suffix + ".meta.json").write_text(json.dumps(meta, indent=2, default=str))
        return path


def _eq(a, b):
    try:
        return float(a) == float(b)
    except (TypeError, ValueError):
        return str(a) == str(b)
