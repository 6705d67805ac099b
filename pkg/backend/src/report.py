# src/report.py
import json
import os
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd
from pydantic import BaseModel, Field

from src.metrics import CircuitMetrics, TimingErrorModel
from src.rtg import RtgConfig, RtgResult
from src.topology import Layout

REPORT_VERSION = 1
RUN_LOG_FILE = "run_log.jsonl"


class VirtualEdgeRecord(BaseModel):
    endpoints: List[int]
    aux_path: List[int]


class RunReport(BaseModel):
    version: int = REPORT_VERSION
    mode: str
    source: Optional[str] = None
    topology: str
    layout: List[int]
    model: TimingErrorModel
    config: Dict[str, Any] = Field(default_factory=dict)
    virtual_edges: List[VirtualEdgeRecord] = Field(default_factory=list)
    metrics: Dict[str, CircuitMetrics]
    depth_reduction_percent: Dict[str, float]
    seeds: Dict[str, Optional[int]]
    candidates: int = 0
    subsets_evaluated: int = 1
    wall_time: float = 0.0


class LayoutsDocument(BaseModel):
    version: int = REPORT_VERSION
    initial: List[int]
    final: List[int]

    def layouts(self):
        return Layout(tuple(self.initial)), Layout(tuple(self.final))


def build_report(result: RtgResult, mode: str, topology: str, layout: Layout, model: TimingErrorModel,
                 config: RtgConfig, source: Optional[str] = None) -> RunReport:
    return RunReport(
        mode=mode,
        source=source,
        topology=topology,
        layout=list(layout.mapping),
        model=model,
        config=config.model_dump(mode="json"),
        virtual_edges=[VirtualEdgeRecord(**ve.to_record()) for ve in result.best.subset],
        metrics=result.metrics,
        depth_reduction_percent=result.depth_reduction,
        seeds={
            "base_seed": config.base_seed,
            "trials": config.trials_per_subset,
            "baseline_seed": result.baseline.best_seed,
            "best_seed": result.best.best_seed,
        },
        candidates=len(result.candidates),
        subsets_evaluated=result.subsets_evaluated,
        wall_time=result.wall_time,
    )


def dumps_model(model: BaseModel) -> str:
    return json.dumps(model.model_dump(mode="json"), indent=2)


def write_report(report: RunReport, out_dir: str, name: str = "report.json") -> str:
    if not os.path.exists(out_dir):
        os.makedirs(out_dir)
    path = os.path.join(out_dir, name)
    with open(path, "w") as f:
        f.write(dumps_model(report))
    return path


def load_report(path: str) -> RunReport:
    with open(path, "r") as f:
        return RunReport.model_validate_json(f.read())


def append_run_log(report: RunReport, out_dir: str) -> str:
    """Append one JSON line per run, stamped with the time it was logged."""
    if not os.path.exists(out_dir):
        os.makedirs(out_dir)
    path = os.path.join(out_dir, RUN_LOG_FILE)
    entry = {"timestamp": datetime.now().isoformat(), "report": report.model_dump(mode="json")}
    with open(path, "a") as f:
        f.write(json.dumps(entry) + "\n")
    return path


def read_run_log(out_dir: str) -> List[RunReport]:
    path = os.path.join(out_dir, RUN_LOG_FILE)
    if not os.path.exists(path):
        return []
    with open(path, "r") as f:
        return [RunReport.model_validate(json.loads(line)["report"]) for line in f if line.strip()]


def aggregate_table(reports: Iterable[RunReport]) -> pd.DataFrame:
    """One row per (benchmark, mode): baseline vs chosen vs implemented metrics."""
    rows = []
    for r in reports:
        base, best, impl = r.metrics["baseline"], r.metrics["best"], r.metrics["expanded"]
        rows.append({
            "benchmark": r.source,
            "mode": r.mode,
            "baseline_depth": base.depth,
            "baseline_cnot": base.n_cnot,
            "expected_depth": best.depth,
            "impl_depth": impl.depth,
            "impl_cnot": impl.n_cnot,
            "n_tele": best.n_tele,
            "cnot_data": impl.n_cnot_data,
            "baseline_d_t": base.temporal_depth,
            "best_d_t": best.temporal_depth,
            "baseline_c_2q": base.c_2q,
            "best_c_2q": best.c_2q,
            "reduction_expected_pct": r.depth_reduction_percent.get("expected", 0.0),
            "reduction_impl_pct": r.depth_reduction_percent.get("impl", 0.0),
            "virtual_edges": ";".join(f"{e.endpoints[0]}-{e.endpoints[1]}" for e in r.virtual_edges),
        })
    return pd.DataFrame(rows)


def write_table(table: pd.DataFrame, out_dir: str, stem: str = "summary") -> Dict[str, str]:
    if not os.path.exists(out_dir):
        os.makedirs(out_dir)
    paths = {"csv": os.path.join(out_dir, f"{stem}.csv"), "txt": os.path.join(out_dir, f"{stem}.txt")}
    table.to_csv(paths["csv"], index=False)
    with open(paths["txt"], "w") as f:
        f.write(table.to_string(index=False) + "\n")
    return paths
