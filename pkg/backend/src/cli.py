# src/cli.py
"""Command-line entry point: `python -m src.cli <command> ...` from backend/."""

import argparse
import json
import os
import sys
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from src.bench import BenchSpec, generate, lower_rzz, parse_bench
from src.circuit import Circuit, dumps_circuit, load_circuit, save_circuit, validate_circuit
from src.config import Settings, configure_logging, load_settings
from src.errors import ConfigError, QasmExportError, RtgError
from src.metrics import TimingErrorModel
from src.qasm import export_qasm2, parse_qasm2_subset
from src.report import (
    LayoutsDocument,
    aggregate_table,
    append_run_log,
    build_report,
    dumps_model,
    write_report,
    write_table,
)
from src.router import RouterParams
from src.rtg import RtgConfig, baseline_only, rtg_search
from src.simulator import BRANCH_CAP, verify_routed_equivalence
from src.topology import layout_from_spec, save_topology, topology_from_spec

MODES = {"baseline": "plain", "rtg": "plain", "rtg-noise": "noise_aware"}
# gate names allowed on virtual edges per teleportation flavour
TELEPORT_GATES = {"cnot": frozenset({"cx", "cz"}), "cu": frozenset({"cx", "cz", "rzz", "cu"})}


# --- Argument parsing ---

def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t2q", type=float, default=None, help="native two-qubit layer time")
    p.add_argument("--t1q", type=float, default=None, help="single-qubit layer time")
    p.add_argument("--tele-time-factor", type=float, default=None, help="t_tele = factor * t2q (default 3)")
    p.add_argument("--p2q", type=float, default=None, help="native two-qubit error probability")
    p.add_argument("--tele-error-factor", type=float, default=None, help="p_tele = factor * p2q (default 10)")


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", default="eagle127", help="eagle127 | line:N | file:PATH")
    p.add_argument("--teleport", choices=sorted(TELEPORT_GATES), default="cnot",
                   help="cnot lowers RZZ before routing; cu teleports RZZ/CU directly")
    p.add_argument("--seeds", type=int, default=5, help="routing trials per subset")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--max-subset", type=int, default=3)
    p.add_argument("--reuse-limit", type=int, default=2)
    p.add_argument("--max-path-len", type=int, default=8)
    p.add_argument("--radius", type=int, default=1, help="closeness radius for candidate filtering")
    p.add_argument("--strict-filter", action="store_true",
                   help="radius rule only: no shortcut candidates, no shortcut lookahead, reuse checked after routing")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    _add_model_args(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtg", description="Qubit routing with teleported gates")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transpile", help="route a circuit (baseline, RTG or noise-aware RTG)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit", help="circuit file (.json native or .qasm)")
    src.add_argument("--bench", help="FAMILY:N[:SEED]")
    p.add_argument("--layout", default="identity", help="line:A-B | identity | file:PATH")
    p.add_argument("--mode", choices=sorted(MODES), default="rtg")
    p.add_argument("--format", choices=["native", "qasm2"], default="native")
    _add_search_args(p)
    p.set_defaults(handler=cmd_transpile)

    p = sub.add_parser("verify", help="check a routed or expanded circuit against the original")
    p.add_argument("--original", required=True)
    p.add_argument("--final", required=True)
    p.add_argument("--layouts", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("generate", help="emit a benchmark circuit")
    p.add_argument("--bench", required=True, help="FAMILY:N[:SEED]")
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--rounds", type=int, default=None, help="QAOA rounds p")
    p.add_argument("--measure", action="store_true")
    p.add_argument("--format", choices=["native", "qasm2"], default="native")
    p.add_argument("--out", default=None, help="file to write (stdout if omitted)")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("topology", help="emit a topology file")
    p.add_argument("--topology", default="eagle127")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_topology)

    p = sub.add_parser("suite", help="run a benchmark family over a size range")
    p.add_argument("--family", required=True)
    p.add_argument("--sizes", default="9-15", help="A-B inclusive")
    p.add_argument("--layout-start", type=int, default=18, help="first physical qubit of the line layout")
    p.add_argument("--modes", default="baseline,rtg,rtg-noise")
    p.add_argument("--seed", type=int, default=0, help="benchmark seed")
    _add_search_args(p)
    p.set_defaults(handler=cmd_suite)
    return parser


# --- Shared helpers ---

def _timing_model(args, settings: Settings) -> TimingErrorModel:
    overrides = {
        "t_2q": args.t2q,
        "t_1q": args.t1q,
        "tele_time_factor": args.tele_time_factor,
        "p_2q": args.p2q,
        "tele_error_factor": args.tele_error_factor,
    }
    try:
        merged = Settings(**{**settings.model_dump(), **{k: v for k, v in overrides.items() if v is not None}})
        return merged.timing_model()
    except ValidationError as e:
        raise ConfigError("Invalid timing/error model", {"errors": e.errors(include_url=False)}) from e


def _rtg_config(args, settings: Settings, mode: str) -> RtgConfig:
    try:
        return RtgConfig(
            mode=MODES[mode],
            max_subset_size=args.max_subset,
            reuse_limit=args.reuse_limit,
            closeness_radius=args.radius,
            max_path_len=args.max_path_len,
            trials_per_subset=args.seeds,
            base_seed=args.base_seed,
            workers=args.workers or settings.workers,
            shortcut_filter=not args.strict_filter,
            reuse_in_router=not args.strict_filter,
            router=RouterParams(virtual_gates=TELEPORT_GATES[args.teleport],
                                shortcut_distance=not args.strict_filter),
        )
    except ValidationError as e:
        raise ConfigError("Invalid search parameters", {"errors": e.errors(include_url=False)}) from e


def _read_circuit(path: str) -> Circuit:
    if path.endswith(".qasm"):
        try:
            with open(path, "r") as f:
                circuit = parse_qasm2_subset(f.read())
        except OSError as e:
            raise ConfigError(f"Could not read {path}", {"path": path}) from e
        validate_circuit(circuit)
        return circuit
    try:
        return load_circuit(path)[0]
    except OSError as e:
        raise ConfigError(f"Could not read {path}", {"path": path}) from e
    except ValidationError as e:
        raise ConfigError(f"Malformed circuit file {path}", {"errors": e.errors(include_url=False)}) from e


def _write_circuit(circuit: Circuit, out_dir: str, stem: str, fmt: str, data_qubits=None) -> str:
    if fmt == "qasm2":
        try:
            text = export_qasm2(circuit)
            path = os.path.join(out_dir, f"{stem}.qasm")
            with open(path, "w") as f:
                f.write(text)
            return path
        except QasmExportError as e:
            logger.warning(f"{stem}: {e.message}; writing the native format instead")
    path = os.path.join(out_dir, f"{stem}.json")
    save_circuit(circuit, path, data_qubits)
    return path


def run_transpile(circuit: Circuit, cmap, topology_id: str, layout_spec: str, mode: str, args,
                  settings: Settings, out_dir: str, source: Optional[str], fmt: str = "native"):
    """Route one circuit, write its artifacts into `out_dir` and return the run report."""
    if args.teleport == "cnot":
        circuit = lower_rzz(circuit)
    layout = layout_from_spec(layout_spec, circuit.num_qubits, cmap)
    model = _timing_model(args, settings)
    config = _rtg_config(args, settings, mode)
    if mode == "baseline":
        result = baseline_only(circuit, cmap, layout, model, config)
    else:
        result = rtg_search(circuit, cmap, layout, model, config)

    if not os.path.exists(out_dir):
        os.makedirs(out_dir)
    data = sorted(layout.data_set)
    routed = result.best.routed
    _write_circuit(circuit, out_dir, "original", fmt)
    _write_circuit(routed.circuit, out_dir, "routed", fmt, data)
    _write_circuit(result.expanded, out_dir, "expanded", fmt, data)
    layouts = LayoutsDocument(initial=list(routed.initial_layout.mapping), final=list(routed.final_layout.mapping))
    with open(os.path.join(out_dir, "layouts.json"), "w") as f:
        f.write(dumps_model(layouts))

    report = build_report(result, mode, topology_id, layout, model, config, source)
    write_report(report, out_dir)
    append_run_log(report, out_dir)
    return report


# --- Commands ---

def cmd_transpile(args, settings: Settings) -> int:
    if args.bench:
        spec = parse_bench(args.bench)
        circuit, source = generate(spec), args.bench
    else:
        circuit, source = _read_circuit(args.circuit), args.circuit
    cmap = topology_from_spec(args.topology)
    out_dir = args.out or settings.out_dir
    report = run_transpile(circuit, cmap, args.topology, args.layout, args.mode, args, settings, out_dir,
                           source, args.format)
    logger.info(f"Wrote routed, expanded and report files to {out_dir}")
    print(dumps_model(report))
    return 0


def cmd_verify(args, settings: Settings) -> int:
    original = _read_circuit(args.original)
    final = _read_circuit(args.final)
    try:
        with open(args.layouts, "r") as f:
            initial, final_layout = LayoutsDocument.model_validate_json(f.read()).layouts()
    except OSError as e:
        raise ConfigError(f"Could not read {args.layouts}", {"path": args.layouts}) from e
    except ValidationError as e:
        raise ConfigError(f"Malformed layouts file {args.layouts}",
                          {"errors": e.errors(include_url=False)}) from e
    logger.info(f"Verifying {args.final} against {args.original} (branch cap {BRANCH_CAP})")
    result = verify_routed_equivalence(original, final, initial, final_layout, args.trials, args.tol, args.seed)
    print(json.dumps({
        "passed": result.passed,
        "max_deviation": result.max_deviation,
        "trials": result.trials,
        "branches": result.branches,
        "failures": result.failures[:10],
    }, indent=2))
    if not result.passed:
        logger.error(f"Verification failed: max deviation {result.max_deviation:.3e} > {args.tol}")
        return 1
    return 0


def _bench_spec(text: str, degree: Optional[int] = None, rounds: Optional[int] = None,
                measure: bool = False) -> BenchSpec:
    spec = parse_bench(text)
    params = {}
    if degree is not None:
        params["degree"] = degree
    if rounds is not None:
        params["p"] = rounds
    if measure:
        params["measure"] = True
    return spec.model_copy(update={"params": params})


def cmd_generate(args, settings: Settings) -> int:
    circuit = generate(_bench_spec(args.bench, args.degree, args.rounds, args.measure))
    text = export_qasm2(circuit) if args.format == "qasm2" else dumps_circuit(circuit)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        logger.info(f"Wrote {args.bench} ({len(circuit)} gates) to {args.out}")
    else:
        print(text)
    return 0


def cmd_topology(args, settings: Settings) -> int:
    cmap = topology_from_spec(args.topology)
    save_topology(cmap, args.out)
    logger.info(f"Wrote {args.topology}: {cmap.num_physical} qubits, {len(cmap.native_edges)} edges")
    return 0


def _parse_sizes(text: str) -> List[int]:
    try:
        if "-" in text:
            start, stop = (int(v) for v in text.split("-"))
            return list(range(start, stop + 1))
        return [int(v) for v in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"Bad size range '{text}'") from e


def cmd_suite(args, settings: Settings) -> int:
    cmap = topology_from_spec(args.topology)
    out_dir = args.out or settings.out_dir
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    unknown = [m for m in modes if m not in MODES]
    if unknown:
        raise ConfigError(f"Unknown modes {unknown}", {"modes": sorted(MODES)})
    reports = []
    for n in _parse_sizes(args.sizes):
        text = f"{args.family}:{n}:{args.seed}"
        # 3-regular graphs need an even vertex count
        degree = 4 if n % 2 and args.family.lower() in ("graphstate", "qaoamaxcut") else None
        circuit = generate(_bench_spec(text, degree))
        layout_spec = f"line:{args.layout_start}-{args.layout_start + n - 1}"
        for mode in modes:
            run_dir = os.path.join(out_dir, f"{args.family}-{n}", mode)
            logger.info(f"Suite run {text} mode={mode}")
            reports.append(run_transpile(circuit, cmap, args.topology, layout_spec, mode, args, settings,
                                         run_dir, text))
    table = aggregate_table(reports)
    paths = write_table(table, out_dir, f"summary-{args.family}")
    print(table.to_string(index=False))
    logger.info(f"Wrote {paths['csv']} and {paths['txt']}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings()
        configure_logging(args.log_level or settings.log_level, settings.log_format)
        return args.handler(args, settings)
    except RtgError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        print(json.dumps(e.to_record(), default=str), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
