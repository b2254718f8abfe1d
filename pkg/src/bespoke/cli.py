"""Command line interface.

Subcommands mirror the workflow: analyze (usage profile + derived bespoke
config), codegen (model -> assembly), sim (run with stats), report (the
full sweep).  stdout carries machine-readable JSON only; human diagnostics
go to stderr.  Exit codes: 0 ok, 1 parse error, 2 simulation fault,
3 nothing to do, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import MODEL_FORMAT_VERSION, __version__
from .codegen import CodegenOptions, generate_program
from .harness import (Evaluator, PROFILES, PRECISIONS, render_csv,
                      render_json, render_scatter_csv, render_table, sweep)
from .isa import AsmError, baseline_config, parse_assembly, pretty_print, \
    validate
from .machine import (CostModel, CycleBudgetExceeded, Machine,
                      SimulationFault)
from .models import ModelFormatError, load_model, quantize_model
from .reduction import (analyze_dynamic, analyze_static, derive_config,
                        load_config_file, save_config_file)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_FAULT = 2
EXIT_EMPTY = 3
EXIT_USAGE = 64

VARIANT_FLAGS = {
    "softmul": "softmul_baseline",
    "mul": "mul_baseline",
    "mac": "mac_scalar",
    "simd": "mac_simd",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(payload: dict):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_config(path):
    if path is None:
        return baseline_config(), CostModel()
    cfg, cost, _ = load_config_file(path)
    if cfg is None:
        raise AsmError(f"config file {path} has no [core] section")
    return cfg, cost or CostModel()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    try:
        program = parse_assembly(Path(args.asm).read_text())
    except (OSError, AsmError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        baseline, cost = _load_config(args.config)
    except (OSError, AsmError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    try:
        if args.dynamic:
            profile = analyze_dynamic(program, baseline, cost,
                                      max_cycles=args.max_cycles)
        else:
            profile = analyze_static(program)
        bespoke_cfg = derive_config(profile, baseline)
    except (SimulationFault, CycleBudgetExceeded) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except ValueError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    out = Path(args.out) if args.out else \
        Path(args.asm).with_suffix(".bespoke.cfg")
    save_config_file(out, bespoke_cfg, cost)
    _emit({
        "profile": {
            "source": profile.source,
            "used_opcodes": sorted(profile.used_opcodes),
            "used_registers": sorted(profile.used_registers),
            "code_size_instructions": profile.code_size_instructions,
            "max_data_address": profile.max_data_address,
        },
        "bespoke_config": {
            "path": str(out),
            "register_count": bespoke_cfg.register_count,
            "pc_width_bits": bespoke_cfg.pc_width_bits,
            "bar_width_bits": bespoke_cfg.bar_width_bits,
            "enabled_opcodes": sorted(bespoke_cfg.enabled_opcodes),
            "mac_precisions": sorted(bespoke_cfg.mac_precisions),
        },
    })
    return EXIT_OK


def cmd_codegen(args) -> int:
    variant = VARIANT_FLAGS[args.variant]
    try:
        opts = CodegenOptions(variant, args.precision,
                              word_width_bits=args.word_width)
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        model = load_model(args.model)
    except (OSError, ModelFormatError, json.JSONDecodeError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    qm = quantize_model(model, args.precision)
    program = generate_program(qm, opts)

    report = validate(program, baseline_config())
    assert report.ok, report.violations
    out = Path(args.out) if args.out else Path(
        args.model).with_suffix(f".{args.variant}{args.precision}.asm")
    out.write_text(pretty_print(program))
    if args.rom:
        from .isa import encode
        Path(args.rom).write_text(
            encode(program, args.word_width).hex_dump())
    _emit({
        "output": str(out),
        "model": model.model_id,
        "variant": variant,
        "precision": args.precision,
        "lanes": opts.lanes,
        "instructions": len(program.instructions),
        "data_words": len(program.data_segment),
        "input_address": program.data_labels["input"],
        "result_address": program.data_labels["result"],
        "saturations": qm.saturation_count,
    })
    return EXIT_OK


def cmd_sim(args) -> int:
    try:
        program = parse_assembly(Path(args.asm).read_text())
        config, cost = _load_config(args.config)
    except (OSError, AsmError, ValueError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    machine = Machine(config, cost)
    try:
        machine.load(program)
    except SimulationFault as exc:
        _emit(exc.to_dict())
        return EXIT_FAULT

    trace_lines = []
    trace = None
    if args.trace:
        def trace(index, mnemonic, cycles, cumulative):
            trace_lines.append(f"{index}\t{mnemonic}\t{cycles}\t{cumulative}")
    try:
        stats = machine.run(max_cycles=args.max_cycles, trace=trace) \
            if trace else machine.run_counted(max_cycles=args.max_cycles)
    except SimulationFault as exc:
        _emit(exc.to_dict())
        return EXIT_FAULT
    except CycleBudgetExceeded as exc:
        _emit({"error": "cycle_budget_exceeded", "cycles": exc.cycles,
               "pc": exc.pc})
        return EXIT_FAULT
    if args.trace:
        Path(args.trace).write_text("\n".join(trace_lines) + "\n")
    _emit(stats.to_dict())
    return EXIT_OK


def cmd_report(args) -> int:
    model_files = sorted(Path(args.models).glob("*.json"))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    precisions = [int(p) for p in args.precisions.split(",")]
    variants = [VARIANT_FLAGS[v] for v in args.variants.split(",")]
    profiles = [PROFILES[p] for p in args.profiles.split(",")]

    if not model_files:
        (out_dir / "report.csv").write_text(render_csv([]))
        print("no model files found", file=sys.stderr)
        return EXIT_EMPTY

    result = sweep(model_files, precisions=precisions, variants=variants,
                   profiles=profiles, evaluator=Evaluator())
    (out_dir / "report.csv").write_text(render_csv(result.reports))
    (out_dir / "report.json").write_text(render_json(result))
    (out_dir / "report.txt").write_text(render_table(result.reports))
    (out_dir / "scatter.csv").write_text(render_scatter_csv(result.reports))
    _emit({
        "models": [str(p) for p in model_files],
        "reports": len(result.reports),
        "errors": result.errors,
        "outputs": [str(out_dir / name) for name in
                    ("report.csv", "report.json", "report.txt",
                     "scatter.csv")],
    })
    return EXIT_OK if result.reports else EXIT_EMPTY


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    ap = _Parser(prog="bespoke",
                 description="Bespoke-core toolkit: analyze, generate, "
                             "simulate, report.")
    ap.add_argument("--version", action="version",
                    version=f"bespoke {__version__} "
                            f"(model format {MODEL_FORMAT_VERSION})")
    sub = ap.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="profile a program and derive the "
                                        "minimal core configuration")
    pa.add_argument("asm")
    pa.add_argument("--dynamic", action="store_true",
                    help="profile an actual run instead of the text")
    pa.add_argument("--config", default=None,
                    help="baseline core config file (default: untrimmed)")
    pa.add_argument("--out", default=None,
                    help="derived config path (default: <asm>.bespoke.cfg)")
    pa.add_argument("--max-cycles", type=int, default=10_000_000)
    pa.set_defaults(fn=cmd_analyze)

    pc = sub.add_parser("codegen", help="generate a fixed-point inference "
                                        "program from a model file")
    pc.add_argument("model")
    pc.add_argument("--precision", type=int, required=True,
                    choices=(4, 8, 16, 32))
    pc.add_argument("--variant", required=True, choices=sorted(VARIANT_FLAGS))
    pc.add_argument("--word-width", type=int, default=32, choices=(16, 32))
    pc.add_argument("--out", default=None)
    pc.add_argument("--rom", default=None,
                    help="also write the ROM image as a hex dump")
    pc.set_defaults(fn=cmd_codegen)

    ps = sub.add_parser("sim", help="run a program and print run statistics")
    ps.add_argument("asm")
    ps.add_argument("--config", default=None)
    ps.add_argument("--trace", default=None,
                    help="write a per-instruction trace file")
    ps.add_argument("--max-cycles", type=int, default=10_000_000)
    ps.set_defaults(fn=cmd_sim)

    pr = sub.add_parser("report", help="run the evaluation sweep and write "
                                       "table/CSV/JSON outputs")
    pr.add_argument("--models", required=True,
                    help="directory of interchange model files")
    pr.add_argument("--out-dir", required=True)
    pr.add_argument("--precisions", default="4,8,16,32")
    pr.add_argument("--variants", default="softmul,mul,mac,simd")
    pr.add_argument("--profiles", default="zr,tpisa")
    pr.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
