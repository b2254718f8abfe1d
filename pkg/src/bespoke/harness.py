"""Experiment harness: the model x precision x variant x core-profile sweep.

Each cell quantizes a model, generates the variant's program, runs the full
committed test split through the simulator and aggregates accuracy, cycles,
code size, ROM cost and the modeled core saving.  Speedup is measured
against the profile's baseline variant at the same precision: multiply
code on the MUL-equipped profile, the software-multiply expansion on the
multiplier-less profile.

Everything is deterministic; rendered reports are sorted by cell key, so
two sweeps over the same inputs serialize byte-identically.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .codegen import (CodegenOptions, VARIANTS, encode_input_words,
                      generate_program)
from .isa import ISAConfig, baseline_config, encode
from .machine import CostModel, Machine
from .models import (FloatModel, load_model, quantize_input, quantize_model,
                     reference_infer_float, regression_label)
from .reduction import (ComponentCostTable, RomCellCost, analyze_static,
                        derive_config, estimate_core_savings, rom_cost)


@dataclass(frozen=True)
class CoreProfile:
    name: str
    with_mul: bool
    word_width_bits: int = 32

    def config(self) -> ISAConfig:
        return baseline_config(word_width_bits=self.word_width_bits,
                               with_mul=self.with_mul)

    @property
    def baseline_variant(self) -> str:
        return "mul_baseline" if self.with_mul else "softmul_baseline"


PROFILES = {
    "zr": CoreProfile("zr", with_mul=True),
    "tpisa": CoreProfile("tpisa", with_mul=False),
}

PRECISIONS = (4, 8, 16, 32)

CSV_COLUMNS = ("model", "precision", "variant", "profile", "accuracy",
               "loss_pp", "cycles", "speedup_pct", "instr_count",
               "rom_area_mm2", "rom_power_mW", "modeled_core_saving_pct")


@dataclass
class EvalReport:
    model: str
    precision: int
    variant: str
    profile: str
    accuracy: float                 # percent
    loss_pp: float                  # float reference minus quantized, pp
    cycles: float                   # average per inference
    speedup_pct: float              # vs the profile baseline variant
    instr_count: int
    rom_area_mm2: float
    rom_power_mW: float
    modeled_core_saving_pct: float     # area; power in the JSON payload
    modeled_core_power_saving_pct: float
    modeled_area_mm2: float            # core after saving + ROM (scatter x)
    pareto: bool = False

    def key(self):
        return (self.model, self.precision,
                VARIANTS.index(self.variant), self.profile)

    def to_dict(self) -> dict:
        d = {c: getattr(self, c) for c in CSV_COLUMNS}
        d["modeled_core_power_saving_pct"] = self.modeled_core_power_saving_pct
        d["modeled_area_mm2"] = self.modeled_area_mm2
        d["pareto"] = self.pareto
        return d


@dataclass
class CellResult:
    """Per-(model, precision, variant) simulation outcome; profile agnostic
    because every profile runs the identical program on a superset core."""
    outputs: list[int]
    accuracy: float                 # fraction
    avg_cycles: float
    instr_count: int
    program: object
    quant_model: object


class CellError(Exception):
    def __init__(self, cell, cause):
        super().__init__(f"{cell}: {cause}")
        self.cell = cell
        self.cause = cause


def variant_allowed(variant: str, precision: int,
                    profile: CoreProfile) -> bool:
    if variant == "mac_simd" and precision > 16:
        return False
    if variant == "mul_baseline" and not profile.with_mul:
        return False
    return True


class Evaluator:
    """Caches models, quantizations and runs across sweep cells."""

    def __init__(self, cost_model: CostModel | None = None,
                 rom_cell: RomCellCost | None = None,
                 cost_table: ComponentCostTable | None = None,
                 max_cycles_per_inference: int = 5_000_000):
        self.cost_model = cost_model or CostModel()
        self.rom_cell = rom_cell or RomCellCost()
        self.cost_table = cost_table or ComponentCostTable()
        self.max_cycles = max_cycles_per_inference
        self._models: dict[str, FloatModel] = {}
        self._quant = {}
        self._cells: dict[tuple, CellResult] = {}
        self._float_acc: dict[str, float] = {}

    # -- model registry ------------------------------------------------

    def add_model(self, model: FloatModel | str) -> str:
        if not isinstance(model, FloatModel):
            model = load_model(model)
        self._models[model.model_id] = model
        return model.model_id

    def model(self, model_id: str) -> FloatModel:
        return self._models[model_id]

    def quantized(self, model_id: str, precision: int):
        key = (model_id, precision)
        if key not in self._quant:
            self._quant[key] = quantize_model(self._models[model_id],
                                              precision)
        return self._quant[key]

    def float_accuracy(self, model_id: str) -> float:
        if model_id not in self._float_acc:
            model = self._models[model_id]
            hits = 0
            for x, y in zip(model.test_x, model.test_y):
                pred = reference_infer_float(model, x)
                if model.is_classifier:
                    hits += pred == y
                else:
                    hits += regression_label(pred) == int(y)
            self._float_acc[model_id] = hits / len(model.test_y)
        return self._float_acc[model_id]

    # -- simulation ------------------------------------------------------

    def run_cell(self, model_id: str, precision: int,
                 variant: str) -> CellResult:
        key = (model_id, precision, variant)
        if key in self._cells:
            return self._cells[key]
        model = self._models[model_id]
        qm = self.quantized(model_id, precision)
        opts = CodegenOptions(variant, precision)
        program = generate_program(qm, opts)

        machine = Machine(baseline_config(with_mul=True),
                          self.cost_model)
        machine.load(program)
        input_addr = program.data_labels["input"]
        result_addr = program.data_labels["result"]

        outputs = []
        total_cycles = 0
        hits = 0
        for index, (x, y) in enumerate(zip(model.test_x, model.test_y)):
            codes = quantize_input(qm, x)
            machine.reset()
            machine.write_words(input_addr,
                                encode_input_words(qm, opts, codes))
            try:
                stats = machine.run(max_cycles=self.max_cycles)
            except Exception as exc:
                raise CellError((model_id, precision, variant, index),
                                exc) from exc
            total_cycles += stats.total_cycles
            code = machine.read_word(result_addr)
            outputs.append(code)
            if qm.is_classifier:
                hits += qm.class_labels[code] == y
            else:
                value = code / (1 << qm.output_scale)
                hits += regression_label(value) == int(y)
        n = len(model.test_y)
        cell = CellResult(outputs=outputs, accuracy=hits / n,
                          avg_cycles=total_cycles / n,
                          instr_count=len(program.instructions),
                          program=program, quant_model=qm)
        self._cells[key] = cell
        return cell

    # -- reporting --------------------------------------------------------

    def evaluate(self, model_id: str, precision: int, variant: str,
                 profile: CoreProfile) -> EvalReport:
        if not variant_allowed(variant, precision, profile):
            raise CellError((model_id, precision, variant, profile.name),
                            "inconsistent combination")
        cell = self.run_cell(model_id, precision, variant)
        base = self.run_cell(model_id, precision, profile.baseline_variant)
        speedup = 100.0 * (1.0 - cell.avg_cycles / base.avg_cycles)

        image = encode(cell.program, profile.word_width_bits)
        area_mm2, power_uW = rom_cost(image, self.rom_cell)

        bespoke_cfg = derive_config(analyze_static(cell.program),
                                    profile.config())
        savings = estimate_core_savings(bespoke_cfg, profile.config(),
                                        self.cost_table)
        core_area_mm2 = self.cost_table.baseline_area_cm2 * 100.0 \
            * (1.0 - savings.area_saving_pct / 100.0)

        float_acc = self.float_accuracy(model_id)
        return EvalReport(
            model=model_id,
            precision=precision,
            variant=variant,
            profile=profile.name,
            accuracy=100.0 * cell.accuracy,
            loss_pp=100.0 * (float_acc - cell.accuracy),
            cycles=cell.avg_cycles,
            speedup_pct=speedup,
            instr_count=cell.instr_count,
            rom_area_mm2=area_mm2,
            rom_power_mW=power_uW / 1000.0,
            modeled_core_saving_pct=savings.area_saving_pct,
            modeled_core_power_saving_pct=savings.power_saving_pct,
            modeled_area_mm2=core_area_mm2 + area_mm2)


@dataclass
class SweepResult:
    reports: list[EvalReport]
    errors: list[dict] = field(default_factory=list)

    def pareto_points(self):
        return [r for r in self.reports if r.pareto]


def mark_pareto(reports: list[EvalReport]):
    """Flag points not dominated in (modeled area down, speedup up)."""
    for r in reports:
        r.pareto = not any(
            (q.modeled_area_mm2 <= r.modeled_area_mm2
             and q.speedup_pct >= r.speedup_pct
             and (q.modeled_area_mm2 < r.modeled_area_mm2
                  or q.speedup_pct > r.speedup_pct))
            for q in reports)


def sweep(models, precisions=PRECISIONS, variants=VARIANTS,
          profiles=None, evaluator: Evaluator | None = None) -> SweepResult:
    """Cross product minus inconsistent combinations; per-cell failures are
    recorded and the sweep continues."""
    ev = evaluator or Evaluator()
    profiles = list(profiles or PROFILES.values())
    ids = [ev.add_model(m) for m in models]
    reports, errors = [], []
    for model_id in ids:
        for precision in precisions:
            for variant in variants:
                for profile in profiles:
                    if not variant_allowed(variant, precision, profile):
                        continue
                    try:
                        reports.append(ev.evaluate(model_id, precision,
                                                   variant, profile))
                    except CellError as err:
                        errors.append({"cell": repr(err.cell),
                                       "error": str(err.cause)})
    reports.sort(key=EvalReport.key)
    mark_pareto(reports)
    return SweepResult(reports=reports, errors=errors)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def render_csv(reports) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in reports:
        out.write(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS) + "\n")
    return out.getvalue()


def speedup_means(reports) -> list[dict]:
    """Arithmetic-mean speedup per (profile, variant, precision) across
    models; the per-model rows remain the primary data."""
    groups: dict[tuple, list[float]] = {}
    for r in reports:
        groups.setdefault((r.profile, r.variant, r.precision),
                          []).append(r.speedup_pct)
    return [{"profile": p, "variant": v, "precision": n,
             "mean_speedup_pct": round(sum(vals) / len(vals), 2),
             "models": len(vals), "averaging": "arithmetic_mean"}
            for (p, v, n), vals in sorted(groups.items())]


def render_json(result: SweepResult) -> str:
    payload = {
        "note": "area/power figures are modeled (parametric component "
                "model), not synthesis results",
        "reports": [r.to_dict() for r in result.reports],
        "summary": {"speedup_means": speedup_means(result.reports)},
        "errors": result.errors,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_table(reports) -> str:
    headers = list(CSV_COLUMNS) + ["pareto"]
    rows = [[_fmt(getattr(r, c)) for c in CSV_COLUMNS]
            + ["*" if r.pareto else ""] for r in reports]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    out = io.StringIO()
    out.write("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()
              + "\n")
    for row in rows:
        out.write("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip()
                  + "\n")
    out.write("# core saving and area columns are modeled "
              "(parametric component model)\n")
    return out.getvalue()


def render_scatter_csv(reports) -> str:
    """(modeled_area, speedup, label, pareto) tuples for Fig-5-style plots."""
    out = io.StringIO()
    out.write("modeled_area_mm2,speedup_pct,label,pareto\n")
    for r in reports:
        label = f"{r.model}/{r.variant}/p{r.precision}/{r.profile}"
        out.write(f"{r.modeled_area_mm2:.2f},{r.speedup_pct:.2f},"
                  f"{label},{1 if r.pareto else 0}\n")
    return out.getvalue()
