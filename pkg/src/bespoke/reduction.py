"""Logic reduction and hardware cost estimation.

Profiles a program (statically or from an execution trace), derives the
minimal core configuration that still runs it (opcode subset, register file
size, PC/BAR widths), and prices the result: ROM cells for the program
image, and a declared linear component model for core area/power savings.

The component model is explicitly a parametric stand-in for synthesis; every
report it produces is labeled "modeled".
"""

from __future__ import annotations

import configparser
import json
import io
from dataclasses import dataclass, field, replace

from .isa import ISAConfig, OPCODES, Program, RomImage
from .machine import CostModel, Machine


# ---------------------------------------------------------------------------
# usage profiling
# ---------------------------------------------------------------------------

@dataclass
class UsageProfile:
    used_opcodes: set[str]
    used_registers: set[int]
    code_size_instructions: int
    max_data_address: int
    source: str                      # "static" | "dynamic"

    def union(self, other: "UsageProfile") -> "UsageProfile":
        """Combined profile for multi-program cores."""
        return UsageProfile(
            used_opcodes=self.used_opcodes | other.used_opcodes,
            used_registers=self.used_registers | other.used_registers,
            code_size_instructions=max(self.code_size_instructions,
                                       other.code_size_instructions),
            max_data_address=max(self.max_data_address, other.max_data_address),
            source=f"{self.source}+{other.source}")


def analyze_static(program: Program) -> UsageProfile:
    """Profile from the program text alone; x0 always counts as used."""
    opcodes = {i.op.mnemonic for i in program.instructions}
    registers = {0}
    for i in program.instructions:
        registers.update(i.registers())
    return UsageProfile(
        used_opcodes=opcodes,
        used_registers=registers,
        code_size_instructions=len(program.instructions),
        max_data_address=program.max_data_address,
        source="static")


def analyze_dynamic(program: Program, config: ISAConfig,
                    cost_model: CostModel | None = None,
                    inputs: dict[int, int] | None = None,
                    max_cycles: int = 10_000_000) -> UsageProfile:
    """Profile from an actual run: only retired opcodes and touched registers.

    The data footprint is the segment extent plus any word the run wrote
    beyond it; simulation faults propagate.
    """
    m = Machine(config, cost_model)
    m.load(program)
    if inputs:
        for addr, value in inputs.items():
            m.write_word(addr, value)
    stats = m.run_counted(max_cycles=max_cycles, track_registers=True)
    max_addr = max(program.max_data_address, len(m.mem) - 1 if m.mem else 0)
    return UsageProfile(
        used_opcodes=set(stats.retired_by_opcode),
        used_registers=m.touched_registers | {0},
        code_size_instructions=len(program.instructions),
        max_data_address=max_addr,
        source="dynamic")


def _ceil_log2(count: int) -> int:
    # bits needed to index `count` distinct slots
    return max(1, (count - 1).bit_length()) if count > 1 else 1


def derive_config(profile: UsageProfile, baseline: ISAConfig) -> ISAConfig:
    """Shrink the baseline to exactly what the profile needs.

    Opcodes become the used set, the register file is cut at the highest
    used index, and PC/BAR widths drop to ceil(log2) of the code and data
    footprints (floor 1 bit).
    """
    if not profile.used_opcodes:
        raise ValueError("cannot derive a core from an empty usage profile")
    extra = profile.used_opcodes - set(baseline.enabled_opcodes)
    if extra:
        raise ValueError(f"profile uses opcodes the baseline lacks: "
                         f"{sorted(extra)}")
    precisions = frozenset(OPCODES[mn].mac_precision
                           for mn in profile.used_opcodes
                           if OPCODES[mn].cls == "mac")
    return ISAConfig(
        enabled_opcodes=frozenset(profile.used_opcodes),
        register_count=max(2, max(profile.used_registers) + 1),
        pc_width_bits=_ceil_log2(profile.code_size_instructions),
        bar_width_bits=_ceil_log2(profile.max_data_address + 1),
        word_width_bits=baseline.word_width_bits,
        mac_precisions=precisions)


# ---------------------------------------------------------------------------
# ROM cost model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RomCellCost:
    area_per_cell_mm2: float = 0.84
    power_per_cell_uW: float = 18.23
    cell_granularity: str = "per_bit"      # or "per_word"

    def __post_init__(self):
        if self.area_per_cell_mm2 <= 0 or self.power_per_cell_uW <= 0:
            raise ValueError("ROM cell costs must be positive")
        if self.cell_granularity not in ("per_bit", "per_word"):
            raise ValueError("cell_granularity must be per_bit or per_word")


def rom_cost(image: RomImage, cost: RomCellCost = RomCellCost()) \
        -> tuple[float, float]:
    """(area mm^2, power uW) of the ROM holding this image."""
    cells = image.total_bits if cost.cell_granularity == "per_bit" \
        else len(image.words)
    return cells * cost.area_per_cell_mm2, cells * cost.power_per_cell_uW


# ---------------------------------------------------------------------------
# core component cost model
# ---------------------------------------------------------------------------

_COMPONENTS = ("mul", "rf", "ex", "ifid", "other")


@dataclass(frozen=True)
class ComponentCostTable:
    """Linear area/power shares of the baseline core's functional blocks.

    Area fractions split the multiplier+register-file figure of 46.5% into
    MUL 0.28 / RF 0.185; the power split pairs to 46.2%.  The individual
    splits are documented assumptions (only the combined figures are
    anchored) and every field is overridable from the config file.
    """
    area_fractions: dict = field(default_factory=lambda: {
        "mul": 0.28, "rf": 0.185, "ex": 0.20, "ifid": 0.25, "other": 0.085})
    power_fractions: dict = field(default_factory=lambda: {
        "mul": 0.277, "rf": 0.185, "ex": 0.20, "ifid": 0.25, "other": 0.088})
    baseline_area_cm2: float = 67.53
    baseline_power_mW: float = 291.21
    mac_fraction_area: float = 0.02        # charge per enabled precision mode
    mac_fraction_power: float = 0.02
    pc_bit_share: float | None = None      # default: ifid fraction / 64
    bar_bit_share: float | None = None

    def __post_init__(self):
        for name, fr in (("area", self.area_fractions),
                         ("power", self.power_fractions)):
            missing = set(_COMPONENTS) - set(fr)
            if missing:
                raise ValueError(f"{name} fractions missing {sorted(missing)}")
            total = sum(fr[c] for c in _COMPONENTS)
            if total > 1.0 + 1e-9:
                raise ValueError(f"{name} fractions sum to {total} > 1")

    def per_register_share(self, which: str) -> float:
        fr = self.area_fractions if which == "area" else self.power_fractions
        return fr["rf"] / 32.0

    def per_bit_share(self, which: str, kind: str) -> float:
        override = self.pc_bit_share if kind == "pc" else self.bar_bit_share
        if override is not None:
            return override
        fr = self.area_fractions if which == "area" else self.power_fractions
        return fr["ifid"] / 64.0


@dataclass
class SavingsReport:
    removed_components: list[str]
    removed_opcodes: list[str]
    removed_opcode_groups: list[str]
    register_count_before: int
    register_count_after: int
    pc_width_before: int
    pc_width_after: int
    bar_width_before: int
    bar_width_after: int
    area_saving_pct: float
    power_saving_pct: float
    mac_precision_modes: int
    rom_area_before_mm2: float | None = None
    rom_area_after_mm2: float | None = None
    rom_power_before_uW: float | None = None
    rom_power_after_uW: float | None = None

    def to_json(self) -> str:
        payload = {"model": "modeled (linear component cost model, "
                            "not synthesis)"}
        payload.update(self.__dict__)
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_text(self) -> str:
        rows = [
            ("registers", str(self.register_count_before),
             str(self.register_count_after)),
            ("pc width (bits)", str(self.pc_width_before),
             str(self.pc_width_after)),
            ("bar width (bits)", str(self.bar_width_before),
             str(self.bar_width_after)),
            ("area saving (modeled)", "-", f"{self.area_saving_pct:.2f}%"),
            ("power saving (modeled)", "-", f"{self.power_saving_pct:.2f}%"),
        ]
        if self.rom_area_before_mm2 is not None:
            rows.append(("rom area (mm2)", f"{self.rom_area_before_mm2:.2f}",
                         f"{self.rom_area_after_mm2:.2f}"))
            rows.append(("rom power (uW)", f"{self.rom_power_before_uW:.2f}",
                         f"{self.rom_power_after_uW:.2f}"))
        out = io.StringIO()
        out.write("modeled core savings (linear component model)\n")
        w0 = max(len(r[0]) for r in rows)
        w1 = max(len(r[1]) for r in rows + [("", "before", "")])
        w2 = max(len(r[2]) for r in rows + [("", "", "after")])
        out.write(f"{'':<{w0}}  {'before':>{w1}}  {'after':>{w2}}\n")
        for name, before, after in rows:
            out.write(f"{name:<{w0}}  {before:>{w1}}  {after:>{w2}}\n")
        if self.removed_components:
            out.write(f"removed components: "
                      f"{', '.join(self.removed_components)}\n")
        out.write(f"removed opcodes: {len(self.removed_opcodes)}\n")
        return out.getvalue()


def _saving(which: str, bespoke: ISAConfig, baseline: ISAConfig,
            table: ComponentCostTable, mul_removed: bool) -> float:
    fr = table.area_fractions if which == "area" else table.power_fractions
    total = 0.0
    if mul_removed:
        total += fr["mul"]
    total += table.per_register_share(which) * \
        (baseline.register_count - bespoke.register_count)
    total += table.per_bit_share(which, "pc") * \
        (baseline.pc_width_bits - bespoke.pc_width_bits)
    total += table.per_bit_share(which, "bar") * \
        (baseline.bar_width_bits - bespoke.bar_width_bits)
    mac_frac = table.mac_fraction_area if which == "area" \
        else table.mac_fraction_power
    total -= mac_frac * len(bespoke.mac_precisions)
    return 100.0 * min(1.0, max(0.0, total))


def estimate_core_savings(bespoke: ISAConfig, baseline: ISAConfig,
                          table: ComponentCostTable = ComponentCostTable()) \
        -> SavingsReport:
    """Modeled area/power saving of the bespoke core vs the baseline.

    Fully removed components contribute their whole fraction (the multiplier
    goes iff no MUL/MULH and no MAC opcode survives, since the MAC unit
    reuses the multiplier macro); the register file, PC and BAR contribute
    linearly per removed register/bit; each enabled MAC precision mode
    charges mac_fraction back.
    """
    if not set(bespoke.enabled_opcodes) <= set(baseline.enabled_opcodes):
        raise ValueError("bespoke opcode set is not a subset of the baseline")
    if (bespoke.register_count > baseline.register_count
            or bespoke.pc_width_bits > baseline.pc_width_bits
            or bespoke.bar_width_bits > baseline.bar_width_bits):
        raise ValueError("bespoke config exceeds the baseline")

    uses_multiplier = any(
        mn in bespoke.enabled_opcodes and OPCODES[mn].cls in ("mul", "mac")
        for mn in OPCODES)
    mul_removed = not uses_multiplier
    removed_opcodes = sorted(set(baseline.enabled_opcodes)
                             - set(bespoke.enabled_opcodes))
    removed_groups = sorted(set(baseline.optional_groups)
                            - set(bespoke.optional_groups))
    return SavingsReport(
        removed_components=["MUL"] if mul_removed else [],
        removed_opcodes=removed_opcodes,
        removed_opcode_groups=removed_groups,
        register_count_before=baseline.register_count,
        register_count_after=bespoke.register_count,
        pc_width_before=baseline.pc_width_bits,
        pc_width_after=bespoke.pc_width_bits,
        bar_width_before=baseline.bar_width_bits,
        bar_width_after=bespoke.bar_width_bits,
        area_saving_pct=_saving("area", bespoke, baseline, table, mul_removed),
        power_saving_pct=_saving("power", bespoke, baseline, table,
                                 mul_removed),
        mac_precision_modes=len(bespoke.mac_precisions))


# ---------------------------------------------------------------------------
# configuration files (INI-style: sections for core/opcodes/costs/fractions)
# ---------------------------------------------------------------------------

def save_config_file(path, isa: ISAConfig, cost: CostModel | None = None,
                     table: ComponentCostTable | None = None):
    cp = configparser.ConfigParser()
    cp["core"] = {
        "word_width_bits": str(isa.word_width_bits),
        "register_count": str(isa.register_count),
        "pc_width_bits": str(isa.pc_width_bits),
        "bar_width_bits": str(isa.bar_width_bits),
        "mac_precisions": ",".join(str(n) for n in sorted(isa.mac_precisions)),
    }
    cp["opcodes"] = {
        "enabled": " ".join(sorted(isa.enabled_opcodes)),
        "optional_groups": " ".join(sorted(isa.optional_groups)),
    }
    if cost is not None:
        cp["costs"] = {k: str(v) for k, v in vars(cost).items()}
    if table is not None:
        section = {}
        for comp, v in table.area_fractions.items():
            section[f"area_{comp}"] = str(v)
        for comp, v in table.power_fractions.items():
            section[f"power_{comp}"] = str(v)
        section["baseline_area_cm2"] = str(table.baseline_area_cm2)
        section["baseline_power_mw"] = str(table.baseline_power_mW)
        section["mac_fraction_area"] = str(table.mac_fraction_area)
        section["mac_fraction_power"] = str(table.mac_fraction_power)
        cp["fractions"] = section
    with open(path, "w") as f:
        cp.write(f)


def load_config_file(path) -> tuple[ISAConfig | None, CostModel | None,
                                    ComponentCostTable | None]:
    """Read (ISAConfig, CostModel, ComponentCostTable); absent sections
    yield None for that slot.  Schema in docs/config-format.md."""
    cp = configparser.ConfigParser()
    with open(path) as f:
        cp.read_file(f)

    isa_cfg = None
    if cp.has_section("core"):
        core = cp["core"]
        ops = cp.get("opcodes", "enabled", fallback="").split()
        groups = cp.get("opcodes", "optional_groups", fallback="").split()
        precisions = frozenset(
            int(t) for t in core.get("mac_precisions", "").split(",") if t)
        isa_cfg = ISAConfig(
            enabled_opcodes=frozenset(ops),
            register_count=core.getint("register_count", 32),
            pc_width_bits=core.getint("pc_width_bits", 32),
            bar_width_bits=core.getint("bar_width_bits", 32),
            word_width_bits=core.getint("word_width_bits", 32),
            mac_precisions=precisions,
            optional_groups=frozenset(groups))

    cost = None
    if cp.has_section("costs"):
        cost = CostModel(**{k: int(v) for k, v in cp["costs"].items()})

    table = None
    if cp.has_section("fractions"):
        fr = cp["fractions"]
        area = {c: fr.getfloat(f"area_{c}") for c in _COMPONENTS}
        power = {c: fr.getfloat(f"power_{c}") for c in _COMPONENTS}
        table = ComponentCostTable(
            area_fractions=area, power_fractions=power,
            baseline_area_cm2=fr.getfloat("baseline_area_cm2", 67.53),
            baseline_power_mW=fr.getfloat("baseline_power_mw", 291.21),
            mac_fraction_area=fr.getfloat("mac_fraction_area", 0.02),
            mac_fraction_power=fr.getfloat("mac_fraction_power", 0.02))
    return isa_cfg, cost, table
