import random

import pytest

from bespoke.isa import (ISAConfig, OPCODES, baseline_config, encode,
                         parse_assembly, validate)
from bespoke.machine import CostModel
from bespoke.reduction import (ComponentCostTable, RomCellCost, UsageProfile,
                               analyze_dynamic, analyze_static, derive_config,
                               estimate_core_savings, load_config_file,
                               rom_cost, save_config_file)
from proggen import random_program

BASE = baseline_config()

DOTPROD = """
# 4-element dot product, MUL kernel
ADDI x3, x0, 0
ADDI x5, x0, 0
ADDI x6, x0, 4
loop:
LW x1, 0(x5)
LW x2, 4(x5)
MUL x4, x1, x2
ADD x3, x3, x4
ADDI x5, x5, 1
BNE x5, x6, loop
SW x3, 8(x0)
HALT
.data
.word 1, 2, 3, 4
.word 10, 20, 30, 40
.word 0
"""


# ---------------------------------------------------------------------------
# static analysis
# ---------------------------------------------------------------------------

def test_static_profile_excludes_absent_mul():
    p = parse_assembly("ADD x1, x1, x2\nHALT")
    prof = analyze_static(p)
    assert "MUL" not in prof.used_opcodes
    assert "MULH" not in prof.used_opcodes


def test_static_profile_empty_program():
    prof = analyze_static(parse_assembly(""))
    assert prof.used_opcodes == set()
    assert prof.used_registers == {0}
    assert prof.code_size_instructions == 0


def test_static_profile_twelve_registers():
    lines = [f"ADDI x{r}, x{r - 1}, 1" for r in range(1, 12)] + ["HALT"]
    prof = analyze_static(parse_assembly("\n".join(lines)))
    assert prof.used_registers == set(range(12))
    assert len(prof.used_registers) == 12


# ---------------------------------------------------------------------------
# dynamic analysis
# ---------------------------------------------------------------------------

def test_dynamic_subset_of_static_on_dead_branch():
    src = """
    ADDI x1, x0, 1
    BNE x1, x0, 2
    MULH x2, x1, x1
    HALT
    """
    p = parse_assembly(src)
    stat = analyze_static(p)
    dyn = analyze_dynamic(p, BASE)
    assert "MULH" in stat.used_opcodes
    assert "MULH" not in dyn.used_opcodes
    assert dyn.used_opcodes <= stat.used_opcodes
    assert dyn.used_registers <= stat.used_registers


def test_dynamic_profile_deterministic():
    p = parse_assembly(DOTPROD)
    a = analyze_dynamic(p, BASE)
    b = analyze_dynamic(p, BASE)
    assert a == b


def test_dotprod_dynamic_opcodes_match_hand_enumeration():
    p = parse_assembly(DOTPROD)
    dyn = analyze_dynamic(p, BASE)
    assert dyn.used_opcodes == {"ADDI", "LW", "MUL", "ADD", "BNE", "SW", "HALT"}


@pytest.mark.parametrize("seed", range(10))
def test_dynamic_subset_of_static_random(seed):
    p = random_program(random.Random(seed))
    stat = analyze_static(p)
    dyn = analyze_dynamic(p, BASE)
    assert dyn.used_opcodes <= stat.used_opcodes
    assert dyn.used_registers <= stat.used_registers


# ---------------------------------------------------------------------------
# config derivation
# ---------------------------------------------------------------------------

def _profile(code_size=10, max_addr=0, opcodes=("ADDI", "HALT"),
             registers=(0, 1)):
    return UsageProfile(set(opcodes), set(registers), code_size, max_addr,
                        "static")


def test_derive_pc_width_600():
    cfg = derive_config(_profile(code_size=600), BASE)
    assert cfg.pc_width_bits == 10          # ceil(log2(600))


def test_derive_bar_width_255():
    cfg = derive_config(_profile(max_addr=255), BASE)
    assert cfg.bar_width_bits == 8          # ceil(log2(256))


def test_derive_degenerate_floors():
    cfg = derive_config(_profile(code_size=1, max_addr=0), BASE)
    assert cfg.pc_width_bits == 1
    assert cfg.bar_width_bits == 1


@pytest.mark.parametrize("code_size,expected", [
    (2, 1), (3, 2), (512, 9), (513, 10), (1024, 10), (1025, 11)])
def test_derive_pc_width_boundaries(code_size, expected):
    assert derive_config(_profile(code_size=code_size),
                         BASE).pc_width_bits == expected


def test_derive_register_count_is_max_plus_one():
    cfg = derive_config(_profile(registers=range(12)), BASE)
    assert cfg.register_count == 12


def test_derive_empty_profile_rejected():
    with pytest.raises(ValueError, match="empty"):
        derive_config(_profile(opcodes=()), BASE)


def test_derive_mac_precisions_follow_usage():
    cfg = derive_config(_profile(opcodes=("MAC.P8", "MACR", "MACZ", "HALT")),
                        BASE)
    assert cfg.mac_precisions == frozenset({8})


@pytest.mark.parametrize("seed", range(15))
def test_derived_config_validates_source_program(seed):
    p = random_program(random.Random(seed))
    cfg = derive_config(analyze_static(p), BASE)
    assert validate(p, cfg).ok


# ---------------------------------------------------------------------------
# ROM cost model
# ---------------------------------------------------------------------------

def _image(words, width=32):
    src = "\n".join(["HALT"] + [".data"] + [f".word {i}" for i in range(words)])
    return encode(parse_assembly(src), width)


def test_rom_cost_100_words_default_cells():
    # 100 words x 32 bits = 3200 cells -> 2688 mm^2, 58336 uW (58.336 mW)
    img = _image(99)            # 1 instruction + 99 data words
    assert len(img.words) == 100
    area, power = rom_cost(img)
    assert area == pytest.approx(3200 * 0.84)
    assert area == pytest.approx(2688.0)
    assert power == pytest.approx(3200 * 18.23)
    assert power == pytest.approx(58336.0)


def test_rom_cost_empty_image():
    img = encode(parse_assembly(""), 32)
    assert rom_cost(img) == (0.0, 0.0)


def test_rom_cost_16_bit_half_without_data():
    src = "\n".join(["ADDI x1, x1, 1"] * 10 + ["HALT"])
    p = parse_assembly(src)
    a32, p32 = rom_cost(encode(p, 32))
    a16, p16 = rom_cost(encode(p, 16))
    assert a16 == pytest.approx(a32 / 2)
    assert p16 == pytest.approx(p32 / 2)


def test_rom_cost_linear_in_bits():
    base = parse_assembly("ADDI x1, x1, 1\nHALT")
    double = parse_assembly("ADDI x1, x1, 1\nHALT\nADDI x1, x1, 1\nHALT")
    a1, p1 = rom_cost(encode(base, 32))
    a2, p2 = rom_cost(encode(double, 32))
    assert a2 == pytest.approx(2 * a1)
    assert p2 == pytest.approx(2 * p1)


def test_rom_cost_per_word_granularity():
    img = _image(99)
    area, power = rom_cost(img, RomCellCost(cell_granularity="per_word"))
    assert area == pytest.approx(100 * 0.84)
    assert power == pytest.approx(100 * 18.23)


# ---------------------------------------------------------------------------
# core savings model
# ---------------------------------------------------------------------------

def _bespoke(register_count=32, pc=32, bar=32, drop=(), precisions=None):
    ops = frozenset(set(BASE.enabled_opcodes) - set(drop))
    if precisions is None:
        precisions = {n for n in (4, 8, 16, 32)
                      if f"MAC.P{n}" in ops}
    return ISAConfig(enabled_opcodes=ops, register_count=register_count,
                     pc_width_bits=pc, bar_width_bits=bar,
                     word_width_bits=32, mac_precisions=frozenset(precisions))


MAC_MNEMONICS = ("MAC.P32", "MAC.P16", "MAC.P8", "MAC.P4", "MACR", "MACZ")


def test_identity_config_zero_saving():
    r = estimate_core_savings(BASE, BASE)
    # identical widths/registers/opcodes, but 4 MAC modes charge back
    assert r.area_saving_pct == 0.0
    assert r.power_saving_pct == 0.0


def test_paper_combined_mul_rf_fractions():
    """The default split reproduces the combined multiplier+register-file
    share: 46.5% of area, 46.2% of power."""
    t = ComponentCostTable()
    assert t.area_fractions["mul"] + t.area_fractions["rf"] == \
        pytest.approx(0.465)
    assert t.power_fractions["mul"] + t.power_fractions["rf"] == \
        pytest.approx(0.462)
    # a core with the multiplier gone and the register file shrunk to the
    # 2-register floor models (arithmetic done by hand):
    bespoke = _bespoke(register_count=2, drop=("MUL", "MULH") + MAC_MNEMONICS)
    r = estimate_core_savings(bespoke, BASE, t)
    assert r.area_saving_pct == pytest.approx(
        100 * (0.28 + 0.185 * 30 / 32))
    assert r.power_saving_pct == pytest.approx(
        100 * (0.277 + 0.185 * 30 / 32))


def test_rf_contribution_linear_twelve_registers():
    t = ComponentCostTable(mac_fraction_area=0.0, mac_fraction_power=0.0)
    r = estimate_core_savings(_bespoke(register_count=12), BASE, t)
    assert r.area_saving_pct == pytest.approx(100 * 0.185 * 20 / 32)


def test_pc_bar_bit_shares():
    t = ComponentCostTable(mac_fraction_area=0.0, mac_fraction_power=0.0)
    r = estimate_core_savings(_bespoke(pc=10, bar=8), BASE, t)
    expected = 100 * (0.25 / 64) * ((32 - 10) + (32 - 8))
    assert r.area_saving_pct == pytest.approx(expected)


def test_mac_modes_charge_back():
    t = ComponentCostTable()
    keep_all = estimate_core_savings(_bespoke(register_count=12), BASE, t)
    none = estimate_core_savings(
        _bespoke(register_count=12, drop=MAC_MNEMONICS + ("MUL", "MULH")),
        BASE, t)
    # dropping multiplier + 4 precision modes beats keeping them
    assert none.area_saving_pct > keep_all.area_saving_pct


def test_savings_monotone_in_removal():
    rng = random.Random(0)
    for _ in range(20):
        rc = rng.randint(4, 32)
        pc = rng.randint(4, 32)
        bar = rng.randint(4, 32)
        less = estimate_core_savings(_bespoke(rc, pc, bar), BASE)
        more = estimate_core_savings(
            _bespoke(max(2, rc - 2), max(1, pc - 3), max(1, bar - 3),
                     drop=("MUL", "MULH")),
            BASE)
        assert more.area_saving_pct >= less.area_saving_pct
        assert more.power_saving_pct >= less.power_saving_pct


def test_savings_bounded_0_100():
    r = estimate_core_savings(
        _bespoke(register_count=2, pc=1, bar=1,
                 drop=("MUL", "MULH") + MAC_MNEMONICS), BASE)
    assert 0.0 <= r.area_saving_pct <= 100.0
    assert 0.0 <= r.power_saving_pct <= 100.0


def test_non_subset_rejected():
    trimmed = _bespoke(drop=("MUL",))
    with pytest.raises(ValueError, match="subset|exceeds"):
        estimate_core_savings(BASE, trimmed)


def test_savings_report_serializes():
    r = estimate_core_savings(_bespoke(register_count=12, pc=10, bar=8), BASE)
    assert "modeled" in r.to_json()
    text = r.to_text()
    assert "modeled" in text and "10" in text


def test_csr_group_reported_as_removed():
    # derived cores drop the optional csr_group (no program can use it)
    r = estimate_core_savings(_bespoke(register_count=12), BASE)
    assert r.removed_opcode_groups == ["csr_group"]


def test_profile_union_for_multi_program_cores():
    a = analyze_static(parse_assembly(DOTPROD))
    b = analyze_static(parse_assembly("MACZ\nMAC.P8 x9, x9\nMACR x9\nHALT"))
    union = a.union(b)
    assert union.used_opcodes == a.used_opcodes | b.used_opcodes
    assert union.used_registers == a.used_registers | b.used_registers
    assert union.code_size_instructions == max(a.code_size_instructions,
                                               b.code_size_instructions)
    cfg = derive_config(union, BASE)
    assert validate(parse_assembly(DOTPROD), cfg).ok
    assert cfg.mac_precisions == frozenset({8})


def test_dynamic_subset_of_static_on_committed_benchmarks():
    from pathlib import Path
    bench = Path(__file__).parent.parent / "benchmarks"
    for path in sorted(bench.glob("*.asm")):
        p = parse_assembly(path.read_text())
        stat = analyze_static(p)
        dyn = analyze_dynamic(p, BASE)
        assert dyn.used_opcodes <= stat.used_opcodes, path.name
        assert dyn.used_registers <= stat.used_registers, path.name


# ---------------------------------------------------------------------------
# config file round trip
# ---------------------------------------------------------------------------

def test_config_file_round_trip(tmp_path):
    cfg = _bespoke(register_count=12, pc=10, bar=8, drop=("MULH", "SLT"))
    cost = CostModel(mul=3, branch_taken=2)
    table = ComponentCostTable()
    path = tmp_path / "core.cfg"
    save_config_file(path, cfg, cost, table)
    loaded_cfg, loaded_cost, loaded_table = load_config_file(path)
    assert loaded_cfg == cfg
    assert loaded_cost == cost
    assert loaded_table.area_fractions == table.area_fractions
    assert loaded_table.baseline_power_mW == table.baseline_power_mW


def test_config_file_partial_sections(tmp_path):
    path = tmp_path / "only_core.cfg"
    save_config_file(path, BASE)
    cfg, cost, table = load_config_file(path)
    assert cfg == BASE
    assert cost is None and table is None
