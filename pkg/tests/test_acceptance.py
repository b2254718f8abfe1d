"""Acceptance suite: one test per release criterion, tolerances pinned.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  The full-matrix sweep (6 committed models x 4 precisions x all
variants x both core profiles) is built once per session and shared.
"""

import random
import time
from pathlib import Path

import numpy as np
import pytest

from bespoke.codegen import VARIANTS
from bespoke.harness import (Evaluator, PROFILES, render_csv, render_json,
                             render_scatter_csv, render_table, sweep)
from bespoke.isa import baseline_config, parse_assembly, validate, encode
from bespoke.machine import MacUnit, Machine, to_i32
from bespoke.models import load_model, quantize_input
from bespoke.quantref import infer_result_code
from bespoke.reduction import (RomCellCost, analyze_static, derive_config,
                               rom_cost)

from conftest import FIXTURES
from proggen import random_program

MODELS = sorted((FIXTURES / "models").glob("*.json"))
MODEL_IDS = [p.stem for p in MODELS]
GOLDENS = FIXTURES / "goldens"
BENCH = Path(__file__).parent.parent / "benchmarks"

MLP_IDS = [m for m in MODEL_IDS if "_mlp_" in m]
REDWINE_IDS = [m for m in MODEL_IDS if m.startswith("redwine")]


def announce(name: str, detail: str):
    print(f"\nACCEPTANCE {name}: PASS ({detail})")


# ---------------------------------------------------------------------------
# shared full sweep
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def full_sweep():
    started = time.perf_counter()
    evaluator = Evaluator()
    result = sweep([str(p) for p in MODELS], evaluator=evaluator)
    elapsed = time.perf_counter() - started
    assert not result.errors, result.errors
    return evaluator, result, elapsed


def _zr(result):
    return {(r.model, r.precision, r.variant): r
            for r in result.reports if r.profile == "zr"}


# ---------------------------------------------------------------------------
# criterion 1: MAC semantics vs scalar oracle
# ---------------------------------------------------------------------------

def _oracle(a, b, n):
    mask = (1 << n) - 1
    sign = 1 << (n - 1)
    total = 0
    for i in range(32 // n):
        la = (a >> (i * n)) & mask
        lb = (b >> (i * n)) & mask
        if la & sign:
            la -= 1 << n
        if lb & sign:
            lb -= 1 << n
        total += la * lb
    return to_i32(total)


def test_mac_semantics_exhaustive_and_random():
    started = time.perf_counter()
    mismatches = 0
    trials = 10_000
    for n in (4, 8, 16, 32):
        rng = random.Random(0x5EED + n)
        for _ in range(trials):
            a = rng.getrandbits(32)
            b = rng.getrandbits(32)
            unit = MacUnit()
            unit.step(n, a, b)
            if unit.reduce() != _oracle(a, b, n):
                mismatches += 1
    # exhaustive 256x256 single-byte table at n=4 (two 4-bit lanes per side)
    for a in range(256):
        for b in range(256):
            unit = MacUnit()
            unit.step(4, a, b)
            if unit.reduce() != _oracle(a, b, 4):
                mismatches += 1
    elapsed = time.perf_counter() - started
    assert mismatches == 0
    assert elapsed < 10.0, f"MAC semantics check took {elapsed:.1f}s"
    announce("mac-semantics",
             f"4x{trials} random + 65536 exhaustive pairs, "
             f"0 mismatches, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# criterion 2: cross-oracle bit-exactness
# ---------------------------------------------------------------------------

def test_cross_oracle_bit_exactness(full_sweep):
    evaluator, result, sweep_elapsed = full_sweep
    started = time.perf_counter()
    cells = 0
    samples = 0
    for model_path in MODELS:
        model = evaluator.model(model_path.stem)
        for precision in (4, 8, 16, 32):
            qm = evaluator.quantized(model.model_id, precision)
            expected = [infer_result_code(qm, quantize_input(qm, x))
                        for x in model.test_x]
            for variant in VARIANTS:
                if variant == "mac_simd" and precision > 16:
                    continue
                cell = evaluator.run_cell(model.model_id, precision, variant)
                assert cell.outputs == expected, \
                    (model.model_id, precision, variant)
                cells += 1
                samples += len(expected)
    elapsed = sweep_elapsed + (time.perf_counter() - started)
    assert elapsed < 300.0, f"bit-exactness check took {elapsed:.1f}s"
    announce("cross-oracle-bit-exactness",
             f"{cells} cells, {samples} sample comparisons, bit-exact, "
             f"{elapsed:.1f}s incl. simulation")


# ---------------------------------------------------------------------------
# criterion 3: accuracy loss vs precision
# ---------------------------------------------------------------------------

def test_accuracy_loss_bands(full_sweep):
    _, result, _ = full_sweep
    zr = _zr(result)
    loss = {(m, n): zr[(m, n, "mac_scalar")].loss_pp
            for m in MODEL_IDS for n in (4, 8, 16, 32)}

    for m in MODEL_IDS:
        assert loss[(m, 16)] <= 0.5, (m, loss[(m, 16)])
        assert loss[(m, 32)] <= 0.5, (m, loss[(m, 32)])
    mean8 = sum(loss[(m, 8)] for m in MODEL_IDS) / len(MODEL_IDS)
    assert mean8 <= 2.0, mean8
    mean4 = sum(loss[(m, 4)] for m in MODEL_IDS) / len(MODEL_IDS)
    assert mean4 >= 5.0, mean4
    redwine4 = sum(loss[(m, 4)] for m in REDWINE_IDS) / len(REDWINE_IDS)
    assert redwine4 >= 10.0, redwine4
    announce("accuracy-vs-precision",
             f"n16/n32 max loss {max(max(loss[(m, 16)], loss[(m, 32)]) for m in MODEL_IDS):.2f}pp, "
             f"n8 mean {mean8:.2f}pp, n4 mean {mean4:.2f}pp, "
             f"redwine n4 {redwine4:.2f}pp")


def test_accuracy_32_equals_16(full_sweep):
    _, result, _ = full_sweep
    zr = _zr(result)
    for m in MODEL_IDS:
        a16 = zr[(m, 16, "mac_scalar")].accuracy
        a32 = zr[(m, 32, "mac_scalar")].accuracy
        assert abs(a16 - a32) <= 0.5, (m, a16, a32)


# ---------------------------------------------------------------------------
# criterion 4: speedup ordering and magnitude
# ---------------------------------------------------------------------------

def test_speedup_ordering_and_bands(full_sweep):
    _, result, _ = full_sweep
    zr = _zr(result)

    def avg_cycles(variant, precision):
        return sum(zr[(m, precision, variant)].cycles
                   for m in MODEL_IDS) / len(MODEL_IDS)

    chain = [avg_cycles("softmul_baseline", 32),
             avg_cycles("mul_baseline", 32),
             avg_cycles("mac_scalar", 32),
             avg_cycles("mac_simd", 16),
             avg_cycles("mac_simd", 8),
             avg_cycles("mac_simd", 4)]
    assert all(a > b for a, b in zip(chain, chain[1:])), chain

    def avg_speedup(variant, precision):
        return sum(zr[(m, precision, variant)].speedup_pct
                   for m in MODEL_IDS) / len(MODEL_IDS)

    mac32 = avg_speedup("mac_scalar", 32)
    simd16 = avg_speedup("mac_simd", 16)
    assert 15.0 <= mac32 <= 35.0, mac32
    assert 25.0 <= simd16 <= 45.0, simd16

    tpisa = {(r.model, r.precision, r.variant): r
             for r in result.reports if r.profile == "tpisa"}
    worst = min(tpisa[(m, n, v)].speedup_pct
                for m in MODEL_IDS for n in (4, 8, 16, 32)
                for v in ("mac_scalar", "mac_simd")
                if (m, n, v) in tpisa)
    assert worst >= 60.0, worst
    announce("speedup",
             f"cycle chain {['%.0f' % c for c in chain]}, "
             f"mac32 {mac32:.2f}%, simd16 {simd16:.2f}%, "
             f"worst mac-vs-softmul {worst:.1f}%")


def test_simd16_beats_mac32_on_every_mlp(full_sweep):
    _, result, _ = full_sweep
    zr = _zr(result)
    for m in MLP_IDS:
        simd = zr[(m, 16, "mac_simd")].speedup_pct
        mac = zr[(m, 32, "mac_scalar")].speedup_pct
        assert simd > mac > 0.0, (m, simd, mac)


def test_cycle_ordering_monotone_per_model(full_sweep):
    _, result, _ = full_sweep
    zr = _zr(result)
    for m in MODEL_IDS:
        chain = [zr[(m, 32, "softmul_baseline")].cycles,
                 zr[(m, 32, "mac_scalar")].cycles,
                 zr[(m, 16, "mac_simd")].cycles,
                 zr[(m, 8, "mac_simd")].cycles,
                 zr[(m, 4, "mac_simd")].cycles]
        assert all(a > b for a, b in zip(chain, chain[1:])), (m, chain)


# ---------------------------------------------------------------------------
# criterion 5: code-size savings
# ---------------------------------------------------------------------------

def test_code_size_savings(full_sweep):
    _, result, _ = full_sweep
    zr = _zr(result)
    worst_shrink = 100.0
    for m in MODEL_IDS:
        for n in (4, 8, 16, 32):
            soft = zr[(m, n, "softmul_baseline")].instr_count
            best_mac = min(zr[(m, n, v)].instr_count
                           for v in ("mac_scalar", "mac_simd")
                           if (m, n, v) in zr)
            shrink = 100.0 * (1 - best_mac / soft)
            worst_shrink = min(worst_shrink, shrink)
            assert best_mac <= 0.95 * soft, (m, n, best_mac, soft)
    for m in MLP_IDS:
        for n in (4, 8, 16):
            simd = zr[(m, n, "mac_simd")].instr_count
            mac = zr[(m, n, "mac_scalar")].instr_count
            assert simd < mac, (m, n, simd, mac)
    announce("code-size",
             f"worst mac-vs-softmul shrink {worst_shrink:.1f}% (>= 5%), "
             f"SIMD strictly smaller on every MLP")


# ---------------------------------------------------------------------------
# criterion 6: bespoke derivation + trim safety
# ---------------------------------------------------------------------------

def test_bespoke_derivation_windows():
    base = baseline_config()
    program = parse_assembly((BENCH / "vecscale800.asm").read_text())
    assert 513 <= len(program.instructions) <= 1024
    assert 129 <= len(program.data_segment) <= 256
    cfg = derive_config(analyze_static(program), base)
    assert cfg.pc_width_bits == 10
    assert cfg.bar_width_bits == 8

    for path in sorted(BENCH.glob("*.asm")):
        p = parse_assembly(path.read_text())
        derived = derive_config(analyze_static(p), base)
        assert validate(p, derived).ok, path.name
    announce("bespoke-derivation",
             f"vecscale800: {len(program.instructions)} instr -> pc 10, "
             f"{len(program.data_segment)} words -> bar 8; all committed "
             f"benchmarks validate on their derived cores")


def test_trim_safety_hundred_random_programs():
    base = baseline_config()
    checked = 0
    for seed in range(100):
        program = random_program(random.Random(31_000 + seed))
        reference = Machine(base)
        reference.load(program)
        ref_stats = reference.run_counted()

        trimmed_cfg = derive_config(analyze_static(program), base)
        assert validate(program, trimmed_cfg).ok
        trimmed = Machine(trimmed_cfg)
        trimmed.load(program)
        trim_stats = trimmed.run_counted()

        assert trimmed.regs == reference.regs
        assert trimmed.mem == reference.mem
        assert trim_stats.total_cycles == ref_stats.total_cycles
        assert trim_stats.retired_by_opcode == ref_stats.retired_by_opcode
        checked += 1
    announce("trim-safety", f"{checked}/100 randomized programs bit-identical "
                            f"on trimmed cores")


# ---------------------------------------------------------------------------
# criterion 7: ROM cost model
# ---------------------------------------------------------------------------

def test_rom_model_exact_arithmetic():
    base_src = "ADDI x1, x0, 1\nHALT\n"
    images = []
    for extra_data in (0, 3, 10, 64, 200):
        src = base_src + (".data\n" + "\n".join(
            f".word {i}" for i in range(extra_data)) if extra_data else "")
        images.append(encode(parse_assembly(src), 32))
    cost = RomCellCost()
    for image in images:
        area, power = rom_cost(image, cost)
        cells = image.total_bits
        assert area == cells * 0.84
        assert power == cells * 18.23

    # linearity: doubling the program doubles both outputs exactly
    single = encode(parse_assembly(base_src), 32)
    double = encode(parse_assembly(base_src + base_src), 32)
    a1, p1 = rom_cost(single, cost)
    a2, p2 = rom_cost(double, cost)
    assert a2 == 2 * a1 and p2 == 2 * p1
    announce("rom-model", f"5 fixture images exact vs hand arithmetic at "
                          f"0.84 mm2 / 18.23 uW per bit; linear")


# ---------------------------------------------------------------------------
# criterion 8: determinism + golden files
# ---------------------------------------------------------------------------

def _render_all(result):
    return {
        "report.csv": render_csv(result.reports),
        "report.json": render_json(result),
        "report.txt": render_table(result.reports),
        "scatter.csv": render_scatter_csv(result.reports),
    }


def test_determinism_and_goldens(full_sweep):
    _, first, _ = full_sweep
    second = sweep([str(p) for p in MODELS], evaluator=Evaluator())
    rendered_first = _render_all(first)
    rendered_second = _render_all(second)
    assert rendered_first == rendered_second     # byte-identical re-run
    for name, payload in rendered_first.items():
        golden = (GOLDENS / name).read_text()
        assert payload == golden, f"golden mismatch: {name}"
    announce("determinism-goldens",
             "two sweeps byte-identical; all four golden files match")


def test_pareto_front_undominated(full_sweep):
    _, result, _ = full_sweep
    reports = result.reports
    front = [r for r in reports if r.pareto]
    assert front
    for r in reports:
        dominated = any(
            q is not r
            and q.modeled_area_mm2 <= r.modeled_area_mm2
            and q.speedup_pct >= r.speedup_pct
            and (q.modeled_area_mm2 < r.modeled_area_mm2
                 or q.speedup_pct > r.speedup_pct)
            for q in reports)
        assert r.pareto == (not dominated)
