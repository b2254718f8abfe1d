import pytest

from bespoke.harness import (CSV_COLUMNS, Evaluator, PROFILES, SweepResult,
                             mark_pareto, render_csv, render_json,
                             render_scatter_csv, render_table, sweep,
                             variant_allowed)

from conftest import FIXTURES

MODELS = sorted((FIXTURES / "models").glob("*.json"))
SMALL = [p for p in MODELS if "svm_r" in p.stem]     # the two quick models


@pytest.fixture(scope="module")
def small_sweep() -> SweepResult:
    return sweep(SMALL, precisions=(8, 16), profiles=PROFILES.values())


def test_sweep_skips_inconsistent_combinations():
    assert not variant_allowed("mac_simd", 32, PROFILES["zr"])
    assert not variant_allowed("mul_baseline", 8, PROFILES["tpisa"])
    assert variant_allowed("mac_simd", 4, PROFILES["tpisa"])


def test_sweep_cell_counts(small_sweep):
    # per model+precision: zr {softmul, mul, mac, simd} + tpisa {softmul,
    # mac, simd} = 7 rows
    assert len(small_sweep.reports) == 2 * 2 * 7
    assert small_sweep.errors == []


def test_baseline_rows_have_zero_speedup(small_sweep):
    for r in small_sweep.reports:
        base = PROFILES[r.profile].baseline_variant
        if r.variant == base:
            assert r.speedup_pct == 0.0


def test_pareto_front_matches_bruteforce_oracle(small_sweep):
    reports = small_sweep.reports
    for r in reports:
        dominated = any(
            q is not r
            and q.modeled_area_mm2 <= r.modeled_area_mm2
            and q.speedup_pct >= r.speedup_pct
            and (q.modeled_area_mm2 < r.modeled_area_mm2
                 or q.speedup_pct > r.speedup_pct)
            for q in reports)
        assert r.pareto == (not dominated)


def test_single_report_trivially_pareto():
    result = sweep(SMALL[:1], precisions=(8,),
                   variants=("softmul_baseline",),
                   profiles=[PROFILES["tpisa"]])
    assert len(result.reports) == 1
    assert result.reports[0].pareto


def test_mark_pareto_handles_duplicates():
    result = sweep(SMALL[:1], precisions=(8,),
                   variants=("softmul_baseline", "mac_scalar"),
                   profiles=[PROFILES["tpisa"]])
    mark_pareto(result.reports)
    assert any(r.pareto for r in result.reports)


def test_render_csv_schema(small_sweep):
    lines = render_csv(small_sweep.reports).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[0] == ("model,precision,variant,profile,accuracy,loss_pp,"
                        "cycles,speedup_pct,instr_count,rom_area_mm2,"
                        "rom_power_mW,modeled_core_saving_pct")
    assert len(lines) == len(small_sweep.reports) + 1
    # percentages to two decimals
    row = lines[1].split(",")
    assert "." in row[4] and len(row[4].split(".")[1]) == 2


def test_render_empty_reports_header_only():
    assert render_csv([]).splitlines() == [",".join(CSV_COLUMNS)]
    table = render_table([])
    assert "model" in table.splitlines()[0]


def test_render_single_row_matches_report(small_sweep):
    r = small_sweep.reports[0]
    line = render_csv([r]).splitlines()[1].split(",")
    assert line[0] == r.model
    assert int(line[1]) == r.precision
    assert line[2] == r.variant
    assert float(line[7]) == round(r.speedup_pct, 2)
    assert int(line[8]) == r.instr_count


def test_render_json_labels_modeled(small_sweep):
    payload = render_json(small_sweep)
    assert "modeled" in payload
    assert '"errors": []' in payload


def test_scatter_rows(small_sweep):
    lines = render_scatter_csv(small_sweep.reports).splitlines()
    assert lines[0] == "modeled_area_mm2,speedup_pct,label,pareto"
    assert len(lines) == len(small_sweep.reports) + 1
    flags = [l.rsplit(",", 1)[1] for l in lines[1:]]
    assert set(flags) <= {"0", "1"}


def test_sweep_deterministic_reports():
    a = sweep(SMALL[:1], precisions=(8,), profiles=[PROFILES["zr"]])
    b = sweep(SMALL[:1], precisions=(8,), profiles=[PROFILES["zr"]])
    assert render_csv(a.reports) == render_csv(b.reports)
    assert render_json(a) == render_json(b)


def test_accuracy_in_range(small_sweep):
    for r in small_sweep.reports:
        assert 0.0 <= r.accuracy <= 100.0
        assert r.cycles > 0
        assert r.instr_count > 0


def test_loss_equals_float_minus_quant(small_sweep):
    ev = Evaluator()
    for path in SMALL:
        ev.add_model(str(path))
    for r in small_sweep.reports[:4]:
        float_acc = 100.0 * ev.float_accuracy(r.model)
        assert r.loss_pp == pytest.approx(float_acc - r.accuracy, abs=1e-9)
