from pathlib import Path

import numpy as np
import pytest

from worldsheet import cli

SCENARIOS = Path(__file__).resolve().parent.parent / "demos" / "scenarios"


def write(tmp_path, text, name="scenario.scn"):
    p = tmp_path / name
    p.write_text(text)
    return p


MINIMAL_GEOMETRY = """\
[scenario]
schema = 1
kind = geometry_check

[grid]
extents = 0:1, 0:1
counts = 5, 5

[fields]
embedding = flat
"""


def test_parse_and_check_ok(tmp_path, capsys):
    p = write(tmp_path, MINIMAL_GEOMETRY)
    assert cli.check(p) == 0
    assert "scenario ok" in capsys.readouterr().out


def test_schema_is_mandatory(tmp_path):
    p = write(tmp_path, MINIMAL_GEOMETRY.replace("schema = 1\n", ""))
    assert cli.run(p, tmp_path / "out") == 1


def test_unknown_keys_listed(tmp_path, capsys):
    text = MINIMAL_GEOMETRY + "\n[grid]\n" if False else MINIMAL_GEOMETRY + "typo_key = 3\n"
    p = write(tmp_path, text)
    code = cli.run(p, tmp_path / "out")
    assert code == 1
    err = capsys.readouterr().err
    assert "fields.typo_key" in err


def test_unknown_section_rejected(tmp_path):
    p = write(tmp_path, MINIMAL_GEOMETRY + "\n[mystery]\nx = 1\n")
    assert cli.run(p, tmp_path / "out") == 1


def test_duplicate_key_rejected(tmp_path):
    p = write(tmp_path, MINIMAL_GEOMETRY + "embedding = flat\n")
    assert cli.run(p, tmp_path / "out") == 1


def test_override_wins(tmp_path):
    p = write(tmp_path, MINIMAL_GEOMETRY)
    out = tmp_path / "out"
    assert cli.run(p, out, overrides=["grid.counts=7,7"]) == 0
    assert (out / "geometry_report.csv").exists()


def test_geometry_check_flat_report(tmp_path):
    p = write(tmp_path, MINIMAL_GEOMETRY)
    out = tmp_path / "out"
    assert cli.run(p, out) == 0
    lines = (out / "geometry_report.csv").read_text().splitlines()
    assert lines[0] == "quantity,value"
    table = dict(line.split(",") for line in lines[1:])
    assert float(table["gauss_residual"]) == 0.0
    assert float(table["weingarten_residual"]) == 0.0
    assert float(table["metric_inverse_residual"]) < 1e-12


def test_geometry_check_cylinder_scenario_file(tmp_path):
    out = tmp_path / "out"
    assert cli.run(SCENARIOS / "geometry_cylinder.scn", out) == 0
    lines = (out / "geometry_report.csv").read_text().splitlines()
    table = dict(line.split(",") for line in lines[1:])
    assert float(table["gauss_residual"]) < 1e-10
    assert float(table["frame_orthonormality_residual"]) < 1e-10


def test_energy_eval_matches_library(tmp_path):
    out = tmp_path / "out"
    assert cli.run(SCENARIOS / "energy_flat.scn", out) == 0
    header, row = (out / "energy_report.csv").read_text().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    from worldsheet import assemble_JK, build_grid, presets

    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.perturbed_flat(
        g, bump_amp=0.1, shear_amp=0.05, n_scale=1.2, n_tilt=0.1, mass_normalized=True
    )
    want = assemble_JK(f, g, 100.0)
    assert float(cols["total_JK"]) == want.total_JK
    assert float(cols["penalty_unit"]) == want.penalty_unit


def test_minimize_quick_scenario(tmp_path):
    text = (SCENARIOS / "minimize_perturbed.scn").read_text()
    text = text.replace("K_schedule = 10, 100, 1000, 10000", "K_schedule = 10, 100")
    text = text.replace("max_iters = 800", "max_iters = 60")
    text = text.replace("check_slope = true", "check_slope = false")
    p = write(tmp_path, text)
    out = tmp_path / "out"
    assert cli.run(p, out) == 0
    rows = (out / "minimize_report.csv").read_text().splitlines()
    assert rows[0].startswith("K,iterations")
    assert len(rows) == 3
    summary = (out / "minimize_summary.txt").read_text()
    assert "slopes:" in summary
    assert "outside the existence theorem" in summary


def test_causal_scenario_report(tmp_path):
    out = tmp_path / "out"
    assert cli.run(SCENARIOS / "causal_grid.scn", out) == 0
    text = (out / "causal_report.txt").read_text()
    lines = text.splitlines()
    assert lines[-1].startswith("summary: events=42")
    iplus = next(line for line in lines if line.startswith("I+:3 ->"))
    got = [int(tok) for tok in iplus.split("->")[1].split()]
    assert got == sorted(got)
    assert "achronal:14,15,16,17,18,19,20 -> true" in text
    assert "cauchy:14,15,16,17,18,19,20 -> true" in text
    assert "violations=0" in text


def test_causal_missing_event_file(tmp_path, capsys):
    text = (SCENARIOS / "causal_grid.scn").read_text().replace("events_flat.txt", "nope.txt")
    p = write(tmp_path, text)
    assert cli.run(p, tmp_path / "out") == 1
    assert "nope.txt" in capsys.readouterr().err


def test_emit_convergence_table_order():
    csv = cli.emit_convergence_table([0.1, 0.05], {"res": [1e-2, 2.5e-3]})
    lines = csv.splitlines()
    assert lines[0] == "parameter,res,res_order"
    assert lines[2].endswith(",2")


def test_emit_convergence_table_needs_two_rows():
    with pytest.raises(ValueError, match=">= 2 rows"):
        cli.emit_convergence_table([0.1], {"res": [1e-2]})


def test_emit_convergence_table_k_sweep_matches_fit():
    from worldsheet import fit_loglog_slope

    ks = [10.0, 100.0, 1000.0]
    rs = [0.37 / k for k in ks]
    csv = cli.emit_convergence_table(ks, {"res": rs})
    orders = [float(line.split(",")[-1]) for line in csv.splitlines()[2:]]
    slope = fit_loglog_slope(ks, rs)
    for order in orders:
        assert abs(order - slope) <= 1e-9


def test_main_entry_points(tmp_path, capsys):
    p = write(tmp_path, MINIMAL_GEOMETRY)
    assert cli.main(["check", str(p)]) == 0
    out = tmp_path / "out"
    assert cli.main(["run", str(p), "--out", str(out)]) == 0
    assert (out / "geometry_report.csv").exists()


def test_repeated_runs_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert cli.run(SCENARIOS / "energy_flat.scn", out) == 0
        assert cli.run(SCENARIOS / "causal_grid.scn", out) == 0
    for name in ("energy_report.csv", "causal_report.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_tabulated_embedding(tmp_path):
    g_counts = (5, 5)
    import numpy as np

    from worldsheet import build_grid

    g = build_grid([(0, 1), (0, 1)], g_counts)
    coords = g.coordinates.reshape(-1, 2)
    table = np.column_stack([coords, 0.1 * np.sin(np.pi * coords[:, 1])])
    np.savetxt(tmp_path / "table.txt", table)
    text = MINIMAL_GEOMETRY.replace("embedding = flat", "embedding = table\ntable = table.txt")
    p = write(tmp_path, text)
    out = tmp_path / "out"
    assert cli.run(p, out) == 0
    lines = (out / "geometry_report.csv").read_text().splitlines()
    table_vals = dict(line.split(",") for line in lines[1:])
    assert float(table_vals["frame_tangency_residual"]) < 1e-9
