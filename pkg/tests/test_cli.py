import json

import numpy as np
import pytest

from xyaubry import cli
from xyaubry.cli import (ConfigError, RunConfig, config_from_dict, config_to_dict, dumps,
                         emit_report, main, parse_config, parse_config_text, resolve_commands)
from xyaubry.potential import builtin


def read_report(out):
    return json.loads((out / "report.json").read_text())


def test_minimal_config_gets_defaults():
    cfg = parse_config_text('{"potential": {"kind": "builtin", "name": "product"}}')
    assert cfg.n_cells == 128
    assert cfg.potential == builtin("product")
    assert cfg.commands == RunConfig().commands


@pytest.mark.parametrize("text, field", [
    ('{"potential": {"kind": "builtin", "name": "product"}, "n_cells": 0}', "n_cells"),
    ('{"potential": {"kind": "builtin", "name": "product"}, "n_cells": 2.5}', "n_cells"),
    ('{"potential": {"kind": "builtin", "name": "nope"}}', "potential"),
    ('{"n_cells": 4}', "potential"),
    ('{"potential": {"kind": "builtin", "name": "product"}, "colour": 1}', "<root>"),
    ('{"potential": {"kind": "builtin", "name": "product"}, "gap": {"deltas": []}}',
     "gap.deltas"),
    ('{"potential": {"kind": "builtin", "name": "product"}, "tpo": {"a": 1.5}}', "tpo.a"),
    ('{"potential": {"kind": "builtin", "name": "product"}, "commands": ["fly"]}',
     "commands[0]"),
    ('{"potential": {"kind": "builtin", "name": "product"}, "barrier": {"point_type": "x"}}',
     "barrier.point_type"),
])
def test_invalid_configs_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.field == field


def test_json_syntax_error_has_position():
    with pytest.raises(ConfigError, match=r"cfg.json:2:"):
        parse_config_text('{"potential":\n }', "cfg.json")


def test_config_round_trip(tmp_path):
    cfg = RunConfig(potential=builtin("product"), n_cells=16, commands=("alpha", "gap"),
                    seed=3)
    path = tmp_path / "c.json"
    path.write_text(dumps(config_to_dict(cfg)))
    assert parse_config(path) == cfg
    assert config_from_dict(json.loads(dumps(config_to_dict(RunConfig())))) == RunConfig()


def test_emit_config_is_stable(capsys):
    assert main(["emit-config", "--potential", "product", "--n-cells", "8"]) == 0
    first = capsys.readouterr().out
    assert main(["emit-config", "--potential", "product", "--n-cells", "8"]) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first)["n_cells"] == 8


def test_dependencies_resolved_in_order():
    assert resolve_commands(["aubry"]) == ("alpha", "subaction", "mane", "barrier", "aubry")
    assert resolve_commands(["tpo", "alpha"]) == ("alpha", "tpo")
    with pytest.raises(ConfigError):
        resolve_commands(["nope"])


def test_dumps_is_deterministic_and_strict():
    text = dumps({"b": 0.1, "a": [1, 2.0, np.float64(1 / 3)], "c": None})
    assert text.index('"a"') < text.index('"b"')
    assert "0.33333333333333331" in text and "0.10000000000000001" in text
    assert '2.0' in text
    with pytest.raises(ValueError):
        dumps({"x": float("inf")})
    assert cli._num(float("inf")) == "DIVERGENT"
    assert cli._num(float("nan")) == "UNAVAILABLE"


def test_alpha_on_product(tmp_path):
    out = tmp_path / "o"
    assert main(["alpha", "--potential", "product", "--n-cells", "16", "--out", str(out)]) == 0
    rec = read_report(out)
    alpha = rec["commands"]["alpha"]
    assert alpha["alpha_grid"] == -1.0
    assert alpha["m_set"] == [1.0]
    assert rec["all_passed"]
    assert (out / "diagonal.csv").exists() and (out / "timings.json").exists()


def test_barrier_on_projection_diverges(tmp_path):
    out = tmp_path / "o"
    code = main(["barrier", "--potential", "projection", "--n-cells", "4", "--from", "1",
                 "--to", "1", "--point-type", "fixed", "--out", str(out)])
    assert code == 0
    seq = read_report(out)["commands"]["barrier"]["sequence"]
    assert seq["status"] == "DIVERGENT"
    assert seq["growth_rate"] == 1.0


def test_periodic_barrier_point(tmp_path):
    out = tmp_path / "o"
    assert main(["barrier", "--potential", "product", "--n-cells", "4", "--from", "1",
                 "--to", "0,1", "--point-type", "periodic", "--out", str(out)]) == 0
    seq = read_report(out)["commands"]["barrier"]["sequence"]
    assert seq["status"] == "FINITE"


def test_fixed_point_needs_one_abscissa(tmp_path, capsys):
    code = main(["barrier", "--potential", "product", "--n-cells", "4", "--from", "0,1",
                 "--out", str(tmp_path)])
    assert code == cli.EXIT_ERROR
    assert "fixed point" in read_report(tmp_path)["error"]


def test_tpo_command(tmp_path):
    out = tmp_path / "o"
    code = main(["tpo", "--potential", "squared_difference", "--a", "0.3", "--eps", "0.05",
                 "--trials", "3", "--n-cells", "32", "--out", str(out)])
    assert code == 0
    assert read_report(out)["commands"]["tpo"]["unique_min"] is True


def test_full_bundle(tmp_path):
    out = tmp_path / "o"
    cfg = RunConfig(potential=builtin("squared_difference_plus_well", 0.5), n_cells=8,
                    commands=cli.COMMANDS, output_dir=str(out),
                    tpo=cli.TPOParams(trials=2), descent=cli.DescentParams(seeds=3))
    cfg = config_from_dict(config_to_dict(cfg))
    rec = cli.run(cfg)
    assert rec["status"] == "complete" and rec["all_passed"]
    assert set(rec["commands"]) == set(cli.COMMANDS)
    for name in rec["csv_files"]:
        assert (out / name).stat().st_size > 0
    np.testing.assert_allclose(np.loadtxt(out / "mane.csv", delimiter=","),
                               cli.Runner(cfg).session.mane, atol=0)


def test_non_twist_potential_reports_error(tmp_path):
    rec = cli.run(RunConfig(potential=builtin("projection"), n_cells=4, commands=("descent",),
                            output_dir=str(tmp_path)))
    assert rec["status"] == "incomplete"
    assert "twist" in rec["error"]


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["alpha", "--potential", "nope", "--out", str(tmp_path)]) == cli.EXIT_USAGE
    assert main(["alpha", "--n-cells", "0", "--out", str(tmp_path)]) == cli.EXIT_USAGE
    assert "n_cells" in capsys.readouterr().err


def test_emit_report_writes_identical_bytes(tmp_path):
    rec = {"x": 0.1, "y": [1, 2]}
    a = emit_report(rec, tmp_path / "a").read_bytes()
    b = emit_report(rec, tmp_path / "b").read_bytes()
    assert a == b


def test_report_independent_of_output_location(tmp_path):
    a = cli.run(RunConfig(potential=builtin("product"), n_cells=8, commands=("alpha",),
                          output_dir=str(tmp_path / "a")))
    b = cli.run(RunConfig(potential=builtin("product"), n_cells=8, commands=("alpha",),
                          output_dir=str(tmp_path / "b")))
    assert dumps(a) == dumps(b)
    assert (tmp_path / "a" / "report.json").read_bytes() == \
        (tmp_path / "b" / "report.json").read_bytes()
