# coding=utf-8
"""配置加载：默认值、范围检查、平面格式、环境变量"""

import pytest

from viscowell.core.config import dump_config, parse_flat_config
from viscowell.core.errors import ConfigurationError
from viscowell.core.loader import DEFAULT_SEED, load_config, normalize_config, parse_config_text


def test_defaults_from_empty_config():
    config = normalize_config({})
    assert config["PROBLEM"] == {"P": 2.5, "A": 0.0, "SOURCE_ENABLED": True}
    assert config["KERNEL"]["TYPE"] == "exponential"
    assert config["KERNEL"]["G0"] == 0.4
    assert config["GRID"] == {"ELL": 1.0, "N": 128}
    assert config["TIME"]["DT"] == 0.0
    assert config["TIME"]["CFL"] == 0.5
    assert config["ANALYSIS"]["DELTA"] is None
    assert config["ANALYSIS"]["SEED"] == DEFAULT_SEED
    assert config["ANALYSIS"]["BLOWUP_THRESHOLD_RATIO"] == 1e8
    assert config["OUTPUT"]["DIR"] == ""


def test_source_exponent_out_of_range():
    with pytest.raises(ConfigurationError) as excinfo:
        normalize_config({"problem": {"p": 3.5}})
    assert "2 < p < 3" in excinfo.value.message
    assert "problem.p" in excinfo.value.message


def test_unknown_section_and_key():
    with pytest.raises(ConfigurationError):
        normalize_config({"solver": {"dt": 0.1}})
    with pytest.raises(ConfigurationError) as excinfo:
        normalize_config({"kernel": {"g_0": 0.4}})
    assert "kernel.g_0" in excinfo.value.message


def test_flat_config_error_carries_line_number():
    content = "# 注释\nproblem.p=2.5\nkernel.type=exponential\nproblem.a=-1\n"
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config_text(content, flat=True)
    assert excinfo.value.line == 4
    assert excinfo.value.message.startswith("第 4 行")


@pytest.mark.parametrize(
    "content,line",
    [
        ("grid.n=32\nnot a pair\n", 2),
        ("grid=32\n", 1),
        ("grid.n=32\n\ngrid.n=64\n", 3),
    ],
)
def test_flat_config_syntax_errors(content, line):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_flat_config(content)
    assert excinfo.value.line == line


def test_flat_values_use_yaml_scalars():
    raw, lines = parse_flat_config("analysis.delta=null\napp.debug=true\ngrid.n=64\ntime.cfl=0.25\n")
    assert raw["analysis"]["delta"] is None
    assert raw["app"]["debug"] is True
    assert raw["grid"]["n"] == 64
    assert raw["time"]["cfl"] == 0.25
    assert lines["time.cfl"] == 4


def test_dump_and_parse_round_trip():
    config = normalize_config({
        "problem": {"p": 2.7, "a": 0.25},
        "kernel": {"type": "polynomial", "c0": 0.3, "q": 3.0},
        "grid": {"n": 64},
        "analysis": {"delta": -0.5, "blowup_threshold_ratio": 1e6},
    })
    assert parse_config_text(dump_config(config), flat=True) == config


def test_dt_above_stability_limit():
    with pytest.raises(ConfigurationError) as excinfo:
        normalize_config({"grid": {"n": 32}, "time": {"dt": 0.9 / 32}})
    assert "time.dt" in excinfo.value.message
    assert excinfo.value.suggestion


def test_tabulated_kernel_requires_table():
    with pytest.raises(ConfigurationError):
        normalize_config({"kernel": {"type": "tabulated"}})


def test_tabulated_kernel_must_cover_horizon(tmp_path):
    table = tmp_path / "kernel.csv"
    table.write_text("t,g\n0.0,0.4\n0.5,0.3\n1.0,0.2\n", encoding="utf-8")
    kernel = {"type": "tabulated", "table_path": str(table)}
    with pytest.raises(ConfigurationError) as excinfo:
        normalize_config({"kernel": kernel, "grid": {"n": 16}, "time": {"T": 2.0}})
    assert "time.T" in excinfo.value.message
    assert excinfo.value.suggestion

    # cfl=0.5、n=16 时 dt = 1/32，0.5 恰为 16 步
    config = normalize_config({"kernel": kernel, "grid": {"n": 16}, "time": {"T": 0.5}})
    assert config["KERNEL"]["TABLE_PATH"] == str(table)


def test_tabulated_kernel_table_must_exist(tmp_path):
    kernel = {"type": "tabulated", "table_path": str(tmp_path / "missing.csv")}
    with pytest.raises(ConfigurationError) as excinfo:
        normalize_config({"kernel": kernel, "time": {"T": 0.5}})
    assert "kernel.table_path" in excinfo.value.message


def test_polynomial_kernel_q_range():
    with pytest.raises(ConfigurationError):
        normalize_config({"kernel": {"type": "polynomial", "q": 2.0}})
    # 未使用的参数不做范围检查
    config = normalize_config({"kernel": {"type": "exponential", "q": 2.0}})
    assert config["KERNEL"]["Q"] == 2.0


def test_delta_must_be_below_one():
    with pytest.raises(ConfigurationError):
        normalize_config({"analysis": {"delta": 1.0}})


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("VISCOWELL_SEED", "7")
    assert normalize_config({"analysis": {"seed": 3}})["ANALYSIS"]["SEED"] == 7


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    assert normalize_config({})["APP"]["LOG_LEVEL"] == "DEBUG"
    monkeypatch.setenv("LOG_LEVEL", "verbose")
    with pytest.raises(ConfigurationError):
        normalize_config({})


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "missing.yaml"))


def test_load_config_by_suffix(tmp_path):
    yaml_path = tmp_path / "run.yaml"
    yaml_path.write_text("grid:\n  n: 32\nkernel:\n  type: zero\n", encoding="utf-8")
    flat_path = tmp_path / "run.conf"
    flat_path.write_text("grid.n=32\nkernel.type=zero\n", encoding="utf-8")
    assert load_config(str(yaml_path)) == load_config(str(flat_path))


def test_load_config_from_environment_path(tmp_path, monkeypatch):
    path = tmp_path / "env.yaml"
    path.write_text("grid:\n  n: 16\n", encoding="utf-8")
    monkeypatch.setenv("CONFIG_PATH", str(path))
    assert load_config()["GRID"]["N"] == 16


def test_yaml_syntax_error():
    with pytest.raises(ConfigurationError):
        parse_config_text("grid: [1, 2\n", flat=False)
