import pytest

from config import KEY_TABLE, ConfigError, ConfigManager, RunConfig, config_items, parse_config


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    p = cfg.params
    assert (p.omega, p.epsilon, p.omega_d, p.kappa, p.gamma, p.g1) == (50.0, 10.0, 9.99, 1.0, 0.005, 1.0)
    assert cfg.simulation.nph == 1
    assert cfg.simulation.nc == 6
    assert cfg.sweep.zero_tol == 1e-4
    assert cfg.output.precision == 12


def test_values_and_comments_round_trip():
    cfg = parse_config(
        "# параметри\n"
        "kappa = 1.0\n"
        "d = 0.016   # драйв\n"
        "\n"
        "model = full\n"
        "t_max = auto\n"
        "nc=8\n"
    )
    assert cfg.physics.kappa == 1.0
    assert cfg.physics.d == 0.016
    assert cfg.simulation.model == "full"
    assert cfg.simulation.t_max is None
    assert cfg.simulation.nc == 8


def test_negative_rate_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("omega = 50\n\ngamma = -1\n")
    assert info.value.line == 3
    assert "ред 3" in str(info.value)


@pytest.mark.parametrize(
    "text, line",
    [
        ("temperature = 4\n", 1),
        ("kappa = 1\nkappa = fast\n", 2),
        ("kappa 1\n", 1),
        ("nph = 1.5\n", 1),
    ],
)
def test_unknown_keys_and_bad_values(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


def test_truncation_invariant_uses_offending_line():
    with pytest.raises(ConfigError) as info:
        parse_config("nph = 2\nnc = 4\n")
    assert info.value.line == 2
    with pytest.raises(ConfigError) as info:
        parse_config("# only photons\nnph = 4\n")
    assert info.value.line == 2


@pytest.mark.parametrize("text", ["n_steps = 1", "sweep_steps = 1", "grid_step = 0.05", "model = exact",
                                  "precision = 0", "log_level = LOUD", "workers = 0", "g1 = 0"])
def test_invariant_violations(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides_take_precedence():
    manager = ConfigManager()
    manager.load_text("d = 0.01\ng2 = 0.5\n")
    cfg = manager.apply_overrides(["d=0.02", "sweep_steps = 60"])
    assert cfg.physics.d == 0.02
    assert cfg.physics.g2 == 0.5
    assert cfg.sweep.sweep_steps == 60


def test_override_errors_have_no_line_number():
    manager = ConfigManager()
    with pytest.raises(ConfigError) as info:
        manager.apply_overrides(["kappa=-2"])
    assert info.value.line == 0
    assert "kappa=-2" in str(info.value)


def test_log_level_is_normalized():
    assert parse_config("log_level = debug").logging.log_level == "DEBUG"


def test_config_items_cover_every_key():
    items = config_items(RunConfig())
    assert [key for key, _ in items] == list(KEY_TABLE)
    assert dict(items)["omega_d"] == 9.99


@pytest.mark.parametrize("text", ["gamma = nan\n", "d = inf\n", "t_max = -inf\n", "kappa = NaN\n"])
def test_non_finite_numbers_rejected_with_line(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == 1
    assert "крайно число" in str(info.value)


def test_non_finite_override_rejected():
    with pytest.raises(ConfigError) as info:
        ConfigManager().apply_overrides(["gamma=nan"])
    assert info.value.line == 0
