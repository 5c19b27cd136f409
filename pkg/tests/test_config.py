import pytest

from rase_lab.config import (
    DEFAULT_SEED,
    ConfigError,
    RunConfig,
    apply_overrides,
    dump_config,
    load_config,
    multimode_config,
    parse_assignments,
)


def test_defaults():
    cfg = RunConfig()
    assert cfg.run.seed == DEFAULT_SEED == 2016
    assert cfg.run.n_shots == 8000
    assert cfg.run.vacuum_shots == 32000


@pytest.mark.parametrize("key, value, get", [
    ("physics.alpha_l", "2.5", lambda c: c.physics.alpha_l),
    ("timing.s_us", "10", lambda c: c.timing.s_us),
    ("timing.ref2_freq_hz", "1.2e6", lambda c: c.timing.ref2.freq_hz),
    ("dsp.cutoff_us", "4", lambda c: c.dsp.window.cutoff_us),
    ("dsp.filter_bw_hz", "4e5", lambda c: c.dsp.filter_bw_hz),
    ("run.n_shots", "123", lambda c: c.run.n_shots),
    ("run.quantize_delay", "yes", lambda c: c.run.quantize_delay),
])
def test_override_reaches_field(key, value, get):
    cfg = apply_overrides(RunConfig(), {key: value})
    expected = True if value == "yes" else float(value)
    assert get(cfg) == expected


@pytest.mark.parametrize("key", ["physics.nope", "timing.ref3_freq_hz", "bogus.alpha_l", "dsp.window"])
def test_unknown_key_rejected(key):
    with pytest.raises(ConfigError, match="unknown"):
        apply_overrides(RunConfig(), {key: "1"})


@pytest.mark.parametrize("items", [
    {"run.n_shots": "0"},
    {"run.n_shots": "many"},
    {"run.quantize_delay": "maybe"},
])
def test_bad_values_rejected(items):
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), items)


def test_parse_assignments():
    assert parse_assignments(["run.seed=5", " physics.alpha_l = 2 "]) == {
        "run.seed": "5", "physics.alpha_l": "2"}
    for bad in ("run.seed", "seed=5"):
        with pytest.raises(ConfigError):
            parse_assignments([bad])


def test_file_then_override(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nseed = 7\nn_shots = 50\n[physics]\nalpha_l = 2.0\n")
    cfg = load_config(path, {"run.seed": "9"})
    assert (cfg.run.seed, cfg.run.n_shots, cfg.physics.alpha_l) == (9, 50, 2.0)


@pytest.mark.parametrize("text", ["no section header\n", "[run]\nseed 5 = = \n[run]\n"])
def test_malformed_file(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.ini")


@pytest.mark.parametrize("base", [RunConfig(), multimode_config()])
def test_dump_round_trip(tmp_path, base):
    cfg = apply_overrides(base, {"run.seed": "3", "physics.alpha_l": "2.2", "dsp.w_hz": "5e5"})
    dump_config(cfg, tmp_path / "out.ini")
    assert load_config(tmp_path / "out.ini", base=base) == cfg
