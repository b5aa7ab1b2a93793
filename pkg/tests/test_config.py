"""Tests for RunConfig loading, overrides and persistence."""

import pytest

from fractomatch.config import RunConfig
from fractomatch.errors import ConfigError


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    for name in ("FRACTOMATCH_SEED", "FRACTOMATCH_NU", "FRACTOMATCH_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


class TestDefaults:
    def test_values(self):
        cfg = RunConfig()
        assert cfg.bands.bands == [(5.0, 10.0), (10.0, 20.0)]
        assert cfg.spectrum.transform_size == 256
        assert cfg.fit.nu == 10.0
        assert cfg.calibration.alpha == 1e-4
        assert cfg.prior == 0.5
        assert cfg.sim.k == 9 and cfg.sim.overlap == 0.75

    def test_load_without_files(self):
        assert RunConfig.load() == RunConfig()

    def test_log_level_normalised(self):
        assert RunConfig(log_level="debug").log_level == "DEBUG"


class TestLoading:
    def test_toml_found_in_working_directory(self, tmp_path):
        (tmp_path / "fractomatch.toml").write_text(
            "seed = 11\nprior = 0.25\n\n[fit]\nnu = 5.0\n\n[bands]\nbands = [[5.0, 10.0], [10.0, 20.0], [20.0, 40.0]]\n"
        )
        cfg = RunConfig.load()
        assert cfg.seed == 11
        assert cfg.prior == 0.25
        assert cfg.fit.nu == 5.0
        assert cfg.bands.p == 3

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "study.yaml"
        path.write_text("spectrum:\n  transform_size: 512\n  hann: true\nsim:\n  overlap: 0.5\n")
        cfg = RunConfig.load(str(path))
        assert cfg.spectrum.transform_size == 512
        assert cfg.spectrum.hann
        assert cfg.sim.overlap == 0.5

    def test_environment_overrides_file(self, tmp_path, monkeypatch):
        (tmp_path / "fractomatch.yaml").write_text("seed: 3\n")
        monkeypatch.setenv("FRACTOMATCH_SEED", "42")
        monkeypatch.setenv("FRACTOMATCH_NU", "15")
        monkeypatch.setenv("FRACTOMATCH_LOG_LEVEL", "warning")
        cfg = RunConfig.load()
        assert cfg.seed == 42
        assert cfg.sim.seed == 42
        assert cfg.fit.nu == 15.0
        assert cfg.log_level == "WARNING"

    def test_bad_environment_value(self, monkeypatch):
        monkeypatch.setenv("FRACTOMATCH_SEED", "many")
        with pytest.raises(ConfigError):
            RunConfig.load()

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            RunConfig.load("nowhere.toml")

    def test_invalid_value(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("spectrum:\n  transform_size: 200\n")
        with pytest.raises(ConfigError):
            RunConfig.load(str(path))

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("colour = 'blue'\n")
        with pytest.raises(ConfigError):
            RunConfig.load(str(path))

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("fit: [unclosed\n")
        with pytest.raises(ConfigError):
            RunConfig.load(str(path))

    def test_despike_window_choices(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"despike": {"window": 4}})


class TestOverrides:
    def test_flags_win(self):
        cfg = RunConfig().with_overrides(seed=9, bands="5-10,10-20,20-40", nu=3.0, k=5, overlap=0.0, pitch=2.2)
        assert cfg.seed == 9 and cfg.sim.seed == 9
        assert cfg.bands.describe() == "5-10,10-20,20-40"
        assert cfg.fit.nu == 3.0
        assert (cfg.sim.k, cfg.sim.overlap, cfg.sim.pitch) == (5, 0.0, 2.2)

    def test_none_leaves_values(self):
        assert RunConfig().with_overrides() == RunConfig()

    def test_bad_bands(self):
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(bands="5-x")
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(bands="10-5")

    def test_bad_overlap(self):
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(overlap=0.3)


class TestDigestAndSave:
    def test_digest_tracks_content(self):
        assert RunConfig().digest() == RunConfig().digest()
        assert RunConfig().digest() != RunConfig().with_overrides(seed=1).digest()
        assert len(RunConfig().digest()) == 64

    @pytest.mark.parametrize("name", ["saved.toml", "saved.yaml"])
    def test_save_and_load(self, tmp_path, name):
        cfg = RunConfig().with_overrides(seed=5, bands="4-8,8-16", nu=20.0)
        path = tmp_path / "nested" / name
        cfg.save(str(path))
        assert RunConfig.load(str(path)) == cfg

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig().save(str(tmp_path / "config.json"))
