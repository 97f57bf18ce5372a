import pytest

from dfdetect.config import ServiceConfig, load_config
from dfdetect.errors import ConfigError


class TestLoadConfig:
    def test_defaults(self):
        config = load_config(env={})
        assert config.workers == 2
        assert config.cache_ttl_seconds == 7 * 24 * 3600.0
        assert config.backends == ("constant:0.5",)
        assert config.pipeline.cluster_sim_threshold == 0.8

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "svc.yaml"
        path.write_text(
            "storage_root: /data\n"
            "tokens: [alpha, beta]\n"
            "workers: 4\n"
            "proxy: socks5://127.0.0.1:9050\n"
            "backends:\n"
            "  - constant:0.5\n"
            "  - remote:http://scorer:9000\n"
            "pipeline:\n"
            "  peak_threshold: 0.45\n")
        config = load_config(str(path), env={})
        assert config.storage_root == "/data"
        assert config.tokens == ("alpha", "beta")
        assert config.workers == 4
        assert config.proxy == "socks5://127.0.0.1:9050"
        assert config.backends == ("constant:0.5", "remote:http://scorer:9000")
        assert config.pipeline.peak_threshold == 0.45

    def test_json_file(self, tmp_path):
        path = tmp_path / "svc.json"
        path.write_text('{"port": 9999, "tokens": "a,b"}')
        config = load_config(str(path), env={})
        assert config.port == 9999
        assert config.tokens == ("a", "b")

    def test_env_overrides(self, tmp_path):
        path = tmp_path / "svc.yaml"
        path.write_text("workers: 4\n")
        config = load_config(str(path), env={
            "DFDETECT_WORKERS": "8",
            "DFDETECT_TOKENS": "x,y,z",
        })
        assert config.workers == 8
        assert config.tokens == ("x", "y", "z")

    def test_malformed_yaml_has_line(self, tmp_path):
        path = tmp_path / "svc.yaml"
        path.write_text("workers: 4\n  bad indent: [\n")
        with pytest.raises(ConfigError) as exc_info:
            load_config(str(path), env={})
        assert "line" in str(exc_info.value)

    def test_unknown_field_named(self, tmp_path):
        path = tmp_path / "svc.yaml"
        path.write_text("wrokers: 4\n")
        with pytest.raises(ConfigError) as exc_info:
            load_config(str(path), env={})
        assert "wrokers" in str(exc_info.value)

    def test_bad_field_value_named(self, tmp_path):
        path = tmp_path / "svc.yaml"
        path.write_text("workers: lots\n")
        with pytest.raises(ConfigError) as exc_info:
            load_config(str(path), env={})
        assert "workers" in str(exc_info.value)

    def test_semantic_validation(self):
        with pytest.raises(ConfigError):
            ServiceConfig(workers=0)
        with pytest.raises(ConfigError):
            ServiceConfig(backends=())
        with pytest.raises(ConfigError):
            ServiceConfig(cache_ttl_seconds=-1)
