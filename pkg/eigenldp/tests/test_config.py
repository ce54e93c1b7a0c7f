"""Tests for thread-count configuration (eigenldp/config.py)."""

from __future__ import annotations

import os
from unittest.mock import patch

from eigenldp import config


class TestDefaultThreads:
    def test_from_environment(self):
        with patch.dict(os.environ, {"LDP_EIGEN_THREADS": "3"}):
            assert config.default_threads() == 3

    def test_invalid_value_falls_back_to_cores(self):
        with patch.dict(os.environ, {"LDP_EIGEN_THREADS": "zero"}), \
             patch("eigenldp.config.os.cpu_count", return_value=7):
            assert config.default_threads() == 7

    def test_non_positive_falls_back_to_cores(self):
        with patch.dict(os.environ, {"LDP_EIGEN_THREADS": "0"}), \
             patch("eigenldp.config.os.cpu_count", return_value=5):
            assert config.default_threads() == 5

    def test_unknown_core_count(self, monkeypatch, tmp_path):
        monkeypatch.delenv("LDP_EIGEN_THREADS", raising=False)
        with patch.object(config, "PROJECT_ROOT", tmp_path), \
             patch("eigenldp.config.os.cpu_count", return_value=None):
            assert config.default_threads() == 1

    def test_from_dotenv(self, monkeypatch, tmp_path):
        monkeypatch.delenv("LDP_EIGEN_THREADS", raising=False)
        (tmp_path / ".env").write_text("# local settings\nLDP_EIGEN_THREADS='6'\n")
        with patch.object(config, "PROJECT_ROOT", tmp_path):
            assert config.default_threads() == 6

    def test_environment_beats_dotenv(self, tmp_path):
        (tmp_path / ".env").write_text("LDP_EIGEN_THREADS=6\n")
        with patch.dict(os.environ, {"LDP_EIGEN_THREADS": "2"}), \
             patch.object(config, "PROJECT_ROOT", tmp_path):
            assert config.default_threads() == 2
