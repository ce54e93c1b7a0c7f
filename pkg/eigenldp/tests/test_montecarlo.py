"""Tests for seeded streams, thread fan-out and log-mean-exp (eigenldp/montecarlo.py)."""

import math

import numpy as np
import pytest

from eigenldp.montecarlo import (
    chunk_sizes,
    jackknife_log_mean_exp,
    log_mean_exp,
    run_replicas,
    spawn_generators,
)


class TestStreams:
    def test_same_seed_same_streams(self):
        a = [g.random() for g in spawn_generators(3, 4)]
        b = [g.random() for g in spawn_generators(3, 4)]
        assert a == b

    def test_streams_are_distinct(self):
        draws = [g.random() for g in spawn_generators(3, 4)]
        assert len(set(draws)) == 4

    def test_chunk_sizes(self):
        assert chunk_sizes(10, 4) == [4, 4, 2]
        assert chunk_sizes(8, 4) == [4, 4]

    @pytest.mark.parametrize("threads", [1, 2, 8])
    def test_results_in_stream_order(self, threads):
        out = run_replicas(lambda g: g.integers(1_000_000), spawn_generators(11, 6), threads)
        expected = [g.integers(1_000_000) for g in spawn_generators(11, 6)]
        assert out == expected


class TestLogMeanExp:
    def test_value(self):
        assert log_mean_exp([0.0, math.log(3.0)]) == pytest.approx(math.log(2.0))

    def test_no_overflow(self):
        assert log_mean_exp([1000.0, 1000.0]) == pytest.approx(1000.0)

    def test_all_neg_inf(self):
        assert log_mean_exp([-math.inf, -math.inf]) == -math.inf

    def test_empty(self):
        assert log_mean_exp([]) == -math.inf


class TestJackknife:
    def test_two_values(self):
        value, se = jackknife_log_mean_exp([0.0, math.log(3.0)])
        assert value == pytest.approx(math.log(2.0))
        assert se == pytest.approx(math.log(3.0) / 2.0)

    def test_constant_has_zero_error(self):
        _, se = jackknife_log_mean_exp(np.full(50, -3.0))
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_single_hit_gives_infinite_error(self):
        value, se = jackknife_log_mean_exp([0.0, -math.inf, -math.inf])
        assert value == pytest.approx(-math.log(3.0))
        assert math.isinf(se)

    def test_no_hit_gives_nan_error(self):
        value, se = jackknife_log_mean_exp([-math.inf, -math.inf])
        assert value == -math.inf
        assert math.isnan(se)

    def test_matches_direct_leave_one_out(self, rng):
        lv = rng.normal(0.0, 2.0, 30)
        loo = np.array([log_mean_exp(np.delete(lv, k)) for k in range(lv.size)])
        expected = math.sqrt((lv.size - 1) / lv.size * np.sum((loo - loo.mean()) ** 2))
        assert jackknife_log_mean_exp(lv)[1] == pytest.approx(expected, rel=1e-9)
