"""Benchmark harness checks at toy sizes (no performance assertions here)."""

import numpy as np
import pytest

from specmix.bench import (
    ATTENTION,
    BenchResult,
    _time_workload,
    bench_mixing_vs_attention,
    results_csv,
    results_markdown,
)
from specmix.errors import ConfigError


@pytest.fixture(scope="module")
def tiny_results():
    return bench_mixing_vs_attention([8, 16], d_model=8, n_heads=2, repeats=5, warmup=2)


class TestHarness:
    def test_row_layout(self, tiny_results):
        assert len(tiny_results) == 6
        assert [r.workload for r in tiny_results] == [
            "attention", "fourier-real", "hartley",
            "attention", "fourier-real", "hartley",
        ]
        assert [r.seq_len for r in tiny_results] == [8, 8, 8, 16, 16, 16]
        assert all(r.d_model == 8 for r in tiny_results)

    def test_rates_positive_and_finite(self, tiny_results):
        for r in tiny_results:
            assert np.isfinite(r.iters_per_sec) and r.iters_per_sec > 0
            assert np.isfinite(r.speedup_vs_baseline) and r.speedup_vs_baseline > 0

    def test_attention_is_its_own_baseline(self, tiny_results):
        for r in tiny_results:
            if r.workload == ATTENTION:
                assert r.speedup_vs_baseline == 1.0

    def test_speedup_consistent_with_rates(self, tiny_results):
        by_len = {}
        for r in tiny_results:
            by_len.setdefault(r.seq_len, {})[r.workload] = r
        for rows in by_len.values():
            base = rows[ATTENTION].iters_per_sec
            for name, row in rows.items():
                assert row.speedup_vs_baseline == pytest.approx(
                    row.iters_per_sec / base, rel=1e-12
                )

    def test_precondition_validation(self):
        with pytest.raises(ConfigError, match="repeats"):
            bench_mixing_vs_attention([8], d_model=8, n_heads=2, repeats=4)
        with pytest.raises(ConfigError, match="warmup"):
            bench_mixing_vs_attention([8], d_model=8, n_heads=2, warmup=1)
        with pytest.raises(ConfigError, match="seq_lens"):
            bench_mixing_vs_attention([], d_model=8, n_heads=2)
        with pytest.raises(ConfigError, match="seq_lens"):
            bench_mixing_vs_attention([0], d_model=8, n_heads=2)

    def test_checksum_guard_rejects_non_finite(self):
        with pytest.raises(FloatingPointError, match="checksum"):
            _time_workload(lambda: np.array([np.inf]), repeats=5, warmup=2)

    def test_timer_counts_only_timed_iterations(self):
        calls = []
        _time_workload(lambda: calls.append(1) or np.zeros(1), repeats=5, warmup=2)
        assert len(calls) == 7


class TestEmitters:
    def test_csv_header_and_rows(self):
        rows = [
            BenchResult("attention", 512, 768, 2.0, 1.0),
            BenchResult("hartley", 512, 768, 10.0, 5.0),
        ]
        text = results_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "workload,seq_len,d_model,iters_per_sec,speedup"
        assert lines[1].startswith("attention,512,768,")
        assert lines[2].startswith("hartley,512,768,")

    def test_markdown_table_shape(self):
        rows = [BenchResult("attention", 8, 8, 123.0, 1.0)]
        text = results_markdown(rows)
        lines = text.strip().split("\n")
        assert lines[0].startswith("| workload ")
        assert set(lines[1].replace("|", "").split()) == {"---", "---:"}
        assert "| attention | 8 | 8 |" in lines[2]
