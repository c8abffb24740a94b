"""Throughput microbenchmarks: token mixing vs a self-attention sub-layer.

Timed workloads per sequence length, on identical seeded inputs:

    attention     full sub-layer forward: Q/K/V projections, scaled dot-product
                  softmax, output projection
    fourier-real  mix2d with the real-part projection only
    hartley       mix2d with the Hartley projection only

The mixing workloads time just the transform because that is all the mixing
sub-layer executes; the attention baseline includes its projections because
attention cannot run without them. Reported numbers are 1 / median wall-clock
over `repeats` iterations after `warmup` discarded iterations, single-threaded
(BLAS pools are clamped when threadpoolctl is available). Every iteration's
output feeds a checksum that is verified finite, so no work can be skipped.
"""

from __future__ import annotations

import contextlib
import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .nn import AttentionConfig, AttentionParams, Node, Parameter, multi_head_attention
from .rng import SplitRng
from .spectral import MixingKind, mix2d

ATTENTION = "attention"
INIT_SCALE = 0.02


@dataclass(frozen=True)
class BenchResult:
    workload: str
    seq_len: int
    d_model: int
    iters_per_sec: float
    speedup_vs_baseline: float


def _single_thread():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=1)


def _attention_params(d_model: int, rng: SplitRng) -> AttentionParams:
    names = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")
    params = {}
    for name in names:
        shape = (d_model, d_model) if name.startswith("w") else (d_model,)
        params[name] = Parameter(name, rng.normal(size=shape) * INIT_SCALE)
    return AttentionParams(**params)


def _time_workload(fn, repeats: int, warmup: int) -> float:
    """Median seconds per iteration; consumes a checksum so work is observable."""
    checksum = 0.0
    for _ in range(warmup):
        checksum += float(np.sum(fn()))
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
        checksum += float(np.sum(out))
    if not np.isfinite(checksum):
        raise FloatingPointError(f"benchmark produced a non-finite checksum: {checksum}")
    return float(np.median(times))


def bench_mixing_vs_attention(
    seq_lens,
    d_model: int = 768,
    n_heads: int = 12,
    repeats: int = 5,
    warmup: int = 2,
    seed: int = 0,
) -> list:
    """Time the three workloads at each length; speedups are vs attention."""
    if repeats < 5:
        raise ConfigError(f"repeats must be >= 5, got {repeats}")
    if warmup < 2:
        raise ConfigError(f"warmup must be >= 2, got {warmup}")
    seq_lens = [int(n) for n in seq_lens]
    if not seq_lens or min(seq_lens) < 1:
        raise ConfigError("seq_lens must be positive")

    root = SplitRng(seed)
    cfg = AttentionConfig(n_heads=n_heads, d_model=d_model, causal=False)
    params = _attention_params(d_model, root.split(0))
    results = []
    with _single_thread():
        for i, seq_len in enumerate(seq_lens):
            x = root.split(1 + i).normal(size=(seq_len, d_model))
            node = Node(x)

            def run_attention():
                return multi_head_attention(node, node, node, params, cfg, tape=None).value

            base_median = _time_workload(run_attention, repeats, warmup)
            base_ips = 1.0 / base_median
            results.append(BenchResult(ATTENTION, seq_len, d_model, base_ips, 1.0))
            for kind in (MixingKind.FOURIER_REAL, MixingKind.HARTLEY):
                median = _time_workload(lambda: mix2d(x, kind), repeats, warmup)
                ips = 1.0 / median
                results.append(
                    BenchResult(kind.label, seq_len, d_model, ips, ips / base_ips)
                )
    return results


def results_markdown(results) -> str:
    lines = [
        "| workload | seq_len | d_model | it/s | speedup |",
        "| --- | ---: | ---: | ---: | ---: |",
    ]
    for r in results:
        lines.append(
            f"| {r.workload} | {r.seq_len} | {r.d_model} "
            f"| {r.iters_per_sec:.4g} | {r.speedup_vs_baseline:.2f}x |"
        )
    return "\n".join(lines) + "\n"


def results_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["workload", "seq_len", "d_model", "iters_per_sec", "speedup"])
    for r in results:
        writer.writerow(
            [r.workload, r.seq_len, r.d_model,
             f"{r.iters_per_sec:.6g}", f"{r.speedup_vs_baseline:.6g}"]
        )
    return buf.getvalue()
