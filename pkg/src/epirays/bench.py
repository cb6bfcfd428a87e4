"""Timing harness for the attention backends.

Builds one synthetic workload and times the line-constrained forward on
every available kernel backend next to the dense masked baseline at the
same size. Used by the bench-eca subcommand and the performance tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attention import (EcaWeights, EpipolarFeatures, FeatureMap, eca_cost,
                        eca_forward, masked_dense_attention)

__all__ = ["BenchRow", "benchmark_eca"]


@dataclass(frozen=True)
class BenchRow:
    """One backend's timings against the dense baseline."""

    backend: str
    h: int
    w: int
    l: int
    d: int
    eca_score_ops: int
    dense_score_ops: int
    ratio: float
    eca_time: float
    dense_time: float


def _median_time(fn, iters: int) -> float:
    times = []
    fn()  # warm up allocation and code paths before timing
    for _ in range(iters):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def benchmark_eca(h: int, w: int, l: int, d: int, iters: int = 30,
                  seed: int = 0,
                  backends: tuple[str, ...] | None = None) -> list[BenchRow]:
    """Median forward times for each backend and the dense baseline.

    The workload is random but seeded: random target features, random
    gathered line features with a sprinkling of invalid samples, and a
    dense band mask with l allowed source pixels per row so the baseline
    answers the same kind of query.
    """
    if backends is None:
        backends = _kernels.available_backends()
    rng = np.random.default_rng(seed)
    n = h * w
    target = FeatureMap(frame=2, data=rng.standard_normal((h, w, d)))
    source = FeatureMap(frame=1, data=rng.standard_normal((h, w, d)))
    gathered = EpipolarFeatures(
        data=rng.standard_normal((n, l, d)),
        valid=rng.random((n, l)) > 0.05,
    )
    weights = EcaWeights(
        w_q=rng.standard_normal((d, d)) / np.sqrt(d),
        w_k=rng.standard_normal((d, d)) / np.sqrt(d),
        w_v=rng.standard_normal((d, d)) / np.sqrt(d),
        w_out=rng.standard_normal((d, d)) / np.sqrt(d),
    )
    band = np.zeros((n, n), dtype=bool)
    cols = np.argsort(rng.random((n, n)), axis=1)[:, : min(l, n)]
    band[np.arange(n)[:, None], cols] = True

    dense_time = _median_time(
        lambda: masked_dense_attention(target, source, band, weights), iters
    )
    cost = eca_cost(h, w, l, d)
    rows = []
    for backend in backends:
        eca_time = _median_time(
            lambda: eca_forward(target, gathered, weights, backend=backend),
            iters,
        )
        rows.append(BenchRow(
            backend=backend, h=h, w=w, l=l, d=d,
            eca_score_ops=cost.eca_score_ops,
            dense_score_ops=cost.dense_score_ops,
            ratio=cost.ratio,
            eca_time=eca_time,
            dense_time=dense_time,
        ))
    return rows
