"""Monte Carlo plumbing: seeded replica streams, thread fan-out, log-mean-exp with jackknife."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass
class Estimate:
    value: float
    std_err: float
    n_samples: int
    seed: int | None = None


def spawn_generators(seed: int | None, n: int) -> list[np.random.Generator]:
    """n independent streams; the layout depends only on (seed, n)."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(child) for child in children]


def chunk_sizes(n_samples: int, chunk: int) -> list[int]:
    full, rest = divmod(n_samples, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_replicas(fn: Callable[[np.random.Generator], T], generators: Sequence[np.random.Generator],
                 threads: int = 1) -> list[T]:
    """Apply fn to every stream; results come back in stream order."""
    if threads <= 1 or len(generators) <= 1:
        return [fn(g) for g in generators]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, generators))


def log_mean_exp(log_values) -> float:
    """ln of the mean of exp(log_values), -inf when every term is -inf."""
    lv = np.asarray(log_values, dtype=float)
    if lv.size == 0:
        return -math.inf
    if np.all(np.isneginf(lv)):
        return -math.inf
    return float(logsumexp(lv) - math.log(lv.size))


def jackknife_log_mean_exp(log_values) -> tuple[float, float]:
    """Point value and leave-one-out jackknife standard error of log_mean_exp.

    The standard error is inf when dropping a single term empties the sum,
    and nan when there is no nonzero term at all.
    """
    lv = np.asarray(log_values, dtype=float)
    n = lv.size
    value = log_mean_exp(lv)
    if n < 2 or math.isinf(value):
        return value, math.nan

    top = int(np.argmax(lv))
    m = lv[top]
    w = np.exp(lv - m)
    total = w.sum()
    rest = total - w
    with np.errstate(divide="ignore"):
        loo = m + np.log(np.clip(rest, 0.0, None)) - math.log(n - 1)
    # the largest term would cancel catastrophically; sum the others directly
    loo[top] = log_mean_exp(np.delete(lv, top))
    if np.any(np.isneginf(loo)):
        return value, math.inf
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return value, se
