from __future__ import annotations

import math
from itertools import combinations, islice
from typing import Literal, Optional

import numpy as np

from src.analytics.matrix_core import log_abs_det
from src.analytics.spectrum import max_det
from src.core.errors import InputError
from src.models.channel import Atm, ChannelInstance, MspCheck

ChannelDistribution = Literal["gaussian", "rayleigh"]

# Rayleigh scale giving the variate itself unit variance: var = (2 - pi/2) * scale^2.
RAYLEIGH_UNIT_VARIANCE_SCALE = 1.0 / math.sqrt(2.0 - math.pi / 2.0)
MSP_BATCH_SIZE = 4096
ATM_TOL = 1e-6


def draw_channel(
    n: int, distribution: ChannelDistribution, rng: np.random.Generator
) -> np.ndarray:
    if n < 1:
        raise InputError("n must be at least 1")
    while True:
        if distribution == "gaussian":
            channel = rng.standard_normal((n, n))
        elif distribution == "rayleigh":
            channel = rng.rayleigh(scale=RAYLEIGH_UNIT_VARIANCE_SCALE, size=(n, n))
        else:
            raise InputError(f"Unknown channel distribution: {distribution}")
        if log_abs_det(channel) is not None:
            return channel


def draw_symbols(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or k < 1:
        raise InputError("n and k must be at least 1")
    return np.where(rng.integers(0, 2, size=(n, k)) == 1, 1.0, -1.0)


def observe(
    channel: np.ndarray, symbols: np.ndarray, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    if sigma < 0:
        raise InputError("sigma must be non-negative")
    clean = channel @ symbols
    if sigma == 0:
        return clean
    return clean + sigma * rng.standard_normal(clean.shape)


def sigma_for_snr(channel: np.ndarray, snr_db: float) -> float:
    """Noise std for SNR_dB = 10 log10(E||Ax||^2 / (n sigma^2)), x uniform over {-1,+1}^n."""
    n = channel.shape[0]
    signal_power = float(np.sum(channel**2))
    return math.sqrt(signal_power / (n * 10.0 ** (snr_db / 10.0)))


def sample_instance(
    n: int,
    k: int,
    rng: np.random.Generator,
    *,
    sigma: float = 0.0,
    snr_db: Optional[float] = None,
    distribution: ChannelDistribution = "gaussian",
    seed: tuple[int, ...] = (),
) -> ChannelInstance:
    channel = draw_channel(n, distribution, rng)
    symbols = draw_symbols(n, k, rng)
    if snr_db is not None:
        sigma = sigma_for_snr(channel, snr_db)
    observed = observe(channel, symbols, sigma, rng)
    return ChannelInstance(
        n=n,
        k=k,
        A=channel,
        X=symbols,
        sigma=sigma,
        Y=observed,
        seed=seed,
        distribution=distribution,
    )


def atm_equivalent(
    first: np.ndarray, second: np.ndarray, tol: float = ATM_TOL
) -> tuple[bool, Optional[Atm]]:
    """Find an Atm T with first == T @ second, entrywise within tol."""
    if first.shape != second.shape:
        return False, None
    n = first.shape[0]
    used = np.zeros(n, dtype=bool)
    perm = np.empty(n, dtype=int)
    signs = np.empty(n)
    for row in range(n):
        matched = False
        for candidate in range(n):
            if used[candidate]:
                continue
            for sign in (1.0, -1.0):
                if np.all(np.abs(first[row] - sign * second[candidate]) <= tol):
                    perm[row] = candidate
                    signs[row] = sign
                    used[candidate] = True
                    matched = True
                    break
            if matched:
                break
        if not matched:
            return False, None
    return True, Atm(perm=perm, signs=signs)


def _canonical_columns(symbols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    leading = np.where(symbols[0] >= 0, 1.0, -1.0)
    normalized = symbols * leading
    columns, first_seen = np.unique(normalized, axis=1, return_index=True)
    return columns, first_seen


def _subsets_attain(columns: np.ndarray, subsets: np.ndarray, target: int) -> Optional[int]:
    stacks = np.transpose(columns[:, subsets], (1, 0, 2))
    dets = np.abs(np.rint(np.linalg.det(stacks)))
    hits = np.flatnonzero(dets == target)
    return int(hits[0]) if hits.size else None


def check_msp(
    symbols: np.ndarray,
    *,
    exhaustive_limit: int = 500_000,
    random_budget: int = 200_000,
    rng: Optional[np.random.Generator] = None,
) -> MspCheck:
    """Search n-column subsets of a sign matrix for one attaining the maximal |det|.

    Above `exhaustive_limit` subsets the search is randomized: a True answer is certain,
    a False answer is probabilistic (`exhaustive` is False).
    """
    n, k = symbols.shape
    target = max_det(n)
    if k < n:
        return MspCheck(has_msp=False, exhaustive=True, subsets_checked=0)

    columns, first_seen = _canonical_columns(np.asarray(symbols, dtype=float))
    distinct = columns.shape[1]
    if distinct < n:
        return MspCheck(has_msp=False, exhaustive=True, subsets_checked=0)

    total = math.comb(distinct, n)
    if total <= exhaustive_limit:
        iterator = combinations(range(distinct), n)
        checked = 0
        while True:
            chunk = list(islice(iterator, MSP_BATCH_SIZE))
            if not chunk:
                return MspCheck(has_msp=False, exhaustive=True, subsets_checked=checked)
            subsets = np.array(chunk, dtype=int)
            hit = _subsets_attain(columns, subsets, target)
            if hit is not None:
                return MspCheck(
                    has_msp=True,
                    exhaustive=True,
                    subsets_checked=checked + hit + 1,
                    witness_columns=tuple(sorted(int(first_seen[c]) for c in subsets[hit])),
                )
            checked += len(chunk)

    generator = rng if rng is not None else np.random.default_rng(0)
    checked = 0
    while checked < random_budget:
        batch = min(MSP_BATCH_SIZE, random_budget - checked)
        subsets = np.argsort(generator.random((batch, distinct)), axis=1)[:, :n]
        hit = _subsets_attain(columns, subsets, target)
        if hit is not None:
            return MspCheck(
                has_msp=True,
                exhaustive=False,
                subsets_checked=checked + hit + 1,
                witness_columns=tuple(sorted(int(first_seen[c]) for c in subsets[hit])),
            )
        checked += batch
    return MspCheck(has_msp=False, exhaustive=False, subsets_checked=checked)


def has_msp(symbols: np.ndarray, **kwargs) -> bool:  # type: ignore[no-untyped-def]
    return check_msp(symbols, **kwargs).has_msp
