"""Random weighted/costed complete-digraph instances.

Every directed edge (i, j), i != j, carries an independent weight and an
independent cost, each drawn as U**s with U uniform on [0, 1) and
0 < s <= 1. All draws come from a single counter-based Philox stream keyed
on the seed: edge (i, j)'s weight sits at stream position i*n + j and its
cost at n*n + i*n + j, so regeneration is bit-for-bit reproducible and does
not depend on evaluation or thread order. Diagonal entries hold +inf so no
row scan can ever select a self-loop.

The on-disk format is a small self-describing binary: magic ``CARB``, a
version word, the header (n, s, seed), then the raw little-endian weight
matrix followed by the cost matrix.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InstanceFormatError

_MAGIC = b"CARB"
_VERSION = 1
_HEADER = struct.Struct("<4sIQdQ")  # magic, version, n, s, seed
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable dense instance: n x n weight and cost matrices, diagonal +inf."""

    n: int
    s: float
    weights: np.ndarray
    costs: np.ndarray
    seed: int

    def __post_init__(self):
        self.weights.flags.writeable = False
        self.costs.flags.writeable = False


@dataclass(frozen=True, eq=False)
class SandwichPair:
    """Coupled triple bracketing a general edge distribution.

    ``lower`` and ``upper`` are power-law instances with exponents
    s + epsilon_n and s - epsilon_n; ``actual`` applies the caller's quantile
    function. All three are transforms of the same per-edge uniforms, so
    lower <= actual <= upper edgewise wherever the actual value is small
    (below ``epsilon_n`` for any distribution with F(t) ~ t**(1/s) near 0).
    """

    lower: Instance
    upper: Instance
    actual: Instance
    epsilon_n: float


def coupling_epsilon(n: int) -> float:
    """Exponent gap used by the sandwich coupling: 1 / (10 log n)."""
    if n <= 2:
        raise ValueError(f"n must exceed 2 for the coupling, got {n}")
    return 1.0 / (10.0 * math.log(n))


def _uniform_matrices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two n x n uniforms from one Philox stream keyed on the seed."""
    gen = np.random.Generator(np.random.Philox(key=[seed & _MASK64, 0]))
    u_weights = gen.random((n, n))
    u_costs = gen.random((n, n))
    return u_weights, u_costs


def _power_transform(u: np.ndarray, exponent: float) -> np.ndarray:
    out = u.copy() if exponent == 1.0 else np.power(u, exponent)
    np.fill_diagonal(out, np.inf)
    return out


def generate(n: int, s: float, seed: int) -> Instance:
    """Draw an instance with i.i.d. U**s weights and costs on every edge."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    u_weights, u_costs = _uniform_matrices(n, seed)
    weights = _power_transform(u_weights, s)
    costs = _power_transform(u_costs, s)
    return Instance(n=n, s=s, weights=weights, costs=costs, seed=seed)


def generate_sandwich(
    n: int, s: float, inverse_cdf: Callable[[np.ndarray], np.ndarray], seed: int
) -> SandwichPair:
    """Generate power-law bracket instances and an ``actual`` instance coupled
    through the same uniforms.

    ``inverse_cdf`` must be the (vectorised) quantile function of a
    distribution with F(t) ~ t**(1/s) as t -> 0; callers pre-scale so the
    leading constant is 1.
    """
    eps = coupling_epsilon(n)  # rejects n <= 2
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    if s - eps <= 0.0:
        raise ValueError(f"coupling gap {eps:.4g} swallows exponent s={s}")

    u_weights, u_costs = _uniform_matrices(n, seed)

    def build(transform) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(transform(u_weights), dtype=np.float64)
        c = np.asarray(transform(u_costs), dtype=np.float64)
        np.fill_diagonal(w, np.inf)
        np.fill_diagonal(c, np.inf)
        return w, c

    lo_w, lo_c = build(lambda u: np.power(u, s + eps))
    hi_w, hi_c = build(lambda u: np.power(u, s - eps))
    ac_w, ac_c = build(inverse_cdf)

    lower = Instance(n=n, s=s + eps, weights=lo_w, costs=lo_c, seed=seed)
    upper = Instance(n=n, s=s - eps, weights=hi_w, costs=hi_c, seed=seed)
    actual = Instance(n=n, s=s, weights=ac_w, costs=ac_c, seed=seed)
    return SandwichPair(lower=lower, upper=upper, actual=actual, epsilon_n=eps)


def from_arrays(weights, costs, s: float = 1.0, seed: int = 0) -> Instance:
    """Build an instance from explicit matrices (diagonal is overwritten)."""
    w = np.array(weights, dtype=np.float64)
    c = np.array(costs, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape != c.shape:
        raise ValueError(f"expected matching square matrices, got {w.shape} and {c.shape}")
    n = w.shape[0]
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    np.fill_diagonal(w, np.inf)
    np.fill_diagonal(c, np.inf)
    return Instance(n=n, s=s, weights=w, costs=c, seed=seed)


def save(instance: Instance, path) -> None:
    """Write the self-describing binary file; load() round-trips bit-for-bit."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, instance.n, instance.s, instance.seed & _MASK64
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(instance.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(instance.costs, dtype="<f8").tobytes())


def load(path) -> Instance:
    """Read an instance file written by save()."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InstanceFormatError(f"{path}: too short for a header ({len(data)} bytes)")
    magic, version, n, s, seed = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise InstanceFormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise InstanceFormatError(f"{path}: unsupported version {version}")
    body = len(data) - _HEADER.size
    expected = 2 * n * n * 8
    if body != expected:
        raise InstanceFormatError(
            f"{path}: payload is {body} bytes but header n={n} implies {expected}"
        )
    block = n * n * 8
    weights = np.frombuffer(
        data, dtype="<f8", count=n * n, offset=_HEADER.size
    ).reshape(n, n).copy()
    costs = np.frombuffer(
        data, dtype="<f8", count=n * n, offset=_HEADER.size + block
    ).reshape(n, n).copy()
    return Instance(n=n, s=s, weights=weights, costs=costs, seed=seed)


def export_csv(instance: Instance, path) -> None:
    """Dump off-diagonal edges as rows (i, j, weight, cost), 0-indexed."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight", "cost"])
        for i in range(instance.n):
            for j in range(instance.n):
                if i == j:
                    continue
                writer.writerow(
                    [i, j, repr(float(instance.weights[i, j])), repr(float(instance.costs[i, j]))]
                )
