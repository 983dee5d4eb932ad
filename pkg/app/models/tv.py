from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from app.core.exceptions import DataError


@dataclass(frozen=True)
class PartialSums:
    """gammas in sorted order and their prefix sums, prefix[0] = 0."""
    gammas: np.ndarray
    prefix: np.ndarray

    def interval(self, i: int, j: int) -> float:
        """Gamma_ij = gammas[i] + ... + gammas[j] (0-based, inclusive)."""
        return float(self.prefix[j + 1] - self.prefix[i])


@dataclass(frozen=True)
class TriangleWeights:
    """Sparse weights w_ij over index pairs i <= j (0-based)."""
    entries: Mapping[tuple[int, int], float]

    def __post_init__(self):
        entries = {(int(i), int(j)): float(w) for (i, j), w in dict(self.entries).items()}
        for i, j in entries:
            if i > j or i < 0:
                raise DataError(f"Triangle weight index ({i}, {j}) is not a pair with 0 <= i <= j")
        object.__setattr__(self, "entries", MappingProxyType(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def l1_norm(self) -> float:
        return float(sum(abs(w) for w in self.entries.values()))

    def coverage(self, m: int) -> np.ndarray:
        """v[k] = sum of w_ij over pairs with i <= k <= j."""
        delta = np.zeros(m + 1)
        for (i, j), w in self.entries.items():
            if j >= m:
                raise DataError(f"Triangle weight index ({i}, {j}) is outside [0, {m})")
            delta[i] += w
            delta[j + 1] -= w
        return np.cumsum(delta[:m])

    def inner(self, partial_sums: PartialSums) -> float:
        """sum over pairs of Gamma_ij * w_ij."""
        return float(sum(partial_sums.interval(i, j) * w for (i, j), w in self.entries.items()))


@dataclass(frozen=True)
class ProxProblem:
    """
    1-D weighted fused-lasso denoising with boundary terms:
    minimize 1/2 sum_t weights_t (v_t - z_t)^2 + lam (|v_0| + sum |v_t - v_t+1| + |v_-1|).
    """
    z: np.ndarray
    weights: np.ndarray
    lam: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if z.shape != weights.shape:
            raise DataError(f"z has {len(z)} entries but weights has {len(weights)}")
        if not np.all(np.isfinite(z)):
            raise DataError("Prox targets must be finite")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise DataError("Prox weights must be positive and finite")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise DataError(f"Prox lam must be >= 0, got {self.lam}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return len(self.z)

    def objective(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        if self.n == 0:
            return 0.0
        penalty = abs(v[0]) + np.abs(np.diff(v)).sum() + abs(v[-1])
        return float(0.5 * np.sum(self.weights * (v - self.z) ** 2) + self.lam * penalty)
