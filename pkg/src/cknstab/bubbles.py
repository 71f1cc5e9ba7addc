"""Multi-bubble sums, pairwise interactions and weighted norms of the interaction error."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import CylinderGrid, ModeFunction, h1_inner
from .params import CknParams
from .profiles import bubble_power_defect, eval_psi

DEFAULT_VARSIGMA = 0.1


@dataclass(frozen=True)
class BubbleConfig:
    params: CknParams
    centers: tuple

    def __post_init__(self):
        centers = tuple(float(s) for s in self.centers)
        if not centers:
            raise ValueError("a configuration needs at least one center")
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ValueError(f"centers must be strictly increasing, got {centers}")
        object.__setattr__(self, "centers", centers)

    @property
    def nu(self) -> int:
        return len(self.centers)

    @property
    def R(self) -> float:
        if self.nu < 2:
            return math.inf
        return min(b - a for a, b in zip(self.centers, self.centers[1:]))

    @property
    def Q(self) -> float:
        return 0.0 if self.nu < 2 else math.exp(-self.params.c * self.R)


def symmetric_pair(params: CknParams, R: float) -> BubbleConfig:
    return BubbleConfig(params, (-R / 2.0, R / 2.0))


def bubble_samples(config: BubbleConfig, grid: CylinderGrid) -> np.ndarray:
    return sum(eval_psi(config.params, s, grid.t) for s in config.centers)


def sum_bubbles(config: BubbleConfig, grid: CylinderGrid) -> ModeFunction:
    grid.check_tail(config.centers)
    return ModeFunction.bubble_sum(grid, config.centers, bubble_samples(config, grid))


def interaction(params: CknParams, grid: CylinderGrid, s1: float, s2: float) -> float:
    """<Psi_{s1}, Psi_{s2}>_{H^1} on the grid."""
    u = ModeFunction(grid, 0, eval_psi(params, s1, grid.t))
    v = u if s1 == s2 else ModeFunction(grid, 0, eval_psi(params, s2, grid.t))
    return h1_inner(u, v)


def error_E(config: BubbleConfig, grid: CylinderGrid) -> ModeFunction:
    """E = (sum Psi_j)^p - sum Psi_j^p, nonnegative by superadditivity."""
    return ModeFunction(grid, 0, bubble_power_defect(config.params, grid.t, config.centers))


@dataclass
class WeightedNormReport:
    natural_norm: float
    sharp_norm: float
    varsigma: float
    natural_sups: list = field(default_factory=list)
    sharp_sups: list = field(default_factory=list)
    natural_argmax: list = field(default_factory=list)
    sharp_argmax: list = field(default_factory=list)


def interval_masks(config: BubbleConfig, grid: CylinderGrid):
    """Windows between consecutive midpoints; the outer ones end at +-T."""
    s = config.centers
    cuts = [-math.inf] + [(a + b) / 2.0 for a, b in zip(s, s[1:])] + [math.inf]
    t = grid.t
    masks = []
    for i in range(len(s)):
        lo, hi = cuts[i], cuts[i + 1]
        masks.append((t >= lo) & (t < hi) if i < len(s) - 1 else (t >= lo) & (t <= hi))
    return masks


def weighted_norms(config: BubbleConfig, grid: CylinderGrid, E: ModeFunction | None = None,
                   varsigma: float = DEFAULT_VARSIGMA) -> WeightedNormReport:
    """Sup-quotient norms of E with weights Q e^{-c(p-2)|t-s_i|} and Q e^{-(1-varsigma)c|t-s_i|}."""
    if config.nu < 2:
        raise ValueError("weighted norms need at least two bubbles")
    params = config.params
    c, p, Q = params.c, params.p, config.Q
    values = (E if E is not None else error_E(config, grid)).samples
    t = grid.t
    log_e = np.log(np.maximum(values, 1e-300))
    report = WeightedNormReport(0.0, 0.0, varsigma)
    for s_i, mask in zip(config.centers, interval_masks(config, grid)):
        dist = np.abs(t[mask] - s_i)
        nat = np.exp(log_e[mask] - math.log(Q) + c * (p - 2.0) * dist)
        sharp = np.exp(log_e[mask] - math.log(Q) + (1.0 - varsigma) * c * dist)
        k_nat, k_sharp = int(np.argmax(nat)), int(np.argmax(sharp))
        report.natural_sups.append(float(nat[k_nat]))
        report.sharp_sups.append(float(sharp[k_sharp]))
        report.natural_argmax.append(float(t[mask][k_nat]))
        report.sharp_argmax.append(float(t[mask][k_sharp]))
    report.natural_norm = float(sum(report.natural_sups))
    report.sharp_norm = float(sum(report.sharp_sups))
    return report
