"""Parameter validation, derived constants and region classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DomainError

FS_TOL = 1e-12


class Region(str, enum.Enum):
    INVALID = "Invalid"
    BOUNDARY_HARDY = "BoundaryHardy"
    RADIAL_UNIQUE_STABLE = "RadialUniqueStable"
    SYMMETRY_BROKEN = "SymmetryBroken"
    FS_BOUNDARY = "FSBoundary"
    EXCLUDED_ORIGIN = "ExcludedOrigin"
    # b = a < 0: the inequality holds but no extremal is attained.
    NO_EXTREMAL = "NoExtremal"


def exponent_p(N: int, a: float, b: float) -> float:
    d = 1.0 + a - b
    return (N + 2.0 * d) / (N - 2.0 * d)


def felli_schneider(N: int, a: float) -> float:
    """Threshold b_FS(a) below which radial extremals stop being minimal."""
    a_c = (N - 2) / 2.0
    if a >= a_c:
        raise DomainError(f"felli_schneider needs a < a_c = {a_c}, got a = {a}")
    c = a_c - a
    return N * c / (2.0 * math.sqrt(c * c + N - 1.0)) + a - a_c


@dataclass(frozen=True)
class CknParams:
    N: int
    a: float
    b: float
    fs_tol: float = FS_TOL
    a_c: float = field(init=False)
    c: float = field(init=False)
    p: float = field(init=False)
    region: Region = field(init=False)

    def __post_init__(self):
        a_c = (self.N - 2) / 2.0
        object.__setattr__(self, "a_c", a_c)
        object.__setattr__(self, "c", a_c - self.a)
        d = 1.0 + self.a - self.b
        p = exponent_p(self.N, self.a, self.b) if self.N - 2.0 * d != 0 else math.inf
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "region", classify_region(self))

    @property
    def alpha(self) -> float:
        """Inverse width of the cylinder profile, c(p-1)/2."""
        return self.c * (self.p - 1.0) / 2.0

    @property
    def b_fs(self) -> float | None:
        if self.N < 3 or self.a >= self.a_c:
            return None
        return felli_schneider(self.N, self.a)

    def require_superlinear(self):
        if self.region == Region.INVALID or not self.p > 1.0 or not math.isfinite(self.p):
            raise DomainError(f"need a valid tuple with p > 1, got {self.describe()}")
        if abs(self.b - (self.a + 1.0)) <= self.fs_tol:
            raise DomainError("p = 1 on the line b = a + 1; profiles degenerate")

    def describe(self) -> str:
        return f"(N={self.N}, a={self.a:g}, b={self.b:g})"


def make_params(N: int, a: float, b: float) -> CknParams:
    return CknParams(int(N), float(a), float(b))


def classify_region(params: CknParams) -> Region:
    N, a, b, tol = params.N, params.a, params.b, params.fs_tol
    a_c = (N - 2) / 2.0
    if N < 3 or not a < a_c or b < a - tol or b > a + 1.0 + tol:
        return Region.INVALID
    if abs(b - (a + 1.0)) <= tol:
        return Region.BOUNDARY_HARDY
    if a < 0:
        if abs(b - a) <= tol:
            return Region.NO_EXTREMAL
        b_fs = felli_schneider(N, a)
        if abs(b - b_fs) <= tol:
            return Region.FS_BOUNDARY
        return Region.RADIAL_UNIQUE_STABLE if b > b_fs else Region.SYMMETRY_BROKEN
    if a + b > 0:
        return Region.RADIAL_UNIQUE_STABLE
    return Region.EXCLUDED_ORIGIN


def radial_experiments_allowed(params: CknParams) -> bool:
    """Whether the mode-0 stability experiments are meaningful.

    The Sobolev point a = b = 0 (tagged ExcludedOrigin) is admitted: its extra
    kernel directions are translations of R^N, which live in angular mode 1 and
    never enter a radial computation.
    """
    return params.region in (
        Region.RADIAL_UNIQUE_STABLE,
        Region.FS_BOUNDARY,
        Region.EXCLUDED_ORIGIN,
    )
