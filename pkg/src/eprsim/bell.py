"""Simple (3-run) and standard (4-run) Bell-inequality evaluation.

The simple test checks p_NS(a,b) + p_NS(b,c) >= p_NS(a,c) over three
sub-experiments; the standard test checks
-2 <= C(a,b) - C(a,b') + C(a',b) + C(a',b') <= 2 over four.  Either can be
evaluated under any denominator convention, which is the entire point:
with value-dependent missing records, the observed-coincidence convention
manufactures violations that the emitted-pair convention does not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .estimators import (
    DenominatorMode,
    correlation,
    correlation_stderr,
    pair_probability,
    pair_probability_stderr,
)
from .experiment import CoincidenceTally
from .spaces import HvSpace

__all__ = ["TestKind", "BellReport", "simple_bell", "standard_bell", "canonical_angles"]

PI = math.pi

# flag a violation only when it clears sampling noise by this many sigma
GUARD_SIGMAS = 3.0


class TestKind(Enum):
    __test__ = False  # not a pytest class, despite the name

    SIMPLE = "simple"
    STANDARD = "standard"


@dataclass(frozen=True)
class BellReport:
    """Evaluated inequality: per-run terms, statistic, bound, and verdict.

    ``discrepancy`` is the signed distance past the bound (positive means
    the inequality is broken).  For Monte Carlo tallies the violation flag
    additionally requires the discrepancy to exceed a 3-sigma guard band;
    exact (oracle) evaluations compare against the bound directly.
    """

    test_kind: TestKind
    mode: DenominatorMode
    terms: tuple[float, ...]
    statistic: float
    bound: float
    violated: bool
    discrepancy: float
    stderr: float | None = None

    def to_dict(self) -> dict:
        return {
            "test_kind": self.test_kind.value,
            "mode": self.mode.value,
            "terms": list(self.terms),
            "statistic": self.statistic,
            "bound": self.bound,
            "violated": self.violated,
            "discrepancy": self.discrepancy,
            "stderr": self.stderr,
        }


def _verdict(discrepancy: float, stderr: float | None, exact: bool):
    if exact:
        return discrepancy > 1e-12
    return discrepancy > GUARD_SIGMAS * (stderr or 0.0)


def simple_bell(
    tally_ab: CoincidenceTally,
    tally_bc: CoincidenceTally,
    tally_ac: CoincidenceTally,
    mode: DenominatorMode,
    exact: bool = False,
) -> BellReport:
    """Evaluate p_NS(a,b) + p_NS(b,c) - p_NS(a,c); negative means violation."""
    tallies = (tally_ab, tally_bc, tally_ac)
    terms = tuple(pair_probability(t, "ns", mode) for t in tallies)
    statistic = terms[0] + terms[1] - terms[2]
    stderr = None
    if not exact:
        stderr = math.sqrt(
            sum(pair_probability_stderr(t, "ns", mode) ** 2 for t in tallies)
        )
    discrepancy = -statistic
    return BellReport(
        test_kind=TestKind.SIMPLE,
        mode=mode,
        terms=terms,
        statistic=statistic,
        bound=0.0,
        violated=_verdict(discrepancy, stderr, exact),
        discrepancy=discrepancy,
        stderr=stderr,
    )


def standard_bell(
    tally_ab: CoincidenceTally,
    tally_ab2: CoincidenceTally,
    tally_a2b: CoincidenceTally,
    tally_a2b2: CoincidenceTally,
    mode: DenominatorMode,
    exact: bool = False,
) -> BellReport:
    """Evaluate C(a,b) - C(a,b') + C(a',b) + C(a',b') against the [-2, 2] bound."""
    tallies = (tally_ab, tally_ab2, tally_a2b, tally_a2b2)
    terms = tuple(correlation(t, mode) for t in tallies)
    statistic = terms[0] - terms[1] + terms[2] + terms[3]
    stderr = None
    if not exact:
        stderr = math.sqrt(sum(correlation_stderr(t, mode) ** 2 for t in tallies))
    discrepancy = abs(statistic) - 2.0
    return BellReport(
        test_kind=TestKind.STANDARD,
        mode=mode,
        terms=terms,
        statistic=statistic,
        bound=2.0,
        violated=_verdict(discrepancy, stderr, exact),
        discrepancy=discrepancy,
        stderr=stderr,
    )


def canonical_angles(space: HvSpace) -> tuple[float, float, float, float]:
    """The angle set (a, a', b, b') commonly used in actual Bell tests.

    Sphere: (0, pi/2, pi/4, 3*pi/4).  Circle (polarisation): the halved
    analogue (0, pi/4, pi/8, 3*pi/8).
    """
    if space is HvSpace.SPHERE:
        return (0.0, PI / 2.0, PI / 4.0, 3.0 * PI / 4.0)
    return (0.0, PI / 4.0, PI / 8.0, 3.0 * PI / 8.0)
