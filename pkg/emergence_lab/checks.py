"""Property suites: the metric inequalities between W_p, LP and H and their dynamical variants,
transport solver against brute-force oracles, and the quantization mechanics.

Every comparison is exact. Inequalities between roots are decided on integer powers of both sides.
"""

from __future__ import annotations

import logging
import typing
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from emergence_lab import emergence, hyperspace, measures, transport, utils
from emergence_lab.counting import random_measure
from emergence_lab.errors import VerificationError
from emergence_lab.hyperspace import FiniteClosedSet
from emergence_lab.measures import DiscreteMeasure, periodic_orbit_measure
from emergence_lab.systems import BowenContext, SymbolicSystem, full_shift

logger = logging.getLogger(__name__)

HOLDER_PAIRS = ((1, 2), (1, 3), (2, 3))


@dataclass
class CheckReport:
    """Counts of checked instances per inequality and the violations found."""

    suite: str
    seed: typing.Optional[int] = None
    checked: typing.Dict[str, int] = field(default_factory=dict)
    violations: typing.List[typing.Dict[str, typing.Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def record(self, name: str, holds: bool, **detail: typing.Any) -> None:
        self.checked[name] = self.checked.get(name, 0) + 1
        if not holds:
            logger.warning(f"{self.suite}: {name} violated ({detail})")
            self.violations.append({"check": name, **detail})

    def merge(self, other: CheckReport) -> None:
        for name, count in other.checked.items():
            self.checked[name] = self.checked.get(name, 0) + count
        self.violations.extend(other.violations)

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {"suite": self.suite, "seed": self.seed, "checked": self.checked, "violations": self.violations}


def _describe(mu: DiscreteMeasure, nu: DiscreteMeasure) -> typing.Dict[str, typing.Any]:
    return {"mu": mu.to_dict(), "nu": nu.to_dict()}


def holder_checks(report: CheckReport, mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    """W_q <= W_p <= diam^(1-q/p) W_q^(q/p) and LP^(1+1/p) <= W_p <= (1+diam^p)^(1/p) LP^(1/p).

    With A = W_q^q and B = W_p^p these read A^p <= B^q, B <= diam^(p-q) A, LP^(p+1) <= B and
    B <= (1 + diam^p) LP.
    """
    diameter = mu.system.diameter
    powers = {p: measures.wasserstein(mu, nu, p).cost for p in utils.VALID_P}
    for q, p in HOLDER_PAIRS:
        a, b = powers[q], powers[p]
        report.record("holder_lower", a**p <= b**q, q=q, p=p, **_describe(mu, nu))
        report.record("holder_upper", b <= diameter ** (p - q) * a, q=q, p=p, **_describe(mu, nu))

    lp = measures.levy_prokhorov(mu, nu)
    for p in utils.VALID_P:
        b = powers[p]
        report.record("prokhorov_lower", lp ** (p + 1) <= b, p=p, **_describe(mu, nu))
        report.record("prokhorov_upper", b <= (1 + diameter**p) * lp, p=p, **_describe(mu, nu))


def dynamical_measure_checks(report: CheckReport, mu: DiscreteMeasure, nu: DiscreteMeasure, n: int) -> None:
    """W_{p,n} <= W_p^n and LP_n <= LP^n."""
    ctx = BowenContext(n=n)
    for p in utils.VALID_P:
        orbit = measures.bowen_orbit_wasserstein(mu, nu, p, n).cost
        bowen = measures.wasserstein(mu, nu, p, ctx).cost
        report.record("orbit_wasserstein", orbit <= bowen, p=p, n=n, **_describe(mu, nu))
    orbit_lp = measures.bowen_orbit_levy_prokhorov(mu, nu, n)
    bowen_lp = measures.levy_prokhorov(mu, nu, ctx)
    report.record("orbit_prokhorov", orbit_lp <= bowen_lp, n=n, **_describe(mu, nu))


def hausdorff_checks(report: CheckReport, left: FiniteClosedSet, right: FiniteClosedSet, n: int) -> None:
    """H_n <= H^n <= H_n + max(diam(B, d_n), diam(C, d_n))."""
    orbit = hyperspace.bowen_orbit_hausdorff(left, right, n)
    bowen = hyperspace.hausdorff(left, right, BowenContext(n=n))
    spread = max(hyperspace.diameter(left, n), hyperspace.diameter(right, n))
    detail = {"left": left.to_dict(), "right": right.to_dict(), "n": n}
    report.record("orbit_hausdorff_lower", orbit <= bowen, **detail)
    report.record("orbit_hausdorff_upper", bowen <= orbit + spread, **detail)


def metric_suite(
    pairs: int = 500,
    seed: int = 0,
    system: typing.Optional[SymbolicSystem] = None,
    max_support: int = 6,
    max_length: int = 6,
) -> CheckReport:
    """Run the Hölder, Lévy–Prokhorov and dynamical comparisons on seeded random pairs.

    Measure pairs share one resolution L <= max_length and have at most max_support atoms; set
    pairs have at most 4 points. The horizon of each pair is drawn from 1..L.
    """
    system = system or full_shift(2)
    rng = np.random.default_rng(seed)
    report = CheckReport(suite="metric", seed=seed)

    for _ in range(pairs):
        length = int(rng.integers(1, max_length + 1))
        mu = random_measure(system, length, int(rng.integers(1, max_support + 1)), rng)
        nu = random_measure(system, length, int(rng.integers(1, max_support + 1)), rng)
        n = int(rng.integers(1, length + 1))
        holder_checks(report, mu, nu)
        dynamical_measure_checks(report, mu, nu, n)

    for _ in range(pairs):
        length = int(rng.integers(1, max_length + 1))
        left = FiniteClosedSet(random_measure(system, length, int(rng.integers(1, 5)), rng).words, system)
        right = FiniteClosedSet(random_measure(system, length, int(rng.integers(1, 5)), rng).words, system)
        hausdorff_checks(report, left, right, int(rng.integers(1, length + 1)))

    logger.info(f"Metric suite: {sum(report.checked.values())} checks, {len(report.violations)} violations")
    return report


def oracle_suite(instances: int = 2000, seed: int = 0, system: typing.Optional[SymbolicSystem] = None) -> CheckReport:
    """Compare the network simplex W_1 with brute-force oracles on seeded instances with supports <= 4.

    Equal supports get uniform weights and the assignment oracle; the others random weights and the
    transport-polytope vertex oracle. The ultrametric closed form is compared on every instance.
    """
    system = system or full_shift(2)
    rng = np.random.default_rng(seed)
    report = CheckReport(suite="oracle", seed=seed)

    for _ in range(instances):
        length = int(rng.integers(2, 5))
        mu = random_measure(system, length, int(rng.integers(1, 5)), rng)
        nu = random_measure(system, length, int(rng.integers(1, 5)), rng)
        if len(mu) == len(nu):
            mu = DiscreteMeasure.uniform(system, mu.words)
            nu = DiscreteMeasure.uniform(system, nu.words)

        costs = measures.distance_matrix(mu, nu)
        flow = measures.wasserstein(mu, nu).cost
        detail = _describe(mu, nu)
        if len(mu) == len(nu):
            report.record("assignment", flow == transport.assignment_cost(costs), **detail)
        else:
            report.record("vertex", flow == transport.vertex_cost(mu.weights, nu.weights, costs), **detail)
        report.record("closed_form", flow == measures.ultrametric_wasserstein(mu, nu).cost, **detail)

    logger.info(f"Oracle suite: {instances} instances, {len(report.violations)} violations")
    return report


def quantization_suite(seed: int = 0, nested: int = 50, periodic: int = 20, max_n: int = 8) -> CheckReport:
    """Quantization mechanics on small ensembles.

    - Q(δ_μ, n, eps) = 1.
    - Two (n, 4 eps)-separated orbit measures need Q = 2.
    - Q(ρ) >= Q(ρ_1) for nested uniform ensembles ρ ≫ ρ_1 over the fixed points of a full shift,
      which sit pairwise at W_1^n = 1.
    - E_μ(n, eps) = 1 for periodic-orbit (ergodic) measures at every n <= max_n.
    - E_μ(n, eps) stays below the measure-space count for a constructed decomposition.
    """
    rng = np.random.default_rng(seed)
    report = CheckReport(suite="quantization", seed=seed)
    system = full_shift(2)
    eps = Fraction(1, 8)

    single = emergence.MeasureEnsemble(((periodic_orbit_measure("01", system, resolution=4), Fraction(1)),))
    report.record("dirac_ensemble", emergence.quantization(single, 2, eps).count == 1)

    far = [periodic_orbit_measure("0", system, resolution=4), periodic_orbit_measure("1", system, resolution=4)]
    pair = emergence.MeasureEnsemble.uniform(far)
    report.record("separated_pair", emergence.quantization(pair, 2, eps).count == 2)

    shift = full_shift(4)
    fixed = [periodic_orbit_measure(symbol, shift, resolution=max_n) for symbol in shift.symbols]
    for _ in range(nested):
        size = int(rng.integers(2, len(fixed) + 1))
        outer = [fixed[int(i)] for i in sorted(rng.choice(len(fixed), size=size, replace=False))]
        inner = [outer[int(i)] for i in sorted(rng.choice(size, size=int(rng.integers(1, size + 1)), replace=False))]
        n = int(rng.integers(1, max_n + 1))
        scale = Fraction(1, int(rng.integers(2, 5)))
        big = emergence.quantization(emergence.MeasureEnsemble.uniform(outer), n, scale).count
        small = emergence.quantization(emergence.MeasureEnsemble.uniform(inner), n, scale).count
        report.record("nested_monotone", big >= small, outer=size, inner=len(inner), n=n, eps=str(scale))

    for _ in range(periodic):
        period = int(rng.integers(1, 7))
        word = "".join(system.symbols[int(s)] for s in rng.integers(system.m, size=period))
        mu = periodic_orbit_measure(word, system, resolution=max(max_n, period))
        ergodic = emergence.MeasureEnsemble(((mu, Fraction(1)),))
        report_cells = emergence.measure_emergence(ergodic, range(1, max_n + 1), [eps]).cells
        report.record("ergodic_emergence", all(cell.upper == 1 for cell in report_cells), word=word)

    decomposition = emergence.MeasureEnsemble.uniform(
        [periodic_orbit_measure(word, system, resolution=4) for word in ("0", "1", "01")]
    )
    grid = ([2, 3], [Fraction(1, 4)])
    emergence_report = emergence.measure_emergence(decomposition, *grid)
    order = emergence.measure_space_entropy_order(system, *grid, samples=5, seed=seed)
    try:
        emergence.check_variational_bound(emergence_report, order)
        report.record("variational_bound", True)
    except VerificationError as err:
        report.record("variational_bound", False, error=str(err))

    logger.info(f"Quantization suite: {sum(report.checked.values())} checks, {len(report.violations)} violations")
    return report
