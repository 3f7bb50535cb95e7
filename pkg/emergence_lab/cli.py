"""Command-line entry point: `emergence-lab <command> [options]`."""

from __future__ import annotations

import functools
import logging
import typing
from fractions import Fraction

import click

from emergence_lab import certificates, checks, counting, emergence, utils
from emergence_lab.config import VALID_FORMATS, Caps, RunConfig, parse_range
from emergence_lab.errors import EmergenceLabError, UnknownCommandError, VerificationError
from emergence_lab.formats import CertificateFormat, EnsembleFormat, SystemFormat
from emergence_lab.serializers import ArtifactWriter, get_writer
from emergence_lab.systems import SymbolicSystem

logger = logging.getLogger(__name__)


class LabGroup(click.Group):
    """A click group whose unknown commands exit with the usage code."""

    def resolve_command(
        self, ctx: click.Context, args: typing.List[str]
    ) -> typing.Tuple[typing.Optional[str], typing.Optional[click.Command], typing.List[str]]:
        name = args[0] if args else None
        if name is not None and not name.startswith("-") and self.get_command(ctx, name) is None:
            raise UnknownCommandError(f"unknown command {name!r}, expected one of {sorted(self.commands)}")
        return super().resolve_command(ctx, args)


def _options(func: typing.Callable) -> typing.Callable:
    """Options shared by every command."""
    decorators = [
        click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True),
        click.option("-o", "--output-dir", type=click.Path(file_okay=False), default=".", show_default=True),
        click.option("--format", "output_format", type=click.Choice(VALID_FORMATS), default="csv", show_default=True),
        click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True),
        click.option("--log-level", default="WARNING", show_default=True),
        click.option("--enum-cap", type=click.IntRange(min=1), default=utils.ENUMERATION_CAP, show_default=True),
        click.option("--exact-cap", type=click.IntRange(min=1), default=utils.EXACT_CAP, show_default=True),
        click.option("--grid-cap", type=click.IntRange(min=1), default=utils.GRID_CAP, show_default=True),
        click.option("--code-cap", type=int, default=utils.CODE_CAP, show_default=True),
        click.option("--code-limit", type=int, default=utils.DEFAULT_CODE_LIMIT, show_default=True),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def _grid_options(func: typing.Callable) -> typing.Callable:
    func = click.option("--eps-exp", "eps_exp", default="1..4", show_default=True, help="Exponents k of λ^k.")(func)
    func = click.option("--n", "n_range", default="1..1", show_default=True, help="Horizon range a..b.")(func)
    func = click.option("--system", "system_path", type=click.Path(exists=True, dir_okay=False), required=True)(func)
    return func


def _config(command: str, params: typing.Dict[str, typing.Any], **options: typing.Any) -> RunConfig:
    logging.basicConfig(level=params["log_level"].upper(), format="%(levelname)s %(name)s: %(message)s")
    caps = Caps(
        enumeration=params["enum_cap"],
        exact=params["exact_cap"],
        code=params["code_cap"],
        code_limit=params["code_limit"],
        grid=params["grid_cap"],
    )
    n_range = parse_range(params.get("n_range") or "1..1")
    low, high = parse_range(params.get("eps_exp") or "1..1")
    return RunConfig(
        command=command,
        system=params.get("system_path"),
        n_range=n_range,
        eps_exponents=tuple(range(low, high + 1)),
        seed=params["seed"],
        caps=caps,
        output_dir=params["output_dir"],
        format=params["output_format"],
        workers=params["workers"],
        log_level=params["log_level"].upper(),
        options=options,
    )


def _load_system(config: RunConfig) -> SymbolicSystem:
    return typing.cast(SystemFormat, SystemFormat.load(typing.cast(str, config.system))).build()


def _finish(writer: ArtifactWriter) -> int:
    path = writer.write_manifest()
    click.echo(f"manifest: {path}")
    return utils.EXIT_OK


def _echo_report(report: emergence.ScalingReport) -> None:
    for eps, lower, upper in report.eps_trend:
        click.echo(f"eps={utils.format_rational(eps)} lower={lower:.6f} upper={upper:.6f}")
    if report.reference is not None:
        click.echo(f"reference={report.reference:.6f}")


def _write_report(writer: ArtifactWriter, name: str, report: emergence.ScalingReport) -> None:
    writer.write_cells(name, report.cells)
    writer.write_json(f"{name}-summary", report.summary())
    _echo_report(report)


@click.group(cls=LabGroup)
@click.version_option(package_name="emergence-lab")
def cli() -> None:
    """Finite-scale estimators for entropy orders and emergence of symbolic systems."""


@cli.command()
@_grid_options
@click.option("--mode", type=click.Choice(utils.VALID_MODES), default=utils.BOWEN, show_default=True)
@click.option("--restarts", type=int, default=utils.DEFAULT_RESTARTS, show_default=True)
@click.option("--strategy", type=click.Choice(utils.VALID_STRATEGIES), default=utils.GREEDY, show_default=True)
@_options
def entropy(mode: str, restarts: int, strategy: str, **params: typing.Any) -> int:
    """Topological entropy from spanning and separated counts."""
    config = _config("entropy", params, mode=mode, restarts=restarts, strategy=strategy)
    system = _load_system(config)
    report = emergence.entropy_estimate(
        system,
        config.horizons,
        config.eps_values(system.lam),
        mode=mode,
        seed=config.seed,
        restarts=restarts,
        strategy=strategy,
        caps=config.caps,
        workers=config.workers,
    )
    writer = get_writer(config)
    _write_report(writer, "entropy", report)
    return _finish(writer)


@cli.command("order-measures")
@_grid_options
@click.option("--route", type=click.Choice(utils.VALID_ROUTES), default=utils.DEFAULT_ROUTE, show_default=True)
@click.option("--samples", type=int, default=20, show_default=True)
@_options
def order_measures(route: str, samples: int, **params: typing.Any) -> int:
    """Entropy order of the induced map on measures."""
    config = _config("order-measures", params, route=route, samples=samples)
    system = _load_system(config)
    report = emergence.measure_space_entropy_order(
        system,
        config.horizons,
        config.eps_values(system.lam),
        route=route,
        samples=samples,
        seed=config.seed,
        caps=config.caps,
        workers=config.workers,
    )
    writer = get_writer(config)
    _write_report(writer, "order-measures", report)
    return _finish(writer)


@cli.command("order-hyperspace")
@_grid_options
@click.option("--samples", type=int, default=50, show_default=True)
@_options
def order_hyperspace(samples: int, **params: typing.Any) -> int:
    """Entropy order of the induced map on closed sets."""
    config = _config("order-hyperspace", params, samples=samples)
    system = _load_system(config)
    report = emergence.hyperspace_entropy_order(
        system,
        config.horizons,
        config.eps_values(system.lam),
        samples=samples,
        seed=config.seed,
        caps=config.caps,
        workers=config.workers,
    )
    writer = get_writer(config)
    _write_report(writer, "order-hyperspace", report)
    return _finish(writer)


@cli.command("metric-order")
@_grid_options
@click.option(
    "--space", type=click.Choice(["points", "hyperspace", "measures"]), default="hyperspace", show_default=True
)
@click.option("--samples", type=int, default=50, show_default=True)
@_options
def metric_order(space: str, samples: int, **params: typing.Any) -> int:
    """Metric order of X, K(X) or M(X) next to the box dimension of X."""
    config = _config("metric-order", params, space=space, samples=samples)
    system = _load_system(config)
    eps_values = config.eps_values(system.lam)
    report = emergence.metric_order_estimate(
        system,
        eps_values,
        space=space,
        samples=samples,
        seed=config.seed,
        caps=config.caps,
    )
    writer = get_writer(config)
    _write_report(writer, "metric-order", report)
    dimension = emergence.box_dimension_estimate(system, eps_values)
    writer.write_cells("box-dimension", dimension.cells)
    if report.sandwich is not None:
        click.echo(f"sandwich contains dim: {report.sandwich['contains']}")
    return _finish(writer)


@cli.command("metric-check")
@click.option("--pairs", type=int, default=500, show_default=True)
@click.option("--instances", type=int, default=2000, show_default=True)
@click.option(
    "--suite",
    "suites",
    type=click.Choice(["metric", "oracle", "quantization"]),
    multiple=True,
    help="Suites to run, all of them by default.",
)
@_options
def metric_check(pairs: int, instances: int, suites: typing.Tuple[str, ...], **params: typing.Any) -> int:
    """Exact inequality suites between the metrics, and solver oracles."""
    suites = suites or ("metric", "oracle", "quantization")
    config = _config("metric-check", params, pairs=pairs, instances=instances, suites=tuple(suites))
    report = checks.CheckReport(suite="+".join(suites), seed=config.seed)
    if "metric" in suites:
        report.merge(checks.metric_suite(pairs=pairs, seed=config.seed))
    if "oracle" in suites:
        report.merge(checks.oracle_suite(instances=instances, seed=config.seed))
    if "quantization" in suites:
        report.merge(checks.quantization_suite(seed=config.seed))

    writer = get_writer(config)
    writer.write_json("metric-check", report.to_dict())
    for name, count in sorted(report.checked.items()):
        click.echo(f"{name}: {count} checked")
    click.echo(f"violations: {len(report.violations)}")
    _finish(writer)
    if not report.ok:
        first = report.violations[0]
        raise VerificationError(f"{len(report.violations)} violations, first: {first['check']}")
    return utils.EXIT_OK


@cli.command()
@_grid_options
@click.option("--ensemble", "ensemble_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--grid", type=int, default=4, show_default=True)
@_options
def quantize(ensemble_path: str, grid: int, **params: typing.Any) -> int:
    """Quantization numbers and measure emergence of an ergodic decomposition."""
    config = _config("quantize", params, ensemble=ensemble_path, grid=grid)
    system = _load_system(config)
    atoms = typing.cast(EnsembleFormat, EnsembleFormat.load(ensemble_path)).build(system)
    ensemble = emergence.MeasureEnsemble(tuple((measure, Fraction(weight)) for measure, weight in atoms))
    report = emergence.measure_emergence(
        ensemble, config.horizons, config.eps_values(system.lam), grid=grid, workers=config.workers
    )
    writer = get_writer(config)
    _write_report(writer, "quantize", report)
    return _finish(writer)


@cli.command()
@_grid_options
@click.option("--vx", "vx_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--static", is_flag=True, help="Static W_1 variant, ignoring --n.")
@click.option("--grid", type=int, default=4, show_default=True)
@_options
def pointwise(vx_path: str, static: bool, grid: int, **params: typing.Any) -> int:
    """Pointwise emergence of the set of empirical limits V(x)."""
    config = _config("pointwise", params, vx=vx_path, static=static, grid=grid)
    system = _load_system(config)
    vx = [measure for measure, _ in typing.cast(EnsembleFormat, EnsembleFormat.load(vx_path)).build(system)]
    horizons: typing.Sequence[typing.Optional[int]] = [None] if static else list(config.horizons)
    cells = []
    for eps in config.eps_values(system.lam):
        for n in horizons:
            bracket = emergence.pointwise_emergence(vx, n, eps, grid=grid)
            cells.append(emergence.bracket_cell(n, eps, bracket))
            click.echo(f"n={n or '-'} eps={utils.format_rational(eps)} E_x={bracket.upper} lower={bracket.lower}")
    writer = get_writer(config)
    writer.write_cells("pointwise", cells)
    return _finish(writer)


@cli.group(cls=LabGroup)
def certify() -> None:
    """Build, verify and write a separation certificate."""


def _certify_options(func: typing.Callable) -> typing.Callable:
    func = click.option("--pairs", "sampled_pairs", type=int, default=utils.DEFAULT_SAMPLED_PAIRS, show_default=True)(
        func
    )
    func = click.option("--eps", "eps_text", default="1/4", show_default=True, help="Scale as p/q.")(func)
    func = click.option("--n", "n_value", type=click.IntRange(min=1), default=5, show_default=True)(func)
    func = click.option("--system", "system_path", type=click.Path(exists=True, dir_okay=False), required=True)(func)
    return func


def _certify(
    kind: str,
    build: typing.Callable[[SymbolicSystem, int, Fraction, RunConfig], certificates.Certificate],
    params: typing.Dict[str, typing.Any],
    **options: typing.Any,
) -> int:
    n = params.pop("n_value")
    eps = utils.parse_rational(params.pop("eps_text"))
    sampled_pairs = params.pop("sampled_pairs")
    config = _config(f"certify {kind}", {**params, "n_range": f"{n}..{n}"}, eps=eps, pairs=sampled_pairs, **options)
    system = _load_system(config)
    certificate = build(system, n, eps, config)
    checked = counting.verify_certificate(certificate)
    writer = get_writer(config)
    path = writer.write_json("certificate", certificate.to_dict())
    click.echo(f"{certificate.kind}: {certificate.size} witnesses, {checked} pairs re-verified -> {path}")
    return _finish(writer)


def _code(size: int, config: RunConfig) -> certificates.HammingCodebook:
    length = certificates.code_length(size, config.caps.code)
    if length < 8:
        raise VerificationError(f"a base of {size} elements is too small for a code of length 8")
    return certificates.build_half_weight_code(length, seed=config.seed, limit=config.caps.code_limit)


@certify.command("periodic")
@_certify_options
@_options
def certify_periodic(**params: typing.Any) -> int:
    """Pairwise apart periodic-orbit measures."""
    sampled = params["sampled_pairs"]

    def build(system: SymbolicSystem, n: int, eps: Fraction, config: RunConfig) -> certificates.Certificate:
        return certificates.apart_measure_family(
            system,
            n,
            eps,
            route=utils.PERIODIC,
            seed=config.seed,
            sampled_pairs=sampled,
            enumeration_cap=config.caps.enumeration,
        )

    return _certify("periodic", build, params)


@certify.command("hamming")
@_certify_options
@click.option("--route", type=click.Choice(utils.VALID_ROUTES), default=utils.DEFAULT_ROUTE, show_default=True)
@_options
def certify_hamming(route: str, **params: typing.Any) -> int:
    """W_1^n-separated mixtures indexed by a half-weight code."""
    sampled = params["sampled_pairs"]

    def build(system: SymbolicSystem, n: int, eps: Fraction, config: RunConfig) -> certificates.Certificate:
        base = certificates.apart_measure_family(
            system,
            n,
            eps,
            route=route,
            seed=config.seed,
            sampled_pairs=sampled,
            enumeration_cap=config.caps.enumeration,
        )
        code = _code(base.size, config)
        return certificates.hamming_measure_family(base, code, seed=config.seed, sampled_pairs=sampled)

    return _certify("hamming", build, params, route=route)


@certify.command("hyperspace")
@_certify_options
@click.option("--direction", type=click.Choice(["separated", "split"]), default="separated", show_default=True)
@_options
def certify_hyperspace(direction: str, **params: typing.Any) -> int:
    """H^n-separated sets indexed by a half-weight code."""
    sampled = params["sampled_pairs"]

    def build(system: SymbolicSystem, n: int, eps: Fraction, config: RunConfig) -> certificates.Certificate:
        if direction == "separated":
            words = certificates.separated_words(system, n, eps, cap=config.caps.enumeration)
            return certificates.hyperspace_family(
                system, words, _code(len(words), config), n, eps, seed=config.seed, sampled_pairs=sampled
            )
        family = certificates.apart_measure_family(
            system, n, eps, route=utils.PERIODIC, seed=config.seed, enumeration_cap=config.caps.enumeration
        )
        sets = certificates.orbit_sets(family)
        # apart at >= eps means split at > λ eps
        return certificates.hyperspace_family(
            system,
            sets,
            _code(len(sets), config),
            family.n,
            system.lam * eps,
            direction="split",
            seed=config.seed,
            sampled_pairs=sampled,
        )

    return _certify("hyperspace", build, params, direction=direction)


@cli.command()
@click.argument("certificate_path", type=click.Path(exists=True, dir_okay=False))
@_options
def verify(certificate_path: str, **params: typing.Any) -> int:
    """Re-verify a certificate file with the counting metrics."""
    config = _config("verify", params, certificate=certificate_path)
    certificate = typing.cast(CertificateFormat, CertificateFormat.load(certificate_path)).build()
    checked = counting.verify_certificate(certificate)
    writer = get_writer(config)
    writer.write_json("verification", {"kind": certificate.kind, "pairs": checked, "ok": True})
    click.echo(f"{certificate.kind}: {checked} pairs verified")
    return _finish(writer)


def _report_error(func: typing.Callable[..., int]) -> typing.Callable[..., int]:
    @functools.wraps(func)
    def wrapper(*args: typing.Any, **kwargs: typing.Any) -> int:
        try:
            return func(*args, **kwargs)
        except VerificationError as err:
            click.echo(f"verification failed: {err}", err=True)
            if err.pair is not None:
                click.echo(f"first failing pair: {err.pair[0]} {err.pair[1]}", err=True)
            return err.exit_code
        except EmergenceLabError as err:
            click.echo(f"{err.__class__.__name__}: {err}", err=True)
            return err.exit_code
        except click.ClickException as err:
            err.show()
            return utils.EXIT_USAGE
        except ValueError as err:
            click.echo(f"invalid argument: {err}", err=True)
            return utils.EXIT_USAGE

    return wrapper


@_report_error
def main(argv: typing.Optional[typing.List[str]] = None) -> int:
    """Run the CLI and return its exit status."""
    result = cli.main(args=argv, prog_name="emergence-lab", standalone_mode=False)
    return result if isinstance(result, int) else utils.EXIT_OK
