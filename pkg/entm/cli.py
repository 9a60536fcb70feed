import json
import logging
from dataclasses import asdict
from typing import Optional, Sequence, Tuple

import click

from .config import SEED_ENV, Settings, resolve_seed
from .decay import (
    DecayConfig,
    InitialState,
    check_mes_ordering,
    evolve,
    werner_robustness,
)
from .exceptions import (
    AcceptanceViolation,
    BudgetExhausted,
    EntmError,
    InvalidState,
    NotFound,
    NoRoot,
)
from .export import (
    ORDERING_COLUMNS,
    SCAN_COLUMNS,
    TRACE_COLUMNS,
    TRAJECTORY_COLUMNS,
    envelope_columns,
    envelope_rows,
    ordering_rows,
    read_scan_records,
    read_state_json,
    scan_rows,
    trace_rows,
    trajectory_rows,
    write_csv,
    write_state_json,
)
from .logging_config import setup_logging
from .measures import MEASURE_NAMES, MeasureRecord, all_measures, is_pure
from .ree import (
    CssCandidate,
    ReeSolverConfig,
    bell_spectrum_of,
    is_swap_coherent,
    ree_auto,
    ree_crossing,
    ree_numeric,
    ree_reduced,
)
from .scan import (
    PARADOX_PATTERNS,
    OrderingClass,
    OrderingTolerance,
    analytic_ree,
    classify_pair,
    constructed_witness_records,
    crossing_table,
    dominance_violations,
    extract_envelope,
    find_ordering_examples,
    scan_records,
)
from .states import SAMPLER_METHODS, DensityMatrix, SamplerConfig, family_state, family_tag_of

# Configure logging
setup_logging()
logger = logging.getLogger(__name__)

FAMILY_NAMES = ("bell", "werner", "horodecki", "hprime", "belldiag", "tildepsi", "maxcorr")

EXIT_UNEXPECTED = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_VIOLATION = 4
EXIT_NOT_FOUND = 5


def exit_code_for(e: Exception) -> int:
    """Map a library exception to the CLI exit-code contract."""
    if isinstance(e, BudgetExhausted):
        return EXIT_BUDGET
    if isinstance(e, AcceptanceViolation):
        return EXIT_VIOLATION
    if isinstance(e, (NoRoot, NotFound)):
        return EXIT_NOT_FOUND
    if isinstance(e, EntmError) and isinstance(e, ValueError):
        return EXIT_INVALID
    return EXIT_UNEXPECTED


def execute_command(command_func, *args, **kwargs):
    """Helper function to execute a command with common error handling"""
    try:
        return command_func(*args, **kwargs)
    except (click.ClickException, click.exceptions.Exit):
        raise
    except Exception as e:
        code = exit_code_for(e)
        click.echo(f"❌ Error executing command: {e}")
        if isinstance(e, InvalidState):
            for line in e.report:
                click.echo(f"   - {line}")
        logger.error(f"Error executing command (exit {code}): {e}")
        click.get_current_context().exit(code)


# Shared option helpers


def state_source(func):
    func = click.argument("params", nargs=-1, type=float)(func)
    func = click.option(
        "--family",
        type=click.Choice(FAMILY_NAMES),
        help="Named family; its parameters follow as arguments",
    )(func)
    func = click.option(
        "--file", "file_path", type=click.Path(exists=True, dir_okay=False), help="JSON state file"
    )(func)
    return func


def seed_option(func):
    return click.option(
        "--seed", type=int, envvar=SEED_ENV, help=f"Random seed (falls back to {SEED_ENV})"
    )(func)


def load_state(
    file_path: Optional[str], family: Optional[str], params: Sequence[float]
) -> Tuple[DensityMatrix, Optional[float]]:
    """The requested state and its closed-form E_R when the family has one."""
    if (file_path is None) == (family is None):
        raise click.UsageError("Give exactly one of --file or --family")
    if file_path is not None:
        if params:
            raise click.UsageError("Positional parameters only apply to --family")
        return read_state_json(file_path), None
    rho = family_state(family, params)
    return rho, analytic_ree(family_tag_of(family), params, rho)


def needs_search(rho: DensityMatrix) -> bool:
    """True when E_R has no exact route and the seeded numeric search must run."""
    m = rho.matrix
    return not (is_pure(m) or bell_spectrum_of(m) is not None or is_swap_coherent(m))


def solver_config(seed, restarts=None, budget=None, tol=None, workers=None) -> ReeSolverConfig:
    return ReeSolverConfig.from_settings(
        seed=seed,
        restarts=restarts,
        max_evaluations=budget,
        simplex_tolerance=tol,
        workers=workers,
    )


def echo_record(record: MeasureRecord):
    for name in MEASURE_NAMES:
        value = record.value(name)
        shown = "n/a" if value is None else f"{value:.6f}"
        click.echo(f"{name:<6}= {shown}")
    if record.e_r is not None:
        click.echo(f"E_R method: {record.ree_method}")


def parse_classes(ctx, param, values) -> Tuple[OrderingClass, ...]:
    if not values:
        return PARADOX_PATTERNS
    try:
        patterns = tuple(OrderingClass.of(*v.upper().split(",")) for v in values)
        if any(len(p.signs) != 3 for p in patterns):
            raise ValueError("patterns need three signs")
        return patterns
    except (ValueError, TypeError):
        raise click.BadParameter("Use three comma-separated signs, e.g. LT,LT,GT")


@click.group()
def main():
    """⚛️  entm: two-qubit entanglement measures and their orderings.

    Exit codes: 0 ok, 1 unexpected error, 2 invalid state / usage / missing
    seed, 3 REE budget exhausted, 4 acceptance violation, 5 no root / not found.
    """
    Settings().apply()


@main.command()
@state_source
@click.option("--no-ree", is_flag=True, help="Skip the relative entropy of entanglement")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@seed_option
def measure(file_path, family, params, no_ree, fmt, seed):
    """Print C, E_F, N, E_PPT, B and E_R for one state"""

    def command_logic():
        rho, known = load_state(file_path, family, params)
        solver = None
        if not no_ree and known is None and needs_search(rho):
            solver = solver_config(resolve_seed(seed))
        known_ree = None if known is None else (known, "analytic", True)
        record = all_measures(rho, with_ree=not no_ree, solver=solver, known_ree=known_ree)
        if fmt == "json":
            click.echo(json.dumps(record.as_dict(), sort_keys=True, default=lambda o: o.item()))
        else:
            echo_record(record)
        logger.debug(f"Measured state: {record}")
        if record.ree_converged is False:
            click.echo("⚠️  E_R search hit its budget; value is the best found so far")
            raise BudgetExhausted("REE search did not converge")

    execute_command(command_logic)


@main.command()
@state_source
@click.option(
    "--method", type=click.Choice(["auto", "numeric", "reduced"]), default="auto", show_default=True
)
@click.option("--restarts", type=int, help="Simplex restarts")
@click.option("--budget", type=int, help="Objective evaluations per restart")
@click.option("--tol", type=float, help="Simplex convergence tolerance")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--dump-css", type=click.Path(dir_okay=False), help="Write the separable state JSON")
@click.option("--trace", type=click.Path(dir_okay=False), help="Write per-restart solver trace CSV")
@seed_option
def ree(file_path, family, params, method, restarts, budget, tol, workers, dump_css, trace, seed):
    """Solve for the closest separable state"""

    def command_logic():
        rho, _ = load_state(file_path, family, params)
        numeric = method == "numeric" or (method == "auto" and needs_search(rho))
        run_seed = resolve_seed(seed) if numeric else (seed or 0)
        cfg = solver_config(run_seed, restarts, budget, tol, workers)
        if method == "numeric":
            candidate = ree_numeric(rho, cfg)
        elif method == "reduced":
            candidate = ree_reduced(rho, seed=run_seed)
        else:
            candidate = ree_auto(rho, cfg)

        report(candidate)
        if dump_css:
            write_state_json(dump_css, candidate.state)
            click.echo(f"✅ Wrote closest separable state to {dump_css}")
        if trace:
            config = {"command": "ree", "method": candidate.method, **asdict(cfg)}
            write_csv(trace, TRACE_COLUMNS, trace_rows(candidate), run_seed, config)
            click.echo(f"✅ Wrote solver trace to {trace}")
        if not candidate.converged:
            click.echo("⚠️  Evaluation budget exhausted; value is the best found so far")
            raise BudgetExhausted("REE search did not converge", candidate)

    def report(candidate: CssCandidate):
        click.echo(f"E_R        = {candidate.value:.10f}")
        click.echo(f"method     = {candidate.method}")
        click.echo(f"converged  = {candidate.converged}")
        click.echo(f"evaluations= {candidate.evaluations}")

    execute_command(command_logic)


@main.command()
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--sampler", type=click.Choice(SAMPLER_METHODS), default="ginibre", show_default=True)
@click.option("--ancilla", type=int, default=4, show_default=True, help="Induced-measure ancilla")
@click.option("--with-ree", is_flag=True, help="Run REE solvers on states without a closed form")
@click.option("--ree-budget", type=int, help="Cap on REE solver runs")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--output", "-o", default="scan.csv", show_default=True, type=click.Path())
@seed_option
def scan(count, sampler, ancilla, with_ree, ree_budget, workers, output, seed):
    """Sample states, write their measures and check N ≤ C, B ≤ C, B ≤ N"""

    def command_logic():
        run_seed = resolve_seed(seed)
        cfg = SamplerConfig(method=sampler, seed=run_seed, count=count, ancilla=ancilla)
        solver = solver_config(run_seed) if with_ree else None
        records = scan_records(cfg, with_ree, ree_budget, solver, workers)
        config = {
            "command": "scan",
            "count": count,
            "sampler": sampler,
            "ancilla": ancilla,
            "with_ree": with_ree,
            "ree_budget": ree_budget,
        }
        write_csv(output, SCAN_COLUMNS, scan_rows(records), run_seed, config)
        click.echo(f"✅ Wrote {len(records)} records to {output}")

        flagged = sum(r.flagged for r in records)
        if flagged:
            click.echo(f"⚠️  {flagged} record(s) hit the REE budget")
        violations = dominance_violations(records)
        if violations:
            for v in violations[:10]:
                click.echo(f"   - state {v.state_id}: {v.relation} exceeded by {v.excess:.3e}")
            raise AcceptanceViolation(f"{len(violations)} dominance violation(s)")
        click.echo("✅ No dominance violations")

    execute_command(command_logic)


@main.command()
@click.option("--gamma", type=float, default=0.1, show_default=True, help="Photon decay rate")
@click.option("--tmax", type=float, default=30.0, show_default=True, help="Last time point")
@click.option("--points", type=int, default=61, show_default=True)
@click.option("--initial", type=click.Choice(["bell", "werner"]), default="bell", show_default=True)
@click.option("--p", "p", type=float, default=0.8, show_default=True, help="Werner mixing")
@click.option("--with-ree", is_flag=True)
@click.option("--output", "-o", default="decay.csv", show_default=True, type=click.Path())
def decay(gamma, tmax, points, initial, p, with_ree, output):
    """Evolve the three Bell (or Werner) states under photon loss"""

    def command_logic():
        if points < 2 or tmax <= 0:
            raise click.UsageError("Need --points >= 2 and --tmax > 0")
        grid = tuple(tmax * i / (points - 1) for i in range(points))
        trajectories = [
            evolve(DecayConfig(gamma, grid, InitialState(initial, k, p)), with_ree=with_ree)
            for k in (1, 2, 3)
        ]
        config = {"command": "decay", "gamma": gamma, "tmax": tmax, "points": points}
        config.update({"initial": initial, "p": p, "with_ree": with_ree})
        write_csv(output, TRAJECTORY_COLUMNS, trajectory_rows(trajectories), None, config)
        click.echo(f"✅ Wrote {len(trajectories)} trajectories to {output}")

        if initial == "bell":
            result = check_mes_ordering(trajectories)
            for chain in result.chains.values():
                mark = "✅" if chain.holds else "❌"
                click.echo(f"{mark} {chain.name}: max violation {chain.max_violation:.3e}")
            for name, label in result.most_fragile.items():
                click.echo(f"   most fragile by {name}: {label}")
            if not result.holds:
                raise AcceptanceViolation("Robustness ordering of the Bell states is violated")
        else:
            result = werner_robustness(trajectories, p)
            click.echo(f"   initial N spread: {result.initial_spread:.3e}")
            for crossing in result.crossings:
                j, k = crossing.pair
                click.echo(f"   N{j} - N{k} changes sign at gamma*t = {crossing.gamma_t:.4f}")
            if not result.has_crossing:
                raise AcceptanceViolation("No negativity crossing between Werner trajectories")
            click.echo(f"✅ {len(result.crossings)} crossing(s) found")

    execute_command(command_logic)


@main.command()
@click.option("--count", type=int, default=10000, show_default=True, help="0 skips the scan")
@click.option(
    "--sampler", type=click.Choice(SAMPLER_METHODS), default="family-mix", show_default=True
)
@click.option("--with-ree", is_flag=True)
@click.option("--ree-budget", type=int)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option(
    "--classes", multiple=True, callback=parse_classes, help="Pattern such as LT,LT,GT (repeatable)"
)
@click.option("--constructed/--no-constructed", default=True, show_default=True)
@click.option("--tol-eq", type=float, default=1e-4, show_default=True)
@click.option("--tol-strict", type=float, default=1e-3, show_default=True)
@click.option("--output", "-o", default="ordering.csv", show_default=True, type=click.Path())
@seed_option
def ordering(
    count,
    sampler,
    with_ree,
    ree_budget,
    workers,
    classes,
    constructed,
    tol_eq,
    tol_strict,
    output,
    seed,
):
    """Find state pairs whose C, N and E_R orderings disagree"""

    def command_logic():
        tol = OrderingTolerance(tol_eq, tol_strict)
        witnesses = []
        run_seed = None
        if count > 0:
            run_seed = resolve_seed(seed)
            cfg = SamplerConfig(method=sampler, seed=run_seed, count=count)
            solver = solver_config(run_seed) if with_ree else None
            records = scan_records(cfg, with_ree, ree_budget, solver, workers)
            for _, pairs in find_ordering_examples(records, classes, tol).items():
                for a, b in pairs:
                    witnesses.append(("scan", a, b, classify_pair(a, b, tol)))
        if constructed:
            for target, (a, b) in constructed_witness_records(tol).items():
                if target in classes:
                    witnesses.append(("constructed", a, b, classify_pair(a, b, tol)))

        config = {
            "command": "ordering",
            "count": count,
            "sampler": sampler,
            "with_ree": with_ree,
            "classes": [str(c) for c in classes],
            "constructed": constructed,
            "tol": [tol_eq, tol_strict],
        }
        write_csv(output, ORDERING_COLUMNS, ordering_rows(witnesses), run_seed, config)

        found = {w[3].ordering for w in witnesses}
        missing = [c for c in classes if c not in found]
        for target in classes:
            mark = "❌" if target in missing else "✅"
            hits = sum(1 for w in witnesses if w[3].ordering == target)
            click.echo(f"{mark} {target}: {hits} witness pair(s)")
        if missing:
            raise AcceptanceViolation(f"No witness for {', '.join(str(c) for c in missing)}")

    execute_command(command_logic)


@main.command()
@click.option("--points", type=int, default=21, show_default=True, help="Table rows")
@click.option("--output", "-o", type=click.Path(), help="Write the N, E_R, W(N) table as CSV")
def crossing(points, output):
    """Negativity where Horodecki-state E_R meets the pure-state curve"""

    def command_logic():
        n_y, e_y = ree_crossing()
        click.echo(f"N_Y = {n_y:.6f}")
        click.echo(f"E_Y = {e_y:.6f}")
        if output:
            rows = (
                {"N": n, "E_R_horodecki": e, "W": w} for n, e, w in crossing_table(points)
            )
            config = {"command": "crossing", "points": points}
            write_csv(output, ("N", "E_R_horodecki", "W"), rows, None, config)
            click.echo(f"✅ Wrote crossing table to {output}")

    execute_command(command_logic)


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--sampler", type=click.Choice(SAMPLER_METHODS), default="ginibre", show_default=True)
@click.option("--x", "x_measure", type=click.Choice(MEASURE_NAMES), default="C", show_default=True)
@click.option("--y", "y_measure", type=click.Choice(MEASURE_NAMES), default="N", show_default=True)
@click.option("--bins", type=int, default=50, show_default=True)
@click.option("--output", "-o", default="envelope.csv", show_default=True, type=click.Path())
@seed_option
def envelope(input_path, count, sampler, x_measure, y_measure, bins, output, seed):
    """Per-bin lower/upper envelope of one measure against another"""

    def command_logic():
        run_seed = None
        if input_path:
            records = read_scan_records(input_path)
        else:
            run_seed = resolve_seed(seed)
            records = scan_records(SamplerConfig(method=sampler, seed=run_seed, count=count))
        env = extract_envelope(records, x_measure, y_measure, bins)
        config = {
            "command": "envelope",
            "input": input_path,
            "count": None if input_path else count,
            "sampler": None if input_path else sampler,
            "x": x_measure,
            "y": y_measure,
            "bins": bins,
        }
        write_csv(output, envelope_columns(env), envelope_rows(env), run_seed, config)
        populated = int((env.counts > 0).sum())
        click.echo(
            f"✅ Wrote {y_measure} vs {x_measure} envelope ({populated}/{bins} bins) to {output}"
        )

    execute_command(command_logic)


@main.group(name="config")
def config_group():
    """Show or change persisted defaults"""
    pass


@config_group.command()
def show():
    """Show the current settings"""
    execute_command(lambda: click.echo(str(Settings())))


@config_group.command(name="set")
@click.argument("key")
@click.argument("value")
def set_value(key, value):
    """Set KEY (section.name, e.g. ree.restarts) to VALUE"""

    def command_logic():
        try:
            stored = Settings().set_value(key, value)
        except (KeyError, ValueError) as e:
            raise click.UsageError(str(e))
        click.echo(f"✅ {key} = {stored!r}")

    execute_command(command_logic)
