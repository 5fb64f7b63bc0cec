#!/usr/bin/env python
"""
EllSpin - deformed Inozemtsev chain laboratory
Command Line Interface
"""
import json
import math
import sys
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

import click
import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from ellspin import chain as ch
from ellspin.config import get_settings, reload_settings
from ellspin.exceptions import (
    EXIT_CHECK_FAILED,
    EXIT_INFRASTRUCTURE,
    EXIT_OK,
    EXIT_USAGE,
    ConfigurationError,
    EllSpinException,
    GateError,
    InfrastructureError,
    ParameterError,
    exit_code_for,
    is_critical,
    wrap_error,
)
from ellspin.harness import SUITES, list_checks, run_suite, summary_table, to_plain, write_report
from ellspin.qmbs import QmbsParams, freeze_report
from ellspin.utils.logger import get_logger, setup_logging

# Initialize
app = typer.Typer(
    help="EllSpin: numerical laboratory for the deformed Inozemtsev spin chain",
    add_completion=False
)
console = Console()
err_console = Console(stderr=True)
logger = get_logger(__name__)

MODELS = ("deformed-L", "deformed-R", "inozemtsev", "intermediate", "xxz", "hs", "deformed-hs")
SWEEP_PARAMS = ("kappa", "eta", "a", "gamma", "a_prime")
FREEZE_TOLERANCE = 1e-7


# =============================================================================
# Parsing and output helpers
# =============================================================================

def parse_complex(text: str, name: str) -> complex:
    """
    Parse a complex literal of the form "a+bi" (no spaces).

    Plain reals ("1.3") and pure imaginaries ("0.4i") are accepted.

    Raises:
        ParameterError: on anything else, including non-finite values
    """
    raw = text.strip()
    if not raw or " " in raw or "j" in raw.lower():
        raise ParameterError(f"Cannot parse {name} '{text}' as a complex number a+bi", details={name: text})
    candidate = raw[:-1] + "j" if raw.endswith("i") else raw
    try:
        value = complex(candidate)
    except ValueError as e:
        raise ParameterError(
            f"Cannot parse {name} '{text}' as a complex number a+bi", details={name: text}, original_error=e
        )
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParameterError(f"{name} must be finite", details={name: text})
    return value


def _configure(log_level: Optional[str]) -> None:
    if log_level:
        settings = get_settings()
        setup_logging(log_level=log_level, log_format=settings.log_format, log_file=settings.log_file)


def _abort(error: Exception) -> NoReturn:
    code = exit_code_for(error)
    message = error.message if isinstance(error, EllSpinException) else str(error)
    err_console.print(f"[red]Error: {message}[/red]")
    log = logger.critical if is_critical(error) else logger.error
    log("command_failed", error=message, error_type=type(error).__name__, exit_code=code)
    raise typer.Exit(code=code)


def _emit(text: str, output: Optional[Path]) -> None:
    """Write command data to a file, or to stdout."""
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        output.write_text(text, encoding="utf-8")
    except OSError as e:
        raise wrap_error(e, f"Cannot write {output}: {e}", InfrastructureError, path=str(output))
    err_console.print(f"[green]Wrote {output}[/green]")


def _check_format(fmt: str) -> None:
    if fmt not in ("json", "csv"):
        raise ParameterError("format must be json or csv", details={"format": fmt})


def _csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.17g")


def _json(payload: Any) -> str:
    return json.dumps(to_plain(payload), indent=2) + "\n"


def _split(values, prefix: str) -> Dict[str, np.ndarray]:
    values = np.asarray(values, dtype=complex)
    return {f"{prefix}re": values.real, f"{prefix}im": values.imag}


class RunConfig:
    """Parsed chain parameters shared by the computing commands."""

    def __init__(self, n: int, kappa: float, eta: str, a: str, gamma: float, a_prime: str):
        self.n_sites = n
        self.kappa = kappa
        self.eta = parse_complex(eta, "eta")
        self.a = parse_complex(a, "a")
        self.gamma = gamma
        self.a_prime = parse_complex(a_prime, "a_prime")
        if not math.isfinite(kappa) or kappa < 0:
            raise ParameterError("kappa must be a finite nonnegative real", details={"kappa": kappa})
        if not math.isfinite(gamma):
            raise ParameterError("gamma must be finite", details={"gamma": gamma})

    def replace(self, name: str, value: float) -> "RunConfig":
        clone = RunConfig.__new__(RunConfig)
        clone.__dict__.update(self.__dict__)
        key = "n_sites" if name == "n" else name
        setattr(clone, key, complex(value) if key in ("eta", "a", "a_prime") else float(value))
        return clone

    def chain(self, kappa: Optional[float] = None, eta: Optional[complex] = None) -> ch.ChainParams:
        return ch.ChainParams(
            self.n_sites,
            self.kappa if kappa is None else kappa,
            self.eta if eta is None else eta,
            self.a,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n_sites,
            "kappa": self.kappa,
            "eta": self.eta,
            "a": self.a,
            "gamma": self.gamma,
            "a_prime": self.a_prime,
        }


def build_model(model: str, cfg: RunConfig, linked: bool = False) -> ch.SpinOperator:
    """
    Operator of a named model.

    With ``linked`` the xxz model is reached through the deformed chain:
    eta = -i pi gamma / kappa and the short-range rescaling.
    """
    if model == "deformed-L":
        return ch.hamiltonian(cfg.chain(), "left")
    if model == "deformed-R":
        return ch.hamiltonian(cfg.chain(), "right")
    if model == "inozemtsev":
        return ch.h_inozemtsev(cfg.chain())
    if model == "intermediate":
        return ch.h_intermediate(cfg.a_prime, cfg.chain())
    if model == "xxz":
        if linked:
            eta = -1j * math.pi * cfg.gamma / cfg.kappa if cfg.kappa > 0 else cfg.eta
            return ch.short_range_hamiltonian(cfg.chain(eta=eta))
        return ch.h_xxz(cfg.gamma, cfg.a, cfg.n_sites)
    if model == "hs":
        return ch.h_haldane_shastry(cfg.chain())
    if model == "deformed-hs":
        return ch.h_deformed_hs(cfg.chain(kappa=0.0))
    raise ParameterError(f"Unknown model '{model}'", details={"models": list(MODELS)})


def _eigenvalues(op: ch.SpinOperator, sector: Optional[int]) -> np.ndarray:
    return ch.spectrum(op, sector=sector)


# =============================================================================
# Commands
# =============================================================================

@app.callback()
def startup() -> None:
    """Read the settings from the environment and configure logging before any command runs."""
    try:
        settings = reload_settings()
    except ConfigurationError as e:
        _abort(e)
    setup_logging(log_level=settings.log_level, log_format=settings.log_format, log_file=settings.log_file)


@app.command()
def verify(
    suite: str = typer.Option("all", "--suite", "-s", help=f"Suite to run: {', '.join(SUITES)}"),
    seed: int = typer.Option(1, "--seed", help="Base random seed"),
    n: Optional[int] = typer.Option(None, "--n", help="Fix the number of sites"),
    kappa: Optional[float] = typer.Option(None, "--kappa", help="Fix kappa"),
    eta: Optional[str] = typer.Option(None, "--eta", help="Fix eta (a+bi)"),
    a: Optional[str] = typer.Option(None, "--a", help="Fix the dynamical parameter (a+bi)"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="Fix the XXZ anisotropy"),
    a_prime: Optional[str] = typer.Option(None, "--a-prime", help="Fix a' of the intermediate chain (a+bi)"),
    draws: Optional[int] = typer.Option(None, "--draws", help="Draws per check (default from settings)"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", envvar="ELLSPIN_JOBS", help="Worker threads"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Report file (default stdout)"),
    fmt: str = typer.Option("json", "--format", "-f", help="Report format: json or csv"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level"),
):
    """
    Run the verification suites and write a report of every check.
    """
    _configure(log_level)
    try:
        _check_format(fmt)
        overrides: Dict[str, Any] = {}
        if n is not None:
            cap = get_settings().max_sites
            if not 2 <= n <= cap:
                raise ParameterError("n must lie in [2, max_sites]", details={"n": n, "max_sites": cap})
            overrides["n_sites"] = n
        if kappa is not None:
            if not math.isfinite(kappa) or kappa < 0:
                raise ParameterError("kappa must be a finite nonnegative real", details={"kappa": kappa})
            overrides["kappa"] = kappa
        if eta is not None:
            overrides["eta"] = parse_complex(eta, "eta")
            if overrides["eta"] == 0:
                raise ParameterError("eta = 0 makes theta(2 eta) vanish", details={"eta": eta})
        if a is not None:
            overrides["a"] = parse_complex(a, "a")
        if gamma is not None:
            overrides["gamma"] = gamma
        if a_prime is not None:
            overrides["a_prime"] = parse_complex(a_prime, "a_prime")
        if jobs is not None and jobs < 1:
            raise ParameterError("jobs must be at least 1", details={"jobs": jobs})
        if draws is not None and draws < 1:
            raise ParameterError("draws must be at least 1", details={"draws": draws})

        logger.info("verify_command_started", suite=suite, seed=seed, overrides=sorted(overrides))
        results = run_suite(suite, seed=seed, overrides=overrides, jobs=jobs, draws=draws)
        text = write_report(results, fmt=fmt)
        _emit(text, output)
    except EllSpinException as e:
        _abort(e)

    err_console.print(summary_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        err_console.print(f"[red]{len(failed)} of {len(results)} checks failed[/red]")
        raise typer.Exit(code=EXIT_CHECK_FAILED)
    err_console.print(f"[green]All {len(results)} checks passed[/green]")


@app.command()
def spectrum(
    model: str = typer.Option("deformed-L", "--model", "-m", help=f"Model: {', '.join(MODELS)}"),
    n: int = typer.Option(4, "--n", help="Number of sites"),
    kappa: float = typer.Option(0.7, "--kappa", help="Elliptic parameter kappa >= 0"),
    eta: str = typer.Option("0.3", "--eta", help="Anisotropy eta (a+bi)"),
    a: str = typer.Option("0.5", "--a", help="Dynamical parameter (a+bi)"),
    gamma: float = typer.Option(0.25, "--gamma", help="XXZ anisotropy"),
    a_prime: str = typer.Option("0.5i", "--a-prime", help="a' of the intermediate chain (a+bi)"),
    sector: Optional[int] = typer.Option(None, "--sector", help="Number of down spins of an S^z sector"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output file (default stdout)"),
    fmt: str = typer.Option("json", "--format", "-f", help="Output format: json or csv"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level"),
):
    """
    Diagonalize a model Hamiltonian and write its eigenvalues.
    """
    _configure(log_level)
    try:
        _check_format(fmt)
        cfg = RunConfig(n, kappa, eta, a, gamma, a_prime)
        values = _eigenvalues(build_model(model, cfg), sector)
        logger.info("spectrum_computed", model=model, n_sites=n, sector=sector, size=len(values))
        if fmt == "json":
            text = _json({"model": model, "params": cfg.to_dict(), "sector": sector, "eigenvalues": list(values)})
        else:
            text = _csv(pd.DataFrame(_split(values, "")))
        _emit(text, output)
    except EllSpinException as e:
        _abort(e)


@app.command()
def sweep(
    param: str = typer.Option("kappa", "--param", "-p", help=f"Swept parameter: {', '.join(SWEEP_PARAMS)}"),
    start: float = typer.Option(0.0, "--from", help="First grid value"),
    stop: float = typer.Option(4.0, "--to", help="Last grid value"),
    steps: int = typer.Option(9, "--steps", help="Number of grid points (>= 2)"),
    log: bool = typer.Option(False, "--log", help="Geometric instead of linear grid"),
    model: str = typer.Option("deformed-L", "--model", "-m", help=f"Model: {', '.join(MODELS)}"),
    n: int = typer.Option(4, "--n", help="Number of sites"),
    kappa: float = typer.Option(0.7, "--kappa", help="Elliptic parameter kappa >= 0"),
    eta: str = typer.Option("0.3", "--eta", help="Anisotropy eta (a+bi)"),
    a: str = typer.Option("0.5", "--a", help="Dynamical parameter (a+bi)"),
    gamma: float = typer.Option(0.25, "--gamma", help="XXZ anisotropy"),
    a_prime: str = typer.Option("0.5i", "--a-prime", help="a' of the intermediate chain (a+bi)"),
    sector: Optional[int] = typer.Option(None, "--sector", help="Number of down spins of an S^z sector"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", envvar="ELLSPIN_JOBS", help="Worker threads"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output file (default stdout)"),
    fmt: str = typer.Option("json", "--format", "-f", help="Output format: json or csv"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level"),
):
    """
    Spectral flow: one spectrum per grid point of a swept parameter.

    Sweeping kappa with --model xxz follows the deformed chain with
    eta = -i pi gamma / kappa, rescaled towards the XXZ limit.
    """
    _configure(log_level)
    try:
        _check_format(fmt)
        if param not in SWEEP_PARAMS:
            raise ParameterError(f"Cannot sweep '{param}'", details={"params": list(SWEEP_PARAMS)})
        if steps < 2:
            raise ParameterError("steps must be at least 2", details={"steps": steps})
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise ParameterError("Sweep bounds must be finite", details={"from": start, "to": stop})
        if log and (start <= 0 or stop <= 0):
            raise ParameterError("A geometric grid needs positive bounds", details={"from": start, "to": stop})
        if model not in MODELS:
            raise ParameterError(f"Unknown model '{model}'", details={"models": list(MODELS)})
        workers = jobs or get_settings().jobs
        if workers < 1:
            raise ParameterError("jobs must be at least 1", details={"jobs": workers})

        base = RunConfig(n, kappa, eta, a, gamma, a_prime)
        grid = np.geomspace(start, stop, steps) if log else np.linspace(start, stop, steps)
        linked = model == "xxz" and param == "kappa"
        logger.info("sweep_command_started", param=param, steps=steps, model=model, jobs=workers)

        def point(value: float) -> Dict[str, Any]:
            cfg = base.replace(param, value)
            values = _eigenvalues(build_model(model, cfg, linked=linked), sector)
            return {"value": float(value), "params": cfg.to_dict(), "eigenvalues": list(values)}

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            console=err_console
        ) as progress:
            task = progress.add_task(f"Sweeping {param}...", total=None)
            if workers > 1:
                with ThreadPool(min(workers, steps)) as pool:
                    points = pool.map(point, list(grid))
            else:
                points = [point(value) for value in grid]
            progress.update(task, completed=True)

        if fmt == "json":
            text = _json({"model": model, "param": param, "sector": sector, "points": points})
        else:
            rows: List[Dict[str, Any]] = []
            for index, entry in enumerate(points):
                for value in entry["eigenvalues"]:
                    rows.append({"point": index, param: entry["value"], "re": value.real, "im": value.imag})
            text = _csv(pd.DataFrame(rows, columns=["point", param, "re", "im"]))
        _emit(text, output)
    except EllSpinException as e:
        _abort(e)


@app.command()
def magnons(
    n: int = typer.Option(4, "--n", help="Number of sites"),
    kappa: float = typer.Option(0.7, "--kappa", help="Elliptic parameter kappa >= 0"),
    eta: str = typer.Option("0.3", "--eta", help="Anisotropy eta (a+bi)"),
    a: str = typer.Option("0.5", "--a", help="Dynamical parameter (a+bi)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output file (default stdout)"),
    fmt: str = typer.Option("json", "--format", "-f", help="Output format: json or csv"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level"),
):
    """
    Momentum table of the deformed one-magnon states.
    """
    _configure(log_level)
    try:
        _check_format(fmt)
        cfg = RunConfig(n, kappa, eta, a, 0.25, "0.5i")
        table = ch.magnon_energies(cfg.chain())
        if fmt == "json":
            params = {k: v for k, v in cfg.to_dict().items() if k in ("n", "kappa", "eta", "a")}
            text = _json({"params": params, "magnons": [m.to_dict() for m in table]})
        else:
            frame = pd.DataFrame({"n": [m.momentum_index for m in table]})
            for key, values in (
                ("translation_eigenvalue_", [m.translation_eigenvalue for m in table]),
                ("energy_left_", [m.energy_left for m in table]),
                ("energy_right_", [m.energy_right for m in table]),
            ):
                for column, data in _split(values, key).items():
                    frame[column] = data
            text = _csv(frame)
        _emit(text, output)
    except EllSpinException as e:
        _abort(e)


@app.command()
def freeze(
    chirality: str = typer.Option("both", "--chirality", "-c", help="left, right or both"),
    n: int = typer.Option(3, "--n", help="Number of sites"),
    kappa: float = typer.Option(0.7, "--kappa", help="Elliptic parameter kappa >= 0"),
    eta: str = typer.Option("0.3", "--eta", help="Anisotropy eta (a+bi)"),
    a: str = typer.Option("0.5", "--a", help="Dynamical parameter (a+bi)"),
    hbar: Optional[float] = typer.Option(None, "--hbar", help="Planck constant (default from settings)"),
    epsilon: Optional[str] = typer.Option(None, "--epsilon", help="Shift scale (a+bi, default from settings)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output file (default stdout)"),
    fmt: str = typer.Option("json", "--format", "-f", help="Output format: json or csv"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override the log level"),
):
    """
    Freeze the difference operators at the chain equilibrium and compare with A* H.
    """
    _configure(log_level)
    try:
        _check_format(fmt)
        if chirality not in ("left", "right", "both"):
            raise ParameterError("chirality must be left, right or both", details={"chirality": chirality})
        cfg = RunConfig(n, kappa, eta, a, 0.25, "0.5i")
        settings = get_settings()
        params = QmbsParams(
            n,
            kappa,
            cfg.eta,
            cfg.a,
            settings.hbar if hbar is None else hbar,
            settings.epsilon if epsilon is None else parse_complex(epsilon, "epsilon"),
        )
        sides = ("left", "right") if chirality == "both" else (chirality,)
        try:
            reports = [freeze_report(side, params) for side in sides]
        except GateError as e:
            err_console.print(f"[red]Freeze gate failed: {e.message}[/red]")
            logger.warning("freeze_gate_failed", **e.details)
            raise typer.Exit(code=EXIT_CHECK_FAILED)

        records = [r.to_dict() for r in reports]
        if fmt == "json":
            text = _json({"params": {"n": n, "kappa": kappa, "eta": cfg.eta, "a": cfg.a}, "reports": records})
        else:
            rows = []
            for record in records:
                row = {}
                for key, value in record.items():
                    if isinstance(value, complex):
                        row[f"{key}_re"], row[f"{key}_im"] = value.real, value.imag
                    else:
                        row[key] = value
                rows.append(row)
            text = _csv(pd.DataFrame(rows))
        _emit(text, output)
    except EllSpinException as e:
        _abort(e)

    worst = max(r.deviation for r in reports)
    if worst > FREEZE_TOLERANCE:
        err_console.print(f"[red]Frozen charge deviates from A* H by {worst:.3e}[/red]")
        raise typer.Exit(code=EXIT_CHECK_FAILED)


@app.command()
def checks(
    suite: str = typer.Option("all", "--suite", "-s", help=f"Suite to list: {', '.join(SUITES)}"),
    fmt: str = typer.Option("table", "--format", "-f", help="table or json"),
):
    """
    List the registered verification checks.
    """
    try:
        specs = list_checks(suite)
    except EllSpinException as e:
        _abort(e)

    default_draws = get_settings().draws_per_check
    if fmt == "json":
        rows = [
            {"name": s.name, "suite": s.suite, "tolerance": s.tolerance, "draws": s.draws or default_draws}
            for s in specs
        ]
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")
        return

    table = Table(title=f"Checks ({suite})")
    table.add_column("Name", style="cyan")
    table.add_column("Suite")
    table.add_column("Tolerance", justify="right")
    table.add_column("Draws", justify="right")
    for s in specs:
        table.add_row(s.name, s.suite, f"{s.tolerance:.0e}", str(s.draws or default_draws))
    console.print(table)
    console.print(f"\n[dim]{len(specs)} checks[/dim]")


def main() -> None:
    """Console-script entry point mapping usage errors to exit code 64."""
    try:
        code = app(standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        code = EXIT_USAGE
    except click.exceptions.ClickException as e:
        e.show()
        code = EXIT_INFRASTRUCTURE
    except click.exceptions.Abort:
        err_console.print("[yellow]Aborted[/yellow]")
        code = EXIT_INFRASTRUCTURE
    sys.exit(code if isinstance(code, int) else EXIT_OK)


if __name__ == "__main__":
    main()
