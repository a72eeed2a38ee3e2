"""
Command-line interface for the Bernoulli free boundary lab.
"""

import functools
import json
from typing import Optional

import click
from pydantic import ValidationError

from bernoulli_lab import __version__
from bernoulli_lab import main as steps
from bernoulli_lab.acceptance import run_acceptance
from bernoulli_lab.exceptions import ConfigurationError, LabError
from bernoulli_lab.utils.config import load_config, parse_document
from bernoulli_lab.utils.logger import setup_logger


class LabCommandError(click.ClickException):
    """ClickException carrying the exit code of the error it wraps."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _reported(step: str):
    """
    Turn errors raised by a command into exit codes.

    Lab errors carry their own code; pydantic validation errors are invalid
    input (2). Any other ValueError, OSError or RuntimeError is internal (4).
    """

    def decorate(command):
        @functools.wraps(command)
        def wrapper(*args, **kwargs):
            logger = setup_logger(verbose=kwargs.get("verbose", False))
            try:
                return command(*args, **kwargs)
            except LabError as e:
                logger.error(f"❌ {step} failed: {e}")
                raise LabCommandError(str(e), e.exit_code)
            except ValidationError as e:
                logger.error(f"❌ {step} failed: {e}")
                raise LabCommandError(str(e), ConfigurationError.exit_code)
            except (ValueError, OSError, RuntimeError) as e:
                logger.error(f"❌ {step} failed with an internal error: {e}")
                raise LabCommandError(f"internal error: {e}", LabError.exit_code)

        return wrapper

    return decorate


verbose_option = click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
config_option = click.option('--config', '-c', 'config_path', type=click.Path(exists=True),
                             help='Configuration file (YAML or JSON)')
out_option = click.option('--out', '-o', 'out', type=click.Path(), help='Output directory')
lambda_option = click.option('--lambda', 'lam', type=float, help='Bernoulli constant Λ > 0')


@click.group()
@click.version_option(__version__)
def main():
    """Bernoulli Lab - numerics for the one-phase free boundary problem."""
    pass


@main.command()
@click.option('--domain', help='Domain spec: inline JSON or a .json/.yaml file')
@click.option('--datum', help='Boundary datum spec: inline JSON or a .json/.yaml file')
@click.option('--h', type=float, help='Grid spacing')
@lambda_option
@click.option('--mode', type=click.Choice(['single', 'extremes']), help='One solve or the extreme minimizers')
@out_option
@config_option
@verbose_option
@_reported("Solve")
def solve(domain: Optional[str], datum: Optional[str], h: Optional[float], lam: Optional[float],
          mode: Optional[str], out: Optional[str], config_path: Optional[str], verbose: bool):
    """
    Solve a discrete Bernoulli problem.

    Writes field.csv (or field_lower.csv and field_upper.csv) and report.json.
    """
    logger = setup_logger(verbose=verbose)
    logger.info("🌊 Starting solve...")
    config = load_config(config_path, {
        "domain": parse_document(domain), "datum": parse_document(datum),
        "h": h, "lambda": lam, "mode": mode, "output_dir": out,
    })
    steps.run_solve(config)


@main.command()
@click.option('--L', 'length', type=float, default=1.0, show_default=True, help='Interval length')
@click.option('--a', type=float, required=True, help='Value at the left end')
@click.option('--b', type=float, required=True, help='Value at the right end')
@click.option('--lambda', 'lam', type=float, default=1.0, show_default=True, help='Bernoulli constant Λ > 0')
@verbose_option
@_reported("Oracle")
def oracle1d(length: float, a: float, b: float, lam: float, verbose: bool):
    """Print every exact minimizer on [0, L] as a JSON array."""
    click.echo(json.dumps(steps.run_oracle1d(length, a, b, lam), indent=2))


@main.command()
@click.option('--L', 'length', type=float, default=1.0, show_default=True, help='Interval length')
@lambda_option
@click.option('--tmin', type=float, help='First family parameter')
@click.option('--tmax', type=float, help='Last family parameter')
@click.option('--tstep', type=float, help='Parameter step')
@out_option
@config_option
@verbose_option
@_reported("Exact sweep")
def sweep1d(length: float, lam: Optional[float], tmin: Optional[float], tmax: Optional[float],
            tstep: Optional[float], out: Optional[str], config_path: Optional[str], verbose: bool):
    """Exact 1D sweep of g_t = t: writes sweep1d.csv and jumps.json."""
    config = load_config(config_path, {
        "lambda": lam, "output_dir": out,
        "sweep": {"tmin": tmin, "tmax": tmax, "tstep": tstep},
    })
    steps.run_sweep1d(config, length)


@main.command()
@click.option('--d', 'dimension', type=int, default=2, show_default=True, help='Space dimension (>= 2)')
@click.option('--lambda', 'lam', type=float, default=1.0, show_default=True, help='Bernoulli constant Λ > 0')
@click.option('--r', 'radius', type=float, help='Also print the radial solution at this radius')
@verbose_option
@_reported("Annulus")
def annulus(dimension: int, lam: float, radius: Optional[float], verbose: bool):
    """Print the critical radius R of the annulus problem."""
    result = steps.run_annulus(dimension, lam, radius)
    click.echo(f"{result['R']:.12g}")
    if radius is not None:
        click.echo(f"{result['value']:.12g}")


@main.command()
@click.option('--kind', required=True,
              type=click.Choice(['comparison', 'cutpaste', 'barrier', 'equicontinuity', 'holder', 'restriction']),
              help='Which property to check')
@click.option('--domain', help='Domain spec: inline JSON or a .json/.yaml file')
@click.option('--datum', help='Boundary datum spec: inline JSON or a .json/.yaml file')
@click.option('--h', type=float, help='Grid spacing')
@lambda_option
@click.option('--shift', type=float, help='comparison: datum shift of the upper problem')
@click.option('--gamma', type=float, help='holder: exponent')
@click.option('--band', type=float, help='holder: boundary band width (>= 2h)')
@click.option('--level', type=float, help='barrier: datum lower bound on the patch')
@click.option('--rho', type=float, help='barrier: positivity radius')
@click.option('--subdomain', help='restriction: subdomain spec on the same lattice')
@out_option
@config_option
@verbose_option
@_reported("Check")
def check(kind: str, domain: Optional[str], datum: Optional[str], h: Optional[float], lam: Optional[float],
          shift: Optional[float], gamma: Optional[float], band: Optional[float], level: Optional[float],
          rho: Optional[float], subdomain: Optional[str], out: Optional[str], config_path: Optional[str],
          verbose: bool):
    """Run one regularity check and write report.json."""
    config = load_config(config_path, {
        "domain": parse_document(domain), "datum": parse_document(datum),
        "h": h, "lambda": lam, "output_dir": out,
        "check": {
            "shift": shift, "gamma": gamma, "band": band, "level": level,
            "rho": rho, "subdomain": parse_document(subdomain),
        },
    })
    steps.run_check(config, kind)


@main.command()
@click.option('--family', help='Datum family spec: inline JSON or a .json/.yaml file')
@click.option('--domain', help='Domain spec: inline JSON or a .json/.yaml file')
@click.option('--h', type=float, help='Grid spacing')
@lambda_option
@click.option('--tmin', type=float, help='First family parameter')
@click.option('--tmax', type=float, help='Last family parameter')
@click.option('--tstep', type=float, help='Parameter step')
@click.option('--threads', type=int, help='Worker threads (0 = one per CPU)')
@out_option
@config_option
@verbose_option
@_reported("Sweep")
def sweep(family: Optional[str], domain: Optional[str], h: Optional[float], lam: Optional[float],
          tmin: Optional[float], tmax: Optional[float], tstep: Optional[float], threads: Optional[int],
          out: Optional[str], config_path: Optional[str], verbose: bool):
    """Extreme solves along a datum family: sweep.csv and jumps.json."""
    config = load_config(config_path, {
        "family": parse_document(family), "domain": parse_document(domain),
        "h": h, "lambda": lam, "threads": threads, "output_dir": out,
        "sweep": {"tmin": tmin, "tmax": tmax, "tstep": tstep},
    })
    steps.run_family_sweep(config)


@main.command()
@click.option('--only', multiple=True, type=int, help='Criterion number to run (repeatable)')
@out_option
@config_option
@verbose_option
@_reported("Acceptance")
def acceptance(only, out: Optional[str], config_path: Optional[str], verbose: bool):
    """Run the acceptance criteria and write acceptance.json."""
    logger = setup_logger(verbose=verbose)
    logger.info("🧪 Starting acceptance run...")
    config = load_config(config_path, {"output_dir": out})
    summary = run_acceptance(config, only=list(only) or None)
    logger.info(f"📋 {summary['passed']}/{summary['count']} passed, {summary['errored']} errored")
    if summary["errored"]:
        raise LabCommandError(f"{summary['errored']} criterion(s) errored", LabError.exit_code)


if __name__ == '__main__':
    main()
