"""Command-line front end: run verification suites and write JSON reports."""
from __future__ import annotations

import json
import os
import sys

import click

from .report import dumps
from .suites import SUITES, SuiteConfig, run_suite

TOL_ENV = "CSTARCORR_TOL"


def _default_tol() -> float:
    return float(os.environ.get(TOL_ENV, "1e-9"))


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise click.FileError(path, hint=exc.strerror or str(exc)) from None


def _emit(report: dict, json_path: str | None):
    text = dumps(report)
    if json_path:
        try:
            with open(json_path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise click.FileError(json_path, hint=exc.strerror or str(exc)) from None
    click.echo(text)
    sys.exit(0 if report["pass"] else 1)


def common(f):
    f = click.option("--json", "json_path", type=str, default=None, help="Also write the report to this path.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--tol", type=float, default=None, help=f"Tolerance (default ${TOL_ENV} or 1e-9).")(f)
    f = click.option("--depth", type=click.IntRange(min=1), default=3, show_default=True)(f)
    f = click.option("--trials", type=click.IntRange(min=1), default=5, show_default=True)(f)
    return f


def _config(suite: str, seed: int, tol: float | None, depth: int, trials: int, **kw) -> SuiteConfig:
    tol = _default_tol() if tol is None else tol
    if not tol > 0:
        raise click.BadParameter("tolerance must be positive", param_hint="--tol")
    return SuiteConfig(suite, seed, tol, depth, trials, **kw)


@click.group()
def main():
    """Verify constructions on finite-dimensional C*-correspondences."""


@main.command()
@click.option("--suite", type=click.Choice(sorted(SUITES)), required=True)
@common
def verify(suite, json_path, seed, tol, depth, trials):
    """Run one named verification suite."""
    _emit(run_suite(_config(suite, seed, tol, depth, trials)), json_path)


@main.group()
def graph():
    """Graph files and the subgraph expectation."""


@graph.command("kappa")
@click.option("--graph", "graph_path", type=str, required=True)
@click.option("--subgraph", "sub_path", type=str, required=True)
@common
def graph_kappa(graph_path, sub_path, json_path, seed, tol, depth, trials):
    """Check the identification of the KSGNS module with a Fock module."""
    cfg = _config("graph-kappa", seed, tol, depth, trials, graph=_read(graph_path), subgraph=_read(sub_path))
    _emit(run_suite(cfg), json_path)


@graph.command("info")
@click.argument("path", type=str)
def graph_info(path):
    """Print vertex and edge counts with sources and sinks."""
    from .graphalg import graph_report, parse_graph

    click.echo(json.dumps(graph_report(parse_graph(_read(path))), indent=2))


@main.group()
def bihilb():
    """Bi-Hilbertian bimodules."""


@bihilb.command("covering")
@click.option("--cover", "cover_path", type=str, default=None, help="Covering JSON; a 2-fold cover of a 3-cycle by default.")
@common
def bihilb_covering(cover_path, json_path, seed, tol, depth, trials):
    """Index and conjugated correspondence of a finite covering."""
    cover = None
    if cover_path:
        try:
            cover = json.loads(_read(cover_path))
        except json.JSONDecodeError as exc:
            raise click.BadParameter(f"{cover_path}: {exc}", param_hint="--cover") from None
    _emit(run_suite(_config("covering", seed, tol, depth, trials, cover=cover)), json_path)


@bihilb.command("verify")
@common
def bihilb_verify(json_path, seed, tol, depth, trials):
    """Index, W_n, psi and Phi_P on random regular bimodules."""
    _emit(run_suite(_config("bihilb", seed, tol, depth, trials)), json_path)


@main.command()
@click.option("--subproduct", is_flag=True, help="Run the symmetric subproduct suite instead.")
@common
def fock(subproduct, json_path, seed, tol, depth, trials):
    """Fock expectation of complemented sub-correspondences."""
    _emit(run_suite(_config("subproduct" if subproduct else "fock", seed, tol, depth, trials)), json_path)


@main.command("ksgns")
@click.option("--compose", is_flag=True, help="Check identities and associativity of composition.")
@common
def ksgns_cmd(compose, json_path, seed, tol, depth, trials):
    """KSGNS dilations of random completely positive maps."""
    _emit(run_suite(_config("quesadilla" if compose else "ksgns", seed, tol, depth, trials)), json_path)


if __name__ == "__main__":
    main()
