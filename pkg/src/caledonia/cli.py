"""Command-line surface over the equilibrium, ladder, and campaign tools.

Machine output uses 9 significant digits. Exit codes: 0 on success, 1 on a
domain error (reported on stderr), 2 on usage errors. Every subcommand that
writes files does so under --out (or $CALEDONIA_OUT, default the working
directory) and refuses paths that escape it. Campaign and surface report
commands render a figure next to the delimited output unless --no-figure.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import equilibrium, harness, stability, szebehely
from .core import (
    DomainError,
    ForbiddenError,
    MassRatios,
    NoSolutionError,
)
from .dynamics import IntegratorConfig, initial_state, integrate
from .harness import CampaignError, SweepSpec

_MU_FAMILIES = tuple(f for f in equilibrium.FAMILIES if f not in (
    equilibrium.SQUARE, equilibrium.TRIANGLE_EQUAL, equilibrium.COLLINEAR_EQUAL
))


def fmt(value):
    """Machine format: 9 significant digits."""
    return f"{float(value):.9g}"


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DomainError, ForbiddenError, NoSolutionError, CampaignError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _out_path(out_dir, name):
    """Resolve name under the output directory, refusing escapes."""
    base = Path(out_dir).resolve()
    path = (base / name).resolve()
    if base != path and base not in path.parents:
        raise click.UsageError(f"output path {name!r} escapes --out")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _parse_grid(text, what):
    parts = text.split(":")
    if len(parts) != 3:
        raise click.UsageError(f"{what} must be lo:hi:count")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise click.UsageError(f"{what} must be lo:hi:count with numeric fields")
    if count < 1:
        raise click.UsageError(f"{what} needs count >= 1")
    return np.linspace(lo, hi, count)


def _ratios_from(mu0, mu1, mu2):
    """Build mass ratios, deriving mu2 from the budget when omitted."""
    if mu2 is None:
        mu2 = (1.0 - mu0 - 2.0 * mu1) / 2.0
    return MassRatios(mu0, mu1, mu2)


def _solve_family(family, mu):
    if family == equilibrium.SQUARE:
        return [equilibrium.solve_square()]
    if family == equilibrium.TRIANGLE_EQUAL:
        return [equilibrium.solve_triangle_equal()]
    if family == equilibrium.COLLINEAR_EQUAL:
        return [equilibrium.solve_collinear_equal()]
    if mu is None:
        raise click.UsageError(f"family {family!r} needs --mu or --mu-grid")
    if family == equilibrium.TRAPEZOID:
        return [equilibrium.solve_trapezoid(mu)]
    if family == equilibrium.DIAMOND:
        return [equilibrium.solve_diamond(mu)]
    if family == equilibrium.TRIANGULAR_I:
        return equilibrium.solve_triangular_case1(mu)
    if family == equilibrium.TRIANGULAR_II:
        return equilibrium.solve_triangular_case2(mu)
    case = family.rsplit("-", 1)[1]
    return [equilibrium.solve_collinear_pairs(case, mu)]


_SOLUTION_COLUMNS = ("family", "mu", "branch", "alpha", "beta", "gamma", "a", "n", "residual")


def _solution_row(sol):
    row = {
        "family": sol.family,
        "mu": fmt(sol.mu),
        "branch": str(sol.branch),
        "n": fmt(sol.n),
        "residual": fmt(sol.residual_norm),
    }
    for key in ("alpha", "beta", "gamma", "a"):
        row[key] = fmt(sol.params[key]) if key in sol.params else ""
    return [row[c] for c in _SOLUTION_COLUMNS]


@click.group()
def main():
    """Symmetric few-body equilibria, stability, and hierarchy tools."""


@main.command("equilibrium")
@click.option("--family", required=True, type=click.Choice(equilibrium.FAMILIES))
@click.option("--mu", type=float, default=None, help="mass ratio for mu families")
@click.option("--mu-grid", default=None, help="lo:hi:count grid of mass ratios")
@_domain_errors
def equilibrium_cmd(family, mu, mu_grid):
    """Solve a configuration family; prints a CSV solution table."""
    if mu_grid is not None:
        if family not in _MU_FAMILIES:
            raise click.UsageError(f"family {family!r} does not take --mu-grid")
        rows = equilibrium.solve_grid(family, _parse_grid(mu_grid, "--mu-grid"))
        solutions = [sol for _, sols in rows for sol in sols]
    else:
        solutions = _solve_family(family, mu)
    click.echo(",".join(_SOLUTION_COLUMNS))
    for sol in solutions:
        click.echo(",".join(_solution_row(sol)))


def _stability_records(family, mu, geometry):
    """(label, roots, verdict, hessian-or-None) per branch.

    The square and equal triangle default to their tabulated radical forms,
    the form in which their quartets are usually quoted; --geometry forces
    the Hessian of the solved configuration instead (the two disagree, which
    is documented on the reference functions).
    """
    if family == equilibrium.SQUARE and not geometry:
        sol = equilibrium.solve_square()
        roots = stability.square_reference_roots(sol.params["a"])
        return [(family, roots, stability.classify(roots), None)]
    if family == equilibrium.TRIANGLE_EQUAL and not geometry:
        sol = equilibrium.solve_triangle_equal()
        hess = stability.triangle_reference_hessian(sol.params["a"])
        roots = stability.characteristic_roots(hess)
        return [(family, roots, stability.classify(roots), hess)]
    records = []
    for sol in _solve_family(family, mu):
        res = stability.analyze(sol)
        mu_text = f" mu={fmt(res.mu)}" if family in _MU_FAMILIES else ""
        label = f"{res.family}{mu_text} branch={res.branch}"
        records.append((label, res.roots, res.verdict, res.hessian))
    return records


@main.command("stability")
@click.option("--family", required=True, type=click.Choice(equilibrium.FAMILIES))
@click.option("--mu", type=float, default=None)
@click.option("--branch", type=int, default=None, help="restrict to one branch")
@click.option("--geometry", is_flag=True,
              help="use the solved geometry's Hessian instead of tabulated forms")
@click.option("--json", "as_json", is_flag=True, help="machine output")
@_domain_errors
def stability_cmd(family, mu, branch, geometry, as_json):
    """Classify linear stability; prints eigenvalues and the verdict."""
    records = _stability_records(family, mu, geometry)
    if branch is not None:
        if not (0 <= branch < len(records)):
            raise click.UsageError(f"no branch {branch} for family {family!r}")
        records = [records[branch]]
    if as_json:
        payload = [
            {
                "label": label,
                "verdict": verdict,
                "roots": [[root.real, root.imag] for root in roots],
                "hessian": None if hess is None else {
                    "uxx": hess.uxx, "uyy": hess.uyy, "uxy": hess.uxy,
                },
            }
            for label, roots, verdict, hess in records
        ]
        click.echo(json.dumps(payload, indent=2))
        return
    for label, roots, verdict, _ in records:
        click.echo(f"{label}: {verdict.capitalize()}")
        for root in roots:
            click.echo(f"  lambda = {root.real:+.6g} {root.imag:+.6g}i")


@main.command("ladder")
@click.option("--mu0", required=True, type=float)
@click.option("--mu1", required=True, type=float)
@click.option("--mu2", type=float, default=None, help="defaults to the mass budget remainder")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def ladder_cmd(mu0, mu1, mu2, as_json):
    """Critical-constant ladder: rungs, argmins, and c_crit."""
    lad = szebehely.ladder(_ratios_from(mu0, mu1, mu2))
    if as_json:
        click.echo(json.dumps({
            "rungs": [float(r) for r in lad.rungs],
            "argmins": [float(a) for a in lad.argmins],
            "c_crit": float(lad.c_crit),
        }, indent=2))
        return
    for k, (rung, argmin) in enumerate(zip(lad.rungs, lad.argmins), start=1):
        click.echo(f"R{k} = {fmt(rung)} at y = {fmt(argmin)}")
    click.echo(f"c_crit = {fmt(lad.c_crit)}")


@main.command("project")
@click.option("--mu0", required=True, type=float)
@click.option("--mu1", required=True, type=float)
@click.option("--mu2", type=float, default=None)
@click.option("--c0", required=True, type=float)
@click.option("--samples", type=int, default=512, show_default=True)
@click.option("--csv", "csv_name", default=None, help="write CSV (and figure) under --out")
@click.option("--out", envvar="CALEDONIA_OUT", default=".", show_default="cwd or $CALEDONIA_OUT")
@click.option("--figure/--no-figure", default=True, show_default=True)
@_domain_errors
def project_cmd(mu0, mu1, mu2, c0, samples, csv_name, out, figure):
    """Allowed-region projection onto the pair-size plane at one C0."""
    ratios = _ratios_from(mu0, mu1, mu2)
    rows = szebehely.project_max_extensions(ratios, c0, samples=samples)
    lines = ["branch,y,rho1,rho2"]
    lines += [f"{branch},{fmt(y)},{fmt(r1)},{fmt(r2)}" for branch, y, r1, r2 in rows]
    text = "\n".join(lines) + "\n"
    if csv_name is None:
        click.echo(text, nl=False)
        return
    path = _out_path(out, csv_name)
    path.write_text(text)
    click.echo(f"wrote {path}")
    if figure:
        fig_path = path.with_suffix(".png")
        _projection_figure(rows, c0, fig_path)
        click.echo(f"wrote {fig_path}")


@main.command("ccrit-surface")
@click.option("--grid", "grid_text", required=True, help="mu0 axis as lo:hi:count")
@click.option("--mu1-grid", "mu1_text", default=None,
              help="mu1 axis as lo:hi:count; omit for the mu1=mu2 slice")
@click.option("--csv", "csv_name", required=True)
@click.option("--out", envvar="CALEDONIA_OUT", default=".", show_default="cwd or $CALEDONIA_OUT")
@click.option("--figure/--no-figure", default=True, show_default=True)
@_domain_errors
def ccrit_surface_cmd(grid_text, mu1_text, csv_name, out, figure):
    """Critical constant over mass space; prints the argmax."""
    mu0_values = _parse_grid(grid_text, "--grid")
    path = _out_path(out, csv_name)
    if mu1_text is None:
        values, (best_mu0, best) = szebehely.c_crit_slice(mu0_values)
        lines = ["mu0,c_crit"]
        lines += [
            f"{fmt(m)},{fmt(v)}" for m, v in zip(mu0_values, values) if np.isfinite(v)
        ]
        path.write_text("\n".join(lines) + "\n")
        click.echo(f"wrote {path}")
        click.echo(f"argmax: mu0 = {fmt(best_mu0)}, c_crit = {fmt(best)}")
        if figure:
            _slice_figure(mu0_values, values, path.with_suffix(".png"))
            click.echo(f"wrote {path.with_suffix('.png')}")
        return
    mu1_values = _parse_grid(mu1_text, "--mu1-grid")
    surface, (best_mu0, best_mu1, best) = szebehely.c_crit_surface(mu0_values, mu1_values)
    lines = ["mu0,mu1,c_crit"]
    for i, m0 in enumerate(mu0_values):
        for j, m1 in enumerate(mu1_values):
            if np.isfinite(surface[i, j]):
                lines.append(f"{fmt(m0)},{fmt(m1)},{fmt(surface[i, j])}")
    path.write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {path}")
    click.echo(
        f"argmax: mu0 = {fmt(best_mu0)}, mu1 = {fmt(best_mu1)}, c_crit = {fmt(best)}"
    )
    if figure:
        _surface_figure(mu0_values, mu1_values, surface, path.with_suffix(".png"))
        click.echo(f"wrote {path.with_suffix('.png')}")


@main.command("integrate")
@click.option("--mode", type=click.Choice(harness.MODES), default="cs5bp", show_default=True)
@click.option("--r1", required=True, type=float)
@click.option("--r2", required=True, type=float)
@click.option("--c0", required=True, type=float)
@click.option("--e0", required=True, type=float)
@click.option("--steps", type=int, default=1000, show_default=True)
@click.option("--perturbation", type=float, default=0.0, show_default=True)
@click.option("--mu0", type=float, default=0.2, show_default=True)
@click.option("--mu1", type=float, default=0.2, show_default=True)
@click.option("--mu2", type=float, default=None)
@click.option("--dump", "dump_name", default=None, help="trajectory CSV under --out")
@click.option("--out", envvar="CALEDONIA_OUT", default=".", show_default="cwd or $CALEDONIA_OUT")
@_domain_errors
def integrate_cmd(mode, r1, r2, c0, e0, steps, perturbation, mu0, mu1, mu2, dump_name, out):
    """Integrate one orbit; prints the outcome as JSON."""
    ratios = _ratios_from(mu0, mu1, mu2)
    state = initial_state(r1, r2, c0, e0, ratios, mode=mode, perturbation=perturbation)
    partition = szebehely.region_partition(c0, ratios) if mode == "cs5bp" else None
    config = IntegratorConfig(max_steps=steps)
    if dump_name is not None:
        path = _out_path(out, dump_name)
        with open(path, "w", newline="") as fh:
            outcome = integrate(state, ratios, config, partition=partition, dump=fh)
    else:
        outcome = integrate(state, ratios, config, partition=partition)
    click.echo(json.dumps({
        "terminal": outcome.terminal,
        "pair": outcome.pair,
        "t_terminal": outcome.t_terminal,
        "t_end": outcome.t_end,
        "steps_taken": outcome.steps_taken,
        "energy_drift": outcome.energy_drift,
        "hierarchy_changes": [[t, a, b] for t, a, b in outcome.hierarchy_changes],
    }, indent=2))


def _spec_from_config(config_path, overrides):
    try:
        with open(config_path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config: {exc}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return SweepSpec.from_dict(data)


_SPEC_OVERRIDES = (
    click.option("--c0", type=float, default=None),
    click.option("--e0", type=float, default=None),
    click.option("--step", type=float, default=None),
    click.option("--max-steps", "max_steps", type=int, default=None),
    click.option("--perturbation", type=float, default=None),
    click.option("--mode", type=click.Choice(harness.MODES), default=None),
)


def _with_spec_overrides(fn):
    for option in reversed(_SPEC_OVERRIDES):
        fn = option(fn)
    return fn


def _override_map(c0, e0, step, max_steps, perturbation, mode):
    return {
        "c0": c0,
        "e0": e0,
        "step": step,
        "max_steps": max_steps,
        "perturbation": perturbation,
        "mode": mode,
    }


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--campaign", default="sweep-campaign", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", envvar="CALEDONIA_OUT", default=".", show_default="cwd or $CALEDONIA_OUT")
@click.option("--figure/--no-figure", default=True, show_default=True)
@_with_spec_overrides
@_domain_errors
def sweep_cmd(config_path, campaign, jobs, out, figure, c0, e0, step, max_steps,
              perturbation, mode):
    """Run a phase-space category sweep campaign from a JSON config."""
    spec = _spec_from_config(
        config_path, _override_map(c0, e0, step, max_steps, perturbation, mode)
    )
    campaign_dir = _out_path(out, campaign)
    grid = harness.run_sweep(spec, jobs=jobs, campaign_path=campaign_dir)
    for code, count in sorted(grid.counts().items()):
        click.echo(f"{code}: {count}")
    click.echo(f"wrote {campaign_dir / 'grid.csv'}")
    if figure:
        _grid_figure(grid, campaign_dir / "grid.png")
        click.echo(f"wrote {campaign_dir / 'grid.png'}")


@main.command("census")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--campaign", default="census-campaign", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", envvar="CALEDONIA_OUT", default=".", show_default="cwd or $CALEDONIA_OUT")
@click.option("--figure/--no-figure", default=True, show_default=True)
@_with_spec_overrides
@_domain_errors
def census_cmd(config_path, campaign, jobs, out, figure, c0, e0, step, max_steps,
               perturbation, mode):
    """Count hierarchy changes over the config's grid sample."""
    spec = _spec_from_config(
        config_path, _override_map(c0, e0, step, max_steps, perturbation, mode)
    )
    campaign_dir = _out_path(out, campaign)
    pairs = harness.grid_pairs(spec.r1_values, spec.r2_values)
    table = harness.run_change_census(
        spec.ratios, spec.c0, spec.e0, pairs,
        max_steps=spec.max_steps, jobs=jobs, campaign_path=campaign_dir,
    )
    for (src, dst), count, pct in zip(harness.TRANSITIONS, table.counts, table.percentages):
        click.echo(f"{src} -> {dst}: {count} ({pct:.1f}%)")
    click.echo(f"total: {table.total}")
    click.echo(f"wrote {campaign_dir / 'changes.csv'}")
    if figure:
        _census_figure(table, campaign_dir / "changes.png")
        click.echo(f"wrote {campaign_dir / 'changes.png'}")


@main.command("check")
@click.option("--family", required=True, type=click.Choice(equilibrium.FAMILIES))
@click.option("--mu", type=float, default=1.0, show_default=True)
@click.option("--params", required=True, help="comma-separated name=value pairs")
@_domain_errors
def check_cmd(family, mu, params):
    """Report the family's defining-equation residuals at given parameters."""
    values = {}
    for item in params.split(","):
        name, _, text = item.partition("=")
        if not text:
            raise click.UsageError("--params needs name=value pairs")
        try:
            values[name.strip()] = float(text)
        except ValueError:
            raise click.UsageError(f"bad value in --params: {item!r}")
    residuals = equilibrium.residuals(family, mu, values)
    for k, value in enumerate(residuals):
        click.echo(f"residual[{k}] = {fmt(value)}")
    click.echo(f"max |residual| = {fmt(np.max(np.abs(residuals)))}")


# --------------------------------------------------------------------------
# figure rendering (report paths only; Agg backend, files next to the CSVs)

def _matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _grid_figure(grid, path):
    plt = _matplotlib()
    order = {code: k for k, code in enumerate(harness.ALL_CODES)}
    data = np.array([[order[c] for c in row] for row in grid.codes])
    r1s, r2s = grid.spec.r1_values, grid.spec.r2_values
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(
        r2s, r1s, data, cmap="tab10",
        vmin=-0.5, vmax=len(harness.ALL_CODES) - 0.5, shading="nearest",
    )
    bar = fig.colorbar(mesh, ticks=range(len(harness.ALL_CODES)))
    bar.ax.set_yticklabels(harness.ALL_CODES)
    ax.set_xlabel("r2")
    ax.set_ylabel("r1")
    ax.set_title("sweep categories")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _census_figure(table, path):
    plt = _matplotlib()
    labels = [f"{a}->{b}" for a, b in harness.TRANSITIONS]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(labels)), table.counts)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("count")
    ax.set_title(f"hierarchy changes (total {table.total})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _projection_figure(rows, c0, path):
    plt = _matplotlib()
    fig, ax = plt.subplots(figsize=(6, 5))
    for branch in sorted({row[0] for row in rows}):
        pts = [(r1, r2) for b, _, r1, r2 in rows if b == branch]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], ".", ms=2, label=branch)
    ax.set_xlabel("rho1")
    ax.set_ylabel("rho2")
    ax.set_title(f"allowed-region boundary, C0 = {c0:g}")
    ax.legend(markerscale=4, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _slice_figure(mu0_values, values, path):
    plt = _matplotlib()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(mu0_values, values)
    ax.set_xlabel("mu0")
    ax.set_ylabel("c_crit")
    ax.set_title("critical constant, equal outer pairs")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _surface_figure(mu0_values, mu1_values, surface, path):
    plt = _matplotlib()
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(mu1_values, mu0_values, surface, shading="nearest")
    fig.colorbar(mesh, label="c_crit")
    ax.set_xlabel("mu1")
    ax.set_ylabel("mu0")
    ax.set_title("critical constant surface")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


if __name__ == "__main__":
    main()
