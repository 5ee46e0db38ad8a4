"""Command-line entry points for suite generation and verification."""

from __future__ import annotations

import hashlib
import json
import os
import sys

import click


@click.group()
def main():
    """Generate and verify the bundled molecular data files."""


@main.command()
@click.option("--outdir", required=True, type=click.Path(file_okay=False))
@click.option("--jobs", default=1, show_default=True, help="Parallel SCF workers.")
@click.option(
    "--molecule", "molecules", multiple=True,
    help="Restrict to named molecules (repeatable; default: all).",
)
def generate(outdir, jobs, molecules):
    """Run SCF for the whole suite and write FCIDUMP files + manifest."""
    from .scf import SCFError
    from .suite import generate_suite

    try:
        manifest = generate_suite(outdir, jobs=jobs, names=list(molecules) or None)
    except (SCFError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    n = sum(len(m["points"]) for m in manifest["molecules"].values())
    click.echo(f"wrote {n} dumps for {len(manifest['molecules'])} molecules to {outdir}")


@main.command()
@click.option("--outdir", required=True, type=click.Path(exists=True, file_okay=False))
def verify(outdir):
    """Recompute checksums of an emitted directory against SHA256SUMS."""
    sums_path = os.path.join(outdir, "SHA256SUMS")
    ok = True
    with open(sums_path) as f:
        for line in f:
            digest, fname = line.split()
            with open(os.path.join(outdir, fname), "rb") as g:
                actual = hashlib.sha256(g.read()).hexdigest()
            if actual != digest:
                click.echo(f"MISMATCH {fname}")
                ok = False
    if not ok:
        sys.exit(2)
    click.echo("all checksums match")


@main.command("show")
@click.option("--outdir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--molecule", required=True)
def show(outdir, molecule):
    """Print the manifest entries for one molecule."""
    with open(os.path.join(outdir, "suite_manifest.json")) as f:
        manifest = json.load(f)
    if molecule not in manifest["molecules"]:
        click.echo(f"error: no molecule {molecule}", err=True)
        sys.exit(2)
    click.echo(json.dumps(manifest["molecules"][molecule], indent=1))


if __name__ == "__main__":
    main()
