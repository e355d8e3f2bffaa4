"""Command-line interface.

Subcommands run individual report sections or the whole study from one JSON
config.  Exit codes: 0 on success, 1 when a section fails, 2 on config
errors."""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click

from . import __version__
from .report import ConfigError, StudyConfig, run_study

_ALL_SECTIONS = ("genericity", "covering", "portraits", "actions", "twist",
                 "logring", "scaling", "budget", "kam")


def _load(config: str, seed: int | None) -> StudyConfig:
    cfg = StudyConfig.from_file(config)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def _run(cfg: StudyConfig, out: str, only: tuple[str, ...] | None) -> None:
    if only is not None:
        sections = {name: (name in only and cfg.section_enabled(name))
                    for name in _ALL_SECTIONS}
        cfg = dataclasses.replace(cfg, sections=sections)
    result = run_study(cfg, out)
    for name, info in result.sections.items():
        status = info.get("status", "?")
        click.echo(f"[{status:>7}] {name}")
        if status == "failed":
            click.echo(f"          {info.get('error', '')}", err=True)
    click.echo(f"summary: {result.summary_path}")
    if not result.ok:
        sys.exit(1)


def _common(fn):
    fn = click.option("--config", required=True, type=click.Path(),
                      help="study configuration (JSON)")(fn)
    fn = click.option("--out", default="out", show_default=True,
                      type=click.Path(), help="output directory")(fn)
    fn = click.option("--seed", default=None, type=click.IntRange(min=0),
                      help="override the Monte Carlo seed")(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="kam-atlas")
def main():
    """Resonance coverings, secular portraits, actions near separatrices,
    and twist certificates for natural Hamiltonians."""


def _section_command(name: str, sections: tuple[str, ...], doc: str):
    @main.command(name)
    @_common
    def cmd(config, out, seed):
        try:
            cfg = _load(config, seed)
        except ConfigError as err:
            click.echo(f"config error: {err}", err=True)
            sys.exit(2)
        _run(cfg, out, sections)

    cmd.__doc__ = doc
    return cmd


_section_command("check-potential", ("genericity",),
                 "Verify the genericity conditions of the potential.")
_section_command("cover", ("covering",),
                 "Measure the resonance-zone covering by seeded Monte Carlo.")
_section_command("portrait", ("portraits",),
                 "Decompose secular phase portraits per generator.")
_section_command("actions", ("actions",),
                 "Action profiles and separatrix-expansion fits.")
_section_command("twist", ("twist",),
                 "Twist fields and non-degeneracy certificates.")
_section_command("logring", ("logring",),
                 "Expand the separatrix differential operator exactly.")


@main.command()
@_common
def study(config, out, seed):
    """Run the full report bundle (all sections enabled in the config)."""
    try:
        cfg = _load(config, seed)
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(2)
    _run(cfg, out, None)


if __name__ == "__main__":
    main()
