"""Command-line driver: benchmark sweeps, session replays, case scaffolding,
and the HTTP service.

Every flag can also be set through an environment variable prefixed
PROMPTELICIT_ (for example PROMPTELICIT_BENCH_RUNS=3). A bench run writes
its effective configuration next to its outputs so any result directory
is self-describing.
"""

from __future__ import annotations

from pathlib import Path

import click

from .cases import write_case_files
from .config import load_settings
from .engine import Budget
from .errors import ConfigError, PromptElicitError
from .journal import canonical_json
from .oracles import LiveOracleBackend, LiveRenderer
from .reports import (CURVE_COLUMNS, SUMMARY_COLUMNS, aggregate_curves,
                      final_summary, plot_curves, write_csv, write_results_csv,
                      write_summary_table)
from .session import replay_session
from .simulation import STRATEGIES, load_cases, run_benchmark

CONTEXT_SETTINGS = {"auto_envvar_prefix": "PROMPTELICIT", "help_option_names": ["-h", "--help"]}


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(package_name="promptelicit")
def main() -> None:
    """Adaptive prompt elicitation: benchmark, replay, and serve."""


@main.command()
@click.option("--cases", "case_paths", multiple=True, required=True,
              type=click.Path(), help="Case file or directory of *.json cases (repeatable).")
@click.option("--strategies", default=",".join(STRATEGIES), show_default=True,
              help="Comma-separated strategy list.")
@click.option("--runs", default=5, show_default=True, help="Runs per (case, strategy).")
@click.option("--max-iters", default=15, show_default=True, help="Iteration budget per run.")
@click.option("--backend", type=click.Choice(["scripted", "live"]), default="scripted",
              show_default=True)
@click.option("--seed", default=0, show_default=True, help="Base seed for run-seed derivation.")
@click.option("--out", default="./bench_out", show_default=True, type=click.Path())
@click.option("--parallel", default=1, show_default=True, help="Concurrent runs.")
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="Settings file (needed for --backend live endpoints).")
def bench(case_paths, strategies, runs, max_iters, backend, seed, out, parallel,
          config_path) -> None:
    """Run the simulated-user benchmark and write results, curves, and figures."""
    try:
        cases = load_cases(case_paths)
        strategy_list = [s.strip() for s in strategies.split(",") if s.strip()]
        budget = Budget(max_iterations=max_iters)
        stack_factory = None
        if backend == "live":
            settings = load_settings(config_path)
            if settings.backend != "live":
                raise ConfigError("--backend live requires live endpoints in the config file")
            live = settings.live_settings()
            out_media = Path(out) / "media"

            def stack_factory(case, run_seed, journal):  # noqa: F811
                oracle = LiveOracleBackend(live, journal=journal)
                renderer = LiveRenderer(live, media_dir=out_media, journal=journal)
                return oracle, renderer

        result = run_benchmark(cases, strategy_list, runs, budget, base_seed=seed,
                               parallel=parallel, stack_factory=stack_factory)
    except (PromptElicitError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(result.rows, out_dir / "results.csv")
    curves = aggregate_curves(result.rows)
    write_csv(curves, CURVE_COLUMNS, out_dir / "curves.csv")
    summary = final_summary(result.rows)
    write_csv(summary, SUMMARY_COLUMNS, out_dir / "summary.csv")
    write_summary_table(summary, out_dir / "summary_table.csv")
    figures = plot_curves(curves, out_dir)
    effective = {
        "cases": [c.case_id for c in cases],
        "strategies": strategy_list,
        "runs_per_case": runs,
        "budget": budget.to_record(),
        "backend": backend,
        "seed": seed,
        "parallel": parallel,
    }
    (out_dir / "effective_config.json").write_text(canonical_json(effective) + "\n",
                                                   encoding="utf-8")
    report = {"completed_runs": result.completed, "failed_runs": result.failed,
              "result_rows": len(result.rows),
              "figures": [f.name for f in figures]}
    (out_dir / "run_report.json").write_text(canonical_json(report) + "\n",
                                             encoding="utf-8")
    click.echo(f"completed {result.completed} runs "
               f"({result.failed} with failures); outputs in {out_dir}")
    for line in open(out_dir / "summary_table.csv", encoding="utf-8"):
        click.echo("  " + line.rstrip())
    if result.failed and not result.completed:
        raise click.ClickException("every run failed")


@main.command()
@click.argument("session_dirs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
def replay(session_dirs) -> None:
    """Replay recorded sessions against their journals and verify byte equality."""
    failures = 0
    for raw in session_dirs:
        try:
            report = replay_session(raw)
        except (FileNotFoundError, ValueError, PromptElicitError) as exc:
            click.echo(f"{raw}: ERROR {exc}")
            failures += 1
            continue
        if report.ok:
            click.echo(f"{raw}: ok")
        else:
            failures += 1
            click.echo(f"{raw}: MISMATCH {report.detail}".rstrip())
            diff = report.diff()
            if diff:
                click.echo(diff)
    if failures:
        raise click.ClickException(f"{failures} of {len(session_dirs)} sessions failed replay")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8601, show_default=True)
@click.option("--sessions-dir", default="./sessions", show_default=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="Directory of web UI assets to serve at /.")
@click.option("--config", "config_path", default=None, type=click.Path())
def serve(host, port, sessions_dir, seed, static_dir, config_path) -> None:
    """Start the session HTTP service."""
    import uvicorn

    from .service import build_app_from_settings

    try:
        settings = load_settings(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    app = build_app_from_settings(settings, sessions_dir=sessions_dir, seed=seed,
                                  static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("make-cases")
@click.option("--out", default="./cases", show_default=True, type=click.Path())
def make_cases(out) -> None:
    """Write the bundled benchmark cases as editable JSON files."""
    written = write_case_files(out)
    for path in written:
        click.echo(str(path))
    click.echo(f"wrote {len(written)} case files to {out}")


if __name__ == "__main__":
    main()
