"""The `geochallenge` command: pipeline runs, key-space and ROC analysis,
simulation, an interactive drill, and the HTTP service.

Exit codes: 0 success, 1 domain error (bad data, unattainable request),
2 usage error. Shared options sit on the group and may equally come from
a config file (--config) or GEOCHALLENGE_* environment variables;
precedence is defaults < file < environment < flags. `geochallenge config`
prints the effective merged configuration.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import analysis, challenge, sim
from .config import CliConfig, resolve_config
from .errors import GeoChallengeError
from .geo import GeoPoint
from .trace import ingest_trace, locations_from_csv, locations_to_csv, run_pipeline

_SHARED_OPTIONS = [
    ("--config", "config_path", str, "Config file (key = value)"),
    ("--radius-km", "radius_km", float, "Answer area radius in km"),
    ("--margin-m", "margin_m", float, "Answer acceptance margin in meters"),
    ("--questions", "questions", int, "Questions per challenge"),
    ("--required-correct", "required_correct", int, "Correct answers required"),
    ("--dwell-min", "dwell_min", float, "Minimum dwell duration in minutes"),
    ("--unique-m", "unique_m", float, "Uniqueness separation in meters"),
    ("--max-dwell-h", "max_dwell_h", float, "Predictability cutoff in hours"),
    ("--seed", "seed", int, "Random seed"),
    ("--data-dir", "data_dir", str, "Service data directory"),
    ("--listen", "listen", str, "Service listen address host:port"),
]


def _attach_shared(group: click.Group) -> click.Group:
    for flag, name, kind, help_text in reversed(_SHARED_OPTIONS):
        group = click.option(flag, name, type=kind, default=None, help=help_text)(group)
    return group


@click.group()
@click.pass_context
def main(ctx: click.Context, config_path: str | None, **flags):
    """Location-challenge toolkit: trace pipeline, challenge drills,
    security analysis, simulation, and the verifier service."""

    try:
        ctx.obj = resolve_config(config_file=config_path, flags=flags)
    except (ValueError, OSError) as exc:
        raise click.UsageError(str(exc))


main = _attach_shared(main)


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@main.command("config")
@click.pass_obj
def cmd_config(cfg: CliConfig):
    """Print the effective configuration (key = value)."""

    click.echo(cfg.dump(), nl=False)


@main.command("ingest")
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the logged-locations CSV here (default stdout)")
@click.pass_obj
def cmd_ingest(cfg: CliConfig, trace_path: str, out_path: str | None):
    """Run the pipeline over a trace file; emit logged locations as CSV."""

    try:
        fixes = ingest_trace(Path(trace_path).read_bytes())
        result = run_pipeline(fixes, cfg.pipeline_params())
    except GeoChallengeError as exc:
        _fail(exc)
    click.echo(f"fixes: {result.fixes_in}", err=True)
    click.echo(f"dwells: {len(result.dwells)}", err=True)
    click.echo(f"unique_locations: {len(result.locations)}", err=True)
    click.echo(f"eligible: {len(result.eligible)}", err=True)
    csv_text = locations_to_csv(result.eligible)
    if out_path:
        Path(out_path).write_text(csv_text)
        click.echo(f"wrote {out_path}", err=True)
    else:
        click.echo(csv_text, nl=False)


@main.command("keyspace")
@click.pass_obj
def cmd_keyspace(cfg: CliConfig):
    """Estimate the key space for the configured geometry."""

    try:
        est = analysis.estimate_keyspace(
            radius_km=cfg.radius_km,
            margin_m=cfg.margin_m,
            questions=cfg.questions,
            required_correct=cfg.required_correct,
        )
    except (GeoChallengeError, ValueError) as exc:
        _fail(exc)
    click.echo(f"radius_km: {est.radius_km}")
    click.echo(f"margin_m: {est.margin_m}")
    click.echo(f"cells: {est.cells}")
    click.echo(f"questions: {est.questions}")
    click.echo(f"required_correct: {est.required_correct}")
    click.echo(f"keyspace_bits: {est.log2_keyspace:.2f} bits")


@main.command("roc")
@click.argument("records_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def cmd_roc(cfg: CliConfig, records_path: str):
    """ROC table and criteria report from a response-record CSV."""

    try:
        records = analysis.records_from_csv(Path(records_path).read_text())
        roc = analysis.compute_roc(records)
        est = analysis.estimate_keyspace(
            radius_km=cfg.radius_km,
            margin_m=cfg.margin_m,
            questions=cfg.questions,
            required_correct=cfg.required_correct,
        )
        report = analysis.criteria_report(
            est,
            roc,
            threshold=cfg.required_correct,
            guesses_per_day=cfg.guesses_per_day,
            days=cfg.attack_days,
        )
    except (GeoChallengeError, ValueError, KeyError) as exc:
        _fail(exc)
    click.echo(analysis.roc_to_csv(roc), nl=False)
    click.echo("")
    click.echo(report.render(), nl=False)


@main.command("simulate")
@click.argument("experiment_config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Directory for report.csv and records.csv")
@click.pass_obj
def cmd_simulate(cfg: CliConfig, experiment_config: str, out_dir: str):
    """Run a seeded experiment from a config file; write report CSVs."""

    try:
        exp = sim.ExperimentConfig.from_text(Path(experiment_config).read_text())
        report = sim.run_configured_experiment(exp)
    except (GeoChallengeError, ValueError) as exc:
        _fail(exc)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "records.csv").write_text(analysis.records_to_csv(report.records))
    click.echo(f"sessions: {report.sessions}")
    click.echo(f"mean_user_score: {report.mean_user_score:.4f}")
    click.echo(f"mean_adv_score: {report.mean_adv_score:.4f}")
    click.echo(f"wrote {out / 'report.csv'} and {out / 'records.csv'}")


@main.command("drill")
@click.argument("locations_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def cmd_drill(cfg: CliConfig, locations_path: str):
    """Practice a challenge in the terminal against a locations CSV.

    Answers are entered as `lat,lon` per question.
    """

    try:
        locations = locations_from_csv(Path(locations_path).read_text())
        session = challenge.generate_challenge(
            locations,
            count=cfg.questions,
            margin_m=cfg.margin_m,
            threshold=cfg.required_correct,
        )
    except (GeoChallengeError, ValueError) as exc:
        _fail(exc)

    for question in session.questions:
        click.echo(f"[{question.index + 1}/{len(session.questions)}] {question.prompt_text}")
        while True:
            raw = click.prompt("lat,lon", type=str)
            try:
                lat_text, lon_text = raw.split(",", 1)
                point = GeoPoint(float(lat_text), float(lon_text))
                break
            except ValueError as exc:
                click.echo(f"invalid answer: {exc}", err=True)
        session = challenge.submit_answer(
            session,
            challenge.Answer(question.index, point, _utcnow()),
        )
    click.echo(f"score: {challenge.score(session)}/{len(session.questions)}")
    click.echo(f"decision: {session.decision}")


def _utcnow():
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).replace(microsecond=0)


@main.command("serve")
@click.pass_obj
def cmd_serve(cfg: CliConfig):
    """Run the challenge service until interrupted."""

    import uvicorn

    from .service import create_app

    host, _, port_text = cfg.listen.partition(":")
    try:
        port = int(port_text) if port_text else 8000
    except ValueError:
        raise click.UsageError(f"invalid listen address {cfg.listen!r}")
    app = create_app(cfg.data_dir, config=cfg)
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=port, log_level="warning")
    except (OSError, SystemExit) as exc:
        if isinstance(exc, SystemExit) and not exc.code:
            return
        _fail(f"cannot listen on {cfg.listen}: {exc}")


if __name__ == "__main__":
    main()
