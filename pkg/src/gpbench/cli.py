"""Command-line frontend.

Configs are JSON files; ``--set key.path=value`` overrides are spliced
into the parsed document before validation, so a typo in an override is
rejected exactly like a typo in the file.  By default everything runs
in-process; ``--server URL`` turns the same commands into HTTP calls
against a running service.

Exit codes: 0 on success, 1 when a single run finishes without reaching
the ideal, 2 for configuration and usage errors.  No other codes are
emitted.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import httpx
from pydantic import ValidationError

from . import harness
from .blackbox import ParseError
from .core import ConfigurationError
from .schemas import BenchmarkReport, CatalogueResponse, ExperimentConfig

WORKERS_ENV = "GPBENCH_WORKERS"

EXIT_OK = 0
EXIT_NO_SUCCESS = 1
EXIT_ERROR = 2

log = logging.getLogger(__name__)


# -- config loading --------------------------------------------------------------

def _coerce_override(raw: str):
    """Overrides are JSON literals; bare words fall back to strings so
    `--set problem.name=koza1` works without quote gymnastics."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(data: dict, assignment: str) -> None:
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ConfigurationError(f"--set expects KEY=VALUE, got {assignment!r}")
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        elif not isinstance(child, dict):
            raise ConfigurationError(
                f"cannot set {key!r}: {part!r} is not a config section"
            )
        node = child
    node[parts[-1]] = _coerce_override(raw)


def _describe_validation_error(exc: ValidationError) -> str:
    problems = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "config"
        problems.append(f"{loc}: {err['msg']}")
    return "invalid config: " + "; ".join(problems)


def load_config(path: str, overrides: list[str]) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: config root must be a JSON object")
    for assignment in overrides:
        apply_override(data, assignment)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_describe_validation_error(exc)) from exc


# -- execution clients -----------------------------------------------------------

class LocalClient:
    """Run everything in-process; no server required."""

    def catalogue(self, domain: Optional[str]) -> CatalogueResponse:
        return harness.catalogue(domain)

    def run(self, config: ExperimentConfig) -> BenchmarkReport:
        return harness.run_single(config)

    def bench(self, config: ExperimentConfig, workers: int) -> BenchmarkReport:
        return harness.run_experiment(config, workers=workers)


class HttpClient:
    """Same interface, but every call goes to a running service."""

    def __init__(self, base_url: str):
        self.base = base_url.rstrip("/")

    def _request(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            response = httpx.request(
                method, self.base + path, timeout=None, **kwargs
            )
        except httpx.HTTPError as exc:
            raise ConfigurationError(
                f"cannot reach server at {self.base}: {exc}"
            ) from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except (ValueError, AttributeError):
                detail = response.text
            raise ConfigurationError(
                f"server rejected request ({response.status_code}): {detail}"
            )
        return response

    def catalogue(self, domain: Optional[str]) -> CatalogueResponse:
        params = {} if domain is None else {"domain": domain}
        response = self._request("GET", "/catalogue", params=params)
        return CatalogueResponse.model_validate(response.json())

    @staticmethod
    def _payload(config: ExperimentConfig) -> dict:
        # exclude_unset keeps "not configured" distinguishable from an
        # explicit null once the server re-validates the document
        return config.model_dump(mode="json", exclude_unset=True)

    def run(self, config: ExperimentConfig) -> BenchmarkReport:
        response = self._request("POST", "/run", json=self._payload(config))
        return BenchmarkReport.model_validate(response.json())

    def bench(self, config: ExperimentConfig, workers: int) -> BenchmarkReport:
        response = self._request(
            "POST", "/bench", json=self._payload(config),
            params={"workers": workers},
        )
        return BenchmarkReport.model_validate(response.json())


def _make_client(args):
    return HttpClient(args.server) if args.server else LocalClient()


def resolve_workers(args) -> int:
    """--workers wins; otherwise the environment default; otherwise 1."""
    if args.workers is not None:
        value = args.workers
    else:
        env = os.environ.get(WORKERS_ENV)
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigurationError(
                f"{WORKERS_ENV} must be an integer, got {env!r}"
            ) from None
    if value < 1:
        raise ConfigurationError("worker count must be at least 1")
    return value


# -- subcommands -----------------------------------------------------------------

def _apply_output_flags(config: ExperimentConfig, args) -> None:
    if args.output is not None:
        config.run.output = args.output
    if args.format is not None:
        config.run.format = args.format


def _write_report_file(report: BenchmarkReport, config: ExperimentConfig) -> None:
    if config.run.output is None:
        return
    text = harness.render_report(report, config.run.format)
    Path(config.run.output).write_text(text)
    print(f"report written to {config.run.output}")


def cmd_list(args) -> int:
    response = _make_client(args).catalogue(args.domain)
    sys.stdout.write(response.text)
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config, args.set)
    _apply_output_flags(config, args)
    report = _make_client(args).run(config)
    record = report.runs[0]
    print(f"problem: {report.problem}")
    print(f"model: {report.representation} ({report.scheme}), seed {record.seed}")
    print(f"best cost: {record.best_cost!r}")
    print(f"evaluations: {record.evaluations_used}")
    print("best expression:")
    for line in record.best_expression.splitlines():
        print(f"  {line}")
    _write_report_file(report, config)
    return EXIT_OK if record.success else EXIT_NO_SUCCESS


def cmd_bench(args) -> int:
    config = load_config(args.config, args.set)
    _apply_output_flags(config, args)
    report = _make_client(args).bench(config, resolve_workers(args))
    agg = report.aggregates
    median_ts = (
        "na"
        if agg.median_evaluations_to_success is None
        else repr(agg.median_evaluations_to_success)
    )
    print(
        f"runs={len(report.runs)} "
        f"success_rate={agg.success_rate!r} "
        f"median_best_cost={agg.median_best_cost!r} "
        f"median_evaluations_to_success={median_ts} "
        f"mean_wall_ms={agg.mean_wall_ms:.1f}"
    )
    _write_report_file(report, config)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(
        "gpbench.service:app",
        host=args.host,
        port=args.port,
        log_level="info" if args.verbose else "warning",
    )
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, metavar="PATH",
                        help="JSON experiment config")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (repeatable)")
    parser.add_argument("--output", metavar="PATH",
                        help="report destination (overrides run.output)")
    parser.add_argument("--format", choices=("json", "csv"),
                        help="report format (overrides run.format)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpbench",
        description="benchmark runner for tree- and grid-based program evolution",
    )
    parser.add_argument("--verbose", action="store_true",
                        help="per-generation progress on stderr")
    parser.add_argument("--server", metavar="URL",
                        help="send commands to a running service instead of "
                             "executing in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="show the built-in problem catalogue")
    p_list.add_argument("--domain", metavar="NAME",
                        help="restrict to one domain")
    p_list.set_defaults(handler=cmd_list)

    p_run = sub.add_parser("run", help="execute a single seeded run")
    _add_config_flags(p_run)
    p_run.set_defaults(handler=cmd_run)

    p_bench = sub.add_parser("bench", help="execute the full repetition battery")
    _add_config_flags(p_bench)
    p_bench.add_argument("--workers", type=int, metavar="N",
                         help=f"parallel runs (default ${WORKERS_ENV} or 1)")
    p_bench.set_defaults(handler=cmd_bench)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (ConfigurationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # exit-code contract: nothing may leak past 2
        log.debug("unexpected failure", exc_info=True)
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
