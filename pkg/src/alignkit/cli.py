"""Command line entry point: ``alignkit <command> --spec PATH | --scenario NAME``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .abstraction import check_abstraction, check_intervention_isolation
from .alignment import alignment_report, check_block_alignment
from .config import settings
from .disentangle import content_style_check, disentanglement_verdict, empida_matrix
from .errors import AlignkitError, InputError, NotConvergedError, SpecError
from .instrumentation import configure_logging, get_logger, telemetry_store, timed
from .leakage import concept_leakage, coordinate_leakage, leakage_vs_content_style
from .scm import Assignment, Intervention, interventional_distribution, joint_distribution, topological_order
from .storage import ArtifactStorage
from .worlds import (
    Report,
    World,
    WorldSpec,
    build_world,
    builtin_scenario,
    emit_spec,
    input_digest,
    list_scenarios,
    parse_spec,
    render,
)

logger = get_logger()

EXIT_OK = 0
EXIT_VERDICT = 1


def _names(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def _load_spec(args: argparse.Namespace) -> tuple[WorldSpec, str | None]:
    if args.scenario:
        return builtin_scenario(args.scenario), args.scenario
    if args.spec:
        return parse_spec(Path(args.spec)), None
    raise InputError("missing input", "pass --spec PATH or --scenario NAME")


def _load(args: argparse.Namespace) -> tuple[World, str | None]:
    spec, scenario = _load_spec(args)
    return build_world(spec), scenario


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        path = ArtifactStorage().save_text(args.out, text)
        logger.info("report written to %s", path)
    else:
        sys.stdout.write(text)


def _report(args: argparse.Namespace, world: World | None, scenario: str | None, sections: dict[str, Any]) -> None:
    report = Report(
        version=__version__,
        command=args.command,
        scenario=scenario,
        input_digest=input_digest(world.spec) if world is not None else None,
        sections=sections,
        timings=telemetry_store.timings() if args.timings else None,
    )
    _emit(args, render(report, args.format))


def _eps(args: argparse.Namespace, world: World) -> float | None:
    return args.eps if args.eps is not None else world.spec.scenario.eps


def _divergence(args: argparse.Namespace, world: World) -> str | None:
    return args.divergence or world.spec.scenario.divergence


# -- commands ------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        world, scenario = _load(args)
    except SpecError as exc:
        for diagnostic in exc.diagnostics:
            print(f"error: {diagnostic}", file=sys.stderr)
        _report(args, None, args.scenario, {
            "validation": {"valid": False, "diagnostics": [d.model_dump() for d in exc.diagnostics]},
        })
        return exc.exit_code
    scms = {name: {"order": topological_order(scm)} for name, scm in world.scms.items()}
    _report(args, world, scenario, {"validation": {"valid": True, "diagnostics": [], "scms": scms}})
    return EXIT_OK


def _table_section(scm_name: str, table: Any) -> dict[str, Any]:
    return {
        "scm": scm_name,
        "scope": list(table.scope),
        "entries": [
            {"assignment": dict(zip(table.scope, labels)), "p": p} for labels, p in table.items()
        ],
    }


def _scm_name(world: World, name: str | None) -> str:
    scm = world.scm(name)
    return next(k for k, v in world.scms.items() if v is scm)


def cmd_joint(args: argparse.Namespace) -> int:
    world, scenario = _load(args)
    name = _scm_name(world, args.scm)
    with timed("joint"):
        table = joint_distribution(world.scms[name])
    _report(args, world, scenario, {"joint": _table_section(name, table)})
    return EXIT_OK


def cmd_intervene(args: argparse.Namespace) -> int:
    world, scenario = _load(args)
    name = _scm_name(world, args.scm)
    try:
        iv = Intervention(targets=Assignment.parse(args.do))
    except ValueError as exc:
        raise InputError("invalid intervention", str(exc).splitlines()[0]) from None
    with timed("intervene"):
        table = interventional_distribution(world.scms[name], iv, _names(args.query))
    section = _table_section(name, table)
    section["intervention"] = str(iv)
    _report(args, world, scenario, {"interventional": section})
    return EXIT_OK


def cmd_disentangle(args: argparse.Namespace) -> int:
    world, scenario = _load(args)
    gm = world.gm_system()
    d = _divergence(args, world)
    with timed("empida"):
        matrix = empida_matrix(gm, d, expectation=args.expectation)
    verdict = disentanglement_verdict(matrix, _eps(args, world))
    sections: dict[str, Any] = {
        "empida": {
            "factors": list(gm.factors),
            "targets": list(gm.targets),
            "matrix": matrix,
            "divergence": d or settings.divergence,
            "verdict": verdict,
        }
    }
    content = _names(args.content)
    if content:
        target = _names(args.target) or list(gm.targets)
        sections["content_style"] = {
            "content": content,
            "targets": target,
            "separated": content_style_check(gm, content, target, d, _eps(args, world), expectation=args.expectation),
        }
    _report(args, world, scenario, sections)
    return EXIT_OK if verdict.verdict or not args.assert_disentangled else EXIT_VERDICT


def cmd_align(args: argparse.Namespace) -> int:
    world, scenario = _load(args)
    gm = world.gm_system()
    interpretable = _names(args.interpretable) or world.spec.scenario.interpretable
    with timed("alignment"):
        report = alignment_report(
            gm,
            interpretable,
            _eps(args, world),
            _divergence(args, world),
            strict=args.strict,
            require_surjective=args.require_surjective,
            dci_lambda=args.dci_lambda,
            expectation=args.expectation,
        )
    sections: dict[str, Any] = {
        "alignment": report,
        "factors": list(gm.factors),
        "targets": list(gm.targets),
    }
    aligned = report.aligned
    blocks = world.block_structure()
    if blocks is not None:
        with timed("blocks"):
            block_report = check_block_alignment(gm, blocks, _divergence(args, world), _eps(args, world))
            isolation = check_intervention_isolation(gm, blocks, _divergence(args, world), _eps(args, world))
        sections["block_alignment"] = block_report
        sections["isolation"] = isolation
    _report(args, world, scenario, sections)
    return EXIT_VERDICT if args.assert_aligned and not aligned else EXIT_OK


def cmd_leakage(args: argparse.Namespace) -> int:
    world, scenario = _load(args)
    sc = world.leakage_scenario()
    tol = args.tol if args.tol is not None else world.spec.scenario.tol
    max_iter = args.max_iter if args.max_iter is not None else world.spec.scenario.max_iter
    keep = _names(args.keep)
    with timed("leakage"):
        if keep:
            result = coordinate_leakage(sc, keep, tol, max_iter, restarts=args.restarts, seed=args.seed)
        else:
            result = concept_leakage(sc, tol, max_iter, restarts=args.restarts, seed=args.seed)
        style_mi = leakage_vs_content_style(sc.restricted(keep) if keep else sc)
    sections = {
        "leakage": result,
        "style": list(sc.style),
        "content": list(sc.content),
        "mutual_information_m_style": style_mi,
    }
    _report(args, world, scenario, sections)
    if not result.converged:
        print(
            f"error: not converged: classifier ascent stopped after {result.iterations} iterations"
            f" (gap {result.duality_gap:.3e})",
            file=sys.stderr,
        )
        return NotConvergedError.exit_code
    if args.assert_leakage_below is not None and result.lambda_ > args.assert_leakage_below:
        return EXIT_VERDICT
    return EXIT_OK


def cmd_abstraction(args: argparse.Namespace) -> int:
    world, scenario = _load(args)
    case = world.abstraction_case()
    max_blocks = args.max_blocks if args.max_blocks is not None else world.spec.scenario.max_blocks
    with timed("abstraction"):
        report = check_abstraction(
            case, max_blocks, _eps(args, world), approximate=args.approximate, workers=args.workers
        )
    _report(args, world, scenario, {"abstraction": report})
    return EXIT_VERDICT if args.assert_commutes and not report.overall else EXIT_OK


def cmd_scenario(args: argparse.Namespace) -> int:
    if args.action == "list":
        _emit(args, "".join(f"{name}\n" for name in list_scenarios()))
        return EXIT_OK
    if not args.name:
        raise InputError("missing scenario", "scenario emit needs a NAME")
    _emit(args, emit_spec(builtin_scenario(args.name)))
    return EXIT_OK


# -- parser --------------------------------------------------------------


def _common(parser: argparse.ArgumentParser, *, source: bool = True) -> None:
    if source:
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--spec", help="Path to a JSON world spec.")
        group.add_argument("--scenario", help="Name of a builtin scenario.")
    parser.add_argument("--out", help="Write the report to this path instead of stdout.")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--timings", action="store_true", help="Include wall-clock timings.")


def _metric(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--divergence", choices=["tv", "kl", "mad"])
    parser.add_argument("--eps", type=float)
    parser.add_argument("--expectation", choices=["observational", "uniform"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alignkit", description="Exact alignment, leakage and abstraction checks.")
    parser.add_argument("--version", action="version", version=f"alignkit {__version__}")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> argparse.ArgumentParser:
        child = sub.add_parser(name, help=help_text)
        child.set_defaults(handler=handler)
        return child

    _common(add("validate", cmd_validate, "Parse and validate a spec."))

    joint = add("joint", cmd_joint, "Observational joint distribution of an SCM.")
    _common(joint)
    joint.add_argument("--scm", help="SCM name (defaults to the scenario's factor SCM).")

    intervene = add("intervene", cmd_intervene, "Interventional distribution p(. | do(...)).")
    _common(intervene)
    intervene.add_argument("--scm")
    intervene.add_argument("--do", required=True, help="Assignments such as 'A=1,B=0'.")
    intervene.add_argument("--query", help="Comma separated query variables.")

    disentangle = add("disentangle", cmd_disentangle, "EMPIDA matrix and disentanglement verdict.")
    _common(disentangle)
    _metric(disentangle)
    disentangle.add_argument("--content", help="Content factors for a content/style check.")
    disentangle.add_argument("--target", help="Representation block for the content/style check.")
    disentangle.add_argument("--assert-disentangled", action="store_true")

    align = add("align", cmd_align, "Alignment report (D1, D2, optional DCI and block checks).")
    _common(align)
    _metric(align)
    align.add_argument("--interpretable", help="Comma separated interpretable factors.")
    align.add_argument("--strict", action="store_true", help="Require monotonicity in every context.")
    align.add_argument("--require-surjective", action="store_true")
    align.add_argument("--dci-lambda", type=float, help="Also fit linear DCI with this L1 weight.")
    align.add_argument("--assert-aligned", action="store_true")

    leakage = add("leakage", cmd_leakage, "Concept leakage and its information bounds.")
    _common(leakage)
    leakage.add_argument("--keep", help="Comma separated representation coordinates to keep.")
    leakage.add_argument("--tol", type=float)
    leakage.add_argument("--max-iter", type=int)
    leakage.add_argument("--restarts", type=int, default=1)
    leakage.add_argument("--seed", type=int, default=0)
    leakage.add_argument("--assert-leakage-below", type=float, metavar="R")

    abstraction = add("abstraction", cmd_abstraction, "Aligned causal abstraction check.")
    _common(abstraction)
    abstraction.add_argument("--eps", type=float)
    abstraction.add_argument("--max-blocks", type=int)
    abstraction.add_argument("--approximate", action="store_true", help="Allow stochastic block maps.")
    abstraction.add_argument("--workers", type=int)
    abstraction.add_argument("--assert-commutes", action="store_true")

    scenario = add("scenario", cmd_scenario, "List or emit builtin scenarios.")
    scenario.add_argument("action", choices=["list", "emit"])
    scenario.add_argument("name", nargs="?")
    _common(scenario, source=False)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or settings.log_level)
    telemetry_store.reset()
    try:
        return args.handler(args)
    except AlignkitError as exc:
        print(f"error: {exc.reason}: {exc.detail}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
