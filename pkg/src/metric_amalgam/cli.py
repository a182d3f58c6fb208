"""
Command line interface: one subcommand per library operation.

Reports go to stdout (or --output) as JSON; domain errors go to stderr as
{"error", "message", "details"} with exit code 1; usage errors exit with 2.
Identical arguments, input files and --seed give byte-identical reports
unless --timing is requested.
"""

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

from loguru import logger
from pydantic import ValidationError

from metric_amalgam import __version__
from metric_amalgam.amalgam_logic.config import RunConfig
from metric_amalgam.amalgam_logic.core import (
    EmbeddingMode,
    capped_sup_dist,
    diam,
    kuratowski,
    min_cap,
    min_sep,
    restrict,
    scale,
    sup_dist,
)
from metric_amalgam.amalgam_logic.cycle_condition import cycl0_check
from metric_amalgam.amalgam_logic.documents import file_digest, load_family, load_metric
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.genericity import (
    RichnessQuery,
    block_space,
    perturb_to_anti,
    richness_search,
    singular_witness,
)
from metric_amalgam.amalgam_logic.gluing import (
    amalgam_disjoint,
    amalgam_shared,
    bridge_double,
    disjoint_sum,
)
from metric_amalgam.amalgam_logic.inequalities import (
    check_inequality,
    hyperbolicity_delta,
    make_descriptor,
    ptolemy_defect,
    ultrametric_defect,
)
from metric_amalgam.amalgam_logic.interpolation import interpolate
from metric_amalgam.amalgam_logic.registry import ParameterFactory
from metric_amalgam.amalgam_logic.transmissible import (
    doubling_check,
    parse_assignments,
    satisfies_property,
    ud_modulus,
)
from metric_amalgam.utils.logging.amalgam_logger import setup_logger
from metric_amalgam.utils.scalar import parse_scalar, to_jsonable

PROPERTIES = ParameterFactory.NAMES


class _Run:
    """
    State of one invocation: parsed arguments, settings and the input digests.
    """

    def __init__(self, args: argparse.Namespace, config: RunConfig) -> None:
        self.args = args
        self.config = config
        self.inputs: dict[str, str] = {}
        self.exact = True

    def metric(self, path: str):
        self.inputs[path] = file_digest(path)
        return load_metric(path)

    def family(self, path: str, part_paths: list[str] | None = None):
        self.inputs[path] = file_digest(path)
        for part_path in part_paths or []:
            self.inputs[part_path] = file_digest(part_path)
        return load_family(path, part_paths)

    @property
    def factory(self) -> ParameterFactory:
        return ParameterFactory(self.config, self.config.cycl0)

    def options(self) -> dict[str, Any]:
        """Descriptor options from --param, --expr and --arity."""
        options: dict[str, Any] = dict(parse_assignments(self.args.param or ""))
        if getattr(self.args, "expr", None):
            options["expr"] = self.args.expr
        if getattr(self.args, "arity", None) is not None:
            options["arity"] = self.args.arity
        return options


# ===============================================================================
# COMMANDS
# ===============================================================================

def _labels(text: str | None) -> list[str] | None:
    return [label.strip() for label in text.split(",") if label.strip()] if text else None


def cmd_validate(run: _Run) -> Any:
    d = run.metric(run.args.file)
    return {"valid": True, "points": d.size, "diam": diam(d), "min_sep": min_sep(d) if d.size > 1 else None}


def cmd_dist(run: _Run) -> Any:
    d, e = run.metric(run.args.first), run.metric(run.args.second)
    result: dict[str, Any] = {"sup_dist": sup_dist(d, e)}
    if run.args.capped:
        result["capped_sup_dist"] = capped_sup_dist(d, e)
    return result


def cmd_diam(run: _Run) -> Any:
    d = run.metric(run.args.file)
    return {"diam": diam(d, _labels(run.args.subset))}


def cmd_restrict(run: _Run) -> Any:
    d = run.metric(run.args.file)
    return restrict(d, _labels(run.args.subset) or [])


def cmd_scale(run: _Run) -> Any:
    d = run.metric(run.args.file)
    return min_cap(d, run.args.c) if run.args.cap else scale(d, run.args.c)


def cmd_glue_bridge(run: _Run) -> Any:
    return bridge_double(run.metric(run.args.first), run.metric(run.args.second), run.args.r)


def cmd_glue_shared(run: _Run) -> Any:
    return amalgam_shared(run.metric(run.args.first), run.metric(run.args.second))


def cmd_glue_disjoint(run: _Run) -> Any:
    return amalgam_disjoint(run.metric(run.args.first), run.metric(run.args.second), run.args.r,
                            run.args.anchor_a, run.args.anchor_b)


def cmd_glue_sum(run: _Run) -> Any:
    return disjoint_sum([run.metric(path) for path in run.args.files])


def cmd_interpolate(run: _Run) -> Any:
    d = run.metric(run.args.base)
    family, targets = run.family(run.args.family, run.args.parts)
    result = interpolate(d, family, targets, threads=run.config.threads)
    payload = result.to_dict()
    if run.args.trace and result.trace is not None:
        payload["gluing"] = result.trace.gluing.to_dict()
    return payload


def cmd_check(run: _Run) -> Any:
    args, config = run.args, run.config
    d = run.metric(args.file)
    options = run.options()
    if args.verdict:
        parameter = run.factory.create(args.property, **options)
        run.exact = parameter.name != "cycl0"
        return satisfies_property(parameter, d, args.q_budget or config.q_budget)

    threads = config.threads
    if args.property == "ultrametric":
        return ultrametric_defect(d, threads)
    if args.property == "ptolemy":
        return ptolemy_defect(d, threads)
    if args.property == "hyperbolicity":
        if "delta" in options:
            return check_inequality(make_descriptor("hyperbolicity", **options), d, threads)
        return hyperbolicity_delta(d, threads)
    if args.property == "doubling":
        if "C" not in options or "alpha" not in options:
            raise MetricError(ErrorCode.INVALID_INDEX, "check doubling needs --param C=..,alpha=..")
        max_subset = None if config.exhaustive else config.max_subset
        return doubling_check(d, options["C"], options["alpha"], max_subset, threads)
    if args.property == "ud":
        return ud_modulus(d, None if config.exhaustive else config.max_chain)
    if args.property == "cycl0":
        run.exact = False
        if args.tuple:
            return cycl0_check(d, _labels(args.tuple) or [], config=config.cycl0)
        return check_inequality(make_descriptor("cycl0", config.cycl0, **options), d, threads)
    if args.property == "inequality":
        return check_inequality(make_descriptor("inequality", **options), d, threads)
    raise MetricError(ErrorCode.UNKNOWN_PARAMETER, f"check does not support {args.property!r}.",
                      name=args.property)


def cmd_witness(run: _Run) -> Any:
    parameter = run.factory.create(run.args.property, **run.options())
    run.exact = parameter.name != "cycl0"
    q = run.factory.parse_q(parameter, run.args.q)
    return singular_witness(parameter, q, run.args.eps, run.args.cardinality)


def cmd_blockspace(run: _Run) -> Any:
    parameter = run.factory.create(run.args.property, **run.options())
    run.exact = parameter.name != "cycl0"
    return block_space(parameter, run.args.eps, run.args.blocks)


def cmd_perturb(run: _Run) -> Any:
    d = run.metric(run.args.file)
    parameter = run.factory.create(run.args.property, **run.options())
    run.exact = parameter.name != "cycl0"
    q = run.factory.parse_q(parameter, run.args.q)
    return perturb_to_anti(d, run.args.eps, parameter, q, threads=run.config.threads)


def cmd_richness(run: _Run) -> Any:
    d = run.metric(run.args.file)
    target = run.metric(run.args.target)
    query = RichnessQuery(target, parse_scalar(run.args.eps),
                          parse_scalar(run.args.scale) if run.args.scale else None)
    budget = None if run.config.exhaustive else run.config.subset_budget
    return richness_search(d, query, budget, threads=run.config.threads)


def cmd_embed(run: _Run) -> Any:
    d = run.metric(run.args.file)
    return kuratowski(d, EmbeddingMode(run.args.mode), run.args.base)


# ===============================================================================
# PARSER
# ===============================================================================

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with run settings (flags take precedence).")
    common.add_argument("--log-level", dest="log_level", default=None, help="Console log level (default WARNING).")
    common.add_argument("--seed", type=int, default=None, help="Seed for randomised stages (default 0).")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (default 1); 0 uses every core.")
    common.add_argument("--tol", type=float, default=None, help="Cycle-condition slack tolerance.")
    common.add_argument("--restarts", type=int, default=None, help="Cycle-condition solver starts.")
    common.add_argument("--max-subset", dest="max_subset", type=int, default=None, help="Doubling subset cap.")
    common.add_argument("--max-chain", dest="max_chain", type=int, default=None, help="UD chain length cap.")
    common.add_argument("--budget", type=int, default=None, help="Richness subset budget.")
    common.add_argument("--exhaustive", action="store_true", default=None, help="Ignore scan caps.")
    common.add_argument("--timing", action="store_true", default=None, help="Add wall-clock timing to the report.")
    common.add_argument("--output", help="Write the report to a file instead of stdout.")
    return common


def _parameter_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--param", help="Parameter options, e.g. C=2,alpha=1 | delta=1 | m=5.")
    parser.add_argument("--expr", help="User inequality f over x_i_j (property 'inequality').")
    parser.add_argument("--arity", type=int, help="Arity n of the user inequality.")


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser with every subcommand.
    """
    common = _common_options()
    parser = argparse.ArgumentParser(prog="metric-amalgam", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler: Callable[[_Run], Any], help_text: str) -> argparse.ArgumentParser:
        command = sub.add_parser(name, parents=[common], help=help_text)
        command.set_defaults(handler=handler)
        return command

    p = add("validate", cmd_validate, "Validate a metric document.")
    p.add_argument("file")

    p = add("dist", cmd_dist, "Sup distance between two metrics on the same points.")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--capped", action="store_true", help="Also report min(1, sup distance).")

    p = add("diam", cmd_diam, "Diameter of the space or of a subset.")
    p.add_argument("file")
    p.add_argument("--subset", help="Comma separated labels.")

    p = add("restrict", cmd_restrict, "Induced metric on a subset.")
    p.add_argument("file")
    p.add_argument("--subset", required=True, help="Comma separated labels.")

    p = add("scale", cmd_scale, "Scale a metric by c, or truncate it at c with --cap.")
    p.add_argument("file")
    p.add_argument("--c", required=True)
    p.add_argument("--cap", action="store_true", help="Return min(d, c) instead of c * d.")

    p = add("glue-bridge", cmd_glue_bridge, "Bridged double of two metrics on the same points.")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--r", required=True)

    p = add("glue-shared", cmd_glue_shared, "Amalgamate two metrics agreeing on their common points.")
    p.add_argument("first")
    p.add_argument("second")

    p = add("glue-disjoint", cmd_glue_disjoint, "Amalgamate metrics on disjoint points at separation r.")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--r", required=True)
    p.add_argument("--anchor-a", dest="anchor_a")
    p.add_argument("--anchor-b", dest="anchor_b")

    p = add("glue-sum", cmd_glue_sum, "Disjoint sum of several metrics.")
    p.add_argument("files", nargs="+")

    p = add("interpolate", cmd_interpolate, "Interpolate target metrics on disjoint parts.")
    p.add_argument("base")
    p.add_argument("family")
    p.add_argument("--part", dest="parts", action="append", default=None, metavar="FILE",
                   help="Metric document of the next listed part (repeat once per part, in order).")
    p.add_argument("--trace", action="store_true", help="Include the glued support space.")

    p = add("check", cmd_check, "Defect of a property, or a budgeted verdict with --verdict.")
    p.add_argument("property", choices=PROPERTIES)
    p.add_argument("file")
    _parameter_options(p)
    p.add_argument("--tuple", help="Cycle tuple for cycl0, comma separated.")
    p.add_argument("--verdict", action="store_true", help="Decide property / anti-property over --q-budget indices.")
    p.add_argument("--q-budget", dest="q_budget", type=int, default=None)

    p = add("witness", cmd_witness, "Small violating space of a singular parameter.")
    p.add_argument("property", choices=PROPERTIES)
    p.add_argument("--eps", required=True)
    p.add_argument("--q", help="Parameter index, e.g. C=3,alpha=1 | delta=1/2 | n=2,m=3.")
    p.add_argument("--cardinality", type=int)
    _parameter_options(p)

    p = add("blockspace", cmd_blockspace, "Hub-and-blocks space of singular witnesses.")
    p.add_argument("property", choices=PROPERTIES)
    p.add_argument("--eps", required=True)
    p.add_argument("--blocks", type=int, required=True)
    _parameter_options(p)

    p = add("perturb", cmd_perturb, "Perturb a metric by less than eps into an anti-property metric.")
    p.add_argument("property", choices=PROPERTIES)
    p.add_argument("file")
    p.add_argument("--eps", required=True)
    p.add_argument("--q")
    _parameter_options(p)

    p = add("richness", cmd_richness, "Search a rescaled labelled copy of a target space.")
    p.add_argument("file")
    p.add_argument("--target", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--scale", help="Fixed scale z (default: best scale per subset).")

    p = add("embed", cmd_embed, "Kuratowski embedding into the sup-norm space.")
    p.add_argument("file")
    p.add_argument("--mode", choices=[mode.value for mode in EmbeddingMode], default=EmbeddingMode.BASED.value)
    p.add_argument("--base", help="Base point of the based embedding.")

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides: dict[str, Any] = {
        "max_subset": args.max_subset,
        "max_chain": args.max_chain,
        "subset_budget": args.budget,
        "exhaustive": args.exhaustive,
        "threads": args.threads,
        "seed": args.seed,
        "log_level": args.log_level,
        "timing": args.timing,
        "cycl0": {"tol": args.tol, "restarts": args.restarts, "seed": args.seed, "threads": args.threads},
    }
    if args.config:
        return RunConfig.from_yaml(args.config, **overrides)
    cycl0 = {key: value for key, value in overrides.pop("cycl0").items() if value is not None}
    values = {key: value for key, value in overrides.items() if value is not None}
    return RunConfig(**values, cycl0=cycl0)


def _emit(payload: dict[str, Any], output: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fail(error: MetricError) -> int:
    logger.error(f"{error.code.value}: {error.message}")
    sys.stderr.write(json.dumps(error.to_dict()) + "\n")
    return 1


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand.

    :param argv: Arguments without the program name (default: sys.argv[1:]).
    :return: Exit code: 0 success, 1 domain error (usage errors exit with 2 from argparse).
    """
    args = build_parser().parse_args(argv)
    try:
        config = _run_config(args)
    except ValidationError as e:
        return _fail(MetricError(ErrorCode.INVALID_DOCUMENT, f"Invalid run settings: {e.error_count()} error(s).",
                                 errors=[error["msg"] for error in e.errors()]))
    except MetricError as e:
        return _fail(e)
    setup_logger(level=config.log_level)
    logger.debug(f"metric-amalgam {args.command} with {config.model_dump()}")

    run = _Run(args, config)
    started = time.perf_counter()
    try:
        result = args.handler(run)
    except MetricError as e:
        return _fail(e)
    except OSError as e:
        return _fail(MetricError(ErrorCode.INVALID_DOCUMENT, f"Cannot read input: {e}", path=str(e.filename)))

    report: dict[str, Any] = {
        "command": args.command,
        "inputs": run.inputs,
        "exact": run.exact,
        "result": to_jsonable(result),
    }
    if config.timing:
        report["timing"] = {"seconds": f"{time.perf_counter() - started:.6f}"}
    _emit(report, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
