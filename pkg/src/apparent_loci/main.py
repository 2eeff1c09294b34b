import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from apparent_loci.engine import LociEngine
from apparent_loci.errors import InputError, LociError, VerificationFailed
from apparent_loci.protocol import (
    CertificateModel,
    DivInput,
    FuzzConfig,
    RRInput,
    SystemInput,
    TrivializeInput,
    read_document,
)
from apparent_loci.templating import function_label, place_label

# Configure logging
logging.basicConfig(
    level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger("apparent_loci.cli")

SEED_VARIABLE = "APPARENT_LOCI_SEED"


def load_config(config_path: str) -> dict:
    """Loads the YAML configuration file."""
    if not os.path.exists(config_path):
        logger.warning(f"Config file not found: {config_path}. Using defaults.")
        return {}

    with open(config_path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_fuzz_config(path: str, config: Optional[dict] = None) -> FuzzConfig:
    """
    Fuzz configs are YAML (JSON is accepted too). Seed precedence:
    APPARENT_LOCI_SEED, then the file's own seed, then fuzz.seed from the
    global config.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}")
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            raise InputError(f"{path}: invalid YAML", line=mark.line + 1, column=mark.column + 1)
        raise InputError(f"{path}: invalid YAML: {e}")
    default_seed = ((config or {}).get("fuzz") or {}).get("seed")
    if "seed" not in data and default_seed is not None:
        data["seed"] = default_seed
    seed = os.environ.get(SEED_VARIABLE)
    if seed:
        try:
            data["seed"] = int(seed)
        except ValueError:
            raise InputError(f"{SEED_VARIABLE} must be an integer, got {seed!r}")
        logger.info(f"Seed overridden from {SEED_VARIABLE}: {seed}")
    try:
        return FuzzConfig.model_validate(data)
    except ValidationError as e:
        raise InputError(f"{path}: {e}")


def write_json(model: BaseModel, path: Optional[str], dry_run: bool) -> None:
    if not path:
        return
    if dry_run:
        logger.info(f"DRY RUN: Result JSON would be written to {path}")
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(model.model_dump_json(indent=2))
    logger.info(f"Result JSON written to {path}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        default="configs/settings.yaml",
        help="Path to the apparent-loci settings YAML file",
    )
    common.add_argument("--output", help="Path to write the result JSON")
    common.add_argument(
        "--dry-run",
        action="store_true",
        help="Compute everything but write no files",
    )

    parser = argparse.ArgumentParser(
        prog="apparent-loci",
        description="Exact trivializations of vector bundles on hyperelliptic curves with certified bad sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rr = sub.add_parser("rr", parents=[common], help="Basis of a Riemann-Roch space L(D)")
    rr.add_argument("input", help="JSON file with curve and divisor")

    div = sub.add_parser("div", parents=[common], help="Divisors of functions")
    div.add_argument("input", help="JSON file with curve and functions")

    triv = sub.add_parser("trivialize", parents=[common], help="Trivialize a frame and certify the bad set")
    triv.add_argument("input", help="Instance JSON file")
    triv.add_argument("-o", "--certificate", help="Path of the certificate JSON")

    gauge = sub.add_parser("gauge", parents=[common], help="Rewrite a linear system in a certificate's output frame")
    gauge.add_argument("system", help="System JSON file")
    gauge.add_argument("certificate", help="Certificate JSON file")

    fuzz = sub.add_parser("fuzz", parents=[common], help="Seeded property run over generated instances")
    fuzz.add_argument("input", help="Fuzz config YAML file")
    return parser


def run(args: argparse.Namespace, engine: LociEngine) -> int:
    if args.command == "rr":
        result = engine.run_rr(read_document(args.input, RRInput))
        print(f"L({result.divisor}) on {result.curve}")
        print(f"degree {result.degree}, dimension {result.dimension}")
        for i, h in enumerate(result.basis, 1):
            print(f"  h{i} = {function_label(h)}")
        write_json(result, args.output, args.dry_run)

    elif args.command == "div":
        result = engine.run_div(read_document(args.input, DivInput))
        for entry in result.entries:
            print(f"div({function_label(entry.function)}) = {entry.divisor}  [degree {entry.degree}]")
        write_json(result, args.output, args.dry_run)

    elif args.command == "trivialize":
        instance = read_document(args.input, TrivializeInput)
        if args.dry_run:
            instance.dry_run = True
        model = engine.run_trivialize(instance, certificate_path=args.certificate)
        print(f"{model.name}: {model.count} bad place(s) including P, bound {model.bound}")
        for bp in model.bad_set:
            flag = " (exceptional)" if bp.exceptional else ""
            print(f"  {place_label(bp.place)}  {bp.kind} order {bp.order}{flag}")
        for check in model.checks:
            print(f"  check {check.name}: {'ok' if check.passed else 'FAILED'}  {check.detail}")
        write_json(model, args.output, args.dry_run)
        if not model.passed:
            failed = ", ".join(c.name for c in model.checks if not c.passed)
            raise VerificationFailed(f"certificate checks failed: {failed}")

    elif args.command == "gauge":
        system = read_document(args.system, SystemInput)
        certificate = read_document(args.certificate, CertificateModel)
        result = engine.run_gauge(system, certificate)
        for i, row in enumerate(result.matrix, 1):
            print(f"row {i}: " + " | ".join(function_label(u) for u in row))
        print("singular: " + (", ".join(place_label(q) for q in result.singular) or "none"))
        print(f"contained: {'yes' if result.contained else 'no'}")
        for q in result.violations:
            print(f"  outside the admissible set: {place_label(q)}")
        for claim in result.unchecked_claims:
            print(f"unchecked: {claim}")
        write_json(result, args.output, args.dry_run)

    elif args.command == "fuzz":
        summary = engine.run_fuzz(load_fuzz_config(args.input, engine.config))
        table = engine.render_fuzz_summary(summary)
        print(table, end="")
        write_json(summary, args.output, args.dry_run)
        if args.output and not args.dry_run:
            table_path = Path(args.output).with_suffix(".txt")
            table_path.write_text(table, encoding="utf-8")
            logger.info(f"Summary table written to {table_path}")
    return 0


def main():
    load_dotenv()
    args = build_parser().parse_args()

    # 1. Load Global Config
    config = load_config(args.config)
    level = (config.get("logging") or {}).get("level", "INFO")
    logging.getLogger().setLevel(getattr(logging, str(level).upper(), logging.INFO))

    # 2. Initialize Engine and run the command
    engine = LociEngine(config)
    try:
        code = run(args, engine)
    except LociError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.exit(e.exit_code)
    except Exception as e:
        logger.error(f"apparent-loci failed: {e}")
        sys.exit(1)
    sys.exit(code)


if __name__ == "__main__":
    main()
