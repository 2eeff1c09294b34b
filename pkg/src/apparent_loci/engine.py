import importlib
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from apparent_loci.errors import InputError, IrrationalLocus
from apparent_loci.gauge import ambient_system, emit_system
from apparent_loci.generator import GeneratorSettings, InstanceGenerator
from apparent_loci.notation import parse_divisor
from apparent_loci.places import divisor_of
from apparent_loci.protocol import (
    CertificateModel,
    DivEntry,
    DivInput,
    DivOutput,
    FuzzConfig,
    FuzzFailure,
    FuzzRow,
    FuzzSummary,
    PlaceModel,
    RRInput,
    RROutput,
    SystemInput,
    SystemOutput,
    TrivializeInput,
    certificate_from_model,
    certificate_to_model,
    curve_from_model,
    func_from_model,
    func_to_model,
    funcs_from_expressions,
    instance_frame,
    matrix_from_model,
    matrix_to_model,
    place_from_model,
    place_to_model,
)
from apparent_loci.riemann_roch import SearchPolicy, rr_basis
from apparent_loci.templating import render_report
from apparent_loci.trivializer import bad_point_bound, trivialize, verify_certificate

logger = logging.getLogger("apparent_loci.engine")

UNCHECKED_CLAIMS = [
    "solutions have at most power-like growth at the apparent points (not checked symbolically)",
]


@dataclass(frozen=True)
class FuzzTask:
    curve: Tuple[str, ...]
    p: int
    index: int
    seed: int
    basepoint: PlaceModel
    policy: SearchPolicy
    settings: GeneratorSettings


@dataclass(frozen=True)
class InstanceOutcome:
    index: int
    status: str  # ok | failed | refused
    count: int = 0
    contained: bool = True
    reason: str = ""


def instance_rng(seed: int, curve: Tuple[str, ...], p: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{','.join(curve)}:{p}:{index}")


def fuzz_instance(task: FuzzTask) -> InstanceOutcome:
    """Generate, trivialize, verify and emit one instance. Runs in worker processes."""
    try:
        curve = curve_from_model(task.curve)
        gen = InstanceGenerator(curve, instance_rng(task.seed, task.curve, task.p, task.index), task.settings)
        frame = gen.frame(task.p)
        omega, declared = gen.connection(task.p)
        basepoint = place_from_model(curve, task.basepoint)
        cert = trivialize(frame, basepoint, task.policy)
    except IrrationalLocus as e:
        return InstanceOutcome(task.index, "refused", reason=str(e))
    except Exception as e:
        return InstanceOutcome(task.index, "failed", reason=f"{type(e).__name__}: {e}")

    try:
        report = verify_certificate(cert, frame)
        emitted = emit_system(ambient_system(omega, frame), cert, declared)
    except Exception as e:
        return InstanceOutcome(task.index, "failed", count=cert.count, reason=f"{type(e).__name__}: {e}")
    if not report.passed:
        names = ", ".join(c.name for c in report.failures)
        return InstanceOutcome(task.index, "failed", cert.count, emitted.contained, f"checks failed: {names}")
    return InstanceOutcome(task.index, "ok", cert.count, emitted.contained)


class LociEngine:
    def __init__(self, config: dict):
        self.config = config
        self.policy = SearchPolicy.from_config(config)
        self.generator_settings = GeneratorSettings.from_config(config)
        paths = config.get("paths") or {}
        self.output_dir = Path(paths.get("output_dir") or "out")
        self.template_dir = paths.get("template_dir")
        self.workers = int((config.get("fuzz") or {}).get("workers", 1))

    def run_rr(self, data: RRInput) -> RROutput:
        curve = curve_from_model(data.curve)
        divisor = parse_divisor(curve, data.divisor)
        basis = rr_basis(curve, divisor)
        logger.info(f"L({divisor}) on {curve}: dimension {len(basis)}")
        return RROutput(
            curve=str(curve),
            divisor=str(divisor),
            degree=divisor.degree,
            dimension=len(basis),
            basis=[func_to_model(h) for h in basis],
        )

    def run_div(self, data: DivInput) -> DivOutput:
        curve = curve_from_model(data.curve)
        functions = [func_from_model(curve, m) for m in data.functions]
        functions += funcs_from_expressions(curve, data.expressions)
        entries = []
        for u in functions:
            if u.is_zero:
                raise InputError("the zero function has no divisor")
            d = divisor_of(u)
            entries.append(DivEntry(function=func_to_model(u), divisor=str(d), degree=d.degree))
        return DivOutput(curve=str(curve), entries=entries)

    def run_trivialize(
        self, instance: TrivializeInput, certificate_path: Optional[str] = None
    ) -> CertificateModel:
        frame = instance_frame(instance)
        basepoint = place_from_model(frame.curve, instance.basepoint)

        if instance.dry_run:
            logger.info(f"DRY RUN: Trivializing {instance.name}, nothing will be written")
        else:
            logger.info(f"Trivializing {instance.name}")

        cert = trivialize(frame, basepoint, self.policy)
        report = verify_certificate(cert, frame)
        for check in report.checks:
            level = logging.INFO if check.passed else logging.ERROR
            logger.log(level, f"check {check.name}: {'ok' if check.passed else 'FAILED'} ({check.detail})")

        model = certificate_to_model(cert, report, name=instance.name)
        self._run_callbacks(model, instance.dry_run, certificate_path)
        return model

    def run_gauge(self, system: SystemInput, certificate: CertificateModel) -> SystemOutput:
        cert = certificate_from_model(certificate)
        curve = curve_from_model(system.curve)
        if curve != cert.curve:
            raise InputError(f"the system lives on {curve} but the certificate on {cert.curve}")
        a_orig = matrix_from_model(curve, system.matrix)
        if len(a_orig) != cert.p or len(a_orig[0]) != cert.p:
            raise InputError(f"expected a {cert.p} x {cert.p} system matrix")
        declared = None
        if system.declared is not None:
            declared = [place_from_model(curve, m) for m in system.declared]
        emitted = emit_system(a_orig, cert, declared)
        logger.info(
            f"emitted system: {len(emitted.singular)} singular place(s), "
            f"{'contained' if emitted.contained else 'NOT contained'} in the admissible set"
        )
        return SystemOutput(
            curve=str(curve),
            matrix=matrix_to_model(emitted.matrix),
            singular=[place_to_model(q) for q in emitted.singular],
            allowed=[place_to_model(q) for q in emitted.allowed],
            violations=[place_to_model(q) for q in emitted.violations],
            contained=emitted.contained,
            unchecked_claims=list(UNCHECKED_CLAIMS),
        )

    def run_fuzz(self, fuzz: FuzzConfig) -> FuzzSummary:
        workers = fuzz.workers if fuzz.workers is not None else self.workers
        groups: List[Tuple[Tuple[str, ...], int, List[FuzzTask]]] = []
        for coeffs in fuzz.curves:
            curve = curve_from_model(coeffs)
            key = tuple(str(c) for c in curve.f_coeffs)
            for p in fuzz.ps:
                tasks = [
                    FuzzTask(key, p, i, fuzz.seed, fuzz.basepoint, self.policy, self.generator_settings)
                    for i in range(fuzz.count)
                ]
                groups.append((key, p, tasks))

        all_tasks = [t for _, _, tasks in groups for t in tasks]
        logger.info(f"Fuzzing {len(all_tasks)} instance(s) with seed {fuzz.seed} on {workers} worker(s)")
        if workers > 1 and len(all_tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(fuzz_instance, all_tasks))
        else:
            outcomes = [fuzz_instance(t) for t in all_tasks]

        rows: List[FuzzRow] = []
        failures: List[FuzzFailure] = []
        offset = 0
        for key, p, tasks in groups:
            batch = sorted(outcomes[offset:offset + len(tasks)], key=lambda o: o.index)
            offset += len(tasks)
            if not batch:
                continue
            curve = curve_from_model(key)
            label = str(curve)
            for o in batch:
                if o.status == "failed":
                    failures.append(FuzzFailure(curve=label, p=p, index=o.index, reason=o.reason))
            solved = [o for o in batch if o.status != "refused"]
            rows.append(
                FuzzRow(
                    curve=label,
                    genus=curve.genus,
                    p=p,
                    instances=len(batch),
                    max_count=max((o.count for o in solved), default=0),
                    bound=bad_point_bound(p, curve.genus),
                    failures=sum(1 for o in batch if o.status == "failed"),
                    refused=sum(1 for o in batch if o.status == "refused"),
                    containment_failures=sum(1 for o in solved if not o.contained),
                )
            )
            logger.info(f"{label}, p = {p}: max count {rows[-1].max_count} of bound {rows[-1].bound}")
        return FuzzSummary(seed=fuzz.seed, rows=rows, failures=failures)

    def render_fuzz_summary(self, summary: FuzzSummary) -> str:
        return render_report("fuzz_summary.txt.j2", self.template_dir, summary.model_dump())

    def _run_callbacks(
        self, certificate: CertificateModel, dry_run: bool, certificate_path: Optional[str] = None
    ):
        """
        Dynamically loads and executes the output plugins enabled in settings.
        """
        outputs = (self.config.get("plugins") or {}).get("output") or {}
        if not outputs:
            logger.warning("No output plugins configured; the certificate is not written")
            return

        for plugin_name, plugin_config in outputs.items():
            plugin_config = dict(plugin_config or {})
            try:
                # Skip if the plugin is explicitly disabled in config
                if not plugin_config.get("enabled", True):
                    logger.info(f"Plugin {plugin_name} is disabled. Skipping.")
                    continue

                logger.info(f"Executing output plugin: {plugin_name}")
                plugin_config.setdefault("output_dir", str(self.output_dir))
                if plugin_name == "certificate" and certificate_path:
                    plugin_config["path"] = certificate_path

                # Dynamic import: apparent_loci.plugins.output.{name}.plugin
                module_path = f"apparent_loci.plugins.output.{plugin_name}.plugin"
                module = importlib.import_module(module_path)

                plugin_class = getattr(module, "Plugin")
                plugin_instance = plugin_class(plugin_config, dry_run=dry_run)
                plugin_instance.run(certificate)

            except Exception as e:
                logger.error(f"Output plugin {plugin_name} failed: {str(e)}")
