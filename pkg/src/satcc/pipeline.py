"""Per-region pipeline: SSA, e-graph, saturation, extraction, code generation."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from .codegen import (
    EmitPlan, bulk_load_reorder, count_loads, count_stores, emit, identifiers, plan_temporaries,
    region_has_stmt_pragmas, temp_prefix,
)
from .cost import DEFAULT_COST, CostModel
from .egraph import from_ssa
from .errors import SatccError
from .extract import ExtractLimits, Extraction, extract, extract_original, validate
from .frontend import find_regions, parse
from .frontend.ast import KernelModule
from .rules import SaturationLimits, saturate
from .ssa import build_ssa

log = logging.getLogger(__name__)

METRICS_SCHEMA = "satcc.metrics/1"

VARIANTS = {
    "cse": (False, False),
    "cse+sat": (True, False),
    "cse+bulk": (False, True),
    "accsat": (True, True),
}


@dataclass(frozen=True)
class VariantConfig:
    sat: bool = True
    bulk: bool = True

    @classmethod
    def named(cls, name: str) -> "VariantConfig":
        try:
            sat, bulk = VARIANTS[name.lower()]
        except KeyError:
            raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}") from None
        return cls(sat, bulk)

    @property
    def name(self) -> str:
        for k, v in VARIANTS.items():
            if v == (self.sat, self.bulk):
                return k
        return "custom"


@dataclass(frozen=True)
class PipelineConfig:
    variant: VariantConfig = VariantConfig()
    limits: SaturationLimits = SaturationLimits()
    extract_limits: ExtractLimits = ExtractLimits()
    extract_method: str = "ilp"
    cost: CostModel = DEFAULT_COST

    @classmethod
    def for_variant(cls, name: str, **kw) -> "PipelineConfig":
        return cls(variant=VariantConfig.named(name), **kw)


@dataclass
class RegionMetrics:
    kernel: str
    line: int
    status: str = "optimized"  # optimized | skipped | failed
    message: str = ""
    ssa_ms: float = 0.0
    sat_ms: float = 0.0
    extract_ms: float = 0.0
    nodes_final: int = 0
    iterations: int = 0
    stop_reason: str = "none"
    objective_before: int = 0
    objective_after: int = 0
    static_loads_before: int = 0
    static_loads_after: int = 0
    static_stores: int = 0
    fma_count: int = 0
    method: str = "none"
    warnings: list = field(default_factory=list)


@dataclass
class RegionResult:
    region: object
    metrics: RegionMetrics
    prog: object = None
    graph: object = None
    roots: list = field(default_factory=list)
    extraction: Optional[Extraction] = None
    original: Optional[Extraction] = None
    plan: Optional[EmitPlan] = None


@dataclass
class MetricsReport:
    file: str
    variant: str
    kernels: list = field(default_factory=list)
    schema: str = METRICS_SCHEMA

    def to_dict(self) -> dict:
        return {"schema": self.schema, "file": self.file, "variant": self.variant,
                "kernels": [asdict(k) for k in self.kernels]}


def count_fma(x: Extraction) -> int:
    return sum(1 for n in x.choice.values() if n.op == "fma")


def optimize_region(region, cfg: PipelineConfig, prefix: str = "_v", index: int = 0) -> RegionResult:
    name = f"{region.function or '<top>'}#{index}"
    met = RegionMetrics(name, region.anchor.line)
    res = RegionResult(region, met)
    met.static_loads_before = met.static_loads_after = count_loads(region.body)
    met.static_stores = count_stores(region.body)
    if region_has_stmt_pragmas(region):
        met.status = "skipped"
        met.message = "pragmas on non-loop statements inside the region"
        return res
    try:
        t = time.perf_counter()
        prog = build_ssa(region)
        g, roots = from_ssa(prog)
        met.ssa_ms = (time.perf_counter() - t) * 1e3
        met.warnings.extend(prog.warnings)
        res.prog, res.graph, res.roots = prog, g, roots
        before = extract_original(g, roots, cfg.cost)
        met.objective_before = before.total
        res.original = before
        if cfg.variant.sat:
            t = time.perf_counter()
            rep = saturate(g, limits=cfg.limits)
            met.sat_ms = (time.perf_counter() - t) * 1e3
            met.stop_reason, met.iterations = rep.stop_reason, rep.iterations_run
        met.nodes_final = g.n_nodes
        t = time.perf_counter()
        x = extract(g, roots, cfg.extract_method, cfg.cost, cfg.extract_limits)
        met.extract_ms = (time.perf_counter() - t) * 1e3
        met.warnings.extend(x.warnings)
        if x.total > before.total:
            # a fallback extraction can lose to the input program; keep the input then
            x = extract_original(g, roots, cfg.cost)
            met.warnings.append("extraction worse than input; kept the original selection")
        validate(g, x)
        res.extraction = x
        met.objective_after, met.method = x.total, x.method
        met.fma_count = count_fma(x)
        plan = plan_temporaries(x, prog, g, roots, prefix)
        if cfg.variant.bulk:
            plan = bulk_load_reorder(plan, prog)
        res.plan = plan
        met.static_loads_after = count_loads(plan.body.stmts)
    except SatccError as e:
        met.status, met.message = "failed", str(e)
        log.warning("%s: region left unchanged: %s", name, e)
    except Exception as e:  # fail open: a broken region must never break the build
        met.status, met.message = "failed", f"internal error: {e!r}"
        log.warning("%s: region left unchanged after internal error: %r", name, e)
    if met.status != "optimized":
        res.plan = None
        met.static_loads_after = met.static_loads_before
        met.objective_after = met.objective_before
    return res


def optimize_module(m: KernelModule, cfg: PipelineConfig = PipelineConfig()):
    """Returns (output text, MetricsReport, region results)."""
    prefix = temp_prefix(identifiers(m))
    results = [optimize_region(r, cfg, prefix, i) for i, r in enumerate(find_regions(m))]
    plans = [(r.region, r.plan) for r in results if r.plan is not None]
    text = emit(m, plans) if plans else m.source
    report = MetricsReport(m.source_name, cfg.variant.name, [r.metrics for r in results])
    return text, report, results


def optimize_source(source: str, name: str = "<string>", cfg: PipelineConfig = PipelineConfig()):
    m = parse(source, name)
    text, report, _ = optimize_module(m, cfg)
    return text, report


def optimize_file(path, cfg: PipelineConfig = PipelineConfig()):
    with open(path, encoding="utf-8") as f:
        source = f.read()
    return optimize_source(source, str(path), cfg)


def with_overrides(cfg: PipelineConfig, **kw) -> PipelineConfig:
    return replace(cfg, **kw)
