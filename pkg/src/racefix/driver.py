"""The repair loop: detect, cluster, synthesize, lower, apply, validate, repeat."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .deadlock import Cycle, lock_cycles
from .lang.nodes import Program
from .lowering import (
    AstAction, LoweringError, apply_patch, cost, lower_alternative, merge_syncs, unified_diff,
)
from .races import Analysis, Bug, ClusterKey, analyze
from .summaries import SummaryMap
from .synthesis import (
    CALLSITE, DISTANCE, FREQUENCY, ROOT, Action, Sync, Volatile, dnf, encode_cluster,
    render_alternative,
)

log = logging.getLogger(__name__)

AUTO = "auto"
INTERACTIVE = "interactive"
FIXED = "Fixed"
PARTIAL = "Partial"
EXHAUSTED = "Exhausted"


@dataclass(frozen=True)
class RepairConfig:
    max_iterations: int = 10
    lock_strategy: str = FREQUENCY
    patch_target: str = ROOT
    mode: str = AUTO

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.lock_strategy not in (FREQUENCY, DISTANCE):
            raise ValueError(f"unknown lock strategy {self.lock_strategy!r}")
        if self.patch_target not in (ROOT, CALLSITE):
            raise ValueError(f"unknown patch target {self.patch_target!r}")
        if self.mode not in (AUTO, INTERACTIVE):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class Validation:
    bugs: List[Bug]
    cycles: List[Cycle]
    analysis: Optional[Analysis] = None

    @property
    def ok(self) -> bool:
        return not self.bugs and not self.cycles


def validate(program: Program) -> Validation:
    """Full re-analysis for races and lock-order cycles."""
    a = analyze(program)
    return Validation(a.bugs, lock_cycles(program), a)


@dataclass
class Candidate:
    """One lowered alternative for a cluster."""

    encoding: Tuple[Action, ...]
    actions: Tuple[AstAction, ...]
    program: Optional[Program] = None
    base: Optional[Program] = None
    validation: Optional[Validation] = None
    rejection: Optional[str] = None

    @property
    def cost(self) -> int:
        return cost(self.actions)

    @property
    def is_volatile(self) -> bool:
        return any(isinstance(a, Volatile) for a in self.encoding)

    @property
    def sync_count(self) -> int:
        return sum(1 for a in self.encoding if isinstance(a, Sync))

    @property
    def text(self) -> str:
        return render_alternative(self.encoding)


@dataclass
class AppliedPatch:
    iteration: int
    cluster: str
    encoding: str
    actions: List[str]
    cost: int
    diff: str
    sync_count: int
    alternatives_tried: int


@dataclass
class RepairResult:
    status: str
    program: Program
    applied: List[AppliedPatch] = field(default_factory=list)
    bug_count: int = 0
    rejected_cycles: int = 0
    iterations: int = 0
    bug_history: List[int] = field(default_factory=list)
    cycles: List[Cycle] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)


# chooser(cluster, candidates) -> index into candidates, or None to abort
Chooser = Callable[[str, Sequence[Candidate]], Optional[int]]


def ordered_candidates(candidates: Sequence[Candidate]) -> List[Candidate]:
    """Cheapest first, volatile fixes last; ties keep encoding order."""
    return sorted(candidates, key=lambda c: (c.is_volatile, c.cost))


def _signatures(bugs: Sequence[Bug]) -> set:
    return {b.signature() for b in bugs}


def check_candidate(cand: Candidate, before: Program, key: ClusterKey, before_bugs) -> Candidate:
    cand.base = before
    try:
        cand.program = apply_patch(before, cand.actions)
    except LoweringError as e:
        cand.rejection = f"cannot apply: {e}"
        return cand
    v = validate(cand.program)
    cand.validation = v
    if v.cycles:
        cand.rejection = "lock-order cycle " + ", ".join(map(str, v.cycles))
    elif any(c.key == key for c in v.analysis.clusters):
        cand.rejection = "cluster still racy"
    elif not _signatures(v.bugs) <= _signatures(before_bugs):
        cand.rejection = "introduces new bugs"
    return cand


def lower_candidates(analysis: Analysis, key: ClusterKey, cfg: RepairConfig) -> List[Candidate]:
    cluster = next(c for c in analysis.clusters if c.key == key)
    enc = encode_cluster(cluster, analysis.program, cfg.lock_strategy, cfg.patch_target)
    return ordered_candidates(lower_encoding(enc, analysis.program))


def lower_encoding(enc, program: Program) -> List[Candidate]:
    """Lower each alternative; alternatives that cannot be lowered are dropped."""
    out = []
    for alt in dnf(enc):
        if not alt:
            continue
        try:
            actions = tuple(lower_alternative(alt, program))
        except LoweringError as e:
            log.info("alternative %s dropped: %s", render_alternative(alt), e)
            continue
        out.append(Candidate(tuple(merge_syncs(alt)), actions))
    return out


def repair(program: Program, cfg: RepairConfig = RepairConfig(),
           chooser: Optional[Chooser] = None,
           summaries: Optional[SummaryMap] = None) -> RepairResult:
    """Repair every race the analysis reports, within ``cfg.max_iterations``.

    ``summaries``, when given, replace the computed summaries for the very
    first analysis (imported from an external analyzer). In interactive mode
    every surviving alternative of a cluster is shown to ``chooser``.
    """
    if cfg.mode == INTERACTIVE and chooser is None:
        raise ValueError("interactive mode needs a chooser")
    result = RepairResult(PARTIAL, program)
    current = analyze(program, summaries)
    result.bug_history.append(len(current.bugs))
    for iteration in range(1, cfg.max_iterations + 1):
        if not current.bugs:
            break
        result.iterations = iteration
        progressed = False
        for key in [c.key for c in current.clusters]:
            if not any(c.key == key for c in current.clusters):
                continue  # fixed as a side effect of an earlier patch
            try:
                accepted = _repair_cluster(current, key, cfg, chooser, iteration, result)
            except _Aborted:
                result.diagnostics.append(f"aborted by user at {key}")
                result.program = current.program
                result.bug_count = len(current.bugs)
                return result
            if accepted is None:
                continue
            progressed = True
            current = accepted
        result.program = current.program
        result.bug_history.append(len(current.bugs))
        if not progressed:
            result.status = PARTIAL
            result.bug_count = len(current.bugs)
            result.cycles = lock_cycles(current.program)
            return result
    result.program = current.program
    result.bug_count = len(current.bugs)
    result.cycles = lock_cycles(current.program)
    if result.bug_count == 0 and not result.cycles:
        result.status = FIXED
    elif result.bug_count == 0:
        result.status = PARTIAL
        result.diagnostics.append("no races left, but the lock order has cycles")
    else:
        result.status = EXHAUSTED
        result.diagnostics.append(f"{result.bug_count} bugs left after {cfg.max_iterations} iterations")
    return result


class _Aborted(Exception):
    pass


def _repair_cluster(current: Analysis, key: ClusterKey, cfg: RepairConfig,
                    chooser: Optional[Chooser], iteration: int,
                    result: RepairResult) -> Optional[Analysis]:
    cands = lower_candidates(current, key, cfg)
    tried = 0
    if cfg.mode == AUTO:
        for cand in cands:
            tried += 1
            check_candidate(cand, current.program, key, current.bugs)
            if cand.rejection is None:
                return _accept(current, key, cand, iteration, tried, result)
            if cand.validation is not None and cand.validation.cycles:
                result.rejected_cycles += 1
            log.info("%s: rejected %s (%s)", key, cand.text, cand.rejection)
    else:
        for cand in cands:
            check_candidate(cand, current.program, key, current.bugs)
            if cand.validation is not None and cand.validation.cycles:
                result.rejected_cycles += 1
        ok = [c for c in cands if c.rejection is None]
        tried = len(cands)
        if ok:
            choice = chooser(str(key), ok)
            if choice is None:
                raise _Aborted()
            return _accept(current, key, ok[choice], iteration, tried, result)
    result.diagnostics.append(f"no valid patch for {key} ({tried} alternatives rejected)")
    return None


def _accept(current: Analysis, key: ClusterKey, cand: Candidate, iteration: int,
            tried: int, result: RepairResult) -> Analysis:
    result.applied.append(AppliedPatch(
        iteration, str(key), cand.text, [str(a) for a in cand.actions], cand.cost,
        unified_diff(current.program, cand.program), cand.sync_count, tried))
    return cand.validation.analysis
