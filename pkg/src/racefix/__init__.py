"""Data-race detection and repair for MiniJava-CC.

Typical use::

    from racefix import parse_program, analyze, repair

    program = parse_program(source, "Bank.mjcc")
    print(len(analyze(program).bugs))
    result = repair(program)
"""

from .deadlock import build_lock_order, find_deadlock_cycles, lock_cycles
from .driver import RepairConfig, RepairResult, repair, validate
from .lang import (
    AccessPath, FrontendError, ParseError, Program, normalize_path, parse_file,
    parse_program, render_program,
)
from .lowering import apply_patch, cost, create_patch, unified_diff
from .races import (
    Bug, BugCluster, analyze, cluster_bugs, detect_bugs, race, unprotected_write,
)
from .summaries import (
    AccessKind, AccessSnapshot, MethodSummary, Ownership, SummaryMap, ThreadKind,
    analyze_method, analyze_program, infer_concurrent_classes,
)
from .synthesis import (
    create_patch_encodings, rank_locks_distance, rank_locks_frequency, render_encoding,
)

__version__ = "0.1.0"

__all__ = [
    "AccessKind", "AccessPath", "AccessSnapshot", "Bug", "BugCluster",
    "FrontendError", "MethodSummary", "Ownership", "ParseError", "Program",
    "RepairConfig", "RepairResult", "SummaryMap", "ThreadKind", "analyze",
    "analyze_method", "analyze_program", "apply_patch", "build_lock_order",
    "cluster_bugs", "cost", "create_patch", "create_patch_encodings",
    "detect_bugs", "find_deadlock_cycles", "infer_concurrent_classes",
    "lock_cycles", "normalize_path", "parse_file", "parse_program", "race",
    "rank_locks_distance", "rank_locks_frequency", "render_encoding",
    "render_program", "repair", "unified_diff", "unprotected_write", "validate",
]
