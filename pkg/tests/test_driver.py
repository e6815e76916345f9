import pytest

from racefix import RepairConfig, analyze, cost, parse_program, render_program, repair, validate
from racefix.driver import (
    AUTO, EXHAUSTED, FIXED, INTERACTIVE, PARTIAL, Candidate, check_candidate,
    lower_candidates, ordered_candidates,
)
from racefix.synthesis import CALLSITE, DISTANCE, Volatile

from fixtures import RACE_FREE, method_rewrite, naive_example1, stuck


def test_config_validation():
    assert RepairConfig().max_iterations == 10
    for bad in [dict(max_iterations=0), dict(lock_strategy="x"), dict(patch_target="x"),
                dict(mode="x")]:
        with pytest.raises(ValueError):
            RepairConfig(**bad)
    with pytest.raises(ValueError):
        repair(parse_program(""), RepairConfig(mode=INTERACTIVE))


def test_validate_original_and_fixed_datarace(datarace):
    v = validate(datarace)
    assert sum(b.kind == "race" for b in v.bugs) == 4 and v.cycles == []
    fixed = repair(datarace).program
    v = validate(fixed)
    assert v.ok and v.bugs == [] and v.cycles == []


def test_validate_naive_example1(example1):
    v = validate(naive_example1(example1))
    assert v.bugs == []
    (cycle,) = v.cycles
    assert [str(x) for x in cycle.locks] == ["this.m1", "this.m2"]


def test_naive_example1_candidate_is_rejected(example1):
    naive = naive_example1(example1)
    actions = (method_rewrite(example1, naive, "Shared", "a1"),
               method_rewrite(example1, naive, "Shared", "a3"))
    a = analyze(example1)
    (cluster,) = a.clusters
    cand = check_candidate(Candidate((), actions), example1, cluster.key, a.bugs)
    assert cand.rejection.startswith("lock-order cycle")
    assert len(cand.validation.cycles) == 1


def test_datarace_is_fixed_in_one_iteration(datarace):
    r = repair(datarace)
    assert (r.status, r.iterations, r.bug_count, r.bug_history) == (FIXED, 1, 0, [6, 0])
    (patch,) = r.applied
    assert patch.encoding == ("DECLARE(Account, v, Object) AND SYNC({a_getBalance}, v) "
                              "AND SYNC({a_setBalance}, v)")
    assert patch.cost == 3 and patch.sync_count == 2 and patch.alternatives_tried == 1


def test_race_free_program_is_vacuously_fixed():
    r = repair(parse_program(RACE_FREE))
    assert (r.status, r.applied, r.iterations, r.bug_history) == (FIXED, [], 0, [0])


def test_example1_uses_two_syncs(example1):
    r = repair(example1)
    (patch,) = r.applied
    assert r.status == FIXED and patch.sync_count == 2 and r.cycles == []
    assert patch.encoding == "SYNC({a_a1}, this.m1) AND SYNC({a_a3}, this.m1)"


def test_unfixable_cluster_gives_partial():
    r = repair(stuck())
    assert r.status == PARTIAL and r.bug_count > 0
    assert "no valid patch for Stuck:this.xs.[*] (2 alternatives rejected)" in r.diagnostics
    assert r.rejected_cycles == 4
    assert [p.cluster for p in r.applied] == ["Stuck:this.y"]


def test_iteration_cap_gives_exhausted():
    r = repair(stuck(), RepairConfig(max_iterations=1))
    assert r.status == EXHAUSTED and r.iterations == 1
    assert r.diagnostics[-1] == "7 bugs left after 1 iterations"


def test_bug_count_only_decreases(datarace, example1):
    for p in (datarace, example1, stuck()):
        h = repair(p).bug_history
        assert all(b <= a for a, b in zip(h, h[1:]))


def test_candidates_sorted_by_cost_with_volatile_last(datarace):
    a = analyze(datarace)
    (cluster,) = a.clusters
    cands = lower_candidates(a, cluster.key, RepairConfig())
    assert [c.is_volatile for c in cands] == [False, True]
    plain = Candidate((), ())
    vol = Candidate((Volatile("x", "A"),), ())
    assert ordered_candidates([vol, plain]) == [plain, vol]


def test_interactive_choice_and_abort(datarace):
    seen = []

    def pick_volatile(key, cands):
        seen.append((key, [c.text for c in cands]))
        return 1

    r = repair(datarace, RepairConfig(mode=INTERACTIVE), chooser=pick_volatile)
    assert r.status == FIXED and r.applied[0].encoding == "VOLATILE(balance, Account)"
    assert seen[0][0] == "CustomerInfo:this.accounts.[*].balance" and len(seen[0][1]) == 2
    aborted = repair(datarace, RepairConfig(mode=INTERACTIVE), chooser=lambda k, c: None)
    assert aborted.status == PARTIAL and aborted.applied == []
    assert aborted.program is datarace
    assert aborted.diagnostics == ["aborted by user at CustomerInfo:this.accounts.[*].balance"]


@pytest.mark.parametrize("cfg", [RepairConfig(), RepairConfig(lock_strategy=DISTANCE),
                                 RepairConfig(patch_target=CALLSITE)])
def test_repair_is_deterministic(datarace, cfg):
    a, b = repair(datarace, cfg), repair(parse_program(render_program(datarace), datarace.source_name), cfg)
    assert render_program(a.program) == render_program(b.program)
    assert [p.diff for p in a.applied] == [p.diff for p in b.applied]


def test_callsite_mode_fixes_datarace(datarace):
    r = repair(datarace, RepairConfig(patch_target=CALLSITE))
    assert r.status == FIXED
    (patch,) = r.applied
    assert patch.encoding.startswith("DECLARE(Account, v, Object, static)")
    assert "static final Object v" in render_program(r.program)


def test_cost_counts_actions(datarace):
    r = repair(datarace)
    assert r.applied[0].cost == len(r.applied[0].actions) == 3
    assert cost([]) == 0


def test_modes_are_named():
    assert (AUTO, INTERACTIVE) == ("auto", "interactive")
