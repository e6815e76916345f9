import logging

import pytest

from racefix import (
    AccessPath, analyze, apply_patch, cost, create_patch, parse_program, render_program,
)
from racefix.lang import render_expr
from racefix.lang.nodes import FieldDecl, LocalDecl, SyncBlock, walk_stmts
from racefix.lowering import (
    INSERT_AFTER, INSERT_BEFORE, REPLACE, AstAction, ClassStart, ConflictError, FieldRef,
    FreshNameError, StalePatch, StmtSlice, common_slice, declare_variable, insert_lock,
    lower_alternative, make_volatile, merge_syncs, unified_diff,
)
from racefix.synthesis import (
    CALLSITE, FREQUENCY, NIL, Declare, Sync, SyncTarget, dnf, encode_cluster,
)

P = AccessPath.parse


def _sync(program, cls, method, line, lock, in_static=False):
    m = program.cls(cls).method(method)
    stmt = next(s for s in walk_stmts(m.body) if s.span.line == line)
    return Sync((SyncTarget(cls, method, stmt.span, P(lock), in_static),), lock)


def _syncblocks(program):
    return sorted((c.name, m.name, render_expr(s.lock))
                  for c in program.classes for m in c.methods
                  for s in walk_stmts(m.body) if isinstance(s, SyncBlock))


def test_datarace_patch_shape(datarace):
    (cluster,) = analyze(datarace).clusters
    patch = create_patch(encode_cluster(cluster, datarace), datarace)
    first, volatile = patch.alternatives
    assert [str(a) for a in first] == [
        "INSERT_BEFORE(Account<start>)", "REPLACE(Account.getBalance@26:9)",
        "REPLACE(Account.setBalance@30:9)"]
    assert cost(first) == 3
    assert [str(a) for a in volatile] == ["REPLACE(Account.balance)"]
    patched = apply_patch(datarace, first)
    text = render_program(patched)
    assert "    private final Object v = new Object();\n    private int balance;" in text
    assert "synchronized (this.v) {\n            return balance;\n        }" in text
    assert analyze(patched).bugs == []


def test_nil_and_empty_patches(datarace):
    assert create_patch(NIL, datarace).alternatives == ((),)
    assert cost(()) == 0
    assert apply_patch(datarace, ()) is datarace


def test_single_statement_wrap(parse):
    p = parse("class A { int x;\n void m() {\n x = 1;\n x = 2;\n } }")
    (act,) = insert_lock(_sync(p, "A", "m", 3, "this"), p)
    assert act.op == REPLACE and act.ref == StmtSlice("A", "m", ((3, 2),))
    (blk,) = act.new
    assert isinstance(blk, SyncBlock) and len(blk.body) == 1


def test_merged_syncs_wrap_common_run_and_cost_less(parse):
    p = parse("class A { int x;\n void m() {\n x = 1;\n x = 2;\n x = 3;\n } }")
    s1, s2 = _sync(p, "A", "m", 3, "this"), _sync(p, "A", "m", 4, "this")
    (merged,) = merge_syncs([s1, s2])
    assert len(merged.targets) == 2
    merged_actions = lower_alternative([s1, s2], p)
    unmerged_actions = insert_lock(s1, p) + insert_lock(s2, p)
    assert cost(merged_actions) < cost(unmerged_actions)
    (act,) = merged_actions
    assert act.ref.starts == ((3, 2), (4, 2))
    out = apply_patch(p, merged_actions).cls("A").method("m").body
    assert [type(s).__name__ for s in out] == ["SyncBlock", "Assign"]
    assert len(out[0].body) == 2


def test_syncs_in_different_methods_stay_apart(parse):
    p = parse("class A { int x;\n void m() {\n x = 1;\n }\n void n() {\n x = 2;\n } }")
    merged = merge_syncs([_sync(p, "A", "m", 3, "this"), _sync(p, "A", "n", 6, "this")])
    assert len(merged) == 2


def test_common_slice_lifts_to_enclosing_statement(parse):
    p = parse("""class A { int x;
 void m(int k) {
  int a = 0;
  if (k > 0) {
   x = 1;
  } else {
   x = 2;
  }
  a = 3;
 } }""")
    body = p.cls("A").method("m").body
    block, lo, hi, ancestors = common_slice(body, [(5, 4), (7, 4)])
    assert block is body and (lo, hi) == (1, 2) and ancestors == []
    block, lo, hi, ancestors = common_slice(body, [(5, 4)])
    assert (lo, hi) == (0, 1) and len(ancestors) == 1


CALLSITE_SRC = """class CustomerInfo {
    private Account[] accounts;

    public int withdraw(int n, int amount) {
        int temp = accounts[n].getBalance();
        temp = temp - amount;
        accounts[n].setBalance(temp);
        return temp;
    }
}

class Account {
    private int balance;

    public int getBalance() {
        return balance;
    }

    public void setBalance(int b) {
        balance = b;
    }
}

class Worker implements Runnable {
    private CustomerInfo ci;

    public void run() {
        int left = ci.withdraw(1, 5);
    }
}
"""


def _callsite_first_alt(src):
    p = parse_program(src, "C.mjcc")
    (cluster,) = analyze(p).clusters
    return p, dnf(encode_cluster(cluster, p, FREQUENCY, CALLSITE))[0]


def test_callsite_sync_hoists_escaping_local():
    p, alt = _callsite_first_alt(CALLSITE_SRC)
    actions = lower_alternative(alt, p)
    assert [a.op for a in actions] == [INSERT_BEFORE, INSERT_BEFORE, REPLACE]
    hoist = actions[1]
    assert hoist.new == (LocalDecl("temp", "int", None, hoist.new[0].span),)
    text = render_program(apply_patch(p, actions))
    assert ("        int temp;\n        synchronized (Account.v) {\n"
            "            temp = accounts[n].getBalance();\n") in text
    assert "        }\n        return temp;\n" in text


def test_callsite_sync_keeps_local_when_it_does_not_escape():
    src = CALLSITE_SRC.replace("        return temp;\n", "        return 0;\n")
    p, alt = _callsite_first_alt(src)
    actions = lower_alternative(alt, p)
    assert [a.op for a in actions] == [INSERT_BEFORE, REPLACE]
    body = apply_patch(p, actions).cls("CustomerInfo").method("withdraw").body
    assert isinstance(body[0], SyncBlock) and isinstance(body[0].body[0], LocalDecl)


def test_hoisted_program_resolves_every_name():
    p, alt = _callsite_first_alt(CALLSITE_SRC)
    patched = apply_patch(p, lower_alternative(alt, p))
    from racefix.lang.paths import Scope
    m = patched.cls("CustomerInfo").method("withdraw")
    assert "temp" in Scope(patched).locals_of("CustomerInfo", m)
    assert parse_program(render_program(patched)) == patched


def test_declare_variable_instance_and_static(datarace):
    s = _sync(datarace, "Account", "getBalance", 26, "this.v")
    (act,) = declare_variable("Account", "v", "Object", [s], datarace)
    assert act.op == INSERT_BEFORE and act.ref == ClassStart("Account")
    (decl,) = act.new
    assert (decl.visibility, decl.is_static, decl.is_final) == ("private", False, True)
    st = _sync(datarace, "Account", "getBalance", 26, "Account.v", in_static=True)
    (act,) = declare_variable("Account", "v", "Object", [st], datarace)
    assert act.new[0].is_static


def test_declare_variable_for_foreign_peer_is_package_visible(datarace):
    s = _sync(datarace, "CustomerInfo", "withdraw", 10, "Account.v")
    (act,) = declare_variable("Account", "v", "Object", [s], datarace, static=True)
    assert act.new[0].visibility is None and act.new[0].is_static


def test_declare_into_empty_class(parse):
    p = parse("class E { }")
    patched = apply_patch(p, declare_variable("E", "v", "Object", [], p))
    assert [f.name for f in patched.cls("E").fields] == ["v"]
    assert render_program(patched) == "class E {\n    private final Object v = new Object();\n}\n"


def test_declare_variable_name_collision(datarace):
    with pytest.raises(FreshNameError):
        declare_variable("Account", "balance", "Object", [], datarace)


def test_make_volatile(datarace, parse, caplog):
    (act,) = make_volatile("balance", "Account", datarace)
    assert act.ref == FieldRef("Account", "balance")
    assert "    private volatile int balance;\n" in render_program(apply_patch(datarace, [act]))
    assert make_volatile("x", "A", parse("class A { volatile int x; }")) == []
    with caplog.at_level(logging.WARNING):
        make_volatile("accounts", "CustomerInfo", datarace)
    assert "array" in caplog.text


def test_example1_patch_nests_inside_existing_lock(example1):
    (cluster,) = analyze(example1).clusters
    first = create_patch(encode_cluster(cluster, example1), example1).alternatives[0]
    c = apply_patch(example1, first).cls("Shared")
    (a1,) = c.method("a1").body
    assert isinstance(a1, SyncBlock)
    (outer,) = c.method("a3").body
    (inner,) = outer.body
    assert isinstance(inner, SyncBlock)
    assert (render_expr(a1.lock), render_expr(outer.lock), render_expr(inner.lock)) == (
        "this.m1", "m2", "this.m1")


def test_existing_sync_blocks_survive(example1):
    (cluster,) = analyze(example1).clusters
    for alt in create_patch(encode_cluster(cluster, example1), example1).alternatives:
        after = _syncblocks(apply_patch(example1, alt))
        before = _syncblocks(example1)
        assert all(after.count(x) >= before.count(x) for x in before)


def test_conflicting_replacements(parse):
    p = parse("class A { int x;\n void m() {\n x = 1;\n } }")
    a = insert_lock(_sync(p, "A", "m", 3, "this"), p)
    with pytest.raises(ConflictError):
        apply_patch(p, a + a)
    with pytest.raises(ConflictError):
        apply_patch(p, make_volatile("x", "A", p) * 2)


def test_stale_references(parse):
    p = parse("class A { int x;\n void m() {\n x = 1;\n } }")
    with pytest.raises(StalePatch):
        apply_patch(p, [AstAction(REPLACE, StmtSlice("A", "m", ((9, 9),)), ())])
    with pytest.raises(StalePatch):
        apply_patch(p, [AstAction(REPLACE, StmtSlice("B", "m", ((3, 2),)), ())])
    with pytest.raises(StalePatch):
        make_volatile("nope", "A", p)
    with pytest.raises(StalePatch):
        lower_alternative([Declare("Nope", "v")], p)


def test_insert_after(parse):
    p = parse("class A { int x;\n void m() {\n x = 1;\n } }")
    q = parse("class A { int x;\n void m() {\n x = 2;\n } }")
    extra = q.cls("A").method("m").body
    out = apply_patch(p, [AstAction(INSERT_AFTER, StmtSlice("A", "m", ((3, 2),)), extra)])
    assert "x = 1;\n        x = 2;" in render_program(out)


def test_patched_program_is_a_fixed_point_of_render_parse(datarace):
    (cluster,) = analyze(datarace).clusters
    first = create_patch(encode_cluster(cluster, datarace), datarace).alternatives[0]
    patched = apply_patch(datarace, first)
    assert parse_program(render_program(patched), patched.source_name) == patched


def test_unified_diff(datarace):
    (cluster,) = analyze(datarace).clusters
    first = create_patch(encode_cluster(cluster, datarace), datarace).alternatives[0]
    diff = unified_diff(datarace, apply_patch(datarace, first))
    assert diff.splitlines()[0].startswith("--- a/")
    assert "+    private final Object v = new Object();" in diff
    assert unified_diff(datarace, datarace) == ""


def test_field_decl_rendering():
    from racefix.lang.render import render_field
    f = FieldDecl("v", "Object", "private", True, True, False, None)
    assert render_field(f).strip() == "private static final Object v;"
