"""Hand-written programs shared by several test modules."""

from racefix import AccessPath, apply_patch, parse_program
from racefix.lang.nodes import walk_stmts
from racefix.lowering import REPLACE, AstAction, StmtSlice, insert_lock
from racefix.synthesis import Sync, SyncTarget

# Two clusters: ``this.xs.[*]`` can only take l1 or l2, and either choice closes
# a lock-order cycle with ``order``; ``this.y`` is fixable.
STUCK = """@ThreadSafe
class Stuck {
    private volatile int[] xs = new int[4];
    private final Object l1 = new Object();
    private final Object l2 = new Object();
    private int y;

    public void m1() {
        synchronized (l1) {
            set();
        }
    }

    public void m2() {
        synchronized (l2) {
            set();
        }
    }

    public void m3(Object p) {
        synchronized (p) {
            set();
        }
    }

    public void order(Object p) {
        synchronized (l1) {
            synchronized (l2) {
                synchronized (p) {
                    y = 0;
                }
            }
        }
    }

    public void set() {
        xs[0] = 1;
    }

    public void bump() {
        y++;
    }
}
"""

RACE_FREE = """@ThreadSafe
class Safe {
    private int x;

    public synchronized void set(int v) {
        x = v;
    }

    public synchronized int get() {
        return x;
    }
}
"""


def stuck():
    return parse_program(STUCK, "Stuck.mjcc")


def method_rewrite(before, after, cls, method):
    """One REPLACE turning ``cls.method``'s body in ``before`` into the one in ``after``."""
    old = before.cls(cls).method(method).body
    new = after.cls(cls).method(method).body
    return AstAction(REPLACE, StmtSlice(cls, method, tuple(s.span.start for s in old)), new)


def first_stmt(program, cls, method, line):
    m = program.cls(cls).method(method)
    return next(s for s in walk_stmts(m.body) if s.span.line == line)


def _wrap(program, method, nth, lock):
    """Wrap the ``nth`` statement (pre-order) of ``Shared.method`` in ``lock``."""
    m = program.cls("Shared").method(method)
    stmt = list(walk_stmts(m.body))[nth]
    sync = Sync((SyncTarget("Shared", method, stmt.span, AccessPath.parse(lock)),), lock)
    return apply_patch(program, insert_lock(sync, program))


def naive_example1(example1):
    """All three order-sensitive insertions, each fixing one race pair in isolation."""
    p = _wrap(example1, "a1", 0, "this.m1")      # (a1, a2): give a1 the lock m1
    p = _wrap(p, "a3", 1, "this.m1")             # (a2, a3): give a3 the lock m1
    p = _wrap(p, "a1", 1, "this.m2")             # (a1, a3): give a1 the lock m2
    return p
