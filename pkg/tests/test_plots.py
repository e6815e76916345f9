from racefix import build_lock_order, repair
from racefix.plots import bug_history_figure, corpus_figure, lock_order_figure

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _is_png(path):
    return path.read_bytes()[:8] == PNG_MAGIC


def test_bug_history_figure(tmp_path, datarace):
    r = repair(datarace)
    out = bug_history_figure(r.bug_history, tmp_path / "h.png", "datarace")
    assert _is_png(out)


def test_lock_order_figure_with_and_without_edges(tmp_path, example1, datarace):
    fixed = repair(example1).program
    assert _is_png(lock_order_figure(build_lock_order(fixed), tmp_path / "a.png"))
    assert _is_png(lock_order_figure(build_lock_order(datarace), tmp_path / "b.png"))


def test_corpus_figure(tmp_path):
    out = corpus_figure(["a", "b"], [6, 0], [1, 0], tmp_path / "sub" / "c.png")
    assert _is_png(out)
