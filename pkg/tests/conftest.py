import pytest

from satcc.corpus import corpus_files
from satcc.frontend import parse
from satcc.pipeline import VARIANTS, PipelineConfig, optimize_module

_cache: dict = {}


def corpus_run(path, variant):
    """Optimize one corpus file with one variant; cached for the whole session."""
    key = (str(path), variant)
    if key not in _cache:
        m = parse(path.read_text(), str(path))
        text, report, results = optimize_module(m, PipelineConfig.for_variant(variant))
        _cache[key] = (m, text, report, results)
    return _cache[key]


@pytest.fixture(scope="session")
def corpus():
    return corpus_files()


@pytest.fixture(scope="session")
def variants():
    return list(VARIANTS)


@pytest.fixture(scope="session")
def run():
    return corpus_run


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance(request):
    """``record(n, title, ok, detail)`` prints and stores one line per criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(n, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] AC{n:>2} {title}" + (f" ({detail})" if detail else "")
        store.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
