import pytest

from qfldp.config import TrainingConfig
from qfldp.experiment import run_experiment

SEEDS = (0, 1, 2)

# (number, title, passed, detail) rows filled in by the acceptance tests
ACCEPTANCE = []


@pytest.fixture(scope="session")
def experiment(tmp_path_factory):
    """Run (or reuse) a full experiment for ``TrainingConfig`` overrides.

    Runs are cached for the whole session by their resolved config, so the
    expensive preset runs are shared between test modules.
    """
    root = tmp_path_factory.mktemp("runs")
    cache = {}

    def run(**overrides):
        config = TrainingConfig().override(**overrides)
        key = config.to_text()
        if key not in cache:
            cache[key] = run_experiment(config, output_dir=str(root / f"run-{len(cache)}"))
        return cache[key]

    return run


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion, then assert it."""

    def record(number, title, passed, detail):
        ACCEPTANCE.append((number, title, bool(passed), detail))
        assert passed, f"criterion {number} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda row: row[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
