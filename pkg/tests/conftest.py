import pytest

from shortcast import fixtures

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def check(number: int, title: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" -- {detail}"
        _CRITERIA.append(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def shortage_dir(tmp_path):
    d = tmp_path / "shortage"
    fixtures.write_line_dataset(d)
    return d


@pytest.fixture
def demo_dir(tmp_path):
    d = tmp_path / "demo"
    fixtures.write_line_dataset(d, fixtures.DEMO_PRODUCTS)
    return d


@pytest.fixture
def var_dir(tmp_path):
    d = tmp_path / "var"
    fixtures.write_var_dataset(d)
    return d
