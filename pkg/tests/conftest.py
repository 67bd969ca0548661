import re

import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the line is printed again in the summary."""
    results = request.config.stash[_RESULTS]

    def record(key, title, passed, detail=""):
        results.append((str(key), title, bool(passed), detail))
        print(f"criterion {key} [{title}]: {'PASS' if passed else 'FAIL'} {detail}".rstrip())
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    grouped = {}
    for key, title, passed, detail in results:
        number = int(re.match(r"\d+", key).group())
        grouped.setdefault(number, []).append((key, title, passed, detail))
    terminalreporter.section("acceptance criteria")
    for number in sorted(grouped):
        parts = grouped[number]
        ok = all(p for _, _, p, _ in parts)
        if len(parts) == 1:
            _, title, _, detail = parts[0]
            text = f"{title}; {detail}" if detail else title
        else:
            text = "; ".join(f"{k} {t} {'PASS' if p else 'FAIL'}" for k, t, p, _ in sorted(parts))
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({text})")
