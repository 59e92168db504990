import pytest

from elephants.trace import FlowKey, PacketRecord

# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def key(i: int, proto: int = 6) -> FlowKey:
    return FlowKey(f"10.0.{i // 256}.{i % 256}", "10.0.0.254", 1000 + i % 1000, 80, proto)


def records(pairs) -> list[PacketRecord]:
    """[(timestamp, flow index), ...] -> PacketRecords."""
    return [PacketRecord(float(t), key(i)) for t, i in pairs]


@pytest.fixture
def mk():
    return records


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
