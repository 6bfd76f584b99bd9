import pytest

from blind_distill import protocol

TOPOLOGY = {"transcripts": 0, "records": 0, "violations": 0}
_created: list = []
_original_init = protocol.Transcript.__init__


def _tracking_init(self, *args, **kwargs):
    _original_init(self, *args, **kwargs)
    _created.append(self)


protocol.Transcript.__init__ = _tracking_init


@pytest.fixture(autouse=True)
def no_bob_to_bob_records():
    """Every transcript built during a test must route nothing between the Bobs."""
    _created.clear()
    yield
    bad = [t for t in _created if t.bob_to_bob()]
    TOPOLOGY["transcripts"] += len(_created)
    TOPOLOGY["records"] += sum(len(t) for t in _created)
    TOPOLOGY["violations"] += len(bad)
    _created.clear()
    assert not bad, "a transcript contains a Bob1<->Bob2 record"


def pytest_terminal_summary(terminalreporter):
    terminalreporter.write_line(
        f"topology audit: {TOPOLOGY['transcripts']} transcripts, {TOPOLOGY['records']} records, "
        f"{TOPOLOGY['violations']} with Bob1<->Bob2 traffic"
    )
