import pytest

from stacks.qdc import QdcRecord
from stacks.repository import MetadataRepository


class FakeClock:
    """Settable epoch-seconds clock so datestamp behavior is exact."""

    def __init__(self, start=1_700_000_000):
        self.now = start

    def __call__(self):
        return self.now

    def tick(self, seconds=1):
        self.now += seconds
        return self.now


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def repo(clock):
    return MetadataRepository(clock=clock)


def collection_qdc(title="Desk Physics Demos", description="Bench-scale demos."):
    return QdcRecord().add("title", title).add("description", description)


def item_qdc(title="Comet basics", identifier="http://example.org/comets", **extra):
    rec = QdcRecord().add("title", title).add("identifier", identifier)
    for element, value in extra.items():
        rec.add(element, value)
    return rec


@pytest.fixture
def collection(repo):
    return repo.register_collection(collection_qdc(), "semantic", [("any", "open")])
