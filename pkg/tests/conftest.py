import pytest

from flowguard.fixtures import rag_flow, read_agent
from flowguard.flowfile import from_fixture, serialize_flow


@pytest.fixture(scope="session")
def agent():
    return read_agent()


@pytest.fixture(scope="session")
def rag_barrier():
    return rag_flow(barrier=True)


@pytest.fixture(scope="session")
def rag_no_barrier():
    return rag_flow(barrier=False)


@pytest.fixture(scope="session")
def agent_flow_text(agent):
    return serialize_flow(from_fixture(agent))


@pytest.fixture(scope="session")
def rag_barrier_flow_text(rag_barrier):
    return serialize_flow(from_fixture(rag_barrier))


@pytest.fixture(scope="session")
def rag_no_barrier_flow_text(rag_no_barrier):
    return serialize_flow(from_fixture(rag_no_barrier))
