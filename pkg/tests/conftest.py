"""Shared builders: well-formed random spans, traces, and snapshots."""
from __future__ import annotations

import random

import pytest

from tracecity.model import Span, assemble_traces
from tracecity.snapshots import DEFAULT_INTERVAL_NS, WindowId, aggregate, window_of

BASE_NS = 1_700_000_000_000_000_000  # fixed reference instant, window-interior

APPS = ("customers-service", "vets-service", "visits-service", "api-gateway")
PACKAGE_POOL = (
    ("org", "samples", "model"),
    ("org", "samples", "web"),
    ("org", "samples", "system"),
    ("net", "core",),
    (),
)
CLASS_POOL = ("Owner", "Pet", "Visit", "Vet", "OwnerRepository", "ApiController")
METHOD_POOL = ("findById", "save", "getName", "list", "<init>", "handle")


def hex_trace_id(n: int) -> str:
    return "%032x" % (n + 1)


def hex_span_id(n: int) -> str:
    return "%016x" % (n + 1)


def make_span(
    seq: int,
    trace_seq: int,
    parent: str | None = None,
    start_ns: int = BASE_NS,
    duration_ns: int = 1_000_000,
    app: str = "customers-service",
    fqn: str = "org.samples.model.Owner.getName",
    instance: str = "inst-1",
) -> Span:
    return Span(
        trace_id=hex_trace_id(trace_seq),
        span_id=hex_span_id(seq),
        parent_span_id=parent,
        start_ns=start_ns,
        end_ns=start_ns + duration_ns,
        app_name=app,
        app_instance=instance,
        fqn=fqn,
        host="host-a",
    )


def random_fqn(rng: random.Random) -> str:
    packages = rng.choice(PACKAGE_POOL)
    cls = rng.choice(CLASS_POOL)
    method = rng.choice(METHOD_POOL)
    return ".".join(packages + (cls, method))


def random_trace_spans(
    rng: random.Random,
    trace_seq: int,
    id_counter: list[int],
    size: int,
    window_start_ns: int,
    window_len_ns: int = DEFAULT_INTERVAL_NS,
    missing_parent_chance: float = 0.1,
) -> list[Span]:
    """One trace's spans with a random forest shape inside one window."""
    spans: list[Span] = []
    for i in range(size):
        id_counter[0] += 1
        parent = None
        if i > 0:
            if rng.random() < missing_parent_chance:
                # unresolvable parent: a distributed entry from another process
                parent = "%016x" % rng.randrange(2**63, 2**64)
            else:
                parent = rng.choice(spans).span_id
        start = window_start_ns + rng.randrange(0, window_len_ns - 2_000_000)
        spans.append(
            make_span(
                id_counter[0],
                trace_seq,
                parent=parent,
                start_ns=start,
                duration_ns=rng.randrange(1_000, 2_000_000),
                app=rng.choice(APPS),
                fqn=random_fqn(rng),
                instance="inst-%d" % rng.randrange(1, 3),
            )
        )
    return spans


def random_span_population(
    rng: random.Random, n_spans: int, n_traces: int, base_ns: int = BASE_NS
) -> list[Span]:
    """n_spans spread over n_traces, shuffled, all within one window."""
    window_start = window_of(base_ns) * DEFAULT_INTERVAL_NS
    counter = [0]
    spans: list[Span] = []
    sizes = [n_spans // n_traces] * n_traces
    for i in range(n_spans % n_traces):
        sizes[i] += 1
    for t, size in enumerate(sizes):
        spans.extend(random_trace_spans(rng, t, counter, size, window_start))
    rng.shuffle(spans)
    return spans


def snapshot_of(spans: list[Span], system_id: str = "sys"):
    """Aggregate spans (all assumed to root in one window) into a snapshot."""
    traces, orphans = assemble_traces(spans)
    assert not orphans
    index = window_of(min(s.start_ns for s in spans)) if spans else 0
    window = WindowId(system_id, index)
    return aggregate(traces, window)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC17F)
