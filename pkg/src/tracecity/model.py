"""Domain model: spans, reassembled traces, and the structural landscape.

Everything here is a plain value; operations return new objects and never
mutate their inputs, so the whole module is safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

TRACE_ID_LEN = 32
SPAN_ID_LEN = 16

_HEX_DIGITS = set("0123456789abcdef")


class MalformedFqn(ValueError):
    """A fully-qualified method name that cannot be split into class+method."""


# ---------------------------------------------------------------------------
# Spans and traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    """One timed method execution inside a distributed trace."""

    trace_id: str
    span_id: str
    parent_span_id: str | None
    start_ns: int
    end_ns: int
    app_name: str
    app_instance: str
    fqn: str
    host: str

    @property
    def duration_ns(self) -> int:
        return self.end_ns - self.start_ns


@dataclass(frozen=True)
class Trace:
    """Spans of one trace_id with parent links resolved into a forest."""

    trace_id: str
    spans: tuple[Span, ...]
    roots: tuple[str, ...]
    parent_of: dict[str, str]

    @property
    def earliest_start_ns(self) -> int:
        return min(s.start_ns for s in self.spans)

    def span_by_id(self, span_id: str) -> Span:
        for s in self.spans:
            if s.span_id == span_id:
                return s
        raise KeyError(span_id)


@dataclass(frozen=True)
class OrphanSpan:
    """A span excluded from trace assembly, with the rejection reason."""

    span: Span
    reason: str


def _valid_hex_id(value: str, length: int) -> bool:
    return (
        isinstance(value, str)
        and len(value) == length
        and all(c in _HEX_DIGITS for c in value)
    )


def validate_span(span: Span) -> str | None:
    """Return a rejection reason, or None when the span is well-formed.

    An all-zero id is not a valid trace/span id; a missing parent is
    expressed as None (the wire layer maps an all-zero parentSpanId to it).
    """
    if not _valid_hex_id(span.trace_id, TRACE_ID_LEN):
        return "traceId must be %d lowercase hex chars" % TRACE_ID_LEN
    if set(span.trace_id) == {"0"}:
        return "traceId must be nonzero"
    if not _valid_hex_id(span.span_id, SPAN_ID_LEN):
        return "spanId must be %d lowercase hex chars" % SPAN_ID_LEN
    if set(span.span_id) == {"0"}:
        return "spanId must be nonzero"
    if span.parent_span_id is not None and not _valid_hex_id(
        span.parent_span_id, SPAN_ID_LEN
    ):
        return "parentSpanId must be %d lowercase hex chars" % SPAN_ID_LEN
    if not isinstance(span.start_ns, int) or not isinstance(span.end_ns, int):
        return "startNs/endNs must be integers"
    if span.end_ns < span.start_ns:
        return "endNs must be >= startNs"
    if not span.app_name:
        return "appName must be non-empty"
    try:
        parse_fqn(span.fqn)
    except MalformedFqn as exc:
        return str(exc)
    return None


def assemble_traces(
    spans: list[Span],
) -> tuple[list[Trace], list[OrphanSpan]]:
    """Group spans by trace_id and resolve parent links within each group.

    Spans whose parent_span_id does not resolve within their group are roots
    of that trace (a distributed trace legitimately continues across
    processes); only structurally invalid spans become orphans. Duplicate
    span_ids within a group keep the first occurrence in (start_ns, span_id)
    order. Parent cycles are broken by promoting the cycle member with the
    smallest (start_ns, span_id) to a root. Traces come back sorted by their
    earliest span start.
    """
    orphans: list[OrphanSpan] = []
    groups: dict[str, list[Span]] = {}
    for span in spans:
        reason = validate_span(span)
        if reason is not None:
            orphans.append(OrphanSpan(span, reason))
        else:
            groups.setdefault(span.trace_id, []).append(span)

    traces: list[Trace] = []
    for trace_id, members in groups.items():
        members.sort(key=lambda s: (s.start_ns, s.span_id))
        by_id: dict[str, Span] = {}
        kept: list[Span] = []
        for span in members:
            if span.span_id in by_id:
                orphans.append(OrphanSpan(span, "duplicate span_id"))
                continue
            by_id[span.span_id] = span
            kept.append(span)

        parent_of: dict[str, str] = {}
        for span in kept:
            parent = span.parent_span_id
            if parent is not None and parent in by_id and parent != span.span_id:
                parent_of[span.span_id] = parent
        _break_cycles(parent_of, by_id)

        roots = tuple(s.span_id for s in kept if s.span_id not in parent_of)
        traces.append(Trace(trace_id, tuple(kept), roots, parent_of))

    traces.sort(key=lambda t: (t.earliest_start_ns, t.trace_id))
    return traces, orphans


def _break_cycles(parent_of: dict[str, str], by_id: dict[str, Span]) -> None:
    # 0/absent = unvisited, 1 = on current chain, 2 = finished
    color: dict[str, int] = {}
    for start in list(parent_of):
        if color.get(start):
            continue
        chain: list[str] = []
        node: str | None = start
        while node is not None and color.get(node, 0) == 0:
            color[node] = 1
            chain.append(node)
            node = parent_of.get(node)
        if node is not None and color.get(node) == 1:
            cycle = chain[chain.index(node):]
            breaker = min(cycle, key=lambda sid: (by_id[sid].start_ns, sid))
            del parent_of[breaker]
        for sid in chain:
            color[sid] = 2


# ---------------------------------------------------------------------------
# Fully-qualified names and entity identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StructurePath:
    """Package chain, class token, and method name of one code entity."""

    packages: tuple[str, ...]
    class_name: str
    method_name: str


def parse_fqn(fqn: str) -> StructurePath:
    """Split "pkg.pkg.Class.method(sig?)" into its structural parts.

    The parenthesized signature suffix, when present, is stripped before
    splitting (signatures may themselves contain dots). Nested-class tokens
    like "Outer$Inner" stay one class name.
    """
    paren = fqn.find("(")
    core = fqn[:paren] if paren >= 0 else fqn
    segments = core.split(".")
    if len(segments) < 2:
        raise MalformedFqn("fqn needs at least class and method segments: %r" % fqn)
    if any(not seg for seg in segments):
        raise MalformedFqn("fqn has an empty segment: %r" % fqn)
    return StructurePath(tuple(segments[:-2]), segments[-2], segments[-1])


def strip_signature(fqn: str) -> str:
    paren = fqn.find("(")
    return fqn[:paren] if paren >= 0 else fqn


def application_entity_id(app_name: str) -> str:
    return app_name


def package_entity_id(app_name: str, packages: tuple[str, ...]) -> str:
    return "%s/%s" % (app_name, ".".join(packages))


def class_entity_id(app_name: str, path: StructurePath) -> str:
    return "%s/%s/%s" % (app_name, ".".join(path.packages), path.class_name)


def entity_id_of(app_name: str, path: StructurePath) -> str:
    """Canonical method id "app/pkg1.pkg2/Class/method".

    Readable on purpose (event logs and fixtures stay auditable); the empty
    package chain keeps its empty segment ("app//Class/method") so ids stay
    injective across node kinds.
    """
    return "%s/%s/%s/%s" % (
        app_name,
        ".".join(path.packages),
        path.class_name,
        path.method_name,
    )


# ---------------------------------------------------------------------------
# Landscape tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodNode:
    name: str
    entity_id: str


@dataclass(frozen=True)
class ClassNode:
    name: str
    entity_id: str
    methods: dict[str, MethodNode] = field(default_factory=dict)


@dataclass(frozen=True)
class PackageNode:
    name: str
    entity_id: str
    subpackages: dict[str, "PackageNode"] = field(default_factory=dict)
    classes: dict[str, ClassNode] = field(default_factory=dict)


@dataclass(frozen=True)
class Application:
    name: str
    instances: tuple[str, ...] = ()
    root_packages: dict[str, PackageNode] = field(default_factory=dict)


@dataclass(frozen=True)
class Landscape:
    """Static structure tree: applications, packages, classes, methods."""

    system_id: str
    applications: dict[str, Application] = field(default_factory=dict)


def empty_landscape(system_id: str) -> Landscape:
    return Landscape(system_id=system_id)


def _package_chain(path: StructurePath) -> tuple[str, ...]:
    # classes without a package live in a synthetic "" (default) package
    return path.packages if path.packages else ("",)


def merge_structure(landscape: Landscape, app: str, path: StructurePath) -> Landscape:
    """Insert one app/packages/class/method path; idempotent, order-free."""
    apps = dict(landscape.applications)
    application = apps.get(app, Application(name=app))
    chain = _package_chain(path)
    roots = _merge_packages(application.root_packages, app, chain, 0, path)
    apps[app] = replace(application, root_packages=roots)
    return replace(landscape, applications=apps)


def _merge_packages(
    packages: dict[str, PackageNode],
    app: str,
    chain: tuple[str, ...],
    depth: int,
    path: StructurePath,
) -> dict[str, PackageNode]:
    name = chain[depth]
    node = packages.get(
        name, PackageNode(name, package_entity_id(app, chain[: depth + 1]))
    )
    if depth + 1 < len(chain):
        node = replace(
            node, subpackages=_merge_packages(node.subpackages, app, chain, depth + 1, path)
        )
    else:
        cls = node.classes.get(
            path.class_name, ClassNode(path.class_name, class_entity_id(app, path))
        )
        if path.method_name not in cls.methods:
            methods = dict(cls.methods)
            methods[path.method_name] = MethodNode(
                path.method_name, entity_id_of(app, path)
            )
            cls = replace(cls, methods=methods)
        classes = dict(node.classes)
        classes[path.class_name] = cls
        node = replace(node, classes=classes)
    out = dict(packages)
    out[name] = node
    return out


def with_instance(landscape: Landscape, app: str, instance: str) -> Landscape:
    """Record an observed application instance name."""
    apps = dict(landscape.applications)
    application = apps.get(app, Application(name=app))
    if app in landscape.applications and instance in application.instances:
        return landscape
    instances = tuple(sorted(set(application.instances) | {instance}))
    apps[app] = replace(application, instances=instances)
    return replace(landscape, applications=apps)


def entity_ids(landscape: Landscape) -> set[str]:
    """Every entity id in the landscape: apps, package prefixes, classes, methods."""
    ids: set[str] = set()

    def walk(pkg: PackageNode) -> None:
        ids.add(pkg.entity_id)
        for cls in pkg.classes.values():
            ids.add(cls.entity_id)
            for method in cls.methods.values():
                ids.add(method.entity_id)
        for sub in pkg.subpackages.values():
            walk(sub)

    for app in landscape.applications.values():
        ids.add(application_entity_id(app.name))
        for pkg in app.root_packages.values():
            walk(pkg)
    return ids


def landscape_doc(landscape: Landscape) -> dict:
    """Canonical JSON-ready form: children sorted by name, deterministic."""

    def package_doc(pkg: PackageNode) -> dict:
        return {
            "name": pkg.name,
            "entity_id": pkg.entity_id,
            "subpackages": [
                package_doc(p) for _, p in sorted(pkg.subpackages.items())
            ],
            "classes": [
                {
                    "name": c.name,
                    "entity_id": c.entity_id,
                    "methods": [
                        {"name": m.name, "entity_id": m.entity_id}
                        for _, m in sorted(c.methods.items())
                    ],
                }
                for _, c in sorted(pkg.classes.items())
            ],
        }

    return {
        "system_id": landscape.system_id,
        "applications": [
            {
                "name": a.name,
                "entity_id": application_entity_id(a.name),
                "instances": list(a.instances),
                "root_packages": [
                    package_doc(p) for _, p in sorted(a.root_packages.items())
                ],
            }
            for _, a in sorted(landscape.applications.items())
        ],
    }
