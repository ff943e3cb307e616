"""Bidirectional code-to-city linking.

Maps source locations to landscape entities and back, computes per-file
runtime highlight markers, and translates editor interactions into session
events (and session events into editor directives). The same event
vocabulary rides both transports: the in-page embed bridge and the editor
WebSocket channel.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .model import Landscape
from .snapshots import Snapshot

# embed bridge message vocabulary (consumed bit-for-bit by embedded UIs)
BRIDGE_TO_HOST = "toHost"
BRIDGE_TO_EMBED = "toEmbed"
BRIDGE_TYPES = (
    "revealInEditor",
    "highlightSelection",
    "focusEntity",
    "snapshotUpdated",
)


class UnmappedLocation(ValueError):
    pass


@dataclass(frozen=True)
class MethodDecl:
    name: str
    line: int


@dataclass(frozen=True)
class ClassDecl:
    name: str
    line: int
    methods: tuple[MethodDecl, ...] = ()


@dataclass(frozen=True)
class FileRecord:
    """One scanned source file, as produced by the workspace indexer."""

    path: str
    package_decl: str
    classes: tuple[ClassDecl, ...] = ()


@dataclass(frozen=True)
class ClassLocation:
    file: str
    class_line: int
    method_lines: dict[str, int]


@dataclass(frozen=True)
class SourceMap:
    """Entity-to-location and location-to-entity mapping for a landscape.

    file_decls holds, per file, the (line, entity_id, kind) declarations in
    line order; declaration regions run to the next declaration, so lookups
    find the most specific covering entity.
    """

    by_entity: dict[str, ClassLocation] = field(default_factory=dict)
    file_decls: dict[str, tuple[tuple[int, str, str], ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class HighlightMarker:
    file: str
    line: int
    kind: str  # "class" | "method"
    entity_id: str
    call_count: int
    label: str


@dataclass(frozen=True)
class OutboundEvent:
    """A session event draft (kind + payload) the caller submits to the hub."""

    kind: str
    payload: dict


@dataclass(frozen=True)
class RevealInEditor:
    file: str
    line: int


@dataclass(frozen=True)
class HighlightSelection:
    file: str | None
    range: dict | None
    user: str


# ---------------------------------------------------------------------------
# Building the map
# ---------------------------------------------------------------------------


def build_source_map(workspace_index: list[FileRecord], landscape: Landscape) -> SourceMap:
    """Match scanned declarations against landscape entities.

    A file class matches by (package declaration, class name); when several
    applications contain the same pair, the lexicographically smallest app
    wins and the rest stay unmapped. Unmatched entities and declarations are
    simply absent (unexecuted code, or code not in the workspace).
    """
    candidates: dict[tuple[str, str], list] = {}

    def walk(app_name: str, pkg, chain: tuple[str, ...]) -> None:
        dotted = ".".join(chain) if chain != ("",) else ""
        for cls in pkg.classes.values():
            candidates.setdefault((dotted, cls.name), []).append((app_name, cls))
        for sub in pkg.subpackages.values():
            walk(app_name, sub, chain + (sub.name,))

    for app in landscape.applications.values():
        for pkg in app.root_packages.values():
            walk(app.name, pkg, (pkg.name,))

    by_entity: dict[str, ClassLocation] = {}
    decls: dict[str, list[tuple[int, str, str]]] = {}
    for record in sorted(workspace_index, key=lambda r: r.path):
        for cls_decl in record.classes:
            matches = candidates.get((record.package_decl, cls_decl.name))
            if not matches:
                continue
            _, cls_node = min(matches, key=lambda pair: pair[0])
            if cls_node.entity_id in by_entity:
                continue
            method_lines: dict[str, int] = {}
            file_entries = decls.setdefault(record.path, [])
            file_entries.append((cls_decl.line, cls_node.entity_id, "class"))
            for method_decl in cls_decl.methods:
                method_node = cls_node.methods.get(method_decl.name)
                if method_node is None or method_decl.name in method_lines:
                    continue
                method_lines[method_decl.name] = method_decl.line
                file_entries.append((method_decl.line, method_node.entity_id, "method"))
            by_entity[cls_node.entity_id] = ClassLocation(
                record.path, cls_decl.line, method_lines
            )
    return SourceMap(
        by_entity=by_entity,
        file_decls={path: tuple(sorted(entries)) for path, entries in decls.items()},
    )


def location_of(source_map: SourceMap, entity_id: str) -> tuple[str, int] | None:
    """Declaration (file, line) of a class or method entity, if mapped."""
    loc = source_map.by_entity.get(entity_id)
    if loc is not None:
        return loc.file, loc.class_line
    if "/" in entity_id:
        class_id, method_name = entity_id.rsplit("/", 1)
        loc = source_map.by_entity.get(class_id)
        if loc is not None and method_name in loc.method_lines:
            return loc.file, loc.method_lines[method_name]
    return None


def entity_at(source_map: SourceMap, file: str, line: int) -> str | None:
    """Most specific entity whose declaration region covers the line."""
    entries = source_map.file_decls.get(file)
    if not entries:
        return None
    idx = bisect.bisect_right(entries, (line, "￿", "￿")) - 1
    if idx < 0:
        return None
    return entries[idx][1]


# ---------------------------------------------------------------------------
# Highlights
# ---------------------------------------------------------------------------


def highlights_for(
    snapshot: Snapshot, source_map: SourceMap, file: str
) -> list[HighlightMarker]:
    """Gutter/lens markers for one file: executed methods and their classes."""
    markers: list[HighlightMarker] = []
    for class_id, loc in source_map.by_entity.items():
        if loc.file != file:
            continue
        method_markers: list[HighlightMarker] = []
        for method_name, line in loc.method_lines.items():
            method_id = "%s/%s" % (class_id, method_name)
            metrics = snapshot.method_metrics.get(method_id)
            if metrics is None or metrics.call_count < 1:
                continue
            method_markers.append(
                HighlightMarker(
                    file=file,
                    line=line,
                    kind="method",
                    entity_id=method_id,
                    call_count=metrics.call_count,
                    label="%d calls" % metrics.call_count,
                )
            )
        if method_markers:
            class_metrics = snapshot.class_metrics.get(class_id)
            total = class_metrics.method_call_count if class_metrics else sum(
                m.call_count for m in method_markers
            )
            markers.append(
                HighlightMarker(
                    file=file,
                    line=loc.class_line,
                    kind="class",
                    entity_id=class_id,
                    call_count=total,
                    label="%d calls" % total,
                )
            )
            markers.extend(method_markers)
    markers.sort(key=lambda m: (m.line, m.entity_id))
    return markers


def marker_doc(marker: HighlightMarker) -> dict:
    return {
        "file": marker.file,
        "line": marker.line,
        "kind": marker.kind,
        "entity_id": marker.entity_id,
        "call_count": marker.call_count,
        "label": marker.label,
    }


# ---------------------------------------------------------------------------
# Interaction translation
# ---------------------------------------------------------------------------


def editor_interaction_to_event(
    source_map: SourceMap, interaction: dict, user: str
) -> OutboundEvent | RevealInEditor | None:
    """Translate one editor interaction.

    lens_click and selection_change become session events; comm_line_click
    is the city-to-editor direction and yields a RevealInEditor directive
    (or None when the entity has no source location).
    """
    kind = interaction.get("kind")
    if kind == "lens_click":
        entity = entity_at(source_map, interaction.get("file"), interaction.get("line"))
        if entity is None:
            raise UnmappedLocation(
                "%s:%s" % (interaction.get("file"), interaction.get("line"))
            )
        return OutboundEvent("EntitySelected", {"entity_id": entity})
    if kind == "selection_change":
        return OutboundEvent(
            "TextSelection",
            {"file": interaction.get("file"), "range": interaction.get("range")},
        )
    if kind == "comm_line_click":
        located = location_of(source_map, interaction.get("entity_id", ""))
        if located is None:
            return None
        return RevealInEditor(file=located[0], line=located[1])
    raise ValueError("unknown interaction kind: %r" % kind)


def sv_event_to_editor(
    source_map: SourceMap, event_or_click
) -> RevealInEditor | HighlightSelection | None:
    """Translate a session event (or a raw city click) into an editor directive."""
    if isinstance(event_or_click, dict) and "clicked" in event_or_click:
        located = location_of(source_map, event_or_click["clicked"])
        if located is None:
            return None
        return RevealInEditor(file=located[0], line=located[1])
    event = event_or_click
    if event.kind == "TextSelection":
        return HighlightSelection(
            file=event.payload.get("file"),
            range=event.payload.get("range"),
            user=event.origin_user,
        )
    if event.kind == "EntitySelected":
        entity = event.payload.get("entity_id")
        if entity is None:
            return None
        located = location_of(source_map, entity)
        if located is None:
            return None
        return RevealInEditor(file=located[0], line=located[1])
    return None


def directive_doc(directive: RevealInEditor | HighlightSelection) -> dict:
    if isinstance(directive, RevealInEditor):
        return {
            "kind": "RevealInEditor",
            "payload": {"file": directive.file, "line": directive.line},
        }
    return {
        "kind": "HighlightSelection",
        "payload": {
            "file": directive.file,
            "range": directive.range,
            "user": directive.user,
        },
    }


def bridge_message(direction: str, type_: str, payload: dict) -> dict:
    """In-page embed bridge envelope."""
    if direction not in (BRIDGE_TO_HOST, BRIDGE_TO_EMBED):
        raise ValueError("direction must be toHost or toEmbed")
    if type_ not in BRIDGE_TYPES:
        raise ValueError("unknown bridge message type: %r" % type_)
    return {"direction": direction, "type": type_, "payload": payload}
