import pytest

from tracecity.editor import (
    BRIDGE_TO_EMBED,
    ClassDecl,
    FileRecord,
    HighlightSelection,
    MethodDecl,
    OutboundEvent,
    RevealInEditor,
    UnmappedLocation,
    bridge_message,
    build_source_map,
    editor_interaction_to_event,
    entity_at,
    highlights_for,
    location_of,
    sv_event_to_editor,
)
from tracecity.collab import SessionEvent
from tracecity.model import StructurePath, empty_landscape, merge_structure
from tracecity.snapshots import ClassMetrics, MethodMetrics, Snapshot, WindowId

from oracles import highlight_join


def landscape_for(*entries):
    landscape = empty_landscape("sys")
    for app, packages, cls, method in entries:
        landscape = merge_structure(landscape, app, StructurePath(packages, cls, method))
    return landscape


OWNER_FILE = FileRecord(
    path="src/model/Owner.java",
    package_decl="org.samples.model",
    classes=(
        ClassDecl(
            "Owner",
            line=5,
            methods=(MethodDecl("<init>", 8), MethodDecl("getName", 12), MethodDecl("unused", 20)),
        ),
    ),
)

REPO_FILE = FileRecord(
    path="src/model/OwnerRepository.java",
    package_decl="org.samples.model",
    classes=(ClassDecl("OwnerRepository", line=4, methods=(MethodDecl("findById", 9),)),),
)

LANDSCAPE = landscape_for(
    ("customers", ("org", "samples", "model"), "Owner", "<init>"),
    ("customers", ("org", "samples", "model"), "Owner", "getName"),
    ("customers", ("org", "samples", "model"), "OwnerRepository", "findById"),
)


def test_build_empty_index():
    source_map = build_source_map([], LANDSCAPE)
    assert source_map.by_entity == {}


def test_build_direct_match():
    record = FileRecord(
        path="A.java",
        package_decl="a",
        classes=(ClassDecl("B", line=3, methods=(MethodDecl("m", 12),)),),
    )
    landscape = landscape_for(("app", ("a",), "B", "m"))
    source_map = build_source_map([record], landscape)
    assert location_of(source_map, "app/a/B/m") == ("A.java", 12)
    assert location_of(source_map, "app/a/B") == ("A.java", 3)


def test_unmatched_declarations_absent():
    source_map = build_source_map([OWNER_FILE, REPO_FILE], LANDSCAPE)
    owner = source_map.by_entity["customers/org.samples.model/Owner"]
    assert "unused" not in owner.method_lines  # not in the landscape
    assert location_of(source_map, "customers/org.samples.model/Ghost") is None


def test_entity_at_specificity():
    source_map = build_source_map([OWNER_FILE], LANDSCAPE)
    file = OWNER_FILE.path
    assert entity_at(source_map, file, 12) == "customers/org.samples.model/Owner/getName"
    assert entity_at(source_map, file, 14) == "customers/org.samples.model/Owner/getName"
    # inside the class but before any method region
    assert entity_at(source_map, file, 6) == "customers/org.samples.model/Owner"
    assert entity_at(source_map, file, 1) is None
    assert entity_at(source_map, "nope.java", 3) is None


def test_round_trip_all_mapped_entities():
    source_map = build_source_map([OWNER_FILE, REPO_FILE], LANDSCAPE)
    for class_id, loc in source_map.by_entity.items():
        assert entity_at(source_map, loc.file, loc.class_line) == class_id
        for method, line in loc.method_lines.items():
            assert entity_at(source_map, loc.file, line) == "%s/%s" % (class_id, method)


def test_duplicate_class_across_apps_picks_smallest_app():
    landscape = landscape_for(
        ("beta", ("a",), "B", "m"),
        ("alpha", ("a",), "B", "m"),
    )
    record = FileRecord(
        path="B.java", package_decl="a", classes=(ClassDecl("B", 1, (MethodDecl("m", 2),)),)
    )
    source_map = build_source_map([record], landscape)
    assert "alpha/a/B" in source_map.by_entity
    assert "beta/a/B" not in source_map.by_entity


# ---------------------------------------------------------------------------
# highlights
# ---------------------------------------------------------------------------


def snapshot_with_metrics(method_metrics, class_metrics):
    return Snapshot(
        snapshot_id="x",
        window=WindowId("sys", 0),
        landscape=LANDSCAPE,
        class_metrics=class_metrics,
        method_metrics=method_metrics,
        edges=(),
    )


def test_highlights_empty_for_unexecuted_file():
    source_map = build_source_map([OWNER_FILE], LANDSCAPE)
    snapshot = snapshot_with_metrics({}, {})
    assert highlights_for(snapshot, source_map, OWNER_FILE.path) == []


def test_highlights_marker_labels():
    source_map = build_source_map([OWNER_FILE], LANDSCAPE)
    owner = "customers/org.samples.model/Owner"
    snapshot = snapshot_with_metrics(
        {owner + "/getName": MethodMetrics(3, 900)},
        {owner: ClassMetrics(3, 0)},
    )
    markers = highlights_for(snapshot, source_map, OWNER_FILE.path)
    assert [m.kind for m in markers] == ["class", "method"]
    method_marker = markers[1]
    assert method_marker.call_count == 3
    assert method_marker.label == "3 calls"
    assert method_marker.line == 12
    assert markers == sorted(markers, key=lambda m: m.line)


def test_highlights_match_join_oracle():
    source_map = build_source_map([OWNER_FILE, REPO_FILE], LANDSCAPE)
    owner = "customers/org.samples.model/Owner"
    repo = "customers/org.samples.model/OwnerRepository"
    snapshot = snapshot_with_metrics(
        {
            owner + "/getName": MethodMetrics(2, 100),
            owner + "/<init>": MethodMetrics(1, 50),
            repo + "/findById": MethodMetrics(7, 700),
        },
        {owner: ClassMetrics(3, 1), repo: ClassMetrics(7, 0)},
    )
    for file in (OWNER_FILE.path, REPO_FILE.path):
        got = {
            (m.kind, m.entity_id, m.line, m.call_count)
            for m in highlights_for(snapshot, source_map, file)
        }
        expected = highlight_join(
            snapshot.method_metrics, snapshot.class_metrics, source_map.by_entity, file
        )
        assert got == expected


# ---------------------------------------------------------------------------
# interaction translation
# ---------------------------------------------------------------------------


@pytest.fixture
def source_map():
    return build_source_map([OWNER_FILE, REPO_FILE], LANDSCAPE)


def test_selection_change_becomes_text_selection(source_map):
    out = editor_interaction_to_event(
        source_map,
        {
            "kind": "selection_change",
            "file": REPO_FILE.path,
            "range": {"start_line": 9, "start_col": 0, "end_line": 9, "end_col": 20},
        },
        "u1",
    )
    assert out == OutboundEvent(
        "TextSelection",
        {
            "file": REPO_FILE.path,
            "range": {"start_line": 9, "start_col": 0, "end_line": 9, "end_col": 20},
        },
    )


def test_lens_click_becomes_entity_selected(source_map):
    out = editor_interaction_to_event(
        source_map, {"kind": "lens_click", "file": REPO_FILE.path, "line": 9}, "u1"
    )
    assert out == OutboundEvent(
        "EntitySelected",
        {"entity_id": "customers/org.samples.model/OwnerRepository/findById"},
    )


def test_lens_click_unmapped_line_raises(source_map):
    with pytest.raises(UnmappedLocation):
        editor_interaction_to_event(
            source_map, {"kind": "lens_click", "file": "missing.java", "line": 1}, "u1"
        )


def test_comm_line_click_yields_reveal(source_map):
    out = editor_interaction_to_event(
        source_map,
        {"kind": "comm_line_click", "entity_id": "customers/org.samples.model/Owner/getName"},
        "u1",
    )
    assert out == RevealInEditor(OWNER_FILE.path, 12)


def test_sv_event_clicked_entity(source_map):
    directive = sv_event_to_editor(
        source_map, {"clicked": "customers/org.samples.model/OwnerRepository/findById"}
    )
    assert directive == RevealInEditor(REPO_FILE.path, 9)
    assert sv_event_to_editor(source_map, {"clicked": "unknown/entity"}) is None


def test_sv_event_text_selection(source_map):
    event = SessionEvent(
        seq=4,
        session="t",
        origin_user="u9",
        server_ts_ns=0,
        kind="TextSelection",
        payload={"file": "F.java", "range": {"start_line": 1}},
    )
    directive = sv_event_to_editor(source_map, event)
    assert directive == HighlightSelection("F.java", {"start_line": 1}, "u9")


def test_sv_event_entity_selected_reveals(source_map):
    event = SessionEvent(
        seq=4,
        session="t",
        origin_user="u9",
        server_ts_ns=0,
        kind="EntitySelected",
        payload={"entity_id": "customers/org.samples.model/Owner"},
    )
    assert sv_event_to_editor(source_map, event) == RevealInEditor(OWNER_FILE.path, 5)


def test_bridge_message_vocabulary():
    message = bridge_message(BRIDGE_TO_EMBED, "focusEntity", {"entity_id": "e"})
    assert message == {
        "direction": "toEmbed",
        "type": "focusEntity",
        "payload": {"entity_id": "e"},
    }
    with pytest.raises(ValueError):
        bridge_message("sideways", "focusEntity", {})
    with pytest.raises(ValueError):
        bridge_message(BRIDGE_TO_EMBED, "teleport", {})
