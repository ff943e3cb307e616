"""Deterministic 3D code-city geometry for a snapshot.

Packages become nested districts, classes become buildings sized by their
metrics, and class-level communication arcs connect building centroids.
The layout is a pure function of the snapshot: identical snapshots produce
byte-identical geometry regardless of input ordering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .snapshots import Snapshot

SIDE_BASE_M = 1.0      # s0: building side = s0 * sqrt(1 + method_count)
HEIGHT_BASE_M = 1.0    # h0: building height = h0 * log2(2 + instance_count)
GAP_M = 0.5            # g: gap between packed items and shelves
MARGIN_M = 0.5         # m: district padding per nesting level
SHELF_CAP_FACTOR = 1.2
ARC_CLEARANCE_M = 2.0


@dataclass(frozen=True)
class Rect:
    """Axis-aligned footprint on the ground plane, min corner + extents."""

    x: float
    z: float
    width: float
    depth: float

    def translated(self, dx: float, dz: float) -> "Rect":
        return Rect(self.x + dx, self.z + dz, self.width, self.depth)

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.width / 2.0, self.z + self.depth / 2.0)

    def contains(self, other: "Rect", clearance: float = 0.0) -> bool:
        return (
            other.x >= self.x + clearance
            and other.z >= self.z + clearance
            and other.x + other.width <= self.x + self.width - clearance
            and other.z + other.depth <= self.z + self.depth - clearance
        )

    def overlaps(self, other: "Rect") -> bool:
        return (
            self.x < other.x + other.width
            and other.x < self.x + self.width
            and self.z < other.z + other.depth
            and other.z < self.z + self.depth
        )


@dataclass(frozen=True)
class District:
    rect: Rect
    level: int


@dataclass(frozen=True)
class Building:
    rect: Rect
    height: float


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    apex_height: float
    weight: int


@dataclass(frozen=True)
class CityLayout:
    districts: dict[str, District]
    buildings: dict[str, Building]
    arcs: tuple[Arc, ...]


def building_dimensions(method_count: int, instance_count: int) -> tuple[float, float]:
    """Footprint side and height for a class's metrics."""
    side = SIDE_BASE_M * math.sqrt(1 + method_count)
    height = HEIGHT_BASE_M * math.log2(2 + instance_count)
    return side, height


def pack_children(items: list[tuple[str, float, float]]) -> dict[str, Rect]:
    """Shelf-pack (id, width, depth) items, deterministically.

    Items are sorted by (depth desc, id asc) and placed left to right in
    shelves; a shelf's depth is that of its first (deepest) item. The shelf
    is full once the plain sum of item widths would exceed
    sqrt(total area) * 1.2; positions still include the 0.5 m gap between
    items and between shelves. The first shelf starts at the origin.
    """
    if not items:
        return {}
    for item_id, width, depth in items:
        if width <= 0 or depth <= 0:
            raise ValueError("item %r must have positive dimensions" % item_id)
    ordered = sorted(items, key=lambda it: (-it[2], it[0]))
    total_area = sum(w * d for _, w, d in items)
    cap = math.sqrt(total_area) * SHELF_CAP_FACTOR

    placed: dict[str, Rect] = {}
    shelf_z = 0.0
    shelf_depth = 0.0
    cursor_x = 0.0
    used_width = 0.0
    for item_id, width, depth in ordered:
        if used_width > 0.0 and used_width + width > cap:
            shelf_z += shelf_depth + GAP_M
            shelf_depth = 0.0
            cursor_x = 0.0
            used_width = 0.0
        if used_width == 0.0:
            shelf_depth = depth
        placed[item_id] = Rect(cursor_x, shelf_z, width, depth)
        cursor_x += width + GAP_M
        used_width += width
    return placed


def bounding_rect(rects: list[Rect]) -> Rect:
    min_x = min(r.x for r in rects)
    min_z = min(r.z for r in rects)
    max_x = max(r.x + r.width for r in rects)
    max_z = max(r.z + r.depth for r in rects)
    return Rect(min_x, min_z, max_x - min_x, max_z - min_z)


def layout(snapshot: Snapshot) -> CityLayout:
    """Compute the full city for a snapshot, bottom-up.

    Applications are level-0 districts; their package trees nest below.
    Arcs are the class-level rollup of method communication edges, so the
    summed arc weights conserve the snapshot's edge call counts (self-edges
    between methods of one class roll into a self-arc).
    """
    districts: dict[str, District] = {}
    buildings: dict[str, Building] = {}

    def shift(root_id: str, ids: list[str], target: Rect) -> None:
        old = districts[root_id].rect
        dx, dz = target.x - old.x, target.z - old.z
        for entity_id in ids:
            if entity_id in districts:
                d = districts[entity_id]
                districts[entity_id] = District(d.rect.translated(dx, dz), d.level)
            else:
                b = buildings[entity_id]
                buildings[entity_id] = Building(b.rect.translated(dx, dz), b.height)

    def pack_group(
        owner_id: str,
        level: int,
        children: list[tuple[str, float, float]],
        child_ids: dict[str, list[str]],
        heights: dict[str, float],
    ) -> tuple[Rect, list[str]]:
        """Pack children, pad by the margin, register owner's district at (0,0)."""
        rects = pack_children(children)
        if rects:
            bbox = bounding_rect(list(rects.values()))
            width = bbox.width + 2 * MARGIN_M
            depth = bbox.depth + 2 * MARGIN_M
        else:
            bbox = Rect(0.0, 0.0, 0.0, 0.0)
            width = depth = 2 * MARGIN_M
        subtree = [owner_id]
        for child_id, rect in rects.items():
            target = rect.translated(MARGIN_M - bbox.x, MARGIN_M - bbox.z)
            if child_id in heights:
                buildings[child_id] = Building(target, heights[child_id])
                subtree.append(child_id)
            else:
                shift(child_id, child_ids[child_id], target)
                subtree.extend(child_ids[child_id])
        districts[owner_id] = District(Rect(0.0, 0.0, width, depth), level)
        return Rect(0.0, 0.0, width, depth), subtree

    def pack_package(pkg, level: int) -> tuple[Rect, list[str]]:
        children: list[tuple[str, float, float]] = []
        child_ids: dict[str, list[str]] = {}
        heights: dict[str, float] = {}
        for name in sorted(pkg.subpackages):
            sub = pkg.subpackages[name]
            rect, ids = pack_package(sub, level + 1)
            children.append((sub.entity_id, rect.width, rect.depth))
            child_ids[sub.entity_id] = ids
        for name in sorted(pkg.classes):
            cls = pkg.classes[name]
            metrics = snapshot.class_metrics.get(cls.entity_id)
            side, height = building_dimensions(
                len(cls.methods), metrics.instance_count if metrics else 0
            )
            children.append((cls.entity_id, side, side))
            heights[cls.entity_id] = height
        return pack_group(pkg.entity_id, level, children, child_ids, heights)

    landscape = snapshot.landscape
    app_items: list[tuple[str, float, float]] = []
    app_ids: dict[str, list[str]] = {}
    for app_name in sorted(landscape.applications):
        app = landscape.applications[app_name]
        children: list[tuple[str, float, float]] = []
        child_ids: dict[str, list[str]] = {}
        for name in sorted(app.root_packages):
            pkg = app.root_packages[name]
            rect, ids = pack_package(pkg, 1)
            children.append((pkg.entity_id, rect.width, rect.depth))
            child_ids[pkg.entity_id] = ids
        rect, subtree = pack_group(app_name, 0, children, child_ids, {})
        app_items.append((app_name, rect.width, rect.depth))
        app_ids[app_name] = subtree

    for app_id, rect in pack_children(app_items).items():
        shift(app_id, app_ids[app_id], rect)

    arcs = _class_arcs(snapshot, buildings)
    return CityLayout(districts=districts, buildings=buildings, arcs=arcs)


def _class_arcs(snapshot: Snapshot, buildings: dict[str, Building]) -> tuple[Arc, ...]:
    rollup: dict[tuple[str, str], int] = {}
    for edge in snapshot.edges:
        src_class = edge.source.rsplit("/", 1)[0]
        dst_class = edge.target.rsplit("/", 1)[0]
        key = (src_class, dst_class)
        rollup[key] = rollup.get(key, 0) + edge.call_count
    if not rollup:
        return ()
    apex = max(b.height for b in buildings.values()) + ARC_CLEARANCE_M
    return tuple(
        Arc(source=src, target=dst, apex_height=apex, weight=rollup[(src, dst)])
        for src, dst in sorted(rollup)
    )


def layout_doc(city: CityLayout) -> dict:
    """JSON-ready document; lengths in meters as decimal numbers."""
    return {
        "districts": {
            entity_id: {"rect": _rect_doc(d.rect), "level": d.level}
            for entity_id, d in sorted(city.districts.items())
        },
        "buildings": {
            entity_id: {"rect": _rect_doc(b.rect), "height": b.height}
            for entity_id, b in sorted(city.buildings.items())
        },
        "arcs": [
            {
                "source": a.source,
                "target": a.target,
                "apex_height": a.apex_height,
                "weight": a.weight,
            }
            for a in city.arcs
        ],
    }


def _rect_doc(rect: Rect) -> dict:
    return {"x": rect.x, "z": rect.z, "width": rect.width, "depth": rect.depth}
