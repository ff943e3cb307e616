#!/usr/bin/env python3
"""Generate the petclinic-shaped fixture: spans, Java workspace, index, meta.

Deterministic (fixed seed): 4 applications, 26 classes, ~30 traces of
realistic use-case shapes over exactly 4 commit windows. Outputs land in
fixtures/petclinic/ and can be regenerated byte-identically.
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tracecity.ingest import span_to_wire  # noqa: E402
from tracecity.model import Span, assemble_traces  # noqa: E402
from tracecity.snapshots import DEFAULT_INTERVAL_NS, window_of  # noqa: E402
from tracecity.workspace import scan_workspace, write_index  # noqa: E402

OUT_DIR = REPO / "fixtures" / "petclinic"
SYSTEM = "petclinic"
T0 = 1_720_000_000 * 10**9  # window-aligned base instant
N_WINDOWS = 4
SEED = 2023

BASE_PKG = "org.springframework.samples.petclinic"

# app -> subproject dir, package suffix, {class: (subpackage, [methods])}
CLASSES = {
    "api-gateway": {
        "ApiGatewayController": ("boundary", ["getOwnerDetails", "getVets", "getVisits"]),
        "CustomersServiceClient": ("application", ["getOwner", "getOwners"]),
        "VisitsServiceClient": ("application", ["getVisitsForPets"]),
        "VetsServiceClient": ("application", ["getVets"]),
        "OwnerDetails": ("dto", ["<init>", "getPets"]),
    },
    "customers-service": {
        "Owner": ("model", ["<init>", "getName", "getPets", "addPet"]),
        "OwnerRepository": ("model", ["findById", "findAll", "save"]),
        "Pet": ("model", ["<init>", "getName", "getType"]),
        "PetRepository": ("model", ["findById", "findPetTypes", "save"]),
        "PetType": ("model", ["<init>", "getName"]),
        "OwnerResource": ("web", ["findOwner", "ownerList", "createOwner"]),
        "PetResource": ("web", ["processCreationForm", "findPet"]),
        "OwnerEntityMapper": ("mapper", ["map"]),
        "MetricConfig": ("system", ["metricsCommonTags"]),
    },
    "vets-service": {
        "Vet": ("model", ["<init>", "getFirstName", "getSpecialties", "getNrOfSpecialties"]),
        "VetRepository": ("model", ["findAll"]),
        "Specialty": ("model", ["<init>", "getName"]),
        "VetResource": ("web", ["showResourcesVetList"]),
        "VetsProperties": ("system", ["getCacheTtl"]),
        "CacheConfig": ("system", ["vetsCache"]),
    },
    "visits-service": {
        "Visit": ("model", ["<init>", "getDescription", "getDate"]),
        "VisitRepository": ("model", ["findByPetId", "findByPetIdIn", "save"]),
        "VisitResource": ("web", ["visits", "visitsMultiGet", "create"]),
        "VisitsProperties": ("system", ["getCacheTtl"]),
        "MetricConfig": ("system", ["metricsCommonTags"]),
        "VisitDetails": ("web", ["<init>", "getItems"]),
    },
}

APP_PKG = {
    "api-gateway": "api",
    "customers-service": "customers",
    "vets-service": "vets",
    "visits-service": "visits",
}


def fqn(app: str, cls: str, method: str) -> str:
    sub = CLASSES[app][cls][0]
    return "%s.%s.%s.%s.%s" % (BASE_PKG, APP_PKG[app], sub, cls, method)


# Use-case trace templates: (app, class, method, [children]); "*k" markers
# are expanded with a per-trace repeat count.
def uc_owner_details(rng):
    pets = rng.randrange(1, 4)
    pet_children = []
    for _ in range(pets):
        pet_children.append(("customers-service", "Pet", "<init>", []))
        pet_children.append(("customers-service", "PetType", "<init>", []))
    visits = rng.randrange(1, 4)
    visit_children = [("visits-service", "Visit", "<init>", []) for _ in range(visits)]
    return (
        "api-gateway", "ApiGatewayController", "getOwnerDetails",
        [
            (
                "api-gateway", "CustomersServiceClient", "getOwner",
                [
                    (
                        "customers-service", "OwnerResource", "findOwner",
                        [
                            ("customers-service", "OwnerEntityMapper", "map", []),
                            (
                                "customers-service", "OwnerRepository", "findById",
                                [("customers-service", "Owner", "<init>", [])] + pet_children,
                            ),
                            ("customers-service", "Owner", "getName", []),
                            ("customers-service", "Owner", "getPets", []),
                        ],
                    )
                ],
            ),
            (
                "api-gateway", "VisitsServiceClient", "getVisitsForPets",
                [
                    (
                        "visits-service", "VisitResource", "visitsMultiGet",
                        [
                            (
                                "visits-service", "VisitRepository", "findByPetIdIn",
                                visit_children,
                            ),
                            ("visits-service", "VisitDetails", "<init>", []),
                        ],
                    )
                ],
            ),
            ("api-gateway", "OwnerDetails", "<init>", []),
            ("api-gateway", "OwnerDetails", "getPets", []),
        ],
    )


def uc_vets_list(rng):
    vets = rng.randrange(2, 5)
    vet_children = []
    for _ in range(vets):
        vet_children.append(("vets-service", "Vet", "<init>", []))
        vet_children.append(("vets-service", "Specialty", "<init>", []))
        vet_children.append(("vets-service", "Vet", "getNrOfSpecialties", []))
    return (
        "api-gateway", "ApiGatewayController", "getVets",
        [
            (
                "api-gateway", "VetsServiceClient", "getVets",
                [
                    (
                        "vets-service", "VetResource", "showResourcesVetList",
                        [
                            ("vets-service", "VetsProperties", "getCacheTtl", []),
                            ("vets-service", "VetRepository", "findAll", vet_children),
                        ],
                    )
                ],
            )
        ],
    )


def uc_visit_screen(rng):
    visits = rng.randrange(1, 4)
    children = [("visits-service", "Visit", "<init>", []) for _ in range(visits)]
    children += [("visits-service", "Visit", "getDescription", []) for _ in range(visits)]
    return (
        "api-gateway", "ApiGatewayController", "getVisits",
        [
            (
                "api-gateway", "VisitsServiceClient", "getVisitsForPets",
                [
                    (
                        "visits-service", "VisitResource", "visits",
                        [("visits-service", "VisitRepository", "findByPetId", children)],
                    )
                ],
            )
        ],
    )


def uc_create_owner(rng):
    return (
        "customers-service", "OwnerResource", "createOwner",
        [
            ("customers-service", "OwnerEntityMapper", "map", []),
            (
                "customers-service", "OwnerRepository", "save",
                [("customers-service", "Owner", "<init>", [])],
            ),
        ],
    )


def uc_create_pet(rng):
    types = rng.randrange(1, 3)
    return (
        "customers-service", "PetResource", "processCreationForm",
        [
            (
                "customers-service", "PetRepository", "findPetTypes",
                [("customers-service", "PetType", "<init>", []) for _ in range(types)],
            ),
            (
                "customers-service", "PetRepository", "save",
                [("customers-service", "Pet", "<init>", [])],
            ),
        ],
    )


def boot_traces():
    return [
        ("customers-service", "MetricConfig", "metricsCommonTags", []),
        ("visits-service", "MetricConfig", "metricsCommonTags", []),
        ("vets-service", "CacheConfig", "vetsCache", []),
        (
            "customers-service", "OwnerResource", "ownerList",
            [
                (
                    "customers-service", "OwnerRepository", "findAll",
                    [("customers-service", "Owner", "<init>", [])],
                )
            ],
        ),
        (
            "visits-service", "VisitResource", "create",
            [
                (
                    "visits-service", "VisitRepository", "save",
                    [("visits-service", "Visit", "<init>", [])],
                ),
                ("visits-service", "VisitsProperties", "getCacheTtl", []),
            ],
        ),
        (
            "customers-service", "PetResource", "findPet",
            [
                (
                    "customers-service", "PetRepository", "findById",
                    [
                        ("customers-service", "Pet", "<init>", []),
                        ("customers-service", "Pet", "getType", []),
                        ("customers-service", "Pet", "getName", []),
                    ],
                ),
            ],
        ),
        (
            "api-gateway", "ApiGatewayController", "getOwnerDetails",
            [
                (
                    "api-gateway", "CustomersServiceClient", "getOwners",
                    [
                        (
                            "customers-service", "OwnerResource", "findOwner",
                            [
                                (
                                    "customers-service", "OwnerRepository", "findById",
                                    [
                                        ("customers-service", "Owner", "<init>", []),
                                        ("customers-service", "Owner", "addPet", []),
                                    ],
                                )
                            ],
                        )
                    ],
                ),
                (
                    "vets-service", "VetResource", "showResourcesVetList",
                    [
                        ("vets-service", "VetRepository", "findAll",
                         [("vets-service", "Vet", "getFirstName", []),
                          ("vets-service", "Vet", "getSpecialties", []),
                          ("vets-service", "Specialty", "getName", [])]),
                    ],
                ),
                (
                    "visits-service", "VisitResource", "visits",
                    [
                        ("visits-service", "VisitRepository", "findByPetId",
                         [("visits-service", "Visit", "getDate", []),
                          ("visits-service", "VisitDetails", "getItems", [])]),
                    ],
                ),
                ("customers-service", "PetType", "getName", []),
                ("customers-service", "Owner", "getName", []),
            ],
        ),
    ]


class SpanFactory:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.trace_counter = 0
        self.span_counter = 0
        self.spans: list[Span] = []

    def emit_trace(self, template, start_ns: int) -> None:
        self.trace_counter += 1
        trace_id = "%032x" % self.trace_counter

        def walk(node, parent_id, start):
            app, cls, method, children = node
            self.span_counter += 1
            span_id = "%016x" % self.span_counter
            child_start = start + self.rng.randrange(20_000, 200_000)
            cursor = child_start
            child_ends = []
            for child in children:
                cursor += self.rng.randrange(10_000, 120_000)
                cursor = walk(child, span_id, cursor)
                child_ends.append(cursor)
            own_tail = self.rng.randrange(30_000, 400_000)
            end = (child_ends[-1] if child_ends else child_start) + own_tail
            self.spans.append(
                Span(
                    trace_id=trace_id,
                    span_id=span_id,
                    parent_span_id=parent_id,
                    start_ns=start,
                    end_ns=end,
                    app_name=app,
                    app_instance="%s-0" % app,
                    fqn=fqn(app, cls, method),
                    host="node-%d" % (1 + len(app) % 3),
                )
            )
            return end

        walk(template, None, start_ns)


def generate_spans() -> list[Span]:
    rng = random.Random(SEED)
    factory = SpanFactory(rng)

    window_plans = {
        0: [uc_owner_details, uc_vets_list, uc_owner_details, uc_create_owner],
        1: [uc_owner_details, uc_visit_screen, uc_vets_list, uc_create_pet, uc_owner_details],
        2: [uc_visit_screen, uc_owner_details, uc_vets_list, uc_create_owner, uc_create_pet],
        3: [uc_owner_details, uc_visit_screen, uc_owner_details, uc_vets_list],
    }
    for template in boot_traces():
        start = T0 + rng.randrange(0, DEFAULT_INTERVAL_NS // 4)
        factory.emit_trace(template, start)
    for window, plans in window_plans.items():
        base = T0 + window * DEFAULT_INTERVAL_NS
        for plan in plans:
            start = base + rng.randrange(0, DEFAULT_INTERVAL_NS - DEFAULT_INTERVAL_NS // 5)
            factory.emit_trace(plan(rng), start)
    return sorted(factory.spans, key=lambda s: (s.start_ns, s.span_id))


JAVA_TEMPLATE_IMPORTS = {
    "model": ["import java.util.List;", "import java.util.Objects;"],
    "web": ["import java.util.List;", "import org.springframework.web.bind.annotation.*;"],
    "boundary": ["import reactor.core.publisher.Mono;"],
    "application": ["import org.springframework.web.reactive.function.client.WebClient;"],
    "dto": ["import java.util.ArrayList;"],
    "mapper": [],
    "system": ["import org.springframework.context.annotation.Bean;"],
}


def java_source(app: str, cls: str) -> str:
    sub, methods = CLASSES[app][cls]
    package = "%s.%s.%s" % (BASE_PKG, APP_PKG[app], sub)
    lines = ["package %s;" % package, ""]
    lines += JAVA_TEMPLATE_IMPORTS.get(sub, [])
    if JAVA_TEMPLATE_IMPORTS.get(sub):
        lines.append("")
    kind = "class"
    lines.append("public %s %s {" % (kind, cls))
    lines.append("")
    if any(m != "<init>" for m in methods):
        lines.append("    private String state;")
        lines.append("")
    for method in methods:
        if method == "<init>":
            lines.append("    public %s(String state) {" % cls)
            lines.append("        this.state = state;")
            lines.append("    }")
        else:
            lines.append("    public String %s() {" % method)
            lines.append("        return this.state;")
            lines.append("    }")
        lines.append("")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_workspace(root: Path) -> None:
    for app, classes in CLASSES.items():
        for cls, (sub, _methods) in classes.items():
            package_path = "%s/%s/%s" % (
                BASE_PKG.replace(".", "/"),
                APP_PKG[app],
                sub,
            )
            target = root / app / "src" / "main" / "java" / package_path / ("%s.java" % cls)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(java_source(app, cls))


def main() -> None:
    total_classes = sum(len(v) for v in CLASSES.values())
    assert total_classes == 26, total_classes
    assert len(CLASSES) == 4

    spans = generate_spans()
    traces, orphans = assemble_traces(spans)
    assert not orphans, orphans[:3]
    windows = {window_of(s.start_ns) - window_of(T0) for s in spans}
    assert windows == set(range(N_WINDOWS)), windows

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    spans_path = OUT_DIR / "spans.ndjson"
    with open(spans_path, "w") as fh:
        for span in spans:
            fh.write(json.dumps(span_to_wire(span), sort_keys=True))
            fh.write("\n")

    workspace = OUT_DIR / "workspace"
    write_workspace(workspace)
    records = scan_workspace(workspace)
    write_index(records, OUT_DIR / "workspace_index.json")

    meta = {
        "system_id": SYSTEM,
        "base_ns": T0,
        "windows": N_WINDOWS,
        "interval_ns": DEFAULT_INTERVAL_NS,
        "replay_at_ns": T0 + N_WINDOWS * DEFAULT_INTERVAL_NS,
        "span_count": len(spans),
        "trace_count": len(traces),
        "applications": sorted(CLASSES),
        "class_count": total_classes,
        "highlight_file": (
            "customers-service/src/main/java/"
            + BASE_PKG.replace(".", "/")
            + "/customers/model/Owner.java"
        ),
    }
    (OUT_DIR / "meta.json").write_text(json.dumps(meta, indent=1))
    print(
        "wrote %d spans in %d traces, %d classes, %d files"
        % (len(spans), len(traces), total_classes, len(records))
    )


if __name__ == "__main__":
    main()
