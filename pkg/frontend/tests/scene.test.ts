import { describe, expect, it } from "vitest";
import { CityScene } from "../src/scene";
import { CityLayout } from "../src/types";
import { initialViewModel } from "../src/viewmodel";

const TWO_CLASS_LAYOUT: CityLayout = {
  districts: {
    app: { rect: { x: 0, z: 0, width: 10, depth: 6 }, level: 0 },
    "app/p": { rect: { x: 0.5, z: 0.5, width: 9, depth: 5 }, level: 1 },
  },
  buildings: {
    "app/p/A": { rect: { x: 1, z: 1, width: 2, depth: 2 }, height: 1.5 },
    "app/p/B": { rect: { x: 4, z: 1, width: 2, depth: 2 }, height: 2.5 },
  },
  arcs: [{ source: "app/p/A", target: "app/p/B", apex_height: 4.5, weight: 3 }],
};

describe("scene building", () => {
  it("renders an empty scene for an empty layout", () => {
    const scene = new CityScene();
    const root = scene.render({ districts: {}, buildings: {}, arcs: [] }, "empty");
    expect(root.children).toHaveLength(0);
  });

  it("renders two boxes and one arc for the two-class fixture", () => {
    const scene = new CityScene();
    const root = scene.render(TWO_CLASS_LAYOUT, "snap-1");
    const kinds = root.children.map((c) => c.userData.kind);
    expect(kinds.filter((k) => k === "building")).toHaveLength(2);
    expect(kinds.filter((k) => k === "district")).toHaveLength(2);
    expect(kinds.filter((k) => k === "arc")).toHaveLength(1);
    const arc = root.children.find((c) => c.userData.kind === "arc")!;
    expect(arc.userData.weight).toBe(3);
  });

  it("keeps object identity across re-renders of the same snapshot", () => {
    const scene = new CityScene();
    const first = scene.render(TWO_CLASS_LAYOUT, "snap-1");
    const before = [...first.children];
    const buildingA = scene.object("app/p/A");
    const again = scene.render(TWO_CLASS_LAYOUT, "snap-1");
    expect(again).toBe(first);
    expect(again.children).toHaveLength(before.length);
    before.forEach((child, i) => expect(again.children[i]).toBe(child));
    expect(scene.object("app/p/A")).toBe(buildingA);
  });

  it("rebuilds when the snapshot id changes", () => {
    const scene = new CityScene();
    scene.render(TWO_CLASS_LAYOUT, "snap-1");
    const before = scene.object("app/p/A");
    scene.render(TWO_CLASS_LAYOUT, "snap-2");
    expect(scene.object("app/p/A")).not.toBe(before);
  });

  it("applies session looks without changing the graph", () => {
    const scene = new CityScene();
    const root = scene.render(TWO_CLASS_LAYOUT, "snap-1");
    const vm = {
      ...initialViewModel(),
      user: "me",
      selectedEntity: "app/p/A",
      session: {
        ...initialViewModel().session,
        roster: ["me", "other"],
        openPackages: ["app/p"],
      },
    };
    const childrenBefore = [...root.children];
    scene.applyViewModel(vm, 0);
    expect(root.children).toEqual(childrenBefore);
    const district = scene.object("app/p") as any;
    expect(district.material.color.getHex()).toBe(0x1b5e20);
    const selected = scene.object("app/p/A") as any;
    expect(selected.material.color.getHex()).toBe(0xffb300);
  });

  it("shows ping markers while they live and removes them after decay", () => {
    const scene = new CityScene();
    const root = scene.render(TWO_CLASS_LAYOUT, "snap-1");
    const vm = {
      ...initialViewModel(),
      pings: [{ entityId: "app/p/B", user: "other", expiresAtMs: 3000 }],
    };
    scene.applyViewModel(vm, 1000);
    expect(root.children.some((c) => c.userData.kind === "ping")).toBe(true);
    scene.applyViewModel({ ...vm, pings: [] }, 4000);
    expect(root.children.some((c) => c.userData.kind === "ping")).toBe(false);
  });
});
