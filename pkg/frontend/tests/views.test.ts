import { beforeEach, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { parsePly } from "../src/meshView.js";
import { renderDetail } from "../src/views/detail.js";
import { FixtureService } from "./fixtureService.js";

const settle = () => new Promise((resolve) => setTimeout(resolve, 0));

beforeEach(() => {
  localStorage.clear();
  document.body.replaceChildren();
});

async function selectedApp() {
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  const service = new FixtureService();
  const app = new App(root, service, () => 1000.0, service.transport());
  await app.bootstrap();
  await app.scan("BLD-0001");
  await app.selectDefect("D1");
  await settle();
  return { app, service, root };
}

describe("detail screen", () => {
  it("shows defect facts, zone limit, and nearby measurements", async () => {
    const { root } = await selectedApp();
    const text = root.querySelector(".detail-text")!.textContent!;
    expect(text).toContain("D1");
    expect(text).toContain("crack");
    expect(text).toContain("12.5 mm");
    expect(text).toContain("mid-span");
    expect(text).toContain("1.2 mm");
    expect(text).toContain("W1: 2.35 mm");
  });

  it("draws the defect polyline and zone boundary on the mesh", async () => {
    const { root } = await selectedApp();
    expect(root.querySelector(".mesh-view .defect-marker")).not.toBeNull();
    expect(root.querySelector(".mesh-view .zone-marker")).not.toBeNull();
  });

  it("rotating the model is client-side only (no service calls)", async () => {
    const { root, service } = await selectedApp();
    const total = service.totalCalls();
    const detail = root.querySelector(".defect-detail") as any;
    const view = detail.meshView;
    const before = view.element.innerHTML;
    view.rotate(0.5, 0.2);
    view.zoomBy(1.4);
    expect(view.element.innerHTML).not.toBe(before);
    expect(service.totalCalls()).toBe(total);
  });

  it("falls back to text when the mesh is missing", () => {
    const detail = {
      defect: {
        id: "D1", kind: "crack", length_mm: 1, status: "open", zone_id: "Z1",
        comment: "", polyline_m: [[0, 0, 0], [1, 1, 1]],
      },
      zone: { id: "Z1", name: "root", max_removal_mm: 1, boundary_m: [] },
      nearby_measurements: [],
    };
    const el = renderDetail(detail as any, null, {
      onOpenDocumentation() {},
      onOpenGlossary() {},
      onViewDwell() {},
    });
    expect(el.querySelector(".mesh-fallback")).not.toBeNull();
  });

  it("glossary opens over the screen and closes again", async () => {
    const { app, root } = await selectedApp();
    (root.querySelector(".glossary-button") as HTMLElement).click();
    expect(document.querySelector(".glossary-modal")).not.toBeNull();
    (document.querySelector(".glossary-close") as HTMLElement).click();
    expect(document.querySelector(".glossary-modal")).toBeNull();
    expect(app.vm.glossaryOpen).toBe(false);
  });

  it("all three AR layers come up enabled after selecting a defect", async () => {
    const { root } = await selectedApp();
    const buttons = [...root.querySelectorAll(".layer-toggle")];
    expect(buttons.length).toBe(3);
    expect(buttons.every((b) => b.classList.contains("on"))).toBe(true);
  });

  it("document links in comments are openable", async () => {
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const service = new FixtureService();
    service.defects[0].comment =
      "see https://docs.example/repair-guide.pdf before grinding";
    const app = new App(root, service, () => 1000.0, service.transport());
    await app.bootstrap();
    await app.scan("BLD-0001");
    await app.selectDefect("D1");
    await settle();
    const link = root.querySelector(".linked-document") as HTMLAnchorElement;
    expect(link).not.toBeNull();
    expect(link.href).toContain("repair-guide.pdf");
    expect(link.target).toBe("_blank");
  });
});

describe("scan screen", () => {
  it("unknown serial shows a banner and stays idle", async () => {
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const service = new FixtureService();
    const app = new App(root, service, () => 1000.0, service.transport());
    await app.bootstrap();
    await app.scan("NOPE");
    expect(root.querySelector(".error-banner")!.textContent).toContain("unknown serial");
    expect(root.querySelector(".scan-screen")).not.toBeNull();
  });
});

describe("ply parsing", () => {
  it("reads vertices and unique edges", () => {
    const ply = [
      "ply", "format ascii 1.0",
      "element vertex 3",
      "property float x", "property float y", "property float z",
      "element face 1",
      "property list uchar int vertex_indices", "end_header",
      "0 0 0", "1 0 0", "0 1 0",
      "3 0 1 2",
    ].join("\n");
    const mesh = parsePly(ply);
    expect(mesh.vertices.length).toBe(3);
    expect(mesh.edges.length).toBe(3);
  });

  it("rejects non-ply content", () => {
    expect(() => parsePly("obj\n")).toThrow();
  });
});

describe("documentation draft", () => {
  it("persists across app instances (reload survival)", async () => {
    const { app, root } = await selectedApp();
    app.openDocumentation();
    const worker = root.querySelector('input[name="worker_id"]') as HTMLInputElement;
    worker.value = "W-42";
    worker.dispatchEvent(new Event("input"));

    // a fresh app on the same page storage sees the draft
    const root2 = document.createElement("div");
    document.body.replaceChildren(root2);
    const service2 = new FixtureService();
    const app2 = new App(root2, service2, () => 1000.0, service2.transport());
    await app2.bootstrap();
    expect(app2.vm.loadDraft().workerId).toBe("W-42");
  });
});
