/** End-to-end flows against the real exploration service (started by
 * e2e/setup.ts with a fixture catalog and the mock outpainting provider). */

import { beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../../src/api.js";
import { CompositionModel } from "../../src/canvasModel.js";
import { boxToDisplay, containLayout } from "../../src/overlay.js";
import { pollGeneration } from "../../src/polling.js";
import { ViewState, wellPaired } from "../../src/state.js";
import { E2E_BASE_URL } from "../../e2e/setup.js";

const client = new ApiClient(E2E_BASE_URL);

async function newSessionWithEvents() {
  const session = await client.createSession();
  const posts: Promise<unknown>[] = [];
  let clock = 1000;
  const view = new ViewState({
    now: () => (clock += 7),
    sink: (event) => {
      posts.push(
        client.postEvent({
          session_id: session.session_id,
          ts: event.ts,
          kind: event.kind,
          payload: event.payload,
        }),
      );
    },
  });
  return { session, view, flush: () => Promise.all(posts) };
}

describe("browse flow", () => {
  beforeAll(async () => {
    const categories = await client.getCategories();
    expect(categories.categories).toHaveLength(13);
  });

  it("walks Home -> Category -> Object -> Painting with well-paired events", async () => {
    const { session, view, flush } = await newSessionWithEvents();

    view.start(); // Home
    const home = await client.getHome();
    expect(home.examples.length).toBeGreaterThan(0);

    expect(view.navigate("Category")).toBe(true);
    const categories = await client.getCategories();
    const occult = categories.categories.find((c) => c.category === "Occultism");
    expect(occult?.object_count).toBeGreaterThan(0);

    expect(view.navigate("Object", { category: "Occultism" })).toBe(true);
    const objects = await client.getObjects({ category: "Occultism" });
    expect(objects.items.length).toBeGreaterThan(0);
    const first = objects.items[0];

    expect(view.navigate("Painting")).toBe(true);
    const painting = await client.getPainting(first.artwork_id);
    expect(painting.objects.some((o) => o.detection_id === first.detection_id)).toBe(true);
    expect(painting.artwork.palette).toHaveLength(6);

    view.end();
    await flush();
    expect(wellPaired(view.events)).toBe(true);

    // the backend's own pairing agrees: no warnings, Object visit counted
    const report = await client.getUsageReport();
    expect(report.warnings).toBe(0);
    expect(report.category_visits["Occultism"]).toBeGreaterThanOrEqual(1);
    expect(report.per_screen_avg_duration["Home"]).toBeGreaterThan(0);
  });

  it("hover overlay coordinates are accurate within one display pixel", async () => {
    const objects = await client.getObjects({ category: "Occultism" });
    const painting = await client.getPainting(objects.items[0].artwork_id);
    const naturalW = painting.artwork.image_width!;
    const naturalH = painting.artwork.image_height!;
    for (const [viewW, viewH] of [[640, 480], [333, 555], [1280, 301]]) {
      const layout = containLayout(naturalW, naturalH, viewW, viewH);
      for (const object of painting.objects) {
        const rect = boxToDisplay(object.box, layout);
        const scale = Math.min(viewW / naturalW, viewH / naturalH);
        const expectedLeft = (viewW - naturalW * scale) / 2 + object.box.x_min * scale;
        expect(Math.abs(rect.left - expectedLeft)).toBeLessThanOrEqual(1);
        expect(rect.left).toBeGreaterThanOrEqual(-1e-6);
        expect(rect.top + rect.height).toBeLessThanOrEqual(viewH + 1e-6);
      }
    }
  });
});

describe("save -> canvas -> generate -> used objects", () => {
  it("completes the full round trip", async () => {
    const { session, view, flush } = await newSessionWithEvents();
    view.start();
    view.navigate("Category");
    view.navigate("Object", { category: "Occultism" });

    const objects = await client.getObjects({ category: "Occultism", page_size: 2 });
    expect(objects.items.length).toBeGreaterThanOrEqual(2);
    for (const item of objects.items) {
      await client.saveFavorite(session.session_id, item.detection_id);
    }
    const favorites = await client.getFavorites(session.session_id);
    expect(favorites.favorites.map((f) => f.detection_id)).toEqual(
      objects.items.map((i) => i.detection_id),
    );

    view.navigate("Favorites");
    view.navigate("Canvas");

    const composition = new CompositionModel(1024);
    for (const favorite of favorites.favorites) {
      composition.add(favorite.detection_id, favorite.crop_width!, favorite.crop_height!);
    }
    composition.move(1, 700, 700); // separate the two placements
    expect(composition.allInside()).toBe(true);
    composition.prompt = "a quiet composition in museum light";

    const job = await client.submitCanvas(session.session_id, {
      placements: composition.toPlacements(),
      prompt: composition.prompt,
      side: composition.side,
    });
    const generation = await pollGeneration(client, job.job_id, { initialMs: 100 });
    expect(generation.status).toBe("done");
    expect(generation.image_url).toBeTruthy();
    expect(generation.used_objects?.map((u) => u.detection_id)).toEqual(
      favorites.favorites.map((f) => f.detection_id),
    );

    // the generated image is retrievable and the used-objects list leads
    // back to real paintings
    const image = await fetch(`${E2E_BASE_URL}${generation.image_url}`);
    expect(image.ok).toBe(true);
    for (const used of generation.used_objects ?? []) {
      const painting = await client.getPainting(used.artwork_id);
      expect(painting.objects.some((o) => o.detection_id === used.detection_id)).toBe(true);
    }

    view.end();
    await flush();
    expect(wellPaired(view.events)).toBe(true);
  });

  it("rejects canvas submissions with non-favorited objects", async () => {
    const session = await client.createSession();
    const objects = await client.getObjects({ category: "Occultism", page_size: 1 });
    const failure = await client
      .submitCanvas(session.session_id, {
        placements: [
          { detection_id: objects.items[0].detection_id, x: 0, y: 0, scale: 1.0 },
        ],
        prompt: "x",
      })
      .catch((e) => e);
    expect(failure.code).toBe("not_favorited");
  });
});
