import { describe, expect, it } from "vitest";

import { boxToDisplay, containLayout, displayToNatural } from "../../src/overlay.js";

function rng(seed: number) {
  let state = seed;
  return () => {
    state = (state * 48271) % 2147483647;
    return state / 2147483647;
  };
}

describe("containLayout", () => {
  it("letterboxes a wide image vertically", () => {
    const layout = containLayout(400, 200, 200, 200);
    expect(layout.scale).toBe(0.5);
    expect(layout.offsetX).toBe(0);
    expect(layout.offsetY).toBe(50);
  });

  it("pillarboxes a tall image horizontally", () => {
    const layout = containLayout(200, 400, 200, 200);
    expect(layout.scale).toBe(0.5);
    expect(layout.offsetX).toBe(50);
    expect(layout.offsetY).toBe(0);
  });
});

describe("boxToDisplay", () => {
  it("maps a known box exactly", () => {
    const layout = containLayout(400, 300, 800, 600); // scale 2, no offsets
    const rect = boxToDisplay({ x_min: 10, y_min: 20, x_max: 110, y_max: 70 }, layout);
    expect(rect).toEqual({ left: 20, top: 40, width: 200, height: 100 });
  });

  it("is accurate within one display pixel under arbitrary window scaling", () => {
    const rand = rng(42);
    for (let trial = 0; trial < 500; trial++) {
      const naturalW = 50 + Math.floor(rand() * 4000);
      const naturalH = 50 + Math.floor(rand() * 4000);
      const viewW = 100 + Math.floor(rand() * 2000);
      const viewH = 100 + Math.floor(rand() * 2000);
      const layout = containLayout(naturalW, naturalH, viewW, viewH);

      const x0 = rand() * naturalW;
      const y0 = rand() * naturalH;
      const x1 = x0 + rand() * (naturalW - x0);
      const y1 = y0 + rand() * (naturalH - y0);
      const rect = boxToDisplay({ x_min: x0, y_min: y0, x_max: x1, y_max: y1 }, layout);

      // independent longhand mapping of each corner
      const scale = Math.min(viewW / naturalW, viewH / naturalH);
      const offsetX = (viewW - naturalW * scale) / 2;
      const offsetY = (viewH - naturalH * scale) / 2;
      expect(Math.abs(rect.left - (offsetX + x0 * scale))).toBeLessThan(1e-9);
      expect(Math.abs(rect.top - (offsetY + y0 * scale))).toBeLessThan(1e-9);
      expect(Math.abs(rect.left + rect.width - (offsetX + x1 * scale))).toBeLessThanOrEqual(1e-6);
      expect(Math.abs(rect.top + rect.height - (offsetY + y1 * scale))).toBeLessThanOrEqual(1e-6);

      // rendering rounds to whole CSS pixels: still within 1 display pixel
      expect(Math.abs(Math.round(rect.left) - (offsetX + x0 * scale))).toBeLessThanOrEqual(1);
      expect(Math.abs(Math.round(rect.top) - (offsetY + y0 * scale))).toBeLessThanOrEqual(1);

      // the displayed rect must sit inside the viewport
      expect(rect.left).toBeGreaterThanOrEqual(-1e-6);
      expect(rect.top).toBeGreaterThanOrEqual(-1e-6);
      expect(rect.left + rect.width).toBeLessThanOrEqual(viewW + 1e-6);
      expect(rect.top + rect.height).toBeLessThanOrEqual(viewH + 1e-6);
    }
  });

  it("round-trips through displayToNatural", () => {
    const rand = rng(7);
    for (let trial = 0; trial < 200; trial++) {
      const layout = containLayout(
        100 + rand() * 3000,
        100 + rand() * 3000,
        100 + rand() * 1500,
        100 + rand() * 1500,
      );
      const x = rand() * 1000;
      const y = rand() * 1000;
      const rect = boxToDisplay({ x_min: x, y_min: y, x_max: x + 10, y_max: y + 10 }, layout);
      const back = displayToNatural(rect.left, rect.top, layout);
      expect(Math.abs(back.x - x)).toBeLessThan(1e-6);
      expect(Math.abs(back.y - y)).toBeLessThan(1e-6);
    }
  });
});
