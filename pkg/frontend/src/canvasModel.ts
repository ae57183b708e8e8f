/** Editable canvas composition: place, drag, and resize crops on a square
 * canvas, with the same geometry rules the backend enforces (integer
 * placements, scaled rect fully inside the canvas). */

import type { PlacementRequest } from "./types.js";

export interface PlacedItem {
  detectionId: string;
  cropWidth: number;
  cropHeight: number;
  x: number;
  y: number;
  scale: number;
}

/** Scaled pixel size exactly as the backend computes it. */
export function scaledSize(width: number, height: number, scale: number): [number, number] {
  return [Math.max(1, Math.round(width * scale)), Math.max(1, Math.round(height * scale))];
}

export class CompositionModel {
  readonly items: PlacedItem[] = [];
  prompt = "";

  constructor(readonly side: number = 1024) {
    if (side <= 0) throw new Error(`canvas side must be positive: ${side}`);
  }

  widthOf(index: number): number {
    const item = this.items[index];
    return scaledSize(item.cropWidth, item.cropHeight, item.scale)[0];
  }

  heightOf(index: number): number {
    const item = this.items[index];
    return scaledSize(item.cropWidth, item.cropHeight, item.scale)[1];
  }

  /** Add a crop, auto-scaled down to at most a quarter of the canvas and
   * clamped inside; returns the item index. */
  add(detectionId: string, cropWidth: number, cropHeight: number, x?: number, y?: number): number {
    let scale = 1.0;
    const limit = this.side / 4;
    if (cropWidth * scale > limit) scale = limit / cropWidth;
    if (cropHeight * scale > limit) scale = limit / cropHeight;
    const [w, h] = scaledSize(cropWidth, cropHeight, scale);
    const item: PlacedItem = {
      detectionId,
      cropWidth,
      cropHeight,
      x: this.clampCoord(x ?? Math.round((this.side - w) / 2), w),
      y: this.clampCoord(y ?? Math.round((this.side - h) / 2), h),
      scale,
    };
    this.items.push(item);
    return this.items.length - 1;
  }

  private clampCoord(value: number, extent: number): number {
    return Math.min(Math.max(0, Math.round(value)), Math.max(0, this.side - extent));
  }

  /** Move an item; the rectangle is clamped to stay fully inside. */
  move(index: number, x: number, y: number): void {
    const item = this.items[index];
    const [w, h] = scaledSize(item.cropWidth, item.cropHeight, item.scale);
    item.x = this.clampCoord(x, w);
    item.y = this.clampCoord(y, h);
  }

  /** Resize an item around its top-left anchor. The scale is clamped so
   * the rect keeps at least 8 canvas pixels on its longest side and
   * still fits inside the canvas from its current position. */
  setScale(index: number, scale: number): void {
    const item = this.items[index];
    const minScale = 8 / Math.max(item.cropWidth, item.cropHeight);
    const maxScale = Math.min(
      (this.side - item.x) / item.cropWidth,
      (this.side - item.y) / item.cropHeight,
    );
    item.scale = Math.min(Math.max(scale, minScale), maxScale);
    const [w, h] = scaledSize(item.cropWidth, item.cropHeight, item.scale);
    item.x = this.clampCoord(item.x, w);
    item.y = this.clampCoord(item.y, h);
  }

  remove(index: number): void {
    this.items.splice(index, 1);
  }

  clear(): void {
    this.items.length = 0;
    this.prompt = "";
  }

  /** Every rect must sit inside the canvas (invariant check for tests). */
  allInside(): boolean {
    return this.items.every((item, i) => {
      const w = this.widthOf(i);
      const h = this.heightOf(i);
      return item.x >= 0 && item.y >= 0 && item.x + w <= this.side && item.y + h <= this.side;
    });
  }

  toPlacements(): PlacementRequest[] {
    return this.items.map((item) => ({
      detection_id: item.detectionId,
      x: item.x,
      y: item.y,
      scale: item.scale,
    }));
  }
}
