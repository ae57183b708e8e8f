/** Coordinate transforms for bounding-box overlays on displayed paintings.
 *
 * The painting is rendered object-fit: contain inside its viewport, so
 * the image is uniformly scaled and centered; overlays must land on the
 * displayed pixels regardless of window size. */

import type { Box } from "./types.js";

export interface ContainLayout {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface DisplayRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

/** Uniform-scale letterbox layout of a natural-size image in a viewport. */
export function containLayout(
  naturalWidth: number,
  naturalHeight: number,
  viewWidth: number,
  viewHeight: number,
): ContainLayout {
  const scale = Math.min(viewWidth / naturalWidth, viewHeight / naturalHeight);
  return {
    scale,
    offsetX: (viewWidth - naturalWidth * scale) / 2,
    offsetY: (viewHeight - naturalHeight * scale) / 2,
  };
}

/** Natural-coordinate box -> display-space rectangle (CSS pixels). */
export function boxToDisplay(box: Box, layout: ContainLayout): DisplayRect {
  return {
    left: layout.offsetX + box.x_min * layout.scale,
    top: layout.offsetY + box.y_min * layout.scale,
    width: (box.x_max - box.x_min) * layout.scale,
    height: (box.y_max - box.y_min) * layout.scale,
  };
}

/** Display-space point -> natural image coordinates. */
export function displayToNatural(
  x: number,
  y: number,
  layout: ContainLayout,
): { x: number; y: number } {
  return {
    x: (x - layout.offsetX) / layout.scale,
    y: (y - layout.offsetY) / layout.scale,
  };
}
