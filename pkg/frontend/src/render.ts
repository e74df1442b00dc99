/**
 * Display mapping only: the UI never computes on medical data beyond this
 * window/level transform. Everything here is pure and deterministic.
 */

import type { ImagePayload } from "./api.js";

export interface WindowLevel {
  center: number;
  width: number; // > 0; the mapping is strictly monotone inside the window
}

/** Map one intensity to an 8-bit display value under a window/level. */
export function windowLevel(value: number, wl: WindowLevel): number {
  const width = Math.max(wl.width, 1e-12);
  const low = wl.center - width / 2;
  const normalized = (value - low) / width;
  return Math.min(255, Math.max(0, Math.round(normalized * 255)));
}

/** Default window spanning the payload's intensity range. */
export function autoWindow(pixels: number[]): WindowLevel {
  let low = Infinity;
  let high = -Infinity;
  for (const v of pixels) {
    if (v < low) low = v;
    if (v > high) high = v;
  }
  if (!isFinite(low) || high <= low) {
    return { center: 0.5, width: 1 };
  }
  return { center: (low + high) / 2, width: high - low };
}

/**
 * Grayscale RGBA buffer for a canvas ImageData, row-major, alpha opaque.
 * Length is always 4 * width * height.
 */
export function pixelsToRgba(
  payload: ImagePayload,
  wl: WindowLevel,
): Uint8ClampedArray<ArrayBuffer> {
  const { width, height, pixels } = payload;
  if (pixels.length !== width * height) {
    throw new Error(
      `payload has ${pixels.length} pixels, expected ${width} x ${height}`,
    );
  }
  const rgba = new Uint8ClampedArray(4 * width * height);
  for (let i = 0; i < pixels.length; i++) {
    const display = windowLevel(pixels[i], wl);
    rgba[4 * i] = display;
    rgba[4 * i + 1] = display;
    rgba[4 * i + 2] = display;
    rgba[4 * i + 3] = 255;
  }
  return rgba;
}
