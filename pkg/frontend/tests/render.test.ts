import { describe, expect, it } from "vitest";

import type { ImagePayload } from "../src/api.js";
import { autoWindow, pixelsToRgba, windowLevel } from "../src/render.js";

function payload(width: number, height: number, pixels: number[]): ImagePayload {
  return { width, height, pixels, meta: { job_id: "j", algorithm: "fista", nrmse: null } };
}

describe("windowLevel", () => {
  it("is monotone non-decreasing and strictly increasing inside the window", () => {
    const wl = { center: 0.5, width: 0.8 };
    let previous = -1;
    for (let v = -0.5; v <= 1.5; v += 0.01) {
      const display = windowLevel(v, wl);
      expect(display).toBeGreaterThanOrEqual(previous);
      previous = display;
    }
    expect(windowLevel(0.3, wl)).toBeLessThan(windowLevel(0.5, wl));
    expect(windowLevel(0.5, wl)).toBeLessThan(windowLevel(0.7, wl));
  });

  it("clamps to the 8-bit range", () => {
    const wl = { center: 0.5, width: 0.1 };
    expect(windowLevel(-100, wl)).toBe(0);
    expect(windowLevel(100, wl)).toBe(255);
  });

  it("collapses to near-binary contrast at minimal width while staying monotone", () => {
    const wl = { center: 0.5, width: 1e-6 };
    const displays = [0.0, 0.4999, 0.5001, 1.0].map((v) => windowLevel(v, wl));
    expect(displays[0]).toBe(0);
    expect(displays[1]).toBe(0);
    expect(displays[2]).toBe(255);
    expect(displays[3]).toBe(255);
    for (let i = 1; i < displays.length; i++) {
      expect(displays[i]).toBeGreaterThanOrEqual(displays[i - 1]);
    }
  });
});

describe("pixelsToRgba", () => {
  it("draws every pixel: buffer length is 4 * width * height", () => {
    const image = payload(3, 2, [0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    const rgba = pixelsToRgba(image, autoWindow(image.pixels));
    expect(rgba.length).toBe(4 * 3 * 2);
    for (let i = 0; i < 6; i++) {
      expect(rgba[4 * i + 3]).toBe(255); // opaque
      expect(rgba[4 * i]).toBe(rgba[4 * i + 1]); // grayscale
      expect(rgba[4 * i]).toBe(rgba[4 * i + 2]);
    }
  });

  it("is deterministic for a fixed payload and window", () => {
    const image = payload(2, 2, [0.1, 0.5, 0.9, 0.3]);
    const wl = { center: 0.5, width: 1 };
    expect(pixelsToRgba(image, wl)).toEqual(pixelsToRgba(image, wl));
  });

  it("identical payloads render identical buffers (side-by-side lock)", () => {
    const a = payload(2, 1, [0.25, 0.75]);
    const b = payload(2, 1, [0.25, 0.75]);
    const wl = { center: 0.4, width: 0.6 };
    expect(pixelsToRgba(a, wl)).toEqual(pixelsToRgba(b, wl));
  });

  it("rejects payloads whose pixel count disagrees with the dimensions", () => {
    expect(() => pixelsToRgba(payload(4, 4, [1, 2, 3]), { center: 0, width: 1 })).toThrow();
  });
});

describe("autoWindow", () => {
  it("spans the payload range", () => {
    const wl = autoWindow([0.2, 0.9, 0.4]);
    expect(wl.center).toBeCloseTo(0.55);
    expect(wl.width).toBeCloseTo(0.7);
  });

  it("falls back to a sane default on constant images", () => {
    const wl = autoWindow([0.3, 0.3]);
    expect(wl.width).toBeGreaterThan(0);
  });
});
