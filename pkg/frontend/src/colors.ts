/** Deterministic per-mask-id overlay colors (FNV-1a hash onto a hue wheel). */

const SATURATION = 85;
const LIGHTNESS = 55;

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h;
}

export function maskHue(maskId: string): number {
  // golden-angle spread keeps consecutive ids visually distinct
  return (fnv1a(maskId) * 137.508) % 360;
}

export function maskColor(maskId: string): string {
  return `hsl(${maskHue(maskId).toFixed(1)}, ${SATURATION}%, ${LIGHTNESS}%)`;
}

/** RGB in [0, 255] for direct ImageData writes. */
export function maskRgb(maskId: string): [number, number, number] {
  const h = maskHue(maskId) / 360;
  const s = SATURATION / 100;
  const l = LIGHTNESS / 100;
  const q = l < 0.5 ? l * (1 + s) : l + s - l * s;
  const p = 2 * l - q;
  const channel = (t: number): number => {
    if (t < 0) t += 1;
    if (t > 1) t -= 1;
    if (t < 1 / 6) return p + (q - p) * 6 * t;
    if (t < 1 / 2) return q;
    if (t < 2 / 3) return p + (q - p) * (2 / 3 - t) * 6;
    return p;
  };
  return [
    Math.round(channel(h + 1 / 3) * 255),
    Math.round(channel(h) * 255),
    Math.round(channel(h - 1 / 3) * 255),
  ];
}
