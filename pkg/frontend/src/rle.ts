/**
 * Server mask slices arrive as run-length spans [row, start, length].
 * The client only expands them for display; it never edits mask data.
 */

/** Expand spans into a row-major boolean plane. */
export function spansToPlane(spans: number[][], rows: number, cols: number): Uint8Array {
  const plane = new Uint8Array(rows * cols);
  for (const [row, start, length] of spans) {
    if (row < 0 || row >= rows || start < 0 || length < 0 || start + length > cols) {
      throw new Error(`span out of bounds: [${row}, ${start}, ${length}]`);
    }
    plane.fill(1, row * cols + start, row * cols + start + length);
  }
  return plane;
}

/**
 * Paint spans into an RGBA buffer (length rows*cols*4) with the given
 * color and alpha. Pixels outside every span are left untouched.
 */
export function paintSpans(
  rgba: Uint8ClampedArray, spans: number[][], rows: number, cols: number,
  color: [number, number, number], alpha: number,
): void {
  if (rgba.length !== rows * cols * 4) {
    throw new Error(`buffer length ${rgba.length} != ${rows * cols * 4}`);
  }
  const plane = spansToPlane(spans, rows, cols);
  for (let i = 0; i < plane.length; i++) {
    if (plane[i] === 0) continue;
    const o = i * 4;
    rgba[o] = color[0];
    rgba[o + 1] = color[1];
    rgba[o + 2] = color[2];
    rgba[o + 3] = alpha;
  }
}

/** Number of foreground pixels described by the spans. */
export function spanArea(spans: number[][]): number {
  let total = 0;
  for (const span of spans) total += span[2];
  return total;
}
