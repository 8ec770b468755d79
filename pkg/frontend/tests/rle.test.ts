import { describe, expect, it } from 'vitest';

import { paintSpans, spanArea, spansToPlane } from '../src/rle.js';

describe('spansToPlane', () => {
  it('expands spans row by row', () => {
    const plane = spansToPlane([[0, 1, 2], [2, 0, 1], [2, 3, 1]], 3, 4);
    expect(Array.from(plane)).toEqual([
      0, 1, 1, 0,
      0, 0, 0, 0,
      1, 0, 0, 1,
    ]);
  });

  it('handles an empty span list', () => {
    const plane = spansToPlane([], 2, 2);
    expect(Array.from(plane)).toEqual([0, 0, 0, 0]);
  });

  it('rejects out-of-bounds spans', () => {
    expect(() => spansToPlane([[0, 3, 2]], 2, 4)).toThrow(/out of bounds/);
    expect(() => spansToPlane([[2, 0, 1]], 2, 4)).toThrow(/out of bounds/);
    expect(() => spansToPlane([[-1, 0, 1]], 2, 4)).toThrow(/out of bounds/);
  });
});

describe('paintSpans', () => {
  it('writes color only under the spans', () => {
    const rgba = new Uint8ClampedArray(2 * 3 * 4);
    paintSpans(rgba, [[1, 1, 2]], 2, 3, [10, 20, 30], 128);
    // row 0 untouched
    for (let i = 0; i < 3 * 4; i++) expect(rgba[i]).toBe(0);
    // row 1, col 0 untouched
    expect(rgba[(3 + 0) * 4 + 3]).toBe(0);
    for (const col of [1, 2]) {
      const o = (3 + col) * 4;
      expect(rgba[o]).toBe(10);
      expect(rgba[o + 1]).toBe(20);
      expect(rgba[o + 2]).toBe(30);
      expect(rgba[o + 3]).toBe(128);
    }
  });

  it('rejects a wrongly sized buffer', () => {
    expect(() => paintSpans(new Uint8ClampedArray(7), [], 2, 2, [0, 0, 0], 255))
      .toThrow(/buffer length/);
  });
});

describe('spanArea', () => {
  it('sums run lengths', () => {
    expect(spanArea([[0, 0, 4], [5, 2, 3]])).toBe(7);
    expect(spanArea([])).toBe(0);
  });
});
