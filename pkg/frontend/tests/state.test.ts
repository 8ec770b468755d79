import { describe, expect, it } from 'vitest';

import {
  beginSegment, dragBox, hasPrompts, initialState, normalizedBox, placePoint,
  promptPayload, segmentFailed, segmentSucceeded, sessionOpened, setAxis,
  setDeleteMode, setSliceRange, setText,
} from '../src/state.js';
import type { SegmentResponse, Triple, ViewerState } from '../src/types.js';

const GEOM = { width: 240, height: 240 };

function openSession(dims: Triple = [16, 24, 24]): ViewerState {
  return sessionOpened(initialState(), 'abc123', dims);
}

function response(overrides: Partial<SegmentResponse> = {}): SegmentResponse {
  return {
    mask_id: 'm1',
    mode: 'zoom',
    roi: { lo: [3, 3, 3], hi: [11, 11, 11] },
    timings_ms: { global_ms: 1, roi_ms: 0, windows_ms: 2, stitch_ms: 0 },
    dice: 1.0,
    note: null,
    num_foreground: 216,
    ...overrides,
  };
}

describe('placePoint', () => {
  it('uses the current slice index on the viewing axis', () => {
    let s = openSession();
    s = { ...s, sliceIndex: 7 };
    s = placePoint(s, 120, 120, GEOM, 'pos');
    expect(s.points).toHaveLength(1);
    expect(s.points[0].zyx[0]).toBe(7);
    expect(s.points[0].label).toBe('pos');
  });

  it('ignores clicks outside the canvas', () => {
    const s = openSession();
    expect(placePoint(s, -5, 10, GEOM, 'pos')).toBe(s);
    expect(placePoint(s, 10, 500, GEOM, 'neg')).toBe(s);
  });

  it('carries the negative label', () => {
    const s = placePoint(openSession(), 30, 30, GEOM, 'neg');
    expect(s.points[0].label).toBe('neg');
  });

  it('removes a point clicked twice in delete mode', () => {
    let s = placePoint(openSession(), 100, 100, GEOM, 'pos');
    s = setDeleteMode(s, true);
    s = placePoint(s, 100, 100, GEOM, 'pos');
    expect(s.points).toHaveLength(0);
  });

  it('delete mode on empty spot changes nothing', () => {
    let s = placePoint(openSession(), 100, 100, GEOM, 'pos');
    s = setDeleteMode(s, true);
    const after = placePoint(s, 10, 10, GEOM, 'pos');
    expect(after.points).toHaveLength(1);
  });
});

describe('dragBox', () => {
  it('discards zero-area drags', () => {
    const s = openSession();
    expect(dragBox(s, [50, 50], [50, 50], GEOM)).toBe(s);
    // both ends in the same cell
    expect(dragBox(s, [50, 50], [52, 52], GEOM)).toBe(s);
  });

  it('normalizes reversed corners', () => {
    const s = dragBox(openSession(), [200, 200], [40, 40], GEOM);
    expect(s.box).not.toBeNull();
    for (let i = 0; i < 3; i++) {
      expect(s.box!.lo[i]).toBeLessThan(s.box!.hi[i]);
    }
  });

  it('extrudes a full-canvas drag over the full range into the volume box', () => {
    let s = openSession([16, 24, 24]);
    s = setSliceRange(s, 0, 16);
    s = dragBox(s, [0, 0], [239.9, 239.9], GEOM);
    expect(s.box).toEqual({ lo: [0, 0, 0], hi: [16, 24, 24] });
  });

  it('extrudes across the slice range on the viewing axis', () => {
    let s = openSession([16, 24, 24]);
    s = setSliceRange(s, 4, 10);
    s = dragBox(s, [40, 40], [120, 120], GEOM);
    expect(s.box!.lo[0]).toBe(4);
    expect(s.box!.hi[0]).toBe(10);
  });

  it('keeps the box when dragging on a different slice later', () => {
    let s = openSession();
    s = dragBox(s, [40, 40], [120, 120], GEOM);
    const first = s.box;
    s = dragBox(s, [60, 60], [61, 61], GEOM); // zero-area, discarded
    expect(s.box).toBe(first);
  });
});

describe('normalizedBox', () => {
  it('orders each axis', () => {
    const out = normalizedBox({ lo: [5, 1, 9], hi: [2, 8, 3] });
    expect(out).toEqual({ lo: [2, 1, 3], hi: [5, 8, 9] });
  });
});

describe('promptPayload', () => {
  it('builds the wire shape', () => {
    let s = openSession();
    s = placePoint(s, 100, 100, GEOM, 'pos');
    s = dragBox(s, [40, 40], [120, 120], GEOM);
    s = setText(s, '  liver ');
    const payload = promptPayload(s);
    expect(payload.points).toHaveLength(1);
    expect(payload.points![0]).toHaveProperty('zyx');
    expect(payload.points![0].label).toBe('pos');
    expect(payload.box).toHaveProperty('lo');
    expect(payload.text).toBe('liver');
  });

  it('omits absent prompt kinds', () => {
    const payload = promptPayload(openSession());
    expect(payload).toEqual({});
  });
});

describe('segmentation flow', () => {
  it('allows one request in flight', () => {
    const s = beginSegment(openSession());
    expect(s).not.toBeNull();
    expect(s!.requestPending).toBe(true);
    expect(beginSegment(s!)).toBeNull();
  });

  it('success appends history and an overlay with a stable color', () => {
    let s = beginSegment(openSession())!;
    s = segmentSucceeded(s, response());
    expect(s.requestPending).toBe(false);
    expect(s.history).toHaveLength(1);
    expect(s.history[0]).toEqual(
      { maskId: 'm1', mode: 'zoom', dice: 1.0, numForeground: 216 });
    expect(s.overlays).toHaveLength(1);
    const again = segmentSucceeded(beginSegment(openSession())!, response());
    expect(again.overlays[0].color).toBe(s.overlays[0].color);
    expect(s.lastRoi).toEqual({ lo: [3, 3, 3], hi: [11, 11, 11] });
    expect(s.lastDice).toBe(1.0);
  });

  it('failure preserves prompts and reports the error', () => {
    let s = placePoint(openSession(), 100, 100, GEOM, 'pos');
    s = beginSegment(s)!;
    s = segmentFailed(s, 'backend failure: boom');
    expect(s.requestPending).toBe(false);
    expect(s.error).toBe('backend failure: boom');
    expect(s.points).toHaveLength(1);
    expect(s.history).toHaveLength(0);
  });
});

describe('axis and range housekeeping', () => {
  it('setAxis clamps the slice and resets the range', () => {
    let s = openSession([16, 24, 24]);
    s = { ...s, sliceIndex: 15 };
    s = setAxis(s, 'y');
    expect(s.sliceIndex).toBeLessThanOrEqual(23);
    expect(s.sliceRange).toEqual([0, 24]);
  });

  it('setSliceRange swaps and clamps', () => {
    let s = openSession([16, 24, 24]);
    s = setSliceRange(s, 12, 4);
    expect(s.sliceRange).toEqual([4, 12]);
    s = setSliceRange(s, -3, 99);
    expect(s.sliceRange).toEqual([0, 16]);
  });

  it('hasPrompts reflects pending prompt state', () => {
    let s = openSession();
    expect(hasPrompts(s)).toBe(false);
    s = setText(s, 'spleen');
    expect(hasPrompts(s)).toBe(true);
  });
});
