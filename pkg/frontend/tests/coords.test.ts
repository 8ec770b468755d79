import { describe, expect, it } from 'vitest';

import {
  canvasToVoxel, planeDims, planeFromVoxel, voxelFromPlane, voxelToCanvas,
} from '../src/coords.js';
import type { Axis, Triple } from '../src/types.js';

const DIMS: Triple = [16, 24, 32];

describe('plane geometry', () => {
  it('gives (rows, cols) per axis', () => {
    expect(planeDims(DIMS, 'z')).toEqual([24, 32]);
    expect(planeDims(DIMS, 'y')).toEqual([16, 32]);
    expect(planeDims(DIMS, 'x')).toEqual([16, 24]);
  });

  it('voxelFromPlane and planeFromVoxel are inverse', () => {
    for (const axis of ['z', 'y', 'x'] as Axis[]) {
      const zyx = voxelFromPlane(axis, 7, 3, 5);
      expect(planeFromVoxel(axis, zyx)).toEqual([3, 5]);
      const axisIdx = axis === 'z' ? 0 : axis === 'y' ? 1 : 2;
      expect(zyx[axisIdx]).toBe(7);
    }
  });
});

describe('canvasToVoxel', () => {
  const geom = { width: 320, height: 240 };

  it('maps the canvas center onto the slice', () => {
    const zyx = canvasToVoxel(160, 120, geom, DIMS, 'z', 9);
    expect(zyx).toEqual([9, 12, 16]);
  });

  it('keeps the slice coordinate on the viewing axis', () => {
    for (const axis of ['z', 'y', 'x'] as Axis[]) {
      const zyx = canvasToVoxel(10, 10, geom, DIMS, axis, 4);
      const axisIdx = axis === 'z' ? 0 : axis === 'y' ? 1 : 2;
      expect(zyx![axisIdx]).toBe(4);
    }
  });

  it('returns null outside the canvas', () => {
    expect(canvasToVoxel(-1, 10, geom, DIMS, 'z', 0)).toBeNull();
    expect(canvasToVoxel(10, -0.5, geom, DIMS, 'z', 0)).toBeNull();
    expect(canvasToVoxel(320, 10, geom, DIMS, 'z', 0)).toBeNull();
    expect(canvasToVoxel(10, 240, geom, DIMS, 'z', 0)).toBeNull();
  });

  it('clamps the last cell at the right/bottom edge', () => {
    const zyx = canvasToVoxel(319.99, 239.99, geom, DIMS, 'z', 0);
    expect(zyx).toEqual([0, 23, 31]);
  });
});

describe('coordinate round trip', () => {
  it('lands within 1 px at 1:1 scale', () => {
    const dims: Triple = [8, 240, 320];
    const geom = { width: 320, height: 240 };
    for (let i = 0; i < 200; i++) {
      const x = (i * 7919) % 320 + 0.25;
      const y = (i * 104729) % 240 + 0.5;
      const zyx = canvasToVoxel(x, y, geom, dims, 'z', 3)!;
      const [backX, backY] = voxelToCanvas(zyx, geom, dims, 'z');
      expect(Math.abs(backX - x)).toBeLessThanOrEqual(1.0);
      expect(Math.abs(backY - y)).toBeLessThanOrEqual(1.0);
    }
  });

  it('is exact at voxel centers for integral zoom', () => {
    const dims: Triple = [8, 24, 32];
    const geom = { width: 320, height: 240 }; // 10 px per voxel
    for (const [row, col] of [[0, 0], [5, 7], [23, 31]]) {
      const [x, y] = voxelToCanvas(voxelFromPlane('z', 2, row, col), geom, dims, 'z');
      expect(canvasToVoxel(x, y, geom, dims, 'z', 2)).toEqual([2, row, col]);
    }
  });
});
