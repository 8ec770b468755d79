import type { Axis, Triple } from './types.js';

/** (rows, cols) of the slice plane perpendicular to `axis`. */
export function planeDims(dims: Triple, axis: Axis): [number, number] {
  switch (axis) {
    case 'z': return [dims[1], dims[2]];
    case 'y': return [dims[0], dims[2]];
    case 'x': return [dims[0], dims[1]];
  }
}

/** Compose a voxel coordinate from the slice index and in-plane (row, col). */
export function voxelFromPlane(axis: Axis, sliceIndex: number, row: number, col: number): Triple {
  switch (axis) {
    case 'z': return [sliceIndex, row, col];
    case 'y': return [row, sliceIndex, col];
    case 'x': return [row, col, sliceIndex];
  }
}

/** In-plane (row, col) of a voxel for the given view axis. */
export function planeFromVoxel(axis: Axis, zyx: Triple): [number, number] {
  switch (axis) {
    case 'z': return [zyx[1], zyx[2]];
    case 'y': return [zyx[0], zyx[2]];
    case 'x': return [zyx[0], zyx[1]];
  }
}

export interface CanvasGeom {
  width: number;
  height: number;
}

/**
 * Canvas pixel to voxel coordinate on the current slice.
 * Returns null for positions outside the canvas.
 */
export function canvasToVoxel(
  canvasX: number, canvasY: number, geom: CanvasGeom,
  dims: Triple, axis: Axis, sliceIndex: number,
): Triple | null {
  if (canvasX < 0 || canvasY < 0 || canvasX >= geom.width || canvasY >= geom.height) {
    return null;
  }
  const [rows, cols] = planeDims(dims, axis);
  const col = Math.min(cols - 1, Math.floor((canvasX / geom.width) * cols));
  const row = Math.min(rows - 1, Math.floor((canvasY / geom.height) * rows));
  return voxelFromPlane(axis, sliceIndex, row, col);
}

/** Canvas pixel at the center of a voxel's cell on the current slice. */
export function voxelToCanvas(
  zyx: Triple, geom: CanvasGeom, dims: Triple, axis: Axis,
): [number, number] {
  const [rows, cols] = planeDims(dims, axis);
  const [row, col] = planeFromVoxel(axis, zyx);
  const x = ((col + 0.5) / cols) * geom.width;
  const y = ((row + 0.5) / rows) * geom.height;
  return [x, y];
}
