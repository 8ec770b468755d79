import { canvasToVoxel, planeFromVoxel, voxelFromPlane } from './coords.js';
import type { CanvasGeom } from './coords.js';
import type {
  Axis, PendingBox, PointLabel, PromptPayload, SegmentMode,
  SegmentResponse, Triple, ViewerState,
} from './types.js';
import { maskColor } from './colors.js';

export function initialState(): ViewerState {
  return {
    sessionId: null,
    dims: [1, 1, 1],
    axis: 'z',
    sliceIndex: 0,
    windowCenter: 0,
    windowWidth: 4,
    points: [],
    box: null,
    text: '',
    sliceRange: [0, 1],
    deleteMode: false,
    mode: 'zoom',
    requestPending: false,
    overlays: [],
    history: [],
    lastTimings: null,
    lastDice: null,
    lastRoi: null,
    error: null,
  };
}

export function sessionOpened(state: ViewerState, sessionId: string, dims: Triple): ViewerState {
  return {
    ...initialState(),
    sessionId,
    dims,
    sliceIndex: Math.floor(dims[0] / 2),
    sliceRange: [0, axisExtent(dims, 'z')],
  };
}

export function axisExtent(dims: Triple, axis: Axis): number {
  return axis === 'z' ? dims[0] : axis === 'y' ? dims[1] : dims[2];
}

export function setAxis(state: ViewerState, axis: Axis): ViewerState {
  const extent = axisExtent(state.dims, axis);
  return {
    ...state,
    axis,
    sliceIndex: Math.min(state.sliceIndex, extent - 1),
    sliceRange: [0, extent],
  };
}

export function setSlice(state: ViewerState, index: number): ViewerState {
  const extent = axisExtent(state.dims, state.axis);
  return { ...state, sliceIndex: Math.max(0, Math.min(extent - 1, index)) };
}

export function setSliceRange(state: ViewerState, lo: number, hi: number): ViewerState {
  const extent = axisExtent(state.dims, state.axis);
  const a = Math.max(0, Math.min(extent, lo));
  const b = Math.max(0, Math.min(extent, hi));
  return { ...state, sliceRange: a <= b ? [a, b] : [b, a] };
}

function samePoint(a: Triple, b: Triple): boolean {
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2];
}

/**
 * Map a canvas click on the current slice to a prompt point.
 * Clicks outside the canvas leave the state unchanged; in delete mode a
 * click on an existing point removes it instead of adding one.
 */
export function placePoint(
  state: ViewerState, canvasX: number, canvasY: number,
  geom: CanvasGeom, label: PointLabel,
): ViewerState {
  const zyx = canvasToVoxel(canvasX, canvasY, geom, state.dims, state.axis, state.sliceIndex);
  if (zyx === null) return state;
  if (state.deleteMode) {
    const kept = state.points.filter((p) => !samePoint(p.zyx, zyx));
    if (kept.length === state.points.length) return state;
    return { ...state, points: kept };
  }
  return { ...state, points: [...state.points, { zyx, label }] };
}

/**
 * Finish a box drag: the 2D rectangle on the current slice is extruded
 * across the slice range into a 3D box with lo < hi on every axis.
 * Zero-area drags (start and end in the same cell row or column) are
 * discarded.
 */
export function dragBox(
  state: ViewerState,
  start: [number, number], end: [number, number], geom: CanvasGeom,
): ViewerState {
  const a = canvasToVoxel(start[0], start[1], geom, state.dims, state.axis, state.sliceIndex);
  const b = canvasToVoxel(end[0], end[1], geom, state.dims, state.axis, state.sliceIndex);
  if (a === null || b === null) return state;
  const [rowA, colA] = planeFromVoxel(state.axis, a);
  const [rowB, colB] = planeFromVoxel(state.axis, b);
  const rowLo = Math.min(rowA, rowB);
  const rowHi = Math.max(rowA, rowB) + 1;
  const colLo = Math.min(colA, colB);
  const colHi = Math.max(colA, colB) + 1;
  if (rowHi - rowLo < 2 && colHi - colLo < 2) return state; // zero-area drag
  let [rangeLo, rangeHi] = state.sliceRange;
  if (rangeHi <= rangeLo) rangeHi = rangeLo + 1;
  const lo = voxelFromPlane(state.axis, rangeLo, rowLo, colLo);
  const hi = voxelFromPlane(state.axis, rangeHi, rowHi, colHi);
  return { ...state, box: { lo, hi } };
}

export function clearPrompts(state: ViewerState): ViewerState {
  return { ...state, points: [], box: null, text: '' };
}

export function setText(state: ViewerState, text: string): ViewerState {
  return { ...state, text };
}

export function setMode(state: ViewerState, mode: SegmentMode): ViewerState {
  return { ...state, mode };
}

export function setDeleteMode(state: ViewerState, on: boolean): ViewerState {
  return { ...state, deleteMode: on };
}

export function hasPrompts(state: ViewerState): boolean {
  return state.points.length > 0 || state.box !== null || state.text.trim() !== '';
}

/** Wire payload for POST segment, built from the pending prompts. */
export function promptPayload(state: ViewerState): PromptPayload {
  const payload: PromptPayload = {};
  if (state.points.length > 0) {
    payload.points = state.points.map((p) => ({ zyx: [...p.zyx], label: p.label }));
  }
  if (state.box !== null) {
    payload.box = { lo: [...state.box.lo], hi: [...state.box.hi] };
  }
  if (state.text.trim() !== '') {
    payload.text = state.text.trim();
  }
  return payload;
}

/**
 * Mark a segmentation request in flight. Returns null while another
 * request is pending: the server allows one per session at a time.
 */
export function beginSegment(state: ViewerState): ViewerState | null {
  if (state.requestPending) return null;
  return { ...state, requestPending: true, error: null };
}

export function segmentSucceeded(state: ViewerState, res: SegmentResponse): ViewerState {
  return {
    ...state,
    requestPending: false,
    overlays: [...state.overlays, {
      maskId: res.mask_id,
      color: maskColor(res.mask_id),
      visible: true,
    }],
    history: [...state.history, {
      maskId: res.mask_id,
      mode: res.mode,
      dice: res.dice,
      numForeground: res.num_foreground,
    }],
    lastTimings: res.timings_ms,
    lastDice: res.dice,
    lastRoi: res.roi,
    error: null,
  };
}

/** Failure keeps the pending prompts so the user can retry or adjust. */
export function segmentFailed(state: ViewerState, message: string): ViewerState {
  return { ...state, requestPending: false, error: message };
}

export function normalizedBox(box: PendingBox): PendingBox {
  const lo: Triple = [0, 0, 0];
  const hi: Triple = [0, 0, 0];
  for (let i = 0; i < 3; i++) {
    lo[i] = Math.min(box.lo[i], box.hi[i]);
    hi[i] = Math.max(box.lo[i], box.hi[i]);
  }
  return { lo, hi };
}
