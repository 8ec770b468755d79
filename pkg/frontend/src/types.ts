export type Axis = 'z' | 'y' | 'x';
export type SegmentMode = 'zoom' | 'resize';
export type PointLabel = 'pos' | 'neg';

export type Triple = [number, number, number];

export interface PendingPoint {
  zyx: Triple;
  label: PointLabel;
}

export interface PendingBox {
  lo: Triple;
  hi: Triple; // exclusive
}

export interface Roi {
  lo: Triple;
  hi: Triple;
}

/** Wire form of the prompts field of POST /sessions/{id}/segment. */
export interface PromptPayload {
  points?: { zyx: number[]; label: PointLabel }[];
  box?: { lo: number[]; hi: number[] };
  text?: string;
}

export interface SessionCreated {
  session_id: string;
  dims: number[];
  spacing: number[];
}

export interface SegmentResponse {
  mask_id: string;
  mode: SegmentMode;
  roi: Roi | null;
  timings_ms: Record<string, number>;
  dice: number | null;
  note: string | null;
  num_foreground: number;
}

/** Run-length spans [row, start, length] of one mask slice. */
export interface MaskSliceResponse {
  axis: Axis;
  index: number;
  rows: number;
  cols: number;
  spans: number[][];
}

export interface MaskOverlay {
  maskId: string;
  color: string;
  visible: boolean;
}

export interface HistoryEntry {
  maskId: string;
  mode: SegmentMode;
  dice: number | null;
  numForeground: number;
}

export interface ViewerState {
  sessionId: string | null;
  dims: Triple;
  axis: Axis;
  sliceIndex: number;
  windowCenter: number;
  windowWidth: number;
  points: PendingPoint[];
  box: PendingBox | null;
  text: string;
  /** Inclusive lo, exclusive hi extrusion range along the current axis. */
  sliceRange: [number, number];
  deleteMode: boolean;
  mode: SegmentMode;
  requestPending: boolean;
  overlays: MaskOverlay[];
  history: HistoryEntry[];
  lastTimings: Record<string, number> | null;
  lastDice: number | null;
  lastRoi: Roi | null;
  error: string | null;
}
