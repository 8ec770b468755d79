import { ApiClient, ApiError } from './api.js';
import { maskRgb } from './colors.js';
import { voxelToCanvas } from './coords.js';
import type { CanvasGeom } from './coords.js';
import { paintSpans } from './rle.js';
import {
  axisExtent, beginSegment, clearPrompts, dragBox, hasPrompts, initialState,
  placePoint, promptPayload, segmentFailed, segmentSucceeded, sessionOpened,
  setAxis, setDeleteMode, setMode, setSlice, setSliceRange, setText,
} from './state.js';
import type { Axis, SegmentMode, Triple, ViewerState } from './types.js';

const OVERLAY_ALPHA = 110;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const baseUrlInput = el<HTMLInputElement>('base-url');
const fileInput = el<HTMLInputElement>('volume-file');
const axisSelect = el<HTMLSelectElement>('axis');
const sliceSlider = el<HTMLInputElement>('slice');
const sliceLabel = el<HTMLSpanElement>('slice-label');
const wcInput = el<HTMLInputElement>('wc');
const wwInput = el<HTMLInputElement>('ww');
const toolSelect = el<HTMLSelectElement>('tool');
const deleteToggle = el<HTMLInputElement>('delete-mode');
const rangeLoInput = el<HTMLInputElement>('range-lo');
const rangeHiInput = el<HTMLInputElement>('range-hi');
const textInput = el<HTMLInputElement>('text-prompt');
const modeSelect = el<HTMLSelectElement>('mode');
const runButton = el<HTMLButtonElement>('run');
const clearButton = el<HTMLButtonElement>('clear');
const statusLine = el<HTMLDivElement>('status');
const errorToast = el<HTMLDivElement>('error-toast');
const historyList = el<HTMLUListElement>('history');
const canvas = el<HTMLCanvasElement>('viewer');

let state: ViewerState = initialState();
let api = new ApiClient(baseUrlInput.value || 'http://127.0.0.1:8000');
let dragStart: [number, number] | null = null;
const sliceCache = new Map<string, HTMLImageElement>();
const spanCache = new Map<string, number[][]>();

function geom(): CanvasGeom {
  return { width: canvas.width, height: canvas.height };
}

function planeSize(): [number, number] {
  const d = state.dims;
  switch (state.axis) {
    case 'z': return [d[1], d[2]];
    case 'y': return [d[0], d[2]];
    case 'x': return [d[0], d[1]];
  }
}

function update(next: ViewerState): void {
  state = next;
  void render();
}

async function loadSliceImage(): Promise<HTMLImageElement> {
  if (state.sessionId === null) throw new Error('no session');
  const url = api.sliceUrl(state.sessionId, state.axis, state.sliceIndex,
    Number(wcInput.value), Number(wwInput.value));
  const cached = sliceCache.get(url);
  if (cached !== undefined) return cached;
  const img = new Image();
  img.crossOrigin = 'anonymous';
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error('slice load failed'));
    img.src = url;
  });
  sliceCache.set(url, img);
  return img;
}

async function overlaySpans(maskId: string): Promise<number[][]> {
  if (state.sessionId === null) throw new Error('no session');
  const key = `${maskId}/${state.axis}/${state.sliceIndex}`;
  const cached = spanCache.get(key);
  if (cached !== undefined) return cached;
  const res = await api.maskSlice(state.sessionId, maskId, state.axis, state.sliceIndex);
  spanCache.set(key, res.spans);
  return res.spans;
}

function drawMarkers(ctx: CanvasRenderingContext2D): void {
  const axisIdx = state.axis === 'z' ? 0 : state.axis === 'y' ? 1 : 2;
  for (const point of state.points) {
    if (point.zyx[axisIdx] !== state.sliceIndex) continue;
    const [x, y] = voxelToCanvas(point.zyx, geom(), state.dims, state.axis);
    ctx.strokeStyle = point.label === 'pos' ? '#2ecc40' : '#ff4136';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, Math.PI * 2);
    ctx.stroke();
  }
  if (state.box !== null) {
    drawVoxelRect(ctx, state.box.lo, state.box.hi, '#ffdc00');
  }
  if (state.lastRoi !== null) {
    drawVoxelRect(ctx, state.lastRoi.lo as Triple, state.lastRoi.hi as Triple, '#7fdbff');
  }
}

function drawVoxelRect(
  ctx: CanvasRenderingContext2D, lo: Triple, hi: Triple, color: string,
): void {
  const axisIdx = state.axis === 'z' ? 0 : state.axis === 'y' ? 1 : 2;
  if (state.sliceIndex < lo[axisIdx] || state.sliceIndex >= hi[axisIdx]) return;
  const loCanvas = voxelToCanvas(lo, geom(), state.dims, state.axis);
  const hiVoxel: Triple = [hi[0] - 1, hi[1] - 1, hi[2] - 1];
  const hiCanvas = voxelToCanvas(hiVoxel, geom(), state.dims, state.axis);
  const [rows, cols] = planeSize();
  const cellW = canvas.width / cols;
  const cellH = canvas.height / rows;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.strokeRect(
    loCanvas[0] - cellW / 2, loCanvas[1] - cellH / 2,
    hiCanvas[0] - loCanvas[0] + cellW, hiCanvas[1] - loCanvas[1] + cellH,
  );
}

async function render(): Promise<void> {
  runButton.disabled = state.requestPending || state.sessionId === null
    || !hasPrompts(state);
  deleteToggle.checked = state.deleteMode;
  sliceLabel.textContent =
    `${state.sliceIndex + 1} / ${axisExtent(state.dims, state.axis)}`;
  errorToast.textContent = state.error ?? '';
  errorToast.style.display = state.error === null ? 'none' : 'block';
  statusLine.textContent = statusText();
  historyList.replaceChildren(...state.history.map((entry) => {
    const item = document.createElement('li');
    const dice = entry.dice === null ? '' : ` dice ${entry.dice.toFixed(4)}`;
    item.textContent =
      `${entry.maskId} (${entry.mode}) ${entry.numForeground} voxels${dice}`;
    return item;
  }));

  const ctx = canvas.getContext('2d');
  if (ctx === null || state.sessionId === null) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  try {
    const img = await loadSliceImage();
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
    const [rows, cols] = planeSize();
    for (const overlay of state.overlays) {
      if (!overlay.visible) continue;
      const spans = await overlaySpans(overlay.maskId);
      const rgba = new Uint8ClampedArray(rows * cols * 4);
      paintSpans(rgba, spans, rows, cols, maskRgb(overlay.maskId), OVERLAY_ALPHA);
      const plane = new OffscreenCanvas(cols, rows);
      const planeCtx = plane.getContext('2d');
      if (planeCtx === null) continue;
      planeCtx.putImageData(new ImageData(rgba, cols, rows), 0, 0);
      ctx.drawImage(plane, 0, 0, canvas.width, canvas.height);
    }
  } catch (err) {
    statusLine.textContent = `render failed: ${String(err)}`;
  }
  drawMarkers(ctx);
}

function statusText(): string {
  if (state.sessionId === null) return 'upload a volume to start';
  if (state.requestPending) return 'segmenting...';
  const parts = [`session ${state.sessionId}`,
    `${state.dims[0]}x${state.dims[1]}x${state.dims[2]}`];
  if (state.lastDice !== null) parts.push(`dice ${state.lastDice.toFixed(4)}`);
  if (state.lastTimings !== null) {
    const total = Object.values(state.lastTimings).reduce((a, b) => a + b, 0);
    parts.push(`${total.toFixed(0)} ms`);
  }
  return parts.join(' | ');
}

function canvasPos(event: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    ((event.clientX - rect.left) / rect.width) * canvas.width,
    ((event.clientY - rect.top) / rect.height) * canvas.height,
  ];
}

baseUrlInput.addEventListener('change', () => {
  api = new ApiClient(baseUrlInput.value);
  sliceCache.clear();
  spanCache.clear();
});

fileInput.addEventListener('change', async () => {
  const file = fileInput.files?.[0];
  if (file === undefined) return;
  try {
    const created = await api.createSession(await file.arrayBuffer());
    sliceCache.clear();
    spanCache.clear();
    const dims = created.dims as Triple;
    update(sessionOpened(state, created.session_id, dims));
    sliceSlider.max = String(axisExtent(dims, state.axis) - 1);
    sliceSlider.value = String(state.sliceIndex);
    rangeLoInput.value = '0';
    rangeHiInput.value = String(axisExtent(dims, state.axis));
  } catch (err) {
    update(segmentFailed(state, err instanceof ApiError ? err.message : String(err)));
  }
});

axisSelect.addEventListener('change', () => {
  const next = setAxis(state, axisSelect.value as Axis);
  sliceSlider.max = String(axisExtent(next.dims, next.axis) - 1);
  sliceSlider.value = String(next.sliceIndex);
  rangeLoInput.value = String(next.sliceRange[0]);
  rangeHiInput.value = String(next.sliceRange[1]);
  update(next);
});

sliceSlider.addEventListener('input', () => {
  update(setSlice(state, Number(sliceSlider.value)));
});
wcInput.addEventListener('change', () => void render());
wwInput.addEventListener('change', () => void render());
deleteToggle.addEventListener('change', () => {
  update(setDeleteMode(state, deleteToggle.checked));
});
rangeLoInput.addEventListener('change', () => {
  update(setSliceRange(state, Number(rangeLoInput.value), Number(rangeHiInput.value)));
});
rangeHiInput.addEventListener('change', () => {
  update(setSliceRange(state, Number(rangeLoInput.value), Number(rangeHiInput.value)));
});
textInput.addEventListener('input', () => {
  update(setText(state, textInput.value));
});
modeSelect.addEventListener('change', () => {
  update(setMode(state, modeSelect.value as SegmentMode));
});
clearButton.addEventListener('click', () => update(clearPrompts(state)));

canvas.addEventListener('mousedown', (event) => {
  if (toolSelect.value === 'box') dragStart = canvasPos(event);
});

canvas.addEventListener('mouseup', (event) => {
  const pos = canvasPos(event);
  if (toolSelect.value === 'box' && dragStart !== null) {
    update(dragBox(state, dragStart, pos, geom()));
    dragStart = null;
    return;
  }
  // shift-click flips the point label
  const label = event.shiftKey ? 'neg' : 'pos';
  update(placePoint(state, pos[0], pos[1], geom(), label));
});

runButton.addEventListener('click', async () => {
  const started = beginSegment(state);
  if (started === null || state.sessionId === null) return;
  update(started);
  try {
    const res = await api.segment(state.sessionId, promptPayload(state), state.mode);
    spanCache.clear();
    update(segmentSucceeded(state, res));
  } catch (err) {
    update(segmentFailed(state, err instanceof ApiError ? err.message : String(err)));
  }
});

void render();
