import type {
  Axis, MaskSliceResponse, PromptPayload, SegmentMode, SegmentResponse,
  SessionCreated,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === 'string') return body.detail;
  } catch {
    // non-JSON error body: fall through to the status line
  }
  return `HTTP ${res.status}`;
}

/** Typed client for the segmentation service; one instance per base URL. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      throw new ApiError(res.status, await errorDetail(res));
    }
    return res;
  }

  /** Upload a raw volume file body. */
  async createSession(volume: ArrayBuffer): Promise<SessionCreated> {
    const res = await this.request('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/octet-stream' },
      body: volume,
    });
    return res.json();
  }

  async sessionInfo(sessionId: string): Promise<Record<string, unknown>> {
    const res = await this.request(`/sessions/${sessionId}`);
    return res.json();
  }

  /** URL of the grayscale slice PNG; used directly as an image source. */
  sliceUrl(sessionId: string, axis: Axis, index: number, wc: number, ww: number): string {
    const params = new URLSearchParams({
      axis, index: String(index), wc: String(wc), ww: String(ww),
    });
    return `${this.baseUrl}/sessions/${sessionId}/slice?${params}`;
  }

  async segment(
    sessionId: string, prompts: PromptPayload, mode: SegmentMode,
  ): Promise<SegmentResponse> {
    const res = await this.request(`/sessions/${sessionId}/segment`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ mode, prompts }),
    });
    return res.json();
  }

  async maskSlice(
    sessionId: string, maskId: string, axis: Axis, index: number,
  ): Promise<MaskSliceResponse> {
    const params = new URLSearchParams({ axis, index: String(index) });
    const res = await this.request(
      `/sessions/${sessionId}/masks/${maskId}/slice?${params}`);
    return res.json();
  }
}
