import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import type { FetchLike } from '../src/api.js';

interface Recorded {
  url: string;
  init?: RequestInit;
}

function stub(status: number, body: unknown): { fetchFn: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'content-type': 'application/json' },
    });
  };
  return { fetchFn, calls };
}

describe('ApiClient', () => {
  it('normalizes a trailing slash in the base url', async () => {
    const { fetchFn, calls } = stub(200, { session_id: 's', dims: [1, 1, 1], spacing: [1, 1, 1] });
    const api = new ApiClient('http://host:8000/', fetchFn);
    await api.sessionInfo('abc');
    expect(calls[0].url).toBe('http://host:8000/sessions/abc');
  });

  it('uploads volumes as octet-stream', async () => {
    const { fetchFn, calls } = stub(200, { session_id: 's1', dims: [2, 2, 2], spacing: [1, 1, 1] });
    const api = new ApiClient('http://host', fetchFn);
    const created = await api.createSession(new ArrayBuffer(16));
    expect(created.session_id).toBe('s1');
    expect(calls[0].url).toBe('http://host/sessions');
    expect(calls[0].init?.method).toBe('POST');
    expect((calls[0].init?.headers as Record<string, string>)['content-type'])
      .toBe('application/octet-stream');
  });

  it('posts segment requests with mode and prompts', async () => {
    const { fetchFn, calls } = stub(200, {
      mask_id: 'm1', mode: 'zoom', roi: null, timings_ms: {},
      dice: null, note: null, num_foreground: 0,
    });
    const api = new ApiClient('http://host', fetchFn);
    await api.segment('sid', { points: [{ zyx: [1, 2, 3], label: 'pos' }] }, 'zoom');
    expect(calls[0].url).toBe('http://host/sessions/sid/segment');
    const body = JSON.parse(calls[0].init?.body as string);
    expect(body).toEqual({
      mode: 'zoom',
      prompts: { points: [{ zyx: [1, 2, 3], label: 'pos' }] },
    });
  });

  it('fetches mask slices with axis and index', async () => {
    const { fetchFn, calls } = stub(200, { axis: 'z', index: 4, rows: 2, cols: 2, spans: [] });
    const api = new ApiClient('http://host', fetchFn);
    const res = await api.maskSlice('sid', 'm2', 'z', 4);
    expect(res.spans).toEqual([]);
    expect(calls[0].url).toBe('http://host/sessions/sid/masks/m2/slice?axis=z&index=4');
  });

  it('builds slice PNG urls with window parameters', () => {
    const api = new ApiClient('http://host', stub(200, {}).fetchFn);
    expect(api.sliceUrl('sid', 'y', 7, 0, 4))
      .toBe('http://host/sessions/sid/slice?axis=y&index=7&wc=0&ww=4');
  });

  it('surfaces the server detail on failure', async () => {
    const { fetchFn } = stub(409, { detail: 'a segmentation is already running for this session' });
    const api = new ApiClient('http://host', fetchFn);
    await expect(api.segment('sid', {}, 'zoom')).rejects.toThrowError(ApiError);
    await expect(api.segment('sid', {}, 'zoom'))
      .rejects.toThrow(/already running/);
  });

  it('falls back to the status line for non-json errors', async () => {
    const fetchFn: FetchLike = async () => new Response('boom', { status: 502 });
    const api = new ApiClient('http://host', fetchFn);
    await expect(api.sessionInfo('x')).rejects.toThrow('HTTP 502');
  });
});
