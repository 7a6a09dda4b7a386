/** Thin fetch client for the gateway; unwraps the response envelope. */

import {
  BiplotPayload,
  Envelope,
  SessionPayload,
  StepRequest,
  TestTablePayload,
} from './types.js';

export class GatewayError extends Error {
  constructor(readonly code: string, message: string,
              readonly httpStatus: number) {
    super(message);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  const doc = await response.json() as Envelope<T>;
  if (doc.status === 'ok') return doc.payload;
  throw new GatewayError(doc.error.code, doc.error.message, response.status);
}

export class GatewayClient {
  constructor(readonly baseUrl: string,
              readonly fetchFn: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    return unwrap<T>(response);
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: {'content-type': 'application/json'},
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  createSession(body: unknown): Promise<{session_id: string}> {
    return this.post('/sessions', body);
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request(`/sessions/${sessionId}`);
  }

  applyStep(sessionId: string, step: StepRequest): Promise<unknown> {
    return this.post(`/sessions/${sessionId}/steps`, step);
  }

  undo(sessionId: string): Promise<unknown> {
    return this.post(`/sessions/${sessionId}/undo`);
  }

  getBiplot(sessionId: string, axes: number[], nullTrials = 20,
            seed = 0): Promise<BiplotPayload> {
    const s = [...axes].sort((a, b) => a - b).join(',');
    return this.request(
        `/sessions/${sessionId}/biplot?S=${s}&null_trials=${nullTrials}` +
        `&seed=${seed}&include_pairings=true`);
  }

  getTests(sessionId: string): Promise<TestTablePayload> {
    return this.request(`/sessions/${sessionId}/tests`);
  }

  getExport(sessionId: string): Promise<Record<string, unknown>> {
    return this.request(`/sessions/${sessionId}/export`);
  }
}
