/** Thin typed client over the JSON session endpoints.
 *
 * The transport is injectable so tests can replay recorded fixtures without
 * a live kernel.
 */
import {
  AnalysisPayload, ConflictError, EditResultPayload, MeshPayload,
  OptionsPayload, RejectedError, ServiceError, SessionInfo,
} from "./types.js";

export interface Transport {
  (method: string, path: string, payload?: unknown):
    Promise<{ status: number; body: unknown }>;
}

export function httpTransport(baseUrl: string): Transport {
  return async (method, path, payload) => {
    const response = await fetch(baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: payload === undefined ? undefined : JSON.stringify(payload),
    });
    return { status: response.status, body: await response.json() };
  };
}

function unwrap<T>(status: number, body: unknown): T {
  if (status >= 200 && status < 300) {
    return body as T;
  }
  const err = body as ServiceError;
  if (status === 409) {
    throw new ConflictError(err);
  }
  if (status === 422) {
    throw new RejectedError(err);
  }
  throw new Error(`${err.error ?? status}: ${err.detail ?? "request failed"}`);
}

export class SessionApi {
  constructor(private transport: Transport) {}

  async createSession(model: unknown): Promise<SessionInfo> {
    const r = await this.transport("POST", "/sessions", { model });
    return unwrap<SessionInfo>(r.status, r.body);
  }

  async mesh(session: string): Promise<MeshPayload> {
    const r = await this.transport("GET", `/sessions/${session}/mesh`);
    return unwrap<MeshPayload>(r.status, r.body);
  }

  async constraints(session: string): Promise<AnalysisPayload> {
    const r = await this.transport("GET", `/sessions/${session}/constraints`);
    return unwrap<AnalysisPayload>(r.status, r.body);
  }

  async options(session: string): Promise<OptionsPayload> {
    const r = await this.transport("GET", `/sessions/${session}/options`);
    return unwrap<OptionsPayload>(r.status, r.body);
  }

  async postEdit(session: string, edit: unknown, revision: number,
                 autoResolve = false): Promise<EditResultPayload> {
    const r = await this.transport("POST", `/sessions/${session}/edits`,
                                   { edit, revision, auto_resolve: autoResolve });
    return unwrap<EditResultPayload>(r.status, r.body);
  }

  async postResolveAuto(session: string, revision: number):
      Promise<{ revision: number; constraint_state: { state: string } }> {
    const r = await this.transport("POST", `/sessions/${session}/resolve`,
                                   { mode: "auto", revision });
    return unwrap(r.status, r.body);
  }

  async postOption(session: string, optionId: string,
                   revision: number): Promise<{ revision: number;
                                                constraint_state: { state: string } }> {
    const r = await this.transport("POST", `/sessions/${session}/options`,
                                   { option: optionId, revision });
    return unwrap(r.status, r.body);
  }

  async postParameter(session: string, constraintId: number, value: number,
                      revision: number, degrees = false): Promise<{ revision: number }> {
    const r = await this.transport("POST", `/sessions/${session}/parameters`,
                                   { constraint_id: constraintId, value,
                                     revision, degrees });
    return unwrap(r.status, r.body);
  }

  async history(session: string): Promise<{ count: number; steps: unknown[] }> {
    const r = await this.transport("GET", `/sessions/${session}/history`);
    return unwrap(r.status, r.body);
  }
}
