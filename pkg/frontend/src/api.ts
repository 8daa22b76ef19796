import type { FleetSnapshot, TaskResponse } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`gateway replied ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client for the gateway HTTP API. Everything the console does
 * to the server goes through this class (plus the event WebSocket); there
 * is deliberately no other network surface.
 */
export class GatewayClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const payload = await resp.json();
        if (payload && typeof payload.detail === "string") detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
  }

  async createSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("POST", "/sessions");
    return body.session_id;
  }

  submitTask(sessionId: string, text: string): Promise<TaskResponse> {
    return this.request("POST", `/sessions/${sessionId}/task`, { text });
  }

  approve(sessionId: string): Promise<{ execution_id: number }> {
    return this.request("POST", `/sessions/${sessionId}/approve`);
  }

  reject(sessionId: string, feedback?: string): Promise<{ status: string }> {
    return this.request("POST", `/sessions/${sessionId}/reject`,
      feedback ? { feedback } : {});
  }

  abort(sessionId: string): Promise<{ status: string }> {
    return this.request("POST", `/sessions/${sessionId}/abort`);
  }

  fleet(): Promise<FleetSnapshot> {
    return this.request("GET", "/fleet");
  }

  eventsUrl(sessionId: string, location: { protocol: string; host: string }): string {
    const scheme = location.protocol === "https:" ? "wss" : "ws";
    return `${scheme}://${location.host}/sessions/${sessionId}/events`;
  }
}
