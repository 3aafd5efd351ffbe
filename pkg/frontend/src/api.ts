// Typed client over the session HTTP API. The client is deliberately
// ignorant of anything internal: it renders exactly what the server says.

export interface Turn {
  index: number;
  role: string;
  content: string;
}

export interface DraftCard {
  revision: number;
  summary: string;
  differences: string;
  consistency: string;
}

export interface DeliverableCard {
  components: string[];
  provenance: {
    checked_internally: boolean;
    postprocessed_unverified: boolean;
    testgen_degraded: boolean;
  };
}

export interface SessionView {
  id: string;
  state: string;
  turns: Turn[];
  draft: DraftCard | null;
  deliverable: DeliverableCard | null;
}

export class WrongStateError extends Error {
  constructor(public detail: string) {
    super(detail);
  }
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (response.status === 409) {
      const body = await response.json().catch(() => ({ detail: "wrong state" }));
      throw new WrongStateError(String(body.detail ?? "wrong state"));
    }
    if (!response.ok) {
      throw new Error(`request failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  createSession(): Promise<{ id: string; state: string }> {
    return this.json("/sessions", { method: "POST" });
  }

  getSession(id: string): Promise<SessionView> {
    return this.json(`/sessions/${id}`);
  }

  postMessage(id: string, text: string): Promise<SessionView> {
    return this.json(`/sessions/${id}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  accept(id: string): Promise<{ id: string; state: string }> {
    return this.json(`/sessions/${id}/accept`, { method: "POST" });
  }

  deliverableUrl(id: string): string {
    return `${this.baseUrl}/sessions/${id}/deliverable`;
  }

  async downloadDeliverable(id: string): Promise<Blob> {
    const response = await fetch(this.deliverableUrl(id));
    if (!response.ok) {
      throw new Error(`download failed: ${response.status}`);
    }
    return await response.blob();
  }
}
