// Typed client for the study service. Every mutation the UI performs goes
// through here; no instance content is ever constructed locally.

export interface SessionInfo {
  session_id: string;
  condition: "assisted" | "unassisted";
  phase: string;
  sub_phase: string | null;
}

export interface InstanceView {
  phase: string;
  sub_phase: string | null;
  instance_id: string;
  description: string;
  walkthrough: string | null;
}

export interface ActionOption {
  id: string;
  text: string;
}

export interface SuggestionView {
  instance_id: string;
  suggestion: string;
}

export interface TranslationVerdict {
  valid: boolean;
  failure_step: number | null;
  missing_preconditions: string[];
  unmet_goals: string[];
  summary: string;
  phase: string;
  sub_phase: string | null;
}

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ServiceClient {
  constructor(private baseUrl: string = "") {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return request<T>(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(condition?: string): Promise<SessionInfo> {
    return this.post("/session", condition ? { condition } : {});
  }

  getInstance(sessionId: string): Promise<InstanceView> {
    return request(`${this.baseUrl}/session/${sessionId}/instance`);
  }

  getActions(sessionId: string): Promise<{ instance_id: string; actions: ActionOption[] }> {
    return request(`${this.baseUrl}/session/${sessionId}/actions`);
  }

  getSuggestion(sessionId: string): Promise<SuggestionView> {
    return request(`${this.baseUrl}/session/${sessionId}/suggestion`);
  }

  sendSuggestionFeedback(sessionId: string, correct: boolean): Promise<{ ok: boolean }> {
    return this.post(`/session/${sessionId}/suggestion/feedback`, { correct });
  }

  submitFreeform(sessionId: string, text: string): Promise<{ phase: string; sub_phase: string }> {
    return this.post(`/session/${sessionId}/plan/freeform`, { text });
  }

  submitTranslation(sessionId: string, actionIds: string[]): Promise<TranslationVerdict> {
    return this.post(`/session/${sessionId}/plan/translation`, { action_ids: actionIds });
  }

  submitTlx(sessionId: string, scales: number[]): Promise<{ load: number }> {
    return this.post(`/session/${sessionId}/tlx`, { scales });
  }

  endSession(sessionId: string): Promise<{ ok: boolean }> {
    return this.post(`/session/${sessionId}/end`, {});
  }
}
