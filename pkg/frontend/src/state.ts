// Client-side session state. The server owns the phase machine; this mirror
// exists so a refresh can resume where the participant left off.

export interface UiSessionState {
  token: string;
  condition: "assisted" | "unassisted";
  phase: string;
  subPhase: string | null;
  draftText: string;
  selectedActionIds: string[];
  tlxSubmitted: boolean;
}

const STORAGE_KEY = "study-session";

export function newState(token: string, condition: "assisted" | "unassisted"): UiSessionState {
  return {
    token,
    condition,
    phase: "example",
    subPhase: "write",
    draftText: "",
    selectedActionIds: [],
    tlxSubmitted: false,
  };
}

export function saveState(storage: Storage, state: UiSessionState): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(state));
}

export function restoreState(storage: Storage): UiSessionState | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    const parsed = JSON.parse(raw);
    if (typeof parsed.token !== "string" || typeof parsed.condition !== "string") return null;
    return parsed as UiSessionState;
  } catch {
    return null;
  }
}

export function clearState(storage: Storage): void {
  storage.removeItem(STORAGE_KEY);
}
