// Component tests over jsdom with a scripted service client. They cover the
// pieces the end-to-end flow cannot exercise cheaply: condition isolation,
// reorder mechanics, confirmation dialogs and the retry banner.
import { beforeEach, describe, expect, it } from "vitest";
import { App, TLX_SCALES, verdictMessage } from "../src/app";
import { ApiError, ServiceClient, TranslationVerdict } from "../src/api";
import { newState, saveState } from "../src/state";

const flush = () => new Promise<void>((r) => setTimeout(r, 0));

function fakeClient(overrides: Record<string, unknown>): ServiceClient {
  const base: Record<string, unknown> = {};
  for (const name of [
    "createSession", "getInstance", "getActions", "getSuggestion",
    "sendSuggestionFeedback", "submitFreeform", "submitTranslation",
    "submitTlx", "endSession",
  ]) {
    base[name] = async () => { throw new Error(`unexpected call: ${name}`); };
  }
  return Object.assign(base, overrides) as unknown as ServiceClient;
}

const writeInstance = {
  phase: "main", sub_phase: "write", instance_id: "i1",
  description: "Three blocks sit on the table.", walkthrough: null,
};

const actionListing = {
  instance_id: "i1",
  actions: [
    { id: "(pickup a)", text: "Pick up block A." },
    { id: "(pickup b)", text: "Pick up block B." },
    { id: "(stack a b)", text: "Put block A on top of block B." },
  ],
};

function mount(): HTMLElement {
  document.body.textContent = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

function seededStorage(condition: "assisted" | "unassisted"): Storage {
  window.sessionStorage.clear();
  saveState(window.sessionStorage, newState("tok", condition));
  return window.sessionStorage;
}

function click(root: HTMLElement, selector: string): void {
  const node = root.querySelector(selector) as HTMLButtonElement | null;
  if (!node) throw new Error(`no element for ${selector}`);
  node.click();
}

beforeEach(() => window.sessionStorage.clear());

describe("write view", () => {
  it("shows the suggestion panel with feedback controls when assisted", async () => {
    const feedback: boolean[] = [];
    const client = fakeClient({
      getInstance: async () => writeInstance,
      getSuggestion: async () => ({ instance_id: "i1", suggestion: "Move A onto B." }),
      sendSuggestionFeedback: async (_sid: string, correct: boolean) => {
        feedback.push(correct);
        return { ok: true };
      },
    });
    const root = mount();
    await new App(root, { client, storage: seededStorage("assisted") }).start();

    expect(root.querySelector('[data-testid="suggestion-panel"]')).not.toBeNull();
    expect(root.querySelector('[data-testid="suggestion-text"]')!.textContent)
      .toBe("Move A onto B.");
    click(root, '[data-testid="feedback-incorrect"]');
    await flush();
    expect(feedback).toEqual([false]);
    const correct = root.querySelector('[data-testid="feedback-correct"]') as HTMLButtonElement;
    expect(correct.disabled).toBe(true);
  });

  it("never requests or renders a suggestion when unassisted", async () => {
    let asked = 0;
    const client = fakeClient({
      getInstance: async () => writeInstance,
      getSuggestion: async () => { asked += 1; throw new ApiError(409, "assisted-only"); },
    });
    const root = mount();
    await new App(root, { client, storage: seededStorage("unassisted") }).start();

    expect(asked).toBe(0);
    expect(root.querySelector('[data-testid="suggestion-panel"]')).toBeNull();
    expect(root.querySelector('[data-testid="draft"]')).not.toBeNull();
  });

  it("hides the panel quietly when no suggestion exists for the instance", async () => {
    const client = fakeClient({
      getInstance: async () => writeInstance,
      getSuggestion: async () => { throw new ApiError(404, "no suggestion"); },
    });
    const root = mount();
    await new App(root, { client, storage: seededStorage("assisted") }).start();
    expect(root.querySelector('[data-testid="suggestion-panel"]')).toBeNull();
    expect(root.querySelector('[data-testid="submit-write"]')).not.toBeNull();
  });

  it("shows a retry banner when the server is unreachable, then recovers", async () => {
    let up = false;
    const client = fakeClient({
      getInstance: async () => {
        if (!up) throw new TypeError("fetch failed");
        return writeInstance;
      },
    });
    const root = mount();
    await new App(root, { client, storage: seededStorage("unassisted") }).start();

    expect(root.querySelector('[data-testid="retry-banner"]')).not.toBeNull();
    up = true;
    click(root, '[data-testid="retry-banner"] button');
    await flush();
    expect(root.querySelector('[data-testid="retry-banner"]')).toBeNull();
    expect(root.querySelector('[data-testid="draft"]')).not.toBeNull();
  });
});

describe("translate view", () => {
  const translateInstance = { ...writeInstance, sub_phase: "translate" };

  async function mountTranslate(
    submitted: string[][],
    verdict: Partial<TranslationVerdict> = {},
    confirmFn?: (m: string) => boolean,
  ): Promise<HTMLElement> {
    const client = fakeClient({
      getInstance: async () => translateInstance,
      getActions: async () => actionListing,
      submitTranslation: async (_sid: string, ids: string[]) => {
        submitted.push(ids);
        return {
          valid: false, failure_step: null, missing_preconditions: [],
          unmet_goals: ["(on a b)"], summary: "goal unmet",
          phase: "done", sub_phase: null, ...verdict,
        };
      },
    });
    const root = mount();
    const app = new App(root, {
      client, storage: seededStorage("unassisted"), confirmFn,
    });
    await app.start();
    return root;
  }

  it("builds the submitted sequence from add, reorder and remove edits", async () => {
    const submitted: string[][] = [];
    const root = await mountTranslate(submitted, { valid: true });

    const add = (id: string) =>
      click(root, `[data-testid="available"] li[data-action-id="${id}"] .add-step`);
    add("(pickup a)");
    add("(stack a b)");
    add("(pickup b)");
    // order is now a, ab, b; move the last pick to the front half
    const rows = () => [...root.querySelectorAll('[data-testid="chosen"] li')]
      .map((li) => li.getAttribute("data-action-id"));
    expect(rows()).toEqual(["(pickup a)", "(stack a b)", "(pickup b)"]);

    click(root, '[data-testid="chosen"] li:nth-child(3) .move-up');
    expect(rows()).toEqual(["(pickup a)", "(pickup b)", "(stack a b)"]);
    click(root, '[data-testid="chosen"] li:nth-child(2) .move-up');
    expect(rows()).toEqual(["(pickup b)", "(pickup a)", "(stack a b)"]);
    click(root, '[data-testid="chosen"] li:nth-child(1) .move-down');
    expect(rows()).toEqual(["(pickup a)", "(pickup b)", "(stack a b)"]);
    click(root, '[data-testid="chosen"] li:nth-child(2) .remove-step');
    expect(rows()).toEqual(["(pickup a)", "(stack a b)"]);

    click(root, '[data-testid="submit-translation"]');
    await flush();
    expect(submitted).toEqual([["(pickup a)", "(stack a b)"]]);
    const banner = root.querySelector('[data-testid="verdict"]')!;
    expect(banner.getAttribute("data-valid")).toBe("true");
    expect(banner.textContent).toContain("achieves the goal");
  });

  it("shows only natural-language action texts, never symbolic ids", async () => {
    const root = await mountTranslate([]);
    const visible = [...root.querySelectorAll('[data-testid="available"] li span')]
      .map((s) => s.textContent ?? "");
    expect(visible.length).toBe(3);
    for (const text of visible) {
      expect(text).not.toMatch(/[()]/);
      expect(text).toMatch(/block/i);
    }
  });

  it("submits an empty plan only after the participant confirms", async () => {
    const submitted: string[][] = [];
    const asked: string[] = [];
    let answer = false;
    const root = await mountTranslate(submitted, {}, (m) => { asked.push(m); return answer; });

    click(root, '[data-testid="submit-translation"]');
    await flush();
    expect(asked.length).toBe(1);
    expect(submitted).toEqual([]);

    answer = true;
    click(root, '[data-testid="submit-translation"]');
    await flush();
    expect(asked.length).toBe(2);
    expect(submitted).toEqual([[]]);
    const banner = root.querySelector('[data-testid="verdict"]')!;
    expect(banner.getAttribute("data-valid")).toBe("false");
    expect(banner.textContent).toContain("goal is not reached");
  });

  it("describes a failing step by its position", async () => {
    const submitted: string[][] = [];
    const root = await mountTranslate(submitted, { valid: false, failure_step: 1 });
    click(root, `[data-testid="available"] li[data-action-id="(pickup a)"] .add-step`);
    click(root, '[data-testid="submit-translation"]');
    await flush();
    const banner = root.querySelector('[data-testid="verdict"]')!;
    expect(banner.getAttribute("data-failure-step")).toBe("1");
    expect(banner.textContent).toContain("Step 2 cannot be carried out");
  });
});

describe("workload questionnaire", () => {
  async function mountTlx(
    posted: number[][],
    confirmFn: (m: string) => boolean,
  ): Promise<{ root: HTMLElement; app: App }> {
    const client = fakeClient({
      getInstance: async () => { throw new ApiError(409, "study phases complete"); },
      submitTlx: async (_sid: string, scales: number[]) => {
        posted.push(scales);
        return { load: scales.reduce((a, b) => a + b, 0) / scales.length };
      },
      endSession: async () => ({ ok: true }),
    });
    const root = mount();
    const app = new App(root, { client, storage: seededStorage("unassisted"), confirmFn });
    await app.start();
    return { root, app };
  }

  it("renders six sliders defaulting to 50 and confirms untouched submits", async () => {
    const posted: number[][] = [];
    const asked: string[] = [];
    const { root } = await mountTlx(posted, (m) => { asked.push(m); return true; });

    const sliders = root.querySelectorAll('input[type="range"]');
    expect(sliders.length).toBe(6);
    expect(TLX_SCALES.map((s) => s.key)).toEqual(
      ["mental", "physical", "temporal", "performance", "effort", "frustration"],
    );
    for (const s of sliders) expect((s as HTMLInputElement).value).toBe("50");

    click(root, '[data-testid="submit-tlx"]');
    await flush();
    expect(asked.length).toBe(1);
    expect(posted).toEqual([[50, 50, 50, 50, 50, 50]]);
    expect(root.textContent).toContain("Thank you");
  });

  it("posts moved slider values without any confirmation", async () => {
    const posted: number[][] = [];
    const { root } = await mountTlx(posted, () => { throw new Error("unexpected dialog"); });

    const values = [5, 15, 25, 60, 75, 95];
    TLX_SCALES.forEach((scale, i) => {
      const slider = root.querySelector(`[data-testid="tlx-${scale.key}"]`) as HTMLInputElement;
      slider.value = String(values[i]);
      slider.dispatchEvent(new Event("input"));
    });
    click(root, '[data-testid="submit-tlx"]');
    await flush();
    expect(posted).toEqual([values]);
  });

  it("keeps a moved-then-restored slider counted as touched", async () => {
    const posted: number[][] = [];
    const { root } = await mountTlx(posted, () => { throw new Error("unexpected dialog"); });
    for (const scale of TLX_SCALES) {
      const slider = root.querySelector(`[data-testid="tlx-${scale.key}"]`) as HTMLInputElement;
      slider.value = "51";
      slider.dispatchEvent(new Event("input"));
      slider.value = "50";
      slider.dispatchEvent(new Event("input"));
    }
    click(root, '[data-testid="submit-tlx"]');
    await flush();
    expect(posted).toEqual([[50, 50, 50, 50, 50, 50]]);
  });

  it("skips straight to the closing screen when ratings were already sent", async () => {
    window.sessionStorage.clear();
    const state = newState("tok", "unassisted");
    state.tlxSubmitted = true;
    saveState(window.sessionStorage, state);
    const client = fakeClient({
      getInstance: async () => { throw new ApiError(409, "study phases complete"); },
      endSession: async () => ({ ok: true }),
    });
    const root = mount();
    await new App(root, { client, storage: window.sessionStorage }).start();
    expect(root.querySelector('[data-testid="submit-tlx"]')).toBeNull();
    expect(root.querySelector('[data-testid="finish"]')).not.toBeNull();
  });
});

describe("verdict wording", () => {
  it("covers the three outcome shapes", () => {
    expect(verdictMessage({ valid: true, failure_step: null }))
      .toContain("achieves the goal");
    expect(verdictMessage({ valid: false, failure_step: 0 }))
      .toBe("Step 1 cannot be carried out at that point in the plan.");
    expect(verdictMessage({ valid: false, failure_step: null }))
      .toContain("goal is not reached");
  });
});
