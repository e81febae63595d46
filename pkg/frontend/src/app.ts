// Single-page study flow. The server is the source of truth for the phase
// machine: every transition happens by acknowledged request, and a page
// refresh resumes from whatever the server reports.

import {
  ActionOption,
  ApiError,
  InstanceView,
  ServiceClient,
  TranslationVerdict,
} from "./api";
import {
  UiSessionState,
  newState,
  restoreState,
  saveState,
} from "./state";

export interface AppDeps {
  client: ServiceClient;
  storage: Storage;
  // injectable so tests can script the dialogs
  confirmFn?: (message: string) => boolean;
}

export const TLX_SCALES = [
  { key: "mental", label: "Mental demand", caption: "How mentally demanding was the task?" },
  { key: "physical", label: "Physical demand", caption: "How physically demanding was the task?" },
  { key: "temporal", label: "Temporal demand", caption: "How hurried or rushed was the pace of the task?" },
  { key: "performance", label: "Performance", caption: "How successful were you in accomplishing what you were asked to do?" },
  { key: "effort", label: "Effort", caption: "How hard did you have to work to reach your level of performance?" },
  { key: "frustration", label: "Frustration", caption: "How insecure, discouraged, irritated, stressed and annoyed were you?" },
] as const;

export function verdictMessage(verdict: { valid: boolean; failure_step: number | null }): string {
  if (verdict.valid) {
    return "Success: your plan achieves the goal.";
  }
  if (verdict.failure_step !== null) {
    return `Step ${verdict.failure_step + 1} cannot be carried out at that point in the plan.`;
  }
  return "Every step can be carried out, but the goal is not reached.";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function button(label: string, onClick: () => void, attrs: Record<string, string> = {}): HTMLButtonElement {
  const b = el("button", { type: "button", ...attrs }, label);
  b.addEventListener("click", onClick);
  return b;
}

export class App {
  private root: HTMLElement;
  private client: ServiceClient;
  private storage: Storage;
  private confirmFn: (message: string) => boolean;
  state: UiSessionState | null = null;

  constructor(root: HTMLElement, deps: AppDeps) {
    this.root = root;
    this.client = deps.client;
    this.storage = deps.storage;
    this.confirmFn = deps.confirmFn ?? ((message) => window.confirm(message));
  }

  async start(): Promise<void> {
    this.state = restoreState(this.storage);
    if (this.state === null) {
      this.renderIntro();
      return;
    }
    await this.refresh();
  }

  private save(): void {
    if (this.state) saveState(this.storage, this.state);
  }

  private clearRoot(): HTMLElement {
    this.root.textContent = "";
    const main = el("main", { class: "study" });
    this.root.appendChild(main);
    return main;
  }

  private showRetry(message: string, retry: () => Promise<void>): void {
    const main = this.clearRoot();
    const banner = el("div", { class: "retry-banner", "data-testid": "retry-banner" });
    banner.appendChild(el("p", {}, message));
    banner.appendChild(button("Retry", () => { void retry(); }));
    main.appendChild(banner);
  }

  private async guarded(operation: () => Promise<void>): Promise<void> {
    try {
      await operation();
    } catch (err) {
      if (err instanceof ApiError) throw err;
      // fetch rejects with a TypeError when the server is unreachable
      this.showRetry("The study server is not responding.", () => this.guarded(operation));
    }
  }

  // Fetch the server's view of the session and draw the matching screen.
  async refresh(): Promise<void> {
    await this.guarded(async () => {
      const state = this.state!;
      let instance: InstanceView;
      try {
        instance = await this.client.getInstance(state.token);
      } catch (err) {
        if (err instanceof ApiError && err.status === 409) {
          // the study phases are complete; only the workload form remains
          state.phase = "done";
          state.subPhase = null;
          this.save();
          if (state.tlxSubmitted) this.renderDone();
          else this.renderTlx();
          return;
        }
        throw err;
      }
      state.phase = instance.phase;
      state.subPhase = instance.sub_phase;
      this.save();
      if (instance.sub_phase === "translate") {
        const listing = await this.client.getActions(state.token);
        this.renderTranslate(instance, listing.actions);
      } else {
        await this.renderWrite(instance);
      }
    });
  }

  private renderIntro(): void {
    const main = this.clearRoot();
    main.appendChild(el("h1", {}, "Plan authoring study"));
    main.appendChild(el("p", {}, (
      "You will work through a practice round and one task. In each, first " +
      "describe your plan in your own words, then translate it into the " +
      "available actions. A short workload questionnaire follows at the end."
    )));
    main.appendChild(button("Begin", () => {
      void this.guarded(async () => {
        const session = await this.client.createSession();
        this.state = newState(session.session_id, session.condition);
        this.save();
        await this.refresh();
      });
    }, { "data-testid": "begin" }));
  }

  private phaseHeading(instance: InstanceView): string {
    return instance.phase === "example" ? "Practice round" : "Your task";
  }

  private async renderWrite(instance: InstanceView): Promise<void> {
    const state = this.state!;
    const main = this.clearRoot();
    main.appendChild(el("h1", {}, this.phaseHeading(instance)));

    const problem = el("section", { class: "problem-panel" });
    problem.appendChild(el("h2", {}, "The situation"));
    problem.appendChild(el("p", { "data-testid": "description" }, instance.description));
    if (instance.walkthrough) {
      const example = el("aside", { class: "walkthrough", "data-testid": "walkthrough" });
      example.appendChild(el("h3", {}, "Worked example solution"));
      example.appendChild(el("pre", {}, instance.walkthrough));
      problem.appendChild(example);
    }
    main.appendChild(problem);

    const authoring = el("section", { class: "authoring-panel" });
    authoring.appendChild(el("h2", {}, "Write your plan"));
    authoring.appendChild(el("p", {}, "Describe, step by step and in your own words, how to reach the goal."));
    const editor = el("textarea", { rows: "10", "data-testid": "draft" });
    editor.value = state.draftText;
    editor.addEventListener("input", () => {
      state.draftText = editor.value;
      this.save();
    });
    authoring.appendChild(editor);

    if (state.condition === "assisted") {
      await this.appendSuggestionPanel(authoring);
    }

    authoring.appendChild(button("Continue to translation", () => {
      void this.guarded(async () => {
        await this.client.submitFreeform(state.token, editor.value);
        state.draftText = "";
        this.save();
        await this.refresh();
      });
    }, { "data-testid": "submit-write" }));
    main.appendChild(authoring);
  }

  private async appendSuggestionPanel(parent: HTMLElement): Promise<void> {
    const state = this.state!;
    let suggestion;
    try {
      suggestion = await this.client.getSuggestion(state.token);
    } catch (err) {
      if (err instanceof ApiError) return; // none available for this instance
      throw err;
    }
    const panel = el("aside", { class: "suggestion-panel", "data-testid": "suggestion-panel" });
    panel.appendChild(el("h3", {}, "A computer-generated suggestion"));
    panel.appendChild(el("pre", { "data-testid": "suggestion-text" }, suggestion.suggestion));
    panel.appendChild(el("p", {}, "Was this suggestion correct?"));
    const note = el("p", { class: "feedback-note" }, "");
    const sendFeedback = (correct: boolean) => {
      void this.guarded(async () => {
        await this.client.sendSuggestionFeedback(state.token, correct);
        for (const b of panel.querySelectorAll("button")) b.disabled = true;
        note.textContent = "Thank you, your rating was recorded.";
      });
    };
    panel.appendChild(button("Correct", () => sendFeedback(true), { "data-testid": "feedback-correct" }));
    panel.appendChild(button("Incorrect", () => sendFeedback(false), { "data-testid": "feedback-incorrect" }));
    panel.appendChild(note);
    parent.appendChild(panel);
  }

  private renderTranslate(instance: InstanceView, actions: ActionOption[]): void {
    const state = this.state!;
    const main = this.clearRoot();
    main.appendChild(el("h1", {}, this.phaseHeading(instance)));

    const problem = el("section", { class: "problem-panel" });
    problem.appendChild(el("h2", {}, "The situation"));
    problem.appendChild(el("p", { "data-testid": "description" }, instance.description));
    main.appendChild(problem);

    const byId = new Map(actions.map((a) => [a.id, a.text]));
    const panel = el("section", { class: "translate-panel" });
    panel.appendChild(el("h2", {}, "Translate your plan"));
    panel.appendChild(el("p", {}, (
      "Build your plan as an ordered list by picking the closest available " +
      "action for each step you wrote."
    )));

    const chosen = el("ol", { class: "chosen-steps", "data-testid": "chosen" });
    const redraw = () => {
      chosen.textContent = "";
      state.selectedActionIds.forEach((id, index) => {
        const item = el("li", { "data-action-id": id });
        item.appendChild(el("span", {}, byId.get(id) ?? id));
        item.appendChild(button("Move up", () => {
          if (index === 0) return;
          const ids = state.selectedActionIds;
          [ids[index - 1], ids[index]] = [ids[index], ids[index - 1]];
          this.save();
          redraw();
        }, { class: "move-up" }));
        item.appendChild(button("Move down", () => {
          const ids = state.selectedActionIds;
          if (index === ids.length - 1) return;
          [ids[index], ids[index + 1]] = [ids[index + 1], ids[index]];
          this.save();
          redraw();
        }, { class: "move-down" }));
        item.appendChild(button("Remove", () => {
          state.selectedActionIds.splice(index, 1);
          this.save();
          redraw();
        }, { class: "remove-step" }));
        chosen.appendChild(item);
      });
    };
    redraw();
    panel.appendChild(el("h3", {}, "Your plan so far"));
    panel.appendChild(chosen);

    panel.appendChild(el("h3", {}, "Available actions"));
    const available = el("ul", { class: "available-actions", "data-testid": "available" });
    for (const action of actions) {
      const item = el("li", { "data-action-id": action.id });
      item.appendChild(el("span", {}, action.text));
      item.appendChild(button("Add", () => {
        state.selectedActionIds.push(action.id);
        this.save();
        redraw();
      }, { class: "add-step" }));
      available.appendChild(item);
    }
    panel.appendChild(available);

    const verdictSlot = el("div", { class: "verdict-slot" });
    panel.appendChild(verdictSlot);

    panel.appendChild(button("Submit plan", () => {
      if (state.selectedActionIds.length === 0) {
        const proceed = this.confirmFn(
          "You have not picked any actions. Submit an empty plan anyway?",
        );
        if (!proceed) return;
      }
      void this.guarded(async () => {
        const verdict = await this.client.submitTranslation(
          state.token, [...state.selectedActionIds],
        );
        state.selectedActionIds = [];
        this.save();
        this.showVerdict(verdictSlot, verdict);
      });
    }, { "data-testid": "submit-translation" }));
    main.appendChild(panel);
  }

  private showVerdict(slot: HTMLElement, verdict: TranslationVerdict): void {
    slot.textContent = "";
    const banner = el("div", {
      class: verdict.valid ? "verdict verdict-good" : "verdict verdict-bad",
      "data-testid": "verdict",
      "data-valid": String(verdict.valid),
      "data-failure-step": verdict.failure_step === null ? "" : String(verdict.failure_step),
    });
    banner.appendChild(el("p", {}, verdictMessage(verdict)));
    banner.appendChild(button("Continue", () => {
      const state = this.state!;
      state.phase = verdict.phase;
      state.subPhase = verdict.sub_phase;
      this.save();
      if (verdict.phase === "done") this.renderTlx();
      else void this.refresh();
    }, { "data-testid": "verdict-continue" }));
    slot.appendChild(banner);
  }

  renderTlx(): void {
    const state = this.state!;
    const main = this.clearRoot();
    main.appendChild(el("h1", {}, "Workload questionnaire"));
    main.appendChild(el("p", {}, (
      "Rate the task you just completed on each of the six scales below, " +
      "from 0 (very low) to 100 (very high)."
    )));
    const form = el("form", { class: "tlx-form" });
    const sliders: HTMLInputElement[] = [];
    const touched = new Set<number>();
    TLX_SCALES.forEach((scale, index) => {
      const row = el("div", { class: "tlx-row" });
      row.appendChild(el("label", { for: `tlx-${scale.key}` }, scale.label));
      row.appendChild(el("p", { class: "tlx-caption" }, scale.caption));
      const slider = el("input", {
        type: "range", min: "0", max: "100", value: "50",
        id: `tlx-${scale.key}`, "data-testid": `tlx-${scale.key}`,
      });
      const shown = el("span", { class: "tlx-value" }, "50");
      slider.addEventListener("input", () => {
        touched.add(index);
        shown.textContent = slider.value;
      });
      sliders.push(slider);
      row.appendChild(slider);
      row.appendChild(shown);
      form.appendChild(row);
    });
    form.appendChild(button("Submit ratings", () => {
      if (touched.size < TLX_SCALES.length) {
        const proceed = this.confirmFn(
          "Some scales were not adjusted. Submit them at the default value of 50?",
        );
        if (!proceed) return;
      }
      void this.guarded(async () => {
        await this.client.submitTlx(state.token, sliders.map((s) => Number(s.value)));
        state.tlxSubmitted = true;
        this.save();
        this.renderDone();
      });
    }, { "data-testid": "submit-tlx" }));
    main.appendChild(form);
  }

  renderDone(): void {
    const state = this.state!;
    const main = this.clearRoot();
    main.appendChild(el("h1", {}, "All done"));
    main.appendChild(el("p", {}, "Thank you for taking part in the study."));
    const finish = button("Finish", () => {
      void this.guarded(async () => {
        try {
          await this.client.endSession(state.token);
        } catch (err) {
          if (!(err instanceof ApiError)) throw err; // already ended is fine
        }
        finish.disabled = true;
        main.appendChild(el("p", { "data-testid": "closed" }, "You may now close this tab."));
      });
    }, { "data-testid": "finish" });
    main.appendChild(finish);
  }
}

export function mountApp(root: HTMLElement, deps: AppDeps): App {
  const app = new App(root, deps);
  void app.start();
  return app;
}
