/**
 * DOM rendering: the whole view re-renders from a SessionView value.
 */

import type { SessionView } from "./state.js";

export interface Handlers {
  onSend(text: string): void;
  onSubmitRating(claimed: boolean, understanding: number, appropriateness: number): void;
  onDismissBanner(): void;
  onToggleDebug(): void;
}

let debugVisible = false;

export function toggleDebug(): boolean {
  debugVisible = !debugVisible;
  return debugVisible;
}

export function render(root: HTMLElement, view: SessionView | null, handlers: Handlers): void {
  root.replaceChildren();
  if (!view) {
    root.append(el("p", "status", "no session — is the service running?"));
    return;
  }

  if (view.banner) {
    const banner = el("div", "banner", view.banner);
    const dismiss = el("button", "banner-dismiss", "dismiss");
    dismiss.addEventListener("click", handlers.onDismissBanner);
    banner.append(dismiss);
    root.append(banner);
  }

  root.append(goalPanel(view));
  root.append(transcriptPanel(view));
  root.append(composer(view, handlers));
  root.append(ratingPanel(view, handlers));
  root.append(tracePanel(view, handlers));
}

// ---------------------------------------------------------------------------

function goalPanel(view: SessionView): HTMLElement {
  const panel = el("section", "panel goal");
  panel.append(el("h2", "", "your goal"));
  if (!view.goal) {
    panel.append(el("p", "dim", "free conversation (no assigned goal)"));
    return panel;
  }
  panel.append(el("p", "dim", `domain: ${view.goal.domain}`));
  const list = el("ul", "checklist");
  for (const item of view.checklist) {
    const li = el("li", item.covered ? "covered" : "open", `${item.covered ? "✓" : "•"} ${item.label}`);
    list.append(li);
  }
  panel.append(list);
  return panel;
}

function transcriptPanel(view: SessionView): HTMLElement {
  const panel = el("section", "panel transcript");
  for (const bubble of view.transcript) {
    if (bubble.kind === "error") {
      const div = el("div", "bubble error", bubble.text);
      div.append(el("div", "error-detail", bubble.detail));
      panel.append(div);
    } else {
      panel.append(el("div", `bubble ${bubble.kind}`, bubble.text));
    }
  }
  return panel;
}

function composer(view: SessionView, handlers: Handlers): HTMLElement {
  const form = el("form", "composer") as HTMLFormElement;
  const input = el("input", "") as HTMLInputElement;
  input.placeholder = "type a message…";
  const send = el("button", "", "send") as HTMLButtonElement;
  send.type = "submit";
  const sync = () => {
    send.disabled = input.value.trim().length === 0
      || view.transcript.some((b) => b.kind === "pending");
  };
  input.addEventListener("input", sync);
  sync();
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    if (!send.disabled) handlers.onSend(input.value);
  });
  form.append(input, send);
  return form;
}

function ratingPanel(view: SessionView, handlers: Handlers): HTMLElement {
  const panel = el("section", "panel rating");
  panel.append(el("h2", "", "rate this session"));
  const { rating } = view;

  if (rating.verdict) {
    const grounded = rating.verdict.success_w_g;
    panel.append(
      el("p", grounded ? "verdict ok" : "verdict", grounded ? "grounded ✓" : "not grounded"),
    );
  }
  if (rating.submitted) {
    panel.append(el("p", "dim", "already rated — thank you!"));
    return panel;
  }

  const form = el("form", "rating-form") as HTMLFormElement;
  const claimed = checkbox("task accomplished?");
  const understanding = slider("understanding");
  const appropriateness = slider("appropriateness");
  const submit = el("button", "", "submit rating") as HTMLButtonElement;
  submit.type = "submit";
  submit.disabled = !rating.enabled;
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    handlers.onSubmitRating(
      claimed.input.checked,
      Number(understanding.input.value),
      Number(appropriateness.input.value),
    );
  });
  form.append(claimed.wrap, understanding.wrap, appropriateness.wrap, submit);
  panel.append(form);
  return panel;
}

function tracePanel(view: SessionView, handlers: Handlers): HTMLElement {
  const panel = el("section", "panel trace");
  const toggle = el("button", "", debugVisible ? "hide debug trace" : "show debug trace");
  toggle.addEventListener("click", handlers.onToggleDebug);
  panel.append(toggle);
  if (debugVisible && view.trace) {
    const dl = el("dl", "trace-fields");
    const rows: [string, string][] = [
      ["belief", view.trace.belief ?? "(none)"],
      ["db", view.trace.db ?? "(none)"],
      ["action", view.trace.action],
      ["delexicalized", view.trace.delex_response],
    ];
    for (const [k, v] of rows) {
      dl.append(el("dt", "", k), el("dd", "", v));
    }
    panel.append(dl);
  }
  return panel;
}

// ---------------------------------------------------------------------------

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function checkbox(label: string): { wrap: HTMLElement; input: HTMLInputElement } {
  const wrap = el("label", "field");
  const input = el("input", "") as HTMLInputElement;
  input.type = "checkbox";
  wrap.append(input, el("span", "", label));
  return { wrap, input };
}

function slider(label: string): { wrap: HTMLElement; input: HTMLInputElement } {
  const wrap = el("label", "field");
  const input = el("input", "") as HTMLInputElement;
  input.type = "range";
  input.min = "1";
  input.max = "5";
  input.step = "1";
  input.value = "3";
  wrap.append(el("span", "", `${label} (1–5)`), input);
  return { wrap, input };
}
