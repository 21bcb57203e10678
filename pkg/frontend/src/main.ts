/**
 * Wiring: one active session per tab, re-render on every state change.
 *
 * The service base URL is the single runtime config value: set
 * ``window.SCHEMABOT_BASE_URL`` before loading this module, or rely on the
 * default (same host, port 8080).
 */

import { ApiClient, ServiceError } from "./api.js";
import { render, toggleDebug } from "./render.js";
import {
  SessionView,
  newSessionView,
  withBanner,
  withMessageError,
  withPendingMessage,
  withRatingLocked,
  withRatingVerdict,
  withReply,
} from "./state.js";

declare global {
  interface Window {
    SCHEMABOT_BASE_URL?: string;
  }
}

const baseUrl =
  window.SCHEMABOT_BASE_URL ?? `${location.protocol}//${location.hostname}:8080`;
const api = new ApiClient(baseUrl);
const root = document.getElementById("app") as HTMLElement;

let view: SessionView | null = null;

function update(next: SessionView | null): void {
  view = next;
  render(root, view, handlers);
}

const handlers = {
  async onSend(text: string) {
    if (!view) return;
    update(withPendingMessage(view, text));
    try {
      const reply = await api.sendMessage(view.sessionId, text);
      update(withReply(view, text, reply));
    } catch (err) {
      const detail = err instanceof ServiceError ? err.message : String(err);
      update(withMessageError(view, text, detail));
    }
  },

  async onSubmitRating(claimed: boolean, understanding: number, appropriateness: number) {
    if (!view) return;
    try {
      const verdict = await api.submitRating(view.sessionId, {
        success_claimed: claimed,
        understanding,
        appropriateness,
      });
      update(withRatingVerdict(view, verdict));
    } catch (err) {
      if (err instanceof ServiceError && err.info.status === 409) {
        update(withRatingLocked(view));
      } else {
        const detail = err instanceof ServiceError ? err.message : String(err);
        update(withBanner(view, detail));
      }
    }
  },

  onDismissBanner() {
    if (view) update({ ...view, banner: null });
  },

  onToggleDebug() {
    toggleDebug();
    update(view);
  },
};

async function start(): Promise<void> {
  const params = new URLSearchParams(location.search);
  try {
    const created = await api.createSession(params.get("goal") ?? undefined);
    update(newSessionView(created.session_id, created.goal));
  } catch (err) {
    const detail = err instanceof ServiceError ? err.message : String(err);
    root.replaceChildren();
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.textContent = `could not start a session — ${detail}`;
    root.append(banner);
  }
}

void start();
