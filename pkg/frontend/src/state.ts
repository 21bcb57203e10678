/**
 * Session view state and its pure transitions.
 *
 * The view is a function of this state alone: the transcript, the goal
 * checklist, the latest trace panel, and the rating form all re-render from
 * it. The UI computes no metrics — checklist ticks are a client-side
 * convenience mirror, and the grounded-success verdict shown after rating is
 * whatever the server returned, untouched.
 */

import type { Goal, MessageReply, RatingReply, TurnTrace } from "./api.js";

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

export type Bubble =
  | { kind: "user"; text: string }
  | { kind: "system"; text: string }
  | { kind: "pending"; text: string }
  | { kind: "error"; text: string; detail: string };

export interface ChecklistItem {
  label: string; // "slot = value" for constraints, "slot?" for requests
  slot: string;
  value: string | null; // null for requested slots
  covered: boolean;
}

export interface RatingFormState {
  enabled: boolean; // only after >= 1 completed exchange
  submitted: boolean; // locks the form (mirrors the server's 409)
  verdict: RatingReply | null; // server's verdict, displayed unmodified
}

export interface SessionView {
  sessionId: string;
  goal: Goal | null;
  checklist: ChecklistItem[];
  transcript: Bubble[];
  trace: TurnTrace | null;
  exchanges: number;
  rating: RatingFormState;
  banner: string | null; // dismissible error banner
}

// ---------------------------------------------------------------------------
// Transitions
// ---------------------------------------------------------------------------

export function newSessionView(sessionId: string, goal: Goal | null): SessionView {
  return {
    sessionId,
    goal,
    checklist: buildChecklist(goal),
    transcript: [],
    trace: null,
    exchanges: 0,
    rating: { enabled: false, submitted: false, verdict: null },
    banner: null,
  };
}

function buildChecklist(goal: Goal | null): ChecklistItem[] {
  if (!goal) return [];
  const constraints: ChecklistItem[] = goal.informable.map(([slot, value]) => ({
    label: `${slot} = ${value}`,
    slot,
    value,
    covered: false,
  }));
  const requests: ChecklistItem[] = goal.requested.map((slot) => ({
    label: `${slot}?`,
    slot,
    value: null,
    covered: false,
  }));
  return [...constraints, ...requests];
}

/** Optimistic user bubble while the request is in flight. */
export function withPendingMessage(view: SessionView, text: string): SessionView {
  return { ...view, transcript: [...view.transcript, { kind: "pending", text }] };
}

/** Reconcile the pending bubble with the service reply. */
export function withReply(view: SessionView, text: string, reply: MessageReply): SessionView {
  const transcript = dropPending(view.transcript);
  transcript.push({ kind: "user", text });
  transcript.push({ kind: "system", text: reply.response });
  const next: SessionView = {
    ...view,
    transcript,
    trace: reply.trace,
    exchanges: view.exchanges + 1,
    banner: null,
  };
  next.checklist = updateChecklist(next);
  next.rating = { ...view.rating, enabled: next.exchanges >= 1 && !view.rating.submitted };
  return next;
}

/** Show the failure inline where the pending bubble was. */
export function withMessageError(view: SessionView, text: string, detail: string): SessionView {
  const transcript = dropPending(view.transcript);
  transcript.push({ kind: "error", text, detail });
  return { ...view, transcript };
}

export function withBanner(view: SessionView, banner: string): SessionView {
  return { ...view, banner };
}

export function withRatingVerdict(view: SessionView, verdict: RatingReply): SessionView {
  return { ...view, rating: { enabled: false, submitted: true, verdict } };
}

/** A 409 means some earlier submission won; lock the form without a verdict. */
export function withRatingLocked(view: SessionView): SessionView {
  return { ...view, rating: { ...view.rating, enabled: false, submitted: true } };
}

function dropPending(transcript: Bubble[]): Bubble[] {
  return transcript.filter((b) => b.kind !== "pending");
}

// ---------------------------------------------------------------------------
// Checklist coverage (client-side mirror only; the server's grounding check
// is authoritative)
// ---------------------------------------------------------------------------

function updateChecklist(view: SessionView): ChecklistItem[] {
  const systemText = view.transcript
    .filter((b) => b.kind === "system")
    .map((b) => b.text.toLowerCase())
    .join(" ");
  const informedSlots = view.trace ? slotsInformedByAction(view.trace.action) : new Set<string>();
  return view.checklist.map((item) => {
    if (item.covered) return item;
    if (item.value !== null) {
      // constraint: tick once its value shows up in any system message
      return systemText.includes(item.value.toLowerCase()) ? { ...item, covered: true } : item;
    }
    // requested slot: tick once a system action informs it
    return informedSlots.has(item.slot) ? { ...item, covered: true } : item;
  });
}

/** Parse slot names out of an action rendering like "inform(phone=[value_phone])". */
export function slotsInformedByAction(action: string): Set<string> {
  const slots = new Set<string>();
  const open = action.indexOf("(");
  const close = action.lastIndexOf(")");
  if (open < 0 || close <= open) return slots;
  for (const arg of action.slice(open + 1, close).split(",")) {
    const name = arg.split("=")[0]?.trim();
    if (name) slots.add(name);
  }
  return slots;
}

// ---------------------------------------------------------------------------
// Guards used by the form controls
// ---------------------------------------------------------------------------

export function canSend(view: SessionView, text: string): boolean {
  return text.trim().length > 0 && !view.transcript.some((b) => b.kind === "pending");
}

export function validScore(value: number): boolean {
  return Number.isInteger(value) && value >= 1 && value <= 5;
}

export function canSubmitRating(
  view: SessionView,
  understanding: number,
  appropriateness: number,
): boolean {
  return (
    view.rating.enabled &&
    !view.rating.submitted &&
    validScore(understanding) &&
    validScore(appropriateness)
  );
}
