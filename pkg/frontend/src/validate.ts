/** Pre-export validation mirroring the analysis toolkit's ingest rules.
 *
 * The recorder should never produce an invalid log; this check runs
 * before download so a violation surfaces in the UI instead of being
 * discovered at analysis time.
 */

import type { SessionEvent } from "./types.js";

const KINDS = new Set(["nav", "tab_open", "tab_switch", "tab_close", "focus", "blur"]);
const TRANSITIONS = new Set(["link", "typed", "back_forward", "reload", "other"]);
const URL_KINDS = new Set(["nav", "tab_open"]);

export function validateEvents(events: readonly SessionEvent[]): string[] {
  const problems: string[] = [];
  const seenTabs = new Set<number>();
  let lastTs = 0;
  let label: string | undefined;

  events.forEach((e, i) => {
    const at = `event ${i}`;
    if (!Number.isInteger(e.ts) || e.ts <= 0) {
      problems.push(`${at}: ts must be a positive integer`);
    }
    if (e.ts < lastTs) {
      problems.push(`${at}: ts went backwards`);
    }
    lastTs = Math.max(lastTs, e.ts);
    if (!e.session_id || !e.user_id) {
      problems.push(`${at}: session_id and user_id required`);
    }
    if (!Number.isInteger(e.tab) || e.tab < 0) {
      problems.push(`${at}: tab must be a non-negative integer`);
    }
    if (!KINDS.has(e.kind)) {
      problems.push(`${at}: unknown kind ${e.kind}`);
    }
    if (URL_KINDS.has(e.kind) !== (e.url !== undefined)) {
      problems.push(`${at}: url must be present exactly for nav/tab_open`);
    }
    if (e.kind === "nav" && (e.transition === undefined || !TRANSITIONS.has(e.transition))) {
      problems.push(`${at}: nav requires a valid transition`);
    }
    if (e.opener_tab !== undefined) {
      if (e.kind !== "tab_open") {
        problems.push(`${at}: opener_tab only valid on tab_open`);
      } else if (!seenTabs.has(e.opener_tab)) {
        problems.push(`${at}: opener_tab ${e.opener_tab} not previously seen`);
      }
    }
    if (e.label !== undefined) {
      if (label !== undefined && label !== e.label) {
        problems.push(`${at}: label changed from ${label} to ${e.label}`);
      }
      label = e.label;
    }
    seenTabs.add(e.tab);
  });
  return problems;
}
