/** Session recording: browser events in, canonical JSONL out.
 *
 * The recorder is plain state-machine logic with no browser API
 * dependencies; the background script adapts chrome.* listeners onto its
 * methods, and tests drive it directly. Browser tab ids are renumbered
 * to compact non-negative integers in order of first appearance, and
 * timestamps are clamped monotone so the exported log always satisfies
 * the ingest contract of the analysis toolkit.
 */

import { hashUrl } from "./hashing.js";
import type {
  RecorderOptions,
  SessionEvent,
  Transition,
} from "./types.js";

const WEB_SCHEMES = new Set(["http:", "https:"]);

function isWebUrl(url: string): boolean {
  try {
    return WEB_SCHEMES.has(new URL(url).protocol);
  } catch {
    return false;
  }
}

export function mapTransition(
  transitionType: string,
  qualifiers: readonly string[] = [],
): Transition {
  if (qualifiers.includes("forward_back")) {
    return "back_forward";
  }
  switch (transitionType) {
    case "link":
      return "link";
    case "typed":
      return "typed";
    case "reload":
      return "reload";
    default:
      return "other";
  }
}

export class SessionRecorder {
  private readonly events: SessionEvent[] = [];
  private readonly tabMap = new Map<number, number>();
  private readonly emittedTabs = new Set<number>();
  private readonly pendingOpener = new Map<number, number | undefined>();
  private lastTs = 0;
  private lastActive: number | undefined;
  private stopped = false;
  readonly warnings: string[] = [];

  constructor(private readonly opts: RecorderOptions) {
    if (opts.hashUrls && !opts.salt) {
      throw new Error("hashUrls requires a salt");
    }
  }

  get eventCount(): number {
    return this.events.length;
  }

  get isStopped(): boolean {
    return this.stopped;
  }

  private now(): number {
    const t = (this.opts.now ?? Date.now)();
    this.lastTs = Math.max(t, this.lastTs);
    return this.lastTs;
  }

  private localTab(browserTabId: number): number {
    let local = this.tabMap.get(browserTabId);
    if (local === undefined) {
      local = this.tabMap.size;
      this.tabMap.set(browserTabId, local);
    }
    return local;
  }

  private push(event: Omit<SessionEvent, "ts" | "session_id" | "user_id" | "label">): void {
    const full: SessionEvent = {
      ts: this.now(),
      session_id: this.opts.sessionId,
      user_id: this.opts.userId,
      ...event,
    };
    if (this.opts.label) {
      full.label = this.opts.label;
    }
    this.events.push(full);
    this.emittedTabs.add(event.tab);
  }

  private refuse(what: string): boolean {
    if (this.stopped) {
      this.warnings.push(`ignored ${what}: recording already stopped`);
      return true;
    }
    return false;
  }

  /** Main-frame navigation committed in a tab. */
  navigationCommitted(
    browserTabId: number,
    url: string,
    transitionType: string,
    qualifiers: readonly string[] = [],
  ): void {
    if (this.refuse(`navigation to ${url}`)) {
      return;
    }
    if (!isWebUrl(url)) {
      this.warnings.push(`skipped non-web navigation: ${url}`);
      return;
    }
    const tab = this.localTab(browserTabId);
    if (this.pendingOpener.has(browserTabId)) {
      const opener = this.pendingOpener.get(browserTabId);
      this.pendingOpener.delete(browserTabId);
      const openerLocal =
        opener !== undefined && this.tabMap.has(opener)
          ? this.tabMap.get(opener)
          : undefined;
      this.push({
        tab,
        kind: "tab_open",
        url,
        ...(openerLocal !== undefined && this.emittedTabs.has(openerLocal)
          ? { opener_tab: openerLocal }
          : {}),
      });
      return;
    }
    this.push({
      tab,
      kind: "nav",
      url,
      transition: mapTransition(transitionType, qualifiers),
    });
  }

  /** A tab was created, possibly by another tab and possibly URL-less. */
  tabCreated(browserTabId: number, openerTabId?: number, url?: string): void {
    if (this.refuse("tab creation")) {
      return;
    }
    if (url && isWebUrl(url)) {
      const tab = this.localTab(browserTabId);
      const openerLocal =
        openerTabId !== undefined && this.tabMap.has(openerTabId)
          ? this.tabMap.get(openerTabId)
          : undefined;
      this.push({
        tab,
        kind: "tab_open",
        url,
        ...(openerLocal !== undefined && this.emittedTabs.has(openerLocal)
          ? { opener_tab: openerLocal }
          : {}),
      });
    } else {
      // URL not committed yet; the first navigation becomes the tab_open
      this.pendingOpener.set(browserTabId, openerTabId);
    }
  }

  tabActivated(browserTabId: number): void {
    if (this.refuse("tab switch")) {
      return;
    }
    this.push({ tab: this.localTab(browserTabId), kind: "tab_switch" });
    this.lastActive = browserTabId;
  }

  tabRemoved(browserTabId: number): void {
    if (this.refuse("tab close")) {
      return;
    }
    if (!this.tabMap.has(browserTabId)) {
      this.warnings.push(`ignored close of unseen tab ${browserTabId}`);
      return;
    }
    this.push({ tab: this.tabMap.get(browserTabId)!, kind: "tab_close" });
    if (this.lastActive === browserTabId) {
      this.lastActive = undefined;
    }
  }

  windowFocusChanged(focused: boolean, activeBrowserTabId?: number): void {
    if (this.refuse("focus change")) {
      return;
    }
    if (focused) {
      const target = activeBrowserTabId ?? this.lastActive;
      if (target === undefined) {
        this.warnings.push("ignored focus: no known active tab");
        return;
      }
      this.push({ tab: this.localTab(target), kind: "focus" });
      this.lastActive = target;
    } else {
      const target = this.lastActive;
      if (target === undefined) {
        this.warnings.push("ignored blur: no known active tab");
        return;
      }
      this.push({ tab: this.localTab(target), kind: "blur" });
    }
  }

  /** Ends the recording with a final blur so the last visit closes. */
  stop(): SessionEvent[] {
    if (!this.stopped) {
      if (this.lastActive !== undefined || this.tabMap.size > 0) {
        const target = this.lastActive ?? [...this.tabMap.keys()][0];
        this.push({ tab: this.localTab(target), kind: "blur" });
      }
      this.stopped = true;
    }
    return [...this.events];
  }

  /** JSONL export; in hash mode a {"salt": ...} header line comes first. */
  async toJsonl(): Promise<string> {
    let events = this.events;
    let header = "";
    if (this.opts.hashUrls) {
      const salt = this.opts.salt!;
      header = JSON.stringify({ salt }) + "\n";
      events = await Promise.all(
        this.events.map(async (e) =>
          e.url === undefined ? e : { ...e, url: await hashUrl(e.url, salt) },
        ),
      );
    }
    return header + events.map((e) => JSON.stringify(e)).join("\n") + (events.length ? "\n" : "");
  }
}
