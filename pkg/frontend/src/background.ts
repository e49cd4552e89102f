/** MV3 service worker: adapts browser events onto the SessionRecorder.
 *
 * Recording is explicit: the options page sends start/stop/download
 * messages. Export is download-only; the extension holds no network
 * permissions, so events cannot leave the machine any other way.
 */

import { randomSalt } from "./hashing.js";
import { SessionRecorder } from "./recorder.js";
import type { BehaviorLabel } from "./types.js";
import { validateEvents } from "./validate.js";

let recorder: SessionRecorder | undefined;

async function stableUserId(): Promise<string> {
  const stored = await chrome.storage.local.get("user_id");
  if (typeof stored.user_id === "string") {
    return stored.user_id;
  }
  const id = `u-${randomSalt(4)}`;
  await chrome.storage.local.set({ user_id: id });
  return id;
}

async function startRecording(label?: BehaviorLabel, hashUrls?: boolean): Promise<string> {
  const sessionId = `session-${Date.now()}`;
  recorder = new SessionRecorder({
    sessionId,
    userId: await stableUserId(),
    label,
    hashUrls,
    salt: hashUrls ? randomSalt() : undefined,
  });
  const [active] = await chrome.tabs.query({ active: true, lastFocusedWindow: true });
  if (active?.id !== undefined) {
    recorder.tabActivated(active.id);
    const url = active.url ?? active.pendingUrl;
    if (url) {
      recorder.navigationCommitted(active.id, url, "other", []);
    }
  }
  return sessionId;
}

async function downloadJsonl(): Promise<void> {
  if (!recorder) {
    throw new Error("no recording to download");
  }
  const events = recorder.stop();
  const problems = validateEvents(events);
  if (problems.length > 0) {
    throw new Error(`refusing to export an invalid log: ${problems[0]}`);
  }
  const jsonl = await recorder.toJsonl();
  const url = `data:application/jsonl;base64,${btoa(unescape(encodeURIComponent(jsonl)))}`;
  await chrome.downloads.download({
    url,
    filename: `clickstream-${Date.now()}.jsonl`,
    saveAs: true,
  });
}

chrome.webNavigation.onCommitted.addListener((details) => {
  if (details.frameId !== 0 || !recorder) {
    return;
  }
  recorder.navigationCommitted(
    details.tabId,
    details.url,
    details.transitionType,
    details.transitionQualifiers,
  );
});

chrome.tabs.onCreated.addListener((tab) => {
  if (!recorder || tab.id === undefined) {
    return;
  }
  recorder.tabCreated(tab.id, tab.openerTabId, tab.pendingUrl ?? tab.url);
});

chrome.tabs.onActivated.addListener((info) => {
  recorder?.tabActivated(info.tabId);
});

chrome.tabs.onRemoved.addListener((tabId) => {
  recorder?.tabRemoved(tabId);
});

chrome.windows.onFocusChanged.addListener((windowId) => {
  if (!recorder) {
    return;
  }
  if (windowId === chrome.windows.WINDOW_ID_NONE) {
    recorder.windowFocusChanged(false);
  } else {
    void chrome.tabs
      .query({ active: true, lastFocusedWindow: true })
      .then(([tab]) => recorder?.windowFocusChanged(true, tab?.id));
  }
});

chrome.runtime.onMessage.addListener((message, _sender, sendResponse) => {
  const respond = (payload: Record<string, unknown>) => sendResponse(payload);
  (async () => {
    try {
      switch (message?.type) {
        case "start": {
          const sessionId = await startRecording(message.label, message.hashUrls);
          respond({ ok: true, sessionId });
          break;
        }
        case "stop": {
          const events = recorder?.stop() ?? [];
          respond({ ok: true, events: events.length, warnings: recorder?.warnings ?? [] });
          break;
        }
        case "download": {
          await downloadJsonl();
          respond({ ok: true });
          break;
        }
        case "status": {
          respond({
            ok: true,
            recording: recorder !== undefined && !recorder.isStopped,
            events: recorder?.eventCount ?? 0,
            warnings: recorder?.warnings ?? [],
          });
          break;
        }
        default:
          respond({ ok: false, error: `unknown message ${message?.type}` });
      }
    } catch (err) {
      respond({ ok: false, error: String(err) });
    }
  })();
  return true; // async response
});
