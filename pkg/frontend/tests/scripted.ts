/** The scripted browsing session used across the test suite:
 * two tabs, one back navigation, five distinct pages.
 *
 * tab 100: home -> list -> (child opens) -> back to list -> item2
 *          -> back-button to list -> checkout
 * tab 201: item1, opened from the list page and focused briefly.
 */

import { SessionRecorder } from "../src/recorder.js";
import type { RecorderOptions } from "../src/types.js";

export const PAGES = {
  home: "https://shop.example/",
  list: "https://shop.example/list",
  item1: "https://shop.example/item1",
  item2: "https://shop.example/item2",
  checkout: "https://shop.example/checkout",
};

export function scriptedSession(
  overrides: Partial<RecorderOptions> = {},
): SessionRecorder {
  const clock = { t: 1_000_000 };
  const recorder = new SessionRecorder({
    sessionId: "scripted-1",
    userId: "tester",
    label: "TRG",
    now: () => clock.t,
    ...overrides,
  });
  const step = (ms: number) => {
    clock.t += ms;
  };

  recorder.tabActivated(100);
  step(500);
  recorder.navigationCommitted(100, PAGES.home, "typed");
  step(3000);
  recorder.navigationCommitted(100, PAGES.list, "link");
  step(4000);
  recorder.tabCreated(201, 100, PAGES.item1);
  step(100);
  recorder.tabActivated(201);
  step(2500);
  recorder.tabActivated(100);
  step(2000);
  recorder.navigationCommitted(100, PAGES.item2, "link");
  step(3000);
  recorder.navigationCommitted(100, PAGES.list, "link", ["forward_back"]);
  step(1500);
  recorder.navigationCommitted(100, PAGES.checkout, "link");
  step(2000);
  return recorder;
}
