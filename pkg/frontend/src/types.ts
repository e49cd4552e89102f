/** Wire types for the canonical JSONL session log. */

export type EventKind =
  | "nav"
  | "tab_open"
  | "tab_switch"
  | "tab_close"
  | "focus"
  | "blur";

export type Transition = "link" | "typed" | "back_forward" | "reload" | "other";

export type BehaviorLabel = "TRG" | "PUR" | "EXP";

export interface SessionEvent {
  ts: number;
  session_id: string;
  user_id: string;
  tab: number;
  kind: EventKind;
  url?: string;
  opener_tab?: number;
  transition?: Transition;
  label?: BehaviorLabel;
}

export interface RecorderOptions {
  sessionId: string;
  userId: string;
  label?: BehaviorLabel;
  /** Replace URLs with salted hashes on export. */
  hashUrls?: boolean;
  /** Per-recording salt; generated by the caller when hashing is on. */
  salt?: string;
  /** Clock injection for tests; defaults to Date.now. */
  now?: () => number;
}
