/** Minimal ambient typings for the extension API surface this project
 * touches. Kept local instead of depending on the full @types/chrome
 * package so the build documents exactly which APIs are used. */

declare namespace chrome {
  namespace runtime {
    interface MessageSender {
      id?: string;
    }
    function sendMessage(message: unknown): Promise<unknown>;
    const onMessage: {
      addListener(
        cb: (
          message: any,
          sender: MessageSender,
          sendResponse: (response?: unknown) => void,
        ) => boolean | void,
      ): void;
    };
  }

  namespace storage {
    interface StorageArea {
      get(keys?: string | string[] | null): Promise<Record<string, any>>;
      set(items: Record<string, unknown>): Promise<void>;
    }
    const local: StorageArea;
  }

  namespace tabs {
    interface Tab {
      id?: number;
      openerTabId?: number;
      url?: string;
      pendingUrl?: string;
      active?: boolean;
    }
    function query(info: { active: boolean; lastFocusedWindow: boolean }): Promise<Tab[]>;
    const onCreated: { addListener(cb: (tab: Tab) => void): void };
    const onActivated: {
      addListener(cb: (info: { tabId: number; windowId: number }) => void): void;
    };
    const onRemoved: {
      addListener(cb: (tabId: number, info: unknown) => void): void;
    };
  }

  namespace webNavigation {
    interface CommittedDetails {
      tabId: number;
      frameId: number;
      url: string;
      transitionType: string;
      transitionQualifiers: string[];
    }
    const onCommitted: { addListener(cb: (details: CommittedDetails) => void): void };
  }

  namespace windows {
    const WINDOW_ID_NONE: number;
    const onFocusChanged: { addListener(cb: (windowId: number) => void): void };
  }

  namespace downloads {
    function download(options: {
      url: string;
      filename?: string;
      saveAs?: boolean;
    }): Promise<number>;
  }
}
