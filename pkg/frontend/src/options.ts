/** Options/control page: task label, privacy mode, start/stop/export. */

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const labelSelect = el<HTMLSelectElement>("label");
const hashCheckbox = el<HTMLInputElement>("hash");
const startButton = el<HTMLButtonElement>("start");
const stopButton = el<HTMLButtonElement>("stop");
const downloadButton = el<HTMLButtonElement>("download");
const statusLine = el<HTMLParagraphElement>("status");
const warningsList = el<HTMLUListElement>("warnings");

function showStatus(text: string): void {
  statusLine.textContent = text;
}

function showWarnings(warnings: string[]): void {
  warningsList.replaceChildren(
    ...warnings.map((w) => {
      const li = document.createElement("li");
      li.textContent = w;
      return li;
    }),
  );
}

async function send(message: Record<string, unknown>): Promise<any> {
  const response: any = await chrome.runtime.sendMessage(message);
  if (!response?.ok) {
    showStatus(`error: ${response?.error ?? "no response"}`);
    throw new Error(String(response?.error));
  }
  return response;
}

startButton.addEventListener("click", async () => {
  const label = labelSelect.value || undefined;
  const response = await send({ type: "start", label, hashUrls: hashCheckbox.checked });
  showStatus(`recording ${response.sessionId}`);
});

stopButton.addEventListener("click", async () => {
  const response = await send({ type: "stop" });
  showStatus(`stopped after ${response.events} events`);
  showWarnings(response.warnings ?? []);
});

downloadButton.addEventListener("click", async () => {
  await send({ type: "download" });
  showStatus("export offered for download");
});

void send({ type: "status" }).then((response) => {
  showStatus(
    response.recording
      ? `recording in progress (${response.events} events)`
      : "idle",
  );
  showWarnings(response.warnings ?? []);
});
