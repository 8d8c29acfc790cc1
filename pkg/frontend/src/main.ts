// Page bootstrap: role tabs, per-role transcript panes, input box, toasts.

import { GatewayClient, NotificationDoc, Role, ROLES } from "./api.js";
import { ChatViewModel, suggestedReply } from "./model.js";
import { renderMessage } from "./render.js";

const POLL_INTERVAL_MS = 2000;

interface Pane {
  model: ChatViewModel;
  container: HTMLElement;
}

export interface AppHandle {
  activate(role: Role): void;
  pane(role: Role): { model: ChatViewModel; container: HTMLElement };
  pollAll(): Promise<void>;
  stop(): void;
}

export function boot(doc: Document, baseUrl = ""): AppHandle {
  const client = new GatewayClient(baseUrl);
  const panes = new Map<Role, Pane>();
  let active: Role = "LoanOfficer";

  const roleBar = doc.getElementById("roles")!;
  const transcripts = doc.getElementById("transcripts")!;
  const input = doc.getElementById("input") as HTMLInputElement;
  const sendButton = doc.getElementById("send") as HTMLButtonElement;
  const toastArea = doc.getElementById("toasts")!;

  function paneFor(role: Role): Pane {
    let pane = panes.get(role);
    if (pane) return pane;
    const container = doc.createElement("div");
    container.className = "transcript";
    container.dataset.role = role;
    transcripts.appendChild(container);
    const model = new ChatViewModel(client, role);
    pane = { model, container };
    panes.set(role, pane);
    model.onChange(() => redraw(pane!));
    void model.start();
    return pane;
  }

  function redraw(pane: Pane): void {
    pane.container.textContent = "";
    for (const message of pane.model.messages) {
      const bubble = renderMessage(doc, message);
      if (message.failed) {
        const retry = doc.createElement("button");
        retry.className = "retry";
        retry.textContent = "Retry";
        retry.addEventListener("click", () => void pane.model.retry(message));
        bubble.appendChild(retry);
      }
      pane.container.appendChild(bubble);
    }
    sendButton.disabled = pane.model.pending;
    pane.container.scrollTop = pane.container.scrollHeight;
    drawToasts(pane.model);
  }

  function drawToasts(model: ChatViewModel): void {
    toastArea.textContent = "";
    for (const toast of model.toasts) {
      toastArea.appendChild(makeToast(model, toast));
    }
  }

  function makeToast(model: ChatViewModel, notification: NotificationDoc): HTMLElement {
    const el = doc.createElement("div");
    el.className = "toast";
    const text = doc.createElement("span");
    text.textContent = notification.text;
    el.appendChild(text);
    const reply = doc.createElement("button");
    reply.textContent = "Reply";
    reply.addEventListener("click", () => {
      input.value = suggestedReply(notification);
      model.dismissToast(notification.seq);
      input.focus();
    });
    el.appendChild(reply);
    const close = doc.createElement("button");
    close.textContent = "x";
    close.addEventListener("click", () => model.dismissToast(notification.seq));
    el.appendChild(close);
    return el;
  }

  function activate(role: Role): void {
    active = role;
    for (const [paneRole, pane] of panes) {
      pane.container.style.display = paneRole === role ? "block" : "none";
    }
    for (const button of Array.from(roleBar.querySelectorAll("button"))) {
      button.classList.toggle("active", button.dataset.role === role);
    }
    const pane = paneFor(role);
    pane.container.style.display = "block";
    redraw(pane);
  }

  for (const role of ROLES) {
    const button = doc.createElement("button");
    button.textContent = role;
    button.dataset.role = role;
    button.addEventListener("click", () => activate(role));
    roleBar.appendChild(button);
  }

  async function submit(): Promise<void> {
    const text = input.value;
    if (!text.trim()) return;
    const pane = paneFor(active);
    const accepted = await pane.model.send(text);
    if (accepted) input.value = "";
  }

  sendButton.addEventListener("click", () => void submit());
  input.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") void submit();
  });

  const timer = setInterval(() => {
    for (const pane of panes.values()) void pane.model.pollOnce();
  }, POLL_INTERVAL_MS);

  activate(active);

  return {
    activate,
    pane: (role: Role) => paneFor(role),
    pollAll: async () => {
      for (const pane of panes.values()) await pane.model.pollOnce();
    },
    stop: () => clearInterval(timer),
  };
}

declare global {
  interface Window {
    procbotBoot?: typeof boot;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.procbotBoot = boot;
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => boot(document));
  } else {
    boot(document);
  }
}
