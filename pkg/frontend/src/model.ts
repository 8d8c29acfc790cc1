// Conversation state for one session. Holds the transcript, enforces a single
// in-flight message, and folds polled notifications in exactly once.

import {
  GatewayClient,
  NotificationDoc,
  OutgoingAttachment,
  PayloadDoc,
  Role,
  TurnViewDoc,
} from "./api.js";

export type Sender =
  | { kind: "user" }
  | { kind: "agent"; agentId: string }
  | { kind: "system" };

export interface ChatMessage {
  sender: Sender;
  text?: string;
  payload?: PayloadDoc;
  fallback?: boolean;
  failed?: boolean;
  attachments?: OutgoingAttachment[];
  notification?: boolean;
}

export type ModelListener = () => void;

export class ChatViewModel {
  sessionId: string | null = null;
  messages: ChatMessage[] = [];
  pending = false;
  toasts: NotificationDoc[] = [];
  private seenNotificationSeqs = new Set<number>();
  private lastSeq = 0;
  private listeners: ModelListener[] = [];

  constructor(
    private readonly client: GatewayClient,
    readonly role: Role,
  ) {}

  onChange(listener: ModelListener): void {
    this.listeners.push(listener);
  }

  private changed(): void {
    for (const listener of this.listeners) listener();
  }

  async start(): Promise<void> {
    this.sessionId = await this.client.createSession(this.role);
    this.changed();
  }

  /** Send one message; returns false while another turn is in flight. */
  async send(text: string, attachments?: OutgoingAttachment[]): Promise<boolean> {
    if (this.pending || !this.sessionId || !text.trim()) return false;
    const bubble: ChatMessage = { sender: { kind: "user" }, text, attachments };
    this.messages.push(bubble);
    this.pending = true;
    this.changed();
    try {
      const view = await this.client.postMessage(this.sessionId, text, attachments);
      this.appendTurn(view);
      return true;
    } catch {
      bubble.failed = true; // retry affordance; nothing was appended
      return false;
    } finally {
      this.pending = false;
      this.changed();
    }
  }

  /** Re-send a failed bubble without duplicating it. */
  async retry(message: ChatMessage): Promise<boolean> {
    if (this.pending || !this.sessionId || !message.failed) return false;
    message.failed = false;
    this.pending = true;
    this.changed();
    try {
      const view = await this.client.postMessage(
        this.sessionId,
        message.text ?? "",
        message.attachments,
      );
      this.appendTurn(view);
      return true;
    } catch {
      message.failed = true;
      return false;
    } finally {
      this.pending = false;
      this.changed();
    }
  }

  private appendTurn(view: TurnViewDoc): void {
    for (const response of view.responses) {
      const sender: Sender = view.fallbackUsed
        ? { kind: "system" }
        : { kind: "agent", agentId: response.agentId };
      this.messages.push({
        sender,
        payload: response.payload,
        fallback: view.fallbackUsed,
      });
    }
  }

  /** One notification poll; every notification becomes exactly one toast. */
  async pollOnce(): Promise<NotificationDoc[]> {
    if (!this.sessionId) return [];
    const incoming = await this.client.pollNotifications(this.sessionId, this.lastSeq);
    const fresh: NotificationDoc[] = [];
    for (const notification of incoming) {
      if (this.seenNotificationSeqs.has(notification.seq)) continue;
      this.seenNotificationSeqs.add(notification.seq);
      this.lastSeq = Math.max(this.lastSeq, notification.seq);
      this.toasts.push(notification);
      this.messages.push({
        sender: { kind: "system" },
        text: notification.text,
        notification: true,
      });
      fresh.push(notification);
    }
    if (fresh.length > 0) this.changed();
    return fresh;
  }

  dismissToast(seq: number): void {
    this.toasts = this.toasts.filter((t) => t.seq !== seq);
    this.changed();
  }
}

/** Suggested reply for a notification toast (pure presentation). */
export function suggestedReply(notification: NotificationDoc): string {
  if (notification.eventKind === "Submitted") {
    return "List pending travel requests";
  }
  return "list my alerts";
}
