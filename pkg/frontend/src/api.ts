// Typed client for the gateway /v1 API. The UI talks to the server through
// this module only; nothing here computes results, it just moves JSON.

export interface TableDoc {
  columns: [string, string][];
  rows: (string | number | boolean)[][];
}

export interface ChartDoc {
  kind: "bar" | "line" | "pie";
  title: string;
  xLabel: string;
  yLabel: string;
  categories: (string | number)[];
  values: number[];
}

export interface AttachmentDoc {
  filename: string;
  mediaType: string;
  "@bytes": string; // base64
}

export interface PayloadDoc {
  modality: "text" | "table" | "chart" | "file" | "composite";
  text?: string;
  table?: TableDoc;
  chart?: ChartDoc;
  attachment?: AttachmentDoc;
  parts?: PayloadDoc[];
}

export interface TurnResponseDoc {
  agentId: string;
  payload: PayloadDoc;
}

export interface TurnViewDoc {
  sessionId: string;
  turnIndex: number;
  responses: TurnResponseDoc[];
  selected: string[];
  fallbackUsed: boolean;
}

export interface NotificationDoc {
  seq: number;
  alertId: number;
  text: string;
  eventId: number;
  eventKind: string;
}

export interface AgentDoc {
  agentId: string;
  displayName: string;
  taxonomyClass: string;
  worldChanging: boolean;
  health: string;
  remote: boolean;
}

export interface OutgoingAttachment {
  name: string;
  text: string;
}

export const ROLES = ["Employee", "Manager", "Director", "LoanOfficer"] as const;
export type Role = (typeof ROLES)[number];

export class GatewayError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.error ?? body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new GatewayError(response.status, detail);
    }
    return response.json() as Promise<T>;
  }

  async createSession(role: Role): Promise<string> {
    const doc = await this.request<{ sessionId: string }>("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ role }),
    });
    return doc.sessionId;
  }

  postMessage(
    sessionId: string,
    text: string,
    attachments?: OutgoingAttachment[],
  ): Promise<TurnViewDoc> {
    return this.request<TurnViewDoc>(`/v1/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(attachments ? { text, attachments } : { text }),
    });
  }

  async pollNotifications(
    sessionId: string,
    since: number,
  ): Promise<NotificationDoc[]> {
    const doc = await this.request<{ notifications: NotificationDoc[] }>(
      `/v1/sessions/${sessionId}/notifications?since=${since}`,
    );
    return doc.notifications;
  }

  async listAgents(): Promise<AgentDoc[]> {
    const doc = await this.request<{ agents: AgentDoc[] }>("/v1/agents");
    return doc.agents;
  }
}
