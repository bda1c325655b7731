// Chat session state: one in-flight turn at a time, silent session
// re-creation on expiry, and an explicit retry slot for network
// failures so the view can offer a retry affordance inline.

import { ApiError, SessionCreated, UtteranceResponse } from "./api.js";

export interface ChatApi {
  createSession(): Promise<SessionCreated>;
  sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse>;
}

export interface ChatMessage {
  speaker: "user" | "system";
  text: string;
  timestamp: Date;
  failed?: boolean;
}

/** System bubbles that ask something are styled distinctly. */
export function isQuestion(text: string): boolean {
  return text.trimEnd().endsWith("?");
}

export class ChatController {
  messages: ChatMessage[] = [];
  sessionId: string | null = null;
  busy = false;
  pendingRetry: string | null = null;

  constructor(
    private api: ChatApi,
    private onChange: () => void = () => {},
  ) {}

  private push(speaker: "user" | "system", text: string, failed = false): ChatMessage {
    const message: ChatMessage = { speaker, text, timestamp: new Date(), failed };
    this.messages.push(message);
    this.onChange();
    return message;
  }

  async ensureSession(): Promise<void> {
    if (this.sessionId !== null) return;
    const created = await this.api.createSession();
    this.sessionId = created.session_id;
    this.push("system", created.text);
  }

  /** Send one user turn; empty input sends nothing at all. */
  async send(rawText: string): Promise<void> {
    const text = rawText.trim();
    if (!text || this.busy) return;
    this.busy = true;
    this.pendingRetry = null;
    const userMessage = this.push("user", text);
    try {
      await this.ensureSession();
      const reply = await this.deliver(text);
      this.push("system", reply.text);
    } catch (error) {
      userMessage.failed = true;
      this.pendingRetry = text;
      const detail = error instanceof ApiError ? error.message : "network error";
      this.push("system", `Could not reach the assistant (${detail}). Tap retry.`);
    } finally {
      this.busy = false;
      this.onChange();
    }
  }

  /** An expired (404) session is re-created and the turn re-sent once. */
  private async deliver(text: string) {
    try {
      return await this.api.sendUtterance(this.sessionId!, text);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.sessionId = null;
        await this.ensureSession();
        return await this.api.sendUtterance(this.sessionId!, text);
      }
      throw error;
    }
  }

  async retry(): Promise<void> {
    const text = this.pendingRetry;
    if (!text || this.busy) return;
    // drop the failure pair so the transcript stays readable
    this.messages = this.messages.filter((m) => !(m.failed && m.text === text));
    if (this.messages.length && this.messages[this.messages.length - 1].text.includes("retry")) {
      this.messages.pop();
    }
    this.pendingRetry = null;
    await this.send(text);
  }
}
