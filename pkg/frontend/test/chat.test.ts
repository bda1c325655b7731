import { describe, expect, it } from "vitest";

import { ApiError, SessionCreated, UtteranceResponse } from "../src/api.js";
import { ChatApi, ChatController, isQuestion } from "../src/chat.js";

const GREETING = "Hi, I'm Flight Stat. What would you like to do?";

class FakeChatApi implements ChatApi {
  sessions = 0;
  utterances: Array<{ sessionId: string; text: string }> = [];
  failNext: "network" | 404 | null = null;
  expired = new Set<string>();

  async createSession(): Promise<SessionCreated> {
    this.sessions += 1;
    return { session_id: `s${this.sessions}`, text: GREETING, state: "menu" };
  }

  async sendUtterance(sessionId: string, text: string): Promise<UtteranceResponse> {
    if (this.failNext === "network") {
      this.failNext = null;
      throw new TypeError("fetch failed");
    }
    if (this.failNext === 404 || this.expired.has(sessionId)) {
      this.failNext = null;
      throw new ApiError(404, "unknown or expired session");
    }
    this.utterances.push({ sessionId, text });
    return { session_id: sessionId, text: `echo: ${text}`, state: "menu", slots: {} };
  }
}

describe("ChatController", () => {
  it("creates a session lazily and records the greeting", async () => {
    const api = new FakeChatApi();
    const chat = new ChatController(api);
    await chat.send("hello");
    expect(api.sessions).toBe(1);
    expect(chat.messages.map((m) => m.speaker)).toEqual(["user", "system", "system"]);
    expect(chat.messages[1].text).toBe(GREETING);
  });

  it("sends nothing for empty input", async () => {
    const api = new FakeChatApi();
    const chat = new ChatController(api);
    await chat.send("   ");
    expect(api.sessions).toBe(0);
    expect(api.utterances).toEqual([]);
    expect(chat.messages).toEqual([]);
  });

  it("keeps messages in arrival order", async () => {
    const api = new FakeChatApi();
    const chat = new ChatController(api);
    await chat.send("one");
    await chat.send("two");
    const texts = chat.messages.map((m) => m.text);
    expect(texts).toEqual([
      "one", GREETING, "echo: one",
      "two", "echo: two",
    ]);
  });

  it("silently re-creates an expired session and re-sends the turn", async () => {
    const api = new FakeChatApi();
    const chat = new ChatController(api);
    await chat.send("first");
    api.expired.add(chat.sessionId!);
    await chat.send("second");
    expect(api.sessions).toBe(2);
    expect(chat.sessionId).toBe("s2");
    const texts = chat.messages.map((m) => m.text);
    expect(texts[texts.length - 1]).toBe("echo: second");
    // the new session's greeting was replayed into the transcript
    expect(texts.filter((t) => t === GREETING)).toHaveLength(2);
  });

  it("marks the turn failed and offers retry on network errors", async () => {
    const api = new FakeChatApi();
    const chat = new ChatController(api);
    await chat.send("warm up");
    api.failNext = "network";
    await chat.send("add a flight");
    expect(chat.pendingRetry).toBe("add a flight");
    const failed = chat.messages.find((m) => m.failed);
    expect(failed?.text).toBe("add a flight");

    await chat.retry();
    expect(chat.pendingRetry).toBeNull();
    expect(chat.messages[chat.messages.length - 1].text).toBe("echo: add a flight");
    expect(chat.messages.some((m) => m.failed)).toBe(false);
  });

  it("refuses overlapping turns while one is in flight", async () => {
    const api = new FakeChatApi();
    const chat = new ChatController(api);
    const first = chat.send("one");
    const second = chat.send("two");
    await Promise.all([first, second]);
    expect(api.utterances.map((u) => u.text)).toEqual(["one"]);
  });
});

describe("isQuestion", () => {
  it("flags system questions for distinct styling", () => {
    expect(isQuestion("Where are you flying from?")).toBe(true);
    expect(isQuestion("Done. I've added your flight. Anything else I can help with?")).toBe(true);
    expect(isQuestion("You have no flights in your list.")).toBe(false);
  });
});
