import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/client.js";
import { ParticipantSession } from "../src/session.js";
import type { Health, InboxItem } from "../src/types.js";

function item(messageId: string, read: boolean, day = 0, daypart = 0): InboxItem {
  return {
    day,
    daypart,
    ts: `2026-01-0${day + 5}T09:00:00`,
    message_id: messageId,
    category: "encouraging",
    text: "keep going",
    read,
  };
}

/** In-memory stand-in for ApiClient that records what the session asks for. */
class StubApi {
  healthValue: Health = { status: "ok", now: "2026-01-05T09:30:00", day: 0, daypart: 0, users: 1 };
  inboxValue: InboxItem[] = [];
  registered: string[] = [];
  ratingCalls: Array<{ userId: string; value: number }> = [];
  readCalls: Array<{ userId: string; messageId: string }> = [];
  failNextRead = false;
  nextEventId = 0;

  async register(userId: string) {
    this.registered.push(userId);
    return { user_id: userId, created: true };
  }

  async health() {
    return this.healthValue;
  }

  async inbox() {
    return this.inboxValue;
  }

  async submitRating(userId: string, value: number) {
    this.ratingCalls.push({ userId, value });
    return { event_id: `ev-${this.nextEventId++}`, duplicate: false };
  }

  async markRead(userId: string, messageId: string) {
    if (this.failNextRead) {
      this.failNextRead = false;
      throw new Error("boom");
    }
    this.readCalls.push({ userId, messageId });
    return { event_id: `ev-${this.nextEventId++}`, duplicate: false };
  }

  asClient(): ApiClient {
    return this as unknown as ApiClient;
  }
}

async function startedSession(api: StubApi, userId = "u1") {
  const session = new ParticipantSession(api.asClient(), userId);
  await session.start();
  return session;
}

describe("ParticipantSession", () => {
  it("registers on start and exposes the server clock and inbox", async () => {
    const api = new StubApi();
    api.inboxValue = [item("m1", false), item("m2", true)];
    const session = await startedSession(api);

    expect(api.registered).toEqual(["u1"]);
    const view = session.view;
    expect(view.day).toBe(0);
    expect(view.daypart).toBe(0);
    expect(view.clock).toBe("2026-01-05T09:30:00");
    expect(view.inbox).toHaveLength(2);
    expect(view.unread).toBe(1);
    expect(view.canRate).toBe(true);
  });

  it("throws if the view is read before start", () => {
    const session = new ParticipantSession(new StubApi().asClient(), "u1");
    expect(() => session.view).toThrow(/not started/);
  });

  describe("read receipts", () => {
    it("fires exactly one receipt however many times a message is opened", async () => {
      const api = new StubApi();
      api.inboxValue = [item("m1", false)];
      const session = await startedSession(api);

      const opened = await session.openMessage("m1");
      expect(opened.read).toBe(true);
      await session.openMessage("m1");
      await session.openMessage("m1");

      expect(api.readCalls).toEqual([{ userId: "u1", messageId: "m1" }]);
      expect(session.view.unread).toBe(0);
    });

    it("sends nothing for a message the server already shows as read", async () => {
      const api = new StubApi();
      api.inboxValue = [item("m1", true)];
      const session = await startedSession(api);

      await session.openMessage("m1");
      expect(api.readCalls).toEqual([]);
    });

    it("allows a retry after a failed receipt", async () => {
      const api = new StubApi();
      api.inboxValue = [item("m1", false)];
      api.failNextRead = true;
      const session = await startedSession(api);

      await expect(session.openMessage("m1")).rejects.toThrow("boom");
      expect(session.view.unread).toBe(1); // not marked read locally either

      await session.openMessage("m1");
      expect(api.readCalls).toEqual([{ userId: "u1", messageId: "m1" }]);
    });

    it("rejects an id that is not in the inbox", async () => {
      const api = new StubApi();
      const session = await startedSession(api);
      await expect(session.openMessage("ghost")).rejects.toThrow(/no inbox message/);
      expect(api.readCalls).toEqual([]);
    });
  });

  describe("ratings", () => {
    it("blocks non-integers and out-of-range values before any request", async () => {
      const api = new StubApi();
      const session = await startedSession(api);

      for (const bad of [0, 8, 2.5, NaN]) {
        await expect(session.submitRating(bad)).rejects.toThrow(RangeError);
      }
      expect(api.ratingCalls).toEqual([]);
    });

    it("submits once per daypart and records the acknowledgment", async () => {
      const api = new StubApi();
      const session = await startedSession(api);

      const ack = await session.submitRating(4);
      expect(ack.event_id).toBe("ev-0");
      expect(session.view.canRate).toBe(false);
      expect(session.view.todaysRatings).toEqual([
        { value: 4, at: "2026-01-05T09:30:00", event_id: "ev-0" },
      ]);

      await expect(session.submitRating(5)).rejects.toThrow(/already rated/);
      expect(api.ratingCalls).toHaveLength(1);
    });

    it("re-enables rating when the daypart rolls over", async () => {
      const api = new StubApi();
      const session = await startedSession(api);
      await session.submitRating(4);
      expect(session.view.canRate).toBe(false);

      api.healthValue = { ...api.healthValue, now: "2026-01-05T15:30:00", daypart: 1 };
      await session.refresh();

      expect(session.view.canRate).toBe(true);
      await session.submitRating(6);
      expect(session.view.todaysRatings).toHaveLength(2);
    });

    it("clears today's ratings when the server day changes", async () => {
      const api = new StubApi();
      const session = await startedSession(api);
      await session.submitRating(4);
      expect(session.view.todaysRatings).toHaveLength(1);

      api.healthValue = { ...api.healthValue, now: "2026-01-06T09:30:00", day: 1, daypart: 0 };
      await session.refresh();

      expect(session.view.todaysRatings).toEqual([]);
      expect(session.view.canRate).toBe(true);
    });
  });
});
