/**
 * Participant-side session state. Everything rendered comes from API
 * responses: the inbox and clock are server payloads, and "today's ratings"
 * is the list of acknowledgments this session received. Nothing is invented
 * client-side.
 */

import type { ApiClient } from "./client.js";
import type { Health, InboxItem, IngestAck } from "./types.js";

export interface RatingRecord {
  value: number;
  at: string; // server clock when submitted
  event_id: string;
}

export interface SessionView {
  userId: string;
  clock: string;
  day: number;
  daypart: number;
  inbox: InboxItem[];
  unread: number;
  todaysRatings: RatingRecord[];
  canRate: boolean;
}

export class ParticipantSession {
  private readonly client: ApiClient;
  readonly userId: string;

  private items: InboxItem[] = [];
  private health: Health | null = null;
  private ratings: RatingRecord[] = [];
  private ratedSlot: string | null = null;
  /** message ids whose read receipt this session already fired */
  private readonly receiptsSent = new Set<string>();

  constructor(client: ApiClient, userId: string) {
    this.client = client;
    this.userId = userId;
  }

  /** Register (idempotent server-side) and pull the first snapshot. */
  async start(): Promise<void> {
    await this.client.register(this.userId);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const [health, items] = await Promise.all([
      this.client.health(),
      this.client.inbox(this.userId),
    ]);
    if (this.health !== null && health.day !== this.health.day) {
      this.ratings = []; // new day, the old list is no longer "today"
    }
    this.health = health;
    this.items = items;
  }

  private slot(): string {
    const h = this.requireHealth();
    return `${h.day}:${h.daypart}`;
  }

  private requireHealth(): Health {
    if (this.health === null) throw new Error("session not started");
    return this.health;
  }

  get view(): SessionView {
    const h = this.requireHealth();
    return {
      userId: this.userId,
      clock: h.now,
      day: h.day,
      daypart: h.daypart,
      inbox: this.items,
      unread: this.items.filter((i) => !i.read).length,
      todaysRatings: this.ratings,
      canRate: this.ratedSlot !== this.slot(),
    };
  }

  /**
   * Validates client-side (integers 1..7 only, one per daypart) before any
   * request goes out.
   */
  async submitRating(value: number): Promise<IngestAck> {
    if (!Number.isInteger(value) || value < 1 || value > 7) {
      throw new RangeError(`rating must be an integer in 1..7, got ${value}`);
    }
    if (this.ratedSlot === this.slot()) {
      throw new Error("already rated this daypart");
    }
    const ack = await this.client.submitRating(this.userId, value);
    this.ratedSlot = this.slot();
    this.ratings = [...this.ratings, { value, at: this.requireHealth().now, event_id: ack.event_id }];
    return ack;
  }

  /**
   * Returns the message and fires its read receipt exactly once: a second
   * open, or opening something the server already shows as read, sends
   * nothing.
   */
  async openMessage(messageId: string): Promise<InboxItem> {
    const item = this.items.find((i) => i.message_id === messageId);
    if (!item) throw new Error(`no inbox message ${messageId}`);
    if (!item.read && !this.receiptsSent.has(messageId)) {
      this.receiptsSent.add(messageId);
      try {
        await this.client.markRead(this.userId, messageId);
      } catch (err) {
        this.receiptsSent.delete(messageId); // allow a retry after a failure
        throw err;
      }
      this.items = this.items.map((i) =>
        i.message_id === messageId ? { ...i, read: true } : i,
      );
    }
    return this.items.find((i) => i.message_id === messageId) ?? item;
  }
}
