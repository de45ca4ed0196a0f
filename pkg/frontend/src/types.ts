/**
 * Payload types for the decision-service HTTP API. These mirror the server's
 * JSON exactly; the console never reshapes the numbers it receives.
 */

export const ACTION_LABELS = ["no message", "encouraging", "informing", "affirming"] as const;
export const DAYPART_LABELS = ["morning", "afternoon", "evening"] as const;

export interface RegisterAck {
  user_id: string;
  created: boolean;
}

export interface IngestAck {
  event_id: string;
  duplicate: boolean;
}

export interface Health {
  status: string;
  now: string;
  day: number;
  daypart: number;
  users: number;
}

export interface InboxItem {
  day: number;
  daypart: number;
  ts: string;
  message_id: string;
  category: string;
  text: string;
  read: boolean;
}

export interface DecisionMessage {
  id: string;
  category: string;
  bucket: string;
  text: string;
}

export interface DecisionRow {
  user_id: string;
  day: number;
  daypart: number;
  ts: string;
  action: number;
  message: DecisionMessage | null;
  policy_version: number;
  explored: boolean;
  degraded: boolean;
  state: Record<string, unknown>;
}

export interface MeanSd {
  mean: number;
  sd: number;
  n: number;
}

export interface WeekTable {
  all_dayparts: MeanSd;
  morning: MeanSd;
  afternoon: MeanSd;
  evening: MeanSd;
}

export interface RewardWeek {
  week: number;
  cohort: WeekTable;
  /** present from week 2 on: the same table excluding users inactive after exploration */
  active_only?: WeekTable;
}

export interface RatingsDayRow {
  day: number;
  users_rated: number;
  fraction_rated: number;
  ratings: number;
}

export interface ReadFractionRow {
  day: number;
  sent: number;
  read: number;
  fraction_read: number;
}

export interface ActionDistribution {
  /** one row per day, one count per action */
  per_day: number[][];
  per_daypart: {
    morning: number[][];
    afternoon: number[][];
    evening: number[][];
  };
}

export interface MetricsPayload {
  days: number;
  users: string[];
  active_after_exploration: string[];
  action_distribution: ActionDistribution;
  ratings_per_day: RatingsDayRow[];
  read_fraction_per_day: ReadFractionRow[];
  reward_weeks: RewardWeek[];
  final_week_greedy: { counts: number[]; ranking: number[] };
  clusters: Record<string, number> | null;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
