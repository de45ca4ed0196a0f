/**
 * Operator dashboard state. The chart fields are the metrics payload's own
 * objects, carried through untouched; helpers below only select and label,
 * never recompute.
 */

import type {
  ActionDistribution,
  MetricsPayload,
  RatingsDayRow,
  ReadFractionRow,
  RewardWeek,
  WeekTable,
} from "./types.js";

export interface DashboardView {
  days: number;
  users: string[];
  activeAfterExploration: string[];
  actionDistribution: ActionDistribution;
  ratingsPerDay: RatingsDayRow[];
  readFraction: ReadFractionRow[];
  rewardWeeks: RewardWeek[];
  finalWeekGreedy: { counts: number[]; ranking: number[] };
  clusters: Record<string, number> | null;
}

export function buildDashboard(m: MetricsPayload): DashboardView {
  return {
    days: m.days,
    users: m.users,
    activeAfterExploration: m.active_after_exploration,
    actionDistribution: m.action_distribution,
    ratingsPerDay: m.ratings_per_day,
    readFraction: m.read_fraction_per_day,
    rewardWeeks: m.reward_weeks,
    finalWeekGreedy: m.final_week_greedy,
    clusters: m.clusters,
  };
}

export interface WeekRewardRow {
  week: number;
  /** true when this row is the dropout-excluded ("starred") variant */
  starred: boolean;
  table: WeekTable;
}

/**
 * Reward rows for the weekly table. The starred filter picks the
 * active-only block the server computed; weeks without one (week 1) keep
 * their cohort row so the table stays complete.
 */
export function rewardRows(view: DashboardView, starred: boolean): WeekRewardRow[] {
  return view.rewardWeeks.map((w) => {
    if (starred && w.active_only !== undefined) {
      return { week: w.week, starred: true, table: w.active_only };
    }
    return { week: w.week, starred: false, table: w.cohort };
  });
}

/** User ids grouped per cluster id, for the membership panel. */
export function clusterGroups(view: DashboardView): Map<number, string[]> {
  const groups = new Map<number, string[]>();
  if (view.clusters === null) return groups;
  for (const [user, cluster] of Object.entries(view.clusters)) {
    const list = groups.get(cluster) ?? [];
    list.push(user);
    groups.set(cluster, list);
  }
  for (const list of groups.values()) list.sort();
  return new Map([...groups.entries()].sort((a, b) => a[0] - b[0]));
}
