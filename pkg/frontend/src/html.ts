/**
 * DOM-free page rendering: both views come back as HTML strings, so they are
 * testable without a browser and the entry point only has to inject them.
 * Every number shown is printed as received from the API.
 */

import type { DashboardView, WeekRewardRow } from "./dashboard.js";
import { clusterGroups, rewardRows } from "./dashboard.js";
import type { SessionView } from "./session.js";
import { ACTION_LABELS, DAYPART_LABELS } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const PAGE_STYLE = `
  :root { --bg:#f6f7f9; --card:#fff; --border:#d9dee5; --text:#24292f;
          --muted:#6b7280; --accent:#2563eb; --accent-soft:#dbeafe; --unread:#b45309; }
  * { margin:0; padding:0; box-sizing:border-box; }
  body { font-family:-apple-system,"Segoe UI",Helvetica,Arial,sans-serif;
         background:var(--bg); color:var(--text); font-size:14px; line-height:1.5; }
  .page { max-width:880px; margin:0 auto; padding:20px; }
  .topbar { display:flex; justify-content:space-between; align-items:baseline; margin-bottom:16px; }
  .topbar h1 { font-size:18px; }
  .topbar .clock { color:var(--muted); font-size:13px; }
  .card { background:var(--card); border:1px solid var(--border); border-radius:8px;
          padding:14px 16px; margin-bottom:14px; }
  .card h2 { font-size:14px; margin-bottom:10px; }
  table { border-collapse:collapse; width:100%; }
  th, td { text-align:left; padding:3px 10px 3px 0; font-variant-numeric:tabular-nums; }
  th { color:var(--muted); font-weight:600; font-size:12px; }
  .bar { display:inline-block; height:10px; background:var(--accent); border-radius:2px;
         vertical-align:middle; margin-right:6px; }
  .muted { color:var(--muted); }
  .badge { background:var(--unread); color:#fff; border-radius:999px; font-size:11px;
           padding:1px 7px; margin-left:6px; }
  .msg { border-top:1px solid var(--border); padding:8px 0; }
  .msg:first-of-type { border-top:none; }
  .msg .cat { font-size:11px; color:var(--muted); text-transform:uppercase; letter-spacing:.04em; }
  .msg.unread .cat { color:var(--unread); font-weight:700; }
  button.rate { font-size:14px; padding:6px 12px; margin-right:6px; border:1px solid var(--border);
                border-radius:6px; background:var(--card); cursor:pointer; }
  button.rate:disabled { opacity:.45; cursor:default; }
  button.open { font-size:12px; padding:2px 10px; border:1px solid var(--border);
                border-radius:6px; background:var(--accent-soft); cursor:pointer; }
`;

export function pageShell(title: string, body: string): string {
  return `<style>${PAGE_STYLE}</style><div class="page"><div class="topbar">${title}</div>${body}</div>`;
}

// -- participant ----------------------------------------------------------

export function renderParticipantPage(view: SessionView): string {
  const title =
    `<h1>Check-in</h1><span class="clock">${escapeHtml(view.userId)} · day ${view.day} ` +
    `${DAYPART_LABELS[view.daypart] ?? ""} · ${escapeHtml(view.clock)}</span>`;

  const buttons = [1, 2, 3, 4, 5, 6, 7]
    .map(
      (v) =>
        `<button class="rate" data-rating="${v}"${view.canRate ? "" : " disabled"}>${v}</button>`,
    )
    .join("");
  const rated = view.todaysRatings
    .map((r) => `<li>rated <strong>${r.value}</strong> at ${escapeHtml(r.at)}</li>`)
    .join("");
  const ratingCard = `<div class="card"><h2>How is your mood right now? <span class="muted">(1 low · 7 high)</span></h2>
    ${buttons}
    ${view.canRate ? "" : '<p class="muted">Thanks, you already rated this part of the day.</p>'}
    ${rated ? `<ul class="muted">${rated}</ul>` : ""}</div>`;

  const messages = view.inbox
    .slice()
    .reverse()
    .map((m) => {
      const open = m.read
        ? escapeHtml(m.text)
        : `<button class="open" data-message-id="${escapeHtml(m.message_id)}">open</button>`;
      return `<div class="msg${m.read ? "" : " unread"}">
        <div class="cat">${escapeHtml(m.category)} · day ${m.day} ${DAYPART_LABELS[m.daypart] ?? ""}</div>
        <div>${open}</div></div>`;
    })
    .join("");
  const inboxCard = `<div class="card"><h2>Messages${
    view.unread ? `<span class="badge">${view.unread} new</span>` : ""
  }</h2>${messages || '<p class="muted">Nothing yet.</p>'}</div>`;

  return pageShell(title, ratingCard + inboxCard);
}

// -- operator -------------------------------------------------------------

/**
 * One table row per day: the four counts printed verbatim from the payload,
 * with bar widths as the only derived styling.
 */
function countTable(rows: number[][]): string {
  const scale = Math.max(1, ...rows.flat());
  const header =
    `<tr><th>day</th>` +
    ACTION_LABELS.map((l) => `<th>${l}</th>`).join("") +
    `</tr>`;
  const body = rows
    .map(
      (counts, day) =>
        `<tr><td>${day}</td>` +
        counts
          .map(
            (c) =>
              `<td><span class="bar" style="width:${Math.round((60 * c) / scale)}px"></span>${c}</td>`,
          )
          .join("") +
        `</tr>`,
    )
    .join("");
  return `<table>${header}${body}</table>`;
}

function actionDistributionCard(view: DashboardView): string {
  const byDaypart = DAYPART_LABELS.map(
    (name) => `<h2>${name}</h2>${countTable(view.actionDistribution.per_daypart[name])}`,
  ).join("");
  return `<div class="card"><h2>Action distribution per day</h2>${countTable(
    view.actionDistribution.per_day,
  )}${byDaypart}</div>`;
}

function ratingsCard(view: DashboardView): string {
  const rows = view.ratingsPerDay
    .map(
      (r) =>
        `<tr><td>${r.day}</td><td>${r.ratings}</td><td>${r.users_rated}</td><td>${r.fraction_rated}</td></tr>`,
    )
    .join("");
  return `<div class="card"><h2>Ratings per day</h2><table>
    <tr><th>day</th><th>ratings</th><th>users rated</th><th>fraction</th></tr>${rows}</table></div>`;
}

function readCard(view: DashboardView): string {
  const rows = view.readFraction
    .map(
      (r) =>
        `<tr><td>${r.day}</td><td>${r.sent}</td><td>${r.read}</td><td>${r.fraction_read}</td></tr>`,
    )
    .join("");
  return `<div class="card"><h2>Fraction of messages read</h2><table>
    <tr><th>day</th><th>sent</th><th>read</th><th>fraction</th></tr>${rows}</table></div>`;
}

function rewardRowHtml(row: WeekRewardRow): string {
  const cells = (["all_dayparts", ...DAYPART_LABELS] as const)
    .map((k) => {
      const m = row.table[k];
      return `<td>${m.mean} ± ${m.sd} <span class="muted">(n=${m.n})</span></td>`;
    })
    .join("");
  return `<tr><td>week ${row.week}${row.starred ? "*" : ""}</td>${cells}</tr>`;
}

function rewardCard(view: DashboardView, starred: boolean): string {
  const rows = rewardRows(view, starred).map(rewardRowHtml).join("");
  return `<div class="card"><h2>Reward per week ${
    starred ? "<span class=\"muted\">(* excludes users inactive after week 1)</span>" : ""
  }</h2><table>
    <tr><th></th><th>all dayparts</th><th>morning</th><th>afternoon</th><th>evening</th></tr>${rows}</table>
    <button class="open" data-toggle-starred>${starred ? "show full cohort" : "exclude dropouts"}</button></div>`;
}

function clusterCard(view: DashboardView): string {
  const groups = clusterGroups(view);
  if (groups.size === 0)
    return `<div class="card"><h2>Clusters</h2><p class="muted">No cluster model yet.</p></div>`;
  const body = [...groups.entries()]
    .map(
      ([cid, members]) =>
        `<tr><td>cluster ${cid}</td><td>${members.map(escapeHtml).join(", ")}</td></tr>`,
    )
    .join("");
  return `<div class="card"><h2>Clusters</h2><table>${body}</table></div>`;
}

export function renderOperatorPage(view: DashboardView, opts: { starred?: boolean } = {}): string {
  const title = `<h1>Cohort dashboard</h1><span class="clock">${view.users.length} users · ${view.days} days</span>`;
  return pageShell(
    title,
    actionDistributionCard(view) +
      ratingsCard(view) +
      readCard(view) +
      rewardCard(view, opts.starred ?? false) +
      clusterCard(view),
  );
}
