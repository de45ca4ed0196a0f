/**
 * Browser entry. Query parameters pick the view and target:
 *
 *   ?user=u1                      participant check-in for u1
 *   ?view=operator                cohort dashboard
 *   &base=http://host:8080        API base (default: same origin)
 *   &token=...                    bearer token when the server requires one
 *   &poll=5000                    refresh interval in ms
 */

import { ApiClient } from "./client.js";
import { buildDashboard } from "./dashboard.js";
import { renderOperatorPage, renderParticipantPage } from "./html.js";
import { createPoller } from "./poll.js";
import { ParticipantSession } from "./session.js";

function mount(root: HTMLElement, html: string): void {
  root.innerHTML = html;
}

async function runParticipant(root: HTMLElement, client: ApiClient, userId: string, pollMs: number) {
  const session = new ParticipantSession(client, userId);
  await session.start();

  const paint = () => mount(root, renderParticipantPage(session.view));
  paint();

  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    const rating = el.dataset.rating;
    const messageId = el.dataset.messageId;
    if (rating !== undefined) {
      void session.submitRating(Number(rating)).then(paint, (err) => alert(String(err)));
    } else if (messageId !== undefined) {
      void session.openMessage(messageId).then(paint, (err) => alert(String(err)));
    }
  });

  const poller = createPoller(async () => {
    await session.refresh();
    paint();
  }, pollMs);
  poller.start();
}

async function runOperator(root: HTMLElement, client: ApiClient, pollMs: number) {
  let starred = false;
  const paint = async () => {
    const view = buildDashboard(await client.metrics());
    mount(root, renderOperatorPage(view, { starred }));
  };
  await paint();

  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    if (el.dataset.toggleStarred !== undefined) {
      starred = !starred;
      void paint();
    }
  });

  const poller = createPoller(paint, pollMs);
  poller.start();
}

export async function boot(root: HTMLElement, search: string): Promise<void> {
  const params = new URLSearchParams(search);
  const base = params.get("base") ?? "";
  const client = new ApiClient(base, { token: params.get("token") });
  const pollMs = Number(params.get("poll") ?? "5000");
  const user = params.get("user");

  if (params.get("view") === "operator") {
    await runOperator(root, client, pollMs);
  } else if (user) {
    await runParticipant(root, client, user, pollMs);
  } else {
    mount(root, "<p>Pass ?user=&lt;id&gt; for the check-in view or ?view=operator.</p>");
  }
}

if (typeof document !== "undefined" && document.body) {
  void boot(document.body, window.location.search).catch((err) => {
    document.body.innerHTML = `<pre>${String(err)}</pre>`;
  });
}
