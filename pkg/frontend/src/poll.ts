/** Repeating refresh with a configurable interval. Errors are kept for the
 * UI to show and never stop the loop. */

export interface Poller {
  start(): void;
  stop(): void;
  readonly running: boolean;
  readonly lastError: unknown;
}

export function createPoller(tick: () => Promise<void>, intervalMs: number): Poller {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let active = false;
  let lastError: unknown = null;

  const loop = async () => {
    try {
      await tick();
      lastError = null;
    } catch (err) {
      lastError = err;
    }
    if (active) timer = setTimeout(loop, intervalMs);
  };

  return {
    start() {
      if (active) return;
      active = true;
      void loop();
    },
    stop() {
      active = false;
      if (timer !== null) clearTimeout(timer);
      timer = null;
    },
    get running() {
      return active;
    },
    get lastError() {
      return lastError;
    },
  };
}
