import { ApiClient, SessionView } from "./api";

const TERMINAL_STATES = new Set(["delivered", "failed"]);
export const POLL_INTERVAL_MS = 2000;

// Plain polling: one in-flight request, stops itself once a terminal
// state has been observed (so at most one poll after the server is done).
export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  pollCount = 0;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private onView: (view: SessionView) => void,
    private intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  get running(): boolean {
    return this.timer !== null;
  }

  private async tick(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      this.pollCount += 1;
      const view = await this.api.getSession(this.sessionId);
      if (TERMINAL_STATES.has(view.state)) {
        this.stop();
      }
      this.onView(view);
    } catch {
      // transient poll errors are silent; the next tick retries
    } finally {
      this.inFlight = false;
    }
  }
}
