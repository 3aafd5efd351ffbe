import { ApiClient, SessionView, WrongStateError } from "./api";
import { Poller } from "./poll";
import { render } from "./view";

// Application shell: one session per page load, optimistic re-render after
// every action, polling while the assistant works.

export class App {
  private sessionId = "";
  private poller: Poller | null = null;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
    private toast: (message: string) => void = () => undefined,
  ) {}

  async boot(): Promise<void> {
    const created = await this.api.createSession();
    this.sessionId = created.id;
    await this.refresh();
  }

  get id(): string {
    return this.sessionId;
  }

  private show(view: SessionView): void {
    render(this.root, view, {
      onSend: (text) => void this.send(text),
      onAccept: () => void this.accept(),
      onDownload: () => void this.download(),
    });
  }

  async refresh(): Promise<SessionView> {
    const view = await this.api.getSession(this.sessionId);
    this.show(view);
    return view;
  }

  async send(text: string): Promise<void> {
    try {
      this.show(await this.api.postMessage(this.sessionId, text));
    } catch (error) {
      this.notify(error);
    }
  }

  async accept(): Promise<void> {
    try {
      await this.api.accept(this.sessionId);
    } catch (error) {
      this.notify(error);
      return;
    }
    await this.refresh();
    this.startPolling();
  }

  async download(): Promise<Blob | null> {
    try {
      return await this.api.downloadDeliverable(this.sessionId);
    } catch (error) {
      this.notify(error);
      return null;
    }
  }

  startPolling(intervalMs?: number): void {
    this.poller?.stop();
    this.poller = new Poller(
      this.api,
      this.sessionId,
      (view) => this.show(view),
      intervalMs,
    );
    this.poller.start();
  }

  stopPolling(): void {
    this.poller?.stop();
  }

  get polling(): boolean {
    return this.poller?.running ?? false;
  }

  private notify(error: unknown): void {
    if (error instanceof WrongStateError) {
      this.toast(`Not available right now: ${error.detail}`);
    } else {
      this.toast(String(error));
    }
  }
}

declare const window: (Window & typeof globalThis) | undefined;

if (typeof window !== "undefined" && typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    const app = new App(new ApiClient(""), root, (message) => {
      const toast = document.createElement("div");
      toast.className = "toast";
      toast.textContent = message;
      document.body.appendChild(toast);
      setTimeout(() => toast.remove(), 4000);
    });
    void app.boot();
  }
}
