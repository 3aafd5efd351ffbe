import { SessionView } from "./api";

// Rendering is split in two: a pure view-model (testable without a DOM)
// and a dumb DOM writer. The client has no knowledge of the assistant's
// internals; opacity is entirely server-enforced.

export interface Handlers {
  onSend: (text: string) => void;
  onAccept: () => void;
  onDownload: () => void;
}

export interface ViewModel {
  stateBadge: string;
  turns: { role: string; content: string }[];
  inputEnabled: boolean;
  showAccept: boolean;
  showRevise: boolean;
  showProgress: boolean;
  summaryCard: { summary: string; differences: string; consistency: string } | null;
  deliverableCard: { components: string[]; badges: string[] } | null;
}

export function buildViewModel(view: SessionView): ViewModel {
  const awaiting = view.state === "awaiting_agreement";
  const synthesizing = view.state === "synthesizing" || view.state === "spec_agreed";
  const delivered = view.state === "delivered";

  let deliverableCard: ViewModel["deliverableCard"] = null;
  if (delivered && view.deliverable) {
    const badges: string[] = [];
    if (view.deliverable.provenance.checked_internally) {
      badges.push("checked internally");
    }
    if (view.deliverable.provenance.postprocessed_unverified) {
      badges.push("post-processed, unverified");
    }
    if (view.deliverable.provenance.testgen_degraded) {
      badges.push("generated tests unavailable");
    }
    deliverableCard = { components: view.deliverable.components, badges };
  }

  return {
    stateBadge: view.state.replace(/_/g, " "),
    turns: view.turns.map((t) => ({ role: t.role, content: t.content })),
    inputEnabled: ["created", "awaiting_agreement"].includes(view.state),
    showAccept: awaiting,
    showRevise: awaiting,
    showProgress: synthesizing,
    summaryCard:
      awaiting && view.draft
        ? {
            summary: view.draft.summary,
            differences: view.draft.differences,
            consistency: view.draft.consistency,
          }
        : null,
    deliverableCard,
  };
}

function el(doc: Document, tag: string, className: string, text?: string): HTMLElement {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, view: SessionView, handlers: Handlers): void {
  const doc = root.ownerDocument;
  const model = buildViewModel(view);
  root.textContent = "";

  root.appendChild(el(doc, "div", "state-badge", model.stateBadge));

  const log = el(doc, "div", "chat-log");
  for (const turn of model.turns) {
    const turnNode = el(doc, "div", `turn turn-${turn.role}`, turn.content);
    log.appendChild(turnNode);
  }
  root.appendChild(log);

  if (model.summaryCard) {
    const card = el(doc, "div", "summary-card");
    card.appendChild(el(doc, "p", "summary-text", model.summaryCard.summary));
    if (model.summaryCard.differences) {
      card.appendChild(el(doc, "p", "summary-differences", model.summaryCard.differences));
    }
    card.appendChild(el(doc, "span", "consistency-badge", model.summaryCard.consistency));
    const accept = el(doc, "button", "accept-button", "Accept") as HTMLButtonElement;
    accept.addEventListener("click", () => handlers.onAccept());
    card.appendChild(accept);
    card.appendChild(el(doc, "span", "revise-hint", "or describe changes below"));
    root.appendChild(card);
  }

  if (model.showProgress) {
    root.appendChild(el(doc, "div", "progress", "working on your solution..."));
  }

  if (model.deliverableCard) {
    const card = el(doc, "div", "deliverable-card");
    const list = el(doc, "ul", "component-list");
    for (const component of model.deliverableCard.components) {
      list.appendChild(el(doc, "li", "component", component));
    }
    card.appendChild(list);
    for (const badge of model.deliverableCard.badges) {
      card.appendChild(el(doc, "span", "provenance-badge", badge));
    }
    const download = el(doc, "button", "download-button", "Download") as HTMLButtonElement;
    download.addEventListener("click", () => handlers.onDownload());
    card.appendChild(download);
    root.appendChild(card);
  }

  const inputRow = el(doc, "div", "input-row");
  const input = el(doc, "textarea", "message-input") as HTMLTextAreaElement;
  input.disabled = !model.inputEnabled;
  const send = el(doc, "button", "send-button", "Send") as HTMLButtonElement;
  send.disabled = !model.inputEnabled;
  send.addEventListener("click", () => {
    if (input.value.trim()) {
      handlers.onSend(input.value);
      input.value = "";
    }
  });
  inputRow.appendChild(input);
  inputRow.appendChild(send);
  root.appendChild(inputRow);
}
