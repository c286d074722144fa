import { progressLabel } from "./form.js";
import type { SessionController } from "./controller.js";
import type { UiSessionView } from "./store.js";

// Pure projection of the view model into DOM. No decisions here: what
// the server said is what gets painted.

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, view: UiSessionView, controller: SessionController): void {
  root.replaceChildren();

  const header = el("header", "header");
  header.append(el("h1", "title", "scaleflow"));
  header.append(el("span", `badge phase-${view.phase.toLowerCase()}`, view.phase));
  header.append(el("span", `badge risk-${view.riskLevel.toLowerCase()}`, `risk: ${view.riskLevel}`));
  root.append(header);

  if (view.overrideActive) {
    const banner = el("div", "banner-override");
    banner.setAttribute("role", "alert");
    banner.append(el("h2", "banner-title", "We've paused the session"));
    banner.append(
      el(
        "p",
        "banner-text",
        "If you are in immediate danger, contact your local emergency number now. " +
          "You can also reach a crisis counselor through your regional crisis line. " +
          "A human supervisor has been notified; this session stays paused until they review it.",
      ),
    );
    root.append(banner);
    // Banner dominance: nothing interactive is rendered below this point.
    renderTranscript(root, view, { interactive: false });
    return;
  }

  renderTranscript(root, view, { interactive: view.phase !== "Closed" });

  if (view.notice) {
    root.append(el("div", "notice", view.notice));
  }

  if (view.recommendation && view.phase === "Recommendation") {
    const cards = el("section", "recommendations");
    cards.append(el("h2", "section-title", `Recommended (${view.recommendation.mode})`));
    for (const scale of view.recommendation.scales) {
      const card = el("article", "card");
      card.append(el("h3", "card-title", scale.scale_id));
      card.append(el("p", "card-score", `score ${scale.score.toFixed(4)}`));
      card.append(el("p", "card-detail", `fit ${scale.adaptability.toFixed(4)} | priority ${scale.priority.toFixed(4)}`));
      const accept = el("button", "accept-button", "Accept") as HTMLButtonElement;
      accept.dataset.scaleId = scale.scale_id;
      accept.addEventListener("click", () => void controller.acceptScale(scale.scale_id));
      card.append(accept);
      cards.append(card);
    }
    root.append(cards);
  }

  if (view.formError) {
    const panel = el("div", "error-panel");
    panel.append(el("p", "error-text", view.formError));
    root.append(panel);
  }

  if (view.form) {
    const form = el("section", "scale-form");
    form.append(el("h2", "section-title", view.form.title));
    form.append(el("p", "progress", progressLabel(view.form)));
    form.append(el("p", "prompt", view.form.item.prompt));
    if (view.form.inlineError) {
      form.append(el("p", "inline-error", view.form.inlineError));
    }
    const options = el("div", "options");
    for (const option of view.form.item.options) {
      const button = el("button", "option-button", option.label) as HTMLButtonElement;
      button.dataset.value = String(option.value);
      button.addEventListener("click", () => void controller.answer(option.value));
      options.append(button);
    }
    form.append(options);
    root.append(form);
  }

  if (view.result) {
    const panel = el("section", "result-panel");
    panel.append(el("h2", "section-title", view.result.title ?? view.result.scale_id));
    panel.append(el("p", "result-total", `Total: ${view.result.total_score}`));
    panel.append(el("p", "result-band", `Band: ${view.result.band_label}`));
    if (view.result.interpretation) {
      panel.append(el("p", "result-interpretation", view.result.interpretation));
    }
    root.append(panel);
  }
}

function renderTranscript(root: HTMLElement, view: UiSessionView, flags: { interactive: boolean }): void {
  const chat = el("section", "chat");
  const log = el("div", "chat-log");
  for (const entry of view.transcript) {
    log.append(el("p", `bubble ${entry.speaker}`, entry.text));
  }
  chat.append(log);

  if (flags.interactive && view.phase !== "Assessment") {
    const composer = el("div", "composer");
    const input = el("textarea", "composer-input") as HTMLTextAreaElement;
    input.placeholder = "Type how you're feeling...";
    const send = el("button", "send-button", "Send") as HTMLButtonElement;
    send.addEventListener("click", () => {
      const text = input.value;
      input.value = "";
      void window.scaleflowController?.sendTurn(text);
    });
    composer.append(input, send);
    chat.append(composer);
  }
  root.append(chat);
}

declare global {
  interface Window {
    scaleflowController?: SessionController;
    SCALEFLOW_API?: string;
  }
}
