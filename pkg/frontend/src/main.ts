import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { render } from "./render.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.SCALEFLOW_API ?? "http://127.0.0.1:8787";
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) throw new Error("#app missing");
  const controller = new SessionController(new ApiClient(apiBase()));
  window.scaleflowController = controller;
  controller.store.subscribe((view) => render(root, view, controller));
  await controller.begin();
  render(root, controller.store.view, controller);
}

void boot();
