/**
 * Browser entry point: wires the controller, renderer and DOM together.
 *
 * The subject id comes from the ?subject= query parameter (or a prompt as
 * a fallback). All interaction goes through event delegation on the app
 * root, so re-rendering the markup never loses handlers. The supervisor
 * unlock for the break overlay is the U key.
 */

import { StudyApi } from "./api.js";
import { SessionController } from "./state.js";
import { renderApp } from "./ui.js";

function subjectIdFromLocation(): string {
  const params = new URLSearchParams(window.location.search);
  const fromQuery = params.get("subject");
  if (fromQuery !== null && fromQuery.length > 0) {
    return fromQuery;
  }
  return window.prompt("Subject id:") ?? "";
}

function bootstrap(): void {
  const root = document.getElementById("app");
  if (root === null) {
    throw new Error("missing #app element");
  }
  const api = new StudyApi("");
  const controller = new SessionController(api, subjectIdFromLocation());

  const render = () => {
    root.innerHTML = renderApp(controller.getState());
  };
  controller.subscribe(render);

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]");
    if (target === null) {
      return;
    }
    const action = target.getAttribute("data-action");
    if (action === "begin") {
      controller.beginRating();
    } else if (action === "submit") {
      void controller.submitCurrent();
    } else if (action === "retry") {
      void controller.retry();
    } else if (action === "dismiss-break") {
      controller.dismissBreak();
    }
  });

  root.addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    if (input.name === "acr") {
      controller.selectScore(Number(input.value));
    } else if (input.dataset.code !== undefined) {
      controller.toggleDistortion(input.dataset.code);
    }
  });

  document.addEventListener("keydown", (event) => {
    if (event.key === "u" || event.key === "U") {
      controller.dismissBreak(true);
    }
  });

  // Keep the break countdown ticking; re-render once a second while the
  // overlay is up so the timer and the continue button stay current.
  window.setInterval(() => {
    if (controller.getState().screen === "break") {
      render();
    }
  }, 1000);

  void controller.start();
}

bootstrap();
