/**
 * HTML renderers for the rating interface.
 *
 * Every screen is rendered from a ViewState snapshot into a markup string;
 * the functions are pure so they can be tested without a browser. Event
 * wiring happens in main.ts through data-action / data-code attributes and
 * the acr radio group — the renderers only describe what is on screen.
 */

import { ACR_SCORES, acrLabel } from "./labels.js";
import type { ViewState } from "./state.js";

/** Escape text for safe interpolation into markup. */
export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Countdown shown on the break overlay, as m:ss. */
export function formatCountdown(remainingMs: number): string {
  const totalSeconds = Math.ceil(remainingMs / 1000);
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")}`;
}

/** Retry banner shown above whichever screen is active. */
export function renderBanner(text: string): string {
  return `<div class="banner" role="alert">`
    + `<span class="banner-text">${escapeHtml(text)}</span>`
    + `<button type="button" data-action="retry">Retry</button>`
    + `</div>`;
}

/** Onboarding screen: the distortion codes and the ACR scale. */
export function renderTraining(state: ViewState): string {
  const codeRows = state.codes
    .map((entry) => `<tr><td class="code">${escapeHtml(entry.code)}</td>`
      + `<td>${escapeHtml(entry.name)}</td></tr>`)
    .join("");
  const scaleRows = ACR_SCORES
    .map((score) => `<li><strong>${score}</strong> — ${escapeHtml(acrLabel(score))}</li>`)
    .join("");
  return `<section class="training">`
    + `<h1>Before you start</h1>`
    + `<p>You will watch short talking-head clips. After each one, pick the`
    + ` quality level that matches your impression and tick every artefact`
    + ` you noticed. It is fine to tick none.</p>`
    + `<h2>Quality scale</h2><ol class="acr-scale">${scaleRows}</ol>`
    + `<h2>Artefact codes</h2><table class="taxonomy"><tbody>${codeRows}</tbody></table>`
    + `<button type="button" data-action="begin">Start rating</button>`
    + `</section>`;
}

function renderMedia(state: ViewState): string {
  if (state.mediaSrc === null) {
    return `<div class="media-missing">no media</div>`;
  }
  const src = escapeHtml(state.mediaSrc);
  if (state.mediaSrc.endsWith(".mp4")) {
    return `<video src="${src}" controls autoplay loop></video>`;
  }
  const audio = state.audioSrc === null
    ? ""
    : `<audio src="${escapeHtml(state.audioSrc)}" controls autoplay></audio>`;
  return `<img src="${src}" alt="clip frames">${audio}`;
}

function renderScoreChoices(state: ViewState): string {
  return ACR_SCORES
    .map((score) => {
      const checked = state.form.score === score ? " checked" : "";
      return `<label class="acr-choice">`
        + `<input type="radio" name="acr" value="${score}"${checked}>`
        + ` ${score} — ${escapeHtml(acrLabel(score))}</label>`;
    })
    .join("");
}

function renderDistortionChoices(state: ViewState): string {
  return state.codes
    .map((entry) => {
      const checked = state.form.distortions.includes(entry.code) ? " checked" : "";
      return `<label class="distortion-choice">`
        + `<input type="checkbox" data-code="${escapeHtml(entry.code)}"${checked}>`
        + ` ${escapeHtml(entry.code)} — ${escapeHtml(entry.name)}</label>`;
    })
    .join("");
}

/** Main screen: media on the left, the rating form on the right. */
export function renderRating(state: ViewState): string {
  const clipId = state.clip?.clip_id ?? "";
  const submitDisabled = state.canSubmit ? "" : " disabled";
  const submitLabel = state.form.submitting ? "Submitting…" : "Submit rating";
  return `<section class="rating-screen">`
    + `<header class="progress-line">Clip ${state.completed + 1} of ${state.total}`
    + ` <span class="clip-id">(${escapeHtml(clipId)})</span></header>`
    + `<div class="layout">`
    + `<div class="media-pane">${renderMedia(state)}</div>`
    + `<div class="rating-pane">`
    + `<fieldset class="acr"><legend>Overall quality</legend>`
    + renderScoreChoices(state)
    + `</fieldset>`
    + `<fieldset class="distortions"><legend>Artefacts noticed (any number)</legend>`
    + renderDistortionChoices(state)
    + `</fieldset>`
    + `<button type="button" data-action="submit"${submitDisabled}>${submitLabel}</button>`
    + `</div></div></section>`;
}

/** Timed break overlay between phases. */
export function renderBreak(state: ViewState): string {
  const remaining = state.breakRemainingMs;
  const continueDisabled = remaining > 0 ? " disabled" : "";
  return `<section class="break-screen">`
    + `<h1>Break time</h1>`
    + `<p>You have finished a phase of ${state.phaseSize} clips. Please rest`
    + ` your eyes before continuing.</p>`
    + `<p class="countdown">${formatCountdown(remaining)}</p>`
    + `<button type="button" data-action="dismiss-break"${continueDisabled}>Continue</button>`
    + `<p class="supervisor-hint">Supervisor: press U to unlock early.</p>`
    + `</section>`;
}

/** Completion screen once every clip is rated. */
export function renderDone(state: ViewState): string {
  return `<section class="done-screen">`
    + `<h1>All done</h1>`
    + `<p>You rated ${state.completed} of ${state.total} clips. Thank you!</p>`
    + `</section>`;
}

/** Render whichever screen the controller is on, topped by any banner. */
export function renderApp(state: ViewState): string {
  const banner = state.banner === null ? "" : renderBanner(state.banner);
  switch (state.screen) {
    case "loading":
      return banner + `<section class="loading-screen"><p>Loading session…</p></section>`;
    case "training":
      return banner + renderTraining(state);
    case "rating":
      return banner + renderRating(state);
    case "break":
      return banner + renderBreak(state);
    case "done":
      return banner + renderDone(state);
  }
}
