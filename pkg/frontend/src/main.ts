// Page bootstrap: token + URL form, job progress line, result mount.

import { ServiceClient } from "./api.js";
import { el } from "./dom.js";
import { JobPoller } from "./poller.js";
import { AppState, AppStore } from "./store.js";
import { renderImageView } from "./views/image.js";
import { renderProblemBanner } from "./views/problem.js";
import { renderVideoView } from "./views/video.js";

const PHASE_LABELS: Record<string, string> = {
  idle: "enter a media URL to analyze",
  submitting: "submitting…",
  polling: "job running",
  "fetching-result": "fetching result…",
  done: "analysis complete",
  problem: "request failed",
};

export function mountApp(root: HTMLElement, baseUrl: string = ""): AppStore {
  const client = new ServiceClient(baseUrl || window.location.origin);
  const store = new AppStore();
  const poller = new JobPoller(client, store);

  const tokenInput = el("input", {
    class: "token-input", type: "password",
    placeholder: "access token", autocomplete: "off",
  });
  tokenInput.addEventListener("input", () => client.setToken(tokenInput.value));

  const urlInput = el("input", {
    class: "url-input", type: "url",
    placeholder: "https://… image or video URL", required: "",
  });
  const submit = el("button", { class: "submit-button", type: "submit" }, ["Analyze"]);
  const form = el("form", { class: "submit-form" }, [tokenInput, urlInput, submit]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (urlInput.value) void poller.submitAndPoll(urlInput.value);
  });

  const statusLine = el("p", { class: "status-line", "data-phase": "idle" });
  const resultMount = el("div", { class: "result-mount" });
  root.replaceChildren(
    el("h1", {}, ["DeepFake detection"]),
    form,
    statusLine,
    resultMount,
  );

  const renderStatus = (state: AppState) => {
    statusLine.dataset.phase = state.phase;
    const parts = [PHASE_LABELS[state.phase] ?? state.phase];
    if (state.phase === "polling" && state.stateHistory.length > 0) {
      parts.push(state.stateHistory.join(" → "));
    }
    if (state.cached) parts.push("(served from cache)");
    statusLine.textContent = parts.join(" · ");
  };

  store.subscribe((state) => {
    renderStatus(state);
    resultMount.replaceChildren();
    if (state.phase === "problem" && state.problem) {
      resultMount.append(renderProblemBanner(state.problem));
    }
    if (state.phase === "done" && state.report) {
      const galleryUrlFor = (ref: string) => client.galleryUrl(ref);
      if (state.report.media_kind === "image") {
        resultMount.append(renderImageView(state.report, {
          imageUrl: state.sourceUrl ?? undefined,
        }));
      } else {
        resultMount.append(renderVideoView(state.report, {
          sourceUrl: state.sourceUrl ?? undefined,
          galleryUrlFor,
        }));
      }
    }
  });
  return store;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app") as HTMLElement);
}
