// Problem banner: title + detail from an RFC 7807 payload.

import { el } from "../dom.js";
import type { ProblemDetail } from "../types.js";

export function renderProblemBanner(problem: ProblemDetail): HTMLElement {
  return el("div", { class: "problem-banner", role: "alert" }, [
    el("strong", { class: "problem-title" }, [problem.title]),
    el("span", { class: "problem-status" }, [
      problem.status > 0 ? ` (HTTP ${problem.status})` : "",
    ]),
    el("p", { class: "problem-detail" }, [problem.detail]),
  ]);
}
