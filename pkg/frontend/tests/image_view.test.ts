// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { renderImageView } from "../src/views/image.js";
import { EMPTY_IMAGE_REPORT, IMAGE_REPORT } from "./fixtures.js";

describe("renderImageView", () => {
  it("overlays one scored box per detected face", () => {
    const view = renderImageView(IMAGE_REPORT, { imageUrl: "http://svc.test/img.png" });
    const overlays = [...view.querySelectorAll(".face-overlay")];
    expect(overlays.length).toBe(2);
    const labels = overlays.map((o) => o.querySelector(".face-score")!.textContent);
    expect(labels).toEqual(["20.0%", "80.0%"]);
  });

  it("positions overlays from the report's pixel boxes", () => {
    const view = renderImageView(IMAGE_REPORT);
    const overlay = view.querySelector(".face-overlay") as HTMLElement;
    expect(overlay.style.left).toBe("40px");
    expect(overlay.style.top).toBe("80px");
    expect(overlay.style.width).toBe("80px");
  });

  it("formats scores as percentages with one decimal", () => {
    const report = {
      ...IMAGE_REPORT,
      shots: [{
        ...IMAGE_REPORT.shots[0],
        clusters: [{
          cluster_id: 0,
          cluster_score: 0.123,
          faces: [{ timestamp: 0, box: { x0: 0, y0: 0, x1: 10, y1: 10 }, score: 0.123 }],
        }],
      }],
    };
    const view = renderImageView(report);
    expect(view.querySelector(".face-score")!.textContent).toBe("12.3%");
  });

  it("renders an explicit empty state when no faces were detected", () => {
    const view = renderImageView(EMPTY_IMAGE_REPORT);
    expect(view.querySelector(".empty-state")!.textContent).toContain("No faces");
    expect(view.querySelectorAll(".face-overlay").length).toBe(0);
  });

  it("shows the overall score", () => {
    const view = renderImageView(IMAGE_REPORT);
    expect(view.querySelector(".overall-score")!.textContent).toBe("80.0%");
  });
});
