/** Contour rendering over a fixed 3x3 sensitivity grid.
 *
 * The grid payload is a verbatim copy of the service wire shape. The
 * picture contract: solid paths trace the server-sent effect levels,
 * dashed paths trace the p-value levels, and each observed confounder
 * is a dot that reveals its name on hover. A snapshot pins the full
 * markup so accidental changes to the drawing show up in review.
 */

import { describe, expect, it } from "vitest";
import type { GridView } from "../src/api.js";
import { contourPlot } from "../src/charts.js";
import { traceLevel } from "../src/contour.js";

const GRID: GridView = {
  es_axis: [-0.2, 0, 0.2],
  rho_axis: [0, 0.15, 0.3],
  effect_surface: [
    [1, 2, 3],
    [2, 3, 4],
    [3, 4, 5],
  ],
  pvalue_surface: [
    [0.5, 0.2, 0.04],
    [0.3, 0.06, 0.02],
    [0.08, 0.03, 0.008],
  ],
  missing: [
    [false, false, false],
    [false, false, false],
    [false, false, false],
  ],
  observed_points: [
    { name: "x1", es: 0.05, rho: 0.12 },
    { name: "x2", es: -0.1, rho: 0.2 },
  ],
  baseline: { effect: 3, p: 0.2 },
  draws_per_cell: 200,
  effect_levels: [2, 3, 4],
  p_levels: [0.05, 0.01],
};

describe("contourPlot", () => {
  it("matches the pinned markup for the 3x3 grid", () => {
    const svg = contourPlot(GRID);
    expect(svg.outerHTML).toMatchSnapshot();
  });

  it("draws solid effect lines, dashed p lines, and named dots", () => {
    const svg = contourPlot(GRID);

    const effectLines = svg.querySelectorAll("path.effect-line");
    expect(effectLines.length).toBe(GRID.effect_levels.length);
    const effectTitles: string[] = [];
    for (const p of effectLines) {
      expect(p.getAttribute("stroke-dasharray")).toBeNull();
      expect(p.getAttribute("d")).toMatch(/^M[-\d. ML]+$/);
      effectTitles.push(p.querySelector("title")!.textContent!);
    }
    expect(effectTitles).toEqual(["effect = 2", "effect = 3", "effect = 4"]);

    const pLines = svg.querySelectorAll("path.p-line");
    expect(pLines.length).toBe(GRID.p_levels.length);
    const pTitles: string[] = [];
    for (const p of pLines) {
      expect(p.getAttribute("stroke-dasharray")).toBe("6 4");
      pTitles.push(p.querySelector("title")!.textContent!);
    }
    expect(pTitles).toEqual(["p = 0.05", "p = 0.01"]);

    const dots = svg.querySelectorAll("circle.observed-point");
    expect(dots.length).toBe(2);
    const names = [...dots].map((c) => c.querySelector("title")!.textContent);
    expect(names).toEqual(["x1", "x2"]);

    const legend = svg.querySelector("g.legend")!;
    expect(legend.textContent).toContain("effect level");
    expect(legend.textContent).toContain("p-value level");
    expect(legend.textContent).toContain("observed confounder");
  });

  it("greys out masked cells and keeps lines away from them", () => {
    const masked: GridView = {
      ...GRID,
      effect_surface: [
        [1, 2, 3],
        [2, null, 4],
        [3, 4, 5],
      ],
      pvalue_surface: [
        [0.5, 0.2, 0.04],
        [0.3, null, 0.02],
        [0.08, 0.03, 0.008],
      ],
      missing: [
        [false, false, false],
        [false, true, false],
        [false, false, false],
      ],
    };
    const svg = contourPlot(masked);
    const rects = svg.querySelectorAll("rect.masked-cell");
    expect(rects.length).toBe(1);
    expect(rects[0].querySelector("title")!.textContent).toBe("not estimable");
    // every tracing cell touches the null node, so no effect line survives
    expect(svg.querySelectorAll("path.effect-line").length).toBe(0);
  });

  it("keeps out-of-range observed confounders off the plot", () => {
    const far: GridView = {
      ...GRID,
      observed_points: [
        { name: "inside", es: 0.0, rho: 0.15 },
        { name: "funnel", es: 0.9, rho: 0.15 },
      ],
    };
    const svg = contourPlot(far);
    const dots = svg.querySelectorAll("circle.observed-point");
    expect(dots.length).toBe(1);
    expect(dots[0].querySelector("title")!.textContent).toBe("inside");
  });
});

describe("traceLevel", () => {
  it("cuts a simple gradient with a straight line", () => {
    const segs = traceLevel([[0, 1], [0, 1]], 0.5);
    expect(segs).toEqual([[{ x: 0.5, y: 0 }, { x: 0.5, y: 1 }]]);
  });

  it("skips cells with a null corner", () => {
    expect(traceLevel([[0, null], [0, 1]], 0.5)).toEqual([]);
  });

  it("returns nothing when the level clears the surface", () => {
    expect(traceLevel([[0, 1], [0, 1]], 5)).toEqual([]);
    expect(traceLevel([[0, 1], [0, 1]], -5)).toEqual([]);
  });

  it("splits saddle cells into two segments", () => {
    const segs = traceLevel([[0, 1], [1, 0]], 0.5);
    expect(segs.length).toBe(2);
  });
});
