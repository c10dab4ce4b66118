/** SVG charts. Numbers shown are server values; the only computation
 * here is coordinate mapping and contour tracing.
 */

import type { DensityCurve, GridView } from "./api.js";
import { levelPath, traceLevel } from "./contour.js";
import { s } from "./dom.js";

function extent(vals: number[]): [number, number] {
  let lo = Infinity, hi = -Infinity;
  for (const v of vals) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) { lo -= 1; hi += 1; }
  return [lo, hi];
}

const fmt = (v: number) => {
  const r = Math.round(v * 100) / 100;
  return String(r);
};

export interface ContourOptions {
  width?: number;
  height?: number;
}

/** Sensitivity surface: solid lines = effect levels, dashed lines =
 * p-value levels, dots = observed confounders (name on hover). */
export function contourPlot(grid: GridView,
                            opts: ContourOptions = {}): SVGElement {
  const width = opts.width ?? 480;
  const height = opts.height ?? 380;
  const padL = 52, padR = 12, padT = 12, padB = 62;
  const plotW = width - padL - padR;
  const plotH = height - padT - padB;
  const [esLo, esHi] = extent(grid.es_axis);
  const [rhoLo, rhoHi] = extent(grid.rho_axis);
  const px = (es: number) => padL + ((es - esLo) / (esHi - esLo)) * plotW;
  const py = (rho: number) => padT + plotH - ((rho - rhoLo) / (rhoHi - rhoLo)) * plotH;
  // grid coordinates -> pixels, through the axis values
  const cols = grid.es_axis.length, rows = grid.rho_axis.length;
  const axisAt = (axis: number[], f: number) => {
    const i = Math.min(Math.floor(f), axis.length - 2);
    return axis[i] + (f - i) * (axis[i + 1] - axis[i]);
  };
  const toPixel = (p: { x: number; y: number }) => ({
    x: px(axisAt(grid.es_axis, p.x)),
    y: py(axisAt(grid.rho_axis, p.y)),
  });

  const svg = s("svg", {
    xmlns: "http://www.w3.org/2000/svg", width, height,
    viewBox: `0 0 ${width} ${height}`, class: "contour-plot",
    role: "img",
  });

  // frame
  svg.append(s("rect", {
    x: padL, y: padT, width: plotW, height: plotH,
    fill: "#fcfcfc", stroke: "#999", "stroke-width": 1,
  }));

  // masked cells render grey around their grid node
  const stepX = plotW / Math.max(cols - 1, 1);
  const stepY = plotH / Math.max(rows - 1, 1);
  for (let i = 0; i < rows; i++) {
    for (let j = 0; j < cols; j++) {
      if (!grid.missing[i][j]) continue;
      const cx = px(grid.es_axis[j]), cy = py(grid.rho_axis[i]);
      svg.append(s("rect", {
        class: "masked-cell",
        x: fmt(Math.max(padL, cx - stepX / 2)),
        y: fmt(Math.max(padT, cy - stepY / 2)),
        width: fmt(stepX), height: fmt(stepY), fill: "#cccccc",
      }, s("title", {}, "not estimable")));
    }
  }

  // solid level lines for the effect surface
  for (const level of grid.effect_levels) {
    const segs = traceLevel(grid.effect_surface, level);
    if (segs.length === 0) continue;
    svg.append(s("path", {
      class: "effect-line", d: levelPath(segs, toPixel),
      fill: "none", stroke: "#1f4f82", "stroke-width": 1.6,
    }, s("title", {}, `effect = ${fmt(level)}`)));
  }

  // dashed level lines for the p-value surface
  for (const level of grid.p_levels) {
    const segs = traceLevel(grid.pvalue_surface, level);
    if (segs.length === 0) continue;
    svg.append(s("path", {
      class: "p-line", d: levelPath(segs, toPixel),
      fill: "none", stroke: "#b3322a", "stroke-width": 1.4,
      "stroke-dasharray": "6 4",
    }, s("title", {}, `p = ${fmt(level)}`)));
  }

  // observed confounders as dots with hover names
  for (const pt of grid.observed_points) {
    if (pt.es < esLo || pt.es > esHi || pt.rho < rhoLo || pt.rho > rhoHi) {
      continue;
    }
    svg.append(s("circle", {
      class: "observed-point", cx: fmt(px(pt.es)), cy: fmt(py(pt.rho)),
      r: 3.5, fill: "#333",
    }, s("title", {}, pt.name)));
  }

  // axes: ticks at the grid values
  for (const es of grid.es_axis) {
    svg.append(s("text", {
      x: fmt(px(es)), y: height - padB + 16, "text-anchor": "middle",
      "font-size": 10, fill: "#444",
    }, fmt(es)));
  }
  for (const rho of grid.rho_axis) {
    svg.append(s("text", {
      x: padL - 6, y: fmt(py(rho) + 3), "text-anchor": "end",
      "font-size": 10, fill: "#444",
    }, fmt(rho)));
  }
  svg.append(s("text", {
    x: padL + plotW / 2, y: height - padB + 32, "text-anchor": "middle",
    "font-size": 11, fill: "#222",
  }, "confounder effect size on treatment"));
  svg.append(s("text", {
    x: 12, y: padT + plotH / 2, "font-size": 11, fill: "#222",
    transform: `rotate(-90 12 ${padT + plotH / 2})`, "text-anchor": "middle",
  }, "correlation with outcome residual"));

  // legend
  const ly = height - 16;
  const legend = s("g", { class: "legend", "font-size": 10 });
  legend.append(
    s("line", { x1: padL, y1: ly, x2: padL + 22, y2: ly,
                stroke: "#1f4f82", "stroke-width": 1.6 }),
    s("text", { x: padL + 27, y: ly + 3, fill: "#222" }, "effect level"),
    s("line", { x1: padL + 100, y1: ly, x2: padL + 122, y2: ly,
                stroke: "#b3322a", "stroke-width": 1.4,
                "stroke-dasharray": "6 4" }),
    s("text", { x: padL + 127, y: ly + 3, fill: "#222" }, "p-value level"),
    s("circle", { cx: padL + 212, cy: ly, r: 3.5, fill: "#333" }),
    s("text", { x: padL + 220, y: ly + 3, fill: "#222" },
      "observed confounder"),
  );
  svg.append(legend);
  return svg;
}

export interface CutHandles {
  lower: number | null;
  upper: number | null;
}

/** Density overlay for one confounder with draggable trim cuts. */
export function densityPlot(confounder: string, curves: DensityCurve[],
                            cuts: CutHandles,
                            onCut: (c: CutHandles) => void): SVGElement {
  const width = 360, height = 170;
  const padL = 10, padR = 10, padT = 8, padB = 22;
  const plotW = width - padL - padR;
  const plotH = height - padT - padB;
  const xs = curves.flatMap((c) => c.grid);
  const ys = curves.flatMap((c) => c.density);
  const [xLo, xHi] = extent(xs);
  const [, yHi] = extent([0, ...ys]);
  const px = (x: number) => padL + ((x - xLo) / (xHi - xLo)) * plotW;
  const py = (y: number) => padT + plotH - (y / yHi) * plotH;
  const fromPx = (x: number) => xLo + ((x - padL) / plotW) * (xHi - xLo);

  const svg = s("svg", {
    xmlns: "http://www.w3.org/2000/svg", width, height,
    viewBox: `0 0 ${width} ${height}`, class: "density-plot",
    "data-confounder": confounder,
  });
  svg.append(s("rect", { x: padL, y: padT, width: plotW, height: plotH,
                         fill: "#fcfcfc", stroke: "#bbb" }));

  const colors: Record<string, string> = {
    control: "#c56a11", treated: "#3a6ea5",
  };
  for (const c of curves) {
    const d = c.grid.map((x, i) =>
      `${i === 0 ? "M" : "L"}${fmt(px(x))} ${fmt(py(c.density[i]))}`).join("");
    svg.append(s("path", {
      class: `density-${c.group}`, d, fill: "none",
      stroke: colors[c.group] ?? "#555", "stroke-width": 1.5,
    }, s("title", {}, `${confounder} (${c.group})`)));
  }

  svg.append(s("text", { x: padL + 4, y: padT + 12, "font-size": 10,
                         fill: colors.control }, "control"));
  svg.append(s("text", { x: padL + 52, y: padT + 12, "font-size": 10,
                         fill: colors.treated }, "treated"));

  const handle = (kind: "lower" | "upper", value: number) => {
    const g = s("g", { class: `cut-handle cut-${kind}`, cursor: "ew-resize" });
    const line = s("line", {
      x1: fmt(px(value)), y1: padT, x2: fmt(px(value)), y2: padT + plotH,
      stroke: "#222", "stroke-width": 1.2, "stroke-dasharray": "3 3",
    });
    // wide invisible grab zone so the line is easy to catch
    const grab = s("rect", {
      x: fmt(px(value) - 6), y: padT, width: 12, height: plotH,
      fill: "transparent",
    });
    g.append(line, grab, s("title", {}, `${kind} cut at ${fmt(value)}`));
    let dragging = false;
    g.addEventListener("pointerdown", (e) => {
      dragging = true;
      (e.target as Element).setPointerCapture?.((e as PointerEvent).pointerId);
    });
    svg.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      const rect = svg.getBoundingClientRect();
      const x = Math.min(Math.max((e as PointerEvent).clientX - rect.left, padL),
                         padL + plotW);
      line.setAttribute("x1", fmt(x));
      line.setAttribute("x2", fmt(x));
      grab.setAttribute("x", fmt(x - 6));
    });
    svg.addEventListener("pointerup", (e) => {
      if (!dragging) return;
      dragging = false;
      const rect = svg.getBoundingClientRect();
      const x = Math.min(Math.max((e as PointerEvent).clientX - rect.left, padL),
                         padL + plotW);
      const v = fromPx(x);
      onCut(kind === "lower" ? { ...cuts, lower: v } : { ...cuts, upper: v });
    });
    return g;
  };

  svg.append(handle("lower", cuts.lower ?? xLo));
  svg.append(handle("upper", cuts.upper ?? xHi));
  return svg;
}
