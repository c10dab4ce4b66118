import { contourPlot } from "../charts.js";
import { h, table } from "../dom.js";
import type { Wizard } from "../wizard.js";

interface SensDraft {
  tab: "effect" | "sensitivity";
  esMin: number; esMax: number; esPoints: number;
  rhoMin: number; rhoMax: number; rhoPoints: number;
  draws: number; seed: number;
  poll: ReturnType<typeof setInterval> | null;
}

const drafts = new WeakMap<Wizard, SensDraft>();

function draft(ctx: Wizard): SensDraft {
  let d = drafts.get(ctx);
  if (!d) {
    d = {
      tab: "effect",
      esMin: -0.6, esMax: 0.6, esPoints: 13,
      rhoMin: 0, rhoMax: 0.6, rhoPoints: 13,
      draws: 20, seed: 0, poll: null,
    };
    drafts.set(ctx, d);
  }
  return d;
}

const POLL_MS = 2000;

function linspace(lo: number, hi: number, n: number): number[] {
  if (n <= 1) return [lo];
  const out: number[] = [];
  for (let i = 0; i < n; i++) {
    out.push(Math.round((lo + (i * (hi - lo)) / (n - 1)) * 1e6) / 1e6);
  }
  return out;
}

const num = (v: number) => v.toFixed(4);

export function outcomePage(ctx: Wizard): HTMLElement {
  const st = ctx.state;
  const d = draft(ctx);

  const body = h("section", { class: "page page-outcome" },
    h("h2", {}, "Outcome"));

  body.append(h("div", { class: "tabs" },
    h("button", {
      class: d.tab === "effect" ? "tab active" : "tab",
      click: () => { d.tab = "effect"; ctx.render(); },
    }, "Effect estimate"),
    h("button", {
      class: d.tab === "sensitivity" ? "tab active" : "tab",
      "data-action": "sensitivity-tab",
      click: () => { d.tab = "sensitivity"; ctx.render(); },
    }, "Sensitivity")));

  if (d.tab === "effect") {
    const algo = st.chosenAlgorithm ?? "auto";
    body.append(
      h("p", {}, `Weighted regression using ${algo === "auto"
        ? "the recommended algorithm" : algo}.`),
      h("button", {
        class: "primary", "data-action": "estimate",
        click: () => {
          void ctx.run(() => ctx.client.estimate(st.sessionId, algo))
            .then((res) => {
              if (res) {
                st.effect = res;
                ctx.setStage(res.stage);
              }
              ctx.render();
            });
        },
      }, st.effect ? "Re-estimate" : "Estimate effect"));

    if (st.effect) {
      const e = st.effect;
      body.append(
        h("h3", {}, "Coefficients"),
        table(["term", "estimate", "std. error", "t", "p"],
          e.rows.map((r) => [
            r.term, num(r.estimate), num(r.se),
            r.t === null ? "" : num(r.t), num(r.p),
          ]), "tbl coef-table"),
        h("p", { "data-role": "effect-line" },
          `Estimated ${e.estimand} effect: ${num(e.effect)} `,
          `(${e.algorithm_used}, n = ${e.n_used}).`),
        h("div", { class: "report-actions" },
          h("a", {
            class: "button", "data-action": "report",
            href: ctx.client.reportUrl(st.sessionId), target: "_blank",
          }, "Generate report"),
          h("a", {
            class: "button", href: ctx.client.exportUrl(st.sessionId, "csv"),
          }, "Download data + weights (csv)"),
          h("a", {
            class: "button", href: ctx.client.exportUrl(st.sessionId, "tsv"),
          }, "Download data + weights (tsv)")),
        h("div", { class: "page-next" },
          h("button", {
            class: "secondary", "data-action": "to-before-you-go",
            click: () => ctx.goto("BeforeYouGo"),
          }, "Wrap up")));
    }
    return body;
  }

  // sensitivity tab
  if (!st.effect) {
    body.append(h("p", { class: "muted" },
      "Estimate the effect first; the sensitivity analysis perturbs it."));
    return body;
  }

  const numberInput = (label: string, value: number, step: string,
                       set: (v: number) => void) =>
    h("label", { class: "grid-control" }, `${label}: `,
      h("input", {
        type: "number", value, step,
        change: (e: Event) => {
          set(Number((e.target as HTMLInputElement).value));
        },
      }));

  const stopPolling = () => {
    if (d.poll !== null) {
      clearInterval(d.poll);
      d.poll = null;
    }
  };

  const pollOnce = async () => {
    const res = await ctx.run(() => ctx.client.pollSensitivity(st.sessionId));
    if (!res) { stopPolling(); ctx.render(); return; }
    if (res.status === "running") {
      st.jobProgress = res.progress;
      ctx.render();
      return;
    }
    stopPolling();
    st.jobProgress = null;
    if (res.status === "done") {
      st.grid = res;
      ctx.setStage(res.stage);
    }
    ctx.render();
  };

  const start = async () => {
    const res = await ctx.run(() => ctx.client.startSensitivity(st.sessionId, {
      es_axis: linspace(d.esMin, d.esMax, d.esPoints),
      rho_axis: linspace(d.rhoMin, d.rhoMax, d.rhoPoints),
      draws: d.draws,
      seed: d.seed,
    }));
    if (!res) return;
    st.grid = null;
    st.jobProgress = { done: 0, total: res.cells ?? 0 };
    stopPolling();
    d.poll = setInterval(() => void pollOnce(), POLL_MS);
    ctx.render();
  };

  body.append(h("div", { class: "grid-controls" },
    numberInput("effect-size axis from", d.esMin, "0.1", (v) => { d.esMin = v; }),
    numberInput("to", d.esMax, "0.1", (v) => { d.esMax = v; }),
    numberInput("points", d.esPoints, "1", (v) => { d.esPoints = v; }),
    numberInput("correlation axis from", d.rhoMin, "0.1", (v) => { d.rhoMin = v; }),
    numberInput("to", d.rhoMax, "0.1", (v) => { d.rhoMax = v; }),
    numberInput("points", d.rhoPoints, "1", (v) => { d.rhoPoints = v; }),
    numberInput("draws per cell", d.draws, "1", (v) => { d.draws = v; }),
    numberInput("seed", d.seed, "1", (v) => { d.seed = v; }),
    h("button", {
      class: "primary", "data-action": "start-sensitivity",
      click: () => void start(),
    }, "Run sensitivity analysis")));

  if (st.jobProgress) {
    const { done, total } = st.jobProgress;
    const pct = total > 0 ? Math.round((100 * done) / total) : 0;
    body.append(h("div", { class: "progress", "data-role": "progress" },
      h("div", { class: "progress-bar", style: `width:${pct}%` }),
      h("span", {}, ` ${done} of ${total} cells`),
      h("button", {
        class: "secondary", "data-action": "cancel-sensitivity",
        click: () => {
          void ctx.run(() => ctx.client.cancelSensitivity(st.sessionId))
            .then(() => { stopPolling(); st.jobProgress = null; ctx.render(); });
        },
      }, "Cancel")));
  }

  if (st.grid) {
    const g = st.grid;
    body.append(
      h("div", { class: "contour-wrap" }, contourPlot(g)),
      h("p", { "data-role": "sensitivity-caption" },
        `Baseline effect ${num(g.baseline.effect)} (p = ${num(g.baseline.p)}), `,
        `${g.draws_per_cell} draws per cell. Solid lines: effect levels. `,
        `Dashed lines: p-value levels. Dots: observed confounders.`));
  }
  return body;
}
