import type { DensityCurve, TrimRuleView } from "../api.js";
import { densityPlot } from "../charts.js";
import { h, table } from "../dom.js";
import type { Wizard } from "../wizard.js";

const ALGORITHM_IDS = [
  "LR", "CBPS1", "CBPS2", "CBPS3", "GBM_ES", "GBM_KS", "EB1", "EB2", "EB3",
];

interface PageMemory {
  tab: "densities" | "groups";
  pendingTrims: Map<string, TrimRuleView>;
  debounce: ReturnType<typeof setTimeout> | null;
  chosenAlgorithms: Set<string>;
}

const memory = new WeakMap<Wizard, PageMemory>();

function mem(ctx: Wizard): PageMemory {
  let m = memory.get(ctx);
  if (!m) {
    m = {
      tab: "densities", pendingTrims: new Map(), debounce: null,
      chosenAlgorithms: new Set(ALGORITHM_IDS),
    };
    memory.set(ctx, m);
  }
  return m;
}

const TRIM_DEBOUNCE_MS = 300;

export function overlapPage(ctx: Wizard): HTMLElement {
  const st = ctx.state;
  const m = mem(ctx);

  if (!st.overlap && !st.loading.has("overlap")) {
    st.loading.add("overlap");
    void ctx.run(() => ctx.client.overlap(st.sessionId)).then((view) => {
      st.loading.delete("overlap");
      if (view) {
        st.overlap = view;
        m.pendingTrims = new Map(
          view.trim_rules.map((r) => [r.confounder, { ...r }]));
      }
      ctx.render();
    });
  }

  const body = h("section", { class: "page page-overlap" },
    h("h2", {}, "Overlap"));

  const view = st.overlap;
  if (!view) {
    body.append(h("p", { class: "muted" }, "Loading density estimates..."));
    return body;
  }

  for (const [name, message] of Object.entries(view.flags)) {
    body.append(h("div", { class: "warning-banner", "data-flag": name },
      `${name}: ${message}`));
  }

  const tabs = h("div", { class: "tabs" },
    h("button", {
      class: m.tab === "densities" ? "tab active" : "tab",
      click: () => { m.tab = "densities"; ctx.render(); },
    }, "Densities"),
    h("button", {
      class: m.tab === "groups" ? "tab active" : "tab",
      "data-action": "groups-tab",
      click: () => { m.tab = "groups"; ctx.render(); },
    }, "Group summaries"));
  body.append(tabs);

  const scheduleTrims = () => {
    if (m.debounce !== null) clearTimeout(m.debounce);
    m.debounce = setTimeout(() => {
      m.debounce = null;
      const rules = [...m.pendingTrims.values()].filter(
        (r) => r.lower_cut !== null || r.upper_cut !== null);
      void ctx.run(() => ctx.client.setTrims(st.sessionId, rules))
        .then((res) => {
          if (res) {
            ctx.setStage(res.stage);
            st.overlap = null; // all curves re-fetch against trimmed data
          }
          ctx.render();
        });
    }, TRIM_DEBOUNCE_MS);
  };

  if (m.tab === "densities") {
    const byConfounder = new Map<string, DensityCurve[]>();
    for (const c of view.curves) {
      const list = byConfounder.get(c.confounder) ?? [];
      list.push(c);
      byConfounder.set(c.confounder, list);
    }
    const grid = h("div", { class: "density-grid" });
    for (const [name, curves] of byConfounder) {
      const rule = m.pendingTrims.get(name) ??
        { confounder: name, lower_cut: null, upper_cut: null };
      const plot = densityPlot(name, curves,
        { lower: rule.lower_cut, upper: rule.upper_cut },
        (cuts) => {
          m.pendingTrims.set(name, {
            confounder: name, lower_cut: cuts.lower, upper_cut: cuts.upper,
          });
          scheduleTrims();
        });
      grid.append(h("figure", { class: "density-figure" },
        h("figcaption", {}, name), plot));
    }
    body.append(grid);
    const active = [...m.pendingTrims.values()].filter(
      (r) => r.lower_cut !== null || r.upper_cut !== null);
    if (active.length) {
      body.append(h("div", { class: "trim-list" },
        h("strong", {}, `${view.n} rows kept. Active cuts: `),
        h("span", {}, active.map((r) => {
          const lo = r.lower_cut === null ? "" : `${r.lower_cut.toFixed(2)} < `;
          const hi = r.upper_cut === null ? "" : ` < ${r.upper_cut.toFixed(2)}`;
          return `${lo}${r.confounder}${hi}`;
        }).join("; ")),
        h("button", {
          class: "secondary", "data-action": "clear-trims",
          click: () => {
            m.pendingTrims.clear();
            scheduleTrims();
          },
        }, "Clear cuts")));
    }
  } else {
    const names = Object.keys(view.groups.control?.means ?? {});
    const rows = names.map((name) => [
      name,
      String(view.groups.control.means[name]),
      String(view.groups.treated.means[name]),
    ]);
    body.append(
      h("p", {},
        `control n = ${view.groups.control.n}, `,
        `treated n = ${view.groups.treated.n}`),
      table(["variable", "control mean", "treated mean"], rows,
        "tbl group-summary"));
  }

  const algoPicks = h("div", { class: "algo-picks" },
    ...ALGORITHM_IDS.map((aid) => h("label", { class: "radio" },
      h("input", {
        type: "checkbox", value: aid, checked: m.chosenAlgorithms.has(aid),
        change: (e: Event) => {
          const cb = e.target as HTMLInputElement;
          if (cb.checked) m.chosenAlgorithms.add(aid);
          else m.chosenAlgorithms.delete(aid);
        },
      }), aid)));

  body.append(h("div", { class: "weights-footer" },
    h("h3", {}, "Weighting algorithms to fit"),
    algoPicks,
    h("button", {
      class: "primary", "data-action": "compute-weights",
      click: () => {
        void ctx.run(() => ctx.client.computeWeights(
          st.sessionId, [...m.chosenAlgorithms])).then((res) => {
            if (res) {
              st.weights = res;
              st.balance = null;
              ctx.setStage(res.stage);
              ctx.goto("Balance");
            }
          });
      },
    }, "Compute weights")));
  return body;
}
