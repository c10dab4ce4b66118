import type { BalanceView } from "../api.js";
import { h, table } from "../dom.js";
import type { Wizard } from "../wizard.js";

const show = (v: number | null) => (v === null ? "" : v.toFixed(3));

function metricTable(view: BalanceView, metric: "smd" | "ks"): HTMLElement {
  const mat = view[metric];
  const rows = view.row_names.map((name, i) =>
    [name, ...mat[i].map(show)]);
  return table(["variable", ...view.columns], rows, "tbl balance-table");
}

function summaryTable(view: BalanceView): HTMLElement {
  const rows = view.columns.map((name, j) => {
    const e = view.ess[name];
    return [
      name,
      show(view.mean_smd[j]), show(view.max_smd[j]),
      show(view.mean_ks[j]), show(view.max_ks[j]),
      e ? e.total.toFixed(1) : "",
      e ? e.percent_rendered : "",
    ];
  });
  return table(
    ["weighting", "mean SMD", "max SMD", "mean KS", "max KS",
     "ESS", "ESS %"],
    rows, "tbl balance-summary");
}

export function balancePage(ctx: Wizard): HTMLElement {
  const st = ctx.state;

  if (!st.balance && !st.loading.has("balance")) {
    st.loading.add("balance");
    void ctx.run(() => ctx.client.balance(st.sessionId)).then((view) => {
      st.loading.delete("balance");
      if (view) {
        st.balance = view;
        if (st.chosenAlgorithm === null) {
          st.chosenAlgorithm = view.recommended;
        }
      }
      ctx.render();
    });
  }

  const body = h("section", { class: "page page-balance" },
    h("h2", {}, "Balance"));
  const view = st.balance;
  if (!view) {
    body.append(h("p", { class: "muted" }, "Loading balance tables..."));
    return body;
  }

  body.append(
    h("h3", {}, "Standardized mean differences"),
    metricTable(view, "smd"),
    h("h3", {}, "Kolmogorov-Smirnov statistics"),
    metricTable(view, "ks"),
    h("h3", {}, "Summary and effective sample size"),
    summaryTable(view));

  const failures = Object.entries(view.failures);
  if (failures.length) {
    body.append(h("div", { class: "warning-banner" },
      "Some algorithms failed: ",
      failures.map(([aid, msg]) => `${aid} (${msg})`).join("; ")));
  }

  const candidates = view.columns.filter((c) => c !== "Unweighted");
  body.append(
    h("h3", {}, "Algorithm for the outcome model"),
    h("p", { class: "rationale", "data-role": "rationale" },
      `Recommended: ${view.recommended}. ${view.rationale}`),
    h("div", { class: "algo-radio-list" },
      ...candidates.map((aid) => h("label", { class: "radio" },
        h("input", {
          type: "radio", name: "algorithm", value: aid,
          checked: (st.chosenAlgorithm ?? view.recommended) === aid,
          change: () => { st.chosenAlgorithm = aid; },
        }), aid))),
    h("div", { class: "page-next" },
      h("button", {
        class: "primary", "data-action": "to-outcome",
        click: () => ctx.goto("Outcome"),
      }, "Continue to Outcome")));
  return body;
}
