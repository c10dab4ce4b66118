import { h } from "../dom.js";
import type { Wizard } from "../wizard.js";

export function beforeYouGoPage(ctx: Wizard): HTMLElement {
  const st = ctx.state;
  const items: HTMLElement[] = [];
  if (st.effect) {
    items.push(h("li", {},
      `Effect estimate ${st.effect.effect.toFixed(4)} `,
      `(${st.effect.estimand}, ${st.effect.algorithm_used}, `,
      `n = ${st.effect.n_used}).`));
  }
  if (st.balance) {
    items.push(h("li", {},
      `Recommended weighting: ${st.balance.recommended}.`));
  }
  if (st.grid) {
    items.push(h("li", {},
      `Sensitivity grid computed over ${st.grid.es_axis.length} x `,
      `${st.grid.rho_axis.length} cells.`));
  }

  return h("section", { class: "page page-before-you-go" },
    h("h2", {}, "Before You Go"),
    items.length
      ? h("ul", { class: "wrapup" }, ...items)
      : h("p", { class: "muted" }, "Nothing estimated yet."),
    h("p", {},
      "The full analysis lives in the report, and the data with weight ",
      "columns attached can be re-analyzed anywhere:"),
    h("p", { class: "report-actions" },
      h("a", { class: "button", href: ctx.client.reportUrl(st.sessionId),
               target: "_blank" }, "Open report"),
      h("a", { class: "button",
               href: ctx.client.exportUrl(st.sessionId, "csv") },
        "Download data + weights")),
    h("p", { class: "muted" },
      "Sessions are kept in server memory only; export anything you ",
      "want to keep before closing this tab."));
}
