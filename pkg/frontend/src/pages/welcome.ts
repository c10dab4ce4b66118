import { h } from "../dom.js";
import type { Wizard } from "../wizard.js";

export function welcomePage(ctx: Wizard): HTMLElement {
  return h("section", { class: "page page-welcome" },
    h("h2", {}, "Weighted analysis of a two-group study"),
    h("p", {},
      "This wizard walks one analysis from raw table to effect estimate: ",
      "load data, assign variable roles, check group overlap, pick a ",
      "weighting algorithm from its balance diagnostics, estimate the ",
      "treatment effect, and probe how a confounder you did not measure ",
      "could change the conclusion."),
    h("p", {},
      "Each step unlocks when the server has what it needs; going back ",
      "and changing something re-locks everything downstream."),
    h("button", {
      class: "primary", "data-action": "start",
      click: () => ctx.goto("Data"),
    }, "Start"),
  );
}
