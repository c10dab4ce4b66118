import type { SpecBody } from "../api.js";
import { h } from "../dom.js";
import type { Wizard } from "../wizard.js";

interface Draft {
  treatment: string;
  controlLabel: string;
  treatmentLabel: string;
  outcome: string;
  numeric: Set<string>;
  categorical: Set<string>;
  references: Map<string, string>;
  estimand: "ATE" | "ATT";
  fieldErrors: { field: string; message: string }[];
}

const drafts = new WeakMap<Wizard, Draft>();

function draft(ctx: Wizard): Draft {
  let d = drafts.get(ctx);
  if (!d) {
    d = {
      treatment: "", controlLabel: "", treatmentLabel: "", outcome: "",
      numeric: new Set(), categorical: new Set(), references: new Map(),
      estimand: "ATT", fieldErrors: [],
    };
    drafts.set(ctx, d);
  }
  return d;
}

/** Distinct rendered values of one column, from the server preview. */
function seenValues(ctx: Wizard, column: string): string[] {
  const data = ctx.state.data;
  if (!data) return [];
  const j = data.columns.indexOf(column);
  if (j < 0) return [];
  const seen = new Set<string>();
  for (const row of data.head) {
    if (row[j] !== "") seen.add(row[j]);
  }
  const counts = data.summary.categorical[column];
  if (counts) for (const level of Object.keys(counts.counts)) seen.add(level);
  return [...seen].sort();
}

function select(value: string, options: string[], attrs: Record<string, string>,
                onPick: (v: string) => void): HTMLElement {
  const sel = h("select", {
    ...attrs,
    change: (e: Event) => onPick((e.target as HTMLSelectElement).value),
  },
    h("option", { value: "" }, "(choose)"),
    ...options.map((o) => h("option", { value: o, selected: o === value }, o)));
  return sel;
}

function multiSelect(chosen: Set<string>, options: string[],
                     attrs: Record<string, string>,
                     onChange: () => void): HTMLElement {
  return h("select", {
    ...attrs, multiple: true, size: Math.min(options.length, 8),
    change: (e: Event) => {
      chosen.clear();
      for (const o of (e.target as HTMLSelectElement).selectedOptions) {
        chosen.add(o.value);
      }
      onChange();
    },
  },
    ...options.map((o) =>
      h("option", { value: o, selected: chosen.has(o) }, o)));
}

export function modelSetupPage(ctx: Wizard): HTMLElement {
  const st = ctx.state;
  const d = draft(ctx);
  const columns = st.data ? st.data.columns : [];
  const confounderChoices = columns.filter(
    (c) => c !== d.treatment && c !== d.outcome);

  const totalConfounders = d.numeric.size + d.categorical.size;

  const labelPicker = (value: string, field: string,
                       onPick: (v: string) => void) => {
    const id = `labels-${field}`;
    const input = h("input", {
      type: "text", list: id, value, "data-field": field,
      change: (e: Event) => onPick((e.target as HTMLInputElement).value),
    });
    const list = h("datalist", { id },
      ...seenValues(ctx, d.treatment).map((v) => h("option", { value: v })));
    return h("span", {}, input, list);
  };

  const submit = async () => {
    d.fieldErrors = [];
    const body: SpecBody = {
      treatment_var: d.treatment,
      control_label: d.controlLabel,
      treatment_label: d.treatmentLabel,
      outcome_var: d.outcome,
      numeric_confounders: [...d.numeric],
      categorical_confounders: [...d.categorical].map((name) => ({
        name, reference: d.references.get(name) ?? "",
      })),
      estimand: d.estimand,
    };
    const view = await ctx.run(
      () => ctx.client.setSpec(st.sessionId, body),
      (errors) => { d.fieldErrors = errors; ctx.render(); });
    if (view) {
      st.spec = view;
      st.overlap = null;
      ctx.setStage(view.stage);
      ctx.render();
    }
  };

  const left = h("div", { class: "setup-form" },
    h("label", {}, "Treatment variable: ",
      select(d.treatment, columns, { "data-field": "treatment_var" },
        (v) => { d.treatment = v; ctx.render(); })),
    h("label", {}, "Control group label: ",
      labelPicker(d.controlLabel, "control_label",
        (v) => { d.controlLabel = v; })),
    h("label", {}, "Treated group label: ",
      labelPicker(d.treatmentLabel, "treatment_label",
        (v) => { d.treatmentLabel = v; })),
    h("label", {}, "Outcome variable: ",
      select(d.outcome, columns, { "data-field": "outcome_var" },
        (v) => { d.outcome = v; ctx.render(); })),
    h("label", {}, "Numeric confounders: ",
      multiSelect(d.numeric, confounderChoices,
        { "data-field": "numeric_confounders" }, () => ctx.render())),
    h("label", {}, "Categorical confounders: ",
      multiSelect(d.categorical, confounderChoices,
        { "data-field": "categorical_confounders" }, () => ctx.render())),
    ...[...d.categorical].map((name) =>
      h("label", { class: "reference-picker" },
        `Reference level for ${name}: `,
        h("input", {
          type: "text", "data-reference": name,
          value: d.references.get(name) ?? "",
          change: (e: Event) => {
            d.references.set(name, (e.target as HTMLInputElement).value);
          },
        }))),
    h("div", { class: "estimand" },
      h("span", {}, "Estimand: "),
      ...(["ATE", "ATT"] as const).map((est) => h("label", { class: "radio" },
        h("input", {
          type: "radio", name: "estimand", value: est,
          checked: d.estimand === est,
          change: () => { d.estimand = est; },
        }), est))),
    h("button", {
      class: "primary", "data-action": "apply-spec", click: () => void submit(),
    }, "Apply model set-up"),
  );

  if (totalConfounders > 0 && totalConfounders < 2) {
    left.prepend(h("div", { class: "warning-banner" },
      "Select at least two confounders to continue."));
  }
  if (d.fieldErrors.length) {
    left.prepend(h("div", { class: "error-banner" },
      h("strong", {}, "The set-up was not accepted:"),
      h("ul", {}, ...d.fieldErrors.map((e) =>
        h("li", {}, e.field ? `${e.field}: ${e.message}` : e.message)))));
  }

  const right = h("div", { class: "setup-echo" });
  if (st.spec) {
    right.append(
      h("h3", {}, "Models the server will fit"),
      h("p", { class: "formula" },
        h("code", { "data-formula": "treatment" }, st.spec.treatment_formula)),
      h("p", { class: "formula" },
        h("code", { "data-formula": "outcome" }, st.spec.outcome_formula)),
      h("p", {},
        `${st.spec.n} complete cases (${st.spec.dropped_rows} dropped), `,
        `estimand ${st.spec.estimand}.`),
      h("button", {
        class: "primary", "data-action": "to-overlap",
        click: () => ctx.goto("Overlap"),
      }, "Continue to Overlap"));
  } else {
    right.append(h("p", { class: "muted" },
      "Apply the set-up to see the model formulas."));
  }

  return h("section", { class: "page page-setup" },
    h("h2", {}, "Model Set-Up"),
    h("div", { class: "two-col" }, left, right));
}
