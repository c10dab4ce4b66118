import type { DataView, ParseOptions } from "../api.js";
import { h, table } from "../dom.js";
import type { Wizard } from "../wizard.js";

interface PageMemory {
  opts: ParseOptions;
  previewRows: number;
  /* re-issuable last load, so the preview-row count can change */
  reload: ((rows: number) => Promise<DataView>) | null;
  file: File | null;
}

const memory = new WeakMap<Wizard, PageMemory>();

function mem(ctx: Wizard): PageMemory {
  let m = memory.get(ctx);
  if (!m) {
    m = {
      opts: { header: true, separator: "comma", quote: "double" },
      previewRows: 5, reload: null, file: null,
    };
    memory.set(ctx, m);
  }
  return m;
}

function radios(name: string, options: [string, string][], current: string,
                onPick: (v: string) => void): HTMLElement {
  return h("span", { class: "radio-group" },
    ...options.map(([value, label]) => h("label", { class: "radio" },
      h("input", {
        type: "radio", name, value, checked: value === current,
        change: () => onPick(value),
      }),
      label)));
}

export function dataPage(ctx: Wizard): HTMLElement {
  const m = mem(ctx);
  const st = ctx.state;

  const applyView = (view: DataView) => {
    st.data = view;
    ctx.setStage(view.stage);
    ctx.render();
  };

  const doUpload = async (file: File) => {
    m.file = file;
    m.reload = (rows) => ctx.client.uploadData(st.sessionId, file, m.opts, rows);
    const view = await ctx.run(() => m.reload!(m.previewRows));
    if (view) applyView(view);
  };

  const doExample = async () => {
    m.reload = (rows) =>
      ctx.client.loadExample(st.sessionId, 1, 2000, rows);
    const view = await ctx.run(() => m.reload!(m.previewRows));
    if (view) applyView(view);
  };

  const fileInput = h("input", {
    type: "file", accept: ".csv,.tsv,.txt", "data-action": "upload",
    change: (e: Event) => {
      const f = (e.target as HTMLInputElement).files?.[0];
      if (f) void doUpload(f);
    },
  });

  const controls = h("div", { class: "data-controls" },
    h("div", {}, h("strong", {}, "Upload a delimited text file"), fileInput),
    h("div", { class: "parse-options" },
      h("span", {}, "Header row: "),
      radios("header", [["yes", "yes"], ["no", "no"]],
        m.opts.header ? "yes" : "no",
        (v) => { m.opts.header = v === "yes"; }),
      h("span", {}, " Separator: "),
      radios("separator",
        [["comma", "comma"], ["semicolon", "semicolon"], ["tab", "tab"]],
        m.opts.separator,
        (v) => { m.opts.separator = v as ParseOptions["separator"]; }),
      h("span", {}, " Quote: "),
      radios("quote", [["double", "double"], ["single", "single"]],
        m.opts.quote,
        (v) => { m.opts.quote = v as ParseOptions["quote"]; })),
    h("div", {},
      h("button", {
        class: "secondary", "data-action": "load-example",
        click: () => void doExample(),
      }, "Load Example Data")),
  );

  const body = h("section", { class: "page page-data" },
    h("h2", {}, "Data"), controls);

  if (st.data) {
    const d = st.data;
    body.append(h("p", { class: "data-note" },
      `${d.n_rows} observations, ${d.columns.length} variables.`));

    const numericRows = Object.entries(d.summary.numeric).map(
      ([name, v]) => [name, v.mean, v.sd, v.median, v.min, v.max, v.missing]
        .map((x, i) => (i === 0 ? String(x) : String(x)))) as string[][];
    if (numericRows.length) {
      body.append(h("h3", {}, "Numeric variables"),
        table(["variable", "mean", "sd", "median", "min", "max", "missing"],
          numericRows, "tbl summary-table"));
    }
    const catRows = Object.entries(d.summary.categorical).map(([name, v]) =>
      [name,
       Object.entries(v.counts).map(([l, c]) => `${l}: ${c}`).join(", "),
       String(v.missing)]);
    if (catRows.length) {
      body.append(h("h3", {}, "Categorical variables"),
        table(["variable", "level counts", "missing"], catRows,
          "tbl summary-table"));
    }

    const previewInput = h("input", {
      type: "number", min: 1, max: 100, value: m.previewRows,
      "data-action": "preview-rows",
      change: async (e: Event) => {
        m.previewRows = Number((e.target as HTMLInputElement).value) || 5;
        if (m.reload) {
          const view = await ctx.run(() => m.reload!(m.previewRows));
          if (view) applyView(view);
        }
      },
    });
    body.append(h("h3", {}, "Preview"),
      h("label", {}, "Number of observations to view: ", previewInput),
      table(d.columns, d.head, "tbl head-table"),
      h("div", { class: "page-next" },
        h("button", {
          class: "primary", "data-action": "to-model",
          click: () => ctx.goto("ModelSetUp"),
        }, "Continue to Model Set-Up")));
  }
  return body;
}
