/** Tiny DOM builders; no framework, no templating. */

type Attrs = Record<string, string | number | boolean | EventListener>;
type Child = Node | string | null | undefined;

export function h(tag: string, attrs: Attrs = {}, ...children: Child[]): HTMLElement {
  const el = document.createElement(tag);
  applyAttrs(el, attrs);
  append(el, children);
  return el;
}

export const SVG_NS = "http://www.w3.org/2000/svg";

export function s(tag: string, attrs: Attrs = {}, ...children: Child[]): SVGElement {
  const el = document.createElementNS(SVG_NS, tag) as SVGElement;
  applyAttrs(el, attrs);
  append(el, children);
  return el;
}

function applyAttrs(el: Element, attrs: Attrs): void {
  for (const [k, v] of Object.entries(attrs)) {
    if (typeof v === "function") {
      el.addEventListener(k, v as EventListener);
    } else if (typeof v === "boolean") {
      // presence attributes: disabled, checked, multiple, selected
      if (v) el.setAttribute(k, "");
      if (k === "checked") (el as HTMLInputElement).checked = v;
      if (k === "disabled") (el as HTMLInputElement).disabled = v;
      if (k === "selected") (el as HTMLOptionElement).selected = v;
    } else {
      el.setAttribute(k, String(v));
    }
  }
}

function append(el: Element, children: Child[]): void {
  for (const c of children) {
    if (c === null || c === undefined) continue;
    el.append(typeof c === "string" ? document.createTextNode(c) : c);
  }
}

/** Plain data table; header row then string cells. */
export function table(headers: string[], rows: (string | number | null)[][],
                      className = "tbl"): HTMLElement {
  const thead = h("thead", {}, h("tr", {},
    ...headers.map((x) => h("th", {}, x))));
  const tbody = h("tbody", {},
    ...rows.map((r) => h("tr", {},
      ...r.map((c) => h("td", {}, c === null ? "" : String(c))))));
  return h("table", { class: className }, thead, tbody);
}
