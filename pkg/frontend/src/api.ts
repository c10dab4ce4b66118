/** Typed client for the analysis service. Talks to /v1 only.
 *
 * Mutating calls are serialized per client instance: at most one
 * in-flight mutation at a time, later ones queue behind it.
 */

export type Stage =
  | "EMPTY" | "DATA_LOADED" | "SPEC_SET" | "TRIMMED"
  | "WEIGHTED" | "ESTIMATED" | "SENSITIVITY_DONE";

export interface SessionInfo {
  id: string;
  stage: Stage;
  chosen_algorithm: string | null;
  algorithms: string[];
}

export interface SummaryView {
  numeric: Record<string, { mean: number; sd: number; median: number;
                            min: number; max: number; missing: number }>;
  categorical: Record<string, { counts: Record<string, number>;
                                missing: number }>;
}

export interface DataView {
  n_rows: number;
  columns: string[];
  summary: SummaryView;
  head: string[][];
  stage: Stage;
}

export interface ParseOptions {
  header: boolean;
  separator: "comma" | "semicolon" | "tab";
  quote: "double" | "single";
}

export interface SpecBody {
  treatment_var: string;
  control_label: string;
  treatment_label: string;
  outcome_var: string;
  numeric_confounders: string[];
  categorical_confounders: { name: string; reference: string }[];
  estimand: "ATE" | "ATT" | "ATC";
}

export interface SpecView {
  stage: Stage;
  design_columns: string[];
  n: number;
  dropped_rows: number;
  estimand: string;
  treatment_formula: string;
  outcome_formula: string;
}

export interface DensityCurve {
  confounder: string;
  group: "control" | "treated";
  grid: number[];
  density: number[];
  bandwidth: number;
}

export interface TrimRuleView {
  confounder: string;
  lower_cut: number | null;
  upper_cut: number | null;
}

export interface OverlapView {
  curves: DensityCurve[];
  flags: Record<string, string>;
  trim_rules: TrimRuleView[];
  groups: Record<string, { n: number; means: Record<string, number> }>;
  n: number;
  stage: Stage;
}

export interface WeightsView {
  stage: Stage;
  algorithms: Record<string, { converged: boolean; iterations: number | null;
                               chosen_gbm_trees: number | null;
                               notes: string[]; ess_control: number }>;
  failures: Record<string, string>;
}

export interface BalanceView {
  row_names: string[];
  columns: string[];
  smd: (number | null)[][];
  ks: (number | null)[][];
  mean_smd: (number | null)[];
  max_smd: (number | null)[];
  mean_ks: (number | null)[];
  max_ks: (number | null)[];
  ess: Record<string, { total: number; percent: number;
                        percent_rendered: string;
                        control: number; treated: number }>;
  recommended: string;
  rationale: string;
  estimand: string;
  n: number;
  failures: Record<string, string>;
}

export interface EffectView {
  rows: { term: string; estimate: number; se: number;
          t: number | null; p: number }[];
  effect: number;
  algorithm_used: string;
  estimand: string;
  n_used: number;
  stage: Stage;
}

export interface GridView {
  es_axis: number[];
  rho_axis: number[];
  effect_surface: (number | null)[][];
  pvalue_surface: (number | null)[][];
  missing: boolean[][];
  observed_points: { name: string; es: number; rho: number }[];
  baseline: { effect: number; p: number };
  draws_per_cell: number;
  effect_levels: number[];
  p_levels: number[];
}

export type SensitivityPoll =
  | { status: "running"; progress: { done: number; total: number } }
  | { status: "cancelled"; stage: Stage }
  | ({ status: "done"; stage: Stage } & GridView);

export class ApiError extends Error {
  constructor(readonly status: number,
              readonly body: Record<string, unknown>) {
    super(typeof body.error === "string" ? body.error : `HTTP ${status}`);
  }

  /** Stage the server says this call needs (409 responses). */
  get requiredStage(): Stage | null {
    const v = this.body.required_stage;
    return typeof v === "string" ? (v as Stage) : null;
  }

  /** Field-level validation problems (422 responses). */
  get fieldErrors(): { field: string; message: string }[] {
    const v = this.body.errors;
    return Array.isArray(v) ? (v as { field: string; message: string }[]) : [];
  }
}

export class Client {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(readonly base: string = "") {}

  private async request<T>(method: string, path: string,
                           init: RequestInit = {}): Promise<T> {
    const res = await fetch(this.base + path, { method, ...init });
    const text = await res.text();
    const body = text ? JSON.parse(text) : {};
    if (!res.ok) throw new ApiError(res.status, body);
    return body as T;
  }

  private json<T>(method: string, path: string, body?: unknown): Promise<T> {
    return this.request<T>(method, path, {
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  /** Serialize mutations: one in flight, later calls queue. */
  private mutate<T>(fn: () => Promise<T>): Promise<T> {
    const next = this.queue.then(fn, fn);
    this.queue = next.then(() => undefined, () => undefined);
    return next;
  }

  createSession(): Promise<{ id: string; stage: Stage }> {
    return this.mutate(() => this.json("POST", "/v1/sessions"));
  }

  info(id: string): Promise<SessionInfo> {
    return this.json("GET", `/v1/sessions/${id}`);
  }

  uploadData(id: string, file: File, opts: ParseOptions,
             previewRows: number): Promise<DataView> {
    const form = new FormData();
    form.append("file", file);
    form.append("header", String(opts.header));
    form.append("separator", opts.separator);
    form.append("quote", opts.quote);
    form.append("preview_rows", String(previewRows));
    return this.mutate(() =>
      this.request("POST", `/v1/sessions/${id}/data`, { body: form }));
  }

  loadExample(id: string, seed: number, nPerGroup: number,
              previewRows: number): Promise<DataView> {
    return this.mutate(() => this.json("POST", `/v1/sessions/${id}/data/example`, {
      seed, n_per_group: nPerGroup, preview_rows: previewRows,
    }));
  }

  setSpec(id: string, spec: SpecBody): Promise<SpecView> {
    return this.mutate(() => this.json("PUT", `/v1/sessions/${id}/spec`, spec));
  }

  overlap(id: string): Promise<OverlapView> {
    return this.json("GET", `/v1/sessions/${id}/overlap`);
  }

  setTrims(id: string, rules: TrimRuleView[]): Promise<{ stage: Stage }> {
    return this.mutate(() => this.json("PUT", `/v1/sessions/${id}/trims`, {
      rules,
    }));
  }

  computeWeights(id: string, algorithms: string[] | null): Promise<WeightsView> {
    const body = algorithms === null ? {} : { algorithms };
    return this.mutate(() => this.json("POST", `/v1/sessions/${id}/weights`, body));
  }

  balance(id: string): Promise<BalanceView> {
    return this.json("GET", `/v1/sessions/${id}/balance`);
  }

  estimate(id: string, algorithm: string): Promise<EffectView> {
    return this.mutate(() => this.json("POST", `/v1/sessions/${id}/estimate`, {
      algorithm,
    }));
  }

  startSensitivity(id: string, body: {
    es_axis?: number[]; rho_axis?: number[]; draws?: number; seed?: number;
  }): Promise<{ status: string; cells: number }> {
    return this.mutate(() => this.json("POST", `/v1/sessions/${id}/sensitivity`, body));
  }

  pollSensitivity(id: string): Promise<SensitivityPoll> {
    return this.json("GET", `/v1/sessions/${id}/sensitivity`);
  }

  cancelSensitivity(id: string): Promise<{ status: string }> {
    return this.mutate(() => this.json("DELETE", `/v1/sessions/${id}/sensitivity`));
  }

  reportUrl(id: string): string {
    return `${this.base}/v1/sessions/${id}/report`;
  }

  exportUrl(id: string, format: "csv" | "tsv"): string {
    return `${this.base}/v1/sessions/${id}/export?format=${format}`;
  }
}
