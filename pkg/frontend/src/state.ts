import type { BalanceView, DataView, EffectView, GridView, OverlapView,
              SpecView, Stage, WeightsView } from "./api.js";

export const PAGES = [
  "Welcome", "Data", "ModelSetUp", "Overlap", "Balance", "Outcome",
  "BeforeYouGo",
] as const;

export type Page = (typeof PAGES)[number];

export const PAGE_TITLES: Record<Page, string> = {
  Welcome: "Welcome",
  Data: "Data",
  ModelSetUp: "Model Set-Up",
  Overlap: "Overlap",
  Balance: "Balance",
  Outcome: "Outcome",
  BeforeYouGo: "Before You Go",
};

const STAGE_ORDER: Stage[] = [
  "EMPTY", "DATA_LOADED", "SPEC_SET", "TRIMMED", "WEIGHTED", "ESTIMATED",
  "SENSITIVITY_DONE",
];

export function stageAtLeast(stage: Stage, min: Stage): boolean {
  return STAGE_ORDER.indexOf(stage) >= STAGE_ORDER.indexOf(min);
}

/** Server stage each page requires; null = always reachable. */
export const PAGE_PREREQ: Record<Page, Stage | null> = {
  Welcome: null,
  Data: null,
  ModelSetUp: "DATA_LOADED",
  Overlap: "SPEC_SET",
  Balance: "WEIGHTED",
  Outcome: "WEIGHTED",
  BeforeYouGo: null,
};

/** A page is reachable iff its server-stage prerequisite holds. */
export function pageReachable(page: Page, stage: Stage): boolean {
  const pre = PAGE_PREREQ[page];
  return pre === null || stageAtLeast(stage, pre);
}

/** Step the user should finish before the given page opens up. */
export function prerequisiteHint(page: Page): string {
  switch (PAGE_PREREQ[page]) {
    case "DATA_LOADED": return "Load a dataset on the Data page first.";
    case "SPEC_SET": return "Finish the Model Set-Up page first.";
    case "WEIGHTED": return "Compute weights on the Overlap page first.";
    default: return "";
  }
}

/** Everything the wizard caches; every number comes from the server. */
export interface AppState {
  sessionId: string;
  stage: Stage;
  page: Page;
  banner: string | null;
  data: DataView | null;
  spec: SpecView | null;
  overlap: OverlapView | null;
  weights: WeightsView | null;
  balance: BalanceView | null;
  chosenAlgorithm: string | null;
  effect: EffectView | null;
  grid: GridView | null;
  jobProgress: { done: number; total: number } | null;
  /* fetches currently in flight, so renders don't refire them */
  loading: Set<string>;
}

export function initialState(sessionId: string, stage: Stage): AppState {
  return {
    sessionId, stage, page: "Welcome", banner: null,
    data: null, spec: null, overlap: null, weights: null, balance: null,
    chosenAlgorithm: null, effect: null, grid: null, jobProgress: null,
    loading: new Set(),
  };
}

/** Downstream caches dropped when the server stage moves backwards. */
export function applyStage(state: AppState, stage: Stage): void {
  state.stage = stage;
  if (!stageAtLeast(stage, "WEIGHTED")) {
    state.weights = null;
    state.balance = null;
    state.chosenAlgorithm = null;
  }
  if (!stageAtLeast(stage, "ESTIMATED")) state.effect = null;
  if (!stageAtLeast(stage, "SENSITIVITY_DONE")) state.grid = null;
  if (!stageAtLeast(stage, "SPEC_SET")) {
    state.spec = null;
    state.overlap = null;
  }
  if (!stageAtLeast(stage, "DATA_LOADED")) state.data = null;
}
