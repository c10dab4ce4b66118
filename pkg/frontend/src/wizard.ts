import { ApiError, Client, Stage } from "./api.js";
import { h } from "./dom.js";
import { AppState, PAGES, PAGE_TITLES, Page, applyStage, initialState,
         pageReachable, prerequisiteHint } from "./state.js";
import { balancePage } from "./pages/balance.js";
import { beforeYouGoPage } from "./pages/beforeyougo.js";
import { dataPage } from "./pages/data.js";
import { modelSetupPage } from "./pages/modelsetup.js";
import { outcomePage } from "./pages/outcome.js";
import { overlapPage } from "./pages/overlap.js";
import { welcomePage } from "./pages/welcome.js";

const RENDERERS: Record<Page, (ctx: Wizard) => HTMLElement> = {
  Welcome: welcomePage,
  Data: dataPage,
  ModelSetUp: modelSetupPage,
  Overlap: overlapPage,
  Balance: balancePage,
  Outcome: outcomePage,
  BeforeYouGo: beforeYouGoPage,
};

export class Wizard {
  state!: AppState;

  constructor(readonly root: HTMLElement, readonly client: Client) {}

  async boot(): Promise<void> {
    const s = await this.client.createSession();
    this.state = initialState(s.id, s.stage);
    this.render();
  }

  /** Navigation honors the server stage; a blocked page explains the
   * missing step instead of dead-ending. */
  goto(page: Page): void {
    if (!pageReachable(page, this.state.stage)) {
      this.state.banner =
        `${PAGE_TITLES[page]} is not available yet. ${prerequisiteHint(page)}`;
    } else {
      this.state.page = page;
      this.state.banner = null;
    }
    this.render();
  }

  setStage(stage: Stage): void {
    applyStage(this.state, stage);
  }

  /** Run a server call; conflicts and validation problems become
   * inline guidance. Returns null when the call did not succeed. */
  async run<T>(fn: () => Promise<T>,
               onFieldErrors?: (errors: { field: string;
                                          message: string }[]) => void,
  ): Promise<T | null> {
    try {
      return await fn();
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      if (err.status === 409) {
        const need = err.requiredStage;
        this.state.banner = need
          ? `That step is not ready: the server needs stage ${need} first.`
          : err.message;
      } else if (err.status === 422 && onFieldErrors) {
        const errors = err.fieldErrors;
        onFieldErrors(errors.length
          ? errors
          : [{ field: "", message: err.message }]);
        return null;
      } else {
        this.state.banner = err.message;
      }
      this.render();
      return null;
    }
  }

  render(): void {
    const st = this.state;
    const nav = h("nav", { class: "stepper" },
      ...PAGES.map((p) => h("button", {
        class: p === st.page ? "step current" : "step",
        "data-page": p,
        disabled: !pageReachable(p, st.stage),
        click: () => this.goto(p),
      }, PAGE_TITLES[p])));

    const header = h("header", { class: "wizard-header" },
      h("h1", {}, "balancelab"),
      h("span", { class: "stage-chip", "data-role": "stage" }, st.stage),
      nav);

    const parts: HTMLElement[] = [header];
    if (st.banner) {
      parts.push(h("div", { class: "banner", "data-role": "banner" },
        st.banner));
    }
    parts.push(RENDERERS[st.page](this));
    this.root.replaceChildren(...parts);
  }
}
