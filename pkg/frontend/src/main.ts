import { Client } from "./api.js";
import { Wizard } from "./wizard.js";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const wizard = new Wizard(root, new Client(""));
  void wizard.boot();
});
