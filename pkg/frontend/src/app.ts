/** Browser entry point: bootstrap config, session start form, render loop. */

import { ApiClient } from "./api.js";
import { DraftStore } from "./form.js";
import { StudyController } from "./controller.js";
import { installKeyboardShortcuts, renderItem } from "./view.js";

interface Bootstrap {
  baseUrl?: string;
}

async function loadBootstrap(): Promise<Bootstrap> {
  try {
    const resp = await fetch("./config.json");
    if (resp.ok) return (await resp.json()) as Bootstrap;
  } catch {
    // same-origin deployment needs no config file
  }
  return {};
}

function startForm(root: HTMLElement, onStart: (raterId: string, seed: number) => void): void {
  const doc = root.ownerDocument;
  root.replaceChildren();
  const form = doc.createElement("form");
  const rater = doc.createElement("input");
  rater.placeholder = "rater id";
  rater.required = true;
  const seed = doc.createElement("input");
  seed.type = "number";
  seed.value = "0";
  const go = doc.createElement("button");
  go.textContent = "Start session";
  form.append(rater, seed, go);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (rater.value.trim() !== "") {
      onStart(rater.value.trim(), Number(seed.value) || 0);
    }
  });
  root.appendChild(form);
}

export async function boot(root: HTMLElement): Promise<void> {
  const config = await loadBootstrap();
  const api = new ApiClient(config.baseUrl ?? "");
  const drafts = new DraftStore(window.localStorage);
  const controller = new StudyController(api, drafts);
  controller.onChange(() => renderItem(root, controller));
  installKeyboardShortcuts(root.ownerDocument, controller);
  startForm(root, (raterId, seed) => {
    void controller.start(raterId, seed);
  });
}

const rootEl = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl !== null) {
  void boot(rootEl);
}
