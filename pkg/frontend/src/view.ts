/** DOM rendering for the rating screen. No origin information ever reaches
 * this layer; the dataset label is rendered only if the server sent one. */

import { BINARY_FIELDS, BinaryField, LIKERT_FIELDS, LikertField } from "./form.js";
import { StudyController } from "./controller.js";

const LIKERT_LABELS: Record<LikertField, string> = {
  quality: "Overall image quality",
  structure: "Tissue structure plausibility",
  nuclear: "Nuclear detail",
};

const BINARY_LABELS: Record<BinaryField, string> = {
  hallucination: "Artifacts / hallucinated structures present",
  judged_real: "I believe this image is real",
};

export function progressPercent(done: number, total: number): number {
  if (total <= 0) return 0;
  return Math.floor((done / total) * 100);
}

function likertGroup(
  doc: Document,
  field: LikertField,
  selected: number | undefined,
  onPick: (field: LikertField, value: number) => void,
): HTMLElement {
  const fieldset = doc.createElement("fieldset");
  fieldset.className = "likert";
  fieldset.dataset.field = field;
  fieldset.tabIndex = 0;
  const legend = doc.createElement("legend");
  legend.textContent = LIKERT_LABELS[field];
  fieldset.appendChild(legend);
  for (let v = 1; v <= 5; v++) {
    const label = doc.createElement("label");
    const input = doc.createElement("input");
    input.type = "radio";
    input.name = field;
    input.value = String(v);
    input.checked = selected === v;
    input.addEventListener("change", () => onPick(field, v));
    label.appendChild(input);
    label.appendChild(doc.createTextNode(String(v)));
    fieldset.appendChild(label);
  }
  return fieldset;
}

function binaryGroup(
  doc: Document,
  field: BinaryField,
  selected: boolean | undefined,
  onPick: (field: BinaryField, value: boolean) => void,
): HTMLElement {
  const fieldset = doc.createElement("fieldset");
  fieldset.className = "binary";
  fieldset.dataset.field = field;
  const legend = doc.createElement("legend");
  legend.textContent = BINARY_LABELS[field];
  fieldset.appendChild(legend);
  for (const value of [true, false]) {
    const label = doc.createElement("label");
    const input = doc.createElement("input");
    input.type = "radio";
    input.name = field;
    input.value = String(value);
    input.checked = selected === value;
    input.addEventListener("change", () => onPick(field, value));
    label.appendChild(input);
    label.appendChild(doc.createTextNode(value ? "yes" : "no"));
    fieldset.appendChild(label);
  }
  return fieldset;
}

/** Renders the current item and form into `root`, replacing its content. */
export function renderItem(root: HTMLElement, controller: StudyController): void {
  const doc = root.ownerDocument;
  root.replaceChildren();
  const item = controller.current;
  if (item === null) return;

  const bar = doc.createElement("div");
  bar.className = "progress";
  const fill = doc.createElement("div");
  fill.className = "progress-fill";
  const pct = progressPercent(item.progress.done, item.progress.total);
  fill.style.width = `${pct}%`;
  bar.appendChild(fill);
  const counter = doc.createElement("span");
  counter.className = "progress-text";
  counter.textContent = `${item.progress.done} / ${item.progress.total}`;
  bar.appendChild(counter);
  root.appendChild(bar);

  if (item.done || item.item_id === null) {
    const doneMsg = doc.createElement("p");
    doneMsg.className = "done-message";
    doneMsg.textContent = "Session complete. Thank you.";
    root.appendChild(doneMsg);
    return;
  }

  if (item.dataset) {
    const ds = doc.createElement("p");
    ds.className = "dataset-label";
    ds.textContent = `Dataset: ${item.dataset}`;
    root.appendChild(ds);
  }

  const figure = doc.createElement("figure");
  figure.className = "patch";
  const img = doc.createElement("img");
  img.src = item.image_url ?? "";
  img.alt = "tissue patch";
  img.addEventListener("click", () => img.classList.toggle("zoomed"));
  img.addEventListener("error", () => {
    const retry = doc.createElement("button");
    retry.className = "retry";
    retry.textContent = "Image failed to load. Retry";
    retry.addEventListener("click", () => {
      img.src = `${item.image_url}?retry=${Date.now()}`;
      retry.remove();
    });
    figure.appendChild(retry);
  });
  figure.appendChild(img);
  root.appendChild(figure);

  const formEl = doc.createElement("form");
  formEl.addEventListener("submit", (ev) => ev.preventDefault());
  for (const field of LIKERT_FIELDS) {
    formEl.appendChild(
      likertGroup(doc, field, controller.form.getLikert(field), (f, v) =>
        controller.setLikert(f, v),
      ),
    );
  }
  for (const field of BINARY_FIELDS) {
    formEl.appendChild(
      binaryGroup(doc, field, controller.form.getBinary(field), (f, v) =>
        controller.setBinary(f, v),
      ),
    );
  }

  const submit = doc.createElement("button");
  submit.type = "button";
  submit.className = "submit";
  submit.textContent = "Submit rating";
  submit.disabled = !controller.canSubmit;
  submit.addEventListener("click", () => {
    void controller.submit();
  });
  formEl.appendChild(submit);

  if (controller.lastError !== null) {
    const err = doc.createElement("p");
    err.className = "error";
    err.textContent = controller.lastError;
    formEl.appendChild(err);
  }
  root.appendChild(formEl);
}

/** Keys 1-5 set the Likert group that currently has focus. */
export function installKeyboardShortcuts(
  doc: Document,
  controller: StudyController,
): void {
  doc.addEventListener("keydown", (ev) => {
    if (ev.key < "1" || ev.key > "5") return;
    const active = doc.activeElement;
    if (!(active instanceof Element)) return;
    const group = active.closest("fieldset.likert");
    if (!(group instanceof HTMLElement)) return;
    const field = group.dataset.field as LikertField | undefined;
    if (field && (LIKERT_FIELDS as readonly string[]).includes(field)) {
      controller.setLikert(field, Number(ev.key));
    }
  });
}
