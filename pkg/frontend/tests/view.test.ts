import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, NextItem } from "../src/api";
import { StudyController } from "../src/controller";
import { installKeyboardShortcuts, progressPercent, renderItem } from "../src/view";

function makeController(item: Partial<NextItem>): StudyController {
  const controller = new StudyController(new ApiClient(""));
  controller.sessionId = "s1";
  controller.current = {
    item_id: "item0",
    image_url: "/images/item0",
    progress: { done: 0, total: 6 },
    dataset: null,
    done: false,
    ...item,
  };
  return controller;
}

function render(controller: StudyController): HTMLElement {
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  renderItem(root, controller);
  return root;
}

describe("progressPercent", () => {
  it("is 33 at 40 of 120", () => {
    expect(progressPercent(40, 120)).toBe(33);
  });

  it("covers the endpoints", () => {
    expect(progressPercent(0, 6)).toBe(0);
    expect(progressPercent(6, 6)).toBe(100);
    expect(progressPercent(0, 0)).toBe(0);
  });
});

describe("renderItem", () => {
  it("shows image, progress bar and five control groups", () => {
    const root = render(makeController({ progress: { done: 40, total: 120 } }));
    const fill = root.querySelector<HTMLElement>(".progress-fill");
    expect(fill?.style.width).toBe("33%");
    expect(root.querySelector("img")?.getAttribute("src")).toBe("/images/item0");
    expect(root.querySelectorAll("fieldset.likert")).toHaveLength(3);
    expect(root.querySelectorAll("fieldset.binary")).toHaveLength(2);
  });

  it("renders no dataset label when the server sent none", () => {
    const root = render(makeController({ dataset: null }));
    expect(root.querySelector(".dataset-label")).toBeNull();
    expect(root.textContent).not.toContain("Dataset");
  });

  it("renders the dataset label only when provided", () => {
    const root = render(makeController({ dataset: "camelyon16" }));
    expect(root.querySelector(".dataset-label")?.textContent).toContain("camelyon16");
  });

  it("disables submit until the form is complete", () => {
    const controller = makeController({});
    const root = render(controller);
    expect(root.querySelector<HTMLButtonElement>("button.submit")?.disabled).toBe(true);
    controller.setLikert("quality", 4);
    controller.setLikert("structure", 3);
    controller.setLikert("nuclear", 5);
    controller.setBinary("hallucination", false);
    const mid = render(controller);
    expect(mid.querySelector<HTMLButtonElement>("button.submit")?.disabled).toBe(true);
    controller.setBinary("judged_real", true);
    const done = render(controller);
    expect(done.querySelector<HTMLButtonElement>("button.submit")?.disabled).toBe(false);
  });

  it("shows only a completion message when done", () => {
    const root = render(
      makeController({ item_id: null, image_url: null, done: true, progress: { done: 6, total: 6 } }),
    );
    expect(root.querySelector(".done-message")).not.toBeNull();
    expect(root.querySelector("img")).toBeNull();
    expect(root.querySelector("button.submit")).toBeNull();
  });

  it("submit button does not call the API while incomplete", () => {
    const controller = makeController({});
    const spy = vi.spyOn(controller, "submit");
    const root = render(controller);
    const button = root.querySelector<HTMLButtonElement>("button.submit")!;
    button.click();
    // disabled buttons swallow the click entirely
    expect(button.disabled).toBe(true);
    expect(spy).not.toHaveBeenCalled();
  });
});

describe("keyboard shortcuts", () => {
  beforeEach(() => {
    document.body.replaceChildren();
  });

  it("keys 1-5 set the focused likert group", () => {
    const controller = makeController({});
    const root = document.createElement("div");
    document.body.appendChild(root);
    renderItem(root, controller);
    installKeyboardShortcuts(document, controller);

    const group = root.querySelector<HTMLElement>('fieldset[data-field="structure"]')!;
    group.focus();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "4", bubbles: true }));
    expect(controller.form.getLikert("structure")).toBe(4);
    expect(controller.form.getLikert("quality")).toBeUndefined();
  });

  it("keys outside 1-5 or without focus do nothing", () => {
    const controller = makeController({});
    const root = document.createElement("div");
    document.body.appendChild(root);
    renderItem(root, controller);
    installKeyboardShortcuts(document, controller);

    document.dispatchEvent(new KeyboardEvent("keydown", { key: "3", bubbles: true }));
    expect(controller.form.snapshot()).toEqual({});

    const group = root.querySelector<HTMLElement>('fieldset[data-field="quality"]')!;
    group.focus();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "9", bubbles: true }));
    expect(controller.form.getLikert("quality")).toBeUndefined();
  });
});
