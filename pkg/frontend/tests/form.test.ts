import { describe, expect, it } from "vitest";

import { DraftStore, RatingFormState } from "../src/form";

function memoryStorage() {
  const map = new Map<string, string>();
  return {
    getItem: (k: string) => map.get(k) ?? null,
    setItem: (k: string, v: string) => void map.set(k, v),
    removeItem: (k: string) => void map.delete(k),
  };
}

describe("RatingFormState", () => {
  it("is incomplete until all five controls are set", () => {
    const form = new RatingFormState();
    expect(form.isComplete()).toBe(false);
    form.setLikert("quality", 4);
    form.setLikert("structure", 3);
    form.setLikert("nuclear", 5);
    expect(form.isComplete()).toBe(false);
    form.setBinary("hallucination", false);
    expect(form.isComplete()).toBe(false);
    form.setBinary("judged_real", true);
    expect(form.isComplete()).toBe(true);
  });

  it("rejects out-of-range likert values", () => {
    const form = new RatingFormState();
    expect(() => form.setLikert("quality", 0)).toThrow(RangeError);
    expect(() => form.setLikert("quality", 6)).toThrow(RangeError);
    expect(() => form.setLikert("quality", 2.5)).toThrow(RangeError);
  });

  it("refuses to build a payload from an incomplete form", () => {
    const form = new RatingFormState();
    form.setLikert("quality", 4);
    expect(() => form.toPayload("item0")).toThrow(/incomplete/);
  });

  it("builds the full payload when complete", () => {
    const form = new RatingFormState();
    form.setLikert("quality", 4);
    form.setLikert("structure", 3);
    form.setLikert("nuclear", 5);
    form.setBinary("hallucination", true);
    form.setBinary("judged_real", false);
    expect(form.toPayload("item7")).toEqual({
      item_id: "item7",
      quality: 4,
      structure: 3,
      nuclear: 5,
      hallucination: true,
      judged_real: false,
    });
  });

  it("round-trips through a snapshot", () => {
    const form = new RatingFormState();
    form.setLikert("quality", 2);
    form.setBinary("judged_real", true);
    const back = RatingFormState.fromSnapshot(form.snapshot());
    expect(back.getLikert("quality")).toBe(2);
    expect(back.getLikert("structure")).toBeUndefined();
    expect(back.getBinary("judged_real")).toBe(true);
    expect(back.isComplete()).toBe(false);
  });
});

describe("DraftStore", () => {
  it("saves and restores per-item drafts", () => {
    const drafts = new DraftStore(memoryStorage());
    const form = new RatingFormState();
    form.setLikert("nuclear", 1);
    drafts.save("s1", "item0", form);
    const restored = drafts.load("s1", "item0");
    expect(restored?.getLikert("nuclear")).toBe(1);
    expect(drafts.load("s1", "item1")).toBeNull();
    drafts.clear("s1", "item0");
    expect(drafts.load("s1", "item0")).toBeNull();
  });

  it("treats corrupt drafts as absent", () => {
    const storage = memoryStorage();
    storage.setItem("histoforge-draft:s1:item0", "{not json");
    const drafts = new DraftStore(storage);
    expect(drafts.load("s1", "item0")).toBeNull();
  });
});
