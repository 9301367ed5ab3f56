/** Scripted end-to-end session against a live rating service. */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";
import { DraftStore, RatingFormState } from "../src/form";
import { StudyController } from "../src/controller";
import { renderItem } from "../src/view";

const PORT = 8930 + (process.pid % 50);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workdir: string;

function memoryStorage() {
  const map = new Map<string, string>();
  return {
    getItem: (k: string) => map.get(k) ?? null,
    setItem: (k: string, v: string) => void map.set(k, v),
    removeItem: (k: string) => void map.delete(k),
  };
}

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/aggregate`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "rating-e2e-"));
  const here = dirname(fileURLToPath(import.meta.url));
  server = spawn("python3", [join(here, "serve_fixture.py"), workdir, String(PORT)], {
    stdio: "inherit",
  });
  await waitForServer();
});

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("end-to-end rating session", () => {
  it("completes a 6-item study whose export matches the entered ratings", async () => {
    const api = new ApiClient(BASE);
    const controller = new StudyController(api, new DraftStore(memoryStorage()));
    const root = document.createElement("div");
    document.body.appendChild(root);
    controller.onChange(() => renderItem(root, controller));

    await controller.start("rater-e2e", 42);
    expect(controller.current?.progress.total).toBe(6);

    const entered: Record<string, { quality: number; judged_real: boolean }> = {};
    for (let step = 0; step < 6; step++) {
      expect(controller.done).toBe(false);
      const itemId = controller.current!.item_id!;
      // the rendered screen never leaks origin
      expect(root.innerHTML).not.toContain("origin");
      expect(root.innerHTML).not.toContain("synthetic");

      const quality = (step % 5) + 1;
      const judgedReal = step % 2 === 0;
      controller.setLikert("quality", quality);
      controller.setLikert("structure", ((step + 1) % 5) + 1);
      controller.setLikert("nuclear", ((step + 2) % 5) + 1);
      controller.setBinary("hallucination", false);
      controller.setBinary("judged_real", judgedReal);
      entered[itemId] = { quality, judged_real: judgedReal };
      await controller.submit();
    }

    expect(controller.done).toBe(true);
    expect(root.querySelector(".done-message")).not.toBeNull();

    const exported = await api.exportSession(controller.sessionId);
    expect(exported.ratings).toHaveLength(6);
    for (const row of exported.ratings) {
      const want = entered[row.item_id as string];
      expect(want).toBeDefined();
      expect(row.quality).toBe(want!.quality);
      expect(row.judged_real).toBe(want!.judged_real);
      expect(["real", "synthetic"]).toContain(row.origin);
    }
  });

  it("refuses to submit an incomplete form", async () => {
    const api = new ApiClient(BASE);
    const controller = new StudyController(api, new DraftStore(memoryStorage()));
    await controller.start("rater-incomplete", 7);

    controller.setLikert("quality", 3);
    controller.setLikert("structure", 3);
    expect(controller.canSubmit).toBe(false);
    await expect(controller.submit()).rejects.toThrow(/incomplete/);

    // the server saw nothing
    const next = await api.next(controller.sessionId);
    expect(next.progress.done).toBe(0);
  });

  it("resyncs the cursor after a 409", async () => {
    const api = new ApiClient(BASE);
    const controller = new StudyController(api, new DraftStore(memoryStorage()));
    await controller.start("rater-409", 11);
    const staleItem = controller.current!.item_id!;

    // another tab rates the same item behind this controller's back
    const other = new RatingFormState();
    other.setLikert("quality", 1);
    other.setLikert("structure", 1);
    other.setLikert("nuclear", 1);
    other.setBinary("hallucination", true);
    other.setBinary("judged_real", false);
    await api.submitRating(controller.sessionId, other.toPayload(staleItem));

    controller.setLikert("quality", 5);
    controller.setLikert("structure", 5);
    controller.setLikert("nuclear", 5);
    controller.setBinary("hallucination", false);
    controller.setBinary("judged_real", true);
    await controller.submit(); // duplicate -> 409 -> resync, no throw

    expect(controller.lastError).toContain("duplicate");
    expect(controller.current!.item_id).not.toBe(staleItem);
    expect(controller.current!.progress.done).toBe(1);
    // the stale draft was dropped with the resync
    expect(controller.form.isComplete()).toBe(false);

    // direct duplicate via the raw client surfaces the 409 status
    await expect(
      api.submitRating(controller.sessionId, other.toPayload(staleItem)),
    ).rejects.toMatchObject({ status: 409 } satisfies Partial<ApiError>);
  });
});
