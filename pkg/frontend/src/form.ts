/** Rating form state and local draft persistence. */

import type { RatingPayload } from "./api.js";

export const LIKERT_FIELDS = ["quality", "structure", "nuclear"] as const;
export type LikertField = (typeof LIKERT_FIELDS)[number];

export const BINARY_FIELDS = ["hallucination", "judged_real"] as const;
export type BinaryField = (typeof BINARY_FIELDS)[number];

export interface FormSnapshot {
  quality?: number;
  structure?: number;
  nuclear?: number;
  hallucination?: boolean;
  judged_real?: boolean;
}

export class RatingFormState {
  private likert = new Map<LikertField, number>();
  private binary = new Map<BinaryField, boolean>();

  setLikert(field: LikertField, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new RangeError(`${field} must be an integer in [1, 5], got ${value}`);
    }
    this.likert.set(field, value);
  }

  setBinary(field: BinaryField, value: boolean): void {
    this.binary.set(field, value);
  }

  getLikert(field: LikertField): number | undefined {
    return this.likert.get(field);
  }

  getBinary(field: BinaryField): boolean | undefined {
    return this.binary.get(field);
  }

  /** Submit is allowed only once all five controls have a value. */
  isComplete(): boolean {
    return (
      LIKERT_FIELDS.every((f) => this.likert.has(f)) &&
      BINARY_FIELDS.every((f) => this.binary.has(f))
    );
  }

  toPayload(itemId: string): RatingPayload {
    if (!this.isComplete()) {
      throw new Error("form is incomplete");
    }
    return {
      item_id: itemId,
      quality: this.likert.get("quality")!,
      structure: this.likert.get("structure")!,
      nuclear: this.likert.get("nuclear")!,
      hallucination: this.binary.get("hallucination")!,
      judged_real: this.binary.get("judged_real")!,
    };
  }

  snapshot(): FormSnapshot {
    const snap: FormSnapshot = {};
    for (const f of LIKERT_FIELDS) {
      const v = this.likert.get(f);
      if (v !== undefined) snap[f] = v;
    }
    for (const f of BINARY_FIELDS) {
      const v = this.binary.get(f);
      if (v !== undefined) snap[f] = v;
    }
    return snap;
  }

  static fromSnapshot(snap: FormSnapshot): RatingFormState {
    const form = new RatingFormState();
    for (const f of LIKERT_FIELDS) {
      if (snap[f] !== undefined) form.setLikert(f, snap[f]!);
    }
    for (const f of BINARY_FIELDS) {
      if (snap[f] !== undefined) form.setBinary(f, snap[f]!);
    }
    return form;
  }
}

/** Persists un-submitted form drafts so a refresh does not lose them. */
export class DraftStore {
  constructor(private readonly storage: Pick<Storage, "getItem" | "setItem" | "removeItem">) {}

  private key(sessionId: string, itemId: string): string {
    return `histoforge-draft:${sessionId}:${itemId}`;
  }

  save(sessionId: string, itemId: string, form: RatingFormState): void {
    this.storage.setItem(this.key(sessionId, itemId), JSON.stringify(form.snapshot()));
  }

  load(sessionId: string, itemId: string): RatingFormState | null {
    const raw = this.storage.getItem(this.key(sessionId, itemId));
    if (raw === null) return null;
    try {
      return RatingFormState.fromSnapshot(JSON.parse(raw) as FormSnapshot);
    } catch {
      return null;
    }
  }

  clear(sessionId: string, itemId: string): void {
    this.storage.removeItem(this.key(sessionId, itemId));
  }
}
