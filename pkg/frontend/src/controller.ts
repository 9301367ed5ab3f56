/** Session flow: fetch-after-submit with the server as cursor authority. */

import { ApiClient, ApiError, NextItem } from "./api.js";
import { BinaryField, DraftStore, LikertField, RatingFormState } from "./form.js";

export type ControllerListener = () => void;

export class StudyController {
  sessionId = "";
  current: NextItem | null = null;
  form = new RatingFormState();
  lastError: string | null = null;

  private listeners: ControllerListener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly drafts?: DraftStore,
  ) {}

  onChange(listener: ControllerListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const l of this.listeners) l();
  }

  get done(): boolean {
    return this.current?.done === true;
  }

  get canSubmit(): boolean {
    return this.current?.item_id != null && this.form.isComplete();
  }

  async start(raterId: string, seed: number): Promise<void> {
    const session = await this.api.createSession(raterId, seed);
    this.sessionId = session.session_id;
    await this.resync();
  }

  /** Refetches the server cursor and restores any saved draft for it. */
  async resync(): Promise<void> {
    this.current = await this.api.next(this.sessionId);
    const itemId = this.current.item_id;
    this.form =
      (itemId !== null && this.drafts?.load(this.sessionId, itemId)) ||
      new RatingFormState();
    this.notify();
  }

  setLikert(field: LikertField, value: number): void {
    this.form.setLikert(field, value);
    this.persistDraft();
    this.notify();
  }

  setBinary(field: BinaryField, value: boolean): void {
    this.form.setBinary(field, value);
    this.persistDraft();
    this.notify();
  }

  private persistDraft(): void {
    const itemId = this.current?.item_id;
    if (itemId != null) this.drafts?.save(this.sessionId, itemId, this.form);
  }

  async submit(): Promise<void> {
    if (!this.canSubmit) {
      throw new Error("cannot submit an incomplete form");
    }
    const itemId = this.current!.item_id!;
    try {
      await this.api.submitRating(this.sessionId, this.form.toPayload(itemId));
      this.lastError = null;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // stale cursor: the server already has this item or expects another
        this.lastError = err.detail;
        this.drafts?.clear(this.sessionId, itemId);
        await this.resync();
        return;
      }
      // network or server failure: keep the form so the rater can retry
      this.lastError = err instanceof Error ? err.message : String(err);
      this.notify();
      throw err;
    }
    this.drafts?.clear(this.sessionId, itemId);
    await this.resync();
  }
}
