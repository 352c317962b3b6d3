/** Debounced execute loop with stale-response discipline.
 *
 * Rapid widget edits collapse into one request per debounce window, and a
 * monotonically increasing request id guarantees an out-of-order response
 * can never overwrite a newer frame.
 */

import type { ApiClient } from "./api.js";
import type { ExecuteRequest } from "./types.js";

export const DEBOUNCE_MS = 150;

export interface FrameHandler {
  (image: Blob, requestId: number): void;
}

export interface ErrorHandler {
  (error: unknown, requestId: number): void;
}

export class ExecuteScheduler {
  private nextId = 0;
  private displayedId = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: ExecuteRequest | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onFrame: FrameHandler,
    private readonly onError: ErrorHandler = () => {},
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  /** Coalesce into the current debounce window (e.g. slider drags). */
  request(req: ExecuteRequest): void {
    this.pending = req;
    if (this.timer === null) {
      this.timer = setTimeout(() => this.flush(), this.debounceMs);
    }
  }

  /** Bypass the debounce, e.g. when the selected sink changes. */
  requestImmediate(req: ExecuteRequest): void {
    this.pending = req;
    this.flush();
  }

  private flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const req = this.pending;
    this.pending = null;
    if (!req) return;
    const id = ++this.nextId;
    this.api.execute(req).then(
      (blob) => {
        if (id <= this.displayedId) return; // superseded in flight
        this.displayedId = id;
        this.onFrame(blob, id);
      },
      (err) => {
        if (id <= this.displayedId) return;
        // errors advance the cursor too: an older success must not
        // overwrite the state that produced this error
        this.displayedId = id;
        this.onError(err, id);
      },
    );
  }
}
