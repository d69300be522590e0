/** Request coordination for a chatty panel: debounce edits, and drop
responses that a newer request has superseded. */

export class RequestSequence {
  private latest = 0;

  /** Claim a token for a request about to be issued. */
  next(): number {
    this.latest += 1;
    return this.latest;
  }

  /** True while no newer token has been claimed. */
  isCurrent(token: number): boolean {
    return token === this.latest;
  }
}

/** Trailing-edge debounce: only the last call within the window runs. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  ms: number,
): (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (handle !== undefined) clearTimeout(handle);
    handle = setTimeout(() => {
      handle = undefined;
      fn(...args);
    }, ms);
  };
}

export function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
