// Request pacing: slider edits are debounced so a drag issues one call when
// the hand settles; trajectory scrubs are throttled to a steady rate with a
// trailing call so the final position always renders.

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | null = null;
  return (...args: A) => {
    if (timer !== null) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = null;
      fn(...args);
    }, waitMs);
  };
}

export function throttle<A extends unknown[]>(
  fn: (...args: A) => void,
  intervalMs: number,
): (...args: A) => void {
  let lastCall = -Infinity;
  let trailing: ReturnType<typeof setTimeout> | null = null;
  let pendingArgs: A | null = null;
  return (...args: A) => {
    const now = Date.now();
    if (now - lastCall >= intervalMs) {
      lastCall = now;
      fn(...args);
      return;
    }
    pendingArgs = args;
    if (trailing === null) {
      trailing = setTimeout(() => {
        trailing = null;
        lastCall = Date.now();
        if (pendingArgs !== null) {
          const send = pendingArgs;
          pendingArgs = null;
          fn(...send);
        }
      }, intervalMs - (now - lastCall));
    }
  };
}

export const SLIDER_DEBOUNCE_MS = 150;
export const SCRUB_THROTTLE_MS = 100; // ten requests per second
