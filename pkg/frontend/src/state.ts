// Pure UI state transitions. Every function returns a new state; replaying an
// event log therefore reproduces the same final state. Responses carry the
// sequence number of their request and are dropped unless they are the latest
// issued for their panel, so a slow early response can never overwrite a
// newer render.

export interface SliderSpec {
  index: number;
  min: number;
  max: number;
  value: number;
}

export type Panel = "edit" | "transfer" | "trajectory";

export interface UiState {
  currentImageId: string | null;
  baseline: number[] | null; // encoded embedding of the current image
  sliders: SliderSpec[];
  donorImageId: string | null;
  trajectoryId: string | null;
  scrubT: number;
  resultImage: string | null;
  error: string | null;
  nextSeq: number;
  latestSeq: Record<Panel, number>;
}

export function initialState(): UiState {
  return {
    currentImageId: null,
    baseline: null,
    sliders: [],
    donorImageId: null,
    trajectoryId: null,
    scrubT: 0,
    resultImage: null,
    error: null,
    nextSeq: 0,
    latestSeq: { edit: -1, transfer: -1, trajectory: -1 },
  };
}

export function imageSelected(state: UiState, imageId: string): UiState {
  return { ...state, currentImageId: imageId, resultImage: null, error: null };
}

export function donorSelected(state: UiState, imageId: string): UiState {
  return { ...state, donorImageId: imageId };
}

export function trajectorySelected(state: UiState, trajectoryId: string): UiState {
  return { ...state, trajectoryId, scrubT: 0 };
}

/** Build sliders for the active entries: range mean +- 3 std, widened to
 * include the current image's encoded value; slider starts at that value. */
export function slidersInitialized(
  state: UiState,
  baseline: number[],
  entries: { indices: number[]; means: number[]; stds: number[] },
  topK = 5,
): UiState {
  const sliders: SliderSpec[] = [];
  for (let k = 0; k < Math.min(topK, entries.indices.length); k++) {
    const index = entries.indices[k];
    const value = baseline[index];
    const lo = entries.means[k] - 3 * entries.stds[k];
    const hi = entries.means[k] + 3 * entries.stds[k];
    sliders.push({
      index,
      min: Math.min(lo, value),
      max: Math.max(hi, value),
      value,
    });
  }
  return { ...state, baseline, sliders };
}

export function sliderChanged(state: UiState, index: number, value: number): UiState {
  if (!state.sliders.some((s) => s.index === index)) {
    return state;
  }
  const sliders = state.sliders.map((s) => (s.index === index ? { ...s, value } : s));
  return { ...state, sliders };
}

export function slidersReset(state: UiState): UiState {
  if (!state.baseline) return state;
  const baseline = state.baseline;
  const sliders = state.sliders.map((s) => ({ ...s, value: baseline[s.index] }));
  return { ...state, sliders };
}

export function scrubbed(state: UiState, t: number): UiState {
  return { ...state, scrubT: Math.min(1, Math.max(0, t)) };
}

/** Current slider overrides as an edits map (only entries that moved). */
export function currentEdits(state: UiState): Record<number, number> {
  const edits: Record<number, number> = {};
  for (const s of state.sliders) {
    if (state.baseline === null || s.value !== state.baseline[s.index]) {
      edits[s.index] = s.value;
    }
  }
  return edits;
}

/** Allocate a sequence number for a request on a panel; the allocated number
 * becomes the only one whose response will be displayed. */
export function requestIssued(state: UiState, panel: Panel): [UiState, number] {
  const seq = state.nextSeq;
  return [
    {
      ...state,
      nextSeq: seq + 1,
      latestSeq: { ...state.latestSeq, [panel]: seq },
    },
    seq,
  ];
}

/** Apply a response only if it is the latest issued for its panel. */
export function responseArrived(
  state: UiState,
  panel: Panel,
  seq: number,
  image: string,
): UiState {
  if (state.latestSeq[panel] !== seq) {
    return state; // stale response: a newer request supersedes it
  }
  return { ...state, resultImage: image, error: null };
}

export function requestFailed(state: UiState, panel: Panel, seq: number, message: string): UiState {
  if (state.latestSeq[panel] !== seq) {
    return state;
  }
  return { ...state, error: message };
}
