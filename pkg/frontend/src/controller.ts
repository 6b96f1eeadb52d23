// Glue between the pure state module and the API client. The controller owns
// the single mutable state reference and exposes the handlers the DOM layer
// binds to; all throttling and stale-response handling lives here so the DOM
// layer stays trivial.

import { ApiClient } from "./api.js";
import {
  Panel,
  UiState,
  currentEdits,
  donorSelected,
  imageSelected,
  initialState,
  requestFailed,
  requestIssued,
  responseArrived,
  scrubbed,
  sliderChanged,
  slidersInitialized,
  slidersReset,
  trajectorySelected,
} from "./state.js";
import { SCRUB_THROTTLE_MS, SLIDER_DEBOUNCE_MS, debounce, throttle } from "./scheduler.js";

export class ExplorerController {
  state: UiState = initialState();
  private readonly debouncedEdit: () => void;
  private readonly throttledScrub: () => void;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: UiState) => void,
    debounceMs = SLIDER_DEBOUNCE_MS,
    throttleMs = SCRUB_THROTTLE_MS,
  ) {
    this.debouncedEdit = debounce(() => void this.issueEdit(), debounceMs);
    this.throttledScrub = throttle(() => void this.issueScrub(), throttleMs);
  }

  private update(next: UiState) {
    this.state = next;
    this.onChange(next);
  }

  async selectImage(imageId: string, topK = 5): Promise<void> {
    this.update(imageSelected(this.state, imageId));
    const [baseline, entries] = await Promise.all([
      this.api.encode(imageId),
      this.api.activeEntries(topK),
    ]);
    this.update(slidersInitialized(this.state, baseline, entries, topK));
    await this.issueEdit(); // initial self-reconstruction render
  }

  selectDonor(imageId: string): void {
    this.update(donorSelected(this.state, imageId));
  }

  handleSliderInput(index: number, value: number): void {
    this.update(sliderChanged(this.state, index, value));
    this.debouncedEdit();
  }

  resetSliders(): void {
    this.update(slidersReset(this.state));
    this.debouncedEdit();
  }

  async transferClicked(): Promise<void> {
    const { currentImageId, donorImageId } = this.state;
    if (!currentImageId || !donorImageId) return;
    const [next, seq] = requestIssued(this.state, "transfer");
    this.update(next);
    try {
      const image = await this.api.transfer(currentImageId, donorImageId);
      this.update(responseArrived(this.state, "transfer", seq, image));
      // sliders re-initialize from the donor embedding after a transfer
      const donorEmbedding = await this.api.encode(donorImageId);
      const entries = await this.api.activeEntries(this.state.sliders.length || 5);
      this.update(slidersInitialized(this.state, donorEmbedding, entries));
    } catch (err) {
      this.update(requestFailed(this.state, "transfer", seq, String(err)));
    }
  }

  async createTrajectory(tbspImageIds: string[], anchorToCurrent = false): Promise<void> {
    const anchor =
      anchorToCurrent && this.state.currentImageId ? this.state.currentImageId : undefined;
    const id = await this.api.createTrajectory(tbspImageIds, anchor);
    this.update(trajectorySelected(this.state, id));
  }

  handleScrub(t: number): void {
    this.update(scrubbed(this.state, t));
    this.throttledScrub();
  }

  async issueEdit(): Promise<void> {
    const imageId = this.state.currentImageId;
    if (!imageId) return;
    const [next, seq] = requestIssued(this.state, "edit");
    this.update(next);
    try {
      const image = await this.api.edit(imageId, currentEdits(this.state));
      this.update(responseArrived(this.state, "edit", seq, image));
    } catch (err) {
      this.update(requestFailed(this.state, "edit", seq, String(err)));
    }
  }

  private async issueScrub(): Promise<void> {
    const { trajectoryId, currentImageId, scrubT } = this.state;
    if (!trajectoryId || !currentImageId) return;
    const [next, seq] = requestIssued(this.state, "trajectory");
    this.update(next);
    try {
      const image = await this.api.applyTrajectory(trajectoryId, currentImageId, scrubT);
      this.update(responseArrived(this.state, "trajectory", seq, image));
    } catch (err) {
      this.update(requestFailed(this.state, "trajectory", seq, String(err)));
    }
  }
}
