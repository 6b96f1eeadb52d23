import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { ExplorerController } from "../src/controller.js";

/** Mock API whose edit responses resolve only when the test says so. */
function delayedMockApi() {
  const pending: Array<{ edits: Record<number, number>; resolve: (img: string) => void }> = [];
  const api: ApiClient = {
    health: async () => ({ status: "ok", model_version: "test" }),
    uploadImage: async () => ({ id: "img-1", height: 32, width: 32 }),
    encode: async () => new Array(256).fill(0),
    activeEntries: async (top = 5) => ({
      indices: [0, 1, 2, 3, 4].slice(0, top),
      variances: [5, 4, 3, 2, 1].slice(0, top),
      means: [0, 0, 0, 0, 0].slice(0, top),
      stds: [1, 1, 1, 1, 1].slice(0, top),
    }),
    edit: (_id, edits) =>
      new Promise((resolve) => {
        pending.push({ edits, resolve });
      }),
    transfer: async () => "TRANSFER",
    createTrajectory: async () => "traj-1",
    applyTrajectory: async (_t, _i, t) => `SCRUB@${t}`,
  };
  return { api, pending };
}

async function settle() {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("stale-response race", () => {
  it("displays the image of the last request even when responses arrive out of order", async () => {
    vi.useFakeTimers();
    const { api, pending } = delayedMockApi();
    const controller = new ExplorerController(api, () => {}, 10);

    const selecting = controller.selectImage("img-1");
    await vi.advanceTimersByTimeAsync(50); // initial no-op render request queues
    pending.shift()!.resolve("INITIAL");
    await selecting;

    controller.handleSliderInput(0, 1.0);
    await vi.advanceTimersByTimeAsync(20); // debounce fires: request A
    controller.handleSliderInput(0, 2.0);
    await vi.advanceTimersByTimeAsync(20); // request B
    expect(pending).toHaveLength(2);

    const [first, second] = [pending.shift()!, pending.shift()!];
    expect(first.edits).toEqual({ 0: 1.0 });
    expect(second.edits).toEqual({ 0: 2.0 });

    second.resolve("B");
    await vi.advanceTimersByTimeAsync(1);
    expect(controller.state.resultImage).toBe("B");

    first.resolve("A"); // late arrival of the superseded request
    await vi.advanceTimersByTimeAsync(1);
    expect(controller.state.resultImage).toBe("B");
    vi.useRealTimers();
  });
});

describe("debounced slider edits", () => {
  it("a burst of slider movements issues exactly one edit call", async () => {
    vi.useFakeTimers();
    const { api, pending } = delayedMockApi();
    const controller = new ExplorerController(api, () => {}, 150);

    const selecting = controller.selectImage("img-1");
    await vi.advanceTimersByTimeAsync(200);
    pending.shift()!.resolve("INITIAL");
    await selecting;

    for (let i = 0; i < 10; i++) {
      controller.handleSliderInput(0, i / 10);
      await vi.advanceTimersByTimeAsync(30); // under the debounce window
    }
    expect(pending).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(150);
    expect(pending).toHaveLength(1);
    expect(pending[0].edits).toEqual({ 0: 0.9 });
    vi.useRealTimers();
  });
});

describe("transfer", () => {
  it("re-initializes sliders from the donor embedding", async () => {
    const { api, pending } = delayedMockApi();
    const donorEmbedding = new Array(256).fill(0);
    donorEmbedding[0] = 7.5;
    api.encode = vi
      .fn<[string], Promise<number[]>>()
      .mockResolvedValueOnce(new Array(256).fill(0)) // source baseline
      .mockResolvedValueOnce(donorEmbedding); // donor after transfer
    const controller = new ExplorerController(api, () => {}, 1);

    const selecting = controller.selectImage("img-1");
    await settle();
    pending.shift()?.resolve("INITIAL");
    await selecting;
    controller.selectDonor("img-2");
    await controller.transferClicked();
    expect(controller.state.resultImage).toBe("TRANSFER");
    expect(controller.state.sliders[0].value).toBe(7.5);
  });

  it("does nothing without a donor", async () => {
    const { api } = delayedMockApi();
    const transfer = vi.spyOn(api, "transfer");
    const controller = new ExplorerController(api, () => {}, 1);
    await controller.transferClicked();
    expect(transfer).not.toHaveBeenCalled();
  });
});
