// DOM wiring for the latent explorer. Reads files, renders state, and
// forwards events to the controller; all logic lives in controller/state.

import { createClient } from "./api.js";
import { ExplorerController } from "./controller.js";
import { UiState } from "./state.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("api") ?? location.origin;

const api = createClient(SERVICE_URL);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const statusLine = el<HTMLSpanElement>("status");
const errorBanner = el<HTMLDivElement>("error-banner");
const sourcePanel = el<HTMLImageElement>("source-image");
const donorPanel = el<HTMLImageElement>("donor-image");
const resultPanel = el<HTMLImageElement>("result-image");
const sliderBox = el<HTMLDivElement>("sliders");
const scrub = el<HTMLInputElement>("scrub");
const transferButton = el<HTMLButtonElement>("transfer-button");

const uploads: { source?: string; donor?: string } = {};

function render(state: UiState) {
  errorBanner.hidden = state.error === null;
  errorBanner.textContent = state.error ?? "";
  if (state.resultImage) {
    resultPanel.src = `data:image/png;base64,${state.resultImage}`;
  }
  transferButton.disabled = !(state.currentImageId && state.donorImageId);

  if (sliderBox.childElementCount !== state.sliders.length) {
    sliderBox.textContent = "";
    for (const spec of state.sliders) {
      const row = document.createElement("label");
      row.className = "slider-row";
      const title = document.createElement("span");
      title.textContent = `entry ${spec.index}`;
      const input = document.createElement("input");
      input.type = "range";
      input.dataset.entry = String(spec.index);
      input.addEventListener("input", () => {
        controller.handleSliderInput(spec.index, Number(input.value));
      });
      row.append(title, input);
      sliderBox.append(row);
    }
  }
  for (const input of sliderBox.querySelectorAll<HTMLInputElement>("input[type=range]")) {
    const spec = state.sliders.find((s) => s.index === Number(input.dataset.entry));
    if (!spec) continue;
    input.min = String(spec.min);
    input.max = String(spec.max);
    input.step = String((spec.max - spec.min) / 200 || 0.01);
    if (document.activeElement !== input) {
      input.value = String(spec.value);
    }
  }
}

const controller = new ExplorerController(api, render);

async function readFileAsBase64Png(file: File): Promise<string> {
  const buffer = await file.arrayBuffer();
  let binary = "";
  for (const byte of new Uint8Array(buffer)) {
    binary += String.fromCharCode(byte);
  }
  return btoa(binary);
}

async function upload(file: File): Promise<string> {
  const b64 = await readFileAsBase64Png(file);
  const result = await api.uploadImage(b64);
  return result.id;
}

el<HTMLInputElement>("source-file").addEventListener("change", async (event) => {
  const file = (event.target as HTMLInputElement).files?.[0];
  if (!file) return;
  sourcePanel.src = URL.createObjectURL(file);
  uploads.source = await upload(file);
  await controller.selectImage(uploads.source);
});

el<HTMLInputElement>("donor-file").addEventListener("change", async (event) => {
  const file = (event.target as HTMLInputElement).files?.[0];
  if (!file) return;
  donorPanel.src = URL.createObjectURL(file);
  uploads.donor = await upload(file);
  controller.selectDonor(uploads.donor);
});

transferButton.addEventListener("click", () => void controller.transferClicked());
el<HTMLButtonElement>("reset-button").addEventListener("click", () =>
  controller.resetSliders(),
);

el<HTMLInputElement>("tbsp-files").addEventListener("change", async (event) => {
  const files = (event.target as HTMLInputElement).files;
  if (!files || files.length < 2) return;
  const ids: string[] = [];
  for (const file of Array.from(files)) {
    ids.push(await upload(file));
  }
  await controller.createTrajectory(ids, true);
  scrub.disabled = false;
});

scrub.addEventListener("input", () => {
  controller.handleScrub(Number(scrub.value) / 1000);
});

api
  .health()
  .then((body) => {
    statusLine.textContent = `model ${body.model_version} (${SERVICE_URL})`;
  })
  .catch(() => {
    statusLine.textContent = `service unreachable at ${SERVICE_URL}`;
  });
