// Typed client for the colour-code service. Every rendered image the UI shows
// comes back from these endpoints; the UI itself never does image math.

export interface ActiveEntries {
  indices: number[];
  variances: number[];
  means: number[];
  stds: number[];
}

export interface UploadResult {
  id: string;
  height: number;
  width: number;
}

export interface ApiClient {
  health(): Promise<{ status: string; model_version: string }>;
  uploadImage(base64Png: string): Promise<UploadResult>;
  encode(imageId: string): Promise<number[]>;
  activeEntries(top?: number): Promise<ActiveEntries>;
  edit(imageId: string, edits: Record<number, number>): Promise<string>;
  transfer(structureId: string, colourId: string): Promise<string>;
  createTrajectory(tbspImageIds: string[], anchorImageId?: string): Promise<string>;
  applyTrajectory(trajectoryId: string, imageId: string, t: number): Promise<string>;
}

async function postJson(base: string, path: string, body: unknown): Promise<any> {
  const response = await fetch(base + path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const payload = await response.json();
  if (!response.ok) {
    throw new Error(payload.error ?? `HTTP ${response.status}`);
  }
  return payload;
}

export function createClient(baseUrl: string): ApiClient {
  const base = baseUrl.replace(/\/$/, "");
  return {
    async health() {
      const response = await fetch(base + "/v1/health");
      return response.json();
    },
    async uploadImage(base64Png: string) {
      return postJson(base, "/v1/images", { image: base64Png });
    },
    async encode(imageId: string) {
      const body = await postJson(base, "/v1/encode", { image_id: imageId });
      return body.embedding;
    },
    async activeEntries(top?: number) {
      const query = top === undefined ? "" : `?top=${top}`;
      const response = await fetch(base + "/v1/model/active-entries" + query);
      const payload = await response.json();
      if (!response.ok) throw new Error(payload.error ?? `HTTP ${response.status}`);
      return payload;
    },
    async edit(imageId: string, edits: Record<number, number>) {
      const body = await postJson(base, "/v1/edit", { image_id: imageId, edits });
      return body.image;
    },
    async transfer(structureId: string, colourId: string) {
      const body = await postJson(base, "/v1/transfer", {
        structure_id: structureId,
        colour_id: colourId,
      });
      return body.image;
    },
    async createTrajectory(tbspImageIds: string[], anchorImageId?: string) {
      const body = await postJson(base, "/v1/trajectories", {
        tbsp_image_ids: tbspImageIds,
        ...(anchorImageId ? { anchor_image_id: anchorImageId } : {}),
      });
      return body.trajectory_id;
    },
    async applyTrajectory(trajectoryId: string, imageId: string, t: number) {
      const body = await postJson(base, `/v1/trajectories/${trajectoryId}/apply`, {
        image_id: imageId,
        t,
      });
      return body.image;
    },
  };
}
