"""HTTP API over a trained model: upload, encode, transfer, edit, active
entries, and trajectory traversal. JSON everywhere; images travel as base64
PNG. The model snapshot is immutable for the lifetime of the server."""

from __future__ import annotations

import base64
import io
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from .codec import ModelSnapshot, encode
from .config import ManipulationConfig, RuntimeConfig
from .core import ChromacodeError, clamp01
from .latent import Trajectory, active_entries_from_variances, parallel_curve, trajectory_point
from .pipelines import apply_embedding, edit_entries, transfer_colour


class SessionStore:
    """In-memory stores for uploaded images, cached embeddings, trajectories."""

    def __init__(self):
        self._lock = threading.Lock()
        self.images: dict[str, np.ndarray] = {}
        self.embeddings: dict[str, np.ndarray] = {}
        self.trajectories: dict[str, Trajectory] = {}
        self._counters = {"img": 0, "traj": 0}

    def next_id(self, kind: str) -> str:
        with self._lock:
            self._counters[kind] += 1
            return f"{kind}-{self._counters[kind]:06d}"


def _decode_image(b64: str) -> np.ndarray:
    raw = base64.b64decode(b64.encode("ascii"), validate=True)
    with Image.open(io.BytesIO(raw)) as img:
        if img.mode != "RGB":
            img = img.convert("RGB")
        data = np.asarray(img, dtype=np.float64) / 255.0
    return clamp01(data)


def _encode_image(image: np.ndarray) -> str:
    data = np.round(clamp01(image) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(model: ModelSnapshot, config: RuntimeConfig | None = None) -> FastAPI:
    config = config or RuntimeConfig()
    app = FastAPI(title="chromacode", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore()
    manip_cfg = ManipulationConfig(tau=config.tau, h=config.h, epsilon=config.epsilon)
    upload_limit = int(config.upload_limit_mb * 1024 * 1024)

    @app.exception_handler(RequestValidationError)
    async def _on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.exception_handler(ChromacodeError)
    async def _on_domain_error(request: Request, exc: ChromacodeError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def _err(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": message})

    def _get_image(image_id) -> np.ndarray | None:
        return store.images.get(str(image_id))

    def _cached_embedding(image_id: str) -> np.ndarray:
        if image_id not in store.embeddings:
            store.embeddings[image_id] = encode(model, store.images[image_id])
        return store.embeddings[image_id].copy()

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "model_version": model.version}

    @app.post("/v1/images")
    async def upload_image(body: dict):
        b64 = body.get("image")
        if not isinstance(b64, str) or not b64:
            return _err(400, "body must contain a base64 PNG under 'image'")
        if len(b64) > upload_limit:
            return _err(413, f"upload exceeds the {config.upload_limit_mb} MB limit")
        try:
            image = _decode_image(b64)
        except Exception as exc:  # malformed base64 or image payload
            return _err(400, f"could not decode image: {exc}")
        image_id = store.next_id("img")
        store.images[image_id] = image
        return {"id": image_id, "height": image.shape[0], "width": image.shape[1]}

    @app.post("/v1/encode")
    async def encode_endpoint(body: dict):
        image = _get_image(body.get("image_id"))
        if image is None:
            return _err(404, f"unknown image id {body.get('image_id')!r}")
        embedding = _cached_embedding(str(body["image_id"]))
        return {"embedding": embedding.tolist()}

    @app.post("/v1/transfer")
    async def transfer_endpoint(body: dict):
        structure = _get_image(body.get("structure_id"))
        colour = _get_image(body.get("colour_id"))
        if structure is None:
            return _err(404, f"unknown image id {body.get('structure_id')!r}")
        if colour is None:
            return _err(404, f"unknown image id {body.get('colour_id')!r}")
        out = transfer_colour(model, structure, colour, manip_cfg)
        return {"image": _encode_image(out)}

    @app.post("/v1/edit")
    async def edit_endpoint(body: dict):
        image = _get_image(body.get("image_id"))
        if image is None:
            return _err(404, f"unknown image id {body.get('image_id')!r}")
        edits_raw = body.get("edits", {})
        if not isinstance(edits_raw, dict):
            return _err(400, "'edits' must be an object of index -> value")
        try:
            edits = {int(k): float(v) for k, v in edits_raw.items()}
        except (TypeError, ValueError):
            return _err(400, "'edits' keys must be integers and values numbers")
        if any(not (0 <= k < model.embedding_dim) for k in edits):
            return _err(400, f"edit indices must lie in [0, {model.embedding_dim})")
        out = edit_entries(model, image, edits, manip_cfg)
        return {"image": _encode_image(out)}

    @app.get("/v1/model/active-entries")
    async def active_entries_endpoint(top: int | None = None):
        variances = model.embedding_variance
        indices = active_entries_from_variances(variances, config.active_threshold)
        indices = sorted(indices, key=lambda i: -variances[i])
        if top is not None:
            indices = indices[: max(int(top), 0)]
        stds = np.sqrt(variances[indices]) if indices else np.zeros(0)
        return {
            "indices": [int(i) for i in indices],
            "variances": [float(variances[i]) for i in indices],
            "means": [float(model.embedding_mean[i]) for i in indices],
            "stds": [float(s) for s in stds],
        }

    @app.post("/v1/trajectories")
    async def create_trajectory(body: dict):
        waypoints = body.get("waypoints")
        image_ids = body.get("tbsp_image_ids")
        if (waypoints is None) == (image_ids is None):
            return _err(400, "provide exactly one of 'waypoints' or 'tbsp_image_ids'")
        if image_ids is not None:
            rows = []
            for image_id in image_ids:
                if _get_image(image_id) is None:
                    return _err(404, f"unknown image id {image_id!r}")
                rows.append(_cached_embedding(str(image_id)))
            points = np.stack(rows)
        else:
            try:
                points = np.asarray(waypoints, dtype=np.float64)
            except (TypeError, ValueError):
                return _err(400, "'waypoints' must be a list of number lists")
            if points.ndim != 2 or points.shape[1] != model.embedding_dim:
                return _err(400, f"waypoints must be rows of length {model.embedding_dim}")
        if points.shape[0] < 2:
            return _err(400, "a trajectory needs at least two waypoints")
        traj = Trajectory(waypoints=points)
        anchor_id = body.get("anchor_image_id")
        if anchor_id is not None:
            if _get_image(anchor_id) is None:
                return _err(404, f"unknown image id {anchor_id!r}")
            traj = parallel_curve(traj, _cached_embedding(str(anchor_id)))
        traj_id = store.next_id("traj")
        store.trajectories[traj_id] = traj
        return {"trajectory_id": traj_id, "waypoints": traj.waypoints.shape[0]}

    @app.post("/v1/trajectories/{traj_id}/apply")
    async def apply_trajectory(traj_id: str, body: dict):
        traj = store.trajectories.get(traj_id)
        if traj is None:
            return _err(404, f"unknown trajectory id {traj_id!r}")
        image = _get_image(body.get("image_id"))
        if image is None:
            return _err(404, f"unknown image id {body.get('image_id')!r}")
        try:
            t = float(body.get("t", 0.0))
        except (TypeError, ValueError):
            return _err(400, "'t' must be a number")
        if not (0.0 <= t <= 1.0):
            return _err(400, "'t' must lie in [0, 1]")
        e_prime = trajectory_point(traj, t)
        out = apply_embedding(model, image, e_prime, manip_cfg)
        return {"image": _encode_image(out), "t": t}

    return app
