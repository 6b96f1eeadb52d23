"""Command-line interface.

Subcommands: train, encode, transfer, edit, augment, normalize, synthbench,
serve. Exit code 0 on success, 1 on validation or IO failure, 2 on usage
errors. Every random choice is driven by --seed, so repeated runs with the
same arguments produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import (
    AugmentationConfig,
    ManipulationConfig,
    RuntimeConfig,
    TrainingHyperparams,
    load_runtime_config,
)
from .core import ChromacodeError, load_image, load_manifest, save_image


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="path to a JSON runtime config")


def _runtime_config(args) -> RuntimeConfig:
    cfg = load_runtime_config(getattr(args, "config", None))
    for key in ("tau", "epsilon", "resolution", "host", "port"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chromacode",
        description="Learned colour codes: train, transfer, edit, augment, normalize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the colour codec on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--lambda-bpp", type=float, default=None)
    p.add_argument("--lambda-diver", type=float, default=None)
    p.add_argument("--lambda-color", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--decolour", choices=("randomized", "naive"), default=None)
    p.add_argument("--report", default=None, help="optional training report JSON path")

    p = sub.add_parser("encode", help="encode manifest images to embeddings")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output embeddings JSONL")
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("transfer", help="transfer colour from one image to another")
    p.add_argument("--model", required=True)
    p.add_argument("--structure", required=True, help="image providing geometry")
    p.add_argument("--colour", required=True, help="image providing colour")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    _add_config_arg(p)

    p = sub.add_parser("edit", help="overwrite embedding entries and re-render")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument(
        "--set",
        dest="edits",
        default="",
        help="comma-separated INDEX=VALUE overrides, e.g. 12=1.5,40=-0.2",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    _add_config_arg(p)

    p = sub.add_parser("augment", help="re-colour a dataset towards target embeddings")
    p.add_argument("--model", required=True)
    p.add_argument("--source", required=True, help="source manifest JSONL")
    p.add_argument("--targets", required=True, help="target embeddings JSONL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sampler", choices=("reuse", "independent_marginal"), default="reuse")
    p.add_argument("--include-originals", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    _add_config_arg(p)

    p = sub.add_parser("normalize", help="re-render a dataset under the mean embedding")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="manifest JSONL to normalize")
    p.add_argument("--embeddings", required=True, help="embeddings JSONL defining the mean")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    _add_config_arg(p)

    p = sub.add_parser("synthbench", help="generate a synthetic ground-truth corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--domain", choices=("light", "dark", "mixed"), default="mixed")
    p.add_argument("--split", choices=("train", "test"), default="train")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--prefix", default="scene")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="serve the HTTP API for a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--ui", default=None, help="optional directory of static UI files")
    p.add_argument("--seed", type=int, default=0)
    _add_config_arg(p)

    return parser


def _hp_from_args(args) -> TrainingHyperparams:
    hp = TrainingHyperparams(seed=args.seed)
    overrides = {}
    mapping = {
        "epochs": "epochs",
        "batch_size": "batch_size",
        "resolution": "resolution",
        "learning_rate": "learning_rate",
        "lambda_bpp": "lambda_bpp_g",
        "lambda_diver": "lambda_diver",
        "lambda_color": "lambda_color",
        "epsilon": "epsilon",
        "width": "width",
        "decolour": "decolour_mode",
    }
    for arg_name, field_name in mapping.items():
        value = getattr(args, arg_name)
        if value is not None:
            overrides[field_name] = value
    return replace(hp, **overrides)


def _manip_cfg(args, cfg: RuntimeConfig) -> ManipulationConfig:
    return ManipulationConfig(tau=cfg.tau, h=cfg.h, epsilon=cfg.epsilon, seed=args.seed)


def _cmd_train(args) -> int:
    from .codec import save_snapshot, train

    manifest = load_manifest(args.manifest)
    hp = _hp_from_args(args)
    snapshot, report = train(manifest, hp)
    save_snapshot(snapshot, args.out)
    if args.report:
        report.save(args.report)
    last = report.epochs[-1]
    print(
        f"trained {hp.epochs} epochs on {len(manifest)} images; "
        f"final reconstruction {last.reconstruction_loss:.4f}, "
        f"total {last.total_loss:.4f}"
    )
    return 0


def _cmd_encode(args) -> int:
    from .codec import encode_manifest, load_snapshot

    model = load_snapshot(args.model)
    manifest = load_manifest(args.manifest)
    if args.split != "all":
        manifest = manifest.subset(args.split)
    if len(manifest) == 0:
        raise ChromacodeError("no images selected to encode")
    embeddings = encode_manifest(model, manifest)
    embeddings.save_jsonl(args.out)
    print(f"encoded {len(embeddings)} images -> {args.out}")
    return 0


def _cmd_transfer(args) -> int:
    from .codec import load_snapshot
    from .pipelines import transfer_colour

    model = load_snapshot(args.model)
    cfg = _runtime_config(args)
    out = transfer_colour(
        model, load_image(args.structure), load_image(args.colour), _manip_cfg(args, cfg)
    )
    save_image(out, args.out)
    print(f"wrote {args.out}")
    return 0


def _parse_edits(text: str) -> dict[int, float]:
    edits: dict[int, float] = {}
    if not text.strip():
        return edits
    for part in text.split(","):
        if "=" not in part:
            raise ChromacodeError(f"bad edit {part!r}; expected INDEX=VALUE")
        key, value = part.split("=", 1)
        try:
            edits[int(key.strip())] = float(value.strip())
        except ValueError as err:
            raise ChromacodeError(f"bad edit {part!r}: {err}") from err
    return edits


def _cmd_edit(args) -> int:
    from .codec import load_snapshot
    from .pipelines import edit_entries

    model = load_snapshot(args.model)
    cfg = _runtime_config(args)
    edits = _parse_edits(args.edits)
    try:
        out = edit_entries(model, load_image(args.image), edits, _manip_cfg(args, cfg))
    except ValueError as err:
        raise ChromacodeError(str(err)) from err
    save_image(out, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_augment(args) -> int:
    from .codec import load_snapshot
    from .latent import EmbeddingSet
    from .pipelines import augment_dataset

    model = load_snapshot(args.model)
    cfg = _runtime_config(args)
    aug_cfg = AugmentationConfig(
        k=args.k,
        sampler=args.sampler,
        seed=args.seed,
        tau=cfg.tau,
        h=cfg.h,
        epsilon=cfg.epsilon,
        include_originals=args.include_originals,
    )
    source = load_manifest(args.source)
    targets = EmbeddingSet.load_jsonl(args.targets)
    manifest = augment_dataset(model, source, targets, aug_cfg, args.out)
    print(f"wrote {len(manifest)} augmented images under {args.out}")
    return 0


def _cmd_normalize(args) -> int:
    from .codec import load_snapshot
    from .latent import EmbeddingSet, mean_embedding
    from .pipelines import normalize_dataset

    model = load_snapshot(args.model)
    cfg = _runtime_config(args)
    data = load_manifest(args.data)
    e_bar = mean_embedding(EmbeddingSet.load_jsonl(args.embeddings))
    manifest = normalize_dataset(model, data, e_bar, _manip_cfg(args, cfg), args.out)
    print(f"wrote {len(manifest)} normalized images under {args.out}")
    return 0


def _cmd_synthbench(args) -> int:
    from .synthbench import generate_corpus

    manifest, _ = generate_corpus(
        n=args.n,
        domain=args.domain,
        seed=args.seed,
        out_dir=args.out,
        resolution=args.resolution,
        split=args.split,
        id_prefix=args.prefix,
    )
    print(f"generated {len(manifest)} scenes under {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .codec import load_snapshot
    from .server import create_app

    model = load_snapshot(args.model)
    cfg = _runtime_config(args)
    app = create_app(model, cfg)
    if args.ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.ui, html=True), name="ui")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "encode": _cmd_encode,
    "transfer": _cmd_transfer,
    "edit": _cmd_edit,
    "augment": _cmd_augment,
    "normalize": _cmd_normalize,
    "synthbench": _cmd_synthbench,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ChromacodeError, FileNotFoundError, ValueError) as err:
        print(json.dumps({"error": str(err)}), file=sys.stderr)
        return 1
    except OSError as err:
        print(json.dumps({"error": f"IO failure: {err}"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
