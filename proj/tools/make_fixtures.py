#!/usr/bin/env python3
"""Regenerates fixtures/: two 24-frame 512x512 clips whose PNGs carry
attribute metadata for the mock services, the manifest, and the editor
conformance requests."""
import base64
import io
import json
import pathlib

from PIL import Image
from PIL.PngImagePlugin import PngInfo

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
KEYWORD = "causal-steer"

ITEMS = [
    {
        "id": "item-001",
        "meta": {"age": "old", "gender": "woman", "scene": "park bench", "lighting": "overcast daylight"},
        "colour": (96, 132, 170),
        "factual_prompt": "This woman is old.",
        "counterfactuals": {
            "age": "A woman is young",
            "gender": "This man is old, he has a beard.",
            "beard": "This woman is old, she has a beard.",
            "bald": "This woman is old, she is bald.",
        },
    },
    {
        "id": "item-002",
        "meta": {"age": "young", "gender": "man", "beard": "present", "scene": "office", "lighting": "warm lamp"},
        "colour": (170, 120, 88),
        "factual_prompt": "He is young, he has a beard.",
        "counterfactuals": {
            "age": "He is old, he has a beard.",
            "gender": "She is young.",
            "beard": "He is young, he has no beard.",
            "bald": "He is young, he has a beard, he is bald.",
        },
    },
]


def frame_png(colour, index, meta, size=512):
    r, g, b = colour
    img = Image.new("RGB", (size, size), colour)
    # A moving bar so every frame has distinct content.
    bar = Image.new("RGB", (size, 16), (min(r + 60, 255), min(g + 60, 255), min(b + 60, 255)))
    img.paste(bar, (0, (index * 20) % (size - 16)))
    info = PngInfo()
    info.add_text(KEYWORD, json.dumps(meta, sort_keys=True))
    buf = io.BytesIO()
    img.save(buf, format="PNG", pnginfo=info, optimize=False, compress_level=9)
    return buf.getvalue()


def main():
    manifest = {"version": "1", "graph_config": "celebv_graph.json", "items": []}
    for item in ITEMS:
        frames_dir = ROOT / "data" / item["id"] / "frames"
        frames_dir.mkdir(parents=True, exist_ok=True)
        for old in frames_dir.glob("*.png"):
            old.unlink()
        for i in range(24):
            (frames_dir / f"{i:04d}.png").write_bytes(frame_png(item["colour"], i, item["meta"]))
        manifest["items"].append({
            "id": item["id"],
            "frames_dir": f"data/{item['id']}/frames",
            "factual_prompt": item["factual_prompt"],
            "counterfactuals": item["counterfactuals"],
        })
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    conf = ROOT / "conformance"
    conf.mkdir(parents=True, exist_ok=True)
    small = [base64.b64encode(frame_png((80, 80, 80), i, {"scene": "grey"}, size=64)).decode() for i in range(3)]
    cases = [
        ("01_identity_passthrough", {"clip_id": "conf", "frames": small, "prompt": "A person sits in a room", "params": {}},
         {"status": 200, "frames_equal_request": True}),
        ("02_missing_prompt", {"clip_id": "conf", "frames": small, "params": {}}, {"status": 400}),
        ("03_unknown_field", {"clip_id": "conf", "frames": small, "prompt": "A person", "params": {}, "seed": 1},
         {"status": 400}),
        ("04_empty_frames", {"clip_id": "conf", "frames": [], "prompt": "A person", "params": {}}, {"status": 400}),
        ("05_bad_base64", {"clip_id": "conf", "frames": ["***"], "prompt": "A person", "params": {}}, {"status": 400}),
    ]
    for name, request, expect in cases:
        doc = {"name": name, "path": "/v1/edit", "request": request, "expect": expect}
        (conf / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
