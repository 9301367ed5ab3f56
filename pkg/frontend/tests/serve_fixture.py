"""Stands up a 6-item study service for the frontend end-to-end test.

Usage: python3 serve_fixture.py <workdir> <port>
"""

import json
import sys
from pathlib import Path

import numpy as np
import uvicorn
from PIL import Image

from histoforge.service import create_app


def main():
    root = Path(sys.argv[1])
    port = int(sys.argv[2])
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    items = []
    for i in range(6):
        item_id = f"item{i}"
        Image.fromarray(
            rng.integers(0, 255, size=(16, 16, 3), dtype=np.uint8)
        ).save(images / f"{item_id}.png")
        items.append(
            {
                "item_id": item_id,
                "dataset": "camelyon16",
                "image_path": f"images/{item_id}.png",
                "origin": "real" if i % 2 == 0 else "synthetic",
            }
        )
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps({"items": items}))
    app = create_app(manifest_path, root / "store", require_balanced=True)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()
