#!/usr/bin/env python3
"""External reducer for embgen: umap_backend.py <input.json> <output.json>.

Input holds {"params": {...}, "vectors": [[...], ...]}; output gets
{"vectors": [[...], ...]}. Requires umap-learn.
"""
import json
import sys

import numpy as np
import umap


def main(argv):
    with open(argv[1]) as f:
        payload = json.load(f)
    p = payload["params"]
    x = np.asarray(payload["vectors"], dtype=np.float64)
    reducer = umap.UMAP(
        n_neighbors=min(int(p["n_neighbors"]), max(2, len(x) - 1)),
        n_components=int(p["n_components"]),
        min_dist=float(p["min_dist"]),
        metric=p["metric"],
        random_state=int(p["random_state"]),
    )
    out = reducer.fit_transform(x)
    with open(argv[2], "w") as f:
        json.dump({"vectors": out.tolist()}, f)


if __name__ == "__main__":
    main(sys.argv)
