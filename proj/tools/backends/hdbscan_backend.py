#!/usr/bin/env python3
"""External clusterer for embgen: hdbscan_backend.py <input.json> <output.json>.

Input holds {"params": {...}, "vectors": [[...], ...]}; output gets
{"labels": [...]} with -1 for noise. Requires the hdbscan package.
"""
import json
import sys

import hdbscan
import numpy as np


def main(argv):
    with open(argv[1]) as f:
        payload = json.load(f)
    p = payload["params"]
    x = np.asarray(payload["vectors"], dtype=np.float64)
    model = hdbscan.HDBSCAN(
        min_cluster_size=int(p["min_cluster_size"]),
        min_samples=int(p["min_samples"]),
        metric=p["metric"],
        cluster_selection_epsilon=float(p["cluster_selection_epsilon"]),
    )
    labels = model.fit_predict(x)
    with open(argv[2], "w") as f:
        json.dump({"labels": [int(v) for v in labels]}, f)


if __name__ == "__main__":
    main(sys.argv)
