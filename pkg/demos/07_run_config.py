"""
Config-driven runs
==================

The ``designham-sim`` command wraps every workflow behind a JSON config.  This
script writes a small frame-potential config, runs it in-process and prints
the manifest with seeds and output digests.
"""

import json
import tempfile
from pathlib import Path

from designham_sim.cli import ExperimentConfig, run_experiment

out = Path(tempfile.mkdtemp(prefix="designham-"))
config = ExperimentConfig.from_dict({
    "mode": "frame-potential",
    "molecule": "random:5",
    "ensemble_size": 40,
    "k_list": [1, 2],
    "rng_seed": 123,
})
manifest = run_experiment(config, out)
print(json.dumps({"seeds": manifest.seeds, "outputs": manifest.outputs,
                  "summary": manifest.summary}, indent=2))
print((out / "frame_potential.csv").read_text())
