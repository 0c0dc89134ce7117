"""The geoflow command line: config files, flag overrides and artifacts."""

import json
import pathlib
import tempfile

from geoflow.cli import main

work = pathlib.Path(tempfile.mkdtemp())
cfg = work / "ellipse.yaml"
cfg.write_text(
    "manifold:\n  family: euclidean\n"
    "curve:\n  init: ellipse\n  N: 128\n  params: {a: 2.0, b: 1.0}\n"
    "flow:\n  t_max: 0.05\n"
)

# %% flags override the file; every key remembers where it came from
code = main(["flow", "--config", str(cfg), "--t-max", "0.1", "--snapshot-every", "200", "--out-dir", str(work / "run")])
report = json.loads((work / "run" / "report.json").read_text())
print("exit", code, "| t_max from", report["provenance"]["flow.t_max"], "| N from", report["provenance"]["curve.N"])
print("artifacts:", sorted(p.name for p in (work / "run").iterdir()))
print("trace header:", (work / "run" / "trace.csv").read_text().splitlines()[0][:60], "...")

# %% an invalid config lists every problem and exits with 3
print("exit", main(["flow", "--N", "100", "--t-max", "-1", "--out-dir", str(work / "bad")]))

# %% the helix ODE writes a trace with its closed-form residuals
print("exit", main(["helix", "--K", "-1", "--k0", "1", "--tau0", "1", "--out-dir", str(work / "helix")]))
