# Dataset and model files, VOC annotations, and the command-line tool.
#
# Run: python3 demos/04_files_and_cli.py
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from rankxfer.dataio import (
    SynthConfig,
    load_dataset,
    load_model,
    parse_voc_annotation,
    save_dataset,
    save_model,
    synth_generate,
)
from rankxfer.features import make_queries
from rankxfer.ranksvm import train

work = Path(tempfile.mkdtemp(prefix="rankxfer-demo-"))

# Datasets are JSON lines, one image per line.
records, _ = synth_generate(SynthConfig(n_images=20, seed=1))
save_dataset(records, work / "data.jsonl", sparse=True)
first = json.loads((work / "data.jsonl").read_text().splitlines()[0])
print("fields:", sorted(first))
print("one candidate:", {k: first["candidates"][0][k] for k in ("box", "objectness")})
assert load_dataset(work / "data.jsonl") == records

# Models are versioned JSON documents and load back bit-for-bit.
model = train(make_queries(records), 1.0)
save_model(model, work / "model.json")
assert load_model(work / "model.json") == model
print("model document keys:", sorted(json.loads((work / "model.json").read_text())))

# VOC annotations use inclusive pixel boxes; they come back half-open.
voc = work / "000001.xml"
voc.write_text(
    "<annotation><object><name>dog</name><difficult>0</difficult>"
    "<bndbox><xmin>48</xmin><ymin>240</ymin><xmax>195</xmax><ymax>371</ymax></bndbox>"
    "</object></annotation>"
)
print("VOC:", parse_voc_annotation(voc))

# The same pipeline from the shell. Each output gets a manifest beside it.
def rankxfer(*args):
    cmd = [sys.executable, "-m", "rankxfer.cli", *map(str, args)]
    print("$ rankxfer", " ".join(map(str, args)))
    out = subprocess.run(cmd, capture_output=True, text=True)
    print(out.stdout, end="")
    return out.returncode

rankxfer("synth", "--out", work / "s.jsonl", "--n-images", "40", "--seed", "2")
rankxfer("train", work / "s.jsonl", "--cv", "--c-grid", "0.1", "1", "10", "--out", work / "m.json")
rankxfer("annotate", work / "m.json", work / "s.jsonl", "--fuse-objectness", "0.7", "--out", work / "r.jsonl")
rankxfer("split-protocol", work / "s.jsonl", "--n-aux", "2", "--trials", "3", "--out", work / "split.json")
print("manifest:", json.loads((work / "m.json.manifest.json").read_text())["input_digests"])
print("exit code for a missing file:", rankxfer("train", work / "nope.jsonl", "--out", work / "x.json"))
print("files in", work, ":", sorted(p.name for p in work.iterdir()))
