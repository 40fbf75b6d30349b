"""Export a bundled scenario to JSON, read it back, and re-run its queries."""

import json
import tempfile
from pathlib import Path

from histkit.queries import evaluate
from histkit.scenario_file import dump_scenario, parse_scenario
from histkit.scenarios import three_box

s = three_box()
text = dump_scenario(s)
path = Path(tempfile.mkdtemp()) / "three-box.json"
path.write_text(text)
print("wrote", path, len(text), "bytes")

back = parse_scenario(path.read_text())
a, b = evaluate(s), evaluate(back)
print("self-test passed:", b["passed"])
print("same results:", json.dumps(a["results"]) == json.dumps(b["results"]))
print("same text:", dump_scenario(back) == text)
