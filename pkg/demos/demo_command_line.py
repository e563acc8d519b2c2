"""
The command-line workflow end to end
====================================

"""

# render the fixture corpus and analyse it into a scratch directory
import json
import tempfile
from pathlib import Path
from tablawave.cli import main
work = Path(tempfile.mkdtemp())
main(["synth", "--corpus", "--out", str(work / "wav")])
main(["analyze", str(work / "wav"), "--out", str(work / "res")])

# statistics on the per-clip attack times, damped against free strokes
main(["stats", str(work / "res" / "features.csv"), "--group-by", "damping",
      "--measure", "attack_peak_s", "--tests", "descriptives,welch", "--out", str(work / "stats")])

# the three categorization rules, each with the numbers it used
main(["categorize", str(work / "res" / "features.csv"), "--out", str(work)])
report = json.loads((work / "categorization.json").read_text())
for rule in report["rules"]:
    print(rule["rule"], rule["holds"], {k: v for k, v in rule.items() if k not in ("sources", "statement")})
