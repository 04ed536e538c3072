"""End-to-end distance demo through the command line tool.

Generates the distance-1 family on F_5^2, measures its joinedness, embeds a
K_3 subdivision whose edges all ask for distance 1, and verifies the result.

    python scripts/distance_demo.py [--workdir DIR] [--seed N]
"""

import argparse
import json
import tempfile
from pathlib import Path

from colorembed.cli import main as cli


def run(*argv):
    code = cli([str(a) for a in argv])
    print(f"$ colorembed {' '.join(str(a) for a in argv)}  -> exit {code}")
    return code


def demo(workdir: Path, seed: int) -> int:
    fam, tgt, emb = workdir / "f5.json", workdir / "k3.json", workdir / "embedding.json"
    run("--seed", seed, "gen", "--ffdist", "q=5", "d=2", "R=1", "-o", fam)
    run("--seed", seed, "certify", fam, "--joined", "-o", workdir / "joined.json")
    run("--seed", seed, "target", "subdivision", "D=3", "ell=5", "color=1", "-o", tgt)
    code = run("--seed", seed, "embed", fam, tgt, "mode=best-effort", "-o", emb)
    if code:
        return code
    out = json.loads(emb.read_text())
    print(f"working s = {out['s']} ({out['s_source']})")
    for note in out["notes"]:
        print("note:", note)
    for h, p in sorted(out["embedding"]["points"].items(), key=lambda kv: int(kv[0])):
        print(f"  {h:>3} -> {tuple(p)}")
    return run("verify", fam, emb, "--target", tgt, "-o", workdir / "verify.json")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if args.workdir:
        Path(args.workdir).mkdir(parents=True, exist_ok=True)
        raise SystemExit(demo(Path(args.workdir), args.seed))
    with tempfile.TemporaryDirectory() as tmp:
        raise SystemExit(demo(Path(tmp), args.seed))
