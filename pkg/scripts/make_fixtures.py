"""Regenerate the rally scripts in fixtures/ from their seeds."""

import argparse
import json
import os

from courtmetrics import synth

HERE = os.path.dirname(os.path.abspath(__file__))

FIXTURES = {
    "baseline-rally": dict(seed=7),
    "speeds-and-reactions": dict(seed=11, n_shots=9, speeds_kmh=(120, 80, 40), reaction_delays_s=(0.2, 0.4, 0.8)),
    "overhead": dict(seed=3, n_shots=6, camera=synth.overhead_camera(25.0)),
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-dir", default=os.path.join(HERE, os.pardir, "fixtures"))
    p.add_argument("--check", action="store_true", help="only verify the files on disk match")
    args = p.parse_args()
    stale = []
    for name, kw in FIXTURES.items():
        kw = dict(kw)
        script = synth.random_rally(kw.pop("seed"), kw.pop("n_shots", None), name=name, **kw)
        synth.validate_script(script)
        path = os.path.join(args.out_dir, f"{name}.json")
        text = json.dumps(script.to_dict(), indent=1) + "\n"
        if args.check:
            with open(path) as fh:
                if fh.read() != text:
                    stale.append(name)
            continue
        with open(path, "w") as fh:
            fh.write(text)
        print(f"wrote {path} ({len(script.shots)} shots)")
    if stale:
        raise SystemExit(f"stale fixtures: {', '.join(stale)}")


if __name__ == "__main__":
    main()
