"""Print the manifest summaries of every run directory below a root."""
import argparse
import json
from pathlib import Path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("root", nargs="?", default="runs")
    args = ap.parse_args()
    for man in sorted(Path(args.root).glob("*/manifest.json")):
        data = json.loads(man.read_text())
        print(f"{man.parent.name:28s} {data['experiment']:11s} {data['status']:11s} "
              f"{data['timings'].get('total', float('nan')):8.2f}s")
        for key, val in data["summary"].items():
            if isinstance(val, dict):
                val = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in val.items())
            print(f"    {key}: {val}")


if __name__ == "__main__":
    main()
