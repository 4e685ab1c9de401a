"""Regenerate src/atcdp/data/wada_snr_table.json."""

import argparse
import json
from pathlib import Path

from atcdp.signal import build_wada_table

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=4_000_000)
    parser.add_argument("--seed", type=int, default=20220209)
    parser.add_argument(
        "--out", type=Path,
        default=Path(__file__).resolve().parents[1] / "src/atcdp/data/wada_snr_table.json",
    )
    args = parser.parse_args()
    table = build_wada_table(args.samples, seed=args.seed)
    args.out.write_text(json.dumps(table, indent=1) + "\n")
    print(f"wrote {args.out} ({len(table['snr_db'])} points)")
