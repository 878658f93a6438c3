"""Regenerate the shipped example decks under src/chiplink/data/decks.

Example 2 is fully pinned. Examples 1 and 3 only publish bandwidth and
distance ranges, so their per-net values are sampled here with a fixed seed
and the decks are labeled approximate.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from chiplink.assignment import Chiplet, Net, dump_floorplan, dump_netlist

DECKS = Path(__file__).resolve().parents[1] / "src" / "chiplink" / "data" / "decks"
OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}


def write_deck(name, chiplets, nets, scenario, note):
    out = DECKS / name
    out.mkdir(parents=True, exist_ok=True)
    header = f"# {note}\n"
    (out / "floorplan.csv").write_text(header + dump_floorplan(chiplets))
    (out / "netlist.csv").write_text(header + dump_netlist(nets))
    scenario = {"netlist": "netlist.csv", "floorplan": "floorplan.csv", **scenario}
    lines = [f"# {note}"] + [f"{k}: {v}" for k, v in scenario.items()]
    (out / "scenario.yaml").write_text("\n".join(lines) + "\n")


def example1():
    chips, nets = [], []
    bws = [2033, 3120, 4480, 5150, 6010, 7228]
    for tile in range(2):
        c = f"t{tile}_cpu"
        chips.append(Chiplet.from_die(c, 7.5, 7.5))
        for m, side in ((1, "N"), (2, "S")):
            mem = f"t{tile}_mem{m}"
            chips.append(Chiplet.from_die(mem, 6.0, 6.0))
            for j in range(3):
                bw = bws[(3 * (m - 1) + j + tile) % len(bws)]
                nets.append(Net(f"t{tile}_m{m}_{j}", ((c, side), (mem, OPPOSITE[side])), 0.5, float(bw)))
    for j in range(2):
        nets.append(Net(f"x{j}", (("t0_cpu", "E"), ("t1_cpu", "W")), 6.0, 1604.0))
    scenario = {"lambda_p": 11.27, "lambda_a": 175.42, "library": "links_table2_7nm_feccrc", "filter": "all"}
    write_deck("example1", chips, nets, scenario, "Example 1 (approximate): short-net bandwidths sampled from the published 2033-7228 Gbps range")


def example2():
    chips = [Chiplet.from_die(f"tile_{r}{c}", 24.0, 24.0) for r in range(4) for c in range(4)]
    nets = []
    for r in range(4):
        for c in range(4):
            for dr, dc, side in ((0, 1, "E"), (1, 0, "S")):
                rr, cc = r + dr, c + dc
                if rr > 3 or cc > 3:
                    continue
                for k in range(2):
                    nets.append(Net(f"n{r}{c}_{rr}{cc}_{k}", ((f"tile_{r}{c}", side), (f"tile_{rr}{cc}", OPPOSITE[side])), 5.0, 1604.0))
    # extra inter-row links between the outer rows, on the otherwise unused outer edges
    for c, dist in zip(range(4), (60.0, 65.0, 70.0, 80.0)):
        nets.append(Net(f"long{c}", ((f"tile_0{c}", "N"), (f"tile_3{c}", "S")), dist, 1604.0))
    scenario = {"lambda_p": 90.12, "lambda_a": 1403.36, "library": "links_table2_7nm_feccrc", "filter": "all"}
    write_deck("example2", chips, nets, scenario, "Example 2: 4x4 tiles, 48 nets at 5 mm and 4 nets at 60-80 mm, all 1604 Gbps")


def example3(seed: int):
    rng = np.random.default_rng(seed)
    side, die = 8, 33.0
    chips = [Chiplet.from_die(f"d{r}{c}", die, die) for r in range(side) for c in range(side)]
    nets = []
    adj = [((r, c), (r, c + 1), "E") for r in range(side) for c in range(side - 1)]
    adj += [((r, c), (r + 1, c), "S") for r in range(side - 1) for c in range(side)]

    load = {}

    def add(prefix, count, dist_lo, dist_hi, bw_choices, pairs):
        for i in range(count):
            bw = float(bw_choices[int(rng.integers(len(bw_choices)))])
            # best of a few random pairs keeps edge loads roughly even
            tries = [pairs[int(t)] for t in rng.integers(len(pairs), size=4)]
            a, b, s = min(tries, key=lambda p: max(load.get((p[0], p[2]), 0.0), load.get((p[1], OPPOSITE[p[2]]), 0.0)))
            load[(a, s)] = load.get((a, s), 0.0) + bw
            load[(b, OPPOSITE[s])] = load.get((b, OPPOSITE[s]), 0.0) + bw
            dist = float(np.round(rng.uniform(dist_lo, dist_hi), 2))
            nets.append(Net(f"{prefix}{i}", ((f"d{a[0]}{a[1]}", s), (f"d{b[0]}{b[1]}", OPPOSITE[s])), dist, bw))

    add("s", 20, 0.5, 0.5, [600], adj)
    add("m", 80, 1.0, 25.0, [26, 100, 200, 400, 600], adj)
    far = []
    for r in range(side):
        for c in range(side):
            for dr, dc in ((0, 2), (0, 3), (2, 0), (3, 0), (1, 1), (2, 1), (1, 2)):
                rr, cc = r + dr, c + dc
                if rr < side and cc < side:
                    s = "E" if dc >= dr else "S"
                    far.append(((r, c), (rr, cc), s))
    add("l", 780, 35.0, 75.0, [26, 100, 200, 400, 600, 800, 1200], far)
    scenario = {
        "lambda_p": 15000,
        "lambda_a": 70000,
        "library": "links_table2_7nm_feccrc",
        "filter": "all",
        "case_studies": "[[1.4, 1.0], [0.5, 1.0], [1.0, 2.0], [1.0, 0.25]]",
    }
    write_deck("example3", chips, nets, scenario, f"Example 3 (approximate): 880 nets sampled from the published ranges, seed {seed}")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args(argv)
    example1()
    example2()
    example3(args.seed)


if __name__ == "__main__":
    main()
