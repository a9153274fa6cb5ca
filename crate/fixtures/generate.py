#!/usr/bin/env python3
"""Builds the checked-in fixtures and their hand-tallied expectation tables.

The tallies here are computed by straightforward counting over the block
definitions below and are deliberately independent of the Rust code paths
they are compared against. Re-run from this directory:

    python3 generate.py
"""
import itertools
import json
import math
import random

Z = 1.96


def wilson(wins, games, z=Z):
    p = wins / games
    n = games
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z / denom * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
    lo = max(0.0, min(center - half, p))
    hi = min(1.0, max(center + half, p))
    return lo, hi


def estimate(wins, games):
    lo, hi = wilson(wins, games)
    return {"wins": wins, "games": games, "rate": wins / games, "ci_low": lo, "ci_high": hi}


# ---------------------------------------------------------------------------
# synthetic-A: 200 matches assembled from six hand-designed blocks.
# (side 0 roster, side 1 roster, games, games won by side 0)
BLOCKS = [
    (["a", "b"], ["c", "d"], 40, 30),
    (["a", "c"], ["e", "f"], 40, 10),
    (["b", "e"], ["c", "d"], 40, 10),
    (["a", "f"], ["b", "d"], 40, 20),
    (["c", "d", "e"], ["f", "a"], 12, 6),
    (["c", "e"], ["d", "f"], 28, 16),
]


def synthetic_a():
    rng = random.Random(20240601)
    records = []
    for bi, (s0, s1, games, wins0) in enumerate(BLOCKS):
        outcomes = [0] * wins0 + [1] * (games - wins0)
        rng.shuffle(outcomes)
        for gi, winner in enumerate(outcomes):
            r0 = list(s0)
            r1 = list(s1)
            rng.shuffle(r0)
            rng.shuffle(r1)
            # Half of the block plays with sides swapped so side index carries no signal.
            if gi % 2 == 1:
                r0, r1 = r1, r0
                winner = 1 - winner
            records.append({"sides": [r0, r1], "winner": winner})
    rng.shuffle(records)
    lines = []
    for i, rec in enumerate(records):
        rec = {"match_id": f"A-{i:04d}", "sides": rec["sides"], "winner": rec["winner"]}
        lines.append(json.dumps(rec, separators=(",", ":")))
    return records, lines


def tally_synthetic_a(records, min_games=30):
    solo = {}
    joint = {}
    opposed = {}
    for rec in records:
        for side in (0, 1):
            won = 1 if rec["winner"] == side else 0
            roster = sorted(set(rec["sides"][side]))
            for e in roster:
                w, g = solo.get(e, (0, 0))
                solo[e] = (w + won, g + 1)
            for a, b in itertools.combinations(roster, 2):
                w, g = joint.get((a, b), (0, 0))
                joint[(a, b)] = (w + won, g + 1)
            for a in roster:
                for b in sorted(set(rec["sides"][1 - side])):
                    w, g = opposed.get((a, b), (0, 0))
                    opposed[(a, b)] = (w + won, g + 1)

    solo_out = {e: estimate(*solo[e]) for e in sorted(solo)}
    joint_out = []
    matrix_mean = []
    matrix_sum = []
    for (a, b) in sorted(joint):
        w, g = joint[(a, b)]
        jr = w / g
        ra = solo[a][0] / solo[a][1]
        rb = solo[b][0] / solo[b][1]
        joint_out.append({"a": a, "b": b, **estimate(w, g)})
        matrix_mean.append({
            "a": a, "b": b, "set_value": jr, "baseline_value": (ra + rb) / 2.0,
            "synergy": jr - (ra + rb) / 2.0, "games": g, "sufficient": g >= min_games,
        })
        matrix_sum.append({
            "a": a, "b": b, "set_value": jr, "baseline_value": ra + rb,
            "synergy": jr - (ra + rb), "games": g, "sufficient": g >= min_games,
        })
    counters = []
    for (a, b) in sorted(opposed):
        w, g = opposed[(a, b)]
        overall = solo[a][0] / solo[a][1]
        counters.append({
            "a": a, "b": b, "vs": estimate(w, g), "overall_rate": overall,
            "score": w / g - overall, "sufficient": g >= min_games,
        })
    return {
        "min_games": min_games,
        "z": Z,
        "solo": solo_out,
        "joint": joint_out,
        "matrix_mean": matrix_mean,
        "matrix_sum": matrix_sum,
        "counters": counters,
    }


# ---------------------------------------------------------------------------
# chess-50: 50 synthetic games with per-side piece-usage logs.
PIECES = ["P", "N", "B", "R", "Q", "K"]


def chess_games():
    rng = random.Random(77)
    lines = []
    games = []
    for i in range(50):
        plies = rng.randint(0, 14)
        moves = []
        for p in range(plies):
            moves.append([p % 2, rng.choice(PIECES)])
        winner = rng.randint(0, 1)
        rec = {"match_id": f"C-{i:03d}", "sides": [["white"], ["black"]], "winner": winner}
        if i != 17:  # one game without a move log
            rec["moves"] = moves
        games.append(rec)
        lines.append(json.dumps(rec, separators=(",", ":")))
    return games, lines


def tally_chess(games, skip_first=0):
    table = {}
    for g in games:
        if "moves" not in g:
            continue
        for side in (0, 1):
            seq = [piece for s, piece in g["moves"] if s == side][skip_first:]
            grams = set()
            for x, y in zip(seq, seq[1:]):
                grams.add(f"seq:{x}->{y}")
            won = 1 if g["winner"] == side else 0
            for gram in grams:
                w, n = table.get(gram, (0, 0))
                table[gram] = (w + won, n + 1)
    return {k: {"wins": w, "games": n} for k, (w, n) in sorted(table.items())}


# ---------------------------------------------------------------------------
# TCG fixture: ten existing cards plus one new card.
def card(cid, name, mana, damage, types, effects=None, keywords=None):
    c = {"id": cid, "name": name, "mana": mana, "types": types, "damage": damage,
         "effects": effects or []}
    if keywords:
        c["keywords"] = keywords
    return c


EXISTING = [
    card("bolt", "Bolt", 1, 3, ["instant"]),
    card("scout", "Merfolk Scout", 1, 1, ["merfolk"]),
    card("brute", "Merfolk Brute", 3, 3, ["merfolk"]),
    card("seas", "Spreading Seas", 1, 0, ["enchantment"],
         [{"kind": "state", "flag": "opponent_has_island", "value": True}]),
    card("raider", "Island Raider", 2, 1, ["pirate"], keywords=["islandwalk"]),
    card("warsong", "Warsong Captain", 3, 2, ["warrior"],
         [{"kind": "threshold_buff", "amount": 1, "stat_cap": 3, "filter": []}]),
    card("ogre", "Hill Ogre", 3, 3, ["ogre"]),
    card("goblin", "Goblin Raider", 1, 2, ["goblin"]),
    card("golem", "Clay Golem", 4, 4, ["golem"]),
    card("hexer", "Hexer", 2, 2, ["wizard"],
         [{"kind": "flat_buff", "amount": -1, "filter": ["merfolk"], "excludes_self": True}]),
]

NEW = [
    card("lord", "Pearl Lord", 2, 2, ["lord"], [
        {"kind": "flat_buff", "amount": 1, "filter": ["merfolk"], "excludes_self": True},
        {"kind": "keyword", "keyword": "islandwalk", "filter": ["merfolk"], "excludes_self": True},
    ]),
]


def matches(filt, c):
    return len(filt) == 0 or any(t in c["types"] for t in filt)


def evaluate(cards):
    """Naive damage/mana evaluation of a list of card dicts (one per copy)."""
    island = False
    for c in cards:
        for e in c["effects"]:
            if e["kind"] == "state" and e["flag"] == "opponent_has_island" and e["value"]:
                island = True
    damage = 0
    for i, c in enumerate(cards):
        d = c["damage"]
        walk = "islandwalk" in c.get("keywords", [])
        for j, src in enumerate(cards):
            for e in src["effects"]:
                self_ok = i != j or not e.get("excludes_self", True)
                if not self_ok or e["kind"] == "state":
                    continue
                if not matches(e.get("filter", []), c):
                    continue
                if e["kind"] == "flat_buff":
                    d += e["amount"]
                elif e["kind"] == "threshold_buff":
                    if c["damage"] <= e["stat_cap"]:
                        d += e["amount"]
                elif e["kind"] == "keyword" and e["keyword"] == "islandwalk":
                    walk = True
        if walk and island:
            d += 2
        damage += max(d, 0)
    mana = sum(c["mana"] for c in cards)
    return damage, mana


def tcg_table():
    pool = sorted(EXISTING + NEW, key=lambda c: c["id"])
    rows = []
    for size in (1, 2, 3):
        for combo in itertools.combinations_with_replacement(pool, size):
            dmg, mana = evaluate(list(combo))
            rows.append({"cards": [c["id"] for c in combo], "damage": dmg, "mana": mana,
                         "dpm_num": dmg, "dpm_den": max(mana, 1)})
    return rows


def dump(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def main():
    records, lines = synthetic_a()
    with open("synthetic-A.jsonl", "w") as f:
        f.write("\n".join(lines) + "\n")
    dump("synthetic-A.expected.json", tally_synthetic_a(records))

    games, lines = chess_games()
    with open("chess-50.jsonl", "w") as f:
        f.write("\n".join(lines) + "\n")
    dump("chess-50.expected.json", {"skip0": tally_chess(games, 0), "skip2": tally_chess(games, 2)})

    dump("cards.json", {"cards": EXISTING})
    dump("newset.json", {"cards": NEW})
    dump("tcg-dpm.expected.json", tcg_table())


if __name__ == "__main__":
    main()
