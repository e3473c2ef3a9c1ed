#!/usr/bin/env python3
"""Writes the hand-built fixtures under fixtures/.

match_labeled.jsonl        one 40-minute match with towers at 600/1200/1800 s
annotations_paper.jsonl  one analyst's label applications on that match
irr_fixture_A/B.jsonl    two raters; B is a controlled corruption of A
rubric_iter1.toml        rubric before the agreement rounds
rubric_final.toml        rubric after them

Run from the repository root. Output is deterministic.
"""

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
OUT = ROOT / "fixtures"

TICK = 1.0
SAMPLE_EVERY = 2
END = 2400.0
RESPAWN = 20.0
PLAYERS = [f"p{i}" for i in range(10)]
HEROES = ["Anti-Mage", "Crystal Maiden", "Earthshaker", "Lion", "Sven",
          "Phantom Assassin", "Witch Doctor", "Tidehunter", "Shadow Shaman", "Axe"]
ROLES = ["carry", "support", "initiator", "support", "other"]

# (time, killer, victim)
KILLS = [(100.0, "p6", "p0"), (250.0, "p1", "p5"), (400.0, "p7", "p0"),
         (500.0, "p2", "p5"), (2250.0, "p9", "p4")]
TOWERS = [(600.0, 1, "dire"), (1200.0, 2, "dire"), (1800.0, 3, "dire")]

# (player, start, end, label, tag)
APPS = [
    # early: Team Fighting 13, Solo Recovery 8, Team Recovery 2
    ("p2", 20, 50, "Solo Recovery", "Farming"),
    ("p7", 20, 50, "Solo Recovery", "Farming"),
    ("p0", 80, 110, "Team Fighting", "Focus Target"),
    ("p1", 90, 120, "Team Fighting", "Focus Target"),
    ("p2", 90, 120, "Team Fighting", "Focus Target"),
    ("p0", 120, 160, "Solo Recovery", "Farming"),
    ("p9", 150, 190, "Solo Recovery", "Farming"),
    ("p3", 150, 180, "Solo Recovery", "Scout"),
    ("p4", 150, 180, "Solo Recovery", "Push"),
    ("p5", 230, 260, "Team Fighting", "Focus Target"),
    ("p6", 240, 270, "Team Fighting", "Focus Target"),
    ("p7", 240, 270, "Team Fighting", "Focus Target"),
    ("p5", 270, 300, "Solo Recovery", "Farming"),
    ("p3", 300, 330, "Team Fighting", "Retaliation"),
    ("p4", 300, 330, "Team Fighting", "Retaliation"),
    ("p9", 300, 330, "Team Fighting", "Retaliation"),
    ("p0", 380, 410, "Team Fighting", "Focus Target"),
    ("p1", 390, 420, "Team Fighting", "Focus Target"),
    ("p6", 400, 430, "Team Recovery", "Objective Struggle"),
    ("p0", 420, 460, "Solo Recovery", "Farming"),
    ("p8", 470, 500, "Team Fighting", "Focus Target"),
    ("p5", 480, 510, "Team Fighting", "Focus Target"),
    ("p5", 560, 590, "Team Recovery", "Assist"),
    # mid: Team Fighting 4, Solo Recovery 3, Team Recovery 1
    ("p0", 700, 740, "Solo Recovery", "Farming"),
    ("p6", 900, 930, "Team Fighting", "Retaliation"),
    ("p7", 900, 930, "Team Fighting", "Retaliation"),
    ("p5", 1000, 1040, "Solo Recovery", "Farming"),
    ("p1", 1190, 1220, "Team Fighting", "Objective Struggle"),
    ("p2", 1190, 1220, "Team Fighting", "Objective Struggle"),
    ("p3", 1300, 1330, "Solo Recovery", "Scout"),
    ("p8", 1400, 1430, "Team Recovery", "Assist"),
    # late: Team Fighting 17, Solo Recovery 0, Team Recovery 9
    ("p0", 1850, 1880, "Team Fighting", "Objective Struggle"),
    ("p1", 1850, 1880, "Team Fighting", "Objective Struggle"),
    ("p2", 1850, 1880, "Team Fighting", "Objective Struggle"),
    ("p3", 1850, 1880, "Team Fighting", "Objective Struggle"),
    ("p4", 1850, 1880, "Team Fighting", "Objective Struggle"),
    ("p0", 1950, 1980, "Team Recovery", "Push"),
    ("p1", 1950, 1980, "Team Recovery", "Push"),
    ("p2", 1950, 1980, "Team Recovery", "Push"),
    ("p3", 1950, 1980, "Team Recovery", "Push"),
    ("p5", 2000, 2030, "Team Fighting", "Objective Struggle"),
    ("p6", 2000, 2030, "Team Fighting", "Objective Struggle"),
    ("p7", 2000, 2030, "Team Fighting", "Objective Struggle"),
    ("p8", 2000, 2030, "Team Fighting", "Objective Struggle"),
    ("p1", 2100, 2130, "Team Fighting", "Focus Target"),
    ("p2", 2100, 2130, "Team Fighting", "Focus Target"),
    ("p3", 2100, 2130, "Team Fighting", "Focus Target"),
    ("p6", 2150, 2180, "Team Fighting", "Focus Target"),
    ("p9", 2150, 2180, "Team Fighting", "Focus Target"),
    ("p0", 2200, 2230, "Team Recovery", "Assist"),
    ("p1", 2200, 2230, "Team Recovery", "Assist"),
    ("p7", 2250, 2280, "Team Fighting", "Retaliation"),
    ("p8", 2250, 2280, "Team Fighting", "Retaliation"),
    ("p9", 2250, 2280, "Team Fighting", "Retaliation"),
    ("p4", 2300, 2330, "Team Recovery", "Objective Struggle"),
    ("p5", 2300, 2330, "Team Recovery", "Objective Struggle"),
    ("p6", 2300, 2330, "Team Recovery", "Objective Struggle"),
]

RUBRIC_ITER1 = [
    ("Team Fighting", [
        ("Objective Struggle", "The team fights over an objective such as a tower"),
        ("Retaliation", "The team fights back to get revenge for something the other team did"),
        ("Focus Target", "The team fights in order to take down a particular player"),
    ]),
    ("Assist", [
        ("Scout", "The player roams the map, laying or removing wards"),
        ("Vanguard", "The player is out in front, soaking damage or using stuns to keep the enemy at bay"),
        ("Rearguard", "The player brings up the rear during escape, protecting escaping teammates"),
        ("Babysitter", 'The player "babysits" players, providing heals and shields'),
    ]),
    ("Solo Recovery", [
        ("Farming", "The player kills non player entities alone after reviving"),
        ("Scout", "The player roams the map alone after reviving"),
        ("Push", "The player moves the center of action closer to the enemy side of a lane after reviving"),
    ]),
    ("Team Recovery", [
        ("Push", "The player joins others to move the center of action to the enemy side of a lane after reviving"),
        ("Objective Struggle", "The player joins others to go after an objective, such as a tower, after reviving"),
    ]),
]

RUBRIC_FINAL = [
    RUBRIC_ITER1[0],
    RUBRIC_ITER1[2],
    ("Team Recovery", RUBRIC_ITER1[3][1] + [("Assist", "The player helps another player after reviving")]),
]

BASES = {"radiant": (82.0, 82.0), "dire": (942.0, 942.0)}


def team_of(player):
    return "radiant" if int(player[1:]) < 5 else "dire"


def fight_spot(t):
    # Shared meeting point for everyone labeled at time t.
    return (512.0 + 200.0 * ((int(t) // 97) % 3 - 1), 512.0 + 150.0 * ((int(t) // 131) % 3 - 1))


def toml_str(s):
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_rubric(path, rubric):
    lines = []
    for label, tags in rubric:
        lines.append("[[label]]")
        lines.append(f"name = {toml_str(label)}")
        for name, desc in tags:
            lines.append("")
            lines.append("[[label.tag]]")
            lines.append(f"name = {toml_str(name)}")
            lines.append(f"description = {toml_str(desc)}")
        lines.append("")
    path.write_text("\n".join(lines))


def write_match(path):
    rng = random.Random(20210512)
    header = {
        "type": "header", "match_id": "labeled_match", "tick_interval_s": TICK,
        "map_bounds": {"min_x": 0.0, "min_y": 0.0, "max_x": 1024.0, "max_y": 1024.0},
        "players": [{"player_id": p, "team": team_of(p), "hero_name": HEROES[i], "role": ROLES[i % 5]}
                    for i, p in enumerate(PLAYERS)],
    }
    labeled = {}
    for player, start, end, _, _ in APPS:
        labeled.setdefault(player, []).append((start, end))
    dead_until = {}
    for t, _, victim in KILLS:
        dead_until.setdefault(victim, []).append((t, t + RESPAWN))

    pos = {p: list(BASES[team_of(p)]) for p in PLAYERS}
    events = []
    t = 0.0
    while t <= END:
        for p in PLAYERS:
            dead = any(a < t < b for a, b in dead_until.get(p, []))
            if dead:
                pos[p] = list(BASES[team_of(p)])
                continue
            if any(s <= t < e for s, e in labeled.get(p, [])):
                target = fight_spot(t)
                spread = 25.0
            else:
                lane = int(p[1:]) % 5
                target = (150.0 + 180.0 * lane, 870.0 - 180.0 * lane)
                spread = 60.0
            for axis in (0, 1):
                step = (target[axis] - pos[p][axis]) * 0.2 + rng.uniform(-spread, spread) * 0.3
                pos[p][axis] = min(1024.0, max(0.0, pos[p][axis] + step))
            events.append((t, 0, {"type": "pos", "t": t, "p": p, "x": round(pos[p][0], 2), "y": round(pos[p][1], 2)}))
        t += SAMPLE_EVERY * TICK
    for t, killer, victim in KILLS:
        events.append((t, 1, {"type": "kill", "t": t, "actor": killer, "victim": victim}))
        events.append((t, 2, {"type": "death", "t": t, "p": victim}))
    for t, tier, team in TOWERS:
        events.append((t, 3, {"type": "tower", "t": t, "tier": tier, "team": team}))
    events.append((END, 9, {"type": "end", "t": END}))
    events.sort(key=lambda e: (e[0], e[1]))

    with path.open("w") as f:
        f.write(json.dumps(header, separators=(",", ":")) + "\n")
        for _, _, e in events:
            f.write(json.dumps(e, separators=(",", ":")) + "\n")


def app_json(idx, annotator, app, prefix):
    player, start, end, label, tag = app
    return {"application_id": f"{prefix}{idx:03d}", "annotator_id": annotator, "match_id": "labeled_match",
            "player_id": player, "start_s": float(start), "end_s": float(end), "label": label, "tag": tag}


def write_apps(path, apps):
    with path.open("w") as f:
        for a in apps:
            f.write(json.dumps(a, separators=(",", ":")) + "\n")


# --- agreement oracle (independent of the C++ code) -------------------------

def categories(apps, window):
    lanes = {}
    for a in apps:
        lanes.setdefault(a["player_id"], []).append(a)
    out = []
    for p in PLAYERS:
        k = 0
        while k * window < END:
            lo = k * window
            hi = min(END, lo + window)
            mid = 0.5 * (lo + hi)
            cat = "none"
            for a in lanes.get(p, []):
                if a["start_s"] <= mid < a["end_s"]:
                    cat = a["label"] + "/" + a["tag"]
            out.append(cat)
            k += 1
    return out


def kappa(x, y):
    n = len(x)
    po = sum(1 for a, b in zip(x, y) if a == b) / n
    cats = set(x) | set(y)
    pe = sum((x.count(c) / n) * (y.count(c) / n) for c in cats)
    return (po - pe) / (1 - pe)


def corrupt(a_apps, window=5.0, target=0.60, tol=0.0005):
    """Swaps tags in B until kappa falls to the target, then trims ends."""
    rng = random.Random(42)
    b = [dict(x) for x in a_apps]
    for x in b:
        x["annotator_id"] = "rater_b"
        x["application_id"] = x["application_id"].replace("ra", "rb")
    ca = categories(a_apps, window)
    tags = {label: [t for t, _ in ts] for label, ts in RUBRIC_FINAL}
    order = list(range(len(b)))
    rng.shuffle(order)
    k = 1.0
    for i in order:
        if k <= target + 0.03:
            break
        choices = [t for t in tags[b[i]["label"]] if t != b[i]["tag"]]
        b[i]["tag"] = rng.choice(choices)
        k = kappa(ca, categories(b, window))
    # Fine adjustment: shorten B's intervals one window at a time.
    for i in order:
        if abs(k - target) <= tol:
            break
        if b[i]["end_s"] - b[i]["start_s"] <= 2 * window:
            continue
        b[i]["end_s"] -= window
        nk = kappa(ca, categories(b, window))
        if nk < target - tol:
            b[i]["end_s"] += window
            continue
        k = nk
    return b, k


def main():
    OUT.mkdir(exist_ok=True)
    write_rubric(OUT / "rubric_iter1.toml", RUBRIC_ITER1)
    write_rubric(OUT / "rubric_final.toml", RUBRIC_FINAL)
    write_match(OUT / "match_labeled.jsonl")
    analyst = [app_json(i + 1, "analyst_1", a, "pa") for i, a in enumerate(APPS)]
    write_apps(OUT / "annotations_paper.jsonl", analyst)

    rater_a = [app_json(i + 1, "rater_a", a, "ra") for i, a in enumerate(APPS)]
    rater_b, k = corrupt(rater_a)
    write_apps(OUT / "irr_fixture_A.jsonl", rater_a)
    write_apps(OUT / "irr_fixture_B.jsonl", rater_b)
    print(f"irr fixture kappa (window 5 s, all players, [0, {END:g})): {k:.6f}")
    if abs(k - 0.60) > 0.005:
        sys.exit("kappa out of tolerance")


if __name__ == "__main__":
    main()
