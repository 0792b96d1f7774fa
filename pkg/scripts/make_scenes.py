#!/usr/bin/env python3
"""Regenerate the three bundled household scenes (env0, env1, env2).

The scenes are hand-authored stand-ins for simulator apartments: same object
vocabulary, different layouts, duplicates and extras. Run from the repo root:

    python scripts/make_scenes.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "codeplan" / "data" / "scenes"

G, O, SW, SIT, SRF, C, F = "grabbable", "openable", "switchable", "sittable", "surface", "container", "food"

CLASSES = {
    # kitchen
    "fridge": [O, C], "microwave": [O, SW, C], "stove": [SW, SRF], "fryingpan": [G, C, SRF],
    "kitchentable": [SRF], "kitchencounter": [SRF], "kitchencabinet": [O, C], "sink": [C],
    "faucet": [SW], "toaster": [SW, C], "garbagecan": [O, C], "coffeemaker": [SW, C],
    "coffeepot": [G, C], "dishwashingliquid": [G], "plate": [G, SRF], "mug": [G, C],
    "wineglass": [G, C], "knife": [G], "fork": [G], "spoon": [G], "dishwasher": [O, SW, C],
    "salmon": [G, F], "apple": [G, F], "lime": [G, F], "breadslice": [G, F], "cupcake": [G, F],
    "chips": [G, F], "bellpepper": [G, F], "milk": [G, F], "chicken": [G, F], "bananas": [G, F],
    # living room
    "sofa": [SIT, SRF], "coffeetable": [SRF], "tv": [SW], "tvstand": [SRF],
    "remotecontrol": [G], "lightswitch": [SW], "bookshelf": [SRF], "book": [G], "pillow": [G],
    "tablelamp": [SW],
    # bathroom
    "bathroomsink": [C], "bathroomfaucet": [SW], "bathroomcounter": [SRF], "toothbrush": [G],
    "toothpaste": [G, O], "towel": [G], "toilet": [SIT], "bathroomcabinet": [O, C],
    # bedroom
    "bed": [SIT, SRF], "chair": [SIT], "desk": [SRF], "computer": [SW], "cellphone": [G],
}

RULES = [
    {"when": [["in", "?x", "microwave"], ["switched_on", "microwave"]], "add": [["heated", "?x"]]},
    {"when": [["in", "?x", "toaster"], ["switched_on", "toaster"]], "add": [["heated", "?x"]]},
    {"when": [["in", "?x", "fryingpan"], ["on", "fryingpan", "stove"], ["switched_on", "stove"]],
     "add": [["heated", "?x"]]},
    {"when": [["in", "?x", "sink"], ["switched_on", "faucet"]], "add": [["washed", "?x"]]},
    {"when": [["in", "?x", "bathroomsink"], ["switched_on", "bathroomfaucet"]], "add": [["washed", "?x"]]},
]


def build(name, layout, closed, switched_on, extra_objects=()):
    """layout: list of (object id, relation, parent id or None)."""
    ids = [oid for oid, _, _ in layout] + list(extra_objects)
    objects = [{"id": oid, "class": oid.split(".")[0], "properties": sorted(CLASSES[oid.split(".")[0]])}
               for oid in ids]
    relations = [[rel, oid, parent] for oid, rel, parent in layout if rel]
    fluents = [["closed", o] for o in closed] + [["switched_on", o] for o in switched_on]
    return {"name": name, "hand_capacity": 2, "objects": objects, "fluents": fluents,
            "relations": relations, "rules": RULES}


ENV0 = [
    ("kitchentable.1", None, None), ("kitchencounter.1", None, None),
    ("fridge.1", None, None), ("microwave.1", "on", "kitchencounter.1"), ("stove.1", None, None),
    ("fryingpan.1", "on", "stove.1"), ("kitchencabinet.1", None, None), ("kitchencabinet.2", None, None),
    ("sink.1", None, None), ("faucet.1", None, None), ("toaster.1", "on", "kitchencounter.1"),
    ("garbagecan.1", None, None), ("coffeemaker.1", "on", "kitchencounter.1"),
    ("coffeepot.1", "on", "kitchencounter.1"), ("dishwashingliquid.1", "on", "kitchencounter.1"),
    ("plate.1", "on", "kitchencounter.1"), ("plate.2", "in", "kitchencabinet.1"),
    ("mug.1", "on", "kitchentable.1"), ("mug.2", "in", "kitchencabinet.2"),
    ("wineglass.1", "on", "kitchentable.1"), ("knife.1", "on", "kitchencounter.1"),
    ("salmon.1", "on", "kitchentable.1"), ("apple.1", "on", "kitchencounter.1"),
    ("lime.1", "on", "kitchencounter.1"), ("breadslice.1", "on", "kitchentable.1"),
    ("cupcake.1", "on", "kitchentable.1"), ("chips.1", "on", "kitchencounter.1"),
    ("bellpepper.1", "in", "fridge.1"), ("milk.1", "in", "fridge.1"), ("chicken.1", "in", "fridge.1"),
    ("sofa.1", None, None), ("coffeetable.1", None, None), ("tvstand.1", None, None),
    ("tv.1", "on", "tvstand.1"), ("remotecontrol.1", "on", "coffeetable.1"), ("lightswitch.1", None, None),
    ("bookshelf.1", None, None), ("book.1", "on", "bookshelf.1"), ("pillow.1", "on", "sofa.1"),
    ("tablelamp.1", None, None),
    ("bathroomsink.1", None, None), ("bathroomfaucet.1", None, None), ("bathroomcounter.1", None, None),
    ("toothbrush.1", "on", "bathroomcounter.1"), ("toothpaste.1", "on", "bathroomcounter.1"),
    ("towel.1", "in", "bathroomcabinet.1"), ("toilet.1", None, None), ("bathroomcabinet.1", None, None),
    ("bed.1", None, None), ("chair.1", None, None), ("desk.1", None, None),
    ("computer.1", "on", "desk.1"), ("cellphone.1", "on", "desk.1"),
]
ENV0_CLOSED = ["fridge.1", "microwave.1", "kitchencabinet.1", "kitchencabinet.2", "garbagecan.1",
               "toothpaste.1", "bathroomcabinet.1"]
ENV0_ON = ["lightswitch.1"]

# env1: duplicates, salmon and cupcake moved, a dishwasher and cutlery drawer contents
ENV1 = [
    ("kitchencounter.1", None, None), ("kitchencounter.2", None, None), ("kitchentable.1", None, None),
    ("fridge.1", None, None), ("microwave.1", "on", "kitchencounter.2"), ("stove.1", None, None),
    ("fryingpan.1", "on", "stove.1"), ("kitchencabinet.1", None, None), ("sink.1", None, None),
    ("faucet.1", None, None), ("toaster.1", "on", "kitchencounter.1"), ("garbagecan.1", None, None),
    ("dishwasher.1", None, None), ("coffeemaker.1", "on", "kitchencounter.1"),
    ("coffeepot.1", "in", "coffeemaker.1"), ("plate.1", "on", "kitchentable.1"),
    ("plate.2", "in", "dishwasher.1"), ("plate.3", "in", "kitchencabinet.1"),
    ("mug.1", "on", "kitchencounter.2"), ("wineglass.1", "in", "kitchencabinet.1"),
    ("fork.1", "in", "dishwasher.1"), ("spoon.1", "in", "dishwasher.1"), ("knife.1", "on", "kitchentable.1"),
    ("salmon.1", "on", "kitchencounter.1"), ("apple.1", "on", "kitchentable.1"),
    ("apple.2", "in", "fridge.1"), ("lime.1", "in", "fridge.1"), ("breadslice.1", "on", "kitchencounter.2"),
    ("cupcake.1", "on", "kitchencounter.1"), ("chips.1", "on", "kitchentable.1"),
    ("chicken.1", "in", "fridge.1"), ("bananas.1", "on", "kitchentable.1"),
    ("sofa.1", None, None), ("coffeetable.1", None, None), ("tvstand.1", None, None),
    ("tv.1", "on", "tvstand.1"), ("remotecontrol.1", "on", "sofa.1"), ("lightswitch.1", None, None),
    ("lightswitch.2", None, None), ("tablelamp.1", "on", "coffeetable.1"),
    ("bathroomsink.1", None, None), ("bathroomfaucet.1", None, None), ("bathroomcounter.1", None, None),
    ("toothbrush.1", "on", "bathroomcounter.1"), ("toothpaste.1", "on", "bathroomcounter.1"),
    ("towel.1", "on", "bathroomcounter.1"), ("toilet.1", None, None),
    ("bed.1", None, None), ("pillow.1", "on", "bed.1"), ("desk.1", None, None), ("chair.1", None, None),
    ("computer.1", "on", "desk.1"), ("book.1", "on", "desk.1"),
]
ENV1_CLOSED = ["fridge.1", "microwave.1", "kitchencabinet.1", "garbagecan.1", "dishwasher.1", "toothpaste.1"]
ENV1_ON = ["lightswitch.1", "lightswitch.2", "tablelamp.1"]

# env2: compact flat, two sofas and mugs, a second bathroom sink
ENV2 = [
    ("kitchencounter.1", None, None), ("fridge.1", None, None), ("microwave.1", "on", "kitchencounter.1"),
    ("stove.1", None, None), ("fryingpan.1", "on", "kitchencounter.1"), ("kitchencabinet.1", None, None),
    ("kitchencabinet.2", None, None), ("kitchencabinet.3", None, None), ("sink.1", None, None),
    ("faucet.1", None, None), ("toaster.1", "on", "kitchencounter.1"), ("garbagecan.1", None, None),
    ("coffeepot.1", "on", "kitchencounter.1"), ("plate.1", "in", "sink.1"), ("plate.2", "in", "kitchencabinet.1"),
    ("mug.1", "in", "sink.1"), ("mug.2", "on", "kitchencounter.1"), ("wineglass.1", "in", "kitchencabinet.3"),
    ("salmon.1", "on", "kitchencounter.1"), ("apple.1", "on", "coffeetable.1"), ("lime.1", "on", "kitchencounter.1"),
    ("breadslice.1", "on", "kitchencounter.1"), ("cupcake.1", "on", "kitchencounter.1"),
    ("chips.1", "on", "coffeetable.1"), ("milk.1", "in", "fridge.1"), ("bellpepper.1", "on", "kitchencounter.1"),
    ("sofa.1", None, None), ("sofa.2", None, None), ("coffeetable.1", None, None), ("tv.1", None, None),
    ("remotecontrol.1", "on", "sofa.2"), ("lightswitch.1", None, None), ("bookshelf.1", None, None),
    ("book.1", "on", "bookshelf.1"), ("cellphone.1", "on", "coffeetable.1"),
    ("bathroomsink.1", None, None), ("bathroomsink.2", None, None), ("bathroomfaucet.1", None, None),
    ("bathroomfaucet.2", None, None), ("bathroomcounter.1", None, None), ("toothbrush.1", "in", "bathroomsink.2"),
    ("toothpaste.1", "on", "bathroomcounter.1"), ("toilet.1", None, None), ("bathroomcabinet.1", None, None),
    ("towel.1", "in", "bathroomcabinet.1"), ("bed.1", None, None), ("chair.1", None, None),
]
ENV2_CLOSED = ["fridge.1", "microwave.1", "kitchencabinet.1", "kitchencabinet.2", "kitchencabinet.3",
               "toothpaste.1", "bathroomcabinet.1", "garbagecan.1"]
ENV2_ON = ["lightswitch.1", "bathroomfaucet.2"]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, layout, closed, on in (
        ("env0", ENV0, ENV0_CLOSED, ENV0_ON),
        ("env1", ENV1, ENV1_CLOSED, ENV1_ON),
        ("env2", ENV2, ENV2_CLOSED, ENV2_ON),
    ):
        doc = build(name, layout, closed, on)
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{name}: {len(doc['objects'])} objects")


if __name__ == "__main__":
    main()
