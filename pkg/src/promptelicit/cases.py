"""The bundled benchmark corpus: small synthetic cases plus one brief case.

Synthetic cases carry a known intent, an oracle proposal order that puts
low-value decoy features first, skewed importance weights, and option
pools containing the true values. Decoys are features every persona
agrees on, so questions about them carry no information; a selector that
asks questions in proposal order spends its early iterations on them,
which is exactly the contrast the benchmark curves are meant to show.
"""

from __future__ import annotations

import json
from pathlib import Path

from .simulation import BenchmarkCase


def builtin_cases() -> list[BenchmarkCase]:
    return [
        BenchmarkCase(
            case_id="hiking-icon",
            category="logo design",
            initial_prompt="an app icon for hiking",
            synthetic_intent={
                "graphic motif": "mountain silhouette",
                "color scheme": "dark blue",
                "artistic style": "flat minimalist",
                "lighting": "golden hour",
            },
            decoy_features={"canvas shape": "square", "file format": "vector"},
            feature_order=("canvas shape", "file format", "graphic motif",
                           "color scheme", "artistic style", "lighting"),
            feature_weights={"graphic motif": 0.9, "color scheme": 0.8,
                             "artistic style": 0.7, "lighting": 0.5,
                             "canvas shape": 0.2, "file format": 0.1},
            option_pools={
                "graphic motif": ("mountain silhouette", "hiking boots",
                                  "winding path", "compass rose"),
                "color scheme": ("forest green", "dark blue", "sunset orange",
                                 "slate gray"),
                "artistic style": ("flat minimalist", "hand drawn",
                                   "retro badge", "glossy 3d"),
                "lighting": ("golden hour", "overcast", "moonlit", "studio"),
                "canvas shape": ("square", "circle", "rounded", "hexagon"),
                "file format": ("vector", "raster", "layered", "animated"),
            },
        ),
        BenchmarkCase(
            case_id="cafe-poster",
            category="poster design",
            initial_prompt="a poster for a neighborhood cafe",
            synthetic_intent={
                "beverage focus": "pour-over coffee",
                "color palette": "warm terracotta",
                "typography feel": "hand lettered",
                "mood": "unhurried morning",
                "background motif": "checkered tile floor",
            },
            decoy_features={"paper size": "a2 portrait"},
            feature_order=("paper size", "beverage focus", "color palette",
                           "typography feel", "mood", "background motif"),
            feature_weights={"beverage focus": 0.95, "color palette": 0.8,
                             "typography feel": 0.65, "mood": 0.55,
                             "background motif": 0.5, "paper size": 0.15},
            option_pools={
                "beverage focus": ("pour-over coffee", "matcha latte",
                                   "iced espresso", "chai tea"),
                "color palette": ("warm terracotta", "mint cream",
                                  "charcoal mono", "butter yellow"),
                "typography feel": ("hand lettered", "grotesque sans",
                                    "classic serif", "stencil"),
                "mood": ("unhurried morning", "bustling rush",
                         "late night", "rainy afternoon"),
                "background motif": ("checkered tile floor", "brick wall",
                                     "botanical shelf", "plain cream"),
                "paper size": ("a2 portrait", "a3 landscape", "square", "banner"),
            },
        ),
        BenchmarkCase(
            case_id="dragon-tee",
            category="apparel graphic",
            initial_prompt="a t-shirt graphic with a dragon",
            synthetic_intent={
                "dragon pose": "coiled around a sword",
                "render style": "woodcut print",
                "ink color": "crimson on black",
            },
            decoy_features={"print placement": "chest center",
                            "shirt fabric": "cotton blend",
                            "collar type": "crew neck"},
            feature_order=("print placement", "shirt fabric", "collar type",
                           "dragon pose", "render style", "ink color"),
            feature_weights={"dragon pose": 1.0, "render style": 0.75,
                             "ink color": 0.6, "print placement": 0.25,
                             "shirt fabric": 0.15, "collar type": 0.1},
            option_pools={
                "dragon pose": ("coiled around a sword", "mid-flight roar",
                                "sleeping on treasure", "rising from waves"),
                "render style": ("woodcut print", "airbrush fantasy",
                                 "geometric lowpoly", "tattoo linework"),
                "ink color": ("crimson on black", "gold on navy",
                              "monochrome white", "teal gradient"),
                "print placement": ("chest center", "back panel",
                                    "left breast", "full wrap"),
                "shirt fabric": ("cotton blend", "tri-blend", "organic", "performance"),
                "collar type": ("crew neck", "v-neck", "henley", "raglan"),
            },
        ),
        BenchmarkCase(
            case_id="space-nursery",
            category="wall art",
            initial_prompt="wall art for a nursery about space",
            synthetic_intent={
                "central subject": "smiling crescent moon",
                "secondary elements": "paper rockets",
                "palette": "soft lavender",
                "texture": "felt collage",
                "framing": "circular vignette",
                "sky detail": "scattered constellations",
            },
            decoy_features={"hanging hardware": "sawtooth bracket",
                            "frame material": "oak"},
            feature_order=("hanging hardware", "frame material", "central subject",
                           "secondary elements", "palette", "texture",
                           "framing", "sky detail"),
            feature_weights={"central subject": 0.95, "secondary elements": 0.7,
                             "palette": 0.85, "texture": 0.6, "framing": 0.4,
                             "sky detail": 0.5, "hanging hardware": 0.1,
                             "frame material": 0.2},
            option_pools={
                "central subject": ("smiling crescent moon", "ringed planet",
                                    "friendly astronaut", "shooting star"),
                "secondary elements": ("paper rockets", "hot air balloons",
                                       "orbiting satellites", "cloud puffs"),
                "palette": ("soft lavender", "midnight navy",
                            "peach sorbet", "sage green"),
                "texture": ("felt collage", "watercolor wash",
                            "flat vector", "chalk pastel"),
                "framing": ("circular vignette", "full bleed",
                            "polaroid border", "arch window"),
                "sky detail": ("scattered constellations", "milky way band",
                               "tiny satellites", "plain gradient"),
                "hanging hardware": ("sawtooth bracket", "wire", "cleat", "adhesive"),
                "frame material": ("oak", "walnut", "white metal", "frameless"),
            },
        ),
        BenchmarkCase(
            case_id="synth-album",
            category="album cover",
            initial_prompt="an album cover for a synthwave record",
            synthetic_intent={
                "horizon feature": "gridded desert",
                "sky treatment": "split sunset bands",
                "foreground object": "chrome convertible",
                "glow accent": "magenta neon",
                "title treatment": "chrome bevel lettering",
            },
            decoy_features={"sleeve finish": "matte laminate",
                            "disc label": "picture disc",
                            "barcode corner": "bottom right",
                            "shrinkwrap sticker": "hype sticker"},
            feature_order=("sleeve finish", "disc label", "barcode corner",
                           "shrinkwrap sticker", "horizon feature", "sky treatment",
                           "foreground object", "glow accent", "title treatment"),
            feature_weights={"horizon feature": 0.9, "sky treatment": 0.8,
                             "foreground object": 0.85, "glow accent": 0.7,
                             "title treatment": 0.6, "sleeve finish": 0.2,
                             "disc label": 0.15, "barcode corner": 0.05,
                             "shrinkwrap sticker": 0.1},
            option_pools={
                "horizon feature": ("gridded desert", "ocean causeway",
                                    "city skyline", "canyon road"),
                "sky treatment": ("split sunset bands", "starfield",
                                  "wireframe dome", "storm clouds"),
                "foreground object": ("chrome convertible", "lone rider",
                                      "obelisk", "palm pair"),
                "glow accent": ("magenta neon", "cyan haze",
                                "amber flare", "ultraviolet rim"),
                "title treatment": ("chrome bevel lettering", "laser script",
                                    "stencil block", "pixel type"),
                "sleeve finish": ("matte laminate", "gloss", "soft touch", "uncoated"),
                "disc label": ("picture disc", "plain black", "splatter", "clear"),
                "barcode corner": ("bottom right", "bottom left", "back center", "spine"),
                "shrinkwrap sticker": ("hype sticker", "none", "foil seal", "obi strip"),
            },
        ),
        # deliberately wide: decoys + truth exceed the default iteration budget,
        # so proposal-order questioning cannot finish inside it
        BenchmarkCase(
            case_id="festival-banner",
            category="event banner",
            initial_prompt="a banner for a harvest festival",
            synthetic_intent={
                "hero produce": "heirloom pumpkins",
                "scene setting": "orchard at dusk",
                "border style": "wheat garland",
                "lettering": "carved wood letters",
                "crowd detail": "lantern-lit stalls",
                "weather cue": "drifting leaves",
                "animal cameo": "barn owl",
                "banner accent": "gingham ribbon",
            },
            decoy_features={"grommet count": "six grommets",
                            "hem style": "double stitched",
                            "mounting side": "top edge",
                            "wind slits": "standard slits",
                            "substrate": "canvas substrate",
                            "seam tape": "clear tape",
                            "packing fold": "roll packed",
                            "proof round": "single proof",
                            "ship method": "ground freight"},
            feature_order=("grommet count", "hem style", "mounting side",
                           "wind slits", "substrate", "seam tape", "packing fold",
                           "proof round", "ship method", "hero produce",
                           "scene setting", "border style", "lettering",
                           "crowd detail", "weather cue", "animal cameo",
                           "banner accent"),
            feature_weights={"hero produce": 1.0, "scene setting": 0.9,
                             "border style": 0.6, "lettering": 0.7,
                             "crowd detail": 0.55, "weather cue": 0.5,
                             "animal cameo": 0.45, "banner accent": 0.4,
                             "grommet count": 0.05, "hem style": 0.05,
                             "mounting side": 0.1, "wind slits": 0.05,
                             "substrate": 0.15, "seam tape": 0.05,
                             "packing fold": 0.05, "proof round": 0.1,
                             "ship method": 0.05},
            option_pools={
                "hero produce": ("heirloom pumpkins", "apple bushels",
                                 "corn sheaves", "grape clusters"),
                "scene setting": ("orchard at dusk", "town square",
                                  "hay field", "covered bridge"),
                "border style": ("wheat garland", "plaid band",
                                 "leaf scatter", "rope trim"),
                "lettering": ("carved wood letters", "brush script",
                              "circus slab", "stamped tin"),
                "crowd detail": ("lantern-lit stalls", "hayride line",
                                 "cider queue", "dance floor"),
                "weather cue": ("drifting leaves", "low harvest moon",
                                "morning mist", "clear noon"),
                "animal cameo": ("barn owl", "draft horse", "corgi", "rooster"),
                "banner accent": ("gingham ribbon", "jute bow",
                                  "paper rosette", "bell string"),
            },
        ),
        # benchmark-shaped case: ground truth is a text brief, answered by the
        # intent-based simulated user
        BenchmarkCase(
            case_id="tidepool-brief",
            category="children's book art",
            initial_prompt="an illustration of a tidepool",
            brief=("A curious child crouching beside a rocky tidepool at low tide, "
                   "gouache illustration, teal and coral palette, morning light, "
                   "anemones and a small orange crab visible in the water."),
        ),
    ]


def write_case_files(out_dir: str | Path) -> list[Path]:
    """Write the bundled corpus as one JSON file per case."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for case in builtin_cases():
        path = out / f"{case.case_id}.json"
        path.write_text(json.dumps(case.to_record(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        written.append(path)
    return written
