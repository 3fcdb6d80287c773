"""Regenerate src/proactive_switch/data/templates_default.json.

Seed sentences are expanded with composable prefixes until each key reaches
its shipped count. Deterministic; run from the repo root:

    python scripts/build_template_bank.py
"""

from __future__ import annotations

import json
from pathlib import Path

STATEMENT_PREFIXES = [
    "",
    "By the way, ",
    "If you want, ",
    "Also, ",
    "Besides, ",
    "Of course, ",
    "In the meantime, ",
    "Meanwhile, ",
]
QUESTION_PREFIXES = ["", "By the way, ", "Also, ", "Besides, "]

# (statement cores, question cores, target count) per key. Every core contains
# the literal domain word; pair cores contain [VALUE] exactly once.
DOMAIN_SPECS = {
    "train": (
        [
            "I could help with looking for train tickets for you.",
            "I can help you to find the trains to get there.",
            "Let me arrange the train for you.",
            "Please refer to our train service if you need any help with the booking.",
            "I am glad to give you more information on the train.",
            "I can look for a train for you.",
            "I can help you with the train.",
            "I can search for suitable trains if you like.",
            "Our train service can find a good connection for you.",
            "I am happy to assist with the train booking.",
        ],
        [
            "Do you want me to check the train schedule for you?",
            "Would you like help with booking a train ticket?",
            "Shall I look up some trains for you?",
            "Do you need a train ticket for that?",
        ],
        95,
    ),
    "restaurant": (
        [
            "I am happy to give recommendation on restaurants.",
            "I can recommend some restaurants if you want.",
            "I can also provide you more information on this restaurant.",
            "Maybe you would like to use our restaurant service to know more about it.",
            "I can help you find a nice restaurant nearby.",
            "Our restaurant service has plenty of suggestions.",
        ],
        [
            "Do you want my recommendation on the restaurants?",
            "Would you like me to look for a restaurant for you?",
        ],
        56,
    ),
    "attraction": (
        [
            "You can reach to our attraction service to know more about this place.",
            "Our attraction service provides various information.",
            "I can recommend some attractions to you.",
            "I am always happy to help if you are finding any attraction.",
            "Our attraction service can suggest somewhere fun.",
        ],
        [
            "Have you checked out our attraction service to know more about this place?",
            "Do you want me to recommend an attraction?",
        ],
        45,
    ),
    "taxi": (
        [
            "I can help you book a taxi to get there.",
            "I am happy to arrange a taxi for you.",
        ],
        [
            "Do you need help with booking a taxi to get there?",
            "Do you want me to look for a taxi for you?",
            "Do you need a taxi afterwards?",
        ],
        17,
    ),
}

PAIR_SPECS = {
    "train.day": (
        [
            "I could help with looking for train on [VALUE] for you.",
            "Let me arrange the train for [VALUE] for you.",
            "You can use our service to book the train for [VALUE].",
            "I would love to help you with the train tickets for [VALUE].",
        ],
        [],
        22,
    ),
    "train.destination": (
        [
            "I can help you to find the trains to [VALUE].",
            "I can look for a train to [VALUE] for you.",
            "You can use our service to book a train to [VALUE].",
            "Our train service can get you to [VALUE].",
            "I am happy to check train times to [VALUE] for you.",
        ],
        [],
        40,
    ),
    "train.departure": (
        [
            "I think our service might be helpful in booking the train leaving from [VALUE].",
            "I am happy to look for a train leaving from [VALUE] for you.",
            "I can find you some train tickets departing from [VALUE].",
            "Let me check the trains departing from [VALUE] for you.",
            "Our train service covers departures from [VALUE].",
        ],
        [],
        35,
    ),
    "restaurant.food": (
        [
            "I am happy to give recommendation on [VALUE] restaurants.",
            "I can recommend some [VALUE] restaurants if you want.",
            "You can find more information on [VALUE] restaurants in our restaurant service.",
            "It's my pleasure to recommend some [VALUE] restaurants if you want.",
            "I can look for a nice [VALUE] restaurant for you.",
            "Our restaurant service lists plenty of [VALUE] places.",
        ],
        [],
        45,
    ),
    "restaurant.name": (
        [
            "I can also provide you more information on this restaurant named [VALUE].",
            "Maybe you would like to use our restaurant service to know more about [VALUE].",
            "I will be more than pleasant to help with booking a table at the restaurant called [VALUE].",
            "Feel free to ask for more information about this restaurant named [VALUE].",
        ],
        [],
        11,
    ),
    "attraction.type": (
        [
            "Our attraction service provides various information on [VALUE].",
            "I am happy to help you if you are looking for attraction that has [VALUE] activities.",
            "In our attraction service, you can find more information on visiting [VALUE]s.",
            "I can recommend attractions with [VALUE] options nearby.",
        ],
        [],
        30,
    ),
    "attraction.name": (
        [
            "You can reach to our attraction service to know more about [VALUE].",
            "I can provide more attraction information on [VALUE].",
        ],
        [
            "Do you want to plan your trip to [VALUE] using our attraction service?",
            "Talking about attractions, do you need more information about [VALUE]?",
        ],
        15,
    ),
    "taxi.destination": (
        [
            "I can book a taxi to [VALUE] for you.",
            "Our taxi service can take you to [VALUE].",
        ],
        [
            "Shall I get a taxi for you to get to [VALUE]?",
            "Do you need a taxi to get to [VALUE]?",
        ],
        9,
    ),
    "taxi.departure": (
        [
            "I am happy to look for a taxi departing from [VALUE].",
            "Our taxi service can pick you up from [VALUE].",
        ],
        ["Do you want me to look for a taxi leaving from [VALUE] for you?"],
        8,
    ),
}


def _compose(prefix: str, core: str) -> str:
    if not prefix:
        return core
    if core.startswith("I ") or core.startswith("I'"):
        return prefix + core
    return prefix + core[0].lower() + core[1:]


def expand(statements: list[str], questions: list[str], count: int) -> list[str]:
    out: list[str] = []
    seen: set[str] = set()
    for prefix in STATEMENT_PREFIXES:
        for core in statements:
            sentence = _compose(prefix, core)
            if sentence not in seen:
                seen.add(sentence)
                out.append(sentence)
        if prefix in QUESTION_PREFIXES:
            for core in questions:
                sentence = _compose(prefix, core)
                if sentence not in seen:
                    seen.add(sentence)
                    out.append(sentence)
    if len(out) < count:
        raise SystemExit(f"not enough variants ({len(out)} < {count})")
    return out[:count]


def main() -> None:
    sections: dict[str, list[str]] = {}
    for domain, (statements, questions, count) in DOMAIN_SPECS.items():
        sections[f"domain.{domain}"] = expand(statements, questions, count)
    for key, (statements, questions, count) in PAIR_SPECS.items():
        sections[f"pair.{key}"] = expand(statements, questions, count)

    target = Path(__file__).resolve().parents[1] / "src" / "proactive_switch" / "data" / "templates_default.json"
    target.write_text(json.dumps(sections, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    total_domain = sum(len(v) for k, v in sections.items() if k.startswith("domain."))
    total_pair = sum(len(v) for k, v in sections.items() if k.startswith("pair."))
    print(f"wrote {target} ({total_domain} domain templates, {total_pair} pair templates)")


if __name__ == "__main__":
    main()
