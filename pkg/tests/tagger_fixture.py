"""Hand-built 50-sentence tagging fixture with traced expectations.

Every trigger below was traced by hand against the stock lexicon and the
fixture gazetteer: 20 sentences carry an Attack/Killing occurrence with
expected Assailant/Victim fillers under the documented nearest-entity
heuristic (including passive swaps), 20 carry other triggers, and 10 are
trigger-free.

Each entry is (text, expected, roles) where ``expected`` lists
(frame_name, trigger_text) in left-to-right order and ``roles`` gives the
expected filler text (or None) for the sentence's single Attack/Killing
occurrence as {"Assailant": ..., "Victim": ...}; None for sentences whose
roles are not asserted.
"""

FIXTURE_GAZETTEER_GROUPS = {
    "hamas-side": ["hamas", "hamas militants", "islamic jihad", "al-qassam brigades"],
    "israel-side": [
        "israel", "israeli", "idf", "israeli forces", "israeli army",
        "netanyahu", "kibbutz", "settlers",
    ],
    "civilian": [
        "palestinians", "gazans", "gaza", "camp", "village", "hospital",
        "school", "convoy", "refugees",
    ],
}

ROLE_SENTENCES = [
    (
        "Hamas attacked the kibbutz on Saturday.",
        [("Attack", "attacked")],
        {"Assailant": "Hamas", "Victim": "kibbutz"},
    ),
    (
        "The camp was attacked by Israeli forces.",
        [("Attack", "attacked")],
        {"Assailant": "Israeli forces", "Victim": "camp"},
    ),
    (
        "Israeli forces raided the village at dawn.",
        [("Attack", "raided")],
        {"Assailant": "Israeli forces", "Victim": "village"},
    ),
    (
        "Hamas militants killed dozens of civilians in the kibbutz.",
        [("Killing", "killed"), ("Quantified_mass", "dozens"), ("People", "civilians")],
        {"Assailant": "Hamas militants", "Victim": "kibbutz"},
    ),
    (
        "Rockets struck the hospital overnight.",
        [("Attack", "struck")],
        {"Assailant": None, "Victim": "hospital"},
    ),
    (
        "Attacked without warning, the kibbutz burned.",
        [("Attack", "Attacked")],
        {"Assailant": None, "Victim": "kibbutz"},
    ),
    (
        "The convoy was ambushed near the border.",
        [("Attack", "ambushed")],
        {"Assailant": None, "Victim": "convoy"},
    ),
    (
        "Israel bombed the camp before the ceasefire.",
        [("Attack", "bombed")],
        {"Assailant": "Israel", "Victim": "camp"},
    ),
    (
        "The village was raided by settlers overnight.",
        [("Attack", "raided")],
        {"Assailant": "settlers", "Victim": "village"},
    ),
    (
        "Gunmen murdered a villager from the camp.",
        [("Killing", "murdered"), ("People", "villager")],
        {"Assailant": None, "Victim": "camp"},
    ),
    (
        "The IDF shelled the camp through the night.",
        [("Attack", "shelled")],
        {"Assailant": "IDF", "Victim": "camp"},
    ),
    (
        "Witnesses said Hamas slaughtered the hostages.",
        [("Killing", "slaughtered")],
        {"Assailant": "Hamas", "Victim": None},
    ),
    (
        "The school was bombed by Israel on Monday.",
        [("Attack", "bombed")],
        {"Assailant": "Israel", "Victim": "school"},
    ),
    (
        "Hamas assaulted the outpost and seized vehicles.",
        [("Attack", "assaulted")],
        {"Assailant": "Hamas", "Victim": None},
    ),
    (
        "Palestinians were killed by the Israeli army near the crossing.",
        [("Killing", "killed")],
        {"Assailant": "Israeli army", "Victim": "Palestinians"},
    ),
    (
        "The kibbutz was attacked while families slept.",
        [("Attack", "attacked"), ("Kinship", "families")],
        {"Assailant": None, "Victim": "kibbutz"},
    ),
    (
        "An Israeli sniper killed a boy near the camp.",
        [("Killing", "killed")],
        {"Assailant": "Israeli", "Victim": "camp"},
    ),
    (
        "The IDF massacred refugees at the shelter, witnesses said.",
        [("Killing", "massacred")],
        {"Assailant": "IDF", "Victim": "refugees"},
    ),
    (
        # Reported speech is a known failure mode of the nearest-entity
        # rule: the speaker is picked up as the assailant.
        "Netanyahu said the army attacked tunnels in Gaza.",
        [("Attack", "attacked")],
        {"Assailant": "Netanyahu", "Victim": "Gaza"},
    ),
    (
        "Israeli settlers attacked farmers as children watched.",
        [("Attack", "attacked"), ("People_by_age", "children")],
        {"Assailant": "settlers", "Victim": None},
    ),
]

TRIGGER_SENTENCES = [
    ("The war has entered its fourth month.", [("Hostile_encounter", "war")], None),
    (
        "The air strike destroyed an apartment block.",
        [("Attack", "air strike"), ("Destroying", "destroyed")],
        {"Assailant": None, "Victim": None},
    ),
    ("Thousands marched to demand a ceasefire.", [("Quantified_mass", "Thousands")], None),
    (
        "The invasion began with a ground operation.",
        [("Military_operation", "invasion"), ("Military_operation", "ground operation")],
        None,
    ),
    ("Hospitals reported a growing death toll.", [("Death", "death toll")], None),
    (
        "Families mourned their dead after the bombing.",
        [
            ("Kinship", "Families"),
            ("Emotion_directed", "mourned"),
            ("Death", "dead"),
            ("Attack", "bombing"),
        ],
        {"Assailant": None, "Victim": None},
    ),
    (
        "Aid convoys brought relief to the displaced.",
        [("Assistance", "Aid"), ("Assistance", "relief")],
        None,
    ),
    (
        "Residents fear another night of gunfire.",
        [("People", "Residents"), ("Fear", "fear"), ("Firing", "gunfire")],
        None,
    ),
    (
        "The children were terrified by the explosions.",
        [("People_by_age", "children"), ("Fear", "terrified")],
        None,
    ),
    (
        "Doctors treated the wounded at the field hospital.",
        [("Medical_conditions", "wounded")],
        None,
    ),
    ("Grief swept the village after the funeral.", [("Emotion_directed", "Grief")], None),
    (
        "The siege left the population without food.",
        [("Military_operation", "siege"), ("People", "population")],
        None,
    ),
    (
        "Malnutrition and disease spread through the camp.",
        [("Medical_conditions", "Malnutrition"), ("Medical_conditions", "disease")],
        None,
    ),
    ("Mediators warned the truce remains at risk.", [("Being_at_risk", "at risk")], None),
    (
        "The offensive forced thousands from their homes.",
        [("Attack", "offensive"), ("Quantified_mass", "thousands")],
        {"Assailant": None, "Victim": None},
    ),
    (
        "Survivors described scenes of devastation and despair.",
        [("Destroying", "devastation"), ("Emotion_directed", "despair")],
        None,
    ),
    ("A terror attack shook the capital on Friday.", [("Terrorism", "terror attack")], None),
    (
        "Rebuilding the demolished school will take years.",
        [("Building", "Rebuilding"), ("Destroying", "demolished")],
        None,
    ),
    (
        "The blockade pushed civilians toward starvation.",
        [("People", "civilians"), ("Medical_conditions", "starvation")],
        None,
    ),
    ("Awareness of the crisis grew after the broadcast.", [("Awareness", "Awareness")], None),
]

EMPTY_SENTENCES = [
    ("Negotiators met in Cairo to discuss the proposal.", [], None),
    ("The spokesman declined to comment on the report.", [], None),
    ("Markets reopened as traders returned to the floor.", [], None),
    ("The committee will meet again next Tuesday.", [], None),
    ("Observers praised the tone of the talks.", [], None),
    ("Diplomats exchanged draft proposals through intermediaries.", [], None),
    ("The minister outlined a plan for reconstruction.", [], None),
    ("Analysts debated the statement for hours.", [], None),
    ("The delegation arrived quietly before sunrise.", [], None),
    ("Officials promised further updates this evening.", [], None),
]

ALL_SENTENCES = ROLE_SENTENCES + TRIGGER_SENTENCES + EMPTY_SENTENCES
