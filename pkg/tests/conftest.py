import pytest

CTM_LINE = "LKPR_Tower_134_560MHz_20211223_154543 A 1.25 0.10 the 0.845 papa 0.042"

SAMPLE_XML = """<?xml version="1.0" encoding="utf-8"?>
<data>
        <segment>
                <start>0</start>
                <end>2.93</end>
                <speaker>B</speaker>
                <speaker_label>pilot</speaker_label>
                <text>[unk] [#callsign]Quebec Lima[/#callsign] [#command]confirm cleared for ILS[/#command] [unk]</text>
                <tags>
                        <correct>0</correct>
                        <correct_transcript>1</correct_transcript>
                        <correct_tagging>0</correct_tagging>
                        <non_english>0</non_english>
                </tags>
        </segment>
        <segment>
                <start>2.99</start>
                <end>10.45</end>
                <speaker>A</speaker>
                <speaker_label>ATCO approach</speaker_label>
                <text>[unk] [#callsign]Quebec Lima[/#callsign] [#command]affirm cleared ILS approach[/#command] [#value]runway one four[/#value] [#command]if you go around[/#command] [#value]runway one four[/#value] [#command]report in localizer established[/#command]</text>
                <tags>
                        <correct>0</correct>
                        <correct_transcript>1</correct_transcript>
                        <correct_tagging>0</correct_tagging>
                        <non_english>0</non_english>
                </tags>
        </segment>
</data>
"""

# left column -> right column of the bundled unification table
NORMALIZATION_ROWS = [
    ("alpha", "alfa"), ("charly", "charlie"), ("juliet", "juliett"), ("oskar", "oscar"),
    ("xray", "x-ray"), ("zoulou", "zulu"), ("whisky", "whiskey"), ("tripple", "triple"),
    ("niner", "nine"),
    ("0", "zero"), ("1", "one"), ("2", "two"), ("3", "three"), ("4", "four"),
    ("5", "five"), ("6", "six"), ("7", "seven"), ("8", "eight"), ("9", "nine"),
    ("take off", "takeoff"), ("call sign", "callsign"), ("readback", "read back"),
    ("flightlevel", "flight level"), ("stand by", "standby"), ("start up", "startup"),
    ("goodbye", "good bye"), ("clear for", "cleared for"), ("lineup", "line up"),
    ("clear for", "cleared for"), ("turnright", "turn right"), ("oclock", "o'clock"),
    ("o clock", "o'clock"), ("push back", "pushback"), ("descent direct", "descend direct"),
    ("goodbye", "good bye"), ("goodday", "good day"), ("turbulance", "turbulence"),
    ("til", "till"),
    ("qatar", "qatari"), ("turkey", "turkish"), ("air france", "airfrans"),
    ("norshuttle", "nor shuttle"), ("airvan", "air van"), ("rynair", "ryanair"),
    ("airbaltic", "air_baltic"), ("air berlin", "air_berlin"), ("air canada", "air_canada"),
    ("air china", "air_china"), ("air europe", "air_europe"), ("jet stream", "jet_stream"),
    ("jetstream", "jet_stream"), ("k l m", "k_l_m"), ("klm", "k_l_m"),
    ("korean air", "korean_air"), ("koreanair", "korean_air"), ("wizzair", "wizz_air"),
    ("top_jet", "topjet"),
]


@pytest.fixture
def sample_xml():
    return SAMPLE_XML


# acceptance criteria outcomes: number -> [passed, details]
_CRITERIA = {}


@pytest.fixture
def detail(request):
    """Attach a short measurement string to the criterion line."""
    def add(text):
        request.node.user_properties.append(("detail", text))
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args or not (rep.when == "call" or rep.failed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], [True, []])
    entry[0] = entry[0] and rep.passed
    entry[1] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, details = _CRITERIA[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  " + "; ".join(details)
        terminalreporter.write_line(line)
