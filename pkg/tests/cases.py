"""Authored programs shared by the unit and acceptance tests."""

from codeplan.metrics import GoalCondition

# the microwave-salmon program with comments, asserts and six action lines
FIG3 = """\
def microwave_salmon():
    # grab salmon
    find('salmon')
    assert('close' to 'salmon') else: find('salmon')
    grab('salmon')
    # put salmon in microwave
    assert('salmon' in 'hands') else: find('salmon'), grab('salmon')
    find('microwave')
    assert('close' to 'microwave') else: find('microwave')
    open('microwave')
    putin('salmon', 'microwave')
    close('microwave')
"""

# (name, full plan, reduced plan whose missing step an assert restores)
RECOVERY_PAIRS = [
    ("fig3 without find(salmon)", FIG3, FIG3.replace("    find('salmon')\n", "", 1)),
    ("throw away apple without open", """\
def throw_away_apple():
    find('apple')
    grab('apple')
    find('garbagecan')
    open('garbagecan')
    putin('apple', 'garbagecan')
    close('garbagecan')
""", """\
def throw_away_apple():
    find('apple')
    grab('apple')
    find('garbagecan')
    assert('garbagecan' is 'open') else: open('garbagecan')
    putin('apple', 'garbagecan')
    close('garbagecan')
"""),
    ("salmon to fridge without find(fridge)", """\
def put_salmon_in_the_fridge():
    find('salmon')
    grab('salmon')
    find('fridge')
    open('fridge')
    putin('salmon', 'fridge')
    close('fridge')
""", """\
def put_salmon_in_the_fridge():
    find('salmon')
    grab('salmon')
    assert('close' to 'fridge') else: find('fridge')
    open('fridge')
    putin('salmon', 'fridge')
    close('fridge')
"""),
    ("watch tv without find(sofa)", """\
def watch_tv():
    find('tv')
    switchon('tv')
    find('sofa')
    sit('sofa')
""", """\
def watch_tv():
    find('tv')
    switchon('tv')
    assert('close' to 'sofa') else: find('sofa')
    sit('sofa')
"""),
    ("wash plate without switchon(faucet)", """\
def wash_the_plate():
    find('plate')
    grab('plate')
    find('sink')
    putin('plate', 'sink')
    find('faucet')
    switchon('faucet')
    switchoff('faucet')
""", """\
def wash_the_plate():
    find('plate')
    grab('plate')
    find('sink')
    putin('plate', 'sink')
    find('faucet')
    assert('faucet' is 'switched_on') else: switchon('faucet')
    switchoff('faucet')
"""),
]

# heated salmon, microwave left open, microwave switched off
MICROWAVE_GOAL = frozenset({
    GoalCondition("heated", ("salmon.1",), True),
    GoalCondition("closed", ("microwave.1",), False),
    GoalCondition("switched_on", ("microwave.1",), False),
})

# heats the salmon and switches off, but leaves the door closed: 2 of 3
TWO_OF_THREE = """\
def microwave_salmon():
    find('salmon')
    grab('salmon')
    find('microwave')
    open('microwave')
    putin('salmon', 'microwave')
    close('microwave')
    switchon('microwave')
    switchoff('microwave')
"""

# five actions, the putin fails because the microwave is still closed
ONE_OF_FIVE_FAILS = """\
def microwave_salmon():
    find('salmon')
    grab('salmon')
    find('microwave')
    putin('salmon', 'microwave')
    open('microwave')
"""
