import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from manhattan.group import Alphabet, PresentationError, RewritingSystem, RewritingWordProblem, \
    check_confluence, normalize, parse_presentation

FREE_PRESENTATION = u'''
gens a,b,c
inv a:A,b:B,c:C
rel abC
rule aA -
rule Aa -
rule bB -
rule Bb -
rule cC -
rule Cc -
rule ab c
rule BA C
rule Ac b
rule cB a
rule Ca B
rule bC A
'''


@pytest.fixture
def free_presentation():
    return parse_presentation(FREE_PRESENTATION)


@pytest.fixture
def rws(free_presentation):
    return free_presentation.rules


def test_parse_letters(free_presentation):
    assert free_presentation.letters == (u'a', u'b', u'c', u'A', u'B', u'C')
    assert free_presentation.relators == (u'abC',)
    assert len(free_presentation.rules) == 12


def test_parse_compact_format():
    presentation = parse_presentation(u'gens a,b,c; rel a3,b3,c4,abc')
    assert presentation.letters == (u'a', u'b', u'c', u'A', u'B', u'C')
    assert presentation.relators == (u'aaa', u'bbb', u'cccc', u'abc')
    assert presentation.rules is None


def test_parse_inverse_pair_line():
    presentation = parse_presentation(u'gen x\ninv x y\nrel (none)')
    assert presentation.letters == (u'x', u'y')
    assert presentation.alphabet.inverse == {u'x': u'y', u'y': u'x'}
    assert presentation.relators == ()


def test_parse_unknown_directive():
    with pytest.raises(PresentationError) as e:
        parse_presentation(u'gens a\nfoo bar')
    assert u'line 2' in str(e.value)


def test_parse_malformed_relator():
    with pytest.raises(PresentationError):
        parse_presentation(u'gens a\nrel a3!')


def test_parse_relator_with_unknown_letter():
    with pytest.raises(PresentationError):
        parse_presentation(u'gens a\nrel ab')


def test_parse_without_generators():
    with pytest.raises(PresentationError):
        parse_presentation(u'# nothing here')


def test_alphabet_not_involutive():
    with pytest.raises(PresentationError) as e:
        Alphabet([u'a', u'b'], {u'a': u'b', u'b': u'b'})
    assert u'inverse not involutive' in str(e.value)


def test_alphabet_invert_and_order(free_presentation):
    alphabet = free_presentation.alphabet
    assert alphabet.invert(u'abC') == u'cBA'
    assert alphabet.shortlex_key(u'b') < alphabet.shortlex_key(u'A')
    assert alphabet.shortlex_key(u'C') < alphabet.shortlex_key(u'aa')


def test_rule_must_decrease(free_presentation):
    with pytest.raises(PresentationError):
        RewritingSystem(free_presentation.alphabet, [(u'c', u'ab')])


@pytest.mark.parametrize('word, form', [
    (u'', u''),
    (u'aA', u''),
    (u'ab', u'c'),
    (u'abab', u'cc'),
    (u'aBA', u'aC'),
    (u'Aab', u'b'),
    (u'Acb', u'bb'),
    (u'cB', u'a'),
    (u'abC', u''),
])
def test_normalize(rws, word, form):
    assert normalize(word, rws) == form


def test_free_system_is_confluent(rws):
    result = check_confluence(rws)
    assert result.confluent
    assert result.witness is None


def test_confluence_witness():
    presentation = parse_presentation(u'gens a,b,c,d\nrule ab c\nrule bd c')
    result = check_confluence(presentation.rules)
    assert not result.confluent
    assert result.witness == u'abd'
    assert result.descendants == (u'cd', u'ac')


def test_overlapping_rules_are_not_confluent():
    presentation = parse_presentation(u'gens a,b\nrule ab a\nrule ba b')
    result = check_confluence(presentation.rules)
    assert not result.confluent
    assert result.witness == u'aba'
    assert result.descendants == (u'aa', u'a')


def test_descendants_budget(rws):
    with pytest.raises(PresentationError):
        rws.descendants(u'abababab', 2)


def test_word_problem_multiply(rws):
    engine = RewritingWordProblem(rws)
    assert engine.identity() == u''
    assert engine.multiply([u'a', u'A', u'c'], u'b') == [u'c', u'Ab', u'cb']
    assert engine.key(u'BA') == u'C'
    assert engine.inverse(u'ab') == u'C'


words = st.text(alphabet=u'abcABC', max_size=12)


@settings(max_examples=200, deadline=None)
@given(words)
def test_normal_forms_are_irreducible(word):
    rws = parse_presentation(FREE_PRESENTATION).rules
    form = rws.normalize(word)
    assert rws.is_irreducible(form)
    assert rws.normalize(form) == form


@settings(max_examples=200, deadline=None)
@given(words)
def test_word_times_inverse_is_trivial(word):
    presentation = parse_presentation(FREE_PRESENTATION)
    assert presentation.rules.normalize(word + presentation.alphabet.invert(word)) == u''


@settings(max_examples=1000, deadline=None)
@given(words, words)
def test_normal_forms_are_a_congruence(first, second):
    rws = parse_presentation(FREE_PRESENTATION).rules
    assert rws.normalize(rws.normalize(first) + rws.normalize(second)) == rws.normalize(first + second)
