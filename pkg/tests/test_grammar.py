import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grammarvae.grammar import (
    DerivationError,
    GrammarError,
    ParseError,
    TokenizeError,
    build_masks,
    decode_onehot,
    encode_onehot,
    load_grammar,
    parse,
    random_derivation,
    rules_to_string,
    tokenize,
    tree_to_rules,
)

from fixtures import (
    INVALID_EQUATIONS,
    INVALID_SMILES,
    SAMPLE_EQUATIONS,
    VALID_EQUATIONS,
    VALID_SMILES,
)


class TestLoadGrammar:
    def test_equation_grammar_counts(self, eq_grammar):
        assert eq_grammar.K == 12  # 11 listed productions + padding
        assert eq_grammar.start.text == "S"
        assert eq_grammar.padding_rule_index == 11
        assert eq_grammar.rules[11].rhs == ()

    def test_minimal_grammar(self):
        g = load_grammar("S -> 'a'")
        assert g.K == 2
        assert len(g.terminals) == 1
        assert {s.text for s in g.nonterminals} == {"S", "<pad>"}

    def test_smiles_grammar_start(self, smiles_grammar):
        assert smiles_grammar.start.text == "smiles"
        first = smiles_grammar.rules[0]
        assert first.lhs.text == "smiles"
        assert [s.text for s in first.rhs] == ["chain"]

    def test_alternatives_expand_in_order(self):
        g = load_grammar("S -> 'a' | 'b' S | 'c'")
        assert [len(r.rhs) for r in g.rules[:3]] == [1, 2, 1]
        assert g.rules[1].rhs[0].text == "b"

    def test_same_lhs_on_later_line_appends(self):
        g = load_grammar("S -> 'a' T\nT -> 'b'\nS -> 'c'")
        assert g.rules[2].lhs.text == "S"
        assert g.rules_by_lhs["S"] == (0, 2)

    def test_undefined_nonterminal_rejected(self):
        with pytest.raises(GrammarError, match="undefined"):
            load_grammar("S -> T 'a'")

    def test_syntax_error_reports_line_number(self):
        with pytest.raises(GrammarError, match="line 3"):
            load_grammar("# comment\nS -> 'a'\n-> 'b'")

    def test_unterminated_quote(self):
        with pytest.raises(GrammarError, match="line 1"):
            load_grammar("S -> 'a")

    def test_empty_alternative_rejected(self):
        with pytest.raises(GrammarError, match="empty alternative"):
            load_grammar("S -> 'a' |")

    def test_escaped_backslash_terminal(self):
        g = load_grammar(r"S -> '\\' | '\''")
        assert {s.text for s in g.terminals} == {"\\", "'"}

    def test_no_rules(self):
        with pytest.raises(GrammarError):
            load_grammar("# only a comment\n")

    def test_smiles_backslash_bond_is_single_char(self, smiles_grammar):
        assert any(s.text == "\\" for s in smiles_grammar.terminals)


class TestTokenize:
    def test_multichar_lexemes(self, eq_grammar):
        assert [t.text for t in tokenize("sin(x)", eq_grammar)] == ["sin(", "x", ")"]

    def test_longest_match_wins(self, smiles_grammar):
        assert [t.text for t in tokenize("Cl", smiles_grammar)] == ["Cl"]
        assert [t.text for t in tokenize("CCl", smiles_grammar)] == ["C", "Cl"]
        assert [t.text for t in tokenize("@@", smiles_grammar)] == ["@@"]

    def test_empty_string(self, eq_grammar):
        assert tokenize("", eq_grammar) == []

    def test_error_carries_byte_offset(self, eq_grammar):
        with pytest.raises(TokenizeError) as exc:
            tokenize("x+y", eq_grammar)
        assert exc.value.offset == 2

    def test_concatenation_reproduces_input(self, eq_grammar):
        for s in SAMPLE_EQUATIONS:
            assert "".join(t.text for t in tokenize(s, eq_grammar)) == s


class TestParse:
    @pytest.mark.parametrize("s", VALID_EQUATIONS + SAMPLE_EQUATIONS)
    def test_valid_equations_parse(self, s, eq_grammar):
        tree = parse(s, eq_grammar)
        assert tree.symbol.text == "S"
        assert tree.leaves() == s

    @pytest.mark.parametrize("s", INVALID_EQUATIONS)
    def test_invalid_equations_rejected(self, s, eq_grammar):
        with pytest.raises(ParseError):
            parse(s, eq_grammar)

    @pytest.mark.parametrize("s", VALID_SMILES)
    def test_valid_smiles_parse(self, s, smiles_grammar):
        tree = parse(s, smiles_grammar)
        assert tree.symbol.text == "smiles"
        assert tree.leaves() == s

    @pytest.mark.parametrize("s", INVALID_SMILES)
    def test_invalid_smiles_rejected(self, s, smiles_grammar):
        with pytest.raises(ParseError):
            parse(s, smiles_grammar)

    def test_benzene_root_production(self, smiles_grammar):
        tree = parse("c1ccccc1", smiles_grammar)
        assert tree.production == 0  # smiles -> chain

    def test_deterministic_tie_breaking(self):
        # both rules derive "ab"; rule 0 must win
        g = load_grammar("S -> 'a' 'b' | A 'b'\nA -> 'a'")
        assert parse("ab", g).production == 0

    def test_left_recursion_associates_left(self, eq_grammar):
        tree = parse("1+2+3", eq_grammar)
        # root is S -> S '+' T whose left child is itself S -> S '+' T
        assert tree.production == 0
        assert tree.children[0].production == 0

    def test_ambiguous_chain_is_deterministic(self, smiles_grammar):
        r1 = tree_to_rules(parse("CCC", smiles_grammar))
        r2 = tree_to_rules(parse("CCC", smiles_grammar))
        assert r1 == r2


class TestRuleSequences:
    def test_preorder_single_terminal(self, eq_grammar):
        assert tree_to_rules(parse("x", eq_grammar)) == [3, 7]

    def test_preorder_visits_left_subtree_first(self, eq_grammar):
        assert tree_to_rules(parse("2+x", eq_grammar)) == [0, 3, 9, 7]

    def test_single_rule_grammar(self):
        g = load_grammar("S -> 'a'")
        assert tree_to_rules(parse("a", g)) == [0]

    def test_length_equals_internal_nodes(self, eq_grammar):
        tree = parse("sin(x)+1", eq_grammar)

        def internal(t):
            return (0 if t.symbol.is_terminal() else 1) + sum(
                internal(c) for c in t.children
            )

        assert len(tree_to_rules(tree)) == internal(tree)

    def test_rules_to_string_replays(self, eq_grammar):
        assert rules_to_string([3, 8], eq_grammar) == "1"

    def test_incomplete_derivation_raises(self, eq_grammar):
        with pytest.raises(DerivationError, match="incomplete"):
            rules_to_string([0], eq_grammar)

    def test_surplus_rule_raises(self, eq_grammar):
        with pytest.raises(DerivationError, match="surplus"):
            rules_to_string([3, 7, 7], eq_grammar)

    def test_lhs_mismatch_raises(self, eq_grammar):
        with pytest.raises(DerivationError, match="lhs"):
            rules_to_string([7], eq_grammar)

    def test_padding_rule_rejected_mid_sequence(self, eq_grammar):
        with pytest.raises(DerivationError, match="padding"):
            rules_to_string([3, 11], eq_grammar)

    @pytest.mark.parametrize("s", VALID_EQUATIONS)
    def test_round_trip_table_corpus(self, s, eq_grammar):
        assert rules_to_string(tree_to_rules(parse(s, eq_grammar)), eq_grammar) == s

    def test_round_trip_generated(self, eq_grammar, rng):
        for _ in range(500):
            r = random_derivation(eq_grammar, rng, 15)
            if r is None:
                continue
            s = rules_to_string(r, eq_grammar)
            assert rules_to_string(tree_to_rules(parse(s, eq_grammar)), eq_grammar) == s

    def test_round_trip_generated_smiles(self, smiles_grammar, rng):
        done = 0
        while done < 100:
            r = random_derivation(smiles_grammar, rng, 277)
            if r is None:
                continue
            s = rules_to_string(r, smiles_grammar)
            rt = rules_to_string(
                tree_to_rules(parse(s, smiles_grammar)), smiles_grammar
            )
            assert rt == s
            done += 1

    def test_generated_rules_replay_cleanly(self, eq_grammar, rng):
        # the replayed parse of a generated string need not reuse the same
        # tree, but it must replay without error and end with an empty stack
        for _ in range(200):
            r = random_derivation(eq_grammar, rng, 15)
            if r is not None:
                rules_to_string(r, eq_grammar)


class TestMasks:
    def test_equation_masks(self, eq_grammar):
        mt = build_masks(eq_grammar)
        assert mt.mask("S").sum() == 4
        assert set(np.flatnonzero(mt.mask("S"))) == {0, 1, 2, 3}
        assert mt.mask("T").sum() == 7
        assert set(np.flatnonzero(mt.mask("T"))) == {4, 5, 6, 7, 8, 9, 10}

    def test_padding_pseudo_nonterminal(self, eq_grammar):
        mt = build_masks(eq_grammar)
        assert np.flatnonzero(mt.mask("<pad>")).tolist() == [11]

    def test_smiles_start_mask_single_rule(self, smiles_grammar):
        mt = build_masks(smiles_grammar)
        assert mt.mask("smiles").sum() == 1
        assert np.flatnonzero(mt.mask("smiles")).tolist() == [0]

    @pytest.mark.parametrize("name", ["equation", "smiles"])
    def test_mask_partition(self, name, eq_grammar, smiles_grammar):
        g = eq_grammar if name == "equation" else smiles_grammar
        mt = build_masks(g)
        # every rule index is unmasked under exactly one nonterminal
        assert (mt.matrix.sum(axis=0) == 1).all()
        assert (mt.matrix.sum(axis=1) >= 1).all()


class TestOneHot:
    def test_encode_shape_and_padding(self, eq_grammar):
        oh = encode_onehot([3, 7], eq_grammar, t_max=4)
        assert oh.matrix.shape == (4, 12)
        assert oh.true_length == 2
        assert np.flatnonzero(oh.matrix[0]).tolist() == [3]
        assert np.flatnonzero(oh.matrix[1]).tolist() == [7]
        assert np.flatnonzero(oh.matrix[2]).tolist() == [11]
        assert np.flatnonzero(oh.matrix[3]).tolist() == [11]

    def test_exact_length_has_no_padding(self, eq_grammar):
        oh = encode_onehot([3, 7], eq_grammar, t_max=2)
        assert (oh.matrix[:, 11] == 0).all()

    def test_too_long_raises(self, eq_grammar):
        with pytest.raises(ValueError, match="t_max"):
            encode_onehot([3, 7, 7], eq_grammar, t_max=2)

    def test_decode_inverse(self, eq_grammar, rng):
        for _ in range(1000):
            r = random_derivation(eq_grammar, rng, 15)
            if r is None:
                continue
            assert decode_onehot(encode_onehot(r, eq_grammar, 15)) == r

    def test_all_padding_decodes_empty(self, eq_grammar):
        assert decode_onehot(encode_onehot([], eq_grammar, 5)) == []

    def test_non_onehot_row_rejected(self, eq_grammar):
        m = encode_onehot([3, 7], eq_grammar, 4).matrix.copy()
        m[0, 5] = 1.0
        with pytest.raises(ValueError, match="one-hot"):
            decode_onehot(m)


class TestRandomDerivation:
    def test_two_rule_derivations(self, eq_grammar, rng):
        # with max_rules=2 the only possible outputs are S->T plus a terminal
        seen = set()
        for _ in range(500):
            r = random_derivation(eq_grammar, rng, 2)
            if r is not None:
                seen.add(rules_to_string(r, eq_grammar))
        assert seen == {"x", "1", "2", "3"}

    def test_respects_max_rules(self, eq_grammar, rng):
        for _ in range(500):
            r = random_derivation(eq_grammar, rng, 15)
            if r is not None:
                assert len(r) <= 15

    def test_seed_determinism(self, eq_grammar):
        a = [random_derivation(eq_grammar, np.random.default_rng(3), 15) for _ in range(5)]
        b = [random_derivation(eq_grammar, np.random.default_rng(3), 15) for _ in range(5)]
        assert a == b


@given(st.lists(st.sampled_from(["+", "*", "/"]), max_size=4),
       st.lists(st.sampled_from(["x", "1", "2", "3"]), min_size=1, max_size=5))
@settings(max_examples=50, deadline=None)
def test_flat_expressions_always_round_trip(ops, atoms):
    from grammarvae.grammar import builtin_grammar

    g = builtin_grammar("equation")
    parts = [atoms[0]]
    for i, op in enumerate(ops):
        parts.append(op)
        parts.append(atoms[(i + 1) % len(atoms)])
    s = "".join(parts)
    assert rules_to_string(tree_to_rules(parse(s, g)), g) == s
