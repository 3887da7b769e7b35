"""Grammar variational autoencoder: syntax-constrained sequence modeling
plus latent-space analysis and Bayesian optimization."""

__version__ = "0.1.0"

from .grammar import (
    Grammar,
    GrammarError,
    MaskTable,
    OneHotMatrix,
    ParseError,
    ParseTree,
    Production,
    Symbol,
    TokenizeError,
    build_masks,
    builtin_grammar,
    decode_onehot,
    encode_onehot,
    load_grammar,
    load_grammar_file,
    parse,
    rules_to_string,
    tokenize,
    tree_to_rules,
)

__all__ = [
    "Grammar",
    "GrammarError",
    "MaskTable",
    "OneHotMatrix",
    "ParseError",
    "ParseTree",
    "Production",
    "Symbol",
    "TokenizeError",
    "build_masks",
    "builtin_grammar",
    "decode_onehot",
    "encode_onehot",
    "load_grammar",
    "load_grammar_file",
    "parse",
    "rules_to_string",
    "tokenize",
    "tree_to_rules",
    "__version__",
]
