"""Shared string fixtures.

The two equation corpora come from published interpolation tables: every
entry in VALID_EQUATIONS must parse under the equation grammar, every entry
in INVALID_EQUATIONS must be rejected.
"""

VALID_EQUATIONS = [
    "3*x+exp(3)+exp(1)",
    "2*2+exp(3)+exp(1)",
    "3*1+exp(3)+exp(2)",
    "2*3+(x)+exp(x*3)",
    "2*x+(2)+exp(x*3)",
    "2*x+(1)+exp(x*x)",
    "3*x+exp(x)+exp(1/2)",
    "2*x+exp(x)+exp(1/2)",
    "2*x+(x)+exp(1*x)",
    "2*x+(x)+exp(x*x)",
    "3*x+exp(1)+(x+3)",
    "3*x+exp(3)+(x*3)",
    "3*1+exp(3)+(2*1)",
    "3*x+exp(3)+(2*1)",
    "2*1+exp(3)+(x*2)",
    "2*2+3+exp(x*3)",
    "2*3+exp(x)+(x)",
    "2*3+x+(x+3)",
    "2*3+x+(x/3)",
    "2*2+3+(x*3)",
    "x+1+exp(1)+sin(1*2)",
    "3+1+exp(2)+(1*1)",
    "x+2+exp(x)+(2*3)",
    "x*3+exp(3)+(3*2)",
    "3*3+sin(3)+(3*3)",
    "x/1+exp(x)+sin(x*2)",
    "x/x+sin(x)+exp(x*2)",
    "3*x+sin(x)+(x*3)",
    "3*x+sin(3)+(3*3)",
    "3*x+sin(2)+(x*x)",
    "x*2+exp(x)+(x*1)",
    "x*3+exp(x)+(x*3)",
    "x*1+exp(x)+(2*2)",
    "3*x+exp(2)+(2*2)",
    "3*x+sin(2)+(3*x)",
    "3*x+exp(2)+(3*3)",
]

INVALID_EQUATIONS = [
    "2*1+exp3)+exp(2)",
    "2*x+exp3)+xx(3)",
    "1+3+exp(x)+(i*1)",
    "x*1+exp(x)+ex*3)",
    "x*2+exp(x)+ex*x)",
]

SAMPLE_EQUATIONS = [
    "sin(2)",
    "x/(3+1)",
    "2+x+sin(1/2)",
    "x/2*exp(x)/exp(2*x)",
]

VALID_SMILES = [
    "c1ccccc1",
    "C12(CCCCC1)CCCCC2",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "CN1CCC[C@H]1c1cccnc1",
    "OC(=O)c1ccccc1OC(=O)C",
    "C[C@@H](C(=O)O)N",
    "c1ccc2c(c1)cccc2",
    "CC(=O)Nc1ccc(O)cc1",
    "[13C]",
    "[NH4+]",
    "[O-]",
    "[C@@H3]",
    "[235S@+2:8]",
    "N[C@@H](C)C(=O)O",
    "CCN(CC)CC",
    "CC(C)(C)OC(=O)N",
    "ClCCl",
    "BrC(Br)Br",
    "C/C=C/C",
    "C#N",
    "S1C=CC=C1",
]

INVALID_SMILES = [
    "C(",
    "c1ccccc1)",
    "[]",
    "CC(C))(",
    "C%%C",
    "Cl-",
    "[C",
    "1CC",
    "C((C))(",
    "",
]
