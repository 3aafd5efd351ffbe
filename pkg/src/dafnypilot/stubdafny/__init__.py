"""Corpus-scoped emulation of the Dafny toolchain CLI.

This package backs the `dafny-stub` executable: a mini-Dafny front end, a
checked evaluator standing in for the verifier, a block-coverage test
generator, and a Python backend that mimics the real compiler's output
style. It exists so the whole pipeline can run hermetically where no real
Dafny installation is available; it is an emulation for a bounded language
subset, not a verifier. Point the driver at a real `dafny` binary via
`--dafny-bin` or `DAFNY_BIN` when one exists.
"""
