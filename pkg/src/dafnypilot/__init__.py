"""Natural-language coding tasks to high-assurance target code.

The pipeline drafts a formal specification from the user's prompt, agrees
on it in plain language, synthesizes a machine-checked implementation, and
delivers compiled target-language code with tests. The intermediate
representation is never shown to the user.
"""

__version__ = "0.1.0"
