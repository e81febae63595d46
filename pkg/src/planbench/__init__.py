"""Blocksworld planning benchmark toolkit.

Generates planning test instances, translates them to natural language,
evaluates LLM completions against STRIPS semantics, repairs flawed plans,
and hosts a human study service.
"""

__version__ = "0.1.0"
