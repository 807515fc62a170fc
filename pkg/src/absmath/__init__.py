"""Abstraction pipeline toolkit for math word problems.

The pipeline: recognize numeric conditions in a question, retrieve the
symbolic derivations from an abstract answer, and solve the resulting
equation system exactly. Around it: abstraction rewards and group-relative
advantage math for RL training, perturbation generation and a robustness
evaluation harness, and a replayable client for LLM-backed rewriting.
"""

from .core import (
    Abstraction,
    ConditionSet,
    Derivation,
    Instance,
    Number,
    NumberForm,
    Symbol,
    SymbolKind,
    number_equals,
    parse_expr,
    reinstantiate,
    render_expr,
)
from .errors import AbsMathError
from .grpo import (
    GrpoConfig,
    LikelihoodTriple,
    group_advantages,
    grpo_objective,
    kl_estimate,
)
from .harness import (
    EvalReport,
    NoisyReasoner,
    OracleReasoner,
    Reasoner,
    delta_drop,
    evaluate,
    score_answer,
)
from .perturb import (
    Perturbation,
    ProblemTemplate,
    baseline_instance,
    generate,
    generate_round,
    load_template,
    load_templates,
)
from .recognize import ImplicitNumberLexicon, RecognitionResult, recognize
from .retrieval import Delimiters, render_answer, retrieve, tokenize
from .rewards import RewardBreakdown, RewardConfig, answer_reward, grade, symbolic_reward
from .solver import SolveResult, VerifyResult, brute_force_check, solve, verify_instance
from .client import (
    Client,
    EndpointConfig,
    FixtureStore,
    PromptTemplate,
    Rejected,
    load_prompt,
    rewrite_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "AbsMathError",
    "Abstraction",
    "Client",
    "ConditionSet",
    "Delimiters",
    "Derivation",
    "EndpointConfig",
    "EvalReport",
    "FixtureStore",
    "GrpoConfig",
    "ImplicitNumberLexicon",
    "Instance",
    "LikelihoodTriple",
    "NoisyReasoner",
    "Number",
    "NumberForm",
    "OracleReasoner",
    "Perturbation",
    "ProblemTemplate",
    "PromptTemplate",
    "Reasoner",
    "RecognitionResult",
    "Rejected",
    "RewardBreakdown",
    "RewardConfig",
    "SolveResult",
    "Symbol",
    "SymbolKind",
    "VerifyResult",
    "answer_reward",
    "baseline_instance",
    "brute_force_check",
    "delta_drop",
    "evaluate",
    "generate",
    "generate_round",
    "grade",
    "group_advantages",
    "grpo_objective",
    "kl_estimate",
    "load_prompt",
    "load_template",
    "load_templates",
    "number_equals",
    "parse_expr",
    "recognize",
    "reinstantiate",
    "render_answer",
    "render_expr",
    "retrieve",
    "rewrite_pipeline",
    "score_answer",
    "solve",
    "symbolic_reward",
    "tokenize",
    "verify_instance",
    "__version__",
]
