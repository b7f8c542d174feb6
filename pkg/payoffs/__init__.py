import importlib
import os

from utils.errors import UnknownSpecError

PAYOFF_REGISTRY = {}


def build_payoff(cfg):
    payoff = None
    payoff_name = getattr(cfg, "payoff", None)

    if payoff_name in PAYOFF_REGISTRY:
        payoff = PAYOFF_REGISTRY[payoff_name]

    if payoff is None:
        raise UnknownSpecError(
            f"Could not infer payoff spec from {payoff_name!r}. "
            f"Available payoffs: {sorted(PAYOFF_REGISTRY)}"
        )

    return payoff.build_payoff(cfg)


def register_payoff(name):

    def register_payoff_cls(cls):
        if name in PAYOFF_REGISTRY:
            raise ValueError(f"Cannot register duplicate payoff ({name})")

        cls.name = name
        PAYOFF_REGISTRY[name] = cls

        return cls

    return register_payoff_cls


def import_payoffs(payoffs_dir, namespace):
    for file in sorted(os.listdir(payoffs_dir)):
        if (
            not file.startswith("_")
            and not file.startswith(".")
            and file.endswith(".py")
        ):
            payoff_name = file[: file.find(".py")]
            importlib.import_module(namespace + "." + payoff_name)


# automatically import any Python files in the payoffs/ directory
payoffs_dir = os.path.dirname(__file__)
import_payoffs(payoffs_dir, "payoffs")
