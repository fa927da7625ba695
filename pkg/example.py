"""Tiny end-to-end run on synthetic digits, for manual inspection."""

from os import environ
from pprint import pprint

from pycgn import CounterfactualLab, TrainingEvent

ROOT = environ.get("PYCGN_EXAMPLE_ROOT", "./runs/example")
VARIANT = environ.get("VARIANT", "double_colored")


def on_step(step, losses):
    print(f"step {step}: {losses}")


with CounterfactualLab(ROOT, VARIANT, synthetic=2000) as lab:
    lab.set_callback(TrainingEvent.STEP_LOGGED, on_step)
    lab.dataset()
    lab.train_cgn(steps=200, log_every=50, checkpoint_every=100)
    lab.sample(n_noise=200)

    pprint({method: lab.classify(method, epochs=1) for method in ("baseline", "cgn", "ensemble")})
