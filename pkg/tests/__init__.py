"""Test package: model, loss, memory, trainer and harness tests plus end-to-end scenarios."""
