"""Model checking QATL and QATL* over one-counter game models."""
