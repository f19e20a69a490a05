import asyncio
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from privnet.core.detection import detect
from privnet.core.evaluators import diagnostics, hamming_error
from privnet.core.model import generate_synthetic
from privnet.core.privacy import debias, flip_matrix, flip_network, privacy_budget, uniform_profile
from privnet.core.rng import Purpose, seed_sequence


async def test_pipeline():
    """Generate, privatize, debias and detect on one small network."""
    seed = 2024
    print("--- Privatized Community Detection Smoke Test ---")
    network, params = generate_synthetic(120, 3, 6, seed_sequence(seed, Purpose.GENERATE))
    print(f"Network: n={network.n}, L={network.L}, density={network.density():.3f}")

    profile = uniform_profile(network.n, 0.8, 1.0, seed_sequence(seed, Purpose.PREFERENCE))
    budget = privacy_budget(profile)
    print(f"Largest finite edge budget: {budget.eps[budget.eps < float('inf')].max():.3f}")

    flipped = await asyncio.to_thread(
        flip_network, network, flip_matrix(profile), seed_sequence(seed, Purpose.FLIP)
    )
    result = await asyncio.to_thread(detect, debias(flipped, profile), 3, seed=seed_sequence(seed, Purpose.DETECT))
    error = hamming_error(result.labels, params.labels, 3)
    print(f"Detection objective: {result.objective:.4f}, converged: {result.converged}")
    print(f"Hamming error: {error:.4f}")

    report = diagnostics(params, profile)
    print(f"Consistency bound (no constants): {report.bound:.4f}")
    assert error <= 0.2


if __name__ == "__main__":
    asyncio.run(test_pipeline())
