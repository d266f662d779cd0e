import numpy as np
from mpxDT.merit import figures_of_merit, uncertainty_bars
from mpxDT.models import EqualSplitModel
from mpxDT.povm import extend_to, truncate_to
from mpxDT.probes import quadratic_probe_set, simulate_outcomes
from mpxDT.tomography import ReconstructionConfig, reconstruct
from mpxDT.utils import plot_povm

M = 5000
mu_max = 100  # Largest probe mean photon number
model = EqualSplitModel(bins=4, efficiency=0.72, dark_prob=4e-7)  # 4-bin TMD

probes = quadratic_probe_set(mu_max, count=30)
config = ReconstructionConfig()
truth = model.povm(M)

stats = simulate_outcomes(truth, probes, shots=1_000_000, seed=42)
result = reconstruct(stats, probes, K=model.bins + 1, config=config)
print(result.report())

recon = result.povm
error = np.abs(recon.weights - truncate_to(truth, recon.dimension).weights).max()
print(f"Max abs POVM error: {error:.2e}")

print(figures_of_merit(extend_to(recon, M), model.bins))
merit = uncertainty_bars(stats, probes, model.bins + 1, config, amp_uncertainty=0.05, trials=10, seed=42, verbose=True)
print(f"efficiency {merit.efficiency}, dark {merit.dark_prob}, cross-talk {merit.crosstalk_prob}")

plot_povm(recon, max_photons=60, title="Reconstructed 4-bin TMD")
