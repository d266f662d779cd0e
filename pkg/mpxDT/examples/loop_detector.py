from mpxDT.metrics import outcome_metrics
from mpxDT.models import LogLoopModel, monte_carlo_povm
from mpxDT.povm import truncate_to
from mpxDT.utils import plot_povm

M = 5000
model = LogLoopModel.from_total_efficiency(0.44, bins=10)  # Default out-coupling and loop transmission
print(model, f"η_det={model.detector_efficiency:.4f}")

povm_set = model.povm(M)
for m in outcome_metrics(povm_set):
    print(f"n={m.outcome_index:<3} purity={m.purity:.4f}  extracted={m.extracted_info:.4f} bits")

sampled = monte_carlo_povm(model, 50, samples=1_000_000, seed=0, logging=True)
print(f"Largest deviation from Monte-Carlo: {abs(sampled.weights - truncate_to(povm_set, 50).weights).max():.2e}")

plot_povm(povm_set, max_photons=200, title="10-bin loop detector")
