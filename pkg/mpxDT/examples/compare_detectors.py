from mpxDT.metrics import compare_detectors, h_total
from mpxDT.models import detector_presets
from mpxDT.utils import plot_comparison, plot_povm

M = 5000  # Comparison dimension

presets = detector_presets(noiseless=True)  # Efficiencies only, as in the modeled purity curves
povm_sets = {name: model.povm(M) for name, model in presets.items()}

print(f"H_total({M}) = {h_total(M):.4f} bits")
table = compare_detectors(povm_sets, print_stats=True)
table.to_csv("./comparison.csv", index=False)

plot_povm(povm_sets["8-bin TMD"], max_photons=60, title="8-bin TMD")
plot_comparison(povm_sets)
