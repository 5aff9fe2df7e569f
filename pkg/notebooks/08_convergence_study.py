# %% [markdown]
# # Convergence study at desk scale
#
# The same run as ``anisouq run``: errors of the QMC and MLQMC mean (H1) and
# second moment (W11) against a finer reference. Levels are reduced here so
# the script finishes in seconds; the acceptance suite uses levels 0..3 with
# a level-4 reference and 1000 samples.

# %%
import os
import tempfile

from anisouq.study import StudyConfig, emit_plotdata, run_study

cfg = StudyConfig(example_id=1, max_level=2, ref_level=3, ref_samples=int(os.environ.get("REF_SAMPLES", 100)))
report = run_study(cfg)
print(report.to_csv())

# %% [markdown]
# Panel data for plotting, with the ``c 2^-l`` guide line in its own column.

# %%
with tempfile.TemporaryDirectory() as tmp:
    for path in emit_plotdata(report, tmp, stem="study"):
        print(path.name)
        print(path.read_text())
