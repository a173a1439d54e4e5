# # Four-event scenario end to end
#
# Simulate the scripted load scenario, run the moving window and list
# the H1 episodes.  Stride 5 keeps this quick; the tests use stride 1.

from rmtgrid.gridsim import generate_trace, ieee118, table2_scenario
from rmtgrid.laws import theory_set
from rmtgrid.pipeline import PipelineConfig, episodes, h1_flags, sliding_les, stage_stats

scenario = table2_scenario()
for st in scenario.stages:
    print(st.label, st.t_start, st.t_end, st.bus_overrides, "fluctuating" if st.fluctuation else "fixed")

run = generate_trace(ieee118(), scenario, seed=7)
print("collapse at", run.collapse_time)

cfg = PipelineConfig(window_T=240, stride=5, functions=("MSR", "T2", "LRT"), seed=7)
theory = theory_set(cfg.functions, run.trace.N, cfg.window_T, trials=300, seed=0)
series = sliding_les(run.trace, cfg, theory)

stages = [("S1", 240, 400), ("S3", 640, 800), ("S4", 801, 1039), ("S5", 1040, 1200), ("S6", 1201, 1377)]
for phi, s in series.items():
    flags = h1_flags(s, theory[phi])
    print(phi.name, "episodes >= 4 windows:", episodes(s.end_times, flags, min_length=4))
    for label, st in stage_stats(s, stages, theory[phi]).items():
        print(f"   {label} mu0 {st.mu0:.4f}")
