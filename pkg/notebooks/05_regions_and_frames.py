# # Regional indicators and map frames

import tempfile
import warnings

import numpy as np

from rmtgrid.gridsim import generate_trace, ieee118, table2_scenario
from rmtgrid.pipeline import (
    PipelineConfig, default_region_map, export_frames, mask_rows, regional_les, write_frames,
)

rmap = default_region_map()
for label in rmap.labels:
    print(label, len(rmap.buses(label)), "buses")

trace = generate_trace(ieee118(), table2_scenario(), t_max=1100, seed=7).trace
cfg = PipelineConfig(window_T=240, stride=20, functions=("LRT",), seed=7)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # regions under 30 buses warn
    regional = regional_les(trace, rmap, cfg)

for label, s in regional.items():
    print(label, "peak |mu0 - 1| after the step:", np.abs(s.between(801, 1041) - 1).max().round(4))

frames = export_frames(regional, rmap, mesh_resolution=40, times=[780, 900])
print("frame value range", frames.values.min(), frames.values.max())
out = tempfile.mkdtemp()
print([p.name for p in write_frames(frames, out)])

# drop the region around the step and look at what remains
masked = mask_rows(trace, rmap, "A3")
print("masked trace", masked.N, "buses")
