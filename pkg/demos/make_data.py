"""Write the small synthetic datasets used by the demos and the CLI walkthrough.

demos/data/families/  15 OFF meshes (pear, cigar, disk; 5 each) + labels.json
demos/data/bends/     5 OBJ capsules bent by 0..90 degrees, one shared topology
"""
import json
import os
import sys

from matpath import meshio
from matpath.synthetic import bend_sequence, shape_families

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

fam_dir = os.path.join(out, "families")
os.makedirs(fam_dir, exist_ok=True)
shapes, labels = shape_families(seed=0, per_family=5)
for s in shapes:
    meshio.write_off(os.path.join(fam_dir, s.id + ".off"), s.vertices, s.faces)
with open(os.path.join(out, "families_labels.json"), "w") as fh:
    json.dump(labels, fh, indent=1, sort_keys=True)
    fh.write("\n")

bend_dir = os.path.join(out, "bends")
os.makedirs(bend_dir, exist_ok=True)
for s in bend_sequence([0, 20, 45, 70, 90]):
    meshio.write_obj(os.path.join(bend_dir, s.id + ".obj"), s.vertices, s.faces)

print("wrote %d family meshes and 5 bend meshes to %s" % (len(shapes), out))
