/// A matplotlib script plotting every series in `csv_name` (looked up next to
/// the script) with a guide line of slope `predicted`.
pub fn plot_script(csv_name: &str, predicted: f64, title: &str) -> String {
    format!(
        r#"# Regenerate with the `rates` command; edits are overwritten.
import csv
import os
from collections import defaultdict

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = os.path.join(HERE, "{csv_name}")
PREDICTED = {predicted}

groups = defaultdict(list)
with open(SERIES) as f:
    for row in csv.DictReader(f):
        groups[int(row["n"])].append((float(row["t"]), float(row["error"])))

fig, ax = plt.subplots(figsize=(6, 4.5))
for n in sorted(groups):
    pts = sorted(groups[n])
    ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3, label=f"n = {{n}}")

finest = sorted(groups[max(groups)])
t_hi, e_hi = finest[-1]
t_lo = finest[0][0]
ax.loglog([t_lo, t_hi], [e_hi * (t_lo / t_hi) ** PREDICTED, e_hi], "k--", label=f"slope {{PREDICTED:g}}")

ax.set_xlabel("t = T / L")
ax.set_ylabel("error")
ax.set_title("{title}")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.splitext(SERIES)[0] + ".png", dpi=150)
"#
    )
}
