"""Fixed-schema simulation log and its CSV serialization.

One row per control step. Column order is fixed by the foot-frame order
of the robot model and documented in the README; floats are written with
17 significant digits so re-runs compare bit-for-bit.
"""

import numpy as np

_PER_FOOT = (
    ["pos_x", "pos_y", "pos_z", "rpy_r", "rpy_p", "rpy_y"]
    + ["vel_x", "vel_y", "vel_z", "omg_x", "omg_y", "omg_z"]
    + ["f_x", "f_y", "f_z", "tau_x", "tau_y", "tau_z"]
    + ["fm_x", "fm_y", "fm_z", "taum_x", "taum_y", "taum_z"]
    + ["rest_x", "rest_y", "rest_z", "rest_r", "rest_p", "rest_yw"]
    + ["contact", "stance", "k_true", "b_true", "k_hat", "b_hat", "p_trace"]
)

_GLOBAL = (
    ["time"]
    + ["com_x", "com_y", "com_z", "com_ref_x", "com_ref_y", "com_ref_z"]
    + ["mom_lx", "mom_ly", "mom_lz", "mom_ax", "mom_ay", "mom_az"]
    + ["mom_ref_lx", "mom_ref_ly", "mom_ref_lz", "mom_ref_ax", "mom_ref_ay", "mom_ref_az"]
    + ["qp_fallback", "qp_cost", "qp_violation"]
)


def columns_for(foot_names):
    cols = list(_GLOBAL)
    for name in foot_names:
        cols.extend(f"{name}.{c}" for c in _PER_FOOT)
    return cols


class SimLog:
    def __init__(self, foot_names):
        self.foot_names = list(foot_names)
        self.columns = columns_for(self.foot_names)
        self._index = {c: i for i, c in enumerate(self.columns)}
        self.rows = []

    def append(self, values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, schema has {len(self.columns)}")
        self.rows.append([float(v) for v in values])

    def column(self, name):
        i = self._index[name]
        return np.array([row[i] for row in self.rows])

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    @staticmethod
    def read_csv(path):
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header:
                raise ValueError(f"{path}: empty log file")
            columns = header.split(",")
            data = []
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(columns):
                    raise ValueError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(parts)}")
                data.append([float(p) for p in parts])
        table = LogTable(columns, np.array(data) if data else np.zeros((0, len(columns))))
        return table


class LogTable:
    """Read-back view of a log CSV: named column access on a 2D array."""

    def __init__(self, columns, data):
        self.columns = columns
        self.data = data
        self._index = {c: i for i, c in enumerate(columns)}

    def __len__(self):
        return self.data.shape[0]

    def has(self, name):
        return name in self._index

    def column(self, name):
        if name not in self._index:
            raise KeyError(f"log has no column '{name}'")
        return self.data[:, self._index[name]]

    def foot_names(self):
        names = []
        for col in self.columns:
            if col.endswith(".pos_x"):
                names.append(col[: -len(".pos_x")])
        return names
