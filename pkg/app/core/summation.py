import numpy as np


class CompensatedSum:
    """
    Neumaier's improvement of Kahan summation, kept as a running total.

    Arrays are accumulated lane-wise: the values are laid out in rows of
    `lanes` entries and each lane carries its own compensated sum; the lanes
    are then folded into the scalar total in index order. The reduction
    order depends only on the input, never on scheduling.

        >>> acc = CompensatedSum()
        >>> acc += 1e16
        >>> acc += 1.0
        >>> acc += -1e16
        >>> acc.value
        1.0
    """

    def __init__(self, lanes: int = 256):
        self.sum = 0.0
        self.carry = 0.0
        self.lanes = lanes

    def add(self, value: float) -> None:
        value = float(value)
        t = self.sum + value
        if abs(self.sum) >= abs(value):
            self.carry += (self.sum - t) + value
        else:
            self.carry += (value - t) + self.sum
        self.sum = t

    def add_array(self, values) -> None:
        values = np.ravel(np.asarray(values, dtype=np.float64))
        if values.size == 0:
            return
        pad = (-values.size) % self.lanes
        if pad:
            values = np.concatenate([values, np.zeros(pad)])
        rows = values.reshape(-1, self.lanes)

        s = np.zeros(self.lanes)
        c = np.zeros(self.lanes)
        for x in rows:
            t = s + x
            c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
            s = t

        for lane_sum, lane_carry in zip(s, c):
            self.add(lane_sum)
            self.add(lane_carry)

    def __iadd__(self, value):
        if np.ndim(value) == 0:
            self.add(value)
        else:
            self.add_array(value)
        return self

    @property
    def value(self) -> float:
        return self.sum + self.carry

    def __repr__(self):
        return f"CompensatedSum({self.value!r})"
