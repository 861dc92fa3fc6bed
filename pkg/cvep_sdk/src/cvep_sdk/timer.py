import collections
import time


class StageTimer:
    """
    Class that handles wall-clock bookkeeping of pipeline stages. Each stage is timed between :func:`start` and
    :func:`stop`; repeated stages accumulate
    """

    def __init__(self, maxTicks=100):
        """
        Args:
            maxTicks (int, Optional): maximum amount of durations kept per stage
        """
        if maxTicks < 1:
            raise ValueError(f"Provided maxTicks value must be 1 or higher (supplied: {maxTicks})")
        self._maxTicks = maxTicks
        self._started = {}
        self._durations = collections.OrderedDict()
        self._start = time.monotonic()

    def start(self, name):
        """
        Marks the beginning of the specified stage

        Args:
            name (str): Specifies stage name
        """
        self._started[name] = time.monotonic()

    def stop(self, name):
        """
        Marks the end of the specified stage

        Returns:
            float: duration of the stage in seconds
        """
        if name not in self._started:
            raise ValueError("Stage '{}' was not started".format(name))
        duration = time.monotonic() - self._started.pop(name)
        if name not in self._durations:
            self._durations[name] = collections.deque(maxlen=self._maxTicks)
        self._durations[name].append(duration)
        return duration

    def measure(self, name):
        """
        Context manager timing the enclosed block

        .. code-block:: python

            with timer.measure("simulate"):
                dataset = simulateDataset(plan, fm, pair)
        """
        timer = self

        class _Stage:
            def __enter__(self):
                timer.start(name)
                return timer

            def __exit__(self, *exc):
                timer.stop(name)
                return False

        return _Stage()

    def duration(self, name):
        """
        Returns:
            float: Summed duration of the stage or :code:`0.0` if it never ran
        """
        return float(sum(self._durations.get(name, ())))

    def total(self):
        return time.monotonic() - self._start

    def toDict(self):
        return {name: round(self.duration(name), 6) for name in self._durations}

    def printStatus(self):
        """
        Prints durations for all stages recorded with :func:`stop`
        """
        print("=== STAGE TIMINGS ===")
        for name in self._durations:
            print(f"[{name}]: {self.duration(name):.2f} s")
        print(f"[total]: {self.total():.2f} s")
