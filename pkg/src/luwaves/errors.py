"""Exception hierarchy shared across the package."""


class LuWavesError(Exception):
    """Base class for every error raised by luwaves."""


class ConfigError(LuWavesError, ValueError):
    """Invalid configuration: unknown key, bad type, or violated constraint."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(LuWavesError, RuntimeError):
    """A simulation could not continue."""

    def __init__(self, message, t=None, step=None):
        self.message = message
        super().__init__(message)
        self.locate(t=t, step=step)

    def locate(self, t=None, step=None):
        """Attach the failing time and step index, refreshing the message."""
        self.t = t
        self.step = step
        where = []
        if step is not None:
            where.append(f"step={step}")
        if t is not None:
            where.append(f"t={t:.6g}")
        self.args = (f"{self.message} ({', '.join(where)})" if where else self.message,)
        return self


class NonPositiveDepthError(NumericalError):
    """Water height dropped to (or below) the dry threshold."""

    def __init__(self, h_min, x_min, t=None, step=None):
        self.h_min = h_min
        self.x_min = x_min
        super().__init__(f"water height {h_min:.3g} at x={x_min:.6g} is not positive", t=t, step=step)


class SolverError(NumericalError):
    """The variable-coefficient elliptic solve did not converge."""

    def __init__(self, residual, iterations, t=None, step=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"SGN operator solve did not converge: residual {residual:.3e} after {iterations} iterations",
            t=t,
            step=step,
        )
