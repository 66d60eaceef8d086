"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class StardilError(Exception):
    """Base class for every error raised by the package."""


class StructureError(StardilError, ValueError):
    """Malformed table data: out-of-range indices, wrong array shapes."""


class NotTransitive(StardilError):
    def __init__(self, left: tuple[int, int], right: tuple[int, int]):
        self.witness = (left, right)
        super().__init__(
            f"relation not transitive: {left} and {right} present but "
            f"{(left[0], right[1])} missing"
        )


class ActionError(StardilError):
    def __init__(self, x: int, g: int, h: int, detail: str = ""):
        self.witness = (x, g, h)
        super().__init__(f"right action axiom fails at (x={x}, g={g}, h={h}) {detail}".rstrip())


class ShapeError(StardilError, ValueError):
    pass


class NotPSD(StardilError):
    def __init__(self, lambda_min: float, fiber: int | None = None):
        self.lambda_min = float(lambda_min)
        self.fiber = fiber
        where = "" if fiber is None else f" on fiber {fiber}"
        super().__init__(f"matrix is not positive semidefinite{where}: lambda_min={lambda_min:.6g}")


class MissingProduct(StardilError):
    def __init__(self, fiber: int, left: int, right: int):
        self.fiber = fiber
        self.witness = (left, right)
        super().__init__(
            f"product of elements {left} and {right} is undefined; "
            f"fiber {fiber} is not checkable at this truncation"
        )


class IllConditioned(StardilError):
    def __init__(self, element: int, residual: float, bound: float):
        self.element = element
        self.residual = residual
        super().__init__(
            f"defining equation for element {element} has residual {residual:.3e} > {bound:.3e}"
        )


class NotFlat(StardilError):
    """The truncated data does not determine the representation of an element."""

    def __init__(self, element: int, detail: str):
        self.element = element
        super().__init__(f"element {element}: {detail}")


class DimensionMismatch(StardilError):
    pass


class NotInverseSemigroupoid(StardilError):
    pass


class NotUnital(StardilError):
    pass


class ValidationFailed(StardilError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"validation failed: {report}")


class NotStrictContraction(StardilError):
    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(f"operator norm {norm:.6g} is not < 1")


class FiberMismatch(StardilError, ValueError):
    pass


class DocumentError(StardilError):
    """Parse error annotated with a JSON path or a line/column position."""

    def __init__(self, message: str, path: str = "", line: int | None = None, col: int | None = None):
        self.message = message
        self.path = path
        self.line = line
        self.col = col
        where = []
        if line is not None:
            where.append(f"line {line}, column {col}")
        if path:
            where.append(f"at {path}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
