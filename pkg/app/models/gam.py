from dataclasses import dataclass, field, replace

from app.models.step_function import ExtensionMode, StepFunction


@dataclass(frozen=True)
class GamModel:
    """f(x) = intercept + sum_j f_j(x_j), one StepFunction per feature."""
    weight_functions: tuple[StepFunction, ...]
    intercept: float = 0.0
    budget_used: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "weight_functions", tuple(self.weight_functions))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(
            self,
            "budget_used",
            sum(f.total_variation(ExtensionMode.COMPACT) for f in self.weight_functions),
        )

    @classmethod
    def zero(cls, p: int, intercept: float = 0.0) -> "GamModel":
        return cls(weight_functions=tuple(StepFunction.zero() for _ in range(p)), intercept=intercept)

    @property
    def p(self) -> int:
        return len(self.weight_functions)

    def with_function(self, j: int, function: StepFunction) -> "GamModel":
        functions = list(self.weight_functions)
        functions[j] = function
        return GamModel(weight_functions=tuple(functions), intercept=self.intercept)

    def with_mode(self, extension_mode: ExtensionMode) -> "GamModel":
        return replace(
            self,
            weight_functions=tuple(f.with_mode(extension_mode) for f in self.weight_functions),
        )
